#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stem/experiments.hpp"
#include "stem/field_model.hpp"
#include "stem/inference.hpp"
#include "stem/io.hpp"
#include "stem/maxima.hpp"
#include "stem/peak_distributions.hpp"

namespace stem::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Raised for invalid option combinations detected after parsing.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

double parse_threshold(const std::string& text, const std::string& flag) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || std::isnan(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw UsageError(flag + ": not a number: " + text);
    }
}

PValueMode parse_mode(const std::string& text) {
    if (text == "exact") return PValueMode::ExactIsotropic;
    if (text == "overshoot") return PValueMode::Overshoot;
    throw UsageError("--mode must be exact or overshoot");
}

std::vector<double> parse_grid(const std::string& text) {
    // start:stop:step, inclusive of stop up to rounding
    std::vector<double> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(parse_threshold(item, "--v-grid"));
    if (parts.size() != 3 || !(parts[2] > 0.0) || !(parts[1] >= parts[0])) {
        throw UsageError("--v-grid must be start:stop:step with step > 0");
    }
    std::vector<double> grid;
    const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
    return grid;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct SimulateOptions {
    std::string config;
    std::string output;
    std::optional<std::uint64_t> seed;
};

int simulate(const SimulateOptions& o, std::ostream& out) {
    ExperimentConfig cfg = io::load_experiment_config(o.config);
    ScenarioSpec& s = cfg.scenario;
    if (o.seed) s.noise.seed = *o.seed;
    const GridGeometry grid = s.geometry();

    const GridField signal = render_signal(s.peaks, grid);
    const GridField noise = generate_noise(s.noise, grid);
    const GridField observed = signal + noise;
    const GridField smoothed = smooth(observed, s.kernel);

    const fs::path dir(o.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io::IoError("cannot create " + dir.string() + ": " + ec.message());
    io::write_field_file(dir / "signal.fld", signal);
    io::write_field_file(dir / "noise.fld", noise);
    io::write_field_file(dir / "observed.fld", observed);
    io::write_field_file(dir / "smoothed.fld", smoothed);

    json summary;
    summary["height"] = grid.height;
    summary["width"] = grid.width;
    summary["spacing"] = grid.spacing;
    summary["peaks"] = s.peaks.size();
    summary["seed"] = s.noise.seed;
    summary["files"] = {"signal.fld", "noise.fld", "observed.fld", "smoothed.fld"};
    out << summary.dump() << '\n';
    return kExitOk;
}

struct DetectOptions {
    std::string input;
    bool csv = false;
    double spacing = 1.0;
    double gamma = 3.0;
    std::string fit_template;
    double kernel_truncation = 3.0;
    std::string v = "-inf";
    double alpha = 0.05;
    std::string mode = "exact";
    std::string moments = "closed-form";
    double nu = 0.0;
    double sigma = 1.0;
    bool no_smooth = false;
    std::string output;
    std::string scenario;
};

int detect(const DetectOptions& o, std::ostream& out) {
    const PValueMode mode = parse_mode(o.mode);
    const double v = parse_threshold(o.v, "--v");
    if (mode == PValueMode::Overshoot && !(v > 0.0)) throw UsageError("--mode overshoot needs --v > 0");
    if (!(o.alpha > 0.0 && o.alpha < 1.0)) throw UsageError("--alpha must lie in (0, 1)");
    if (o.moments != "closed-form" && o.moments != "estimate") {
        throw UsageError("--moments must be closed-form or estimate");
    }

    GridField field = o.csv ? io::read_csv_field(o.input, o.spacing) : io::read_field_file(o.input);
    field.validate();

    double gamma = o.gamma;
    if (!o.fit_template.empty()) gamma = fit_kernel_bandwidth(io::read_field_file(o.fit_template));
    const KernelSpec kernel{gamma, o.kernel_truncation};

    GridField smoothed = o.no_smooth ? field : smooth(field, kernel);

    FieldMoments moments;
    if (o.moments == "estimate") {
        moments = estimate_moments(smoothed);
        moments.kappa = std::min(moments.kappa, kMaxKappa);
    } else {
        moments = closed_form_moments(gamma, o.nu, o.sigma);
    }
    const double sigma_gamma = moments.sigma_gamma;
    for (double& x : smoothed.values) x /= sigma_gamma;

    IsotropicHeightLaw law = IsotropicHeightLaw::from_moments(moments);
    law.sigma_gamma = 1.0;
    NullLaws laws;
    laws.isotropic = law;
    laws.overshoot = OvershootLaw{1.0, 2, v};

    auto peaks = find_local_maxima(smoothed, v);
    const BhOutcome bh = apply_bh(peaks, o.alpha, mode, v, laws);

    if (!o.scenario.empty()) {
        const ExperimentConfig sc = io::load_experiment_config(o.scenario);
        label_regions(peaks, build_region_masks(sc.scenario.peaks, kernel, smoothed.geometry()));
    }

    std::ofstream file;
    std::ostream* sink = &out;
    if (!o.output.empty()) {
        file.open(o.output);
        if (!file) throw io::IoError("cannot open " + o.output + " for writing");
        sink = &file;
    }
    for (const CandidatePeak& p : peaks) *sink << io::detection_record(p).dump() << '\n';

    json summary;
    summary["candidates"] = peaks.size();
    summary["k"] = bh.k;
    summary["pvalue_cutoff"] = bh.pvalue_cutoff;
    summary["height_threshold"] = finite_or_null(bh.height_threshold);
    summary["gamma"] = gamma;
    summary["sigma_gamma"] = sigma_gamma;
    summary["kappa"] = law.kappa;
    summary["mode"] = std::string(io::to_string(mode));
    summary["v"] = finite_or_null(v);
    summary["alpha"] = o.alpha;
    *sink << json{{"summary", summary}}.dump() << '\n';
    if (!*sink) throw io::IoError("failed writing detections");
    return kExitOk;
}

struct CurvesOptions {
    std::string config;
    std::string output;
    std::optional<std::size_t> replications;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
};

int curves(const CurvesOptions& o, std::ostream& out) {
    ExperimentConfig cfg = io::load_experiment_config(o.config);
    if (!cfg.sweep) throw io::ConfigError("sweep", "missing; curves need a sweep axis");
    if (o.replications) {
        if (*o.replications < 1) throw UsageError("--replications must be >= 1");
        cfg.replications = *o.replications;
    }
    if (o.seed) cfg.master_seed = *o.seed;
    cfg.threads = o.threads;
    const auto rows = sweep_curves(cfg);
    if (o.output.empty()) {
        io::write_curves_csv(out, rows);
        return kExitOk;
    }
    std::ofstream file(o.output);
    if (!file) throw io::IoError("cannot open " + o.output + " for writing");
    io::write_curves_csv(file, rows);
    if (!file) throw io::IoError("failed writing " + o.output);
    return kExitOk;
}

struct TheoryOptions {
    double gamma = 3.0;
    double nu = 0.0;
    double sigma = 1.0;
    double alpha = 0.05;
    double a1 = 9.0 / 40000.0;
    double a2 = 0.0;
    std::string v_grid = "0.1:4:0.1";
    std::string output;
};

int theory(const TheoryOptions& o, std::ostream& out) {
    FieldMoments m;
    TheoryParams params;
    try {
        m = closed_form_moments(o.gamma, o.nu, o.sigma);
        params.alpha = o.alpha;
        params.a1 = o.a1;
        params.a2_gamma = o.a2;
        params.law = IsotropicHeightLaw::from_moments(m);
        params.lambda_det = m.lambda_det;
        params.validate();
    } catch (const DomainError& e) {
        throw UsageError(std::string("invalid moments: ") + e.what());
    }
    const std::vector<double> grid = parse_grid(o.v_grid);
    for (double x : grid) {
        if (!(x > 0.0)) throw UsageError("--v-grid values must be positive");
    }
    const double s = m.sigma_gamma;
    std::vector<double> v_field(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v_field[i] = grid[i] * s;
    const double v_opt = optimal_v(params, v_field);

    std::ofstream file;
    std::ostream* sink = &out;
    if (!o.output.empty()) {
        file.open(o.output);
        if (!file) throw io::IoError("cannot open " + o.output + " for writing");
        sink = &file;
    }
    std::ostream& w = *sink;
    w << std::setprecision(12);
    w << "v_over_sigma,v,u_star,u_double_star,beta,fdr_bh_exact,fdr_bh_overshoot,is_v_opt\n";
    w << "-inf,-inf," << u_star(params, kNegInf) << ",,," << theoretical_fdr(params, FdrVariant::bh_exact(kNegInf))
      << ",,0\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = v_field[i];
        w << grid[i] << ',' << v << ',' << u_star(params, v) << ',' << u_double_star(params, v) << ','
          << beta_factor(v, params.law, params.lambda_det) << ','
          << theoretical_fdr(params, FdrVariant::bh_exact(v)) << ','
          << theoretical_fdr(params, FdrVariant::bh_overshoot(v)) << ',' << (v == v_opt ? 1 : 0) << '\n';
    }
    if (!w) throw io::IoError("failed writing theory table");
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Peak detection in smooth Gaussian random fields by smoothing and testing of local maxima"};
    app.require_subcommand(1);

    SimulateOptions sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Render signal, noise, observed and smoothed fields");
    sim_cmd->add_option("--config", sim.config, "Scenario configuration (JSON)")->required();
    sim_cmd->add_option("--output", sim.output, "Output directory")->required();
    sim_cmd->add_option("--seed", sim.seed, "Override the noise seed");

    DetectOptions det;
    auto* det_cmd = app.add_subcommand("detect", "Detect peaks in a field file");
    det_cmd->add_option("input", det.input, "Field file (or CSV with --csv)")->required();
    det_cmd->add_flag("--csv", det.csv, "Input is a plain numeric CSV grid");
    det_cmd->add_option("--spacing", det.spacing, "Grid spacing for CSV input");
    auto* gamma_opt = det_cmd->add_option("--gamma", det.gamma, "Smoothing bandwidth");
    det_cmd->add_option("--fit-gamma", det.fit_template, "Fit the bandwidth to this peak template field")
        ->excludes(gamma_opt);
    det_cmd->add_option("--kernel-truncation", det.kernel_truncation, "Kernel support in units of gamma");
    det_cmd->add_option("--v", det.v, "Pre-threshold in units of sigma_gamma (use --v=-inf for none)");
    det_cmd->add_option("--alpha", det.alpha, "FDR level");
    det_cmd->add_option("--mode", det.mode, "p-values: exact | overshoot");
    det_cmd->add_option("--moments", det.moments, "closed-form | estimate");
    det_cmd->add_option("--nu", det.nu, "Noise correlation bandwidth for closed-form moments");
    det_cmd->add_option("--sigma", det.sigma, "Noise level for closed-form moments");
    det_cmd->add_flag("--no-smooth", det.no_smooth, "Input is already smoothed");
    det_cmd->add_option("--output", det.output, "Write records here instead of stdout");
    det_cmd->add_option("--scenario", det.scenario, "Scenario configuration used to label regions");

    CurvesOptions cur;
    auto* cur_cmd = app.add_subcommand("curves", "Monte Carlo FDR / power curves over a sweep");
    cur_cmd->add_option("--config", cur.config, "Experiment configuration with a sweep (JSON)")->required();
    cur_cmd->add_option("--output", cur.output, "CSV output path (default stdout)");
    cur_cmd->add_option("--replications", cur.replications, "Override the replication count");
    cur_cmd->add_option("--seed", cur.seed, "Override the master seed");
    cur_cmd->add_option("--threads", cur.threads, "Worker threads (0 = all cores)");

    TheoryOptions th;
    auto* th_cmd = app.add_subcommand("theory", "Asymptotic thresholds, beta, FDR bounds and v_opt");
    th_cmd->add_option("--gamma", th.gamma, "Smoothing bandwidth");
    th_cmd->add_option("--nu", th.nu, "Noise correlation bandwidth");
    th_cmd->add_option("--sigma", th.sigma, "Noise level");
    th_cmd->add_option("--alpha", th.alpha, "FDR level");
    th_cmd->add_option("--a1", th.a1, "Peaks per unit area");
    th_cmd->add_option("--a2", th.a2, "Smoothed signal area fraction");
    th_cmd->add_option("--v-grid", th.v_grid, "start:stop:step in units of sigma_gamma");
    th_cmd->add_option("--output", th.output, "CSV output path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitValidation;
    }

    try {
        if (*sim_cmd) return simulate(sim, out);
        if (*det_cmd) return detect(det, out);
        if (*cur_cmd) return curves(cur, out);
        if (*th_cmd) return theory(th, out);
    } catch (const io::IoError& e) {
        err << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const io::ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitValidation;
    }
    return kExitValidation;
}

}  // namespace stem::cli

#include "stem/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>
#include <utility>

namespace stem {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct MeanAndError {
    double mean = 0.0;
    double stderr_ = 0.0;
};

// Accumulated in index order so the result does not depend on scheduling.
MeanAndError mean_and_error(const std::vector<double>& xs) {
    MeanAndError out;
    if (xs.empty()) return out;
    for (double x : xs) out.mean += x;
    const auto n = static_cast<double>(xs.size());
    out.mean /= n;
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stderr_ = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return out;
}

}  // namespace

GridGeometry ScenarioSpec::geometry() const {
    if (!(domain_size > 0.0) || !(spacing > 0.0)) throw DomainError("domain size and spacing must be positive");
    const auto n = static_cast<std::size_t>(std::llround(domain_size / spacing));
    GridGeometry g{n, n, spacing, {0.0, 0.0}};
    g.validate();
    return g;
}

ScenarioSpec reference_scenario(double amplitude, double nu, double gamma) {
    ScenarioSpec s;
    s.domain_size = 200.0;
    s.spacing = 1.0;
    s.noise = NoiseSpec{1.0, nu, 0};
    s.kernel = KernelSpec{gamma, 3.0};
    if (amplitude > 0.0) {
        for (int i1 = 1; i1 <= 3; ++i1) {
            for (int i2 = 1; i2 <= 3; ++i2) {
                s.peaks.push_back(PeakSpec{amplitude, 3.0, 3.0, {50.0 * i1, 50.0 * i2}});
            }
        }
    }
    return s;
}

void ExperimentConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (replications < 1) throw DomainError("replications must be >= 1");
    if (std::isnan(v)) throw DomainError("pre-threshold is NaN");
    const bool v_swept = sweep && sweep->axis == SweepAxis::V;
    if (pvalue_mode == PValueMode::Overshoot && !v_swept && !(v > 0.0)) {
        throw DomainError("overshoot p-values need a pre-threshold v > 0");
    }
    if (sweep) {
        for (std::size_t i = 1; i < sweep->grid.size(); ++i) {
            if (!(sweep->grid[i] > sweep->grid[i - 1])) throw DomainError("sweep grid must be strictly increasing");
        }
        if (v_swept && pvalue_mode == PValueMode::Overshoot) {
            for (double x : sweep->grid) {
                if (!(x > 0.0)) throw DomainError("overshoot p-values need a pre-threshold v > 0");
            }
        }
    }
}

ExperimentConfig ExperimentConfig::at(double value) const {
    if (!sweep) throw DomainError("configuration has no sweep");
    ExperimentConfig c = *this;
    c.sweep.reset();
    switch (sweep->axis) {
        case SweepAxis::Gamma: c.scenario.kernel.gamma = value; break;
        case SweepAxis::V: c.v = value; break;
        case SweepAxis::Amplitude:
            if (value > 0.0) {
                for (PeakSpec& p : c.scenario.peaks) p.amplitude = value;
            } else {
                c.scenario.peaks.clear();
            }
            break;
    }
    return c;
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t rep_index) {
    return splitmix64(splitmix64(master_seed) ^ (static_cast<std::uint64_t>(rep_index) + 0x632be59bd9b4e019ULL));
}

PreparedExperiment::PreparedExperiment(ExperimentConfig config) : config_(std::move(config)) {
    config_.validate();
    const ScenarioSpec& s = config_.scenario;
    geometry_ = s.geometry();
    // Smoothing is linear, so the smoothed signal is computed once and added to
    // each smoothed noise realization.
    smoothed_signal_ = smooth(render_signal(s.peaks, geometry_), s.kernel);
    masks_ = build_region_masks(s.peaks, s.kernel, geometry_);
    moments_ = closed_form_moments(s.kernel.gamma, s.noise.nu, s.noise.sigma);

    const IsotropicHeightLaw law = IsotropicHeightLaw::from_moments(moments_);
    v_field_ = config_.v * moments_.sigma_gamma;
    laws_.isotropic = law;
    laws_.overshoot = OvershootLaw{moments_.sigma_gamma, 2, v_field_};

    theory_.alpha = config_.alpha;
    theory_.a1 = static_cast<double>(s.peaks.size()) / geometry_.area();
    theory_.a2_gamma = masks_.smoothed_signal_fraction();
    theory_.law = law;
    theory_.lambda_det = moments_.lambda_det;
}

ReplicationOutcome PreparedExperiment::run(std::size_t rep_index) const {
    const ScenarioSpec& s = config_.scenario;
    NoiseSpec noise = s.noise;
    noise.seed = replication_seed(config_.master_seed, rep_index);
    GridField y = smooth(generate_noise(noise, geometry_), s.kernel);
    for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += smoothed_signal_.values[i];

    auto candidates = find_local_maxima(y, v_field_);
    const BhOutcome bh = apply_bh(candidates, config_.alpha, config_.pvalue_mode, v_field_, laws_);

    std::vector<CandidatePeak> significant;
    significant.reserve(bh.k);
    for (const CandidatePeak& p : candidates) {
        if (p.significant) significant.push_back(p);
    }
    const Classification cls = classify_peaks(significant, masks_);

    ReplicationOutcome out;
    out.false_discoveries = cls.false_discoveries;
    out.rejections = cls.rejections();
    out.hits = cls.per_peak_hit;
    out.num_candidates = candidates.size();
    out.height_threshold = bh.height_threshold;
    return out;
}

ReplicationOutcome run_replication(const ExperimentConfig& config, std::size_t rep_index) {
    return PreparedExperiment(config).run(rep_index);
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    const PreparedExperiment prepared(config);
    const std::size_t n = config.replications;
    std::vector<ReplicationOutcome> outcomes(n);

    unsigned workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) outcomes[i] = prepared.run(i);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i = w; i < n; i += workers) outcomes[i] = prepared.run(i);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (const auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }

    std::vector<double> fdp(n);
    std::vector<double> tdp(n);
    double candidates = 0.0;
    const std::size_t num_peaks = config.scenario.peaks.size();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& o = outcomes[i];
        fdp[i] = static_cast<double>(o.false_discoveries) / static_cast<double>(std::max<std::size_t>(o.rejections, 1));
        const auto hits = static_cast<double>(std::count(o.hits.begin(), o.hits.end(), true));
        tdp[i] = num_peaks == 0 ? 0.0 : hits / static_cast<double>(num_peaks);
        candidates += static_cast<double>(o.num_candidates);
    }

    ExperimentResult result;
    const auto fdr = mean_and_error(fdp);
    const auto power = mean_and_error(tdp);
    result.realized_fdr = fdr.mean;
    result.fdr_stderr = fdr.stderr_;
    result.realized_power = power.mean;
    result.power_stderr = power.stderr_;
    result.mean_num_candidates = candidates / static_cast<double>(n);

    const TheoryParams& theory = prepared.theory();
    const double v = prepared.pre_threshold();
    const bool exact = config.pvalue_mode == PValueMode::ExactIsotropic;
    result.theoretical_fdr =
        theoretical_fdr(theory, exact ? FdrVariant::bh_exact(v) : FdrVariant::bh_overshoot(v));
    if (num_peaks > 0) {
        const double u = exact ? u_star(theory, v) : u_double_star(theory, v);
        result.theoretical_threshold = u;
        double total = 0.0;
        for (const PeakSpec& p : config.scenario.peaks) {
            total += power_approx(u, p.amplitude, smoothed_peak_height(p.scale, config.scenario.kernel.gamma),
                                  prepared.moments().sigma_gamma);
        }
        result.theoretical_power = total / static_cast<double>(num_peaks);
    }
    if (config.keep_replications) result.replications = std::move(outcomes);
    return result;
}

std::vector<ExperimentResult> sweep_curves(const ExperimentConfig& config) {
    config.validate();
    if (!config.sweep) throw DomainError("sweep_curves needs a sweep axis");
    std::vector<ExperimentResult> out;
    out.reserve(config.sweep->grid.size());
    for (double value : config.sweep->grid) {
        ExperimentResult r = run_experiment(config.at(value));
        r.sweep_value = value;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace stem

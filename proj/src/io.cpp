#include "stem/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace stem::io {

namespace {

using nlohmann::json;

template <typename T>
T to_little(T value) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(value);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return value;
}

template <typename T>
void put(std::string& out, T value) {
    value = to_little(value);
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(std::string_view bytes, std::size_t& pos) {
    if (bytes.size() - pos < sizeof(T)) throw IoError("field file truncated");
    T value;
    std::memcpy(&value, bytes.data() + pos, sizeof(T));
    pos += sizeof(T);
    return to_little(value);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path + key, "missing");
    return obj.at(key);
}

double number(const json& value, const std::string& key) {
    if (!value.is_number()) throw ConfigError(key, "expected a number");
    return value.get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& path = {}) {
    if (!obj.contains(key)) return fallback;
    return number(obj.at(key), path + key);
}

Point2 point(const json& value, const std::string& key) {
    if (!value.is_array() || value.size() != 2) throw ConfigError(key, "expected [x, y]");
    return {number(value[0], key), number(value[1], key)};
}

double threshold(const json& value, const std::string& key) {
    if (value.is_null()) return -std::numeric_limits<double>::infinity();
    if (value.is_string()) {
        const auto s = value.get<std::string>();
        if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
        throw ConfigError(key, "expected a number, null or \"-inf\"");
    }
    return number(value, key);
}

std::uint64_t unsigned_integer(const json& value, const std::string& key) {
    if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
        throw ConfigError(key, "expected a non-negative integer");
    }
    return value.get<std::uint64_t>();
}

}  // namespace

std::string encode_field(const GridField& field) {
    std::string out;
    out.reserve(36 + field.values.size() * 8);
    out.append(kFieldMagic);
    put<std::uint32_t>(out, 2);
    put<std::uint64_t>(out, field.height());
    put<std::uint64_t>(out, field.width());
    put<double>(out, field.spacing);
    for (double v : field.values) put<double>(out, v);
    return out;
}

GridField decode_field(std::string_view bytes) {
    if (bytes.substr(0, kFieldMagic.size()) != kFieldMagic) throw IoError("bad field file magic");
    std::size_t pos = kFieldMagic.size();
    const auto ndim = take<std::uint32_t>(bytes, pos);
    if (ndim != 2) throw IoError("field file ndim must be 2, got " + std::to_string(ndim));
    const auto height = take<std::uint64_t>(bytes, pos);
    const auto width = take<std::uint64_t>(bytes, pos);
    const double spacing = take<double>(bytes, pos);
    if (height == 0 || width == 0 || height > (bytes.size() - pos) / 8 / width ||
        (bytes.size() - pos) != height * width * 8) {
        throw IoError("field file payload length does not match its dimensions");
    }
    GridField field(GridGeometry{height, width, spacing, {}});
    for (double& v : field.values) v = take<double>(bytes, pos);
    return field;
}

void write_field_file(const std::filesystem::path& path, const GridField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const std::string bytes = encode_field(field);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

GridField read_field_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_field(buf.str());
}

GridField read_csv_field(const std::filesystem::path& path, double spacing) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<double> values;
    std::size_t width = 0;
    std::size_t height = 0;
    std::string line;
    while (std::getline(in, line)) {
        for (char& ch : line) {
            if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
        }
        std::istringstream row(line);
        std::size_t n = 0;
        double v = 0.0;
        while (row >> v) {
            values.push_back(v);
            ++n;
        }
        if (!row.eof()) throw IoError(path.string() + ": non-numeric entry on line " + std::to_string(height + 1));
        if (n == 0) continue;
        if (width == 0) width = n;
        if (n != width) throw IoError(path.string() + ": ragged row " + std::to_string(height + 1));
        ++height;
    }
    if (height == 0) throw IoError(path.string() + ": no data");
    GridField field(GridGeometry{height, width, spacing, {}});
    field.values.values() = std::move(values);
    return field;
}

ExperimentConfig parse_experiment_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("<root>", "expected an object");
    ExperimentConfig cfg;
    ScenarioSpec& s = cfg.scenario;
    s.domain_size = number_or(doc, "domain_size", 200.0);
    s.spacing = number_or(doc, "spacing", 1.0);

    const json& peaks = require(doc, "peaks", "");
    if (!peaks.is_array()) throw ConfigError("peaks", "expected an array");
    for (std::size_t i = 0; i < peaks.size(); ++i) {
        const std::string path = "peaks[" + std::to_string(i) + "].";
        const json& p = peaks[i];
        PeakSpec spec;
        spec.amplitude = number(require(p, "amplitude", path), path + "amplitude");
        spec.scale = number_or(p, "scale", 3.0, path);
        spec.truncation = number_or(p, "truncation", 3.0, path);
        spec.center = point(require(p, "center", path), path + "center");
        if (!(spec.amplitude > 0.0)) throw ConfigError(path + "amplitude", "must be positive");
        if (!(spec.scale > 0.0)) throw ConfigError(path + "scale", "must be positive");
        if (!(spec.truncation > 0.0)) throw ConfigError(path + "truncation", "must be positive");
        s.peaks.push_back(spec);
    }

    if (doc.contains("noise")) {
        const json& n = doc.at("noise");
        s.noise.sigma = number_or(n, "sigma", 1.0, "noise.");
        s.noise.nu = number_or(n, "nu", 0.0, "noise.");
        if (n.contains("seed")) s.noise.seed = unsigned_integer(n.at("seed"), "noise.seed");
        if (!(s.noise.sigma > 0.0)) throw ConfigError("noise.sigma", "must be positive");
        if (!(s.noise.nu >= 0.0)) throw ConfigError("noise.nu", "must be non-negative");
    }
    if (doc.contains("kernel")) {
        const json& k = doc.at("kernel");
        s.kernel.gamma = number_or(k, "gamma", 3.0, "kernel.");
        s.kernel.truncation = number_or(k, "truncation", 3.0, "kernel.");
        if (!(s.kernel.gamma > 0.0)) throw ConfigError("kernel.gamma", "must be positive");
        if (!(s.kernel.truncation > 0.0)) throw ConfigError("kernel.truncation", "must be positive");
    }

    cfg.alpha = number_or(doc, "alpha", 0.05);
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw ConfigError("alpha", "must lie in (0, 1)");
    if (doc.contains("v")) cfg.v = threshold(doc.at("v"), "v");
    if (doc.contains("pvalue_mode")) {
        const json& m = doc.at("pvalue_mode");
        const std::string mode = m.is_string() ? m.get<std::string>() : "";
        if (mode == "exact") {
            cfg.pvalue_mode = PValueMode::ExactIsotropic;
        } else if (mode == "overshoot") {
            cfg.pvalue_mode = PValueMode::Overshoot;
        } else {
            throw ConfigError("pvalue_mode", "expected \"exact\" or \"overshoot\"");
        }
    }
    if (doc.contains("replications")) {
        cfg.replications = unsigned_integer(doc.at("replications"), "replications");
        if (cfg.replications < 1) throw ConfigError("replications", "must be >= 1");
    }
    if (doc.contains("master_seed")) cfg.master_seed = unsigned_integer(doc.at("master_seed"), "master_seed");
    if (doc.contains("threads")) cfg.threads = static_cast<unsigned>(unsigned_integer(doc.at("threads"), "threads"));

    if (doc.contains("sweep") && !doc.at("sweep").is_null()) {
        const json& sw = doc.at("sweep");
        Sweep sweep;
        const json& axis = require(sw, "axis", "sweep.");
        const std::string name = axis.is_string() ? axis.get<std::string>() : "";
        if (name == "gamma") {
            sweep.axis = SweepAxis::Gamma;
        } else if (name == "v") {
            sweep.axis = SweepAxis::V;
        } else if (name == "amplitude") {
            sweep.axis = SweepAxis::Amplitude;
        } else {
            throw ConfigError("sweep.axis", "expected \"gamma\", \"v\" or \"amplitude\"");
        }
        const json& grid = require(sw, "grid", "sweep.");
        if (!grid.is_array() || grid.empty()) throw ConfigError("sweep.grid", "expected a non-empty array");
        for (const json& g : grid) sweep.grid.push_back(number(g, "sweep.grid"));
        for (std::size_t i = 1; i < sweep.grid.size(); ++i) {
            if (!(sweep.grid[i] > sweep.grid[i - 1])) throw ConfigError("sweep.grid", "must be strictly increasing");
        }
        cfg.sweep = std::move(sweep);
    }

    try {
        cfg.validate();
        (void)render_signal(s.peaks, s.geometry());
    } catch (const DomainError& e) {
        throw ConfigError("<config>", e.what());
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", e.what());
    }
    return parse_experiment_config(doc);
}

json detection_record(const CandidatePeak& peak) {
    json j;
    j["row"] = peak.row;
    j["col"] = peak.col;
    j["x"] = peak.model_coords.x;
    j["y"] = peak.model_coords.y;
    j["height"] = peak.height;
    j["pvalue"] = peak.pvalue ? json(*peak.pvalue) : json(nullptr);
    j["region"] = std::string(to_string(peak.region));
    j["significant"] = peak.significant;
    return j;
}

void write_curves_csv(std::ostream& out, std::span<const ExperimentResult> rows) {
    out << kCurveHeader << '\n';
    out << std::setprecision(17);
    for (const ExperimentResult& r : rows) {
        out << r.sweep_value << ',' << r.realized_fdr << ',' << r.fdr_stderr << ',' << r.realized_power << ','
            << r.power_stderr << ',' << r.theoretical_fdr << ',' << r.theoretical_power << '\n';
    }
}

std::string_view to_string(PValueMode mode) {
    return mode == PValueMode::ExactIsotropic ? "exact" : "overshoot";
}

std::string_view to_string(SweepAxis axis) {
    switch (axis) {
        case SweepAxis::Gamma: return "gamma";
        case SweepAxis::V: return "v";
        case SweepAxis::Amplitude: return "amplitude";
    }
    return "gamma";
}

}  // namespace stem::io

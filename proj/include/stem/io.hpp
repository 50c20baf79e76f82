#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "stem/experiments.hpp"
#include "stem/grid.hpp"
#include "stem/maxima.hpp"

namespace stem::io {

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A configuration value is missing or malformed; `key()` names it.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error("config key \"" + key + "\": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

inline constexpr std::string_view kFieldMagic = "STEMFLD1";

/// Binary field layout (all little-endian):
///   8 bytes  magic "STEMFLD1"
///   u32      ndim (always 2)
///   u64 x2   height, width
///   f64      spacing
///   f64 x (height * width) row-major payload
std::string encode_field(const GridField& field);
GridField decode_field(std::string_view bytes);

void write_field_file(const std::filesystem::path& path, const GridField& field);
GridField read_field_file(const std::filesystem::path& path);

/// Plain rectangular numeric grid, one row per line, comma or whitespace separated.
GridField read_csv_field(const std::filesystem::path& path, double spacing);

/// Scenario and experiment keys from one JSON document (see README for the schema).
ExperimentConfig parse_experiment_config(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

nlohmann::json detection_record(const CandidatePeak& peak);

inline constexpr std::string_view kCurveHeader =
    "sweep_value,realized_fdr,fdr_stderr,realized_power,power_stderr,theoretical_fdr,theoretical_power";

void write_curves_csv(std::ostream& out, std::span<const ExperimentResult> rows);

std::string_view to_string(PValueMode mode);
std::string_view to_string(SweepAxis axis);

}  // namespace stem::io

#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "stem/field_model.hpp"
#include "stem/inference.hpp"
#include "stem/maxima.hpp"

namespace stem {

/// Full generative description of a synthetic image on [0, L)^2.
struct ScenarioSpec {
    double domain_size = 200.0;  // L
    double spacing = 1.0;
    std::vector<PeakSpec> peaks;
    NoiseSpec noise{};
    KernelSpec kernel{};

    GridGeometry geometry() const;
};

/// Nine truncated Gaussian peaks (b = c = 3) on the lattice {50, 100, 150}^2 of a
/// 200 x 200 domain, sigma = 1. Amplitude 0 yields a scenario without peaks.
ScenarioSpec reference_scenario(double amplitude, double nu, double gamma);

enum class SweepAxis { Gamma, V, Amplitude };

struct Sweep {
    SweepAxis axis = SweepAxis::Gamma;
    std::vector<double> grid;
};

struct ExperimentConfig {
    ScenarioSpec scenario{};
    double alpha = 0.05;
    /// Pre-threshold in units of sigma_gamma; -inf disables pre-thresholding.
    double v = -std::numeric_limits<double>::infinity();
    PValueMode pvalue_mode = PValueMode::ExactIsotropic;
    std::size_t replications = 500;
    std::uint64_t master_seed = 0;
    std::optional<Sweep> sweep;
    /// Worker threads; 0 uses the hardware concurrency.
    unsigned threads = 1;
    /// Keep the per-replication outcomes in the result.
    bool keep_replications = false;

    void validate() const;

    /// Copy with the sweep variable set to `value`.
    ExperimentConfig at(double value) const;
};

struct ReplicationOutcome {
    std::size_t false_discoveries = 0;  // V
    std::size_t rejections = 0;         // R
    std::vector<bool> hits;
    std::size_t num_candidates = 0;
    double height_threshold = std::numeric_limits<double>::infinity();

    friend bool operator==(const ReplicationOutcome&, const ReplicationOutcome&) = default;
};

struct ExperimentResult {
    double sweep_value = 0.0;
    double realized_fdr = 0.0;
    double fdr_stderr = 0.0;
    double realized_power = 0.0;
    double power_stderr = 0.0;
    double theoretical_fdr = 0.0;
    double theoretical_power = 0.0;
    double mean_num_candidates = 0.0;
    /// Deterministic BH threshold the realized one converges to (u* or u**), field units.
    double theoretical_threshold = std::numeric_limits<double>::infinity();
    std::vector<ReplicationOutcome> replications;

    friend bool operator==(const ExperimentResult&, const ExperimentResult&) = default;
};

/// Everything about one configuration that does not depend on the replication:
/// smoothed signal, region masks, null laws and theory parameters.
class PreparedExperiment {
public:
    explicit PreparedExperiment(ExperimentConfig config);

    const ExperimentConfig& config() const { return config_; }
    const RegionMasks& masks() const { return masks_; }
    const FieldMoments& moments() const { return moments_; }
    const NullLaws& laws() const { return laws_; }
    const TheoryParams& theory() const { return theory_; }
    /// Pre-threshold in field units.
    double pre_threshold() const { return v_field_; }

    ReplicationOutcome run(std::size_t rep_index) const;

private:
    ExperimentConfig config_;
    GridGeometry geometry_;
    GridField smoothed_signal_;
    RegionMasks masks_;
    FieldMoments moments_;
    NullLaws laws_;
    TheoryParams theory_;
    double v_field_;
};

/// Seed of the noise stream for one replication.
std::uint64_t replication_seed(std::uint64_t master_seed, std::size_t rep_index);

ReplicationOutcome run_replication(const ExperimentConfig& config, std::size_t rep_index);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// One result per sweep grid point, all sharing the replication seeds.
std::vector<ExperimentResult> sweep_curves(const ExperimentConfig& config);

}  // namespace stem

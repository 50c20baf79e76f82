#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "stem/maxima.hpp"
#include "stem/peak_distributions.hpp"

namespace stem {

enum class PValueMode { ExactIsotropic, Overshoot };

/// Null laws available to the p-value step. Exact mode needs `isotropic`;
/// overshoot mode needs `overshoot` (its pre_threshold is ignored in favour of v).
struct NullLaws {
    std::optional<IsotropicHeightLaw> isotropic;
    std::optional<OvershootLaw> overshoot;
};

/// Sets p-values on candidates extracted above pre-threshold v (field units).
void compute_pvalues(std::span<CandidatePeak> peaks, PValueMode mode, double v, const NullLaws& laws);

struct BhOutcome {
    std::size_t k = 0;
    double pvalue_cutoff = 1.0;  // k * alpha / m, or 1 when m = 0
    double height_threshold = std::numeric_limits<double>::infinity();
    std::vector<bool> rejected;
};

/// Benjamini-Hochberg with strict inequality p_(i) < i alpha / m. The height
/// threshold is left at +inf; see bh_height_threshold.
BhOutcome bh_procedure(std::span<const double> pvalues, double alpha);

/// Height u with p-value(u) equal to the BH cutoff, +inf when nothing is rejected.
double bh_height_threshold(const BhOutcome& outcome, PValueMode mode, double v, const NullLaws& laws);

/// p-values, BH and significance flags in one pass; returns the outcome with
/// its height threshold filled in.
BhOutcome apply_bh(std::span<CandidatePeak> peaks, double alpha, PValueMode mode, double v, const NullLaws& laws);

/// Asymptotic quantities used by the theoretical curves.
///   a1:       number of peaks per unit area
///   a2_gamma: fraction of the domain covered by the smoothed signal
struct TheoryParams {
    double alpha = 0.05;
    double a1 = 0.0;
    double a2_gamma = 0.0;
    IsotropicHeightLaw law{};
    double lambda_det = 0.0;

    void validate() const;
};

/// Deterministic BH threshold for exact p-values at pre-threshold v (may be -inf).
double u_star(const TheoryParams& params, double v);

/// Deterministic BH threshold for overshoot p-values at pre-threshold v > 0 (leading order).
double u_double_star(const TheoryParams& params, double v);

struct FdrVariant {
    enum class Kind { FixedU, BhExact, BhOvershoot };
    Kind kind = Kind::BhExact;
    double value = -std::numeric_limits<double>::infinity();

    static FdrVariant fixed_u(double u) { return {Kind::FixedU, u}; }
    static FdrVariant bh_exact(double v) { return {Kind::BhExact, v}; }
    static FdrVariant bh_overshoot(double v) { return {Kind::BhOvershoot, v}; }
};

/// Leading-order FDR bound.
double theoretical_fdr(const TheoryParams& params, FdrVariant variant);

/// Phi((amplitude * peak_height - u) / sigma_gamma).
double power_approx(double u, double amplitude, double peak_height, double sigma_gamma);

/// Signal-to-noise ratio a h_gamma(tau) / sigma_gamma for Gaussian peaks and noise in 2-D.
double snr(double gamma, double amplitude, double b, double nu, double sigma);

/// Bandwidth maximizing snr: sqrt(b^2 - 2 nu^2) when nu < b / sqrt 2, otherwise 0.
double optimal_gamma(double b, double nu);

/// Objective maximized by the optimal pre-threshold.
double optimal_v_objective(const TheoryParams& params, double v);

/// Grid point maximizing optimal_v_objective; ties go to the smaller v.
double optimal_v(const TheoryParams& params, std::span<const double> v_grid);

}  // namespace stem

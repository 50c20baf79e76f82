#pragma once

#include "stem/field_model.hpp"

namespace stem {

/// Smallest probability reported by the tail evaluators; smaller values are floored here.
inline constexpr double kMinProbability = 1e-300;

/// Largest accepted kappa. Values in (kMaxKappa, sqrt 2] are evaluated at kMaxKappa,
/// where the density is continuous and the closed form has no vanishing denominator.
inline constexpr double kMaxKappa = 1.4142135613730951;  // sqrt(2) - 1e-9

/// Null height law of local maxima of an isotropic Gaussian field on R^2.
///   sigma_gamma: standard deviation of the smoothed noise
///   kappa:       -rho'/sqrt(rho'')
///   em0:         expected number of local maxima per unit area
struct IsotropicHeightLaw {
    double sigma_gamma = 1.0;
    double kappa = 1.0;
    double em0 = 0.0;

    static IsotropicHeightLaw from_moments(const FieldMoments& m);

    void validate() const;
};

/// Overshoot approximation K(u, v) for a stationary Gaussian field in `dim` dimensions.
struct OvershootLaw {
    double sigma_gamma = 1.0;
    int dim = 2;
    double pre_threshold = 1.0;
};

/// Probabilists' Hermite polynomial He_n(x), n <= 10.
double hermite(int n, double x);

/// Density of the standardized height of a local maximum.
double density_g(double x, double kappa);

/// P(height > u) for a local maximum under the null.
double tail_F(double u, const IsotropicHeightLaw& law);

/// P(height > u | height > v) = F(u) / F(v).
double tail_F_cond(double u, double v, const IsotropicHeightLaw& law);

/// Inverse of tail_F by bisection on [-10 sigma, 15 sigma] to 1e-10.
double inverse_tail_F(double p, const IsotropicHeightLaw& law);

/// Expected number of local maxima above u per unit area.
double expected_maxima(const IsotropicHeightLaw& law, double u);

double overshoot_K(double u, double v, const OvershootLaw& law);

/// Overshoot p-value at the law's own pre-threshold.
inline double overshoot_K(double u, const OvershootLaw& law) { return overshoot_K(u, law.pre_threshold, law); }

/// Correction factor beta(v) relating the exact overshoot tail to K for large u (N = 2).
double beta_factor(double v, const IsotropicHeightLaw& law, double lambda_det);

}  // namespace stem

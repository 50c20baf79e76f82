#include "stem/peak_distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stem/quadrature.hpp"

namespace stem {

namespace {

constexpr double kUpperSpan = 12.0;  // integrate g over [x, x + 12]
constexpr double kLowerCut = -12.0;  // g has no mass worth counting below this

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double checked_kappa(double kappa) {
    if (!(kappa > 0.0) || kappa > std::numbers::sqrt2) {
        throw DomainError("kappa must lie in (0, sqrt 2], got " + std::to_string(kappa));
    }
    return std::min(kappa, kMaxKappa);
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

IsotropicHeightLaw IsotropicHeightLaw::from_moments(const FieldMoments& m) {
    if (!(m.rho1 < 0.0) || !(m.rho2 > 0.0)) {
        throw DomainError("moments need rho' < 0 and rho'' > 0");
    }
    IsotropicHeightLaw law;
    law.sigma_gamma = m.sigma_gamma;
    law.kappa = m.kappa;
    law.em0 = -std::sqrt(3.0) * m.rho2 / (3.0 * std::numbers::pi * m.rho1);
    law.validate();
    return law;
}

void IsotropicHeightLaw::validate() const {
    if (!(sigma_gamma > 0.0) || !std::isfinite(sigma_gamma)) throw DomainError("sigma_gamma must be positive");
    checked_kappa(kappa);
    if (!(em0 > 0.0) || !std::isfinite(em0)) throw DomainError("expected maxima density must be positive");
}

double hermite(int n, double x) {
    if (n < 0 || n > 10) throw DomainError("hermite order must be in [0, 10]");
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double density_g(double x, double kappa) {
    const double k = checked_kappa(kappa);
    const double k2 = k * k;
    const double two_m = 2.0 - k2;
    const double three_m = 3.0 - k2;
    const double sqrt3 = std::sqrt(3.0);

    const double t1 = sqrt3 * k2 * (x * x - 1.0) * std_normal_pdf(x) * std_normal_cdf(k * x / std::sqrt(two_m));
    const double t2 = k * x * std::sqrt(3.0 * two_m) / (2.0 * std::numbers::pi) * std::exp(-x * x / two_m);
    const double t3 = std::sqrt(6.0) / std::sqrt(std::numbers::pi * three_m) *
                      std::exp(-3.0 * x * x / (2.0 * three_m)) *
                      std_normal_cdf(k * x / std::sqrt(three_m * two_m));
    return t1 + t2 + t3;
}

double tail_F(double u, const IsotropicHeightLaw& law) {
    if (std::isnan(u)) throw DomainError("tail_F: u is NaN");
    if (u == -std::numeric_limits<double>::infinity()) return 1.0;
    if (u == std::numeric_limits<double>::infinity()) return 0.0;
    const double x = u / law.sigma_gamma;
    const double kappa = checked_kappa(law.kappa);
    const double lo = std::max(x, kLowerCut);
    const double hi = std::max(x, 0.0) + kUpperSpan;
    const auto r = integrate_adaptive([kappa](double t) { return density_g(t, kappa); }, lo, hi);
    return clamp01(r.value);
}

double tail_F_cond(double u, double v, const IsotropicHeightLaw& law) {
    if (u < v) throw DomainError("tail_F_cond requires u >= v");
    if (u == v) return 1.0;
    const double fv = tail_F(v, law);
    if (fv < kMinProbability) throw DomainError("tail_F_cond: F(v) underflows");
    return clamp01(tail_F(u, law) / fv);
}

double inverse_tail_F(double p, const IsotropicHeightLaw& law) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("tail inversion needs p in (0, 1), got " + std::to_string(p));
    double lo = -10.0 * law.sigma_gamma;
    double hi = 15.0 * law.sigma_gamma;
    if (tail_F(hi, law) >= p) return hi;
    if (tail_F(lo, law) <= p) return lo;
    const double tol = 1e-10 * law.sigma_gamma;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (tail_F(mid, law) > p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double expected_maxima(const IsotropicHeightLaw& law, double u) { return law.em0 * tail_F(u, law); }

double overshoot_K(double u, double v, const OvershootLaw& law) {
    if (law.dim < 1) throw DomainError("overshoot law dimension must be >= 1");
    if (!(law.sigma_gamma > 0.0)) throw DomainError("sigma_gamma must be positive");
    if (u < v) throw DomainError("overshoot_K requires u >= v");
    const double xv = v / law.sigma_gamma;
    const double hv = hermite(law.dim - 1, xv);
    if (!(hv > 0.0) || !std::isfinite(v)) {
        throw DomainError("overshoot pre-threshold must make H_{N-1}(v/sigma) positive (v > 0 for N = 2)");
    }
    if (u == v) return 1.0;
    if (u == std::numeric_limits<double>::infinity()) return 0.0;
    const double xu = u / law.sigma_gamma;
    const double ratio = hermite(law.dim - 1, xu) / hv * std::exp(-0.5 * (xu - xv) * (xu + xv));
    return clamp01(ratio);
}

double beta_factor(double v, const IsotropicHeightLaw& law, double lambda_det) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("beta requires a finite v > 0");
    if (!(lambda_det > 0.0)) throw DomainError("beta requires det(Lambda) > 0");
    const double s = law.sigma_gamma;
    const double x = v / s;
    const double euler = std::pow(2.0 * std::numbers::pi, -1.5) / (s * s) * std::sqrt(lambda_det) * hermite(1, x) *
                         std::exp(-0.5 * x * x);
    const double maxima = expected_maxima(law, v);
    if (!(maxima > 0.0)) throw DomainError("beta: expected maxima above v underflows");
    return euler / maxima;
}

}  // namespace stem

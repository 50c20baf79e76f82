#include "stem/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace stem {

namespace {

const IsotropicHeightLaw& require_isotropic(const NullLaws& laws) {
    if (!laws.isotropic) throw DomainError("exact p-values need an isotropic height law");
    return *laws.isotropic;
}

const OvershootLaw& require_overshoot(const NullLaws& laws) {
    if (!laws.overshoot) throw DomainError("overshoot p-values need an overshoot law");
    return *laws.overshoot;
}

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// u solving K(u, v) = p, by bisection on [v, v + 40 sigma].
double inverse_overshoot(double p, double v, const OvershootLaw& law) {
    double lo = v;
    double hi = v + 40.0 * law.sigma_gamma;
    if (overshoot_K(hi, v, law) >= p) return hi;
    const double tol = 1e-10 * law.sigma_gamma;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (overshoot_K(mid, v, law) > p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double inverted_threshold(const TheoryParams& p, double target) {
    if (!(target > 0.0 && target < 1.0)) {
        throw DomainError("threshold argument outside (0, 1): " + std::to_string(target));
    }
    return inverse_tail_F(target, p.law);
}

}  // namespace

void compute_pvalues(std::span<CandidatePeak> peaks, PValueMode mode, double v, const NullLaws& laws) {
    if (mode == PValueMode::ExactIsotropic) {
        const auto& law = require_isotropic(laws);
        const double fv = tail_F(v, law);
        if (fv < kMinProbability) throw DomainError("F(v) underflows");
        for (CandidatePeak& p : peaks) {
            if (p.height < v) throw DomainError("candidate height below the pre-threshold");
            p.pvalue = std::clamp(tail_F(p.height, law) / fv, kMinProbability, 1.0);
        }
        return;
    }
    const auto& law = require_overshoot(laws);
    if (!(v > 0.0)) throw DomainError("overshoot p-values need a pre-threshold v > 0");
    for (CandidatePeak& p : peaks) {
        p.pvalue = std::max(overshoot_K(p.height, v, law), kMinProbability);
    }
}

BhOutcome bh_procedure(std::span<const double> pvalues, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    BhOutcome out;
    const std::size_t m = pvalues.size();
    out.rejected.assign(m, false);
    if (m == 0) return out;

    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });

    for (std::size_t i = m; i >= 1; --i) {
        if (pvalues[order[i - 1]] < static_cast<double>(i) * alpha / static_cast<double>(m)) {
            out.k = i;
            break;
        }
    }
    out.pvalue_cutoff = static_cast<double>(out.k) * alpha / static_cast<double>(m);
    for (std::size_t i = 0; i < out.k; ++i) out.rejected[order[i]] = true;
    return out;
}

double bh_height_threshold(const BhOutcome& outcome, PValueMode mode, double v, const NullLaws& laws) {
    if (outcome.k == 0) return std::numeric_limits<double>::infinity();
    const double cutoff = outcome.pvalue_cutoff;
    if (mode == PValueMode::ExactIsotropic) {
        const auto& law = require_isotropic(laws);
        if (cutoff >= 1.0) return v;
        return inverse_tail_F(cutoff * tail_F(v, law), law);
    }
    const auto& law = require_overshoot(laws);
    if (cutoff >= 1.0) return v;
    return inverse_overshoot(cutoff, v, law);
}

BhOutcome apply_bh(std::span<CandidatePeak> peaks, double alpha, PValueMode mode, double v, const NullLaws& laws) {
    compute_pvalues(peaks, mode, v, laws);
    std::vector<double> p(peaks.size());
    std::transform(peaks.begin(), peaks.end(), p.begin(), [](const CandidatePeak& c) { return *c.pvalue; });
    BhOutcome out = bh_procedure(p, alpha);
    for (std::size_t i = 0; i < peaks.size(); ++i) peaks[i].significant = out.rejected[i];
    out.height_threshold = bh_height_threshold(out, mode, v, laws);
    return out;
}

void TheoryParams::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (!(a1 >= 0.0)) throw DomainError("A1 must be non-negative");
    if (!(a2_gamma >= 0.0 && a2_gamma < 1.0)) throw DomainError("A2 must lie in [0, 1)");
    law.validate();
}

double u_star(const TheoryParams& params, double v) {
    params.validate();
    const double fv = tail_F(v, params.law);
    if (!(fv > 0.0)) throw DomainError("u_star: F(v) underflows");
    const double em_v = params.law.em0 * fv;
    const double target =
        params.alpha * params.a1 * fv / (params.a1 + em_v * (1.0 - params.a2_gamma) * (1.0 - params.alpha));
    return inverted_threshold(params, target);
}

double u_double_star(const TheoryParams& params, double v) {
    params.validate();
    if (!(v > 0.0)) throw DomainError("u_double_star requires v > 0");
    const double fv = tail_F(v, params.law);
    const double em_v = params.law.em0 * fv;
    const double beta = beta_factor(v, params.law, params.lambda_det);
    const double target = params.alpha * params.a1 * beta * fv /
                          (params.a1 + em_v * (1.0 - params.a2_gamma) * (1.0 - params.alpha * beta));
    return inverted_threshold(params, target);
}

double theoretical_fdr(const TheoryParams& params, FdrVariant variant) {
    params.validate();
    const double em = expected_maxima(params.law, variant.value);
    const double null_part = em * (1.0 - params.a2_gamma);
    const double denom = null_part + params.a1;
    if (!(denom > 0.0)) return 0.0;
    const double fraction = null_part / denom;
    switch (variant.kind) {
        case FdrVariant::Kind::FixedU: return fraction;
        case FdrVariant::Kind::BhExact: return params.alpha * fraction;
        case FdrVariant::Kind::BhOvershoot:
            return params.alpha * fraction * beta_factor(variant.value, params.law, params.lambda_det);
    }
    return fraction;
}

double power_approx(double u, double amplitude, double peak_height, double sigma_gamma) {
    if (!(sigma_gamma > 0.0)) throw DomainError("sigma_gamma must be positive");
    return std_normal_cdf((amplitude * peak_height - u) / sigma_gamma);
}

double snr(double gamma, double amplitude, double b, double nu, double sigma) {
    if (!(gamma >= 0.0) || !(nu >= 0.0) || !(b > 0.0) || !(sigma > 0.0)) {
        throw DomainError("snr: scale parameters must be positive");
    }
    const double g2 = gamma * gamma;
    if (!(g2 + nu * nu > 0.0)) throw DomainError("snr: gamma = nu = 0");
    return amplitude / (sigma * std::sqrt(std::numbers::pi)) * std::sqrt(g2 + nu * nu) / (g2 + b * b);
}

double optimal_gamma(double b, double nu) {
    if (!(b > 0.0) || !(nu >= 0.0)) throw DomainError("optimal_gamma: need b > 0 and nu >= 0");
    const double d = b * b - 2.0 * nu * nu;
    return d > 0.0 ? std::sqrt(d) : 0.0;
}

double optimal_v_objective(const TheoryParams& params, double v) {
    const double s = params.law.sigma_gamma;
    const double x = v / s;
    const double em_v = expected_maxima(params.law, v);
    const double beta = beta_factor(v, params.law, params.lambda_det);
    return hermite(1, x) * std::exp(-0.5 * x * x) /
           (params.a1 + em_v * (1.0 - params.a2_gamma) * (1.0 - params.alpha * beta));
}

double optimal_v(const TheoryParams& params, std::span<const double> v_grid) {
    if (v_grid.empty()) throw DomainError("optimal_v: empty grid");
    params.validate();
    for (std::size_t i = 0; i < v_grid.size(); ++i) {
        if (!(v_grid[i] > 0.0)) throw DomainError("optimal_v: grid values must be positive");
        if (i > 0 && !(v_grid[i] > v_grid[i - 1])) throw DomainError("optimal_v: grid must be increasing");
    }
    double best_v = v_grid[0];
    double best = optimal_v_objective(params, best_v);
    for (std::size_t i = 1; i < v_grid.size(); ++i) {
        const double value = optimal_v_objective(params, v_grid[i]);
        if (value > best) {
            best = value;
            best_v = v_grid[i];
        }
    }
    return best_v;
}

}  // namespace stem

#include "stem/field_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace stem {

namespace {

constexpr double kBoundaryEps = 1e-9;

std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
    const auto m = static_cast<std::ptrdiff_t>(n);
    i %= m;
    return static_cast<std::size_t>(i < 0 ? i + m : i);
}

void check_peak(const PeakSpec& p, std::size_t index) {
    if (!(p.amplitude > 0.0) || !(p.scale > 0.0) || !(p.truncation > 0.0)) {
        throw DomainError("peak " + std::to_string(index) +
                          ": amplitude, scale and truncation must be positive");
    }
}

struct SampleStats {
    double mean = 0.0;
    double var = 0.0;
};

// Two-pass sample mean / variance over the selected points.
template <typename Fn>
SampleStats sample_stats(const std::vector<std::size_t>& points, Fn&& value) {
    SampleStats s;
    for (std::size_t i : points) s.mean += value(i);
    s.mean /= static_cast<double>(points.size());
    for (std::size_t i : points) {
        const double d = value(i) - s.mean;
        s.var += d * d;
    }
    s.var /= static_cast<double>(points.size() - 1);
    return s;
}

}  // namespace

std::vector<double> gaussian_weights_1d(double bandwidth, double truncation, double spacing) {
    if (!(bandwidth > 0.0) || !(truncation > 0.0) || !(spacing > 0.0)) {
        throw DomainError("kernel bandwidth, truncation and spacing must be positive");
    }
    const auto half = static_cast<std::ptrdiff_t>(std::floor(bandwidth * truncation / spacing + kBoundaryEps));
    std::vector<double> w(static_cast<std::size_t>(2 * half + 1));
    double total = 0.0;
    for (std::ptrdiff_t k = -half; k <= half; ++k) {
        const double t = static_cast<double>(k) * spacing / bandwidth;
        const double value = std::exp(-0.5 * t * t);
        w[static_cast<std::size_t>(k + half)] = value;
        total += value;
    }
    for (double& value : w) value /= total;
    return w;
}

GridField render_signal(std::span<const PeakSpec> peaks, const GridGeometry& grid) {
    grid.validate();
    GridField mu(grid);
    const double x_max = grid.origin.x + static_cast<double>(grid.width - 1) * grid.spacing;
    const double y_max = grid.origin.y + static_cast<double>(grid.height - 1) * grid.spacing;

    for (std::size_t j = 0; j < peaks.size(); ++j) {
        const PeakSpec& p = peaks[j];
        check_peak(p, j);
        const double hw = p.half_width();
        if (p.center.x - hw < grid.origin.x - kBoundaryEps || p.center.x + hw > x_max + kBoundaryEps ||
            p.center.y - hw < grid.origin.y - kBoundaryEps || p.center.y + hw > y_max + kBoundaryEps) {
            throw DomainError("peak " + std::to_string(j) + ": support exceeds grid bounds");
        }
        const double norm = p.amplitude / (p.scale * p.scale) / (2.0 * std::numbers::pi);
        const auto c0 = static_cast<std::size_t>(std::ceil((p.center.x - hw - grid.origin.x) / grid.spacing - kBoundaryEps));
        const auto c1 = static_cast<std::size_t>(std::floor((p.center.x + hw - grid.origin.x) / grid.spacing + kBoundaryEps));
        const auto r0 = static_cast<std::size_t>(std::ceil((p.center.y - hw - grid.origin.y) / grid.spacing - kBoundaryEps));
        const auto r1 = static_cast<std::size_t>(std::floor((p.center.y + hw - grid.origin.y) / grid.spacing + kBoundaryEps));
        for (std::size_t r = r0; r <= r1; ++r) {
            for (std::size_t c = c0; c <= c1; ++c) {
                const Point2 t = grid.coords(r, c);
                const double dx = (t.x - p.center.x) / p.scale;
                const double dy = (t.y - p.center.y) / p.scale;
                mu(r, c) += norm * std::exp(-0.5 * (dx * dx + dy * dy));
            }
        }
    }
    return mu;
}

GridField generate_noise(const NoiseSpec& spec, const GridGeometry& grid) {
    grid.validate();
    if (!(spec.sigma > 0.0)) throw DomainError("noise sigma must be positive");
    if (!(spec.nu >= 0.0)) throw DomainError("noise nu must be non-negative");

    GridField z(grid);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, spec.sigma / grid.spacing);
    for (double& v : z.values) v = normal(rng);

    if (spec.nu > 0.0) {
        const auto w = gaussian_weights_1d(spec.nu, kNoiseKernelTruncation, grid.spacing);
        if (w.size() > 1) z = convolve_separable(z, w);
    }
    return z;
}

GridField convolve_separable(const GridField& field, std::span<const double> weights) {
    const std::size_t rows = field.height();
    const std::size_t cols = field.width();
    const std::size_t taps = weights.size();
    if (taps % 2 == 0) throw DomainError("separable weights must have odd length");
    if (taps > rows || taps > cols) {
        throw DomainError("kernel footprint (" + std::to_string(taps) + ") larger than grid");
    }
    const std::size_t half = taps / 2;

    GridField tmp(field.geometry());
    std::vector<double> line;

    line.resize(cols + 2 * half);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            line[i] = field(r, wrap(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(half), cols));
        }
        for (std::size_t c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (std::size_t k = 0; k < taps; ++k) acc += weights[k] * line[c + k];
            tmp(r, c) = acc;
        }
    }

    GridField out(field.geometry());
    line.resize(rows + 2 * half);
    for (std::size_t c = 0; c < cols; ++c) {
        for (std::size_t i = 0; i < line.size(); ++i) {
            line[i] = tmp(wrap(static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(half), rows), c);
        }
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (std::size_t k = 0; k < taps; ++k) acc += weights[k] * line[r + k];
            out(r, c) = acc;
        }
    }
    return out;
}

GridField smooth(const GridField& field, const KernelSpec& kernel, ConvolutionMethod method) {
    field.geometry().validate();
    if (!(kernel.gamma > 0.0) || !(kernel.truncation > 0.0)) {
        throw DomainError("kernel gamma and truncation must be positive");
    }
    const auto w = gaussian_weights_1d(kernel.gamma, kernel.truncation, field.spacing);
    if (w.size() > field.height() || w.size() > field.width()) {
        throw DomainError("kernel footprint (" + std::to_string(w.size()) + ") larger than grid");
    }
    if (method == ConvolutionMethod::Separable) return convolve_separable(field, w);

    const auto half = static_cast<std::ptrdiff_t>(w.size() / 2);
    GridField out(field.geometry());
    for (std::size_t r = 0; r < field.height(); ++r) {
        for (std::size_t c = 0; c < field.width(); ++c) {
            double acc = 0.0;
            for (std::ptrdiff_t i = -half; i <= half; ++i) {
                const std::size_t rr = wrap(static_cast<std::ptrdiff_t>(r) + i, field.height());
                for (std::ptrdiff_t j = -half; j <= half; ++j) {
                    const std::size_t cc = wrap(static_cast<std::ptrdiff_t>(c) + j, field.width());
                    acc += w[static_cast<std::size_t>(i + half)] * w[static_cast<std::size_t>(j + half)] *
                           field(rr, cc);
                }
            }
            out(r, c) = acc;
        }
    }
    return out;
}

FieldMoments closed_form_moments(double gamma, double nu, double sigma) {
    if (!(gamma >= 0.0) || !(nu >= 0.0)) throw DomainError("gamma and nu must be non-negative");
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    const double xi2 = gamma * gamma + nu * nu;
    if (!(xi2 > 0.0)) throw DomainError("gamma = nu = 0: field has no smoothness");

    FieldMoments m;
    m.sigma_gamma = sigma / std::sqrt(4.0 * std::numbers::pi * xi2);
    m.rho1 = -1.0 / (4.0 * xi2);
    m.rho2 = 1.0 / (16.0 * xi2 * xi2);
    m.kappa = -m.rho1 / std::sqrt(m.rho2);
    const double grad_var = -2.0 * m.rho1 * m.sigma_gamma * m.sigma_gamma;
    m.lambda_det = grad_var * grad_var;
    return m;
}

FieldMoments estimate_moments(const GridField& field, const Mask* mask) {
    field.geometry().validate();
    const std::size_t rows = field.height();
    const std::size_t cols = field.width();
    if (rows < 5 || cols < 5) throw DomainError("moment estimation needs at least a 5x5 grid");
    if (mask && (mask->rows() != rows || mask->cols() != cols)) {
        throw DomainError("mask shape differs from field shape");
    }

    std::vector<std::size_t> points;
    points.reserve(field.values.size());
    for (std::size_t i = 0; i < field.values.size(); ++i) {
        if (!mask || (*mask)[i]) points.push_back(i);
    }
    if (points.size() < 1000) {
        throw DomainError("moment estimation needs at least 1000 sample points, got " +
                          std::to_string(points.size()));
    }

    const double h = field.spacing;
    auto at = [&](std::size_t i, std::ptrdiff_t dr, std::ptrdiff_t dc) {
        const auto r = static_cast<std::ptrdiff_t>(i / cols) + dr;
        const auto c = static_cast<std::ptrdiff_t>(i % cols) + dc;
        return field(wrap(r, rows), wrap(c, cols));
    };
    // Fourth-order central differences along one axis (periodic).
    auto d1 = [&](std::size_t i, std::ptrdiff_t dr, std::ptrdiff_t dc) {
        return (-at(i, 2 * dr, 2 * dc) + 8.0 * at(i, dr, dc) - 8.0 * at(i, -dr, -dc) + at(i, -2 * dr, -2 * dc)) /
               (12.0 * h);
    };
    auto d2 = [&](std::size_t i, std::ptrdiff_t dr, std::ptrdiff_t dc) {
        return (-at(i, 2 * dr, 2 * dc) + 16.0 * at(i, dr, dc) - 30.0 * at(i, 0, 0) + 16.0 * at(i, -dr, -dc) -
                at(i, -2 * dr, -2 * dc)) /
               (12.0 * h * h);
    };

    const auto z = sample_stats(points, [&](std::size_t i) { return field.values[i]; });
    if (!(z.var > 0.0)) throw DomainError("field has zero variance");

    const auto gx = sample_stats(points, [&](std::size_t i) { return d1(i, 0, 1); });
    const auto gy = sample_stats(points, [&](std::size_t i) { return d1(i, 1, 0); });
    const auto hxx = sample_stats(points, [&](std::size_t i) { return d2(i, 0, 1); });
    const auto hyy = sample_stats(points, [&](std::size_t i) { return d2(i, 1, 0); });
    double cov_xy = 0.0;
    for (std::size_t i : points) cov_xy += (d1(i, 0, 1) - gx.mean) * (d1(i, 1, 0) - gy.mean);
    cov_xy /= static_cast<double>(points.size() - 1);

    FieldMoments m;
    m.sigma_gamma = std::sqrt(z.var);
    m.rho1 = -0.5 * (gx.var + gy.var) / (2.0 * z.var);
    m.rho2 = 0.5 * (hxx.var + hyy.var) / (12.0 * z.var);
    m.kappa = m.rho2 > 0.0 ? -m.rho1 / std::sqrt(m.rho2) : 0.0;
    m.lambda_det = gx.var * gy.var - cov_xy * cov_xy;
    return m;
}

double fit_kernel_bandwidth(const GridField& templ) {
    templ.validate();
    const auto& v = templ.values;
    const auto top = std::max_element(v.begin(), v.end());
    const double peak = *top;
    if (std::count(v.begin(), v.end(), peak) != 1 || !(peak > 0.0)) {
        throw DomainError("template must have a unique positive maximum");
    }
    const auto idx = static_cast<std::size_t>(top - v.begin());
    const double r0 = static_cast<double>(idx / templ.width());
    const double c0 = static_cast<double>(idx % templ.width());
    const double h = templ.spacing;

    auto sse = [&](double gamma) {
        double total = 0.0;
        for (std::size_t r = 0; r < templ.height(); ++r) {
            for (std::size_t c = 0; c < templ.width(); ++c) {
                const double dy = (static_cast<double>(r) - r0) * h;
                const double dx = (static_cast<double>(c) - c0) * h;
                const double model = std::exp(-(dx * dx + dy * dy) / (2.0 * gamma * gamma));
                const double diff = templ(r, c) / peak - model;
                total += diff * diff;
            }
        }
        return total;
    };

    // Golden-section search over (0.1, half the template width].
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.1;
    double hi = 0.5 * static_cast<double>(std::min(templ.width(), templ.height())) * h;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = sse(x1);
    double f2 = sse(x2);
    while (hi - lo > 1e-7) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = sse(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = sse(x2);
        }
    }
    return 0.5 * (lo + hi);
}

double smoothed_peak_height(double scale, double gamma) {
    return 1.0 / (2.0 * std::numbers::pi * (gamma * gamma + scale * scale));
}

}  // namespace stem

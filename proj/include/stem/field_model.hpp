#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "stem/grid.hpp"

namespace stem {

/// Truncated isotropic Gaussian peak a * (1/b^2) phi_2((t - center)/b) on the
/// box (t - center)/b in [-c, c]^2.
struct PeakSpec {
    double amplitude = 1.0;
    double scale = 1.0;
    double truncation = 3.0;
    Point2 center{};

    /// Half-width of the support box in model units (b * c).
    double half_width() const { return scale * truncation; }
};

/// Gaussian noise: white noise of level sigma convolved with (1/nu^2) phi_2(t/nu).
/// nu == 0 means white noise.
struct NoiseSpec {
    double sigma = 1.0;
    double nu = 0.0;
    std::uint64_t seed = 0;
};

/// Gaussian smoothing kernel (1/gamma^2) phi_2(t/gamma) truncated to [-gamma d, gamma d]^2.
struct KernelSpec {
    double gamma = 3.0;
    double truncation = 3.0;
};

/// Second-order moments of an isotropic smoothed noise field.
struct FieldMoments {
    double sigma_gamma = 0.0;
    double rho1 = 0.0;  // rho'(0), negative
    double rho2 = 0.0;  // rho''(0), positive
    double kappa = 0.0;
    double lambda_det = 0.0;  // det Cov(grad z)
};

enum class ConvolutionMethod { Separable, Direct };

/// Noise kernels are truncated at this many multiples of nu.
inline constexpr double kNoiseKernelTruncation = 4.0;

/// Normalized 1-D samples of a Gaussian of the given bandwidth at offsets
/// k * spacing, |k * spacing| <= bandwidth * truncation. The outer product of this
/// vector with itself is the renormalized 2-D kernel.
std::vector<double> gaussian_weights_1d(double bandwidth, double truncation, double spacing);

GridField render_signal(std::span<const PeakSpec> peaks, const GridGeometry& grid);

GridField generate_noise(const NoiseSpec& spec, const GridGeometry& grid);

/// Periodic convolution with the truncated, renormalized Gaussian kernel.
GridField smooth(const GridField& field, const KernelSpec& kernel,
                 ConvolutionMethod method = ConvolutionMethod::Separable);

/// Periodic convolution with separable 1-D weights (centered, odd length).
GridField convolve_separable(const GridField& field, std::span<const double> weights);

FieldMoments closed_form_moments(double gamma, double nu, double sigma);

/// Moment estimates from sample variances of the field and of its finite-difference
/// derivatives. The optional mask selects the sample points (at least 1000 of them).
FieldMoments estimate_moments(const GridField& field, const Mask* mask = nullptr);

/// Least-squares Gaussian bandwidth of a single-peak template.
double fit_kernel_bandwidth(const GridField& templ);

/// Height of the smoothed unit-action peak at its center, ignoring truncation:
/// the convolution of Gaussians with variances gamma^2 and b^2 evaluated at 0.
double smoothed_peak_height(double scale, double gamma);

}  // namespace stem

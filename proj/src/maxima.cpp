#include "stem/maxima.hpp"

#include <algorithm>
#include <cmath>

namespace stem {

namespace {

constexpr double kBoundaryEps = 1e-9;

// Grid points whose model coordinates lie in the closed box center +/- half_width.
void fill_box(Mask& mask, const GridGeometry& grid, Point2 center, double half_width) {
    for (std::size_t r = 0; r < grid.height; ++r) {
        const double y = grid.origin.y + static_cast<double>(r) * grid.spacing;
        if (std::abs(y - center.y) > half_width + kBoundaryEps) continue;
        for (std::size_t c = 0; c < grid.width; ++c) {
            const double x = grid.origin.x + static_cast<double>(c) * grid.spacing;
            if (std::abs(x - center.x) <= half_width + kBoundaryEps) mask(r, c) = 1;
        }
    }
}

}  // namespace

std::string_view to_string(Region region) {
    switch (region) {
        case Region::Signal: return "signal";
        case Region::Transition: return "transition";
        case Region::Null: return "null";
        case Region::Unknown: break;
    }
    return "unknown";
}

std::vector<CandidatePeak> find_local_maxima(const GridField& field, double v) {
    field.geometry().validate();
    const std::size_t rows = field.height();
    const std::size_t cols = field.width();
    const GridGeometry geometry = field.geometry();

    std::vector<CandidatePeak> out;
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t up = (r + rows - 1) % rows;
        const std::size_t down = (r + 1) % rows;
        for (std::size_t c = 0; c < cols; ++c) {
            const double h = field(r, c);
            if (!(h > v)) continue;
            const std::size_t left = (c + cols - 1) % cols;
            const std::size_t right = (c + 1) % cols;
            if (h > field(up, left) && h > field(up, c) && h > field(up, right) && h > field(r, left) &&
                h > field(r, right) && h > field(down, left) && h > field(down, c) && h > field(down, right)) {
                CandidatePeak p;
                p.row = r;
                p.col = c;
                p.model_coords = geometry.coords(r, c);
                p.height = h;
                out.push_back(p);
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const CandidatePeak& a, const CandidatePeak& b) {
        if (a.height != b.height) return a.height > b.height;
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });
    return out;
}

Region RegionMasks::region_at(std::size_t row, std::size_t col) const {
    if (signal(row, col)) return Region::Signal;
    if (transition(row, col)) return Region::Transition;
    return Region::Null;
}

double RegionMasks::smoothed_signal_fraction() const {
    if (smoothed_signal.size() == 0) return 0.0;
    const auto n = std::count(smoothed_signal.begin(), smoothed_signal.end(), std::uint8_t{1});
    return static_cast<double>(n) / static_cast<double>(smoothed_signal.size());
}

RegionMasks build_region_masks(std::span<const PeakSpec> peaks, const KernelSpec& kernel,
                               const GridGeometry& grid) {
    grid.validate();
    if (!(kernel.gamma > 0.0) || !(kernel.truncation > 0.0)) {
        throw DomainError("kernel gamma and truncation must be positive");
    }
    RegionMasks m;
    m.signal = Mask(grid.height, grid.width);
    m.smoothed_signal = Mask(grid.height, grid.width);
    m.per_peak.reserve(peaks.size());

    const double dilation = kernel.gamma * kernel.truncation;
    std::vector<Mask> dilated;
    dilated.reserve(peaks.size());
    for (const PeakSpec& p : peaks) {
        Mask support(grid.height, grid.width);
        fill_box(support, grid, p.center, p.half_width());
        Mask wide(grid.height, grid.width);
        fill_box(wide, grid, p.center, p.half_width() + dilation);
        for (std::size_t i = 0; i < support.size(); ++i) {
            m.signal[i] |= support[i];
            m.smoothed_signal[i] |= wide[i];
        }
        m.per_peak.push_back(std::move(support));
        dilated.push_back(std::move(wide));
    }

    for (std::size_t a = 0; a < peaks.size(); ++a) {
        for (std::size_t b = a + 1; b < peaks.size(); ++b) {
            const double gap_x = std::abs(peaks[a].center.x - peaks[b].center.x);
            const double gap_y = std::abs(peaks[a].center.y - peaks[b].center.y);
            const double reach = peaks[a].half_width() + peaks[b].half_width() + 2.0 * dilation;
            if (gap_x <= reach && gap_y <= reach) {
                m.warnings.push_back("smoothed supports of peaks " + std::to_string(a) + " and " +
                                     std::to_string(b) + " overlap");
            }
        }
    }

    m.transition = Mask(grid.height, grid.width);
    m.null_region = Mask(grid.height, grid.width);
    for (std::size_t i = 0; i < m.signal.size(); ++i) {
        m.transition[i] = m.smoothed_signal[i] && !m.signal[i];
        m.null_region[i] = !m.signal[i];
    }
    return m;
}

std::size_t Classification::peaks_hit() const {
    return static_cast<std::size_t>(std::count(per_peak_hit.begin(), per_peak_hit.end(), true));
}

Classification classify_peaks(std::span<const CandidatePeak> peaks, const RegionMasks& masks) {
    Classification out;
    out.per_peak_hit.assign(masks.peak_count(), false);
    for (const CandidatePeak& p : peaks) {
        if (masks.null_region(p.row, p.col)) {
            ++out.false_discoveries;
            continue;
        }
        ++out.true_discoveries;
        for (std::size_t j = 0; j < masks.per_peak.size(); ++j) {
            if (masks.per_peak[j](p.row, p.col)) out.per_peak_hit[j] = true;
        }
    }
    return out;
}

void label_regions(std::span<CandidatePeak> peaks, const RegionMasks& masks) {
    for (CandidatePeak& p : peaks) p.region = masks.region_at(p.row, p.col);
}

}  // namespace stem

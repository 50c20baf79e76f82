#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stem/field_model.hpp"
#include "stem/grid.hpp"

namespace stem {

enum class Region { Signal, Transition, Null, Unknown };

std::string_view to_string(Region region);

struct CandidatePeak {
    std::size_t row = 0;
    std::size_t col = 0;
    Point2 model_coords{};
    double height = 0.0;
    std::optional<double> pvalue;
    Region region = Region::Unknown;
    bool significant = false;
};

/// Local maxima of `field` strictly greater than all 8 periodic neighbours and
/// strictly above `v`, sorted by descending height (ties by grid index).
std::vector<CandidatePeak> find_local_maxima(const GridField& field,
                                             double v = -std::numeric_limits<double>::infinity());

struct RegionMasks {
    Mask signal;           // union of S_j
    Mask smoothed_signal;  // union of S_j dilated by the kernel support
    Mask transition;       // smoothed_signal minus signal
    Mask null_region;      // complement of signal
    std::vector<Mask> per_peak;
    std::vector<std::string> warnings;

    std::size_t peak_count() const { return per_peak.size(); }

    Region region_at(std::size_t row, std::size_t col) const;

    /// |S_1,gamma| / |U(L)|, counted on the grid.
    double smoothed_signal_fraction() const;
};

/// Box supports of the peaks and their Minkowski dilation by [-gamma d, gamma d]^2.
/// Overlapping dilated supports are reported in `warnings`, not rejected.
RegionMasks build_region_masks(std::span<const PeakSpec> peaks, const KernelSpec& kernel,
                               const GridGeometry& grid);

struct Classification {
    std::size_t false_discoveries = 0;  // V
    std::size_t true_discoveries = 0;   // W
    std::vector<bool> per_peak_hit;

    std::size_t rejections() const { return false_discoveries + true_discoveries; }
    std::size_t peaks_hit() const;
};

/// Classifies every peak passed in (callers pass the significant ones).
Classification classify_peaks(std::span<const CandidatePeak> peaks, const RegionMasks& masks);

/// Sets `region` on each candidate from the masks.
void label_regions(std::span<CandidatePeak> peaks, const RegionMasks& masks);

}  // namespace stem

#include <doctest.h>

#include "stem/maxima.hpp"

using namespace stem;

namespace {

GridField zeros(std::size_t n) { return GridField(GridGeometry{n, n, 1.0, {}}); }

}  // namespace

TEST_CASE("strict eight-neighbour maxima sorted by height") {
    GridField f = zeros(8);
    f.values(2, 2) = 3.0;
    f.values(5, 6) = 5.0;
    f.values(6, 1) = 1.0;
    const auto peaks = find_local_maxima(f);
    REQUIRE(peaks.size() == 3);
    CHECK(peaks[0].height == 5.0);
    CHECK(peaks[0].row == 5);
    CHECK(peaks[0].col == 6);
    CHECK(peaks[0].model_coords.x == 6.0);
    CHECK(peaks[0].model_coords.y == 5.0);
    CHECK(peaks[1].height == 3.0);
    CHECK(peaks[2].height == 1.0);
    CHECK(find_local_maxima(f, 1.0).size() == 2);  // strictly above v
    CHECK(find_local_maxima(f, 5.0).empty());
}

TEST_CASE("diagonal neighbours count and plateaus are not maxima") {
    GridField f = zeros(6);
    f.values(2, 2) = 2.0;
    f.values(3, 3) = 2.5;
    auto peaks = find_local_maxima(f);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].row == 3);

    GridField g = zeros(6);
    g.values(2, 2) = 1.0;
    g.values(2, 3) = 1.0;
    CHECK(find_local_maxima(g).empty());
}

TEST_CASE("neighbourhoods wrap around the torus") {
    GridField f = zeros(6);
    f.values(0, 0) = 2.0;
    f.values(5, 5) = 3.0;
    const auto peaks = find_local_maxima(f);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].row == 5);
    CHECK(peaks[0].col == 5);
}

TEST_CASE("equal heights are ordered by grid index") {
    GridField f = zeros(9);
    f.values(6, 1) = 1.0;
    f.values(1, 6) = 1.0;
    f.values(1, 2) = 1.0;
    const auto peaks = find_local_maxima(f);
    REQUIRE(peaks.size() == 3);
    CHECK(peaks[0].row == 1);
    CHECK(peaks[0].col == 2);
    CHECK(peaks[1].col == 6);
    CHECK(peaks[2].row == 6);
}

TEST_CASE("region masks and classification") {
    const GridGeometry geo{60, 60, 1.0, {}};
    const std::vector<PeakSpec> peaks{{1.0, 2.0, 2.0, {15.0, 15.0}}, {1.0, 2.0, 2.0, {45.0, 40.0}}};
    const RegionMasks m = build_region_masks(peaks, KernelSpec{1.0, 3.0}, geo);
    CHECK(m.warnings.empty());
    CHECK(m.peak_count() == 2);
    // each support is a 9 x 9 box, each dilated support a 15 x 15 box
    CHECK(m.smoothed_signal_fraction() == doctest::Approx(2.0 * 225.0 / 3600.0));
    CHECK(m.region_at(15, 15) == Region::Signal);
    CHECK(m.region_at(15, 19) == Region::Signal);
    CHECK(m.region_at(15, 20) == Region::Transition);
    CHECK(m.region_at(15, 22) == Region::Transition);
    CHECK(m.region_at(15, 23) == Region::Null);
    CHECK(m.region_at(40, 45) == Region::Signal);  // row is y

    std::vector<CandidatePeak> found(4);
    found[0].row = 15; found[0].col = 15;   // peak 0
    found[1].row = 14; found[1].col = 16;   // peak 0 again
    found[2].row = 15; found[2].col = 21;   // transition: false
    found[3].row = 55; found[3].col = 5;    // null: false
    const Classification c = classify_peaks(found, m);
    CHECK(c.false_discoveries == 2);
    CHECK(c.true_discoveries == 2);
    CHECK(c.rejections() == 4);
    CHECK(c.per_peak_hit == std::vector<bool>{true, false});
    CHECK(c.peaks_hit() == 1);

    label_regions(found, m);
    CHECK(found[2].region == Region::Transition);
    CHECK(to_string(found[3].region) == "null");
    CHECK(to_string(Region::Unknown) == "unknown");
}

TEST_CASE("overlapping smoothed supports produce a warning") {
    const GridGeometry geo{60, 60, 1.0, {}};
    const std::vector<PeakSpec> peaks{{1.0, 2.0, 2.0, {20.0, 20.0}}, {1.0, 2.0, 2.0, {32.0, 20.0}}};
    const RegionMasks m = build_region_masks(peaks, KernelSpec{2.0, 3.0}, geo);
    CHECK(m.warnings.size() == 1);
}

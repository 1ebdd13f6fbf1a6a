#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "core/types.hpp"

namespace photonlab {

// Binned coincidence counts over signed delays t_b - t_a. Bins are uniform,
// half-open [center - bin/2, center + bin/2), with the center bin centered on
// zero delay. Indices run 0 .. 2*half_bins with the zero bin at half_bins.
struct CorrelationHistogram {
    std::uint64_t bin_ps = 1;
    std::uint64_t range_ps = 0;
    std::int64_t half_bins = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t n_a = 0;
    std::uint64_t n_b = 0;
    std::uint64_t duration_ps = 0;

    std::int64_t bin_center_ps(std::size_t index) const {
        return (static_cast<std::int64_t>(index) - half_bins) * static_cast<std::int64_t>(bin_ps);
    }
    std::uint64_t total_counts() const;
};

// Integrated peak areas of a pulsed correlation histogram: peak m collects the
// bins whose centers lie within +-window/2 of m*T. For window == T the peaks
// tile the histogram exactly.
struct PeakAreas {
    std::uint64_t period_ps = 0;
    std::uint64_t window_ps = 0;
    std::map<std::int64_t, std::uint64_t> areas;

    std::uint64_t area(std::int64_t peak) const {
        auto it = areas.find(peak);
        return it == areas.end() ? 0 : it->second;
    }
};

// Cross-correlates two time-sorted tag streams into a delay histogram over
// +-range_ps. Equivalent to the all-pairs double loop; implemented as a
// two-pointer sweep, chunk-parallel over the first stream with an exact merge
// (identical result for any thread count). When both spans alias the same
// array, self-pairs (i == j) are excluded but distinct same-channel pairs are
// kept, matching HBT semantics for a split stream.
// Throws std::invalid_argument on unsorted input or bin_ps == 0.
CorrelationHistogram correlate(std::span<const TimeTag> tags_a, std::span<const TimeTag> tags_b,
                               std::uint64_t bin_ps, std::uint64_t range_ps, int threads = 1);

// correlate() with bin = T and bins centered on multiples of T; used for the
// long-range (ms-scale) bunching envelope.
CorrelationHistogram coarse_correlate(std::span<const TimeTag> tags_a,
                                      std::span<const TimeTag> tags_b, std::uint64_t period_ps,
                                      std::uint64_t range_ps, int threads = 1);

// Per-peak integration. Requires window <= T, window divisible by the
// histogram bin, and T divisible by the bin (so windows align with bins).
PeakAreas peak_areas(const CorrelationHistogram& hist, std::uint64_t period_ps,
                     std::uint64_t window_ps);

// Start-stop histogram against an ideal trigger: bins tag time modulo the
// trigger period into [0, range) with the given bin width.
std::vector<std::uint64_t> tcspc(std::span<const TimeTag> tags, std::uint64_t trigger_period_ps,
                                 std::uint64_t range_ps, std::uint64_t bin_ps);

}  // namespace photonlab

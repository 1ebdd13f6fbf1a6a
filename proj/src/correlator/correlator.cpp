#include "correlator/correlator.hpp"

#include <algorithm>
#include <stdexcept>

#include "core/parallel.hpp"

namespace photonlab {

namespace {

bool is_time_sorted(std::span<const TimeTag> tags) {
    for (std::size_t i = 1; i < tags.size(); ++i) {
        if (tags[i].time_ps < tags[i - 1].time_ps) return false;
    }
    return true;
}

// sign-symmetric bin index: floor((2|delta| + bin) / (2 bin)) with the sign
// restored. Keeps correlate(A,B) exactly mirror-equal to correlate(B,A) for
// any integer delays; the zero bin is centered on zero.
inline std::int64_t delay_bin_index(std::int64_t delta, std::int64_t bin) {
    const std::int64_t mag = delta < 0 ? -delta : delta;
    const std::int64_t idx = (2 * mag + bin) / (2 * bin);
    return delta < 0 ? -idx : idx;
}

void correlate_block(std::span<const TimeTag> a, std::size_t a_begin, std::size_t a_end,
                     std::span<const TimeTag> b, bool exclude_self, std::int64_t bin,
                     std::int64_t range, std::int64_t half_bins,
                     std::vector<std::uint64_t>& counts) {
    std::size_t lo = 0;
    for (std::size_t i = a_begin; i < a_end; ++i) {
        const std::int64_t ta = static_cast<std::int64_t>(a[i].time_ps);
        while (lo < b.size() && static_cast<std::int64_t>(b[lo].time_ps) < ta - range) ++lo;
        for (std::size_t j = lo; j < b.size(); ++j) {
            const std::int64_t tb = static_cast<std::int64_t>(b[j].time_ps);
            if (tb > ta + range) break;
            if (exclude_self && j == i) continue;
            const std::int64_t idx = delay_bin_index(tb - ta, bin) + half_bins;
            ++counts[static_cast<std::size_t>(idx)];
        }
    }
}

}  // namespace

std::uint64_t CorrelationHistogram::total_counts() const {
    std::uint64_t s = 0;
    for (std::uint64_t c : counts) s += c;
    return s;
}

CorrelationHistogram correlate(std::span<const TimeTag> tags_a, std::span<const TimeTag> tags_b,
                               std::uint64_t bin_ps, std::uint64_t range_ps, int threads) {
    if (bin_ps == 0) throw std::invalid_argument("correlate: bin_ps must be > 0");
    if (!is_time_sorted(tags_a) || !is_time_sorted(tags_b)) {
        throw std::invalid_argument("correlate: input tag streams must be time-sorted");
    }
    const bool same_stream =
        tags_a.data() == tags_b.data() && tags_a.size() == tags_b.size();

    CorrelationHistogram hist;
    hist.bin_ps = bin_ps;
    hist.range_ps = range_ps;
    const std::int64_t bin = static_cast<std::int64_t>(bin_ps);
    const std::int64_t range = static_cast<std::int64_t>(range_ps);
    hist.half_bins = delay_bin_index(range, bin);
    hist.counts.assign(static_cast<std::size_t>(2 * hist.half_bins + 1), 0);
    hist.n_a = tags_a.size();
    hist.n_b = tags_b.size();
    TimePs t_max = 0;
    if (!tags_a.empty()) t_max = tags_a.back().time_ps;
    if (!tags_b.empty()) t_max = std::max(t_max, tags_b.back().time_ps);
    hist.duration_ps = t_max;

    if (tags_a.empty() || tags_b.empty()) return hist;

    threads = std::max(1, threads);
    constexpr std::size_t kChunk = 1 << 15;
    const std::uint64_t n_chunks = (tags_a.size() + kChunk - 1) / kChunk;
    if (threads == 1 || n_chunks == 1) {
        correlate_block(tags_a, 0, tags_a.size(), tags_b, same_stream, bin, range, hist.half_bins,
                        hist.counts);
        return hist;
    }

    ordered_parallel<std::vector<std::uint64_t>>(
        n_chunks, threads,
        [&](std::uint64_t c) {
            std::vector<std::uint64_t> part(hist.counts.size(), 0);
            const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
            const std::size_t end = std::min(begin + kChunk, tags_a.size());
            correlate_block(tags_a, begin, end, tags_b, same_stream, bin, range, hist.half_bins,
                            part);
            return part;
        },
        [&](std::uint64_t, std::vector<std::uint64_t>&& part) {
            for (std::size_t i = 0; i < part.size(); ++i) hist.counts[i] += part[i];
        });
    return hist;
}

CorrelationHistogram coarse_correlate(std::span<const TimeTag> tags_a,
                                      std::span<const TimeTag> tags_b, std::uint64_t period_ps,
                                      std::uint64_t range_ps, int threads) {
    if (period_ps == 0) throw std::invalid_argument("coarse_correlate: period must be > 0");
    return correlate(tags_a, tags_b, period_ps, range_ps, threads);
}

PeakAreas peak_areas(const CorrelationHistogram& hist, std::uint64_t period_ps,
                     std::uint64_t window_ps) {
    if (window_ps == 0 || window_ps > period_ps) {
        throw std::invalid_argument("peak_areas: require 0 < window <= period");
    }
    if (window_ps % hist.bin_ps != 0 || period_ps % hist.bin_ps != 0) {
        throw std::invalid_argument("peak_areas: histogram bin must divide window and period");
    }
    PeakAreas out;
    out.period_ps = period_ps;
    out.window_ps = window_ps;
    const std::int64_t period = static_cast<std::int64_t>(period_ps);
    const std::int64_t window = static_cast<std::int64_t>(window_ps);
    const bool full_window = window_ps == period_ps;
    for (std::size_t i = 0; i < hist.counts.size(); ++i) {
        if (hist.counts[i] == 0) continue;
        const std::int64_t c = hist.bin_center_ps(i);
        const std::int64_t m = delay_bin_index(c, period);
        const std::int64_t off = c - m * period;
        // every bin belongs to exactly one peak, so the full window tiles;
        // narrower windows cut symmetrically around each peak center
        if (full_window || 2 * (off < 0 ? -off : off) < window) out.areas[m] += hist.counts[i];
    }
    return out;
}

std::vector<std::uint64_t> tcspc(std::span<const TimeTag> tags, std::uint64_t trigger_period_ps,
                                 std::uint64_t range_ps, std::uint64_t bin_ps) {
    if (trigger_period_ps == 0 || bin_ps == 0) {
        throw std::invalid_argument("tcspc: period and bin must be > 0");
    }
    if (!is_time_sorted(tags)) throw std::invalid_argument("tcspc: input must be time-sorted");
    const std::size_t n_bins = static_cast<std::size_t>((range_ps + bin_ps - 1) / bin_ps);
    std::vector<std::uint64_t> hist(n_bins, 0);
    for (const TimeTag& tag : tags) {
        const std::uint64_t u = tag.time_ps % trigger_period_ps;
        if (u < range_ps) ++hist[static_cast<std::size_t>(u / bin_ps)];
    }
    return hist;
}

}  // namespace photonlab

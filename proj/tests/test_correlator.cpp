#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "core/rng.hpp"
#include "correlator/correlator.hpp"
#include "testsupport.hpp"

using namespace photonlab;

namespace {

std::vector<TimeTag> random_tags(std::uint64_t seed, std::uint64_t unit, std::size_t n,
                                 TimePs span) {
    RandomStream rng(seed, Stream::misc, unit);
    std::vector<TimeTag> tags(n);
    for (auto& t : tags) {
        t.channel = 0;
        t.time_ps = static_cast<TimePs>(rng.uniform() * static_cast<double>(span));
    }
    std::sort(tags.begin(), tags.end(),
              [](const TimeTag& a, const TimeTag& b) { return a.time_ps < b.time_ps; });
    return tags;
}

}  // namespace

TEST_CASE("single pair lands in the documented edge bin") {
    const std::vector<TimeTag> a = {{0, 0}};
    const std::vector<TimeTag> b = {{1, 100}};
    const CorrelationHistogram h = correlate(a, b, 10, 100);
    CHECK(h.total_counts() == 1);
    // delay +100 ps with 10 ps bins: bin centered at +100 covering [95, 105)
    const std::size_t idx = static_cast<std::size_t>(h.half_bins + 10);
    CHECK(h.counts.at(idx) == 1);
    CHECK(h.bin_center_ps(idx) == 100);
}

TEST_CASE("empty input produces an all-zero histogram") {
    const std::vector<TimeTag> a;
    const std::vector<TimeTag> b = {{1, 50}, {1, 60}};
    const CorrelationHistogram h = correlate(a, b, 5, 100);
    CHECK(h.total_counts() == 0);
}

TEST_CASE("unsorted input is rejected") {
    const std::vector<TimeTag> bad = {{0, 100}, {0, 50}};
    const std::vector<TimeTag> ok = {{0, 10}};
    CHECK_THROWS_AS((void)correlate(bad, ok, 10, 100), std::invalid_argument);
    CHECK_THROWS_AS((void)correlate(ok, bad, 10, 100), std::invalid_argument);
}

TEST_CASE("bit-identical to the brute-force double loop on randomized instances") {
    for (std::uint64_t inst = 0; inst < 25; ++inst) {
        RandomStream meta(99, Stream::misc, inst);
        const std::size_t na = 1 + static_cast<std::size_t>(meta.uniform() * 800);
        const std::size_t nb = 1 + static_cast<std::size_t>(meta.uniform() * 800);
        const std::uint64_t bin = 1 + static_cast<std::uint64_t>(meta.uniform() * 97);
        const std::uint64_t range = bin + static_cast<std::uint64_t>(meta.uniform() * 5000);
        const auto a = random_tags(7, 2 * inst, na, 200000);
        const auto b = random_tags(7, 2 * inst + 1, nb, 200000);
        const auto fast = correlate(a, b, bin, range, 2);
        const auto slow = oracle::brute_force_correlate(a, b, bin, range);
        REQUIRE(fast.counts.size() == slow.counts.size());
        CHECK(fast.counts == slow.counts);
        CHECK(fast.total_counts() == slow.total_counts());
    }
}

TEST_CASE("mirror symmetry: correlate(A,B) equals correlate(B,A) with negated axis") {
    const auto a = random_tags(3, 0, 500, 1000000);
    const auto b = random_tags(3, 1, 400, 1000000);
    const auto ab = correlate(a, b, 16, 4096);
    const auto ba = correlate(b, a, 16, 4096);
    REQUIRE(ab.counts.size() == ba.counts.size());
    const std::size_t n = ab.counts.size();
    for (std::size_t i = 0; i < n; ++i) CHECK(ab.counts[i] == ba.counts[n - 1 - i]);
}

TEST_CASE("chunk-parallel correlation merges bit-identically") {
    const auto a = random_tags(11, 0, 150000, 3000000000ull);
    const auto b = random_tags(11, 1, 150000, 3000000000ull);
    const auto t1 = correlate(a, b, 64, 100000, 1);
    const auto t4 = correlate(a, b, 64, 100000, 4);
    CHECK(t1.counts == t4.counts);
}

TEST_CASE("autocorrelation excludes self-pairs but keeps distinct pairs") {
    const std::vector<TimeTag> a = {{0, 100}, {0, 100}, {0, 250}};
    const auto h = correlate(a, a, 10, 1000);
    // 3*3 - 3 self pairs = 6
    CHECK(h.total_counts() == 6);
    const auto o = oracle::brute_force_correlate(a, a, 10, 1000, true);
    CHECK(h.counts == o.counts);
}

TEST_CASE("peak areas: delta comb and flat histogram") {
    std::vector<TimeTag> a, b;
    // comb: coincidences exactly at multiples of T
    const std::uint64_t T = 6570;
    a.push_back({0, 10 * T});
    for (int m = -3; m <= 3; ++m) {
        const int copies = std::abs(m) + (m == 0 ? 1 : 0);
        for (int k = 0; k < copies; ++k) {
            b.push_back({1, static_cast<TimePs>(static_cast<std::int64_t>(10 * T) +
                                                m * static_cast<std::int64_t>(T))});
        }
    }
    std::sort(b.begin(), b.end(),
              [](const TimeTag& x, const TimeTag& y) { return x.time_ps < y.time_ps; });
    const auto h = correlate(a, b, 10, 4 * T);
    const auto areas = peak_areas(h, T, T);
    for (int m = -3; m <= 3; ++m) {
        CHECK(areas.area(m) == static_cast<std::uint64_t>(std::abs(m)) + (m == 0 ? 1 : 0));
    }

    // flat histogram: equal windows hold equal counts
    CorrelationHistogram flat;
    flat.bin_ps = 10;
    flat.range_ps = 32850;  // 5 T
    flat.half_bins = 3285 + 0;  // matches bin convention: floor((2R+b)/2b)
    flat.half_bins = 3285;
    flat.counts.assign(2 * 3285 + 1, 2);
    const auto fa = peak_areas(flat, T, T);
    CHECK(fa.area(-4) == fa.area(4));
    CHECK(fa.area(1) == fa.area(0));
    CHECK(fa.area(2) == 2 * 657);
}

TEST_CASE("peak areas validates binning compatibility") {
    CorrelationHistogram h;
    h.bin_ps = 16;
    h.range_ps = 1000;
    h.half_bins = 62;
    h.counts.assign(125, 0);
    CHECK_THROWS_AS((void)peak_areas(h, 6570, 6570), std::invalid_argument);
    CHECK_THROWS_AS((void)peak_areas(h, 6570, 7000), std::invalid_argument);
}

TEST_CASE("tcspc folds tags modulo the trigger period") {
    std::vector<TimeTag> tags;
    const std::uint64_t T = 1000;
    for (int k = 0; k < 50; ++k) tags.push_back({0, static_cast<TimePs>(k * T + 137)});
    const auto h = tcspc(tags, T, T, 10);
    CHECK(h.at(13) == 50);
    std::uint64_t total = 0;
    for (auto c : h) total += c;
    CHECK(total == 50);
    CHECK(tcspc({}, T, T, 10) == std::vector<std::uint64_t>(100, 0));
}

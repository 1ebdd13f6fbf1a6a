#pragma once

#include <array>
#include <cstdint>

namespace photonlab {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
// A block cipher over a 128-bit counter with a 64-bit key; any (key, counter)
// pair can be evaluated independently, which is what makes every stochastic
// stage of the simulator reproducible under arbitrary segmentation and
// thread counts.
struct Philox4x32 {
    static std::array<std::uint32_t, 4> block(const std::array<std::uint32_t, 4>& ctr,
                                              const std::array<std::uint32_t, 2>& key);
};

// Stream classes keep draws of unrelated purposes statistically independent.
// The numeric values are part of the reproducibility contract: changing them
// changes every simulated data set.
enum class Stream : std::uint32_t {
    blink_event = 1,
    spectral = 2,
    emit = 3,
    circuit = 4,
    detect = 5,
    dark = 6,
    stray_pulsed = 7,
    stray_cw = 8,
    scan = 9,
    sweep = 10,
    ensemble = 11,
    interference = 12,
    misc = 99,
};

// Deterministic random stream keyed by (seed, stream class, unit).
// Draws are sequential within one stream; streams with distinct keys are
// independent. "unit" is whatever identifies the work item: a pulse index,
// a packet id, a detector channel.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, Stream stream, std::uint64_t unit);

    std::uint64_t next_u64();

    // uniform in [0, 1)
    double uniform();
    // standard normal, Box-Muller; the spare value is cached
    double normal();
    // mean > 0; uses 1-u so the log argument is never zero
    double exponential(double mean);
    // Knuth multiplication below mean 30, Gaussian approximation above
    std::uint64_t poisson(double mean);

private:
    void refill();

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> ctr_;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;                  // consumed u32 lanes in buf_
    bool has_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

}  // namespace photonlab

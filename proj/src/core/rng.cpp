#include "core/rng.hpp"

#include <cmath>
#include <numbers>

namespace photonlab {

namespace {
constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::array<std::uint32_t, 4>& x, std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * x[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * x[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
}
}  // namespace

std::array<std::uint32_t, 4> Philox4x32::block(const std::array<std::uint32_t, 4>& ctr,
                                               const std::array<std::uint32_t, 2>& key) {
    std::array<std::uint32_t, 4> x = ctr;
    std::uint32_t k0 = key[0];
    std::uint32_t k1 = key[1];
    for (int round = 0; round < 10; ++round) {
        philox_round(x, k0, k1);
        k0 += kWeyl0;
        k1 += kWeyl1;
    }
    return x;
}

RandomStream::RandomStream(std::uint64_t seed, Stream stream, std::uint64_t unit)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      ctr_{static_cast<std::uint32_t>(unit), static_cast<std::uint32_t>(unit >> 32),
           static_cast<std::uint32_t>(stream), 0u} {}

void RandomStream::refill() {
    buf_ = Philox4x32::block(ctr_, key_);
    ++ctr_[3];  // block index; 2^32 blocks per stream is far beyond any use here
    pos_ = 0;
}

std::uint64_t RandomStream::next_u64() {
    if (pos_ > 2) refill();
    const std::uint64_t lo = buf_[static_cast<std::size_t>(pos_)];
    const std::uint64_t hi = buf_[static_cast<std::size_t>(pos_ + 1)];
    pos_ += 2;
    return lo | (hi << 32);
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    // u1 in (0,1]: shift from [0,1) so log() is finite
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(a);
    has_cached_normal_ = true;
    return r * std::cos(a);
}

double RandomStream::exponential(double mean) {
    return -mean * std::log1p(-uniform());
}

std::uint64_t RandomStream::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        const double limit = std::exp(-mean);
        std::uint64_t n = 0;
        double prod = uniform();
        while (prod > limit) {
            ++n;
            prod *= uniform();
        }
        return n;
    }
    // Gaussian approximation; the callers' means are either small or large
    const double v = mean + std::sqrt(mean) * normal();
    return v > 0.0 ? static_cast<std::uint64_t>(v + 0.5) : 0;
}

}  // namespace photonlab

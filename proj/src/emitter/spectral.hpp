#pragma once

#include <cmath>
#include <cstdint>

#include "core/rng.hpp"

namespace photonlab {

// Slow spectral diffusion of the emission line: an Ornstein-Uhlenbeck process
// with stationary std sigma_g (GHz) and correlation time t_c.
struct SpectralState {
    double detuning_ghz = 0.0;
};

// Exact OU update over dt: x' = x e^{-dt/tc} + sigma_g sqrt(1 - e^{-2 dt/tc}) N(0,1).
inline SpectralState step_spectral(SpectralState state, std::uint64_t dt_ps, double sigma_g_ghz,
                                   double tc_us, RandomStream& rng) {
    if (dt_ps == 0) return state;
    const double ratio = static_cast<double>(dt_ps) / (tc_us * 1e6);
    const double decay = std::exp(-ratio);
    const double diffuse = sigma_g_ghz * std::sqrt(-std::expm1(-2.0 * ratio));
    state.detuning_ghz = state.detuning_ghz * decay + diffuse * rng.normal();
    return state;
}

}  // namespace photonlab

#pragma once

#include <cstdint>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace photonlab {

enum class BlinkStateKind : std::uint8_t { on = 0, off_a = 1, off_b = 2 };

// Current blink state and the absolute time it was entered. Transitions only
// connect ON with each OFF channel; the OFF channels never touch directly.
struct BlinkState {
    BlinkStateKind state = BlinkStateKind::on;
    TimePs since_ps = 0;
};

// Long-run ON fraction of the chain, (1 + k_off_a/k_on_a + k_off_b/k_on_b)^-1.
// An OFF channel with zero return rate but nonzero entry rate is absorbing.
double blink_stationary_on_fraction(const BlinkRates& rates);

// The ON-indicator autocorrelation of the chain decays with two exponential
// components: g(t) = 1 + a1 exp(-t/tau1) + a2 exp(-t/tau2), with
// 1 + a1 + a2 = 1/beta. Decay rates are the nonzero eigenvalues of the
// generator; amplitudes follow from g(0) and g'(0).
struct BlinkCorrelation {
    double a1 = 0.0;
    double tau1_us = 0.0;
    double a2 = 0.0;
    double tau2_us = 0.0;
    double beta = 1.0;
};
BlinkCorrelation blink_on_autocorrelation(const BlinkRates& rates);

// User-facing blinking description: ON fraction, the two bunching timescales
// and the amplitude split a1/(a1+a2).
struct BlinkTargets {
    double beta = 0.508;
    double tau_b1_us = 65.0;
    double tau_b2_us = 125.0;
    double amplitude_split = 0.5;
};

// Inverts the targets into chain rates so that blink_on_autocorrelation
// reproduces them exactly. The sum a1+a2 is fixed to 1/beta - 1; the split
// selects the partition. Throws std::domain_error when no non-negative rate
// assignment exists.
BlinkRates blink_rates_from_targets(const BlinkTargets& targets);

// Evolves the chain over the window [window_start, window_start + dt) by
// exact exponential waiting-time sampling (event-driven, not a fixed-step
// approximation). By memorylessness the holding time is re-sampled at the
// window start; window_start anchors the since_ps bookkeeping of any
// transitions that occur inside the window.
BlinkState step_blinking(BlinkState state, TimePs window_start_ps, std::uint64_t dt_ps,
                         const BlinkRates& rates, RandomStream& rng);

}  // namespace photonlab

#include "emitter/blinking.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace photonlab {

namespace {
constexpr double kPsPerUs = 1e6;

double off_load(double k_off, double k_on) {
    if (k_off <= 0.0) return 0.0;
    if (k_on <= 0.0) return std::numeric_limits<double>::infinity();
    return k_off / k_on;
}
}  // namespace

double blink_stationary_on_fraction(const BlinkRates& r) {
    const double load = off_load(r.k_off_a, r.k_on_a) + off_load(r.k_off_b, r.k_on_b);
    if (std::isinf(load)) return 0.0;
    return 1.0 / (1.0 + load);
}

BlinkCorrelation blink_on_autocorrelation(const BlinkRates& r) {
    BlinkCorrelation out;
    out.beta = blink_stationary_on_fraction(r);
    // nonzero eigenvalues of the generator: lambda^2 - S lambda + P = 0
    const double S = r.k_on_a + r.k_on_b + r.k_off_a + r.k_off_b;
    const double P = r.k_on_a * r.k_on_b + r.k_off_a * r.k_on_b + r.k_off_b * r.k_on_a;
    if (P <= 0.0 || S <= 0.0) {
        // at most one active OFF channel; fall back to a single component
        const double lam = S;
        if (lam <= 0.0) return out;  // static chain
        out.a1 = (1.0 - out.beta) / std::max(out.beta, 1e-300);
        out.tau1_us = 1.0 / lam;
        return out;
    }
    const double disc = std::sqrt(std::max(0.0, S * S - 4.0 * P));
    const double lam1 = 0.5 * (S + disc);  // fast component
    const double lam2 = 0.5 * (S - disc);
    // P(ON,t | ON,0) = beta + c1 e^{-lam1 t} + c2 e^{-lam2 t};
    // c1 + c2 = 1 - beta and c1 lam1 + c2 lam2 = k_off_a + k_off_b (from the
    // t=0 value and slope of the matrix exponential)
    const double f = r.k_off_a + r.k_off_b;
    const double beta = out.beta;
    double c1, c2;
    if (disc > 1e-12 * S) {
        c1 = (f - lam2 * (1.0 - beta)) / (lam1 - lam2);
        c2 = (1.0 - beta) - c1;
    } else {
        c1 = 1.0 - beta;
        c2 = 0.0;
    }
    out.a1 = c1 / beta;
    out.tau1_us = 1.0 / lam1;
    out.a2 = c2 / beta;
    out.tau2_us = lam2 > 0.0 ? 1.0 / lam2 : 0.0;
    // convention: tau1 < tau2
    if (out.a2 != 0.0 && out.tau2_us < out.tau1_us) {
        std::swap(out.a1, out.a2);
        std::swap(out.tau1_us, out.tau2_us);
    }
    return out;
}

BlinkRates blink_rates_from_targets(const BlinkTargets& t) {
    if (!(t.beta > 0.0 && t.beta <= 1.0)) throw std::domain_error("blink targets: beta in (0,1]");
    if (!(t.tau_b1_us > 0.0 && t.tau_b2_us > t.tau_b1_us)) {
        throw std::domain_error("blink targets: require 0 < tau_b1 < tau_b2");
    }
    if (!(t.amplitude_split > 0.0 && t.amplitude_split < 1.0)) {
        throw std::domain_error("blink targets: amplitude split in (0,1)");
    }
    const double lam1 = 1.0 / t.tau_b1_us;
    const double lam2 = 1.0 / t.tau_b2_us;
    const double S = lam1 + lam2;
    const double P = lam1 * lam2;
    const double beta = t.beta;
    const double a_total = (1.0 - beta) / beta;
    const double c1 = beta * (t.amplitude_split * a_total);

    // c1 fixes the total OFF-entry rate F, and with it N = S - F; the split of
    // F and N between the two channels follows from the eigenvalue product and
    // the stationary load R. Solved by bisection in n_a.
    const double F = c1 * (lam1 - lam2) + lam2 * (1.0 - beta);
    const double N = S - F;
    const double R = 1.0 / beta - 1.0;
    if (!(F > 0.0 && N > 0.0)) throw std::domain_error("blink targets: infeasible combination");

    auto f_a_of = [&](double n_a) { return (P - n_a * (N - n_a + F)) / (N - 2.0 * n_a); };
    auto residual = [&](double n_a) {
        const double f_a = f_a_of(n_a);
        const double f_b = F - f_a;
        const double n_b = N - n_a;
        if (!(f_a >= 0.0 && f_b >= 0.0 && n_b > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return f_a / n_a + f_b / n_b - R;
    };

    // bracket a sign change on a fine scan, avoiding the N/2 singularity
    const int kScan = 4096;
    double lo = 0.0, hi = 0.0;
    double prev_x = 0.0, prev_r = std::numeric_limits<double>::quiet_NaN();
    for (int i = 1; i < kScan; ++i) {
        const double x = N * static_cast<double>(i) / kScan;
        if (std::abs(x - 0.5 * N) < N * 1e-6) continue;
        const double rr = residual(x);
        if (std::isnan(rr)) {
            prev_r = rr;
            continue;
        }
        if (!std::isnan(prev_r) && prev_r * rr <= 0.0) {
            lo = prev_x;
            hi = x;
            break;
        }
        prev_x = x;
        prev_r = rr;
    }
    if (hi == 0.0) throw std::domain_error("blink targets: no valid rate assignment found");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double rm = residual(mid);
        const double rl = residual(lo);
        if (std::isnan(rm)) break;
        if ((rl <= 0.0) == (rm <= 0.0)) lo = mid;
        else hi = mid;
    }
    const double n_a = 0.5 * (lo + hi);
    BlinkRates rates;
    rates.k_on_a = n_a;
    rates.k_on_b = N - n_a;
    rates.k_off_a = f_a_of(n_a);
    rates.k_off_b = F - rates.k_off_a;
    if (rates.k_off_a < 0.0 || rates.k_off_b < 0.0) {
        throw std::domain_error("blink targets: negative rate in solution");
    }
    return rates;
}

BlinkState step_blinking(BlinkState state, TimePs window_start_ps, std::uint64_t dt_ps,
                         const BlinkRates& rates, RandomStream& rng) {
    if (dt_ps == 0) return state;
    double remaining = static_cast<double>(dt_ps);
    double elapsed = 0.0;
    while (true) {
        double k_exit_us;  // per microsecond
        switch (state.state) {
            case BlinkStateKind::on: k_exit_us = rates.k_off_a + rates.k_off_b; break;
            case BlinkStateKind::off_a: k_exit_us = rates.k_on_a; break;
            default: k_exit_us = rates.k_on_b; break;
        }
        if (k_exit_us <= 0.0) return state;
        const double wait_ps = rng.exponential(kPsPerUs / k_exit_us);
        if (wait_ps >= remaining) return state;
        elapsed += wait_ps;
        remaining -= wait_ps;
        if (state.state == BlinkStateKind::on) {
            const double u = rng.uniform();
            state.state = (u * (rates.k_off_a + rates.k_off_b) < rates.k_off_a)
                              ? BlinkStateKind::off_a
                              : BlinkStateKind::off_b;
        } else {
            state.state = BlinkStateKind::on;
        }
        state.since_ps = window_start_ps + static_cast<TimePs>(elapsed);
    }
}

}  // namespace photonlab

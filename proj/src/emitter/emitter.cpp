#include "emitter/emitter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace photonlab {

namespace {
constexpr TimePs kNever = std::numeric_limits<TimePs>::max();
constexpr std::uint64_t kOuInitUnit = std::numeric_limits<std::uint64_t>::max();
constexpr double kPsPerUs = 1e6;
}  // namespace

double rabi_excitation_prob(double pulse_area_rad, double gamma) {
    if (pulse_area_rad < 0.0) throw std::domain_error("rabi_excitation_prob: pulse area >= 0");
    const double s = std::sin(0.5 * pulse_area_rad);
    return std::exp(-gamma * pulse_area_rad) * s * s;
}

double rabi_damping_for_fidelity(double prep_fidelity) {
    if (!(prep_fidelity > 0.0 && prep_fidelity <= 1.0)) {
        throw std::domain_error("rabi_damping_for_fidelity: fidelity in (0,1]");
    }
    return -std::log(prep_fidelity) / std::numbers::pi;
}

EmissionStats& EmissionStats::operator+=(const EmissionStats& o) {
    pulses += o.pulses;
    on_pulses += o.on_pulses;
    signal_photons += o.signal_photons;
    reexcitation_photons += o.reexcitation_photons;
    return *this;
}

PulseTrain::PulseTrain(const PulseTrainConfig& config, std::uint64_t n_pulses, std::uint64_t seed,
                       std::uint64_t pulses_per_segment)
    : config_(config), n_pulses_(n_pulses), seed_(seed), pulses_per_segment_(pulses_per_segment) {
    if (n_pulses == 0) throw std::invalid_argument("PulseTrain: n_pulses must be >= 1");
    if (pulses_per_segment == 0) throw std::invalid_argument("PulseTrain: segment length must be >= 1");
    config_.emitter.validate();
    const double fidelity = config_.emitter.prep_fidelity;
    if (fidelity > 0.0) {
        gamma_ = rabi_damping_for_fidelity(fidelity);
        p_excite_ = rabi_excitation_prob(config_.pulse_area_rad, gamma_);
    } else {
        gamma_ = 0.0;
        p_excite_ = 0.0;
    }

    // Initial state: blink drawn from the stationary distribution (event 0),
    // OU displacement from its stationary Gaussian.
    Checkpoint state;
    {
        RandomStream init(seed_, Stream::blink_event, 0);
        const BlinkRates& r = config_.emitter.blink;
        const double beta = blink_stationary_on_fraction(r);
        const double load_a = (r.k_off_a > 0.0 && r.k_on_a > 0.0) ? r.k_off_a / r.k_on_a : 0.0;
        const double pi_a = beta * load_a;
        const double u = init.uniform();
        if (u < beta) state.blink = BlinkStateKind::on;
        else if (u < beta + pi_a) state.blink = BlinkStateKind::off_a;
        else state.blink = BlinkStateKind::off_b;
        state.blink_entry_ps = 0;
        state.next_transition_ps = draw_exit(state.blink, 0, init);
        state.next_event_ordinal = 1;
    }
    {
        RandomStream init(seed_, Stream::spectral, kOuInitUnit);
        state.ou_x_ghz = config_.emitter.sigma_g_ghz * init.normal();
        state.ou_last_pulse = 0;
    }

    // Serial pre-pass: record the state at each segment boundary.
    const std::uint64_t n_segments = (n_pulses_ + pulses_per_segment_ - 1) / pulses_per_segment_;
    checkpoints_.reserve(n_segments);
    for (std::uint64_t s = 0; s < n_segments; ++s) {
        checkpoints_.push_back(state);
        if (s + 1 < n_segments) {
            advance(state, s * pulses_per_segment_, (s + 1) * pulses_per_segment_, nullptr, nullptr);
        }
    }
}

TimePs PulseTrain::draw_exit(BlinkStateKind kind, TimePs now_ps, RandomStream& rng) const {
    const BlinkRates& r = config_.emitter.blink;
    double k_exit_us;
    switch (kind) {
        case BlinkStateKind::on: k_exit_us = r.k_off_a + r.k_off_b; break;
        case BlinkStateKind::off_a: k_exit_us = r.k_on_a; break;
        default: k_exit_us = r.k_on_b; break;
    }
    if (k_exit_us <= 0.0) return kNever;
    const double wait = rng.exponential(kPsPerUs / k_exit_us);
    if (wait >= static_cast<double>(kNever - now_ps)) return kNever;
    return now_ps + static_cast<TimePs>(wait);
}

void PulseTrain::advance(Checkpoint& state, std::uint64_t first_pulse, std::uint64_t end_pulse,
                         std::vector<PhotonPacket>* out, EmissionStats* stats) const {
    const std::uint64_t T = config_.rep_period_ps;
    const EmitterConfig& em = config_.emitter;
    const BlinkRates& rates = em.blink;
    const double tc_ps = em.ou_tc_us * kPsPerUs;

    for (std::uint64_t pulse = first_pulse; pulse < end_pulse; ++pulse) {
        const TimePs t_pulse = pulse * T;
        // apply any transitions up to and including the pulse instant
        while (state.next_transition_ps <= t_pulse) {
            const TimePs t_event = state.next_transition_ps;
            RandomStream ev(seed_, Stream::blink_event, state.next_event_ordinal++);
            if (state.blink == BlinkStateKind::on) {
                const double u = ev.uniform();
                state.blink = (u * (rates.k_off_a + rates.k_off_b) < rates.k_off_a)
                                  ? BlinkStateKind::off_a
                                  : BlinkStateKind::off_b;
            } else {
                state.blink = BlinkStateKind::on;
            }
            state.blink_entry_ps = t_event;
            state.next_transition_ps = draw_exit(state.blink, t_event, ev);
        }
        if (stats) ++stats->pulses;
        if (state.blink != BlinkStateKind::on) continue;
        if (stats) ++stats->on_pulses;

        // spectral diffusion advanced lazily, one exact OU step per ON pulse
        {
            RandomStream sp(seed_, Stream::spectral, pulse);
            const std::uint64_t dt = (pulse - state.ou_last_pulse) * T;
            if (dt > 0) {
                const double ratio = static_cast<double>(dt) / tc_ps;
                const double decay = std::exp(-ratio);
                const double diffuse = em.sigma_g_ghz * std::sqrt(-std::expm1(-2.0 * ratio));
                state.ou_x_ghz = state.ou_x_ghz * decay + diffuse * sp.normal();
            }
            state.ou_last_pulse = pulse;
        }

        // The emit stream is keyed per pulse and feeds nothing back into the
        // blink/spectral state, so the checkpoint pre-pass can skip it.
        if (!out && !stats) continue;
        if (p_excite_ <= 0.0) continue;
        RandomStream rng(seed_, Stream::emit, pulse);
        if (rng.uniform() >= p_excite_) continue;

        if (stats) ++stats->signal_photons;
        {
            PhotonPacket p;
            p.t0_ps = t_pulse;
            p.tau_ps = em.tau_ps;
            p.detuning_ghz = state.ou_x_ghz + em.sigma_fast_ghz * rng.normal();
            p.pol = Polarization::H;
            p.origin = PhotonOrigin::signal;
            p.id = PhotonPacket::make_id(pulse, 0);
            if (out) out->push_back(p);
        }
        if (em.p_reexcite > 0.0 && rng.uniform() < em.p_reexcite) {
            if (stats) ++stats->reexcitation_photons;
            PhotonPacket p;
            p.t0_ps = t_pulse + static_cast<TimePs>(rng.exponential(em.tau_ps));
            p.tau_ps = em.tau_ps;
            p.detuning_ghz = state.ou_x_ghz + em.sigma_fast_ghz * rng.normal();
            p.pol = Polarization::H;
            p.origin = PhotonOrigin::reexcitation;
            p.id = PhotonPacket::make_id(pulse, 1);
            if (out) out->push_back(p);
        }
    }
}

std::vector<PhotonPacket> PulseTrain::segment(std::uint64_t index, EmissionStats* stats) const {
    if (index >= checkpoints_.size()) throw std::out_of_range("PulseTrain::segment index");
    Checkpoint state = checkpoints_[index];
    const std::uint64_t first = index * pulses_per_segment_;
    const std::uint64_t end = std::min(n_pulses_, first + pulses_per_segment_);
    std::vector<PhotonPacket> out;
    out.reserve(static_cast<std::size_t>(
        1.05 * p_excite_ * (1.0 + config_.emitter.p_reexcite) * static_cast<double>(end - first)));
    advance(state, first, end, &out, stats);
    std::sort(out.begin(), out.end(), [](const PhotonPacket& a, const PhotonPacket& b) {
        return a.t0_ps != b.t0_ps ? a.t0_ps < b.t0_ps : a.id < b.id;
    });
    return out;
}

std::vector<PhotonPacket> PulseTrain::all(EmissionStats* stats) const {
    std::vector<PhotonPacket> out;
    for (std::uint64_t s = 0; s < segment_count(); ++s) {
        std::vector<PhotonPacket> part = segment(s, stats);
        out.insert(out.end(), part.begin(), part.end());
    }
    return out;
}

std::vector<PhotonPacket> emit_pulse_train(const PulseTrainConfig& config, std::uint64_t n_pulses,
                                           std::uint64_t seed, EmissionStats* stats) {
    PulseTrain train(config, n_pulses, seed);
    return train.all(stats);
}

}  // namespace photonlab

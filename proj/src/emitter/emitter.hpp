#pragma once

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"
#include "emitter/blinking.hpp"

namespace photonlab {

// Damped Rabi excitation probability P(theta) = exp(-gamma*theta) sin^2(theta/2).
// With gamma = rabi_damping_for_fidelity(F), P(pi) == F.
double rabi_excitation_prob(double pulse_area_rad, double gamma);
double rabi_damping_for_fidelity(double prep_fidelity);

struct PulseTrainConfig {
    EmitterConfig emitter;
    std::uint64_t rep_period_ps = 6570;
    double pulse_area_rad = 3.14159265358979323846;
};

// Aggregate emission bookkeeping; sums exactly across segments.
struct EmissionStats {
    std::uint64_t pulses = 0;
    std::uint64_t on_pulses = 0;
    std::uint64_t signal_photons = 0;
    std::uint64_t reexcitation_photons = 0;

    EmissionStats& operator+=(const EmissionStats& o);
};

// Stochastic pi-pulse-driven emitter. All randomness is keyed by
// (seed, stream class, pulse index or event ordinal), so the generated photon
// stream is bit-identical for any segmentation: a serial pre-pass walks only
// the blink/spectral state and checkpoints it at segment boundaries, after
// which segments can be generated independently (and in parallel).
class PulseTrain {
public:
    PulseTrain(const PulseTrainConfig& config, std::uint64_t n_pulses, std::uint64_t seed,
               std::uint64_t pulses_per_segment = (1u << 21));

    std::uint64_t segment_count() const { return static_cast<std::uint64_t>(checkpoints_.size()); }
    std::uint64_t n_pulses() const { return n_pulses_; }
    std::uint64_t pulses_per_segment() const { return pulses_per_segment_; }
    std::uint64_t duration_ps() const { return n_pulses_ * config_.rep_period_ps; }

    // Photons of one segment, time-sorted. Safe to call concurrently for
    // distinct segments.
    std::vector<PhotonPacket> segment(std::uint64_t index, EmissionStats* stats = nullptr) const;

    // Whole train in one vector (concatenated segments).
    std::vector<PhotonPacket> all(EmissionStats* stats = nullptr) const;

private:
    struct Checkpoint {
        BlinkStateKind blink = BlinkStateKind::on;
        TimePs blink_entry_ps = 0;
        TimePs next_transition_ps = 0;
        std::uint64_t next_event_ordinal = 0;
        double ou_x_ghz = 0.0;
        std::uint64_t ou_last_pulse = 0;
    };

    void advance(Checkpoint& state, std::uint64_t first_pulse, std::uint64_t end_pulse,
                 std::vector<PhotonPacket>* out, EmissionStats* stats) const;
    TimePs draw_exit(BlinkStateKind kind, TimePs now_ps, RandomStream& rng) const;

    PulseTrainConfig config_;
    std::uint64_t n_pulses_;
    std::uint64_t seed_;
    std::uint64_t pulses_per_segment_;
    double gamma_;
    double p_excite_;
    std::vector<Checkpoint> checkpoints_;
};

// Convenience wrapper: the full photon stream of a pulse train.
std::vector<PhotonPacket> emit_pulse_train(const PulseTrainConfig& config, std::uint64_t n_pulses,
                                           std::uint64_t seed, EmissionStats* stats = nullptr);

}  // namespace photonlab

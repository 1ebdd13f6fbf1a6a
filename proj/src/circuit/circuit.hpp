#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace photonlab {

struct RoutedPhoton {
    PhotonPacket packet;
    int port = 0;
    bool survived = false;
};

// Loss accounting across the whole element chain. Every packet entering the
// chip ends up in exactly one of the buckets, so totals reconcile exactly.
struct CircuitLedger {
    std::uint64_t packets_in = 0;
    std::uint64_t lost_attenuation = 0;
    std::uint64_t lost_mmi = 0;
    std::uint64_t lost_efficiency = 0;
    std::uint64_t lost_dead_time = 0;
    std::uint64_t detected_packets = 0;
    std::uint64_t dark_generated = 0;
    std::uint64_t dark_dead_time = 0;
    std::uint64_t dark_detected = 0;
    std::uint64_t multi_photon_windows = 0;  // classical-fallback interference windows

    CircuitLedger& operator+=(const CircuitLedger& o);
    bool reconciles() const;
};

// Power survival factor of a waveguide section, 10^(-alpha L / 10).
double attenuation_survival(double alpha_db_per_mm, double length_mm);

// MMI beamsplitter: the packet survives with probability eta_mmi and, if it
// survives, exits port 0 with probability r_mmi.
RoutedPhoton mmi_split(const PhotonPacket& packet, double r_mmi, double eta_mmi,
                       RandomStream& rng);

// Mean two-photon wave-packet overlap of two exponential packets
//   M = exp(-|dt|/tau) / (1 + (2 pi dnu tau)^2)
// for equal tau; for unequal tau the generalized overlap
//   M = (4 t1 t2/(t1+t2)^2) exp(-|dt|/t_first) / (1 + (2 pi dnu th)^2),
// th = 2 t1 t2/(t1+t2), with t_first the decay constant of the earlier packet.
// Cross-polarized pairs have M = 0. Throws std::domain_error on tau <= 0.
double hom_overlap(const PhotonPacket& p1, const PhotonPacket& p2);

// Two photons, one per beamsplitter input, with mean overlap m. Cross-port
// coincidence happens with P_c = R^2 + T^2 - 2 R T m; otherwise both exit the
// same port (equal split, the classical 2RT weight). Returns output ports for
// (photon1, photon2).
std::array<int, 2> fiber_bs_two_photon(double r_b, double overlap_m, RandomStream& rng);

// Classical Bernoulli routing: port 0 with probability r_b.
int fiber_bs_single(double r_b, RandomStream& rng);

// Detector stage. Each packet is thinned by the efficiency, its click instant
// sampled as t0 + Exp(tau) + N(0, irf_sigma); Poisson dark counts are added
// over [0, duration); any click within dead_time after an accepted click on
// the same channel is dropped. Output per channel is time-sorted.
// Randomness is keyed per packet id / channel, so results do not depend on
// how packets were batched upstream.
struct DetectionInput {
    std::vector<PhotonPacket> packets;  // channel = vector index in detect()
};

std::vector<std::vector<TimeTag>> detect(const std::vector<DetectionInput>& channels,
                                         const DetectorConfig& config, TimePs duration_ps,
                                         std::uint64_t seed, CircuitLedger* ledger = nullptr);

// Staged detection for streamed pipelines: candidates can be generated one
// packet batch at a time (keyed per packet, so batching does not matter) and
// finalized once per channel. detect() is the one-shot composition of the two.
struct ClickCandidate {
    double time_ps = 0.0;
    std::uint64_t order = 0;  // packet id (dark ordinals carry a high bit)
    bool dark = false;
};

void detection_candidates(std::span<const PhotonPacket> packets, const DetectorConfig& config,
                          std::uint64_t seed, std::vector<ClickCandidate>& out,
                          CircuitLedger* ledger = nullptr);

std::vector<TimeTag> finalize_detection(int channel, std::vector<ClickCandidate>&& candidates,
                                        const DetectorConfig& config, TimePs duration_ps,
                                        std::uint64_t seed, CircuitLedger* ledger = nullptr);

// Stray-light packets calibrated at one detector channel: pulsed stray at the
// excitation instants (Poisson per pulse), CW stray uniform in time.
std::vector<PhotonPacket> make_stray_packets(const CircuitConfig& circuit, int channel,
                                             std::uint64_t n_pulses, std::uint64_t seed);

// Hong-Ou-Mandel recombination stage: arm A direct, arm B delayed by
// delay_ps (and polarization-rotated in the cross configuration), both meeting
// at the fiber beamsplitter. Arrivals are grouped into interference windows of
// width window_ps; windows holding exactly one photon per input interfere,
// everything else routes classically (multi-photon windows are logged).
// Segments must be pushed in time order; boundary windows are carried over.
class HomTopology {
public:
    // With a sink, routed packets are handed over immediately instead of being
    // accumulated in ports(); streamed runs use this to bound memory.
    using Sink = std::function<void(const PhotonPacket&, int port)>;

    HomTopology(const CircuitConfig& circuit, TimePs window_ps, std::uint64_t seed,
                Sink sink = nullptr);

    void push(std::vector<PhotonPacket> arm_a, std::vector<PhotonPacket> arm_b);
    void finish();

    std::array<std::vector<PhotonPacket>, 2>& ports() { return ports_; }
    std::uint64_t multi_photon_windows() const { return multi_photon_windows_; }
    std::uint64_t interfered_pairs() const { return interfered_pairs_; }

private:
    struct Arrival {
        PhotonPacket packet;
        int input = 0;
    };

    void process_pending(bool flush);
    void route_cluster(const Arrival* first, std::size_t count);
    void emit(const PhotonPacket& packet, int port);

    CircuitConfig circuit_;
    TimePs window_ps_;
    std::uint64_t seed_;
    Sink sink_;
    std::vector<Arrival> pending_;
    std::array<std::vector<PhotonPacket>, 2> ports_;
    std::uint64_t multi_photon_windows_ = 0;
    std::uint64_t interfered_pairs_ = 0;
    bool finished_ = false;
};

// One-shot convenience over HomTopology for already-split arm streams.
std::array<std::vector<PhotonPacket>, 2> run_hom_topology(std::vector<PhotonPacket> arm_a,
                                                          std::vector<PhotonPacket> arm_b,
                                                          const CircuitConfig& circuit,
                                                          TimePs window_ps, std::uint64_t seed,
                                                          std::uint64_t* multi_windows = nullptr);

}  // namespace photonlab

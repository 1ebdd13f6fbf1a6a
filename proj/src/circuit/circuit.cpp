#include "circuit/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace photonlab {

CircuitLedger& CircuitLedger::operator+=(const CircuitLedger& o) {
    packets_in += o.packets_in;
    lost_attenuation += o.lost_attenuation;
    lost_mmi += o.lost_mmi;
    lost_efficiency += o.lost_efficiency;
    lost_dead_time += o.lost_dead_time;
    detected_packets += o.detected_packets;
    dark_generated += o.dark_generated;
    dark_dead_time += o.dark_dead_time;
    dark_detected += o.dark_detected;
    multi_photon_windows += o.multi_photon_windows;
    return *this;
}

bool CircuitLedger::reconciles() const {
    return packets_in == lost_attenuation + lost_mmi + lost_efficiency + lost_dead_time +
                             detected_packets &&
           dark_generated == dark_dead_time + dark_detected;
}

double attenuation_survival(double alpha_db_per_mm, double length_mm) {
    if (alpha_db_per_mm < 0.0 || length_mm < 0.0) {
        throw std::domain_error("attenuation_survival: alpha and length must be >= 0");
    }
    return std::pow(10.0, -alpha_db_per_mm * length_mm / 10.0);
}

RoutedPhoton mmi_split(const PhotonPacket& packet, double r_mmi, double eta_mmi,
                       RandomStream& rng) {
    if (!(r_mmi > 0.0 && r_mmi < 1.0)) throw std::domain_error("mmi_split: r_mmi in (0,1)");
    RoutedPhoton out;
    out.packet = packet;
    out.survived = rng.uniform() < eta_mmi;
    out.port = rng.uniform() < r_mmi ? 0 : 1;
    return out;
}

double hom_overlap(const PhotonPacket& p1, const PhotonPacket& p2) {
    if (!(p1.tau_ps > 0.0) || !(p2.tau_ps > 0.0)) {
        throw std::domain_error("hom_overlap: tau must be > 0");
    }
    if (p1.pol != p2.pol) return 0.0;
    // a stray (laser) photon shares no wave packet with the emitter photons
    const bool stray1 = p1.origin == PhotonOrigin::stray_pulsed || p1.origin == PhotonOrigin::stray_cw;
    const bool stray2 = p2.origin == PhotonOrigin::stray_pulsed || p2.origin == PhotonOrigin::stray_cw;
    if (stray1 != stray2) return 0.0;

    const PhotonPacket& first = p1.t0_ps <= p2.t0_ps ? p1 : p2;
    const PhotonPacket& second = p1.t0_ps <= p2.t0_ps ? p2 : p1;
    const double dt = static_cast<double>(second.t0_ps - first.t0_ps);
    const double t1 = first.tau_ps;
    const double t2 = second.tau_ps;
    const double th = 2.0 * t1 * t2 / (t1 + t2);
    const double dnu_ghz = p1.detuning_ghz - p2.detuning_ghz;
    const double phase = 2.0 * std::numbers::pi * dnu_ghz * th * 1e-3;  // GHz * ps
    const double shape = 4.0 * t1 * t2 / ((t1 + t2) * (t1 + t2));
    return shape * std::exp(-dt / t1) / (1.0 + phase * phase);
}

std::array<int, 2> fiber_bs_two_photon(double r_b, double overlap_m, RandomStream& rng) {
    if (!(r_b > 0.0 && r_b < 1.0)) throw std::domain_error("fiber_bs_two_photon: r_b in (0,1)");
    const double t_b = 1.0 - r_b;
    const double p_cross = r_b * r_b + t_b * t_b - 2.0 * r_b * t_b * overlap_m;
    if (rng.uniform() < p_cross) {
        return rng.uniform() < 0.5 ? std::array<int, 2>{0, 1} : std::array<int, 2>{1, 0};
    }
    const int port = rng.uniform() < 0.5 ? 0 : 1;
    return {port, port};
}

int fiber_bs_single(double r_b, RandomStream& rng) {
    return rng.uniform() < r_b ? 0 : 1;
}

void detection_candidates(std::span<const PhotonPacket> packets, const DetectorConfig& config,
                          std::uint64_t seed, std::vector<ClickCandidate>& out,
                          CircuitLedger* ledger) {
    for (const PhotonPacket& p : packets) {
        RandomStream rng(seed, Stream::detect, p.id);
        if (rng.uniform() >= config.efficiency) {
            if (ledger) ++ledger->lost_efficiency;
            continue;
        }
        double t = static_cast<double>(p.t0_ps) + rng.exponential(p.tau_ps);
        if (config.irf_sigma_ps > 0.0) t += config.irf_sigma_ps * rng.normal();
        if (t < 0.0) t = 0.0;
        out.push_back({t, p.id, false});
    }
}

std::vector<TimeTag> finalize_detection(int channel, std::vector<ClickCandidate>&& cands,
                                        const DetectorConfig& config, TimePs duration_ps,
                                        std::uint64_t seed, CircuitLedger* ledger) {
    constexpr std::uint64_t kDarkBit = 1ull << 63;
    if (config.dark_rate_hz > 0.0) {
        RandomStream rng(seed, Stream::dark, static_cast<std::uint64_t>(channel));
        const double mean_gap_ps = 1e12 / config.dark_rate_hz;
        double t = rng.exponential(mean_gap_ps);
        std::uint64_t n = 0;
        while (t < static_cast<double>(duration_ps)) {
            cands.push_back({t, kDarkBit | n, true});
            ++n;
            t += rng.exponential(mean_gap_ps);
        }
        if (ledger) ledger->dark_generated += n;
    }
    std::sort(cands.begin(), cands.end(), [](const ClickCandidate& a, const ClickCandidate& b) {
        return a.time_ps != b.time_ps ? a.time_ps < b.time_ps : a.order < b.order;
    });
    const double dead = static_cast<double>(config.dead_time_ps);
    double last_accept = -1.0;
    bool first = true;
    std::vector<TimeTag> tags;
    tags.reserve(cands.size());
    for (const ClickCandidate& c : cands) {
        if (!first && dead > 0.0 && c.time_ps - last_accept < dead) {
            if (ledger) {
                if (c.dark) ++ledger->dark_dead_time;
                else ++ledger->lost_dead_time;
            }
            continue;
        }
        first = false;
        last_accept = c.time_ps;
        if (ledger) {
            if (c.dark) ++ledger->dark_detected;
            else ++ledger->detected_packets;
        }
        tags.push_back(TimeTag{static_cast<std::uint8_t>(channel), static_cast<TimePs>(c.time_ps)});
    }
    return tags;
}

std::vector<std::vector<TimeTag>> detect(const std::vector<DetectionInput>& channels,
                                         const DetectorConfig& config, TimePs duration_ps,
                                         std::uint64_t seed, CircuitLedger* ledger) {
    config.validate();
    std::vector<std::vector<TimeTag>> out(channels.size());
    for (std::size_t ch = 0; ch < channels.size(); ++ch) {
        std::vector<ClickCandidate> cands;
        cands.reserve(channels[ch].packets.size());
        detection_candidates(channels[ch].packets, config, seed, cands, ledger);
        out[ch] = finalize_detection(static_cast<int>(ch), std::move(cands), config, duration_ps,
                                     seed, ledger);
    }
    return out;
}

std::vector<PhotonPacket> make_stray_packets(const CircuitConfig& circuit, int channel,
                                             std::uint64_t n_pulses, std::uint64_t seed) {
    std::vector<PhotonPacket> out;
    const std::uint64_t T = circuit.rep_period_ps;
    if (circuit.stray_pulsed_rate > 0.0) {
        // block size keeps the Poisson mean small enough for Knuth sampling
        constexpr std::uint64_t kBlock = 1u << 12;
        const std::uint64_t n_blocks = (n_pulses + kBlock - 1) / kBlock;
        for (std::uint64_t b = 0; b < n_blocks; ++b) {
            const std::uint64_t first = b * kBlock;
            const std::uint64_t count = std::min(kBlock, n_pulses - first);
            RandomStream rng(seed, Stream::stray_pulsed,
                             (static_cast<std::uint64_t>(channel) << 40) | b);
            const std::uint64_t n = rng.poisson(circuit.stray_pulsed_rate * static_cast<double>(count));
            for (std::uint64_t k = 0; k < n; ++k) {
                const std::uint64_t pulse = first + static_cast<std::uint64_t>(
                                                        rng.uniform() * static_cast<double>(count));
                PhotonPacket p;
                p.t0_ps = pulse * T;
                p.tau_ps = circuit.stray_tau_ps;
                p.origin = PhotonOrigin::stray_pulsed;
                // id space disjoint from emitter packets (bit 62) and CW stray (bit 61)
                p.id = (1ull << 62) | (static_cast<std::uint64_t>(channel) << 48) | (b << 24) | k;
                out.push_back(p);
            }
        }
    }
    if (circuit.stray_cw_rate_hz > 0.0) {
        RandomStream rng(seed, Stream::stray_cw, static_cast<std::uint64_t>(channel));
        const double mean_gap_ps = 1e12 / circuit.stray_cw_rate_hz;
        const double duration = static_cast<double>(n_pulses * T);
        double t = rng.exponential(mean_gap_ps);
        std::uint64_t k = 0;
        while (t < duration) {
            PhotonPacket p;
            p.t0_ps = static_cast<TimePs>(t);
            p.tau_ps = 1.0;
            p.origin = PhotonOrigin::stray_cw;
            p.id = (1ull << 61) | (static_cast<std::uint64_t>(channel) << 48) | k;
            out.push_back(p);
            ++k;
            t += rng.exponential(mean_gap_ps);
        }
    }
    std::sort(out.begin(), out.end(), [](const PhotonPacket& a, const PhotonPacket& b) {
        return a.t0_ps != b.t0_ps ? a.t0_ps < b.t0_ps : a.id < b.id;
    });
    return out;
}

HomTopology::HomTopology(const CircuitConfig& circuit, TimePs window_ps, std::uint64_t seed,
                         Sink sink)
    : circuit_(circuit), window_ps_(window_ps), seed_(seed), sink_(std::move(sink)) {
    if (window_ps_ == 0 || window_ps_ >= circuit.rep_period_ps / 2) {
        throw std::invalid_argument("HomTopology: require 0 < window < rep_period/2");
    }
}

void HomTopology::push(std::vector<PhotonPacket> arm_a, std::vector<PhotonPacket> arm_b) {
    if (finished_) throw std::logic_error("HomTopology: push after finish");
    const bool flip = circuit_.pol_config == PolarizationSetting::cross;
    std::size_t merged_begin = pending_.size();
    for (PhotonPacket& p : arm_b) {
        p.t0_ps += circuit_.delay_ps;
        if (flip) p.pol = p.pol == Polarization::H ? Polarization::V : Polarization::H;
    }
    pending_.reserve(pending_.size() + arm_a.size() + arm_b.size());
    for (const PhotonPacket& p : arm_a) pending_.push_back({p, 0});
    for (const PhotonPacket& p : arm_b) pending_.push_back({p, 1});
    std::sort(pending_.begin() + static_cast<std::ptrdiff_t>(merged_begin), pending_.end(),
              [](const Arrival& x, const Arrival& y) {
                  return x.packet.t0_ps != y.packet.t0_ps ? x.packet.t0_ps < y.packet.t0_ps
                                                          : x.packet.id < y.packet.id;
              });
    // the carried tail from the previous push is older than everything new,
    // but the delayed arm can reach back at most delay + window
    std::inplace_merge(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(merged_begin),
                       pending_.end(), [](const Arrival& x, const Arrival& y) {
                           return x.packet.t0_ps != y.packet.t0_ps ? x.packet.t0_ps < y.packet.t0_ps
                                                                   : x.packet.id < y.packet.id;
                       });
    process_pending(false);
}

void HomTopology::process_pending(bool flush) {
    if (pending_.empty()) return;
    // keep arrivals that might still join a window with future pushes
    const TimePs horizon = flush ? std::numeric_limits<TimePs>::max()
                                 : (pending_.back().packet.t0_ps > circuit_.delay_ps + window_ps_
                                        ? pending_.back().packet.t0_ps - circuit_.delay_ps - window_ps_
                                        : 0);
    std::size_t i = 0;
    while (i < pending_.size()) {
        std::size_t j = i + 1;
        while (j < pending_.size() &&
               pending_[j].packet.t0_ps - pending_[j - 1].packet.t0_ps < window_ps_) {
            ++j;
        }
        // cluster [i, j); only route it when it cannot grow anymore
        if (!flush && (j == pending_.size() || pending_[j - 1].packet.t0_ps >= horizon)) break;
        route_cluster(pending_.data() + i, j - i);
        i = j;
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(i));
}

void HomTopology::emit(const PhotonPacket& packet, int port) {
    if (sink_) sink_(packet, port);
    else ports_[static_cast<std::size_t>(port)].push_back(packet);
}

void HomTopology::route_cluster(const Arrival* first, std::size_t count) {
    const double r_b = circuit_.fiber_bs_ratio;
    if (count == 2 && first[0].input != first[1].input) {
        const PhotonPacket& pa = first[0].packet;
        const PhotonPacket& pb = first[1].packet;
        const double m = hom_overlap(pa, pb);
        RandomStream rng(seed_, Stream::interference, std::min(pa.id, pb.id));
        const std::array<int, 2> ports = fiber_bs_two_photon(r_b, m, rng);
        emit(pa, ports[0]);
        emit(pb, ports[1]);
        ++interfered_pairs_;
        return;
    }
    if (count > 2) ++multi_photon_windows_;
    for (std::size_t k = 0; k < count; ++k) {
        RandomStream rng(seed_, Stream::interference, first[k].packet.id);
        const int port = fiber_bs_single(r_b, rng);
        emit(first[k].packet, port);
    }
}

void HomTopology::finish() {
    if (finished_) return;
    process_pending(true);
    finished_ = true;
    for (auto& port : ports_) {
        std::sort(port.begin(), port.end(), [](const PhotonPacket& a, const PhotonPacket& b) {
            return a.t0_ps != b.t0_ps ? a.t0_ps < b.t0_ps : a.id < b.id;
        });
    }
}

std::array<std::vector<PhotonPacket>, 2> run_hom_topology(std::vector<PhotonPacket> arm_a,
                                                          std::vector<PhotonPacket> arm_b,
                                                          const CircuitConfig& circuit,
                                                          TimePs window_ps, std::uint64_t seed,
                                                          std::uint64_t* multi_windows) {
    HomTopology topo(circuit, window_ps, seed);
    topo.push(std::move(arm_a), std::move(arm_b));
    topo.finish();
    if (multi_windows) *multi_windows = topo.multi_photon_windows();
    return std::move(topo.ports());
}

}  // namespace photonlab

#include "experiments/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "analysis/models.hpp"
#include "core/lineshape.hpp"
#include "core/parallel.hpp"
#include "correlator/correlator.hpp"
#include "emitter/emitter.hpp"

namespace photonlab {

namespace {

constexpr std::uint64_t kFineBinPs = 10;
constexpr std::uint64_t kCoarseRangePs = 2000000000ull;  // 2 ms
constexpr int kSidePeaks = 114;

bool metric_ok(const Measured& m, const ExpectedValue& e) {
    return std::abs(m.value - e.value) <= e.tolerance;
}

void evaluate_pass(ExperimentReport& report, const QdPreset& preset) {
    for (const auto& [name, measured] : report.metrics) {
        auto it = preset.expected.find(name);
        if (it != preset.expected.end()) report.pass[name] = metric_ok(measured, it->second);
    }
}

// one survival draw per element: waveguide attenuation, then the MMI
std::optional<std::pair<int, PhotonPacket>> route_chip(const PhotonPacket& packet,
                                                       const CircuitConfig& circuit,
                                                       double attenuation_factor,
                                                       std::uint64_t seed, CircuitLedger& ledger) {
    RandomStream rng(seed, Stream::circuit, packet.id);
    ++ledger.packets_in;
    if (rng.uniform() >= attenuation_factor) {
        ++ledger.lost_attenuation;
        return std::nullopt;
    }
    const RoutedPhoton routed = mmi_split(packet, circuit.mmi_ratio, circuit.mmi_transmission, rng);
    if (!routed.survived) {
        ++ledger.lost_mmi;
        return std::nullopt;
    }
    return std::make_pair(routed.port, routed.packet);
}

// stray rates are calibrated as detected rates; the detector efficiency thins
// what we generate, so generation is scaled up to compensate
CircuitConfig stray_generation_config(const CircuitConfig& circuit, double efficiency) {
    CircuitConfig scaled = circuit;
    if (efficiency > 0.0) {
        scaled.stray_pulsed_rate /= efficiency;
        scaled.stray_cw_rate_hz /= efficiency;
    } else {
        scaled.stray_pulsed_rate = 0.0;
        scaled.stray_cw_rate_hz = 0.0;
    }
    return scaled;
}

void add_stray_candidates(const QdPreset& preset, int channel, std::uint64_t n_pulses,
                          std::uint64_t seed, std::vector<ClickCandidate>& out,
                          CircuitLedger& ledger) {
    const CircuitConfig gen =
        stray_generation_config(preset.circuit, preset.detector_corr.efficiency);
    const std::vector<PhotonPacket> stray = make_stray_packets(gen, channel, n_pulses, seed);
    ledger.packets_in += stray.size();
    detection_candidates(stray, preset.detector_corr, seed, out, &ledger);
}

ExperimentReport make_report(const char* scenario, const QdPreset& preset, std::uint64_t n_pulses,
                             std::uint64_t seed, int threads) {
    ExperimentReport report;
    report.scenario = scenario;
    report.preset_name = preset.name;
    report.n_pulses = n_pulses;
    report.seed = seed;
    report.threads = threads;
    return report;
}

void add_histogram_series(ExperimentReport& report, const std::string& name,
                          const CorrelationHistogram& hist, std::uint64_t stride,
                          const std::function<double(double)>& fit_model, const char* x_label) {
    ExperimentReport::Series s;
    s.name = name;
    s.x_label = x_label;
    s.y_label = "coincidences";
    for (std::size_t i = 0; i < hist.counts.size(); i += stride) {
        const double x = static_cast<double>(hist.bin_center_ps(i));
        s.x.push_back(x);
        s.y.push_back(static_cast<double>(hist.counts[i]));
        if (fit_model) s.fit.push_back(fit_model(x));
    }
    report.series.push_back(std::move(s));
}

double coarse_floor_per_bin(const CombFit& comb, std::uint64_t period_ps) {
    return comb.floor_per_bin.value * static_cast<double>(period_ps) /
           static_cast<double>(kFineBinPs);
}

// shared HBT extraction chain: comb floor -> bunching (floor held fixed) ->
// comb with debunched sides -> raw peak normalization
struct HbtExtraction {
    CorrelationHistogram fine;
    CorrelationHistogram coarse;
    BunchingFit bunching;
    CombFit comb;
    Measured g2_raw;
};

HbtExtraction extract_hbt(const QdPreset& preset, std::span<const TimeTag> ch0,
                          std::span<const TimeTag> ch1, int threads, int coarse_exclude,
                          int comb_peaks, int skip_near, double central_reexc_weight) {
    const std::uint64_t T = preset.circuit.rep_period_ps;
    const double sigma_eff = preset.detector_corr.irf_sigma_ps * std::numbers::sqrt2;
    HbtExtraction ex;
    ex.fine = correlate(ch0, ch1, kFineBinPs, (kSidePeaks / 2 + 2) * T, threads);
    ex.coarse = coarse_correlate(ch0, ch1, T, kCoarseRangePs, threads);

    const BunchingFit no_bunching;  // floor extraction only; sides unused
    const CombFit floor_fit = fit_g2_background(ex.fine, sigma_eff, T, preset.emitter.tau_ps,
                                                no_bunching, comb_peaks, skip_near,
                                                central_reexc_weight);
    // Everything flat in the peak index must be pinned in the bunching fit or
    // it dilutes the fitted amplitudes: the CW floor is measured by the comb
    // fit, while the pulse-locked stray pedestal comes from the independently
    // calibrated stray rate together with the observed count rates.
    double stray_pedestal = 0.0;
    if (preset.circuit.stray_pulsed_rate > 0.0) {
        const double n_periods = static_cast<double>(ex.coarse.duration_ps) / static_cast<double>(T);
        if (n_periods > 0.0) {
            const double s_hat = preset.circuit.stray_pulsed_rate;
            const double r0 = static_cast<double>(ch0.size()) / n_periods;
            const double r1 = static_cast<double>(ch1.size()) / n_periods;
            const double cw = preset.circuit.stray_cw_rate_hz * static_cast<double>(T) * 1e-12;
            const double mu0 = std::max(r0 - s_hat - cw, 0.0);
            const double mu1 = std::max(r1 - s_hat - cw, 0.0);
            stray_pedestal = n_periods * (mu0 * s_hat + mu1 * s_hat + s_hat * s_hat);
        }
    }
    const double floor_coarse = coarse_floor_per_bin(floor_fit, T) + stray_pedestal;
    ex.bunching =
        fit_bunching(ex.coarse, coarse_exclude, floor_coarse, preset.blink_amplitude_split);
    ex.comb = fit_g2_background(ex.fine, sigma_eff, T, preset.emitter.tau_ps, ex.bunching,
                                comb_peaks, skip_near, central_reexc_weight);
    const PeakAreas areas = peak_areas(ex.fine, T, T);
    ex.g2_raw = extract_g2_raw(areas, ex.bunching, kSidePeaks, skip_near);
    return ex;
}

void fill_hbt_metrics(ExperimentReport& report, const QdPreset& preset, const HbtExtraction& ex) {
    report.metrics["g2_raw"] = ex.g2_raw;
    report.metrics["g2_bgc"] = ex.comb.g2;
    report.metrics["beta"] = {ex.bunching.beta, ex.bunching.beta_error};
    report.metrics["tau_b1_us"] = {ex.bunching.tau_b1_us, ex.bunching.tau_b1_error_us};
    report.metrics["tau_b2_us"] = {ex.bunching.tau_b2_us, ex.bunching.tau_b2_error_us};
    if (!ex.bunching.converged) report.add_flag("bunching_fit_nonconverged");
    if (!ex.comb.converged) report.add_flag("background_fit_nonconverged");
    if (ex.fine.total_counts() < 1000) report.add_flag("low_statistics");

    const std::uint64_t T = preset.circuit.rep_period_ps;
    const BunchingFit bunching = ex.bunching;
    const double floor_coarse = coarse_floor_per_bin(ex.comb, T);
    add_histogram_series(report, "coarse_correlation", ex.coarse, 64,
                         [bunching, floor_coarse](double x) {
                             return bunching.poisson_level * bunching.enhancement(std::abs(x)) +
                                    floor_coarse;
                         },
                         "delay_ps");
    ExperimentReport::Series s;
    s.name = "fine_correlation_center";
    s.x_label = "delay_ps";
    s.y_label = "coincidences";
    const double span = 3.5 * static_cast<double>(T);
    for (std::size_t i = 0; i < ex.fine.counts.size(); ++i) {
        const double x = static_cast<double>(ex.fine.bin_center_ps(i));
        if (std::abs(x) > span) continue;
        s.x.push_back(x);
        s.y.push_back(static_cast<double>(ex.fine.counts[i]));
    }
    report.series.push_back(std::move(s));
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t x = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

}  // namespace

bool ExperimentReport::has_flag(const std::string& f) const {
    return std::find(flags.begin(), flags.end(), f) != flags.end();
}

void ExperimentReport::add_flag(std::string f) {
    if (!has_flag(f)) flags.push_back(std::move(f));
}

// --- HBT -----------------------------------------------------------------------

ExperimentReport run_hbt(const QdPreset& preset, const HbtOptions& options, TagPayload* tags_out) {
    const int threads = resolve_thread_count(options.threads);
    ExperimentReport report = make_report("hbt", preset, options.n_pulses, options.seed, threads);

    const std::uint64_t T = preset.circuit.rep_period_ps;
    const double att = attenuation_survival(preset.circuit.attenuation_db_per_mm,
                                            preset.circuit.path_length_mm);
    PulseTrainConfig train_cfg;
    train_cfg.emitter = preset.emitter;
    train_cfg.rep_period_ps = T;
    const PulseTrain train(train_cfg, options.n_pulses, options.seed);

    std::array<std::vector<ClickCandidate>, 2> cands;
    CircuitLedger ledger;
    struct SegmentOut {
        std::array<std::vector<ClickCandidate>, 2> cands;
        CircuitLedger ledger;
    };
    ordered_parallel<SegmentOut>(
        train.segment_count(), threads,
        [&](std::uint64_t s) {
            SegmentOut out;
            const std::vector<PhotonPacket> packets = train.segment(s);
            for (const PhotonPacket& p : packets) {
                auto routed = route_chip(p, preset.circuit, att, options.seed, out.ledger);
                if (!routed) continue;
                detection_candidates({&routed->second, 1}, preset.detector_corr, options.seed,
                                     out.cands[static_cast<std::size_t>(routed->first)],
                                     &out.ledger);
            }
            return out;
        },
        [&](std::uint64_t, SegmentOut&& out) {
            for (int ch = 0; ch < 2; ++ch) {
                cands[ch].insert(cands[ch].end(), out.cands[ch].begin(), out.cands[ch].end());
            }
            ledger += out.ledger;
        });

    const TimePs duration = (options.n_pulses + 2) * T;
    std::array<std::vector<TimeTag>, 2> tags;
    for (int ch = 0; ch < 2; ++ch) {
        add_stray_candidates(preset, ch, options.n_pulses, options.seed, cands[ch], ledger);
        tags[ch] = finalize_detection(ch, std::move(cands[ch]), preset.detector_corr, duration,
                                      options.seed, &ledger);
    }
    report.ledger = ledger;

    const HbtExtraction ex = extract_hbt(preset, tags[0], tags[1], threads, 0, 3, 0,
                                         hbt_central_reexc_share(preset));
    fill_hbt_metrics(report, preset, ex);
    evaluate_pass(report, preset);
    if (tags_out) {
        tags_out->channels = {std::move(tags[0]), std::move(tags[1])};
        tags_out->duration_ps = duration;
    }
    return report;
}

ExperimentReport analyze_hbt_tags(const QdPreset& preset, const std::vector<TimeTag>& ch0,
                                  const std::vector<TimeTag>& ch1) {
    ExperimentReport report = make_report("hbt", preset, 0, 0, 1);
    const HbtExtraction ex = extract_hbt(preset, ch0, ch1, resolve_thread_count(0), 0, 3, 0,
                                         hbt_central_reexc_share(preset));
    fill_hbt_metrics(report, preset, ex);
    evaluate_pass(report, preset);
    return report;
}

// --- HOM -----------------------------------------------------------------------

namespace {

struct HomRun {
    std::array<std::vector<TimeTag>, 2> tags;
    CircuitLedger ledger;
    std::uint64_t multi_windows = 0;
    TimePs duration = 0;
};

HomRun run_hom_once(const QdPreset& preset, PolarizationSetting pol, std::uint64_t n_pulses,
                    std::uint64_t seed, int threads) {
    const std::uint64_t T = preset.circuit.rep_period_ps;
    CircuitConfig circuit = preset.circuit;
    circuit.pol_config = pol;
    const double att =
        attenuation_survival(circuit.attenuation_db_per_mm, circuit.path_length_mm);

    PulseTrainConfig train_cfg;
    train_cfg.emitter = preset.emitter;
    train_cfg.rep_period_ps = T;
    const PulseTrain train(train_cfg, n_pulses, seed);

    HomRun run;
    const TimePs window =
        std::min<TimePs>(static_cast<TimePs>(10.0 * preset.emitter.tau_ps), T / 2 - 1);
    std::array<std::vector<ClickCandidate>, 2> cands;
    HomTopology topology(circuit, window, seed, [&](const PhotonPacket& p, int port) {
        detection_candidates({&p, 1}, preset.detector_corr, seed,
                             cands[static_cast<std::size_t>(port)], &run.ledger);
    });

    struct SegmentOut {
        std::vector<PhotonPacket> arm_a, arm_b;
        CircuitLedger ledger;
    };
    ordered_parallel<SegmentOut>(
        train.segment_count(), threads,
        [&](std::uint64_t s) {
            SegmentOut out;
            const std::vector<PhotonPacket> packets = train.segment(s);
            for (const PhotonPacket& p : packets) {
                auto routed = route_chip(p, circuit, att, seed, out.ledger);
                if (!routed) continue;
                if (routed->first == 0) out.arm_a.push_back(routed->second);
                else out.arm_b.push_back(routed->second);
            }
            return out;
        },
        [&](std::uint64_t, SegmentOut&& out) {
            run.ledger += out.ledger;
            topology.push(std::move(out.arm_a), std::move(out.arm_b));
        });
    topology.finish();
    run.multi_windows = topology.multi_photon_windows();
    run.ledger.multi_photon_windows = run.multi_windows;

    run.duration = (n_pulses + 3) * T;
    for (int ch = 0; ch < 2; ++ch) {
        add_stray_candidates(preset, ch, n_pulses, seed, cands[ch], run.ledger);
        run.tags[ch] = finalize_detection(ch, std::move(cands[ch]), preset.detector_corr,
                                          run.duration, seed, &run.ledger);
    }
    return run;
}

void hom_extract_into(ExperimentReport& report, const QdPreset& preset,
                      std::span<const TimeTag> co0, std::span<const TimeTag> co1,
                      std::span<const TimeTag> cross0, std::span<const TimeTag> cross1,
                      std::optional<Measured> g2_for_correction, int threads) {
    const std::uint64_t T = preset.circuit.rep_period_ps;
    // the m = +-1 peaks carry interference structure in this topology: they
    // are excluded from the bunching fit, the Poisson normalization and the
    // comb side levels
    const HbtExtraction co = extract_hbt(preset, co0, co1, threads, 1, 4, 1,
                                        hom_central_reexc_share(preset, false));
    const HbtExtraction cross = extract_hbt(preset, cross0, cross1, threads, 1, 4, 1,
                                           hom_central_reexc_share(preset, true));

    const PeakAreas areas_co = peak_areas(co.fine, T, T);
    const PeakAreas areas_cross = peak_areas(cross.fine, T, T);
    const Measured v_raw = extract_vtpi_raw(areas_co, areas_cross, co.bunching, kSidePeaks, 1);

    const Measured g2_corr = g2_for_correction.value_or(
        Measured{preset.g2_correction_value, preset.g2_correction_error});
    const double kappa = hom_multiphoton_central_fraction(preset);
    const VtpiCorrection corr =
        correct_vtpi(co.comb, cross.comb, g2_corr, preset.circuit.fiber_bs_ratio, kappa);

    report.metrics["v_raw"] = v_raw;
    report.metrics["v_corr"] = corr.m;
    report.metrics["g2_par"] = extract_g2_raw(areas_co, co.bunching, kSidePeaks, 1);
    report.metrics["g2_perp"] = extract_g2_raw(areas_cross, cross.bunching, kSidePeaks, 1);
    report.metrics["beta"] = {co.bunching.beta, co.bunching.beta_error};
    report.metrics["tau_b1_us"] = {co.bunching.tau_b1_us, co.bunching.tau_b1_error_us};
    report.metrics["tau_b2_us"] = {co.bunching.tau_b2_us, co.bunching.tau_b2_error_us};
    if (corr.clamped) report.add_flag("v_corr_clamped");
    if (corr.inconsistent) report.add_flag("v_corr_inconsistent");
    if (!co.bunching.converged) report.add_flag("bunching_fit_nonconverged");
    if (co.fine.total_counts() < 1000 || cross.fine.total_counts() < 1000) {
        report.add_flag("low_statistics");
    }

    const std::array<std::pair<const char*, const HbtExtraction*>, 2> views = {
        std::make_pair("copol", &co), std::make_pair("crosspol", &cross)};
    for (const auto& [name, ex] : views) {
        ExperimentReport::Series s;
        s.name = std::string("fine_correlation_") + name;
        s.x_label = "delay_ps";
        s.y_label = "coincidences";
        const double span = 4.5 * static_cast<double>(T);
        for (std::size_t i = 0; i < ex->fine.counts.size(); ++i) {
            const double x = static_cast<double>(ex->fine.bin_center_ps(i));
            if (std::abs(x) > span) continue;
            s.x.push_back(x);
            s.y.push_back(static_cast<double>(ex->fine.counts[i]));
        }
        report.series.push_back(std::move(s));
    }
}

}  // namespace

ExperimentReport run_hom(const QdPreset& preset, const HomOptions& options, TagPayload* tags_co_out,
                         TagPayload* tags_cross_out) {
    const int threads = resolve_thread_count(options.threads);
    ExperimentReport report = make_report("hom", preset, options.n_pulses, options.seed, threads);

    const HomRun co =
        run_hom_once(preset, PolarizationSetting::co, options.n_pulses, options.seed, threads);
    const HomRun cross = run_hom_once(preset, PolarizationSetting::cross, options.n_pulses,
                                      mix_seed(options.seed, 1), threads);
    report.ledger = co.ledger;
    report.ledger += cross.ledger;

    hom_extract_into(report, preset, co.tags[0], co.tags[1], cross.tags[0], cross.tags[1],
                     options.g2_for_correction, threads);
    evaluate_pass(report, preset);
    if (tags_co_out) {
        tags_co_out->channels = {co.tags[0], co.tags[1]};
        tags_co_out->duration_ps = co.duration;
    }
    if (tags_cross_out) {
        tags_cross_out->channels = {cross.tags[0], cross.tags[1]};
        tags_cross_out->duration_ps = cross.duration;
    }
    return report;
}

ExperimentReport analyze_hom_tags(const QdPreset& preset, const std::vector<TimeTag>& co_ch0,
                                  const std::vector<TimeTag>& co_ch1,
                                  const std::vector<TimeTag>& cross_ch0,
                                  const std::vector<TimeTag>& cross_ch1,
                                  std::optional<Measured> g2_for_correction) {
    ExperimentReport report = make_report("hom", preset, 0, 0, 1);
    hom_extract_into(report, preset, co_ch0, co_ch1, cross_ch0, cross_ch1, g2_for_correction,
                     resolve_thread_count(0));
    evaluate_pass(report, preset);
    return report;
}

// --- TCSPC ---------------------------------------------------------------------

namespace {

void tcspc_extract_into(ExperimentReport& report, const QdPreset& preset,
                        std::span<const TimeTag> tags) {
    const std::uint64_t T = preset.circuit.rep_period_ps;
    const std::uint64_t bin = 4;
    std::vector<std::uint64_t> hist = tcspc(tags, T, T, bin);
    const std::size_t n_bins = hist.size();

    // rotate the histogram so the rising edge sits a quarter period in; the
    // wrapped tail is negligible at tau << T
    std::size_t i_max = 0;
    for (std::size_t i = 0; i < n_bins; ++i) {
        if (hist[i] > hist[i_max]) i_max = i;
    }
    const std::size_t target = n_bins / 4;
    const std::size_t shift = (i_max + n_bins - target) % n_bins;
    std::vector<double> x(n_bins), y(n_bins);
    for (std::size_t i = 0; i < n_bins; ++i) {
        x[i] = (static_cast<double>(i) + 0.5) * static_cast<double>(bin);
        y[i] = static_cast<double>(hist[(i + shift) % n_bins]);
    }
    const FitResult fit = fit_decay(x, y, preset.detector_tcspc.irf_sigma_ps);
    report.metrics["tau_ps"] = {fit.value("tau_ps"), fit.error("tau_ps")};
    report.metrics["fourier_limit_ghz"] = {fourier_limit_ghz(fit.value("tau_ps")),
                                           fit.error("tau_ps") > 0.0
                                               ? fourier_limit_ghz(fit.value("tau_ps")) *
                                                     fit.error("tau_ps") / fit.value("tau_ps")
                                               : 0.0};
    if (!fit.converged) report.add_flag("decay_fit_nonconverged");
    if (tags.size() < 1000) report.add_flag("low_statistics");

    ExperimentReport::Series s;
    s.name = "tcspc";
    s.x_label = "time_ps";
    s.y_label = "counts";
    const DecayModel model{preset.detector_tcspc.irf_sigma_ps, static_cast<double>(bin)};
    const std::vector<double> p = {fit.value("amplitude"), fit.value("tau_ps"), fit.value("t0_ps"),
                                   fit.value("background")};
    for (std::size_t i = 0; i < n_bins; ++i) {
        s.x.push_back(x[i]);
        s.y.push_back(y[i]);
        s.fit.push_back(model.value(x[i], p));
    }
    report.series.push_back(std::move(s));
}

}  // namespace

ExperimentReport run_tcspc(const QdPreset& preset, const TcspcOptions& options,
                           TagPayload* tags_out) {
    const int threads = resolve_thread_count(options.threads);
    ExperimentReport report = make_report("tcspc", preset, options.n_pulses, options.seed, threads);

    const std::uint64_t T = preset.circuit.rep_period_ps;
    const double att = attenuation_survival(preset.circuit.attenuation_db_per_mm,
                                            preset.circuit.path_length_mm);
    PulseTrainConfig train_cfg;
    train_cfg.emitter = preset.emitter;
    train_cfg.rep_period_ps = T;
    const PulseTrain train(train_cfg, options.n_pulses, options.seed);

    std::vector<ClickCandidate> cands;
    CircuitLedger ledger;
    struct SegmentOut {
        std::vector<ClickCandidate> cands;
        CircuitLedger ledger;
    };
    ordered_parallel<SegmentOut>(
        train.segment_count(), threads,
        [&](std::uint64_t s) {
            SegmentOut out;
            const std::vector<PhotonPacket> packets = train.segment(s);
            for (const PhotonPacket& p : packets) {
                auto routed = route_chip(p, preset.circuit, att, options.seed, out.ledger);
                if (!routed || routed->first != 0) {
                    if (routed) ++out.ledger.lost_mmi;  // the unused output arm
                    continue;
                }
                detection_candidates({&routed->second, 1}, preset.detector_tcspc, options.seed,
                                     out.cands, &out.ledger);
            }
            return out;
        },
        [&](std::uint64_t, SegmentOut&& out) {
            cands.insert(cands.end(), out.cands.begin(), out.cands.end());
            ledger += out.ledger;
        });

    const TimePs duration = (options.n_pulses + 2) * T;
    {
        const CircuitConfig gen =
            stray_generation_config(preset.circuit, preset.detector_tcspc.efficiency);
        const std::vector<PhotonPacket> stray =
            make_stray_packets(gen, 0, options.n_pulses, options.seed);
        ledger.packets_in += stray.size();
        detection_candidates(stray, preset.detector_tcspc, options.seed, cands, &ledger);
    }
    std::vector<TimeTag> tags = finalize_detection(0, std::move(cands), preset.detector_tcspc,
                                                   duration, options.seed, &ledger);
    report.ledger = ledger;

    tcspc_extract_into(report, preset, tags);
    evaluate_pass(report, preset);
    if (tags_out) {
        tags_out->channels = {std::move(tags)};
        tags_out->duration_ps = duration;
    }
    return report;
}

ExperimentReport analyze_tcspc_tags(const QdPreset& preset, const std::vector<TimeTag>& tags) {
    ExperimentReport report = make_report("tcspc", preset, 0, 0, 1);
    tcspc_extract_into(report, preset, tags);
    evaluate_pass(report, preset);
    return report;
}

// --- FPI scan ------------------------------------------------------------------

ExperimentReport run_fpi(const QdPreset& preset, const FpiOptions& options) {
    ExperimentReport report = make_report("fpi", preset, options.dwell_pulses, options.seed, 1);
    const double f_l = fourier_limit_ghz(preset.emitter.tau_ps);
    const double expected_lw = preset.expected.count("linewidth_ghz")
                                   ? preset.expected.at("linewidth_ghz").value
                                   : voigt_fwhm_ghz(f_l, preset.sigma_g_total_ghz *
                                                             kGaussianFwhmPerSigma);
    const double range = options.scan_range_ghz > 0.0 ? options.scan_range_ghz : 4.0 * expected_lw;
    if (range < 3.0 * expected_lw) report.add_flag("scan_range_narrow");
    if (options.step_ghz > expected_lw / 5.0) report.add_flag("fpi_step_coarse");

    const std::uint64_t T = preset.circuit.rep_period_ps;
    const double q = chain_detection_probability(preset.circuit, preset.detector_corr);
    const double beta = blink_stationary_on_fraction(preset.emitter.blink);
    const double p_peak = q * beta * preset.emitter.prep_fidelity;
    const double lor_width = f_l + preset.fpi_instrument_ghz;
    const double rho = std::exp(-static_cast<double>(T) / (preset.emitter.ou_tc_us * 1e6));
    const double diffuse = preset.emitter.sigma_g_ghz * std::sqrt(1.0 - rho * rho);
    const double bg_mean = preset.circuit.stray_cw_rate_hz *
                           static_cast<double>(options.dwell_pulses * T) * 1e-12;

    std::vector<double> xs, ys;
    const int n_points = static_cast<int>(std::floor(range / options.step_ghz)) + 1;
    for (int j = 0; j < n_points; ++j) {
        const double d = -0.5 * range + options.step_ghz * static_cast<double>(j);
        RandomStream rng(options.seed, Stream::scan, static_cast<std::uint64_t>(j));
        double ou = preset.emitter.sigma_g_ghz * rng.normal();
        std::uint64_t counts = 0;
        for (std::uint64_t k = 0; k < options.dwell_pulses; ++k) {
            ou = ou * rho + diffuse * rng.normal();
            const double nu = ou + preset.emitter.sigma_fast_ghz * rng.normal();
            const double off = 2.0 * (nu - d) / lor_width;
            const double transmission = 1.0 / (1.0 + off * off);
            if (rng.uniform() < p_peak * transmission) ++counts;
        }
        counts += rng.poisson(bg_mean);
        xs.push_back(d);
        ys.push_back(static_cast<double>(counts));
    }

    const FitResult fit = fit_voigt_fixed_lorentzian(xs, ys, f_l, preset.fpi_instrument_ghz);
    report.metrics["linewidth_ghz"] = {fit.value("fwhm_ghz"), fit.error("fwhm_ghz")};
    report.metrics["sigma_g_total_ghz"] = {fit.value("sigma_g_ghz"), fit.error("sigma_g_ghz")};
    report.metrics["fourier_limit_ghz"] = {f_l, 0.0};
    if (!fit.converged) report.add_flag("voigt_fit_nonconverged");

    ExperimentReport::Series s;
    s.name = "fpi_scan";
    s.x_label = "detuning_ghz";
    s.y_label = "counts";
    const VoigtScanModel model{f_l + preset.fpi_instrument_ghz};
    const std::vector<double> p = {fit.value("amplitude"), fit.value("center_ghz"),
                                   fit.value("f_g_ghz"), fit.value("background")};
    for (std::size_t i = 0; i < xs.size(); ++i) {
        s.x.push_back(xs[i]);
        s.y.push_back(ys[i]);
        s.fit.push_back(model.value(xs[i], p));
    }
    report.series.push_back(std::move(s));
    evaluate_pass(report, preset);
    return report;
}

// --- Rabi sweep ----------------------------------------------------------------

ExperimentReport run_rabi(const QdPreset& preset, const RabiOptions& options) {
    ExperimentReport report =
        make_report("rabi", preset, options.pulses_per_point, options.seed, 1);
    if (options.power_points < 8) {
        report.add_flag("undersampled_sweep");
        report.metrics["prep_fidelity"] = {0.0, 0.0};
        return report;
    }
    const std::uint64_t T = preset.circuit.rep_period_ps;
    const double att = attenuation_survival(preset.circuit.attenuation_db_per_mm,
                                            preset.circuit.path_length_mm);

    std::vector<double> powers, counts;
    for (int i = 0; i < options.power_points; ++i) {
        const double area_factor =
            options.max_area_factor * static_cast<double>(i) / (options.power_points - 1);
        const double power = area_factor * area_factor;  // P proportional to theta^2
        PulseTrainConfig cfg;
        cfg.emitter = preset.emitter;
        cfg.rep_period_ps = T;
        cfg.pulse_area_rad = area_factor * std::numbers::pi;
        const std::uint64_t seed_i = mix_seed(options.seed, static_cast<std::uint64_t>(i));
        CircuitLedger ledger;
        std::vector<ClickCandidate> cands;
        if (area_factor > 0.0 && preset.emitter.prep_fidelity > 0.0) {
            const PulseTrain train(cfg, options.pulses_per_point, seed_i);
            for (std::uint64_t s = 0; s < train.segment_count(); ++s) {
                for (const PhotonPacket& p : train.segment(s)) {
                    auto routed = route_chip(p, preset.circuit, att, seed_i, ledger);
                    if (!routed || routed->first != 0) continue;
                    detection_candidates({&routed->second, 1}, preset.detector_corr, seed_i,
                                         cands, &ledger);
                }
            }
        }
        add_stray_candidates(preset, 0, options.pulses_per_point, seed_i, cands, ledger);
        const std::vector<TimeTag> tags =
            finalize_detection(0, std::move(cands), preset.detector_corr,
                               (options.pulses_per_point + 2) * T, seed_i, &ledger);
        powers.push_back(power);
        counts.push_back(static_cast<double>(tags.size()));
        report.ledger += ledger;
    }

    const FitResult fit = fit_rabi(powers, counts);
    report.metrics["prep_fidelity"] = {fit.value("prep_fidelity"), fit.error("prep_fidelity")};
    report.metrics["pi_power"] = {fit.value("pi_power"), fit.error("pi_power")};
    if (!fit.converged) report.add_flag("rabi_fit_nonconverged");

    ExperimentReport::Series s;
    s.name = "rabi_sweep";
    s.x_label = "power_rel";
    s.y_label = "counts";
    const RabiModel model;
    const std::vector<double> p = {fit.value("amplitude"), fit.value("gamma"),
                                   fit.value("pi_power"), fit.value("background")};
    for (std::size_t i = 0; i < powers.size(); ++i) {
        s.x.push_back(powers[i]);
        s.y.push_back(counts[i]);
        s.fit.push_back(model.value(powers[i], p));
    }
    report.series.push_back(std::move(s));
    evaluate_pass(report, preset);
    return report;
}

// --- ensemble statistics ---------------------------------------------------------

ExperimentReport run_ensemble(const EnsembleOptions& options) {
    ExperimentReport report;
    report.scenario = "ensemble";
    report.preset_name = "ensemble";
    report.seed = options.seed;
    report.n_pulses = 0;
    report.threads = 1;
    if (options.n_qds < 2 || options.n_qds_time_resolved < 2) {
        throw std::invalid_argument("run_ensemble: need at least 2 sampled emitters");
    }

    std::vector<double> wavelength(options.n_qds);
    for (std::size_t k = 0; k < options.n_qds; ++k) {
        RandomStream rng(options.seed, Stream::ensemble, k);
        wavelength[k] = options.wavelength_mean_nm + options.wavelength_std_nm * rng.normal();
    }
    std::vector<double> tau(options.n_qds_time_resolved), linewidth(options.n_qds_time_resolved);
    for (std::size_t k = 0; k < options.n_qds_time_resolved; ++k) {
        RandomStream rng(options.seed, Stream::ensemble, (1ull << 32) + k);
        tau[k] = options.tau_mean_ps + options.tau_std_ps * rng.normal();
        linewidth[k] = options.linewidth_mean_ghz + options.linewidth_std_ghz * rng.normal();
    }

    const auto add_stats = [&report](const char* name, const EnsembleStats& st,
                                     const char* x_label) {
        report.metrics[std::string(name) + "_mean"] = {st.mean,
                                                       st.std_dev / std::sqrt(double(st.n))};
        report.metrics[std::string(name) + "_std"] = {st.std_dev, 0.0};
        ExperimentReport::Series s;
        s.name = std::string(name) + "_histogram";
        s.x_label = x_label;
        s.y_label = "emitters";
        for (std::size_t i = 0; i < st.histogram.size(); ++i) {
            s.x.push_back(0.5 * (st.bin_edges[i] + st.bin_edges[i + 1]));
            s.y.push_back(static_cast<double>(st.histogram[i]));
        }
        report.series.push_back(std::move(s));
    };
    add_stats("wavelength_nm", ensemble_stats(wavelength), "wavelength_nm");
    add_stats("tau_ps", ensemble_stats(tau), "tau_ps");
    add_stats("linewidth_ghz", ensemble_stats(linewidth), "linewidth_ghz");
    return report;
}

}  // namespace photonlab

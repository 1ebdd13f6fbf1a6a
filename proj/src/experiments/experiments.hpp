#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "analysis/analysis.hpp"
#include "circuit/circuit.hpp"
#include "experiments/presets.hpp"

namespace photonlab {

// One simulated measurement run: extracted metrics, pass/fail against the
// preset expectations, bookkeeping, and the histogram/scan payloads the IO
// layer turns into CSV/SVG artifacts. Reruns with identical
// (scenario, config, seed) reproduce every number bit-identically.
struct ExperimentReport {
    std::string scenario;
    std::string preset_name;
    std::uint64_t seed = 0;
    std::uint64_t n_pulses = 0;
    int threads = 1;
    std::map<std::string, Measured> metrics;
    std::map<std::string, bool> pass;
    std::vector<std::string> flags;
    CircuitLedger ledger;

    struct Series {
        std::string name;
        std::string x_label;
        std::string y_label;
        std::vector<double> x;
        std::vector<double> y;
        std::vector<double> fit;  // empty when no model overlay exists
    };
    std::vector<Series> series;

    bool has_flag(const std::string& f) const;
    void add_flag(std::string f);
};

struct HbtOptions {
    std::uint64_t n_pulses = 100000000;
    std::uint64_t seed = 1;
    int threads = 0;  // 0 = resolve from environment/hardware
    bool keep_tags = false;
};

struct HomOptions {
    std::uint64_t n_pulses = 100000000;
    std::uint64_t seed = 1;
    int threads = 0;
    bool keep_tags = false;
    // g2(0) used in the multiphoton correction; defaults to the preset's
    // background-corrected expectation (the published measurement chain feeds
    // its HBT result in here)
    std::optional<Measured> g2_for_correction;
};

struct TcspcOptions {
    std::uint64_t n_pulses = 3000000;
    std::uint64_t seed = 1;
    int threads = 0;
    bool keep_tags = false;
};

struct FpiOptions {
    double scan_range_ghz = 0.0;  // 0 = auto: 4x expected linewidth
    double step_ghz = 0.2;
    std::uint64_t dwell_pulses = 400000;
    std::uint64_t seed = 1;
};

struct RabiOptions {
    int power_points = 40;
    std::uint64_t pulses_per_point = 200000;
    double max_area_factor = 2.2;  // sweep up to this multiple of pi
    std::uint64_t seed = 1;
};

struct EnsembleOptions {
    std::size_t n_qds = 104;
    double wavelength_mean_nm = 781.71;
    double wavelength_std_nm = 3.53;
    std::size_t n_qds_time_resolved = 25;
    double tau_mean_ps = 183.0;
    double tau_std_ps = 22.0;
    double linewidth_mean_ghz = 6.73;
    double linewidth_std_ghz = 1.77;
    std::uint64_t seed = 1;
};

// Simulated tag streams of one correlation run (plus the per-channel tags when
// keep_tags was requested), so callers can persist or re-analyze them.
struct TagPayload {
    std::vector<std::vector<TimeTag>> channels;
    TimePs duration_ps = 0;
};

// Hanbury-Brown/Twiss on the on-chip splitter: fine + coarse correlation,
// bunching fit, g2_raw and g2_bgc extraction.
ExperimentReport run_hbt(const QdPreset& preset, const HbtOptions& options,
                         TagPayload* tags_out = nullptr);

// Mach-Zehnder with one period of delay: co- and cross-polarized runs,
// V_raw extraction and the fully corrected mean wave-packet overlap.
ExperimentReport run_hom(const QdPreset& preset, const HomOptions& options,
                         TagPayload* tags_co_out = nullptr, TagPayload* tags_cross_out = nullptr);

// Decay-time measurement against the laser trigger with the fast APD.
ExperimentReport run_tcspc(const QdPreset& preset, const TcspcOptions& options,
                           TagPayload* tags_out = nullptr);

// Fabry-Perot linewidth scan with the Lorentzian part of the fit frozen.
ExperimentReport run_fpi(const QdPreset& preset, const FpiOptions& options);

// Excitation-power sweep resolving the Rabi oscillation.
ExperimentReport run_rabi(const QdPreset& preset, const RabiOptions& options);

// Wavelength / decay-time / linewidth statistics over a sampled QD ensemble.
ExperimentReport run_ensemble(const EnsembleOptions& options);

// Re-runs the HBT/HOM/TCSPC analysis chains on externally supplied tag
// streams (no simulation); used by the tag-file analysis front end.
ExperimentReport analyze_hbt_tags(const QdPreset& preset, const std::vector<TimeTag>& ch0,
                                  const std::vector<TimeTag>& ch1);
ExperimentReport analyze_hom_tags(const QdPreset& preset, const std::vector<TimeTag>& co_ch0,
                                  const std::vector<TimeTag>& co_ch1,
                                  const std::vector<TimeTag>& cross_ch0,
                                  const std::vector<TimeTag>& cross_ch1,
                                  std::optional<Measured> g2_for_correction = std::nullopt);
ExperimentReport analyze_tcspc_tags(const QdPreset& preset, const std::vector<TimeTag>& tags);

}  // namespace photonlab

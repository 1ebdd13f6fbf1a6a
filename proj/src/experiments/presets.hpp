#pragma once

#include <map>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "emitter/blinking.hpp"

namespace photonlab {

struct ExpectedValue {
    double value = 0.0;
    double tolerance = 0.0;
};

// A fully calibrated emitter + circuit + detector configuration for one of the
// measured quantum dots, together with the published values it is expected to
// reproduce in closed loop.
struct QdPreset {
    std::string name;
    EmitterConfig emitter;
    CircuitConfig circuit;
    DetectorConfig detector_corr;   // the two coincidence APDs
    DetectorConfig detector_tcspc;  // the fast timing APD
    double blink_amplitude_split = 0.5;  // a1/(a1+a2) used at calibration time
    double injected_overlap = 1.0;  // mean wave-packet overlap of consecutive photons
    double sigma_g_total_ghz = 0.0; // total Gaussian broadening (slow + fast)
    double fpi_instrument_ghz = 0.2;
    double achieved_v_raw = 0.0;    // the raw visibility the calibration model predicts
    // default multiphoton input of the HOM correction (the published g2_bgc
    // with its measurement uncertainty)
    double g2_correction_value = 0.0;
    double g2_correction_error = 0.0;
    std::map<std::string, ExpectedValue> expected;
};

// Calibration inputs, expressed in the observables the measurements report.
struct QdObservables {
    std::string name;
    double prep_fidelity = 0.584;
    double tau_ps = 201.0;
    double linewidth_ghz = 4.82;
    double g2_raw = 0.142;
    double g2_bgc = 0.078;
    double v_raw = 0.760;
    double v_corr = 0.859;
    double wavelength_nm = 781.71;
    double prep_fidelity_err = 0.025;
    double tau_err_ps = 1.0;
    double linewidth_err_ghz = 0.09;
    double g2_raw_err = 0.003;
    double g2_bgc_err = 0.010;
    double v_raw_err = 0.012;
    double v_corr_err = 0.015;
};

// Inverts the observables into simulator knobs:
//  - blinking rates from (beta, tau_b1, tau_b2) with an equal amplitude split;
//  - the total Gaussian broadening from the Voigt linewidth with the
//    Lorentzian part at the Fourier limit, partitioned into a slow (OU) and a
//    fast (per-photon) component such that consecutive photons overlap by
//    v_corr on average;
//  - re-excitation, pulsed-stray and CW-stray rates such that the correlation
//    chain reproduces (g2_raw, g2_bgc, v_raw) under the default detection
//    chain. The stray/re-excitation split is fixed by the v_raw target and
//    clamped to [0,1] when that target is unreachable at a 50/50 fiber
//    beamsplitter (the achieved value is recorded).
QdPreset build_preset(const QdObservables& obs);

// Presets for the three characterized dots, plus name-based lookup
// (qd1, qd2, qd3). Throws std::invalid_argument for unknown names.
const QdPreset& preset_by_name(const std::string& name);
std::vector<std::string> preset_names();

// Per-photon detection probability of the calibrated chain at one coincidence
// detector (attenuation x MMI transmission x 50/50 split x efficiency).
double chain_detection_probability(const CircuitConfig& circuit, const DetectorConfig& detector);

// Fraction of multiphoton coincidences that survives into the HOM central
// peak for this configuration: same-arm re-excitation pairs keep only
// (a^2+b^2)/(a+b)^2 of their weight, stray light keeps all of it.
double hom_multiphoton_central_fraction(const QdPreset& preset);

// Re-excited-pair share of the pulsed counts in the central correlation peak,
// used to compose the correct central-peak shape in the comb fits.
double hbt_central_reexc_share(const QdPreset& preset);
double hom_central_reexc_share(const QdPreset& preset, bool cross_polarized);

}  // namespace photonlab

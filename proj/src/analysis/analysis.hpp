#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "analysis/fit.hpp"
#include "core/types.hpp"
#include "correlator/correlator.hpp"

namespace photonlab {

struct Measured {
    double value = 0.0;
    double error = 0.0;
};

// --- decay -----------------------------------------------------------------

// Weighted least squares of a TCSPC histogram against the exponentially
// modified Gaussian A*EMG(t; tau, sigma_irf, t0) + b. Returns tau_ps,
// amplitude, t0_ps, background; non-convergence is flagged, not thrown.
FitResult fit_decay(std::span<const double> t_ps, std::span<const double> counts,
                    double irf_sigma_ps);

// --- blinking / bunching -----------------------------------------------------

struct BunchingFit {
    double poisson_level = 0.0;  // per coarse bin
    double a1 = 0.0;
    double tau_b1_us = 0.0;
    double a2 = 0.0;
    double tau_b2_us = 0.0;
    double beta = 1.0;
    double beta_error = 0.0;
    double tau_b1_error_us = 0.0;
    double tau_b2_error_us = 0.0;
    bool two_component = true;
    bool converged = false;
    double chi2_reduced = 0.0;

    // side-peak enhancement factor 1 + a1 e^{-t/tau1} + a2 e^{-t/tau2}
    double enhancement(double abs_delay_ps) const;
};

// Fits the coarse (one bin per excitation period) correlation to
// P * (1 + a1 e^{-|mT|/tau1} + a2 e^{-|mT|/tau2}) + floor, excluding the
// central |m| <= exclude_center_peaks bins. The flat floor (uncorrelated
// background level per bin, known from the fine-histogram fit) is held fixed,
// and the finite-duration triangular pair-count falloff is part of the model.
// Collapses to a single component when the second one is degenerate,
// selecting by reduced chi^2. Two comparable timescales are nearly degenerate
// with both amplitudes free; passing fixed_amplitude_split in [0,1] ties
// a1/(a1+a2) to a known partition and makes them identifiable.
BunchingFit fit_bunching(const CorrelationHistogram& coarse, int exclude_center_peaks = 0,
                         double fixed_floor_per_bin = 0.0, double fixed_amplitude_split = -1.0);

// --- g2 extraction -----------------------------------------------------------

// Ratio of the central peak area to the bunching-corrected average of
// n_side_peaks side peaks (both delay signs, skipping |m| <= skip_near).
// Poisson errors propagated. Throws when side statistics are empty.
Measured extract_g2_raw(const PeakAreas& areas, const BunchingFit& bunching, int n_side_peaks,
                        int skip_near = 0);

// Comb fit of the fine histogram around the central peaks: two-sided
// exponential peaks (width tau) convolved with the combined detector response
// plus a flat floor. Peak areas are free; side peaks are translated to the
// debunched Poisson level via the bunching fit.
struct CombFit {
    Measured central_area;          // background-free counts in the central peak
    Measured side_level_debunched;  // background-free, bunching-corrected side area
    Measured floor_per_bin;
    Measured g2;                    // central / debunched side level
    bool converged = false;
    FitResult raw;
};

// central_reexc_weight mixes the re-excited-pair shape into the central peak
// (known from the independent stray/re-excitation calibration).
CombFit fit_g2_background(const CorrelationHistogram& fine, double irf_sigma_ps,
                          std::uint64_t period_ps, double tau_ps, const BunchingFit& bunching,
                          int n_peaks_each_side = 3, int skip_near = 0,
                          double central_reexc_weight = 0.0);

// --- two-photon interference --------------------------------------------------

// V = 1 - g_par(0)/g_perp(0), each normalized to its bunching-corrected
// Poisson level exactly as extract_g2_raw does.
Measured extract_vtpi_raw(const PeakAreas& peaks_copol, const PeakAreas& peaks_crosspol,
                          const BunchingFit& bunching, int n_side_peaks, int skip_near = 1);

// Full correction of the interference visibility: flat background removed by
// the comb fits, first-order multiphoton subtraction (g2_0 scaled by
// mp_central_fraction, the share of multiphoton coincidences that lands in
// the HOM central peak), and the beamsplitter-imbalance factor
// (R^2+T^2)/(2RT). Returns the mean wave-packet overlap M, clamped to [0,1].
struct VtpiCorrection {
    Measured m;
    bool clamped = false;
    bool inconsistent = false;
};

VtpiCorrection correct_vtpi(const CombFit& copol, const CombFit& crosspol, Measured g2_0,
                            double r_b, double mp_central_fraction = 1.0);

// --- spectroscopy --------------------------------------------------------------

// Voigt fit of a Fabry-Perot scan with the Lorentzian component frozen to
// f_l + instrument_l (emitter Fourier limit plus the known instrument
// resolution). Reports the deconvolved emitter linewidth voigt_fwhm(f_l, f_g).
// Params: amplitude, center_ghz, f_g_ghz, background, fwhm_ghz, sigma_g_ghz.
FitResult fit_voigt_fixed_lorentzian(std::span<const double> detuning_ghz,
                                     std::span<const double> counts, double f_l_ghz,
                                     double instrument_l_ghz = 0.0);

// --- Rabi ----------------------------------------------------------------------

// Fit of integrated intensity versus excitation power to
// A exp(-gamma theta) sin^2(theta/2) + b with theta = pi sqrt(P/P_pi).
// prep_fidelity = exp(-gamma pi). Degenerate (oscillation-free) data is
// flagged via converged = false.
FitResult fit_rabi(std::span<const double> power, std::span<const double> counts);

// --- remote visibility -----------------------------------------------------------

// Expected two-photon visibility of two remote emitters with equal tau and
// independent Gaussian detuning spread sigma_g each:
//   V = E[1/(1+(2 pi delta tau)^2)],  delta ~ N(0, sqrt(2) sigma_g)
// evaluated in closed form sqrt(pi/2)/s * erfcx(1/(sqrt(2) s)) with
// s = 2 pi sqrt(2) sigma_g tau.
double remote_visibility(double tau_ps, double sigma_g_ghz);

// --- ensemble -----------------------------------------------------------------

struct EnsembleStats {
    double mean = 0.0;
    double std_dev = 0.0;  // sample (n-1)
    std::size_t n = 0;
    std::vector<double> bin_edges;
    std::vector<std::uint64_t> histogram;
};

// Requires at least two values.
EnsembleStats ensemble_stats(std::span<const double> values, std::size_t n_bins = 0);

}  // namespace photonlab

#pragma once

#include <cstdint>
#include <span>

namespace photonlab {

// Exponentially modified Gaussian: Exp(tau) decay convolved with an N(0,sigma)
// response, area-normalized. Evaluated through erfcx where cancellation would
// otherwise occur, stable for all u.
double emg_pdf(double u, double tau, double sigma);

// Two-sided exponential exp(-|x|/tau)/(2 tau) convolved with N(0,sigma);
// the shape of one correlation peak between exponential wave packets.
double twosided_emg_pdf(double x, double tau, double sigma);

// Click-delay density of a re-excited pair convolved with N(0,sigma). The
// second wave packet starts one Exp(tau) after the first and each click adds
// its own Exp(tau), so the bare delay is Gamma(2,tau) - Exp(tau):
//   f(z) = e^{-|z|/tau} (1 + 2 max(z,0)/tau) / (4 tau)
double reexcited_pair_pdf(double x, double tau, double sigma);

// The least-squares models used by the analysis fits. They are plain structs
// so tests can validate the analytic gradients against finite differences.

// p = {amplitude(total counts), tau_ps, t0_ps, background}
struct DecayModel {
    double irf_sigma_ps = 0.0;
    double bin_ps = 1.0;
    double value(double t, std::span<const double> p) const;
};

// p = {poisson_level, a1, tau_b1_us, a2, tau_b2_us} (or 3 params, single).
// With a fixed amplitude split s, p = {poisson_level, a_total, tau_b1_us,
// tau_b2_us} and the components are a_total*(s, 1-s); tying the split removes
// the near-degeneracy of two comparable timescales.
// x is |delay| in ps; the flat floor is a fixed constant. A finite
// acquisition duration tilts every pair count by (1 - |delay|/duration);
// duration_ps == 0 disables the factor.
struct BunchingModel {
    double floor_per_bin = 0.0;
    bool two_component = true;
    double duration_ps = 0.0;
    double fixed_split = -1.0;  // a1/(a1+a2); < 0 leaves both amplitudes free
    double value(double x, std::span<const double> p) const;
    void gradient(double x, std::span<const double> p, std::span<double> out) const;
};

// p = {floor, area_-n .. area_+n}; comb of two-sided EMG peaks on a flat
// floor. The central peak may mix in the re-excited-pair shape with weight
// central_reexc_weight (known from the independent stray/re-excitation
// calibration).
struct CombModel {
    double period_ps = 6570.0;
    double bin_ps = 10.0;
    double tau_ps = 201.0;
    double irf_sigma_ps = 350.0;
    int n_peaks_each_side = 3;
    double central_reexc_weight = 0.0;
    int peak_of(std::size_t param_index) const {
        return static_cast<int>(param_index) - 1 - n_peaks_each_side;
    }
    double peak_shape(int m, double dm) const;
    double value(double x, std::span<const double> p) const;
    void gradient(double x, std::span<const double> p, std::span<double> out) const;
};

// p = {amplitude, gamma, pi_power, background}; theta = pi sqrt(P/pi_power)
struct RabiModel {
    double value(double power, std::span<const double> p) const;
    void gradient(double power, std::span<const double> p, std::span<double> out) const;
};

// p = {amplitude, center_ghz, f_g_ghz, background}; Lorentzian part frozen
struct VoigtScanModel {
    double f_l_total_ghz = 0.79;
    double value(double x, std::span<const double> p) const;
};

}  // namespace photonlab

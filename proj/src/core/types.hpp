#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace photonlab {

// Unit conventions used throughout: absolute times and delays are integer
// picoseconds, frequencies are double GHz, rates named *_hz are per second,
// blinking rates are per microsecond, wavelengths are nm. Time values stay
// below 2^63 ps so signed differences never overflow.
using TimePs = std::uint64_t;
using DeltaPs = std::int64_t;

struct TimeTag {
    std::uint8_t channel = 0;
    TimePs time_ps = 0;
};

enum class Polarization : std::uint8_t { H = 0, V = 1 };

enum class PhotonOrigin : std::uint8_t {
    signal = 0,
    reexcitation = 1,
    stray_pulsed = 2,
    stray_cw = 3,
};

// One emitted single-photon wave packet. t0 is the wave-packet start (the
// excitation instant); the physical detection instant is sampled at the
// detector from the Exp(tau) intensity envelope. id is derived from the pulse
// index alone, so it is stable under any segmentation of the pulse train.
struct PhotonPacket {
    TimePs t0_ps = 0;
    double tau_ps = 1.0;
    double detuning_ghz = 0.0;
    Polarization pol = Polarization::H;
    PhotonOrigin origin = PhotonOrigin::signal;
    std::uint64_t id = 0;

    static std::uint64_t make_id(std::uint64_t pulse_index, unsigned ordinal) {
        return (pulse_index << 4) | (ordinal & 0xF);
    }
};

// Rates of the ON <-> OFF_A / ON <-> OFF_B blinking chain, per microsecond.
struct BlinkRates {
    double k_on_a = 0.0;   // OFF_A -> ON
    double k_off_a = 0.0;  // ON -> OFF_A
    double k_on_b = 0.0;   // OFF_B -> ON
    double k_off_b = 0.0;  // ON -> OFF_B
};

struct EmitterConfig {
    double tau_ps = 201.0;
    double prep_fidelity = 0.584;
    double p_reexcite = 0.0;
    // Slow spectral diffusion: Ornstein-Uhlenbeck with stationary std sigma_g
    // and correlation time ou_tc. sigma_fast is the broadening component that
    // fluctuates faster than one pulse period, drawn white per photon; the
    // total Gaussian linewidth of the line is sqrt(sigma_g^2 + sigma_fast^2).
    double sigma_g_ghz = 0.0;
    double sigma_fast_ghz = 0.0;
    double ou_tc_us = 10.0;
    BlinkRates blink;
    double wavelength_nm = 781.71;

    double sigma_total_ghz() const;
    void validate() const;
};

enum class PolarizationSetting : std::uint8_t { co = 0, cross = 1 };

struct CircuitConfig {
    std::uint64_t rep_period_ps = 6570;
    double mmi_ratio = 0.5;
    double mmi_transmission = 0.822;
    double fiber_bs_ratio = 0.5;
    std::uint64_t delay_ps = 6570;
    double attenuation_db_per_mm = 8.15;
    double path_length_mm = 0.35;
    // Stray light is calibrated at the detector channels: pulsed stray is the
    // mean number of detected stray photons per excitation pulse per channel,
    // CW stray the detected rate per channel. Both are distinguishable from
    // the emitter photons, so routing them classically per channel is exact.
    double stray_pulsed_rate = 0.0;
    double stray_cw_rate_hz = 0.0;
    double stray_tau_ps = 25.0;  // effective pulsed-stray envelope (laser pulse length)
    PolarizationSetting pol_config = PolarizationSetting::co;

    void validate() const;
};

struct DetectorConfig {
    double irf_sigma_ps = 250.0;
    double dark_rate_hz = 100.0;
    std::uint64_t dead_time_ps = 0;
    double efficiency = 0.15;

    void validate() const;
};

// Parameter estimates with 1-sigma uncertainties from a least-squares fit.
struct FitResult {
    struct Param {
        double value = 0.0;
        double error = 0.0;
    };

    std::map<std::string, Param> params;
    double chi2_reduced = 0.0;
    bool converged = false;
    std::size_t n_points = 0;

    bool has(const std::string& name) const { return params.count(name) != 0; }
    double value(const std::string& name) const;
    double error(const std::string& name) const;
    void set(const std::string& name, double value, double error);
};

}  // namespace photonlab

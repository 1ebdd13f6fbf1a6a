#include "core/types.hpp"

#include <cmath>

namespace photonlab {

namespace {
void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}
}  // namespace

double EmitterConfig::sigma_total_ghz() const {
    return std::sqrt(sigma_g_ghz * sigma_g_ghz + sigma_fast_ghz * sigma_fast_ghz);
}

void EmitterConfig::validate() const {
    require(tau_ps > 0.0, "emitter.tau_ps must be > 0");
    require(prep_fidelity >= 0.0 && prep_fidelity <= 1.0, "emitter.prep_fidelity must be in [0,1]");
    require(p_reexcite >= 0.0 && p_reexcite < 1.0, "emitter.p_reexcite must be in [0,1)");
    require(sigma_g_ghz >= 0.0, "emitter.sigma_g_ghz must be >= 0");
    require(sigma_fast_ghz >= 0.0, "emitter.sigma_fast_ghz must be >= 0");
    require(ou_tc_us > 0.0, "emitter.ou_tc_us must be > 0");
    require(blink.k_on_a >= 0.0 && blink.k_off_a >= 0.0 && blink.k_on_b >= 0.0 &&
                blink.k_off_b >= 0.0,
            "emitter.blink rates must be >= 0");
    require(wavelength_nm > 0.0, "emitter.wavelength_nm must be > 0");
}

void CircuitConfig::validate() const {
    require(rep_period_ps > 0, "circuit.rep_period_ps must be > 0");
    require(mmi_ratio > 0.0 && mmi_ratio < 1.0, "circuit.mmi_ratio must be in (0,1)");
    require(mmi_transmission > 0.0 && mmi_transmission <= 1.0,
            "circuit.mmi_transmission must be in (0,1]");
    require(fiber_bs_ratio > 0.0 && fiber_bs_ratio < 1.0, "circuit.fiber_bs_ratio must be in (0,1)");
    require(attenuation_db_per_mm >= 0.0, "circuit.attenuation_db_per_mm must be >= 0");
    require(path_length_mm >= 0.0, "circuit.path_length_mm must be >= 0");
    require(stray_pulsed_rate >= 0.0, "circuit.stray_pulsed_rate must be >= 0");
    require(stray_cw_rate_hz >= 0.0, "circuit.stray_cw_rate_hz must be >= 0");
    require(stray_tau_ps > 0.0, "circuit.stray_tau_ps must be > 0");
}

void DetectorConfig::validate() const {
    require(irf_sigma_ps >= 0.0, "detector.irf_sigma_ps must be >= 0");
    require(dark_rate_hz >= 0.0, "detector.dark_rate_hz must be >= 0");
    require(efficiency >= 0.0 && efficiency <= 1.0, "detector.efficiency must be in [0,1]");
}

double FitResult::value(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("FitResult: no parameter '" + name + "'");
    return it->second.value;
}

double FitResult::error(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw std::out_of_range("FitResult: no parameter '" + name + "'");
    return it->second.error;
}

void FitResult::set(const std::string& name, double value, double error) {
    params[name] = Param{value, error};
}

}  // namespace photonlab

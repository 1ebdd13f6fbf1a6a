#include "analysis/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "analysis/models.hpp"
#include "core/lineshape.hpp"

namespace photonlab {

namespace {

std::vector<std::string> names(std::initializer_list<const char*> list) {
    return std::vector<std::string>(list.begin(), list.end());
}

double safe_sqrt(double v) { return v > 0.0 ? std::sqrt(v) : 0.0; }

}  // namespace

// --- decay -----------------------------------------------------------------

FitResult fit_decay(std::span<const double> t_ps, std::span<const double> counts,
                    double irf_sigma_ps) {
    if (t_ps.empty() || t_ps.size() != counts.size()) {
        throw std::invalid_argument("fit_decay: empty or mismatched histogram");
    }
    const std::size_t n = t_ps.size();
    const double bin = n > 1 ? t_ps[1] - t_ps[0] : 1.0;

    std::size_t i_max = 0;
    double y_max = counts[0], y_min = counts[0], total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (counts[i] > y_max) {
            y_max = counts[i];
            i_max = i;
        }
        y_min = std::min(y_min, counts[i]);
        total += counts[i];
    }
    // crude decay scale: distance from the peak to the 1/e point
    double tau0 = bin;
    for (std::size_t i = i_max; i < n; ++i) {
        if (counts[i] - y_min < (y_max - y_min) / std::numbers::e) {
            tau0 = std::max(bin, t_ps[i] - t_ps[i_max]);
            break;
        }
    }
    const double b0 = y_min;
    // amplitude parameter is the total signal count; per-bin model scales by bin
    const double a0 = std::max(total - b0 * static_cast<double>(n), y_max);
    const double t00 = t_ps[i_max] - irf_sigma_ps;

    const DecayModel m{irf_sigma_ps, bin};
    const std::vector<double> w = poisson_weights(counts);
    const std::vector<double> p0 = {a0, tau0, t00, b0};
    return lm_fit(t_ps, counts, w, p0, names({"amplitude", "tau_ps", "t0_ps", "background"}),
                  [m](double t, std::span<const double> p) { return m.value(t, p); });
}

// --- bunching ----------------------------------------------------------------

double BunchingFit::enhancement(double abs_delay_ps) const {
    const double t_us = std::abs(abs_delay_ps) * 1e-6;
    double e = 1.0;
    if (a1 != 0.0 && tau_b1_us > 0.0) e += a1 * std::exp(-t_us / tau_b1_us);
    if (a2 != 0.0 && tau_b2_us > 0.0) e += a2 * std::exp(-t_us / tau_b2_us);
    return e;
}

namespace {

FitResult fit_bunching_model(std::span<const double> x, std::span<const double> y,
                             std::span<const double> w, double floor, bool two, double duration_ps,
                             double fixed_split, std::span<const double> p0) {
    const BunchingModel m{floor, two, duration_ps, fixed_split};
    const auto nm = (two && fixed_split >= 0.0)
                        ? names({"poisson_level", "a_total", "tau_b1_us", "tau_b2_us"})
                        : (two ? names({"poisson_level", "a1", "tau_b1_us", "a2", "tau_b2_us"})
                               : names({"poisson_level", "a1", "tau_b1_us"}));
    return lm_fit(x, y, w, p0, nm,
                  [m](double t, std::span<const double> p) { return m.value(t, p); },
                  [m](double t, std::span<const double> p, std::span<double> out) {
                      m.gradient(t, p, out);
                  });
}

}  // namespace

BunchingFit fit_bunching(const CorrelationHistogram& coarse, int exclude_center_peaks,
                         double fixed_floor_per_bin, double fixed_amplitude_split) {
    std::vector<double> x, y;
    x.reserve(coarse.counts.size());
    y.reserve(coarse.counts.size());
    const std::int64_t excl =
        static_cast<std::int64_t>(exclude_center_peaks) * static_cast<std::int64_t>(coarse.bin_ps);
    for (std::size_t i = 0; i < coarse.counts.size(); ++i) {
        const std::int64_t c = coarse.bin_center_ps(i);
        if (std::llabs(c) <= excl) continue;
        x.push_back(static_cast<double>(std::llabs(c)));
        y.push_back(static_cast<double>(coarse.counts[i]));
    }
    if (x.size() < 100) throw std::invalid_argument("fit_bunching: need >= 100 side-peak bins");
    const std::vector<double> w = poisson_weights(y);

    // starting values from the near/far contrast
    double far_sum = 0.0, near_sum = 0.0;
    std::size_t far_n = 0, near_n = 0;
    const double x_max = *std::max_element(x.begin(), x.end());
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.8 * x_max) {
            far_sum += y[i];
            ++far_n;
        } else if (x[i] < 0.02 * x_max) {
            near_sum += y[i];
            ++near_n;
        }
    }
    const double p_far = std::max(far_sum / std::max<std::size_t>(far_n, 1) - fixed_floor_per_bin, 1.0);
    const double p_near = std::max(near_sum / std::max<std::size_t>(near_n, 1) - fixed_floor_per_bin, 1.0);
    const double a_tot0 = std::max(p_near / p_far - 1.0, 0.05);

    const double duration = static_cast<double>(coarse.duration_ps);
    const bool tied = fixed_amplitude_split >= 0.0;
    FitResult two =
        tied ? fit_bunching_model(x, y, w, fixed_floor_per_bin, true, duration,
                                  fixed_amplitude_split,
                                  std::vector<double>{p_far, a_tot0, 50.0, 150.0})
             : fit_bunching_model(x, y, w, fixed_floor_per_bin, true, duration, -1.0,
                                  std::vector<double>{p_far, 0.5 * a_tot0, 50.0, 0.5 * a_tot0,
                                                      150.0});
    FitResult one = fit_bunching_model(x, y, w, fixed_floor_per_bin, false, duration, -1.0,
                                       std::vector<double>{p_far, a_tot0, 80.0});

    double two_a1, two_a2, two_a1_err, two_a2_err;
    if (tied) {
        two_a1 = fixed_amplitude_split * two.value("a_total");
        two_a2 = (1.0 - fixed_amplitude_split) * two.value("a_total");
        two_a1_err = fixed_amplitude_split * two.error("a_total");
        two_a2_err = (1.0 - fixed_amplitude_split) * two.error("a_total");
    } else {
        two_a1 = two.value("a1");
        two_a2 = two.value("a2");
        two_a1_err = two.error("a1");
        two_a2_err = two.error("a2");
    }
    const double two_tau2 = two.value("tau_b2_us");

    const bool two_valid = two.converged && two_a1 >= 0.0 && two_a2 >= 0.0 &&
                           two.value("tau_b1_us") > 0.0 && two_tau2 > 0.0;
    const bool one_valid = one.converged && one.value("a1") >= 0.0 && one.value("tau_b1_us") > 0.0;
    bool use_two = two_valid;
    // nested model selection: prefer the single component when it explains the
    // data; a caller-pinned split asserts that two components exist
    if (!tied && two_valid && one_valid &&
        one.chi2_reduced <= two.chi2_reduced * (1.0 + 1e-3)) {
        use_two = false;
    }

    BunchingFit out;
    if (use_two) {
        out.two_component = true;
        out.converged = two.converged;
        out.chi2_reduced = two.chi2_reduced;
        out.poisson_level = two.value("poisson_level");
        out.a1 = two_a1;
        out.tau_b1_us = two.value("tau_b1_us");
        out.a2 = two_a2;
        out.tau_b2_us = two_tau2;
        out.tau_b1_error_us = two.error("tau_b1_us");
        out.tau_b2_error_us = two.error("tau_b2_us");
        if (out.tau_b2_us < out.tau_b1_us) {
            std::swap(out.a1, out.a2);
            std::swap(out.tau_b1_us, out.tau_b2_us);
            std::swap(out.tau_b1_error_us, out.tau_b2_error_us);
        }
        const double s = 1.0 + out.a1 + out.a2;
        out.beta = 1.0 / s;
        out.beta_error =
            safe_sqrt(two_a1_err * two_a1_err + two_a2_err * two_a2_err) / (s * s);
    } else if (one_valid) {
        out.two_component = false;
        out.converged = one.converged;
        out.chi2_reduced = one.chi2_reduced;
        out.poisson_level = one.value("poisson_level");
        out.a1 = one.value("a1");
        out.tau_b1_us = one.value("tau_b1_us");
        out.tau_b1_error_us = one.error("tau_b1_us");
        const double s = 1.0 + out.a1;
        out.beta = 1.0 / s;
        out.beta_error = one.error("a1") / (s * s);
    } else {
        out.converged = false;
        out.poisson_level = p_far;
        out.beta = 1.0;
    }
    return out;
}

// --- g2 extraction -------------------------------------------------------------

namespace {

// collect side-peak indices: both signs, |m| in (skip, skip + n/2]
std::vector<std::int64_t> side_peak_indices(const PeakAreas& areas, int n_side_peaks,
                                            int skip_near) {
    std::vector<std::int64_t> out;
    const int per_side = std::max(1, n_side_peaks / 2);
    for (int m = skip_near + 1; m <= skip_near + per_side; ++m) {
        if (areas.areas.count(m)) out.push_back(m);
        if (areas.areas.count(-m)) out.push_back(-m);
    }
    return out;
}

}  // namespace

Measured extract_g2_raw(const PeakAreas& areas, const BunchingFit& bunching, int n_side_peaks,
                        int skip_near) {
    const std::vector<std::int64_t> sides = side_peak_indices(areas, n_side_peaks, skip_near);
    if (sides.empty()) throw std::invalid_argument("extract_g2_raw: no side peaks in range");
    const double T = static_cast<double>(areas.period_ps);
    double level = 0.0, level_var = 0.0;
    for (std::int64_t m : sides) {
        const double corr = bunching.enhancement(static_cast<double>(m) * T);
        const double a = static_cast<double>(areas.area(m));
        level += a / corr;
        level_var += a / (corr * corr);
    }
    const double n_sides = static_cast<double>(sides.size());
    level /= n_sides;
    level_var /= n_sides * n_sides;
    if (level <= 0.0) throw std::invalid_argument("extract_g2_raw: zero side-peak counts");

    const double a0 = static_cast<double>(areas.area(0));
    const double g = a0 / level;
    const double rel2 = (a0 > 0.0 ? 1.0 / a0 : 0.0) + level_var / (level * level);
    return Measured{g, g * safe_sqrt(rel2)};
}

CombFit fit_g2_background(const CorrelationHistogram& fine, double irf_sigma_ps,
                          std::uint64_t period_ps, double tau_ps, const BunchingFit& bunching,
                          int n_peaks_each_side, int skip_near, double central_reexc_weight) {
    const double T = static_cast<double>(period_ps);
    const double bin = static_cast<double>(fine.bin_ps);
    const int n_peaks = n_peaks_each_side;
    if (fine.range_ps < (static_cast<std::uint64_t>(n_peaks) + 1) * period_ps / 2 * 2) {
        // need the full comb plus margins inside the histogram
        if (static_cast<double>(fine.range_ps) < (n_peaks + 0.5) * T) {
            throw std::invalid_argument("fit_g2_background: histogram narrower than the comb");
        }
    }

    std::vector<double> x, y;
    x.reserve(fine.counts.size());
    const double span = (n_peaks + 0.5) * T;
    for (std::size_t i = 0; i < fine.counts.size(); ++i) {
        const double c = static_cast<double>(fine.bin_center_ps(i));
        if (std::abs(c) > span) continue;
        x.push_back(c);
        y.push_back(static_cast<double>(fine.counts[i]));
    }
    const std::vector<double> w = poisson_weights(y);

    // p = {floor, A_-n .. A_n}; all parameters are linear in the model
    const std::size_t k = static_cast<std::size_t>(2 * n_peaks + 2);
    const CombModel m{T, bin, tau_ps, irf_sigma_ps, n_peaks, central_reexc_weight};

    // window sums as starting amplitudes
    std::vector<double> p0(k, 0.0);
    double y_min = y.empty() ? 0.0 : *std::min_element(y.begin(), y.end());
    p0[0] = y_min;
    for (std::size_t j = 1; j < k; ++j) {
        const double center = static_cast<double>(m.peak_of(j)) * T;
        double s = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (std::abs(x[i] - center) <= 0.5 * T) s += y[i] - y_min;
        }
        p0[j] = std::max(s, 1.0);
    }
    std::vector<std::string> nm(k);
    nm[0] = "floor";
    for (std::size_t j = 1; j < k; ++j) nm[j] = "area_" + std::to_string(m.peak_of(j));

    FitResult fit = lm_fit(x, y, w, p0, nm,
                           [m](double t, std::span<const double> p) { return m.value(t, p); },
                           [m](double t, std::span<const double> p, std::span<double> out) {
                               m.gradient(t, p, out);
                           });

    CombFit out;
    out.converged = fit.converged;
    out.raw = fit;
    out.floor_per_bin = {fit.value("floor"), fit.error("floor")};
    out.central_area = {fit.value("area_0"), fit.error("area_0")};
    double level = 0.0, level_var = 0.0;
    std::size_t n_sides = 0;
    for (int m = -n_peaks; m <= n_peaks; ++m) {
        if (std::abs(m) <= skip_near || m == 0) continue;
        const double corr = bunching.enhancement(static_cast<double>(m) * T);
        const std::string name = "area_" + std::to_string(m);
        level += fit.value(name) / corr;
        const double e = fit.error(name) / corr;
        level_var += e * e;
        ++n_sides;
    }
    if (n_sides == 0) throw std::invalid_argument("fit_g2_background: no side peaks in comb");
    level /= static_cast<double>(n_sides);
    level_var /= static_cast<double>(n_sides * n_sides);
    out.side_level_debunched = {level, safe_sqrt(level_var)};
    if (level > 0.0) {
        const double g = out.central_area.value / level;
        const double rel2 =
            (out.central_area.value > 0.0
                 ? (out.central_area.error / out.central_area.value) *
                       (out.central_area.error / out.central_area.value)
                 : 0.0) +
            level_var / (level * level);
        out.g2 = {g, std::abs(g) * safe_sqrt(rel2)};
    } else {
        out.converged = false;
    }
    return out;
}

// --- two-photon interference ------------------------------------------------------

Measured extract_vtpi_raw(const PeakAreas& peaks_copol, const PeakAreas& peaks_crosspol,
                          const BunchingFit& bunching, int n_side_peaks, int skip_near) {
    const Measured g_par = extract_g2_raw(peaks_copol, bunching, n_side_peaks, skip_near);
    const Measured g_perp = extract_g2_raw(peaks_crosspol, bunching, n_side_peaks, skip_near);
    if (g_perp.value <= 0.0) throw std::invalid_argument("extract_vtpi_raw: g_perp(0) is zero");
    const double r = g_par.value / g_perp.value;
    const double rel2 = (g_par.value > 0.0 ? (g_par.error / g_par.value) * (g_par.error / g_par.value)
                                           : 0.0) +
                        (g_perp.error / g_perp.value) * (g_perp.error / g_perp.value);
    return Measured{1.0 - r, std::abs(r) * safe_sqrt(rel2)};
}

VtpiCorrection correct_vtpi(const CombFit& copol, const CombFit& crosspol, Measured g2_0,
                            double r_b, double mp_central_fraction) {
    if (!(r_b > 0.0 && r_b < 1.0)) throw std::invalid_argument("correct_vtpi: r_b in (0,1)");
    const double t_b = 1.0 - r_b;
    const double split_factor = (r_b * r_b + t_b * t_b) / (2.0 * r_b * t_b);

    const auto corrected = [&](const CombFit& f) {
        const double sub = mp_central_fraction * g2_0.value * f.side_level_debunched.value;
        const double v = f.central_area.value - sub;
        const double e2 =
            f.central_area.error * f.central_area.error +
            std::pow(mp_central_fraction * g2_0.error * f.side_level_debunched.value, 2) +
            std::pow(mp_central_fraction * g2_0.value * f.side_level_debunched.error, 2);
        return Measured{v, safe_sqrt(e2)};
    };
    const Measured a_par = corrected(copol);
    const Measured a_perp = corrected(crosspol);

    VtpiCorrection out;
    if (a_perp.value <= 0.0) {
        out.inconsistent = true;
        out.m = {0.0, 0.0};
        return out;
    }
    const double sigma_pair = safe_sqrt(a_par.error * a_par.error + a_perp.error * a_perp.error);
    if (a_par.value > a_perp.value + sigma_pair) {
        out.inconsistent = true;
        out.m = {0.0, 0.0};
        return out;
    }
    const double ratio = a_par.value / a_perp.value;
    const double rel2 =
        (a_par.value != 0.0 ? (a_par.error / a_par.value) * (a_par.error / a_par.value) : 0.0) +
        (a_perp.error / a_perp.value) * (a_perp.error / a_perp.value);
    double m = (1.0 - ratio) * split_factor;
    const double m_err = std::abs(ratio) * safe_sqrt(rel2) * split_factor;
    if (m < 0.0) {
        m = 0.0;
        out.clamped = true;
    } else if (m > 1.0) {
        m = 1.0;
        out.clamped = true;
    }
    out.m = {m, m_err};
    return out;
}

// --- spectroscopy --------------------------------------------------------------

FitResult fit_voigt_fixed_lorentzian(std::span<const double> detuning_ghz,
                                     std::span<const double> counts, double f_l_ghz,
                                     double instrument_l_ghz) {
    if (detuning_ghz.size() < 20) {
        throw std::invalid_argument("fit_voigt_fixed_lorentzian: need >= 20 scan points");
    }
    const double f_l_total = f_l_ghz + instrument_l_ghz;

    double y_max = counts[0], y_min = counts[0];
    std::size_t i_max = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        if (counts[i] > y_max) {
            y_max = counts[i];
            i_max = i;
        }
        y_min = std::min(y_min, counts[i]);
    }
    // empirical FWHM for the start value
    const double half = y_min + 0.5 * (y_max - y_min);
    double lo = detuning_ghz.front(), hi = detuning_ghz.back();
    for (std::size_t i = i_max; i-- > 0;) {
        if (counts[i] < half) {
            lo = detuning_ghz[i];
            break;
        }
    }
    for (std::size_t i = i_max; i < counts.size(); ++i) {
        if (counts[i] < half) {
            hi = detuning_ghz[i];
            break;
        }
    }
    const double fwhm0 = std::max(hi - lo, f_l_total * 1.05);
    const double fg0 = voigt_gaussian_from_fwhm_ghz(fwhm0, f_l_total);
    const double a0 =
        (y_max - y_min) / std::max(voigt_profile(0.0, f_l_total, std::max(fg0, 1e-3)), 1e-12);

    const VoigtScanModel m{f_l_total};
    const std::vector<double> w = poisson_weights(counts);
    const std::vector<double> p0 = {a0, detuning_ghz[i_max], fg0, y_min};
    FitResult fit = lm_fit(detuning_ghz, counts, w, p0,
                           names({"amplitude", "center_ghz", "f_g_ghz", "background"}),
                           [m](double xv, std::span<const double> p) { return m.value(xv, p); });

    const double f_g = std::abs(fit.value("f_g_ghz"));
    const double f_g_err = fit.error("f_g_ghz");
    fit.set("f_g_ghz", f_g, f_g_err);
    const double fwhm = voigt_fwhm_ghz(f_l_ghz, f_g);
    const double dfwhm_dfg = f_g / std::sqrt(0.2166 * f_l_ghz * f_l_ghz + f_g * f_g);
    fit.set("fwhm_ghz", fwhm, std::abs(dfwhm_dfg) * f_g_err);
    fit.set("sigma_g_ghz", f_g / kGaussianFwhmPerSigma, f_g_err / kGaussianFwhmPerSigma);
    const double scan_span = detuning_ghz.back() - detuning_ghz.front();
    if (scan_span < 3.0 * fwhm) fit.converged = false;  // scan narrower than the line
    return fit;
}

// --- Rabi ----------------------------------------------------------------------

FitResult fit_rabi(std::span<const double> power, std::span<const double> counts) {
    if (power.size() < 8 || power.size() != counts.size()) {
        throw std::invalid_argument("fit_rabi: need >= 8 sweep points");
    }
    double y_max = counts[0], y_min = counts[0];
    std::size_t i_first_max = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
        y_max = std::max(y_max, counts[i]);
        y_min = std::min(y_min, counts[i]);
    }
    // first local maximum above 80% of the global one approximates the pi point
    for (std::size_t i = 1; i + 1 < counts.size(); ++i) {
        if (counts[i] >= counts[i - 1] && counts[i] >= counts[i + 1] &&
            counts[i] > y_min + 0.8 * (y_max - y_min)) {
            i_first_max = i;
            break;
        }
    }
    const double p_pi0 = power[i_first_max] > 0.0 ? power[i_first_max]
                                                  : power[power.size() / 2];

    const RabiModel m;
    const std::vector<double> w = poisson_weights(counts);
    const std::vector<double> p0 = {y_max - y_min, 0.15, p_pi0, y_min};
    FitResult fit = lm_fit(power, counts, w, p0,
                           names({"amplitude", "gamma", "pi_power", "background"}),
                           [m](double pw, std::span<const double> p) { return m.value(pw, p); },
                           [m](double pw, std::span<const double> p, std::span<double> out) {
                               m.gradient(pw, p, out);
                           });

    const double gamma = fit.value("gamma");
    const double fidelity = std::exp(-gamma * std::numbers::pi);
    fit.set("prep_fidelity", fidelity, fidelity * std::numbers::pi * fit.error("gamma"));
    const double p_max = *std::max_element(power.begin(), power.end());
    if (!(fit.value("pi_power") > 0.0) || fit.value("pi_power") > p_max ||
        fit.value("amplitude") <= 0.0) {
        fit.converged = false;  // no oscillation inside the sweep
    }
    return fit;
}

// --- remote visibility ------------------------------------------------------------

double remote_visibility(double tau_ps, double sigma_g_ghz) {
    if (!(tau_ps > 0.0)) throw std::domain_error("remote_visibility: tau must be > 0");
    if (sigma_g_ghz < 0.0) throw std::domain_error("remote_visibility: sigma_g must be >= 0");
    const double s = 2.0 * std::numbers::pi * std::numbers::sqrt2 * sigma_g_ghz * tau_ps * 1e-3;
    if (s < 1e-9) return 1.0;
    return std::sqrt(0.5 * std::numbers::pi) / s * erfcx(1.0 / (std::numbers::sqrt2 * s));
}

// --- ensemble -----------------------------------------------------------------

EnsembleStats ensemble_stats(std::span<const double> values, std::size_t n_bins) {
    if (values.size() < 2) throw std::invalid_argument("ensemble_stats: need >= 2 values");
    EnsembleStats out;
    out.n = values.size();
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std_dev = std::sqrt(ss / static_cast<double>(values.size() - 1));

    if (n_bins == 0) {
        n_bins = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(values.size()))));
        n_bins = std::clamp<std::size_t>(n_bins, 6, 16);
    }
    double lo = *std::min_element(values.begin(), values.end());
    double hi = *std::max_element(values.begin(), values.end());
    if (hi <= lo) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(n_bins);
    out.bin_edges.resize(n_bins + 1);
    for (std::size_t i = 0; i <= n_bins; ++i) out.bin_edges[i] = lo + width * static_cast<double>(i);
    out.histogram.assign(n_bins, 0);
    for (double v : values) {
        std::size_t idx = static_cast<std::size_t>((v - lo) / width);
        if (idx >= n_bins) idx = n_bins - 1;
        ++out.histogram[idx];
    }
    return out;
}

}  // namespace photonlab

#include "analysis/models.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "core/lineshape.hpp"

namespace photonlab {

double emg_pdf(double u, double tau, double sigma) {
    if (sigma <= 0.0) {
        return u >= 0.0 ? std::exp(-u / tau) / tau : 0.0;
    }
    const double v = (sigma / tau - u / sigma) / std::numbers::sqrt2;
    if (v <= 0.0) {
        const double expo = sigma * sigma / (2.0 * tau * tau) - u / tau;
        return 0.5 / tau * std::exp(expo) * std::erfc(v);
    }
    const double z = u / sigma;
    return 0.5 / tau * std::exp(-0.5 * z * z) * erfcx(v);
}

double twosided_emg_pdf(double x, double tau, double sigma) {
    return 0.5 * (emg_pdf(x, tau, sigma) + emg_pdf(-x, tau, sigma));
}

double reexcited_pair_pdf(double x, double tau, double sigma) {
    if (sigma <= 0.0) {
        const double base = std::exp(-std::abs(x) / tau) / (4.0 * tau);
        return base * (1.0 + 2.0 * std::max(x, 0.0) / tau);
    }
    // int u e^{-u/tau} phi(x-u) du = (x - sigma^2/tau) tau emg(x) + sigma^2 phi(x)
    const double e_plus = emg_pdf(x, tau, sigma);
    const double e_minus = emg_pdf(-x, tau, sigma);
    const double phi = std::exp(-0.5 * x * x / (sigma * sigma)) /
                       (sigma * std::sqrt(2.0 * std::numbers::pi));
    const double g2 = (x - sigma * sigma / tau) * tau * e_plus + sigma * sigma * phi;
    return 0.25 * (e_plus + e_minus) + 0.5 * g2 / (tau * tau);
}

double DecayModel::value(double t, std::span<const double> p) const {
    if (p[1] <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    return p[0] * emg_pdf(t - p[2], p[1], irf_sigma_ps) * bin_ps + p[3];
}

double BunchingModel::value(double x, std::span<const double> p) const {
    const double t_us = x * 1e-6;
    const double tri = duration_ps > 0.0 ? std::max(0.0, 1.0 - std::abs(x) / duration_ps) : 1.0;
    if (two_component && fixed_split >= 0.0) {
        if (p[2] <= 0.0 || p[3] <= 0.0) return std::numeric_limits<double>::quiet_NaN();
        const double env = 1.0 + p[1] * (fixed_split * std::exp(-t_us / p[2]) +
                                         (1.0 - fixed_split) * std::exp(-t_us / p[3]));
        return (p[0] * env + floor_per_bin) * tri;
    }
    if (p[2] <= 0.0 || (two_component && p[4] <= 0.0)) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double env = 1.0 + p[1] * std::exp(-t_us / p[2]);
    if (two_component) env += p[3] * std::exp(-t_us / p[4]);
    return (p[0] * env + floor_per_bin) * tri;
}

void BunchingModel::gradient(double x, std::span<const double> p, std::span<double> out) const {
    const double t_us = x * 1e-6;
    const double tri = duration_ps > 0.0 ? std::max(0.0, 1.0 - std::abs(x) / duration_ps) : 1.0;
    if (two_component && fixed_split >= 0.0) {
        const double e1 = std::exp(-t_us / p[2]);
        const double e2 = std::exp(-t_us / p[3]);
        const double mix = fixed_split * e1 + (1.0 - fixed_split) * e2;
        out[0] = (1.0 + p[1] * mix) * tri;
        out[1] = p[0] * mix * tri;
        out[2] = p[0] * p[1] * fixed_split * e1 * t_us / (p[2] * p[2]) * tri;
        out[3] = p[0] * p[1] * (1.0 - fixed_split) * e2 * t_us / (p[3] * p[3]) * tri;
        return;
    }
    const double e1 = std::exp(-t_us / p[2]);
    double env = 1.0 + p[1] * e1;
    out[1] = p[0] * e1 * tri;
    out[2] = p[0] * p[1] * e1 * t_us / (p[2] * p[2]) * tri;
    if (two_component) {
        const double e2 = std::exp(-t_us / p[4]);
        env += p[3] * e2;
        out[3] = p[0] * e2 * tri;
        out[4] = p[0] * p[3] * e2 * t_us / (p[4] * p[4]) * tri;
    }
    out[0] = env * tri;
}

double CombModel::peak_shape(int m, double dm) const {
    if (m == 0 && central_reexc_weight > 0.0) {
        return central_reexc_weight * reexcited_pair_pdf(dm, tau_ps, irf_sigma_ps) +
               (1.0 - central_reexc_weight) * twosided_emg_pdf(dm, tau_ps, irf_sigma_ps);
    }
    return twosided_emg_pdf(dm, tau_ps, irf_sigma_ps);
}

double CombModel::value(double x, std::span<const double> p) const {
    double v = p[0];
    for (std::size_t j = 1; j < p.size(); ++j) {
        const int m = peak_of(j);
        const double dm = x - static_cast<double>(m) * period_ps;
        v += p[j] * peak_shape(m, dm) * bin_ps;
    }
    return v;
}

void CombModel::gradient(double x, std::span<const double> p, std::span<double> out) const {
    out[0] = 1.0;
    for (std::size_t j = 1; j < p.size(); ++j) {
        const int m = peak_of(j);
        const double dm = x - static_cast<double>(m) * period_ps;
        out[j] = peak_shape(m, dm) * bin_ps;
    }
}

double RabiModel::value(double power, std::span<const double> p) const {
    if (p[2] <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    const double theta = std::numbers::pi * std::sqrt(std::max(power, 0.0) / p[2]);
    const double s = std::sin(0.5 * theta);
    return p[0] * std::exp(-p[1] * theta) * s * s + p[3];
}

void RabiModel::gradient(double power, std::span<const double> p, std::span<double> out) const {
    const double theta = std::numbers::pi * std::sqrt(std::max(power, 0.0) / p[2]);
    const double s = std::sin(0.5 * theta);
    const double damp = std::exp(-p[1] * theta);
    out[0] = damp * s * s;
    out[1] = -p[0] * theta * damp * s * s;
    const double didt = p[0] * damp * (0.5 * std::sin(theta) - p[1] * s * s);
    out[2] = didt * (-theta / (2.0 * p[2]));
    out[3] = 1.0;
}

double VoigtScanModel::value(double x, std::span<const double> p) const {
    const double fg = std::abs(p[2]);
    return p[0] * voigt_profile(x - p[1], f_l_total_ghz, fg) + p[3];
}

}  // namespace photonlab

#include "core/lineshape.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace photonlab {

double fourier_limit_ghz(double tau_ps) {
    if (!(tau_ps > 0.0)) throw std::domain_error("fourier_limit: tau must be > 0");
    return 1e3 / (2.0 * std::numbers::pi * tau_ps);
}

double voigt_fwhm_ghz(double f_l_ghz, double f_g_ghz) {
    if (f_l_ghz < 0.0 || f_g_ghz < 0.0) throw std::domain_error("voigt_fwhm: widths must be >= 0");
    return 0.5346 * f_l_ghz + std::sqrt(0.2166 * f_l_ghz * f_l_ghz + f_g_ghz * f_g_ghz);
}

double voigt_gaussian_from_fwhm_ghz(double fwhm_ghz, double f_l_ghz) {
    if (f_l_ghz < 0.0) throw std::domain_error("voigt_gaussian_from_fwhm: f_L must be >= 0");
    if (fwhm_ghz < f_l_ghz) throw std::domain_error("voigt_gaussian_from_fwhm: fwhm must be >= f_L");
    const double s = fwhm_ghz - 0.5346 * f_l_ghz;
    const double arg = s * s - 0.2166 * f_l_ghz * f_l_ghz;
    // arg >= 0 holds whenever fwhm >= f_L since 0.5346 + sqrt(0.2166) < 1
    return arg > 0.0 ? std::sqrt(arg) : 0.0;
}

double erfcx(double x) {
    if (x < 5.0) {
        return std::exp(x * x) * std::erfc(x);
    }
    // asymptotic series; truncation error < 1e-12 for x >= 5
    const double ix2 = 1.0 / (x * x);
    double series = 1.0 + ix2 * (-0.5 + ix2 * (0.75 + ix2 * (-1.875 + ix2 * 6.5625)));
    return series / (x * std::sqrt(std::numbers::pi));
}

namespace {

// Humlicek (1982) w4: the complex probability function w(z) for Im(z) >= 0.
std::complex<double> humlicek_w4(double x, double y) {
    using cd = std::complex<double>;
    const cd t(y, -x);
    const double s = std::abs(x) + y;
    if (s >= 15.0) {
        return t * 0.5641896 / (0.5 + t * t);
    }
    if (s >= 5.5) {
        const cd u = t * t;
        return t * (1.410474 + u * 0.5641896) / (0.75 + u * (3.0 + u));
    }
    if (y >= 0.195 * std::abs(x) - 0.176) {
        return (16.4955 + t * (20.20933 + t * (11.96482 + t * (3.778987 + t * 0.5642236)))) /
               (16.4955 + t * (38.82363 + t * (39.27121 + t * (21.69274 + t * (6.699398 + t)))));
    }
    const cd u = t * t;
    const cd num =
        t * (36183.31 - u * (3321.9905 -
                             u * (1540.787 -
                                  u * (219.0313 - u * (35.76683 - u * (1.320522 - u * 0.56419))))));
    const cd den =
        32066.6 -
        u * (24322.84 -
             u * (9022.228 - u * (2186.181 - u * (364.2191 - u * (61.57037 - u * (1.841439 - u))))));
    return std::exp(u) - num / den;
}

}  // namespace

double voigt_profile(double x, double f_l, double f_g) {
    if (f_l < 0.0 || f_g < 0.0) throw std::domain_error("voigt_profile: widths must be >= 0");
    const double sigma = f_g / kGaussianFwhmPerSigma;
    const double gamma = 0.5 * f_l;
    if (sigma <= 0.0) {
        if (gamma <= 0.0) throw std::domain_error("voigt_profile: degenerate widths");
        // pure Lorentzian
        return gamma / (std::numbers::pi * (x * x + gamma * gamma));
    }
    if (gamma <= 0.0) {
        const double z = x / sigma;
        return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * std::numbers::pi));
    }
    const double inv = 1.0 / (sigma * std::numbers::sqrt2);
    const std::complex<double> w = humlicek_w4(x * inv, gamma * inv);
    return w.real() / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

}  // namespace photonlab

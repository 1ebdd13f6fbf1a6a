#pragma once

namespace photonlab {

// FWHM/sigma ratio of a Gaussian, 2*sqrt(2 ln 2).
inline constexpr double kGaussianFwhmPerSigma = 2.3548200450309493;

// Fourier-transform-limited linewidth of an exponential wave packet,
// 1/(2 pi tau), returned in GHz for tau in ps. Throws std::domain_error for
// non-positive tau.
double fourier_limit_ghz(double tau_ps);

// Olivero-Longbothum approximation of the Voigt FWHM:
//   f_V ~= 0.5346 f_L + sqrt(0.2166 f_L^2 + f_G^2)
// accurate to ~0.02% of the exact convolution width.
double voigt_fwhm_ghz(double f_l_ghz, double f_g_ghz);

// Inverse of voigt_fwhm_ghz in its Gaussian argument: the f_G for which
// voigt_fwhm(f_L, f_G) == fwhm, root-found to 1e-6 GHz (closed form here).
// Requires fwhm >= f_L.
double voigt_gaussian_from_fwhm_ghz(double fwhm_ghz, double f_l_ghz);

// Scaled complementary error function exp(x^2) erfc(x), stable for large x.
double erfcx(double x);

// Area-normalized Voigt profile: Lorentzian FWHM f_l convolved with Gaussian
// FWHM f_g, evaluated at offset x from center. Humlicek w4 rational
// approximation (relative accuracy ~1e-4, adequate for least-squares models).
double voigt_profile(double x, double f_l, double f_g);

}  // namespace photonlab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "analysis/analysis.hpp"
#include "analysis/models.hpp"
#include "core/lineshape.hpp"
#include "core/rng.hpp"
#include "testsupport.hpp"

using namespace photonlab;

namespace {

// validates an analytic gradient against central finite differences; the
// deviation is measured relative to each parameter's gradient scale so that
// components extinguished below double precision do not dominate
template <typename Model>
double max_gradient_mismatch(const Model& m, std::span<const double> xs,
                             std::vector<double> p) {
    std::vector<double> g(p.size());
    std::vector<double> scale(p.size(), 1e-12);
    for (double x : xs) {
        m.gradient(x, p, g);
        for (std::size_t j = 0; j < p.size(); ++j) scale[j] = std::max(scale[j], std::abs(g[j]));
    }
    double worst = 0.0;
    for (double x : xs) {
        m.gradient(x, p, g);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double h = 1e-5 * std::max(1.0, std::abs(p[j]));
            const double save = p[j];
            p[j] = save + h;
            const double up = m.value(x, p);
            p[j] = save - h;
            const double dn = m.value(x, p);
            p[j] = save;
            const double fd = (up - dn) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - g[j]) / scale[j]);
        }
    }
    return worst;
}

CorrelationHistogram synth_coarse(double level, double a1, double t1_us, double a2, double t2_us,
                                  double floor, std::uint64_t seed, bool poissonize = true) {
    CorrelationHistogram h;
    h.bin_ps = 6570;
    h.range_ps = 2000000000ull;  // 2 ms
    h.half_bins = static_cast<std::int64_t>((2 * h.range_ps + h.bin_ps) / (2 * h.bin_ps));
    h.counts.assign(static_cast<std::size_t>(2 * h.half_bins + 1), 0);
    RandomStream rng(seed, Stream::misc, 0);
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double t_us = std::abs(static_cast<double>(h.bin_center_ps(i))) * 1e-6;
        const double mu =
            level * (1.0 + a1 * std::exp(-t_us / t1_us) + a2 * std::exp(-t_us / t2_us)) + floor;
        double v = mu;
        if (poissonize) v = mu + std::sqrt(mu) * rng.normal();
        h.counts[i] = static_cast<std::uint64_t>(std::max(0.0, std::round(v)));
    }
    return h;
}

}  // namespace

TEST_CASE("analytic fit gradients match central finite differences") {
    const std::vector<double> xs_ps = {6570.0, 65700.0, 1.3e6, 6.5e7, 1.9e9};
    BunchingModel bm{12.0, true};
    CHECK(max_gradient_mismatch(bm, xs_ps, {9000.0, 0.48, 65.0, 0.49, 125.0}) < 1e-4);

    CombModel cm{6570.0, 10.0, 201.0, 353.6, 3};
    std::vector<double> xs_fine;
    for (int m = -3; m <= 3; ++m) {
        for (double off : {-400.0, 0.0, 250.0}) xs_fine.push_back(m * 6570.0 + off);
    }
    CHECK(max_gradient_mismatch(cm, xs_fine, {5.0, 900.0, 950.0, 870.0, 120.0, 930.0, 880.0, 910.0}) <
          1e-4);

    RabiModel rm;
    const std::vector<double> powers = {0.1, 0.5, 1.0, 2.0, 3.5, 4.8};
    CHECK(max_gradient_mismatch(rm, powers, {1000.0, 0.17, 1.0, 25.0}) < 1e-4);
}

TEST_CASE("fit_decay recovers tau from noiseless EMG to 0.1% and handles sigma=0") {
    const double tau = 201.0, sigma = 60.0, bin = 4.0;
    std::vector<double> t, y;
    for (int i = 0; i < 1600; ++i) {
        const double tc = bin * static_cast<double>(i);
        t.push_back(tc);
        y.push_back(2e5 * emg_pdf(tc - 400.0, tau, sigma) * bin + 3.0);
    }
    const FitResult fit = fit_decay(t, y, sigma);
    CHECK(fit.converged);
    CHECK(fit.value("tau_ps") == doctest::Approx(201.0).epsilon(1e-3));
    CHECK(fit.value("background") == doctest::Approx(3.0).epsilon(0.05));

    // sigma = 0: pure exponential, tau equals the log-linear slope
    std::vector<double> t2, y2;
    for (int i = 0; i < 500; ++i) {
        t2.push_back(4.0 * i);
        y2.push_back(5e4 * std::exp(-4.0 * i / 135.0) / 135.0 * 4.0);
    }
    const FitResult pure = fit_decay(t2, y2, 0.0);
    CHECK(pure.value("tau_ps") == doctest::Approx(135.0).epsilon(1e-3));
    const double slope = (std::log(y2[10]) - std::log(y2[210])) / (t2[210] - t2[10]);
    CHECK(pure.value("tau_ps") == doctest::Approx(1.0 / slope).epsilon(1e-3));
}

TEST_CASE("fit_decay recovers tau within 2% under Poisson noise") {
    RandomStream rng(31, Stream::misc, 1);
    for (double tau : {135.0, 201.0, 207.0}) {
        std::vector<double> t, y;
        const double bin = 4.0;
        for (int i = 0; i < 1642; ++i) {
            const double tc = bin * static_cast<double>(i);
            const double mu = 3e5 * emg_pdf(tc - 500.0, tau, 60.0) * bin + 2.0;
            t.push_back(tc);
            y.push_back(std::max(0.0, std::round(mu + std::sqrt(mu) * rng.normal())));
        }
        const FitResult fit = fit_decay(t, y, 60.0);
        CHECK(fit.converged);
        CHECK(fit.value("tau_ps") == doctest::Approx(tau).epsilon(0.02));
        CHECK(fit.error("tau_ps") < 0.02 * tau);
    }
}

TEST_CASE("fit_bunching recovers injected parameters and derives beta") {
    auto h = synth_coarse(9000.0, 0.4843, 65.0, 0.4843, 125.0, 0.0, 77);
    const BunchingFit fit = fit_bunching(h, 1);
    CHECK(fit.converged);
    CHECK(fit.two_component);
    CHECK(fit.beta == doctest::Approx(0.508).epsilon(0.02));
    CHECK(fit.tau_b1_us == doctest::Approx(65.0).epsilon(0.15));
    CHECK(fit.tau_b2_us == doctest::Approx(125.0).epsilon(0.15));
}

TEST_CASE("fit_bunching: flat side peaks give beta = 1") {
    auto h = synth_coarse(5000.0, 0.0, 65.0, 0.0, 125.0, 0.0, 78);
    const BunchingFit fit = fit_bunching(h, 1);
    CHECK(fit.beta == doctest::Approx(1.0).epsilon(0.01));
    CHECK(fit.a1 + fit.a2 < 0.01);
}

TEST_CASE("fit_bunching: single-exponential data collapses to one component") {
    auto h = synth_coarse(8000.0, 0.9, 80.0, 0.0, 125.0, 0.0, 79);
    const BunchingFit fit = fit_bunching(h, 1);
    CHECK(fit.converged);
    CHECK_FALSE(fit.two_component);
    CHECK(fit.tau_b1_us == doctest::Approx(80.0).epsilon(0.1));
    CHECK(fit.beta == doctest::Approx(1.0 / 1.9).epsilon(0.02));
}

TEST_CASE("fit_bunching honors a fixed flat floor") {
    auto h = synth_coarse(9000.0, 0.4843, 65.0, 0.4843, 125.0, 600.0, 80);
    const BunchingFit biased = fit_bunching(h, 1, 0.0);
    const BunchingFit fixed = fit_bunching(h, 1, 600.0);
    CHECK(fixed.beta == doctest::Approx(0.508).epsilon(0.015));
    // ignoring the floor shrinks the apparent amplitudes
    CHECK(biased.beta > fixed.beta + 0.01);
}

TEST_CASE("extract_g2_raw: flat comb gives 1, empty center gives 0, rescaling invariance") {
    PeakAreas areas;
    areas.period_ps = 6570;
    areas.window_ps = 6570;
    BunchingFit flat;  // beta = 1, no enhancement
    for (int m = -60; m <= 60; ++m) areas.areas[m] = 5000;
    const Measured g_flat = extract_g2_raw(areas, flat, 114);
    CHECK(g_flat.value == doctest::Approx(1.0).epsilon(1e-9));

    areas.areas[0] = 0;
    const Measured g_zero = extract_g2_raw(areas, flat, 114);
    CHECK(g_zero.value == 0.0);

    PeakAreas scaled = areas;
    for (auto& [m, a] : scaled.areas) a *= 7;
    scaled.areas[0] = 7 * 1000;
    areas.areas[0] = 1000;
    const Measured g1 = extract_g2_raw(areas, flat, 114);
    const Measured g7 = extract_g2_raw(scaled, flat, 114);
    CHECK(g1.value == doctest::Approx(g7.value).epsilon(1e-12));
}

TEST_CASE("extract_g2_raw divides out the bunching enhancement") {
    PeakAreas areas;
    areas.period_ps = 6570;
    areas.window_ps = 6570;
    BunchingFit bunch;
    bunch.a1 = 0.4843;
    bunch.tau_b1_us = 65.0;
    bunch.a2 = 0.4843;
    bunch.tau_b2_us = 125.0;
    bunch.beta = 0.508;
    const double level = 4000.0;
    for (int m = -60; m <= 60; ++m) {
        const double t = std::abs(m) * 6570.0;
        areas.areas[m] = static_cast<std::uint64_t>(std::round(level * bunch.enhancement(t)));
    }
    areas.areas[0] = static_cast<std::uint64_t>(std::round(0.142 * level));
    const Measured g = extract_g2_raw(areas, bunch, 114);
    CHECK(g.value == doctest::Approx(0.142).epsilon(2e-3));
}

TEST_CASE("fit_g2_background: zero floor reproduces the raw ratio; known floor corrects it") {
    // synthetic comb: center suppressed, flat floor added
    const double T = 6570.0, bin = 10.0, tau = 201.0, sigma = 353.55;
    CorrelationHistogram fine;
    fine.bin_ps = 10;
    fine.range_ps = static_cast<std::uint64_t>(3.6 * T);
    fine.half_bins = static_cast<std::int64_t>((2 * fine.range_ps + fine.bin_ps) / (2 * fine.bin_ps));
    fine.counts.assign(static_cast<std::size_t>(2 * fine.half_bins + 1), 0);
    const double side_area = 60000.0, central_area = 0.078 * side_area, floor = 25.0;
    RandomStream rng(83, Stream::misc, 0);
    for (std::size_t i = 0; i < fine.counts.size(); ++i) {
        const double x = static_cast<double>(fine.bin_center_ps(i));
        double mu = floor;
        for (int m = -3; m <= 3; ++m) {
            const double a = m == 0 ? central_area : side_area;
            mu += a * twosided_emg_pdf(x - m * T, tau, sigma) * bin;
        }
        const double v = mu + std::sqrt(mu) * rng.normal();
        fine.counts[i] = static_cast<std::uint64_t>(std::max(0.0, std::round(v)));
    }
    BunchingFit flat;  // no bunching in this synthetic
    const CombFit fit = fit_g2_background(fine, sigma, 6570, tau, flat, 3, 0);
    CHECK(fit.converged);
    CHECK(fit.floor_per_bin.value == doctest::Approx(floor).epsilon(0.05));
    CHECK(fit.central_area.value == doctest::Approx(central_area).epsilon(0.05));
    CHECK(fit.g2.value == doctest::Approx(0.078).epsilon(0.1));
    CHECK(fit.g2.error < 0.01);
}

TEST_CASE("extract_vtpi_raw identities") {
    PeakAreas x;
    x.period_ps = 6570;
    x.window_ps = 6570;
    BunchingFit flat;
    for (int m = -60; m <= 60; ++m) x.areas[m] = 9000;
    x.areas[0] = 2160;  // g = 0.24
    const Measured self = extract_vtpi_raw(x, x, flat, 114, 1);
    CHECK(self.value == doctest::Approx(0.0));

    PeakAreas perp = x;
    perp.areas[0] = 9000;
    const Measured v = extract_vtpi_raw(x, perp, flat, 114, 1);
    CHECK(v.value == doctest::Approx(0.76).epsilon(1e-6));

    PeakAreas dark = x;
    dark.areas[0] = 0;
    const Measured one = extract_vtpi_raw(dark, perp, flat, 114, 1);
    CHECK(one.value == doctest::Approx(1.0));
}

TEST_CASE("correct_vtpi reduces to the raw visibility in the clean limit") {
    CombFit co, cross;
    co.central_area = {240.0, 6.0};
    co.side_level_debunched = {1000.0, 5.0};
    cross.central_area = {1000.0, 10.0};
    cross.side_level_debunched = {1000.0, 5.0};
    const VtpiCorrection c = correct_vtpi(co, cross, {0.0, 0.0}, 0.5, 0.5);
    CHECK_FALSE(c.clamped);
    CHECK_FALSE(c.inconsistent);
    CHECK(c.m.value == doctest::Approx(0.76).epsilon(1e-12));

    // multiphoton subtraction shifts both areas
    const VtpiCorrection c2 = correct_vtpi(co, cross, {0.078, 0.01}, 0.5, 0.5);
    const double expect = (1.0 - (240.0 - 39.0) / (1000.0 - 39.0));
    CHECK(c2.m.value == doctest::Approx(expect).epsilon(1e-9));

    // beamsplitter imbalance factor
    const VtpiCorrection c3 = correct_vtpi(co, cross, {0.0, 0.0}, 0.6, 0.5);
    CHECK(c3.m.value == doctest::Approx(0.76 * (0.36 + 0.16) / (2 * 0.6 * 0.4)).epsilon(1e-9));

    // inconsistent input: co above cross beyond errors
    CombFit hot = co;
    hot.central_area = {1200.0, 5.0};
    const VtpiCorrection bad = correct_vtpi(hot, cross, {0.0, 0.0}, 0.5, 0.5);
    CHECK(bad.inconsistent);
    CHECK(bad.m.value == 0.0);
}

TEST_CASE("fit_voigt_fixed_lorentzian on synthetic scans") {
    RandomStream rng(91, Stream::misc, 0);
    // pure Lorentzian (f_G = 0): reported FWHM collapses to f_L
    {
        std::vector<double> x, y;
        for (int i = -60; i <= 60; ++i) {
            const double xv = 0.12 * i;
            const double mu = 4000.0 * voigt_profile(xv, 0.79, 1e-6) + 40.0;
            x.push_back(xv);
            y.push_back(std::round(mu + std::sqrt(mu) * rng.normal()));
        }
        const FitResult fit = fit_voigt_fixed_lorentzian(x, y, 0.79, 0.0);
        CHECK(fit.converged);
        CHECK(fit.value("fwhm_ghz") == doctest::Approx(0.79).epsilon(0.02));
    }
    // QD1-like synthetic: f_L = 0.79 frozen, sigma_G = 1.86 injected
    {
        const double fg_true = 1.86 * kGaussianFwhmPerSigma;
        std::vector<double> x, y;
        for (int i = -80; i <= 80; ++i) {
            const double xv = 0.15 * i;
            const double mu = 60000.0 * voigt_profile(xv - 0.3, 0.79, fg_true) + 25.0;
            x.push_back(xv);
            y.push_back(std::round(mu + std::sqrt(mu) * rng.normal()));
        }
        const FitResult fit = fit_voigt_fixed_lorentzian(x, y, 0.79, 0.0);
        CHECK(fit.converged);
        CHECK(fit.value("fwhm_ghz") == doctest::Approx(4.82).epsilon(0.021));
        CHECK(fit.value("sigma_g_ghz") == doctest::Approx(1.86).epsilon(0.05));
        CHECK(fit.value("center_ghz") == doctest::Approx(0.3).epsilon(0.1));
    }
    // narrow scan is flagged
    {
        std::vector<double> x, y;
        for (int i = -30; i <= 30; ++i) {
            const double xv = 0.05 * i;
            x.push_back(xv);
            y.push_back(1000.0 * voigt_profile(xv, 0.79, 4.0) + 10.0);
        }
        const FitResult fit = fit_voigt_fixed_lorentzian(x, y, 0.79, 0.0);
        CHECK_FALSE(fit.converged);
    }
}

TEST_CASE("fit_rabi recovers fidelity and flags degenerate sweeps") {
    RandomStream rng(97, Stream::misc, 0);
    const RabiModel m;
    {
        std::vector<double> p, y;
        const double gamma = -std::log(0.584) / std::numbers::pi;
        for (int i = 0; i <= 40; ++i) {
            const double power = 4.84 * i / 40.0;
            const std::vector<double> pars = {20000.0, gamma, 1.0, 300.0};
            const double mu = m.value(power, pars);
            p.push_back(power);
            y.push_back(std::max(0.0, std::round(mu + std::sqrt(mu) * rng.normal())));
        }
        const FitResult fit = fit_rabi(p, y);
        CHECK(fit.converged);
        CHECK(fit.value("prep_fidelity") == doctest::Approx(0.584).epsilon(0.03));
    }
    {
        // gamma = 0: undamped oscillation
        std::vector<double> p, y;
        for (int i = 0; i <= 40; ++i) {
            const double power = 4.84 * i / 40.0;
            const std::vector<double> pars = {5000.0, 0.0, 1.0, 0.0};
            p.push_back(power);
            y.push_back(m.value(power, pars));
        }
        const FitResult fit = fit_rabi(p, y);
        CHECK(fit.value("prep_fidelity") == doctest::Approx(1.0).epsilon(0.01));
    }
    {
        // monotone data: no pi point inside the sweep
        std::vector<double> p, y;
        for (int i = 0; i <= 20; ++i) {
            p.push_back(static_cast<double>(i));
            y.push_back(100.0 * i);
        }
        const FitResult fit = fit_rabi(p, y);
        CHECK_FALSE(fit.converged);
    }
}

TEST_CASE("remote visibility: closed form against the Monte Carlo oracle") {
    CHECK(remote_visibility(201.0, 0.0) == doctest::Approx(1.0));
    // paper point: tau = 201 ps with the Table-1-inverted Gaussian width
    const double f_g = voigt_gaussian_from_fwhm_ghz(4.82, fourier_limit_ghz(201.0));
    const double sigma_g = f_g / kGaussianFwhmPerSigma;
    const double v = remote_visibility(201.0, sigma_g);
    CHECK(v == doctest::Approx(0.30).epsilon(0.034));

    RandomStream rng(3, Stream::misc, 5);
    for (const auto& [tau, sg] : std::vector<std::pair<double, double>>{
             {201.0, 1.86}, {135.0, 1.3}, {207.0, 3.55}, {201.0, 0.25}}) {
        double acc = 0.0;
        const int n = 2000000;
        for (int i = 0; i < n; ++i) {
            const double delta = std::numbers::sqrt2 * sg * rng.normal();
            const double ph = 2.0 * std::numbers::pi * delta * tau * 1e-3;
            acc += 1.0 / (1.0 + ph * ph);
        }
        CHECK(remote_visibility(tau, sg) == doctest::Approx(acc / n).epsilon(2.5e-3));
    }
}

TEST_CASE("remote visibility is strictly decreasing with limits 1 and 0") {
    double prev = remote_visibility(201.0, 1e-6);
    CHECK(prev <= 1.0);
    for (double sg : {0.1, 0.3, 1.0, 3.0, 10.0, 100.0}) {
        const double v = remote_visibility(201.0, sg);
        CHECK(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-2);
    CHECK(remote_visibility(100.0, 2.0) > remote_visibility(300.0, 2.0));
}

TEST_CASE("ensemble stats") {
    const std::vector<double> constant = {5.0, 5.0, 5.0, 5.0};
    const EnsembleStats c = ensemble_stats(constant);
    CHECK(c.mean == doctest::Approx(5.0));
    CHECK(c.std_dev == doctest::Approx(0.0));

    const std::vector<double> two = {1.0, 3.0};
    const EnsembleStats t = ensemble_stats(two);
    CHECK(t.mean == doctest::Approx(2.0));
    CHECK(t.std_dev == doctest::Approx(std::numbers::sqrt2).epsilon(1e-12));

    CHECK_THROWS_AS((void)ensemble_stats(std::vector<double>{1.0}), std::invalid_argument);

    RandomStream rng(7, Stream::misc, 9);
    std::vector<double> wl(104);
    for (auto& v : wl) v = 781.71 + 3.53 * rng.normal();
    const EnsembleStats s = ensemble_stats(wl);
    CHECK(std::abs(s.mean - 781.71) < 3.0 * 3.53 / std::sqrt(104.0));
    std::uint64_t total = 0;
    for (auto h : s.histogram) total += h;
    CHECK(total == 104);
}

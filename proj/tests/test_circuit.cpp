#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "circuit/circuit.hpp"
#include "emitter/emitter.hpp"
#include "testsupport.hpp"

using namespace photonlab;

TEST_CASE("attenuation survival factors") {
    CHECK(attenuation_survival(8.15, 0.0) == doctest::Approx(1.0));
    CHECK(attenuation_survival(3.0103, 1.0) == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(attenuation_survival(8.15, 1.0) == doctest::Approx(0.1531).epsilon(1e-3));
    CHECK_THROWS_AS((void)attenuation_survival(-1.0, 1.0), std::domain_error);
}

TEST_CASE("mmi split: transmission and routing statistics") {
    PhotonPacket p;
    p.tau_ps = 201.0;
    std::uint64_t survived = 0, port0 = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        p.id = static_cast<std::uint64_t>(i);
        RandomStream rng(3, Stream::circuit, p.id);
        const RoutedPhoton r = mmi_split(p, 0.5, 0.822, rng);
        if (r.survived) {
            ++survived;
            if (r.port == 0) ++port0;
        }
    }
    const double eta = static_cast<double>(survived) / n;
    CHECK(std::abs(eta - 0.822) < 3.0 * std::sqrt(0.822 * 0.178 / n));
    const double split = static_cast<double>(port0) / static_cast<double>(survived);
    CHECK(std::abs(split - 0.5) < 3.0 * std::sqrt(0.25 / static_cast<double>(survived)));

    RandomStream rng(3, Stream::circuit, 0);
    const RoutedPhoton none = mmi_split(p, 0.999999, 0.0, rng);
    CHECK_FALSE(none.survived);
}

TEST_CASE("hom overlap analytic points") {
    PhotonPacket a, b;
    a.tau_ps = b.tau_ps = 201.0;
    a.t0_ps = b.t0_ps = 1000;
    a.detuning_ghz = b.detuning_ghz = 0.0;
    CHECK(hom_overlap(a, b) == doctest::Approx(1.0));

    // detuning half point: dnu = 1/(2 pi tau)
    b.detuning_ghz = 1e3 / (2.0 * std::numbers::pi * 201.0);
    CHECK(hom_overlap(a, b) == doctest::Approx(0.5).epsilon(1e-12));

    b.detuning_ghz = 0.0;
    b.pol = Polarization::V;
    CHECK(hom_overlap(a, b) == doctest::Approx(0.0));

    b.pol = Polarization::H;
    b.tau_ps = 0.0;
    CHECK_THROWS_AS((void)hom_overlap(a, b), std::domain_error);
}

TEST_CASE("hom overlap matches the quadrature oracle, including unequal tau") {
    const struct {
        double t01, tau1, nu1, t02, tau2, nu2;
    } cases[] = {
        {0.0, 201.0, 0.0, 35.0, 201.0, 0.4},
        {0.0, 201.0, -0.7, 120.0, 201.0, 0.9},
        {50.0, 135.0, 0.2, 0.0, 135.0, -0.3},
        {0.0, 201.0, 0.0, 80.0, 135.0, 0.6},
        {10.0, 160.0, 1.2, 0.0, 240.0, 0.1},
    };
    for (const auto& c : cases) {
        PhotonPacket p1, p2;
        p1.t0_ps = static_cast<TimePs>(c.t01);
        p1.tau_ps = c.tau1;
        p1.detuning_ghz = c.nu1;
        p2.t0_ps = static_cast<TimePs>(c.t02);
        p2.tau_ps = c.tau2;
        p2.detuning_ghz = c.nu2;
        const double m = hom_overlap(p1, p2);
        const double o = oracle::overlap_integral(c.t01, c.tau1, c.nu1, c.t02, c.tau2, c.nu2);
        CHECK(m == doctest::Approx(o).epsilon(1e-5));
    }
}

TEST_CASE("fiber beamsplitter: two-photon coincidence probability is affine in M") {
    const double r_b = 0.5;
    const int n = 200000;
    for (double m : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        int cross = 0;
        for (int i = 0; i < n; ++i) {
            RandomStream rng(11, Stream::interference, static_cast<std::uint64_t>(i));
            const auto ports = fiber_bs_two_photon(r_b, m, rng);
            if (ports[0] != ports[1]) ++cross;
        }
        const double expected = 0.5 * (1.0 - m);
        const double got = static_cast<double>(cross) / n;
        CHECK(std::abs(got - expected) < 3.0 * std::sqrt(std::max(expected * (1 - expected), 1e-9) / n) + 1e-4);
    }
    // R != 0.5 classical arithmetic: P_c(0) = R^2 + T^2
    int cross = 0;
    for (int i = 0; i < n; ++i) {
        RandomStream rng(13, Stream::interference, static_cast<std::uint64_t>(i));
        if (auto p = fiber_bs_two_photon(0.6, 0.0, rng); p[0] != p[1]) ++cross;
    }
    CHECK(std::abs(static_cast<double>(cross) / n - 0.52) < 0.004);
}

TEST_CASE("fiber beamsplitter singles routing") {
    RandomStream rng(17, Stream::interference, 0);
    CHECK(fiber_bs_single(1.0 - 1e-12, rng) == 0);
    CHECK(fiber_bs_single(1e-12, rng) == 1);
    int port0 = 0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
        RandomStream r(19, Stream::interference, static_cast<std::uint64_t>(i));
        if (fiber_bs_single(0.5, r) == 0) ++port0;
    }
    CHECK(std::abs(static_cast<double>(port0) / n - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("detect: limits, dark counts, jitter width") {
    DetectorConfig det;
    det.efficiency = 0.0;
    det.dark_rate_hz = 0.0;
    std::vector<DetectionInput> in(1);
    for (int i = 0; i < 1000; ++i) {
        PhotonPacket p;
        p.t0_ps = static_cast<TimePs>(1000 + i * 100);
        p.tau_ps = 201.0;
        p.id = static_cast<std::uint64_t>(i);
        in[0].packets.push_back(p);
    }
    auto none = detect(in, det, 1000000, 5);
    CHECK(none[0].empty());

    // dark only: 100 Hz over 1 s
    det.dark_rate_hz = 100.0;
    std::vector<DetectionInput> empty_in(1);
    CircuitLedger ledger;
    auto dark = detect(empty_in, det, 1000000000000ull, 5, &ledger);
    CHECK(std::abs(static_cast<double>(dark[0].size()) - 100.0) < 3.0 * 10.0 + 1.0);
    CHECK(ledger.reconciles());

    // jitter histogram of a delta-time ensemble is Gaussian with the configured sigma
    det.dark_rate_hz = 0.0;
    det.efficiency = 1.0;
    det.irf_sigma_ps = 60.0;
    std::vector<DetectionInput> delta(1);
    const TimePs t0 = 10000000;
    for (int i = 0; i < 400000; ++i) {
        PhotonPacket p;
        p.t0_ps = t0;
        p.tau_ps = 1e-9;  // effectively a delta wave packet
        p.id = static_cast<std::uint64_t>(i);
        delta[0].packets.push_back(p);
    }
    auto tags = detect(delta, det, t0 * 2, 7);
    REQUIRE(tags[0].size() == delta[0].packets.size());
    double sum = 0.0, sum2 = 0.0;
    for (const auto& t : tags[0]) {
        const double d = static_cast<double>(t.time_ps) - static_cast<double>(t0);
        sum += d;
        sum2 += d * d;
    }
    const double n = static_cast<double>(tags[0].size());
    const double var = sum2 / n - (sum / n) * (sum / n);
    CHECK(std::abs(std::sqrt(var) - 60.0) / 60.0 < 0.02);
}

TEST_CASE("detect: dead time drops close tags and the ledger reconciles") {
    DetectorConfig det;
    det.efficiency = 1.0;
    det.irf_sigma_ps = 0.0;
    det.dark_rate_hz = 0.0;
    det.dead_time_ps = 45000;
    std::vector<DetectionInput> in(1);
    for (int i = 0; i < 100; ++i) {
        PhotonPacket p;
        p.t0_ps = static_cast<TimePs>(1000000 + i * 10000);  // 10 ns apart, 45 ns dead time
        p.tau_ps = 1.0;
        p.id = static_cast<std::uint64_t>(i);
        in[0].packets.push_back(p);
    }
    CircuitLedger ledger;
    ledger.packets_in = 100;
    auto tags = detect(in, det, 10000000, 9, &ledger);
    CHECK(tags[0].size() == 20);  // every 5th tag survives
    CHECK(ledger.lost_dead_time == 80);
    CHECK(ledger.reconciles());
}

TEST_CASE("hom topology: two identical co-polarized photons never leave cross-port") {
    CircuitConfig circuit;
    circuit.fiber_bs_ratio = 0.5;
    int cross = 0;
    for (int i = 0; i < 50000; ++i) {
        PhotonPacket a, b;
        a.tau_ps = b.tau_ps = 201.0;
        a.t0_ps = 100000;         // arm A
        b.t0_ps = 100000 - 6570;  // arm B, one period earlier; the delay line matches it
        a.id = PhotonPacket::make_id(static_cast<std::uint64_t>(i), 0);
        b.id = PhotonPacket::make_id(static_cast<std::uint64_t>(i), 1);
        auto ports = run_hom_topology({a}, {b}, circuit, 2010, static_cast<std::uint64_t>(i));
        if (ports[0].size() == 1 && ports[1].size() == 1) ++cross;
    }
    CHECK(cross == 0);
}

TEST_CASE("hom topology: empty input, multi-photon fallback logged") {
    CircuitConfig circuit;
    auto ports = run_hom_topology({}, {}, circuit, 2010, 1);
    CHECK(ports[0].empty());
    CHECK(ports[1].empty());

    PhotonPacket a, b, c;
    a.tau_ps = b.tau_ps = c.tau_ps = 201.0;
    a.t0_ps = 100000;
    b.t0_ps = 100100;
    c.t0_ps = 100200 - 6570;
    a.id = 16;
    b.id = 17;
    c.id = 33;
    std::uint64_t multi = 0;
    (void)run_hom_topology({a, b}, {c}, circuit, 2010, 2, &multi);
    CHECK(multi == 1);
}

TEST_CASE("cross-polarized configuration removes interference") {
    CircuitConfig circuit;
    circuit.pol_config = PolarizationSetting::cross;
    int cross = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        PhotonPacket a, b;
        a.tau_ps = b.tau_ps = 201.0;
        a.t0_ps = 100000;
        b.t0_ps = 100000 - 6570;
        a.id = PhotonPacket::make_id(static_cast<std::uint64_t>(i), 0);
        b.id = PhotonPacket::make_id(static_cast<std::uint64_t>(i), 1);
        auto ports = run_hom_topology({a}, {b}, circuit, 2010, static_cast<std::uint64_t>(i));
        if (ports[0].size() == 1 && ports[1].size() == 1) ++cross;
    }
    const double frac = static_cast<double>(cross) / n;
    CHECK(std::abs(frac - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("stray packet generation respects the configured rates") {
    CircuitConfig circuit;
    circuit.stray_pulsed_rate = 2e-3;
    circuit.stray_cw_rate_hz = 50000.0;
    const std::uint64_t n_pulses = 2000000;
    auto stray = make_stray_packets(circuit, 0, n_pulses, 21);
    std::uint64_t pulsed = 0, cw = 0;
    for (const auto& p : stray) {
        if (p.origin == PhotonOrigin::stray_pulsed) ++pulsed;
        else if (p.origin == PhotonOrigin::stray_cw) ++cw;
    }
    const double expect_pulsed = 2e-3 * static_cast<double>(n_pulses);
    CHECK(std::abs(static_cast<double>(pulsed) - expect_pulsed) < 4.0 * std::sqrt(expect_pulsed));
    const double duration_s = static_cast<double>(n_pulses) * 6570e-12;
    const double expect_cw = 50000.0 * duration_s;
    CHECK(std::abs(static_cast<double>(cw) - expect_cw) < 4.0 * std::sqrt(expect_cw));
    CHECK(std::is_sorted(stray.begin(), stray.end(), [](const auto& x, const auto& y) {
        return x.t0_ps < y.t0_ps;
    }));
}

#include "doctest.h"
#include "gauss_hermite.hpp"
#include "slicewave/metrics.hpp"

#include <cmath>
#include <numbers>

using namespace slicewave;

namespace {

// AWGN at a given SNR over a shaped source, both sequences returned aligned.
struct AwgnRun {
    CVec rx;
    std::vector<std::uint32_t> tx_idx;
    CVec tx;
};

AwgnRun awgn_run(const ShapingDistribution& d, double snr_db, std::size_t n, std::uint64_t seed) {
    AwgnRun r;
    r.tx_idx = draw_symbols(d, n, seed);
    r.tx = points_of(d, r.tx_idx);
    const double sigma = std::pow(10.0, -snr_db / 20.0);
    Rng rng(Rng::derive(seed, "awgn"));
    r.rx.resize(n);
    for (std::size_t i = 0; i < n; ++i) r.rx[i] = r.tx[i] + sigma * rng.cnormal();
    return r;
}

}  // namespace

TEST_CASE("quadrature integrates gaussian moments exactly") {
    const auto q = oracle::gauss_hermite(32);
    double m0 = 0.0, m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < 32; ++i) {
        m0 += q.weights[i];
        m2 += q.weights[i] * q.nodes[i] * q.nodes[i];
        m4 += q.weights[i] * std::pow(q.nodes[i], 4);
    }
    const double spi = std::sqrt(std::numbers::pi);
    CHECK(m0 == doctest::Approx(spi).epsilon(1e-12));
    CHECK(m2 == doctest::Approx(spi / 2.0).epsilon(1e-12));
    CHECK(m4 == doctest::Approx(spi * 3.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("quadrature oracle reproduces pinned reference points") {
    // Reference values computed with an independent implementation of the
    // same integral.
    const auto c = build_constellation(ConstellationKind::qam16);
    const auto uni = mb_distribution(c, 0.0);
    CHECK(oracle::gmi_quadrature(uni, 0.0) == doctest::Approx(0.899340).epsilon(2e-4));
    CHECK(oracle::gmi_quadrature(uni, 10.0) == doctest::Approx(3.163580).epsilon(2e-4));
    CHECK(oracle::gmi_quadrature(uni, 20.0) == doctest::Approx(3.999951).epsilon(2e-4));
}

TEST_CASE("snr estimator") {
    const auto c = build_constellation(ConstellationKind::qam16);
    const auto d = mb_distribution(c, 0.0);

    SUBCASE("noiseless hits the cap") {
        const auto tx = points_of(d, draw_symbols(d, 20000, 1));
        CHECK(estimate_snr_db(tx, tx) == kSnrCapDb);
    }

    SUBCASE("awgn at 15 dB reads 15 dB") {
        const auto r = awgn_run(d, 15.0, 100000, 2);
        CHECK(estimate_snr_db(r.rx, r.tx) == doctest::Approx(15.0).epsilon(0.007));
    }

    SUBCASE("scaling and rotating rx changes nothing") {
        const auto r = awgn_run(d, 12.0, 50000, 3);
        const double base = estimate_snr_db(r.rx, r.tx);
        CVec scaled(r.rx.size());
        const cplx g{1.3, -2.1};
        for (std::size_t i = 0; i < r.rx.size(); ++i) scaled[i] = g * r.rx[i];
        CHECK(estimate_snr_db(scaled, r.tx) == doctest::Approx(base).epsilon(1e-12));
    }

    SUBCASE("dual-pol pooling") {
        const auto a = awgn_run(d, 10.0, 50000, 4);
        const auto b = awgn_run(d, 10.0, 50000, 5);
        CHECK(estimate_snr_db(a.rx, b.rx, a.tx, b.tx) == doctest::Approx(10.0).epsilon(0.01));
    }
}

TEST_CASE("osnr noise loading follows the bandwidth relation") {
    // A flat-ish dual-pol record at 12.5 GBd equivalent: use plain random
    // samples at fs = 12.5 GHz so signal bandwidth = symbol rate = reference.
    const std::size_t n = 1 << 16;
    Rng rng(7);
    DualPolWaveform w;
    w.x.sample_rate = w.y.sample_rate = 12.5e9;
    w.x.center_freq = w.y.center_freq = 193.052e12;
    w.x.samples.resize(n);
    w.y.samples.resize(n);
    for (auto& s : w.x.samples) s = rng.cnormal();
    for (auto& s : w.y.samples) s = rng.cnormal();

    SUBCASE("infinite target is a no-op") {
        const auto out = load_noise_to_osnr(w, std::numeric_limits<double>::infinity(), 1);
        CHECK(out.x.samples == w.x.samples);
    }

    SUBCASE("snr equals osnr when signal band equals reference band") {
        const auto out = load_noise_to_osnr(w, 20.0, 1);
        // Per-sample SNR: noise power relative to signal power.
        const double ps = w.total_power();
        double pn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pn += std::norm(out.x.samples[i] - w.x.samples[i]);
            pn += std::norm(out.y.samples[i] - w.y.samples[i]);
        }
        pn /= static_cast<double>(n);
        CHECK(10.0 * std::log10(ps / pn) == doctest::Approx(20.0).epsilon(0.01));
    }

    SUBCASE("doubling the sample rate halves the in-band share") {
        // Same record at fs = 25 GHz: total added noise power doubles, so the
        // per-sample SNR drops by 3.01 dB while OSNR stays fixed.
        DualPolWaveform wide = w;
        wide.x.sample_rate = wide.y.sample_rate = 25e9;
        const auto out = load_noise_to_osnr(wide, 20.0, 1);
        double pn = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pn += std::norm(out.x.samples[i] - wide.x.samples[i]);
            pn += std::norm(out.y.samples[i] - wide.y.samples[i]);
        }
        pn /= static_cast<double>(n);
        const double snr = 10.0 * std::log10(wide.total_power() / pn);
        CHECK(snr == doctest::Approx(20.0 - 10.0 * std::log10(2.0)).epsilon(0.01));
    }
}

TEST_CASE("monte carlo gmi tracks the quadrature oracle") {
    const auto c = build_constellation(ConstellationKind::qam16);
    const auto uni = mb_distribution(c, 0.0);
    for (double snr : {0.0, 5.0, 10.0, 15.0, 20.0}) {
        const auto r = awgn_run(uni, snr, 100000, 42 + static_cast<std::uint64_t>(snr));
        const double mc = gmi(r.rx, r.tx_idx, uni);
        const double ref = oracle::gmi_quadrature(uni, snr);
        CHECK(std::abs(mc - ref) < 0.02);
    }
}

TEST_CASE("gmi respects shaped priors") {
    const auto c = build_constellation(ConstellationKind::qam16);
    const auto d = mb_distribution(c, solve_nu(c, 3.8));

    SUBCASE("noiseless saturates at the entropy") {
        const auto tx_idx = draw_symbols(d, 20000, 9);
        const auto tx = points_of(d, tx_idx);
        CHECK(gmi(tx, tx_idx, d) == doctest::Approx(3.8).epsilon(1e-3));
    }

    SUBCASE("heavy noise drives it to zero") {
        const auto r = awgn_run(d, -30.0, 20000, 10);
        CHECK(gmi(r.rx, r.tx_idx, d) < 0.05);
    }

    SUBCASE("shaped gmi at 15 dB matches the oracle") {
        const auto r = awgn_run(d, 15.0, 200000, 11);
        const double mc = gmi(r.rx, r.tx_idx, d);
        const double ref = oracle::gmi_quadrature(d, 15.0);
        CHECK(ref == doctest::Approx(3.78178).epsilon(1e-3));
        CHECK(std::abs(mc - ref) < 0.02);
    }

    SUBCASE("too few symbols is an error") {
        const auto r = awgn_run(d, 15.0, 100, 12);
        CHECK_THROWS(gmi(r.rx, r.tx_idx, d));
    }
}

TEST_CASE("ngmi and rate formulas") {
    CHECK(ngmi(3.8, 3.8, 4) == doctest::Approx(1.0));
    CHECK(ngmi(0.0, 4.0, 4) == doctest::Approx(0.0));
    CHECK(ngmi(2.76, 3.8, 4) == doctest::Approx(0.74).epsilon(1e-12));
    CHECK_THROWS(ngmi(4.1, 4.0, 4));
    CHECK_THROWS(ngmi(3.0, 6.5, 6));

    // Exact formula evaluation, then agreement with the quoted six-digit
    // figures 1.62205 and 2.40957 Tb/s.
    CHECK(net_bit_rate(300e9, 0.0205, 3.8, 0.74, 4) ==
          2.0 * 300e9 * (1.0 - 0.0205) * (3.8 - (1.0 - 0.74) * 4));
    CHECK(net_bit_rate(300e9, 0.0205, 5.0, 0.85, 6) ==
          2.0 * 300e9 * (1.0 - 0.0205) * (5.0 - (1.0 - 0.85) * 6));
    CHECK(net_bit_rate(300e9, 0.0205, 3.8, 0.74, 4) == doctest::Approx(1.62205e12).epsilon(5e-6));
    CHECK(net_bit_rate(300e9, 0.0205, 5.0, 0.85, 6) == doctest::Approx(2.40957e12).epsilon(5e-6));
    CHECK(net_bit_rate(10e9, 0.0, 4.0, 1.0, 4) == doctest::Approx(2.0 * 10e9 * 4.0));
    CHECK(net_bit_rate(300e9, 0.0205, 3.8, 0.01, 4) == 0.0);

    CHECK(air(300e9, 0.0205, 3.8, 1.0, 4) ==
          doctest::Approx(2.0 * 300e9 * (1.0 - 0.0205) * 3.8));
    // The paper-scale long-haul point: AIR 1.6 Tb/s needs NGMI 0.7306.
    const double ng = 1.0 - (3.8 - (1.6e12 / (2.0 * 300e9 * (1.0 - 0.0205)) )) / 4.0;
    CHECK(air(300e9, 0.0205, 3.8, ng, 4) == doctest::Approx(1.6e12).epsilon(1e-9));
    CHECK(ng == doctest::Approx(0.7306).epsilon(1e-3));

    // Linear in R, affine in rc.
    Rng rng(31);
    for (int i = 0; i < 20; ++i) {
        const double r = 1e9 + 400e9 * rng.uniform();
        const double rp = 0.4 * rng.uniform();
        const double h = 2.5 + 1.4 * rng.uniform();
        const double rc1 = 0.6 + 0.4 * rng.uniform();
        const double rc2 = 0.6 + 0.4 * rng.uniform();
        CHECK(net_bit_rate(2.0 * r, rp, h, rc1, 4) ==
              doctest::Approx(2.0 * net_bit_rate(r, rp, h, rc1, 4)));
        const double mid = net_bit_rate(r, rp, h, 0.5 * (rc1 + rc2), 4);
        CHECK(mid == doctest::Approx(0.5 * (net_bit_rate(r, rp, h, rc1, 4) +
                                            net_bit_rate(r, rp, h, rc2, 4))).epsilon(1e-9));
    }

    CHECK(spectral_efficiency(1.6e12, 306.25e9) == doctest::Approx(5.22).epsilon(2e-3));
    CHECK(spectral_efficiency(2.4e12, 306.25e9) == doctest::Approx(7.84).epsilon(2e-3));
    CHECK(spectral_efficiency(0.0, 306.25e9) == 0.0);
}

TEST_CASE("fec rate selection") {
    const auto fam = default_fec_family();
    REQUIRE(fam.rates.size() == 10);  // the 0.05 grid already contains 0.85
    CHECK(fam.rates.front() == doctest::Approx(0.50));
    CHECK(fam.rates.back() == doctest::Approx(0.90));
    CHECK(std::count_if(fam.rates.begin(), fam.rates.end(),
                        [](double r) { return std::abs(r - 0.74) < 1e-12; }) == 1);
    CHECK(std::count_if(fam.rates.begin(), fam.rates.end(),
                        [](double r) { return std::abs(r - 0.85) < 1e-12; }) == 1);

    CHECK(select_fec_rate(1.0, fam) == doctest::Approx(0.90));
    CHECK(!select_fec_rate(0.3, fam).has_value());
    CHECK(select_fec_rate(0.765, fam) == doctest::Approx(0.74));
    CHECK(select_fec_rate(0.77, fam) == doctest::Approx(0.75));

    // Whenever selection succeeds the air at the measured ngmi dominates the
    // net rate at the selected code rate.
    for (double ng : {0.55, 0.7, 0.8, 0.93, 1.0}) {
        const auto rc = select_fec_rate(ng, fam);
        if (!rc) continue;
        CHECK(air(300e9, 0.0205, 3.8, ng, 4) >=
              net_bit_rate(300e9, 0.0205, 3.8, *rc, 4) - 1e-6);
    }
}

TEST_CASE("csv row format") {
    RateReport r;
    r.distance_km = 1210;
    r.snr_db = 15.25;
    r.gmi = 4.1;
    r.ngmi = 0.87;
    r.air_bps = 2.5e12;
    r.selected_rc = 0.85;
    r.net_bps = 2.40957e12;
    r.se_bps_hz = 7.868;
    CHECK(rate_report_csv_header() == "distance_km,snr_db,gmi,ngmi,air_tbps,rc,net_tbps,se_bps_hz");
    CHECK(rate_report_csv_row(r) == "1210,15.25,4.1,0.87,2.5,0.85,2.40957,7.868");
    r.selected_rc.reset();
    CHECK(rate_report_csv_row(r) == "1210,15.25,4.1,0.87,2.5,,2.40957,7.868");
}

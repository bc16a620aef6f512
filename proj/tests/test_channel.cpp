#include "doctest.h"

#include "slicewave/channel.hpp"
#include "slicewave/sigcore.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace slicewave;

namespace {

// Band-limited complex Gaussian field, scaled to power_per_pol in each
// polarization.
DualPolWaveform banded_noise(std::size_t n, double fs, double center, double bw,
                             double power_per_pol, std::uint64_t seed) {
    DualPolWaveform out;
    for (int pol = 0; pol < 2; ++pol) {
        Rng rng(Rng::derive(seed, pol == 0 ? "bandx" : "bandy"));
        Spectrum s;
        s.bins.assign(n, cplx{0.0, 0.0});
        s.bin_spacing = fs / static_cast<double>(n);
        s.center_freq = center;
        for (std::size_t k = 0; k < n; ++k) {
            const double f = (static_cast<double>(k) - static_cast<double>(n / 2)) * s.bin_spacing;
            if (std::abs(f) <= 0.5 * bw) s.bins[k] = rng.cnormal();
        }
        ComplexWaveform w = to_waveform(s);
        const double g = std::sqrt(power_per_pol / w.mean_power());
        for (auto& v : w.samples) v *= g;
        (pol == 0 ? out.x : out.y) = w;
    }
    return out;
}

DualPolWaveform flat_field(std::size_t n, double fs, double center, double px, double py) {
    DualPolWaveform out;
    out.x.samples.assign(n, cplx{std::sqrt(px), 0.0});
    out.y.samples.assign(n, cplx{std::sqrt(py), 0.0});
    out.x.sample_rate = out.y.sample_rate = fs;
    out.x.center_freq = out.y.center_freq = center;
    return out;
}

double total_db(const DualPolWaveform& w) { return 10.0 * std::log10(w.total_power()); }

}  // namespace

TEST_CASE("fiber constants fold to SI") {
    FiberParams p;

    // Hand-computed from 20.5 ps/(nm km), 0.06 ps/(nm^2 km), 1550 nm,
    // 2.2e-20 m^2/W over 150 um^2.
    CHECK(p.beta2() < 0.0);
    CHECK(p.beta2() == doctest::Approx(-2.61467e-26).epsilon(1e-4));
    CHECK(p.beta3() == doctest::Approx(1.40638e-40).epsilon(1e-4));
    CHECK(p.gamma() == doctest::Approx(5.9454e-4).epsilon(1e-4));
    CHECK(p.span_loss_db() == doctest::Approx(8.635).epsilon(1e-12));

    // D recovered from beta2 closes the loop.
    const double lambda = 1550e-9;
    const double d_si = -p.beta2() * 2.0 * std::numbers::pi * kSpeedOfLight / (lambda * lambda);
    CHECK(d_si == doctest::Approx(20.5e-6).epsilon(1e-12));

    CHECK_THROWS(([] {
        FiberParams bad;
        bad.length_km = -1.0;
        bad.validate();
    }()));
    CHECK_THROWS(([] {
        FiberParams bad;
        bad.effective_area_um2 = 0.0;
        bad.validate();
    }()));
    CHECK_THROWS(([] {
        EdfaParams bad;
        bad.noise_figure_db = 2.9;
        bad.validate();
    }()));
    CHECK_THROWS(([] {
        WdmConfig bad;
        bad.dummy_bandwidth_hz = bad.spacing_hz;
        bad.validate();
    }()));
}

TEST_CASE("linear span applies loss and a unitary dispersive phase") {
    const double fs = 50e9, fc = 193.052e12;
    const auto in = banded_noise(4096, fs, fc, 13.125e9, 1e-3, 11);
    FiberParams p;

    SUBCASE("power drops by alpha times length") {
        const auto out = span_propagate(in, p);
        CHECK(total_db(in) - total_db(out) == doctest::Approx(8.635).epsilon(1e-9));
    }

    SUBCASE("dispersion alone preserves energy") {
        FiberParams lossless = p;
        lossless.alpha_db_per_km = 0.0;
        const auto out = span_propagate(in, lossless);
        CHECK(out.total_power() == doctest::Approx(in.total_power()).epsilon(1e-12));
    }

    SUBCASE("zero length is the identity") {
        FiberParams nil = p;
        nil.length_km = 0.0;
        const auto out = span_propagate(in, nil);
        for (std::size_t k = 0; k < in.size(); ++k) {
            CHECK(out.x.samples[k] == in.x.samples[k]);
            CHECK(out.y.samples[k] == in.y.samples[k]);
        }
    }

    SUBCASE("analytic inverse restores the field") {
        const auto out = span_propagate(in, p);
        DualPolWaveform undo = out;
        const double z = p.length_km * 1e3;
        const double b2z = p.beta2() * z, b3z = p.beta3() * z;
        const double gain = std::pow(10.0, p.span_loss_db() / 20.0);
        apply_filter(undo, [&](double f) {
            const double w = 2.0 * std::numbers::pi * f;
            return std::polar(gain, -(0.5 * b2z * w * w + (b3z / 6.0) * w * w * w));
        });
        CHECK(evm_db(in.x.samples, undo.x.samples) <= -200.0);
        CHECK(evm_db(in.y.samples, undo.y.samples) <= -200.0);
    }

    SUBCASE("guard flag trips when spread outgrows the record") {
        bool ok = false;
        (void)span_propagate(in, p, 0.0, &ok);
        CHECK(ok);
        FiberParams huge = p;
        huge.length_km = 55000.0;
        (void)span_propagate(in, huge, 0.0, &ok);
        CHECK_FALSE(ok);
    }
}

TEST_CASE("split-step Kerr term matches the flat-top phase rotation") {
    const double fs = 50e9, fc = 193.052e12;

    SUBCASE("pure SPM on a lossless dispersionless span") {
        FiberParams p;
        p.alpha_db_per_km = 0.0;
        p.dispersion_ps_nm_km = 0.0;
        p.slope_ps_nm2_km = 0.0;
        const double power = 5e-3;
        const auto in = flat_field(1024, fs, fc, power, 0.0);
        const auto out = span_propagate(in, p, 5.0);

        // Constant power means the Manakov step is exact: phase advances by
        // gamma * (8/9) * P * L with magnitude untouched.
        const double expect = p.gamma() * (8.0 / 9.0) * power * p.length_km * 1e3;
        for (std::size_t k = 0; k < in.size(); ++k) {
            const cplx r = out.x.samples[k] / in.x.samples[k];
            CHECK(std::abs(std::arg(r) - expect) < 1e-3);
            CHECK(std::abs(r) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    SUBCASE("joint power drives both polarizations identically") {
        FiberParams p;
        p.alpha_db_per_km = 0.0;
        p.dispersion_ps_nm_km = 0.0;
        p.slope_ps_nm2_km = 0.0;
        const double power = 5e-3;
        const auto in = flat_field(256, fs, fc, 0.5 * power, 0.5 * power);
        const auto out = span_propagate(in, p, 5.0);
        const double expect = p.gamma() * (8.0 / 9.0) * power * p.length_km * 1e3;
        CHECK(std::arg(out.x.samples[0] / in.x.samples[0]) == doctest::Approx(expect).epsilon(1e-9));
        CHECK(std::arg(out.y.samples[0] / in.y.samples[0]) == doctest::Approx(expect).epsilon(1e-9));
    }

    SUBCASE("halving the step barely moves the output") {
        FiberParams p;
        const auto in = banded_noise(4096, fs, fc, 13.125e9, 5e-3, 13);
        const auto coarse = span_propagate(in, p, 5.0);
        const auto fine = span_propagate(in, p, 2.5);
        CHECK(evm_db(fine.x.samples, coarse.x.samples) <= -40.0);
        CHECK(evm_db(fine.y.samples, coarse.y.samples) <= -40.0);
    }

    SUBCASE("distributed loss still totals alpha times length") {
        FiberParams p;
        const auto in = banded_noise(2048, fs, fc, 13.125e9, 1e-6, 17);
        const auto out = span_propagate(in, p, 5.0);
        CHECK(total_db(in) - total_db(out) == doctest::Approx(8.635).epsilon(1e-9));
    }
}

TEST_CASE("amplifier hits its power target and adds calibrated ASE") {
    const double fs = 50e9, fc = 193.052e12;
    EdfaParams e;
    e.output_power_dbm = 0.0;
    e.noise_figure_db = 5.0;

    SUBCASE("added-noise power matches the PSD integral") {
        const double gain_db = 8.635;
        const double gain = std::pow(10.0, gain_db / 10.0);
        const double p_in = 1e-3 / gain;
        const auto in = banded_noise(2048, fs, fc, 13.125e9, 0.5 * p_in, 23);

        const double expect =
            (gain - 1.0) * kPlanck * fc * std::pow(10.0, e.noise_figure_db / 10.0) * fs;
        double acc = 0.0;
        const int trials = 100;
        for (int t = 0; t < trials; ++t) {
            const auto out = amplify(in, e, 1000 + t);
            double noise = 0.0;
            for (std::size_t k = 0; k < in.size(); ++k) {
                noise += std::norm(out.x.samples[k] - std::sqrt(gain) * in.x.samples[k]);
                noise += std::norm(out.y.samples[k] - std::sqrt(gain) * in.y.samples[k]);
            }
            acc += noise / static_cast<double>(in.size());
        }
        acc /= trials;
        CHECK(acc == doctest::Approx(expect).epsilon(0.02));
    }

    SUBCASE("repeat amplification is a pure gain trim") {
        const auto in = banded_noise(2048, fs, fc, 13.125e9, 1e-4, 29);
        const auto once = amplify(in, e, 5);
        const auto twice = amplify(once, e, 6);
        // Output already at target plus ASE, so the second pass attenuates
        // slightly and the clamped (G-1) adds nothing.
        const double g2 = 1e-3 / once.total_power();
        CHECK(g2 < 1.0);
        CHECK(twice.total_power() == doctest::Approx(1e-3).epsilon(1e-12));
        for (std::size_t k = 0; k < in.size(); k += 97)
            CHECK(std::abs(twice.x.samples[k] - std::sqrt(g2) * once.x.samples[k]) < 1e-15);
    }

    SUBCASE("degenerate inputs are rejected") {
        const auto in = flat_field(64, fs, fc, 0.0, 0.0);
        CHECK_THROWS(amplify(in, e, 1));
        auto dark = banded_noise(64, fs, 0.0, 10e9, 1e-3, 31);
        CHECK_THROWS(amplify(dark, e, 1));
    }
}

TEST_CASE("polarization scrambler is unitary and Haar") {
    const auto e1 = flat_field(1, 1.0, 0.0, 1.0, 0.0);
    DualPolWaveform e2 = e1;
    e2.x.samples[0] = 0.0;
    e2.y.samples[0] = 1.0;

    SUBCASE("every drawn matrix is unitary to 1e-12") {
        for (int i = 0; i < 200; ++i) {
            const auto u = scramble_polarization(e1, 42, i);
            const auto v = scramble_polarization(e2, 42, i);
            const double n1 = std::norm(u.x.samples[0]) + std::norm(u.y.samples[0]);
            const double n2 = std::norm(v.x.samples[0]) + std::norm(v.y.samples[0]);
            const cplx dot =
                std::conj(u.x.samples[0]) * v.x.samples[0] + std::conj(u.y.samples[0]) * v.y.samples[0];
            CHECK(std::abs(n1 - 1.0) < 1e-12);
            CHECK(std::abs(n2 - 1.0) < 1e-12);
            CHECK(std::abs(dot) < 1e-12);
        }
    }

    SUBCASE("total power is preserved exactly") {
        const auto in = banded_noise(1024, 50e9, 193.052e12, 13.125e9, 1e-3, 37);
        const auto out = scramble_polarization(in, 7, 3);
        CHECK(out.total_power() == doctest::Approx(in.total_power()).epsilon(1e-12));
        const auto again = scramble_polarization(in, 7, 3);
        for (std::size_t k = 0; k < in.size(); k += 131)
            CHECK(again.x.samples[k] == out.x.samples[k]);
    }

    SUBCASE("draws cover the Poincare sphere uniformly") {
        // For Haar U the output Stokes s1 of a fixed input is uniform on
        // [-1, 1]; Kolmogorov-Smirnov against that.
        const int n = 10000;
        std::vector<double> s1;
        s1.reserve(n);
        for (int i = 0; i < n; ++i) {
            const auto u = scramble_polarization(e1, 99, i);
            s1.push_back(std::norm(u.x.samples[0]) - std::norm(u.y.samples[0]));
        }
        std::sort(s1.begin(), s1.end());
        double d = 0.0;
        for (int i = 0; i < n; ++i) {
            const double f = 0.5 * (s1[i] + 1.0);
            d = std::max(d, std::abs(f - (i + 0.5) / n));
        }
        d += 0.5 / n;
        CHECK(d < 0.02);
    }
}

TEST_CASE("dummy channels carve a flat comb") {
    const double fs = 50e9, fc = 193.052e12;
    const std::size_t n = 1 << 16;
    const auto cut = banded_noise(n, fs, fc, 13.125e9, 0.5e-3, 41);
    WdmConfig cfg;
    cfg.spacing_hz = 14.583333e9;
    cfg.n_dummies = 2;
    cfg.dummy_bandwidth_hz = 13.125e9;

    SUBCASE("zero dummies passes the field through") {
        WdmConfig none = cfg;
        none.n_dummies = 0;
        const auto out = add_dummies(cut, none, 1);
        for (std::size_t k = 0; k < n; k += 499) CHECK(out.x.samples[k] == cut.x.samples[k]);
    }

    SUBCASE("each dummy carries the CUT power") {
        const auto out = add_dummies(cut, cfg, 1);
        CHECK(total_db(out) - total_db(cut) == doctest::Approx(10.0 * std::log10(3.0)).epsilon(1e-6));
    }

    SUBCASE("dummy spectra are flat and band-limited") {
        const auto out = add_dummies(cut, cfg, 1);
        DualPolWaveform diff = out;
        for (std::size_t k = 0; k < n; ++k) {
            diff.x.samples[k] -= cut.x.samples[k];
            diff.y.samples[k] -= cut.y.samples[k];
        }
        const auto sx = to_spectrum(diff.x);
        const auto sy = to_spectrum(diff.y);
        const double df = fs / static_cast<double>(n);

        // Sub-band averaged periodogram of the upper dummy stays within
        // +-0.5 dB; everything outside the two dummy bands is numerically
        // dark.
        const double off = cfg.spacing_hz;
        const int sub = 8;
        std::vector<double> bandp(sub, 0.0);
        std::vector<int> bandn(sub, 0);
        double leak = 0.0, inband = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double f = (static_cast<double>(k) - static_cast<double>(n / 2)) * df;
            const double p = std::norm(sx.bins[k]) + std::norm(sy.bins[k]);
            if (std::abs(f - off) <= 0.5 * cfg.dummy_bandwidth_hz) {
                const int b = std::min<int>(
                    sub - 1, static_cast<int>((f - off + 0.5 * cfg.dummy_bandwidth_hz) /
                                              (cfg.dummy_bandwidth_hz / sub)));
                bandp[b] += p;
                bandn[b] += 1;
                inband += p;
            } else if (std::abs(f + off) <= 0.5 * cfg.dummy_bandwidth_hz) {
                inband += p;
            } else {
                leak += p;
            }
        }
        CHECK(leak < 1e-20 * inband);
        double lo = 1e300, hi = 0.0;
        for (int b = 0; b < sub; ++b) {
            const double avg = bandp[b] / bandn[b];
            lo = std::min(lo, avg);
            hi = std::max(hi, avg);
        }
        CHECK(10.0 * std::log10(hi / lo) < 0.5);
    }

    SUBCASE("bands must fit the simulation grid") {
        WdmConfig wide = cfg;
        wide.spacing_hz = 30e9;
        CHECK_THROWS(add_dummies(cut, wide, 1));
    }
}

TEST_CASE("recirculating loop bookkeeping") {
    const double fs = 50e9, fc = 193.052e12;
    const auto cut = banded_noise(4096, fs, fc, 13.125e9, 0.5e-3, 43);
    WdmConfig wdm;
    wdm.spacing_hz = 14.583333e9;
    wdm.n_dummies = 2;
    wdm.dummy_bandwidth_hz = 13.125e9;
    const auto comb = add_dummies(cut, wdm, 2);

    LoopConfig cfg;
    cfg.wdm = wdm;
    cfg.scrambler_seed = 7;
    cfg.edfa.output_power_dbm = 10.0 * std::log10(comb.total_power() / 1e-3);
    cfg.edfa.noise_figure_db = 5.0;

    CHECK(cfg.loop_length_km() == 605.0);
    CHECK(2 * cfg.loop_length_km() == 1210.0);
    CHECK(11 * cfg.loop_length_km() == 6655.0);
    CHECK(15 * cfg.loop_length_km() == 9075.0);
    CHECK(18 * cfg.loop_length_km() == 10890.0);

    SUBCASE("zero round trips is back-to-back") {
        const auto res = run_loop(comb, cfg, 0);
        CHECK(res.telemetry.empty());
        for (std::size_t k = 0; k < comb.size(); k += 271)
            CHECK(res.field.x.samples[k] == comb.x.samples[k]);
    }

    SUBCASE("telemetry tracks distance, power, and falling OSNR") {
        const auto res = run_loop(comb, cfg, 3);
        REQUIRE(res.telemetry.size() == 3);
        for (int i = 0; i < 3; ++i) {
            const auto& t = res.telemetry[i];
            CHECK(t.loop_index == i + 1);
            CHECK(t.distance_km == 605.0 * (i + 1));
            CHECK(t.power_dbm == doctest::Approx(cfg.edfa.output_power_dbm).epsilon(0.05));
            CHECK(t.guard_ok);
            if (i > 0) CHECK(t.osnr_db < res.telemetry[i - 1].osnr_db);
        }
        const auto row = loop_telemetry_csv_row(res.telemetry[0]);
        CHECK(row.find("1,605,") == 0);
        CHECK(loop_telemetry_csv_header() == "loop_index,distance_km,power_dbm,osnr_db");
    }

    SUBCASE("identical seeds rerun bit for bit") {
        const auto a = run_loop(comb, cfg, 2);
        const auto b = run_loop(comb, cfg, 2);
        for (std::size_t k = 0; k < comb.size(); ++k) {
            CHECK(a.field.x.samples[k] == b.field.x.samples[k]);
            CHECK(a.field.y.samples[k] == b.field.y.samples[k]);
        }
        CHECK(a.telemetry.back().osnr_db == b.telemetry.back().osnr_db);
    }
}

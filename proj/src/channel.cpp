#include "slicewave/channel.hpp"

#include "slicewave/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

namespace slicewave {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }

}  // namespace

double FiberParams::beta2() const {
    const double lambda = reference_wavelength_nm * 1e-9;
    const double d_si = dispersion_ps_nm_km * 1e-6;  // s/m^2
    return -d_si * lambda * lambda / (kTwoPi * kSpeedOfLight);
}

double FiberParams::beta3() const {
    const double lambda = reference_wavelength_nm * 1e-9;
    const double d_si = dispersion_ps_nm_km * 1e-6;   // s/m^2
    const double s_si = slope_ps_nm2_km * 1e3;        // s/m^3
    const double k = lambda * lambda / (kTwoPi * kSpeedOfLight);
    return (s_si + 2.0 * d_si / lambda) * k * k;
}

double FiberParams::gamma() const {
    const double lambda = reference_wavelength_nm * 1e-9;
    const double aeff = effective_area_um2 * 1e-12;
    return kTwoPi * n2_m2_per_w / (lambda * aeff);
}

void FiberParams::validate() const {
    // Zero length, loss, or dispersion are degenerate but legal (identity
    // span, lossless test fiber, dispersion-shifted fiber); the geometry
    // must be strictly positive.
    if (!(length_km >= 0.0)) throw std::invalid_argument("fiber length must be >= 0");
    if (!(alpha_db_per_km >= 0.0)) throw std::invalid_argument("fiber loss must be >= 0");
    if (!(dispersion_ps_nm_km >= 0.0)) throw std::invalid_argument("dispersion must be >= 0");
    if (!(slope_ps_nm2_km >= 0.0)) throw std::invalid_argument("dispersion slope must be >= 0");
    if (!(effective_area_um2 > 0.0)) throw std::invalid_argument("effective area must be positive");
    if (!(n2_m2_per_w > 0.0)) throw std::invalid_argument("n2 must be positive");
    if (!(reference_wavelength_nm > 0.0)) throw std::invalid_argument("wavelength must be positive");
}

void EdfaParams::validate() const {
    if (!std::isfinite(output_power_dbm))
        throw std::invalid_argument("EDFA output power must be finite");
    if (!(noise_figure_db >= 3.01))
        throw std::invalid_argument("EDFA noise figure below the 3.01 dB quantum limit");
}

void WdmConfig::validate() const {
    if (!(spacing_hz > 0.0)) throw std::invalid_argument("channel spacing must be positive");
    if (n_dummies < 0) throw std::invalid_argument("dummy count must be >= 0");
    if (!(dummy_bandwidth_hz > 0.0))
        throw std::invalid_argument("dummy bandwidth must be positive");
    if (!(spacing_hz > dummy_bandwidth_hz))
        throw std::invalid_argument("channel spacing must exceed the dummy bandwidth");
    if (cut_index >= 0 && cut_index > n_dummies)
        throw std::invalid_argument("cut_index outside the comb");
}

void LoopConfig::validate() const {
    if (spans_per_loop < 1) throw std::invalid_argument("need at least one span per loop");
    if (ssfm_step_km < 0.0) throw std::invalid_argument("SSFM step must be >= 0");
    fiber.validate();
    edfa.validate();
    wdm.validate();
}

DualPolWaveform add_dummies(const DualPolWaveform& cut, const WdmConfig& cfg,
                            std::uint64_t seed) {
    cfg.validate();
    cut.validate();
    if (cfg.n_dummies == 0) return cut;

    const double fs = cut.sample_rate();
    for (int i = 0; i <= cfg.n_dummies; ++i) {
        if (i == cfg.cut()) continue;
        if (std::abs(cfg.offset(i)) + 0.5 * cfg.dummy_bandwidth_hz > 0.5 * fs)
            throw std::invalid_argument("dummy channel falls outside the simulation band");
    }

    const double px = cut.x.mean_power();
    const double py = cut.y.mean_power();
    if (!(px > 0.0) || !(py > 0.0))
        throw std::invalid_argument("CUT power must be positive in both polarizations");

    DualPolWaveform out = cut;
    const std::size_t n = cut.size();
    const double df = fs / static_cast<double>(n);

    for (int i = 0; i <= cfg.n_dummies; ++i) {
        if (i == cfg.cut()) continue;
        const double off = cfg.offset(i);
        for (int pol = 0; pol < 2; ++pol) {
            const std::string tag =
                "dummy." + std::to_string(i) + (pol == 0 ? ".x" : ".y");
            Rng rng(Rng::derive(seed, tag));
            Spectrum s;
            s.bins.assign(n, cplx{0.0, 0.0});
            s.bin_spacing = df;
            s.center_freq = cut.x.center_freq;
            for (std::size_t k = 0; k < n; ++k) {
                const double f = (static_cast<double>(k) - static_cast<double>(n / 2)) * df;
                if (std::abs(f - off) <= 0.5 * cfg.dummy_bandwidth_hz) s.bins[k] = rng.cnormal();
            }
            ComplexWaveform d = to_waveform(s);
            const double target = pol == 0 ? px : py;
            const double got = d.mean_power();
            if (!(got > 0.0)) throw std::runtime_error("dummy band produced no power");
            const double g = std::sqrt(target / got);
            auto& dst = pol == 0 ? out.x.samples : out.y.samples;
            for (std::size_t k = 0; k < n; ++k) dst[k] += g * d.samples[k];
        }
    }
    return out;
}

double group_delay_spread(const FiberParams& p, double bandwidth_hz, double length_km) {
    const double z = length_km * 1e3;
    const auto tau = [&](double f) {
        const double w = kTwoPi * f;
        return (p.beta2() * w + 0.5 * p.beta3() * w * w) * z;
    };
    const double a = tau(-0.5 * bandwidth_hz), b = tau(0.0), c = tau(0.5 * bandwidth_hz);
    return std::max({a, b, c}) - std::min({a, b, c});
}

namespace {

// Dispersion plus distributed loss over length_km as one all-pass-and-decay
// frequency response.
void apply_linear_segment(DualPolWaveform& field, const FiberParams& p, double length_km) {
    const double z = length_km * 1e3;
    const double b2z = p.beta2() * z;
    const double b3z = p.beta3() * z;
    const double amp = std::pow(10.0, -p.alpha_db_per_km * length_km / 20.0);
    apply_filter(field, [=](double f) {
        const double w = kTwoPi * f;
        const double phase = 0.5 * b2z * w * w + (b3z / 6.0) * w * w * w;
        return std::polar(amp, phase);
    });
}

}  // namespace

DualPolWaveform span_propagate(const DualPolWaveform& field, const FiberParams& p,
                               double ssfm_step_km, bool* guard_ok) {
    p.validate();
    field.validate();
    if (ssfm_step_km < 0.0) throw std::invalid_argument("SSFM step must be >= 0");

    if (guard_ok) {
        const double spread = group_delay_spread(p, field.sample_rate(), p.length_km);
        *guard_ok = spread <= field.x.duration();
    }
    if (p.length_km == 0.0) return field;

    DualPolWaveform out = field;
    if (ssfm_step_km == 0.0) {
        apply_linear_segment(out, p, p.length_km);
        return out;
    }

    const int n_steps = std::max(1, static_cast<int>(std::ceil(p.length_km / ssfm_step_km)));
    const double h = p.length_km / n_steps;
    const double g_eff = p.gamma() * (8.0 / 9.0);
    for (int s = 0; s < n_steps; ++s) {
        apply_linear_segment(out, p, 0.5 * h);
        for (std::size_t k = 0; k < out.size(); ++k) {
            const double ptot = std::norm(out.x.samples[k]) + std::norm(out.y.samples[k]);
            const cplx rot = std::polar(1.0, g_eff * ptot * h * 1e3);
            out.x.samples[k] *= rot;
            out.y.samples[k] *= rot;
        }
        apply_linear_segment(out, p, 0.5 * h);
    }
    return out;
}

DualPolWaveform amplify(const DualPolWaveform& field, const EdfaParams& e,
                        std::uint64_t seed) {
    e.validate();
    field.validate();
    const double p_in = field.total_power();
    if (!(p_in > 0.0)) throw std::invalid_argument("amplifier input power must be positive");
    const double nu = field.x.center_freq;
    if (!(nu > 0.0)) throw std::invalid_argument("ASE needs a positive optical carrier");

    const double gain = dbm_to_watt(e.output_power_dbm) / p_in;
    const double nf_lin = std::pow(10.0, e.noise_figure_db / 10.0);
    const double psd = std::max(gain - 1.0, 0.0) * kPlanck * nu * nf_lin / 2.0;  // W/Hz per pol
    const double sigma = std::sqrt(psd * field.sample_rate());
    const double amp = std::sqrt(gain);

    DualPolWaveform out = field;
    Rng rx(Rng::derive(seed, "ase.x")), ry(Rng::derive(seed, "ase.y"));
    for (auto& s : out.x.samples) s = amp * s + sigma * rx.cnormal();
    for (auto& s : out.y.samples) s = amp * s + sigma * ry.cnormal();
    return out;
}

DualPolWaveform scramble_polarization(const DualPolWaveform& field, std::uint64_t seed,
                                      int roundtrip_index) {
    field.validate();
    Rng rng(Rng::derive(seed, "scramble." + std::to_string(roundtrip_index)));

    // First column uniform on the unit sphere of C^2, second column fixed by
    // unitarity up to a uniform phase: Haar on U(2).
    cplx a = rng.cnormal(), b = rng.cnormal();
    double nrm = std::sqrt(std::norm(a) + std::norm(b));
    while (!(nrm > 1e-12)) {
        a = rng.cnormal();
        b = rng.cnormal();
        nrm = std::sqrt(std::norm(a) + std::norm(b));
    }
    const cplx m00 = a / nrm, m10 = b / nrm;
    const cplx ph = std::polar(1.0, kTwoPi * rng.uniform());
    const cplx m01 = -std::conj(m10) * ph, m11 = std::conj(m00) * ph;

    DualPolWaveform out = field;
    for (std::size_t k = 0; k < field.size(); ++k) {
        const cplx ex = field.x.samples[k], ey = field.y.samples[k];
        out.x.samples[k] = m00 * ex + m01 * ey;
        out.y.samples[k] = m10 * ex + m11 * ey;
    }
    return out;
}

DualPolWaveform equalize_comb(const DualPolWaveform& field, const WdmConfig& cfg) {
    cfg.validate();
    field.validate();

    const std::size_t n = field.size();
    const double df = field.sample_rate() / static_cast<double>(n);
    Spectrum sx = to_spectrum(field.x), sy = to_spectrum(field.y);

    const int nch = cfg.channel_count();
    std::vector<double> power(nch, 0.0);
    const auto band_of = [&](std::size_t k) {
        const double f = (static_cast<double>(k) - static_cast<double>(n / 2)) * df;
        for (int i = 0; i < nch; ++i)
            if (std::abs(f - cfg.offset(i)) <= 0.5 * cfg.spacing_hz) return i;
        return -1;
    };
    for (std::size_t k = 0; k < n; ++k) {
        const int i = band_of(k);
        if (i >= 0) power[i] += std::norm(sx.bins[k]) + std::norm(sy.bins[k]);
    }

    double mean = 0.0;
    int live = 0;
    for (const double p : power)
        if (p > 0.0) {
            mean += p;
            ++live;
        }
    if (live == 0) return field;
    mean /= live;

    std::vector<double> gain(nch, 1.0);
    for (int i = 0; i < nch; ++i)
        if (power[i] > 0.0) gain[i] = std::sqrt(mean / power[i]);

    for (std::size_t k = 0; k < n; ++k) {
        const int i = band_of(k);
        if (i < 0) continue;
        sx.bins[k] *= gain[i];
        sy.bins[k] *= gain[i];
    }
    DualPolWaveform out;
    out.x = to_waveform(sx);
    out.y = to_waveform(sy);
    return out;
}

std::string loop_telemetry_csv_header() { return "loop_index,distance_km,power_dbm,osnr_db"; }

std::string loop_telemetry_csv_row(const LoopTelemetry& t) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.10g", t.loop_index, t.distance_km,
                  t.power_dbm, t.osnr_db);
    return buf;
}

LoopRunResult run_loop(const DualPolWaveform& field, const LoopConfig& cfg,
                       int n_roundtrips) {
    cfg.validate();
    field.validate();
    if (n_roundtrips < 0) throw std::invalid_argument("round trip count must be >= 0");

    LoopRunResult res;
    res.field = field;
    res.telemetry.reserve(static_cast<std::size_t>(n_roundtrips));

    const double nu = field.x.center_freq;
    const double nf_lin = std::pow(10.0, cfg.edfa.noise_figure_db / 10.0);
    const double span_loss_lin = std::pow(10.0, -cfg.fiber.span_loss_db() / 10.0);
    const double p_target = dbm_to_watt(cfg.edfa.output_power_dbm);

    // Analytic per-pol ASE density rides along for the OSNR column; the
    // equalizer and scrambler leave it untouched to first order.
    double acc_psd = 0.0;

    for (int r = 0; r < n_roundtrips; ++r) {
        bool guard_all = true;
        for (int s = 0; s < cfg.spans_per_loop; ++s) {
            bool g = true;
            res.field = span_propagate(res.field, cfg.fiber, cfg.ssfm_step_km, &g);
            guard_all = guard_all && g;
            acc_psd *= span_loss_lin;

            const double p_in = res.field.total_power();
            const std::string tag = "edfa." + std::to_string(r) + "." + std::to_string(s);
            res.field = amplify(res.field, cfg.edfa, Rng::derive(cfg.scrambler_seed, tag));
            const double gain = p_target / p_in;
            acc_psd = acc_psd * gain + std::max(gain - 1.0, 0.0) * kPlanck * nu * nf_lin / 2.0;
        }
        // Ideal GFF has nothing to flatten in a spectrally flat gain model.
        if (cfg.comb_equalization) res.field = equalize_comb(res.field, cfg.wdm);
        res.field = scramble_polarization(res.field, cfg.scrambler_seed, r);

        LoopTelemetry t;
        t.loop_index = r + 1;
        t.distance_km = (r + 1) * cfg.loop_length_km();
        t.power_dbm = watt_to_dbm(res.field.total_power());
        const double p_cut = res.field.total_power() / cfg.wdm.channel_count();
        const double ase = 2.0 * acc_psd * kOsnrRefBandwidth;
        t.osnr_db = ase > 0.0 ? 10.0 * std::log10(p_cut / ase) : 200.0;
        t.guard_ok = guard_all;
        res.telemetry.push_back(t);
    }
    return res;
}

}  // namespace slicewave

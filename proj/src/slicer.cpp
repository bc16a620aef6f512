#include "slicewave/slicer.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

namespace slicewave {

void SliceSpec::validate() const {
    if (!(symbol_rate > 0.0)) throw std::invalid_argument("slice spec: symbol_rate must be positive");
    if (!(overlap_width > 0.0)) throw std::invalid_argument("slice spec: overlap_width must be positive");
    if (!(fsr() > overlap_width)) throw std::invalid_argument("slice spec: fsr must exceed the overlap");
    if (transition() > overlap_width + 1e-6)
        throw std::invalid_argument("slice spec: transition wider than the overlap");
    if (rolloff < 0.0 || rolloff >= 1.0) throw std::invalid_argument("slice spec: rolloff outside [0, 1)");
}

double crossover_step(double f, double center, double width) {
    const double u = (f - (center - width / 2.0)) / width;
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return 0.5 * (1.0 - std::cos(std::numbers::pi * u));
}

double rrc_amplitude(double f, double symbol_rate, double rolloff) {
    const double half = symbol_rate / 2.0;
    const double lo = half * (1.0 - rolloff);
    const double hi = half * (1.0 + rolloff);
    const double a = std::abs(f);
    if (a <= lo) return 1.0;
    if (a >= hi) return 0.0;
    // Square root of the raised-cosine taper.
    const double rc = 0.5 * (1.0 + std::cos(std::numbers::pi * (a - lo) / (rolloff * symbol_rate)));
    return std::sqrt(rc);
}

ComplexWaveform shape_pulse(const CVec& symbols, const SliceSpec& spec, int sps) {
    spec.validate();
    if (symbols.empty()) throw std::invalid_argument("shape_pulse: no symbols");
    if (static_cast<double>(sps) < 2.0 * (1.0 + spec.rolloff))
        throw std::invalid_argument("shape_pulse: sps too small for the roll-off");
    const std::size_t n = symbols.size() * static_cast<std::size_t>(sps);
    if (!is_pow2(n))
        throw std::invalid_argument("shape_pulse: sample count must be a power of two");

    ComplexWaveform w;
    w.sample_rate = spec.symbol_rate * sps;
    w.center_freq = spec.crossover();
    w.samples.assign(n, cplx{0.0, 0.0});
    for (std::size_t k = 0; k < symbols.size(); ++k)
        w.samples[k * static_cast<std::size_t>(sps)] = symbols[k];

    // Gain sps on the tx side leaves unit symbol gain through the matched
    // pair and unit expected mean power on the line.
    const double g = static_cast<double>(sps);
    apply_filter(w, [&](double f) {
        return cplx{g * rrc_amplitude(f, spec.symbol_rate, spec.rolloff), 0.0};
    });
    return w;
}

ComplexWaveform shape_pulse(const PilotFrame& frame, const SliceSpec& spec, int sps) {
    return shape_pulse(frame.symbols, spec, sps);
}

CVec matched_filter_symbols(const ComplexWaveform& w, double symbol_rate, double rolloff) {
    w.validate();
    const double sps_f = w.sample_rate / symbol_rate;
    const auto sps = static_cast<std::size_t>(std::llround(sps_f));
    if (sps < 1 || std::abs(sps_f - static_cast<double>(sps)) > 1e-9)
        throw std::invalid_argument("matched filter: sample rate must be an integer multiple of the symbol rate");
    ComplexWaveform filtered = w;
    apply_filter(filtered, [&](double f) {
        return cplx{rrc_amplitude(f, symbol_rate, rolloff), 0.0};
    });
    CVec out(w.size() / sps);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = filtered.samples[k * sps];
    return out;
}

namespace {

// Frequency response of slice k relative to the waveform center.
double slice_gain(const SliceSpec& spec, double center_freq, double f_rel, int k) {
    const double r = crossover_step(center_freq + f_rel, spec.crossover(), spec.transition());
    return k == 0 ? 1.0 - r : r;
}

}  // namespace

std::array<ComplexWaveform, 2> slice(const ComplexWaveform& w, const SliceSpec& spec) {
    spec.validate();
    w.validate();
    const double half_band = spec.symbol_rate * (1.0 + spec.rolloff) / 2.0;
    if (half_band > w.sample_rate / 2.0 + 1e-6)
        throw std::invalid_argument("slice: signal exceeds the representable band");

    std::array<ComplexWaveform, 2> out;
    for (int k = 0; k < 2; ++k) {
        ComplexWaveform s = w;
        apply_filter(s, [&](double f) {
            return cplx{slice_gain(spec, w.center_freq, f, k), 0.0};
        });
        // Re-center on the slice tone; exact inverse of the recombine mix.
        s = mix(s, w.center_freq - spec.tone_freqs[k]);
        s.center_freq = spec.tone_freqs[k];
        out[k] = std::move(s);
    }
    return out;
}

ComplexWaveform recombine(const ComplexWaveform& s1, const ComplexWaveform& s2,
                          const SliceSpec& spec, double phase_on_s2) {
    if (s1.size() != s2.size() || s1.sample_rate != s2.sample_rate)
        throw std::invalid_argument("recombine: slices disagree on grid");
    const double center = spec.crossover();
    ComplexWaveform a = mix(s1, s1.center_freq - center);
    ComplexWaveform b = mix(s2, s2.center_freq - center);
    const cplx rot = std::polar(1.0, phase_on_s2);
    for (std::size_t i = 0; i < a.size(); ++i) a.samples[i] += rot * b.samples[i];
    a.center_freq = center;
    return a;
}

namespace {

// Overlap correlation sum(S2 S1*) with both slices moved back onto their
// common midpoint reference. Re-centering this way makes each slice's
// earlier re-centering mix cancel exactly in the time domain, so matched
// slices correlate with zero spurious phase even though the tone spacing is
// not bin-aligned. Also reports the overlap power for emptiness checks.
cplx overlap_correlation(const ComplexWaveform& s1, const ComplexWaveform& s2,
                         double f1_ref, double f2_ref, const SliceSpec& spec, double* power) {
    const double mid = 0.5 * (f1_ref + f2_ref);
    const Spectrum a = to_spectrum(mix(s1, f1_ref - mid));
    const Spectrum b = to_spectrum(mix(s2, f2_ref - mid));
    cplx c{0.0, 0.0};
    double p = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a.freq(i)) <= spec.overlap_width / 2.0) {
            c += b.bins[i] * std::conj(a.bins[i]);
            p += std::norm(a.bins[i]) + std::norm(b.bins[i]);
        }
    }
    if (power) *power = p;
    return c;
}

}  // namespace

double sce_error(const ComplexWaveform& s1, const ComplexWaveform& s2, const SliceSpec& spec,
                 double injected_phase) {
    double p = 0.0;
    const cplx c = overlap_correlation(s1, s2, s1.center_freq, s2.center_freq, spec, &p);
    if (p <= 0.0 || std::abs(c) <= 0.0)
        throw std::invalid_argument("sce_error: no overlap power");
    return std::imag(c * std::polar(1.0, injected_phase)) / std::abs(c);
}

SceResult sce_lock(const ComplexWaveform& s1, const ComplexWaveform& s2, const SliceSpec& spec,
                   SceState state, int max_iters) {
    double p = 0.0;
    const cplx corr = overlap_correlation(s1, s2, s1.center_freq, s2.center_freq, spec, &p);
    if (p <= 0.0 || std::abs(corr) <= 0.0)
        throw std::invalid_argument("sce_lock: no overlap power");
    const cplx unit = corr / std::abs(corr);

    // The discriminant is an exact sine of controller phase plus the baked-in
    // offset, so the slices are only consulted once.
    auto u_err = [&](double phase) { return std::imag(unit * std::polar(1.0, phase)); };

    double phase = state.phase_error;
    state.trace.assign(1, phase);
    state.iterations = 0;
    state.dither_kicks = 0;
    state.locked = false;
    for (int it = 0; it <= max_iters; ++it) {
        const double u = u_err(phase);
        state.error_signal = u;
        if (std::abs(u) < state.tolerance) {
            // Stable zero has positive slope; the pi equilibrium does not.
            const double delta = 1e-3;
            if (u_err(phase + delta) - u > 0.0) {
                state.locked = true;
                break;
            }
            phase += 0.5;
            ++state.dither_kicks;
            state.trace.push_back(phase);
            continue;
        }
        if (it == max_iters) break;
        phase -= state.loop_gain * u;
        ++state.iterations;
        state.trace.push_back(phase);
    }
    state.phase_error = phase;
    if (!state.locked)
        throw std::runtime_error("sce_lock: no convergence, residual " +
                                 std::to_string(state.error_signal));

    SceResult res;
    res.s1 = s1;
    res.s2 = s2;
    const cplx rot = std::polar(1.0, phase);
    for (auto& s : res.s2.samples) s *= rot;
    res.state = std::move(state);
    return res;
}

void TxImpairment::validate() const {
    if (!(bandwidth_3db > 0.0)) throw std::invalid_argument("tx impairment: bandwidth must be positive");
    if (!(floor_snr_db > 0.0)) throw std::invalid_argument("tx impairment: floor snr must be positive");
}

ComplexWaveform apply_tx_impairments(const ComplexWaveform& w, const TxImpairment& imp,
                                     double symbol_rate, std::uint64_t seed) {
    imp.validate();
    ComplexWaveform out = w;

    if (std::isfinite(imp.bandwidth_3db)) {
        const double f3 = imp.bandwidth_3db;
        apply_filter(out, [&](double f) {
            const double x = (f / f3) * (f / f3);
            return cplx{1.0 / std::sqrt(1.0 + x * x), 0.0};
        });
    }

    if (imp.iq_gain_imbalance_db != 0.0 || imp.iq_phase_imbalance_deg != 0.0 ||
        imp.iq_skew != 0.0) {
        const std::size_t n = out.size();
        CVec i_path(n), q_path(n);
        for (std::size_t k = 0; k < n; ++k) {
            i_path[k] = {out.samples[k].real(), 0.0};
            q_path[k] = {out.samples[k].imag(), 0.0};
        }
        if (imp.iq_skew != 0.0) {
            // Differential delay split evenly across the two rails.
            auto delay = [&](CVec& v, double tau) {
                ComplexWaveform t{std::move(v), out.sample_rate, 0.0};
                apply_filter(t, [&](double f) {
                    return std::polar(1.0, -2.0 * std::numbers::pi * f * tau);
                });
                v = std::move(t.samples);
            };
            delay(i_path, +imp.iq_skew / 2.0);
            delay(q_path, -imp.iq_skew / 2.0);
        }
        const double gi = std::pow(10.0, +imp.iq_gain_imbalance_db / 40.0);
        const double gq = std::pow(10.0, -imp.iq_gain_imbalance_db / 40.0);
        const double th = imp.iq_phase_imbalance_deg * std::numbers::pi / 180.0;
        // Quadrature rail rotated off the ideal axis: j -> j e^{j th}.
        const cplx q_axis = cplx{0.0, 1.0} * std::polar(1.0, th);
        for (std::size_t k = 0; k < n; ++k)
            out.samples[k] = gi * i_path[k].real() + gq * q_path[k].real() * q_axis;
    }

    if (std::isfinite(imp.floor_snr_db)) {
        // White noise sized against the in-band density, so a matched-filter
        // loopback reads floor_snr_db independent of the oversampling.
        const double p = out.mean_power();
        const double sigma2 = p * (out.sample_rate / symbol_rate) *
                              std::pow(10.0, -imp.floor_snr_db / 10.0);
        const double sigma = std::sqrt(sigma2);
        Rng rng(Rng::derive(seed, "tx.floor"));
        for (auto& s : out.samples) s += sigma * rng.cnormal();
    }
    return out;
}

DualPolWaveform pdme(const ComplexWaveform& w, const PdmeConfig& cfg) {
    if (cfg.delay < 0.0) throw std::invalid_argument("pdme: delay must be nonnegative");
    DualPolWaveform out;
    out.x = w;
    out.y = circular_delay(w, std::llround(cfg.delay * w.sample_rate));
    return out;
}

namespace {

double rx_lowpass_gain(double f, double bandwidth) {
    // Flat to the stated bandwidth, raised-cosine edge beyond it.
    const double edge = 0.05 * bandwidth;
    const double a = std::abs(f);
    if (a <= bandwidth) return 1.0;
    if (a >= bandwidth + edge) return 0.0;
    return std::sqrt(0.5 * (1.0 + std::cos(std::numbers::pi * (a - bandwidth) / edge)));
}

}  // namespace

std::array<std::array<SliceRecord, 2>, 2> rx_slice_detect(
    const DualPolWaveform& field, std::array<double, 2> lo_freqs, double rx_bandwidth,
    const SliceSpec& spec, std::uint64_t seed, double rx_snr_db) {
    spec.validate();
    field.validate();
    if (!(rx_bandwidth > spec.fsr() / 2.0 + spec.overlap_width / 2.0))
        throw std::invalid_argument("rx_slice_detect: bandwidth too small to capture the overlap");
    if (!(lo_freqs[1] > lo_freqs[0]))
        throw std::invalid_argument("rx_slice_detect: lo tones must ascend");

    std::array<std::array<SliceRecord, 2>, 2> recs;
    for (int k = 0; k < 2; ++k) {
        Rng prng(Rng::derive(seed, k == 0 ? "rx.phase.1" : "rx.phase.2"));
        const double psi = (2.0 * prng.uniform() - 1.0) * std::numbers::pi;
        for (int pol = 0; pol < 2; ++pol) {
            const ComplexWaveform& src = pol == 0 ? field.x : field.y;
            ComplexWaveform r = mix(src, src.center_freq - lo_freqs[k]);
            r.center_freq = lo_freqs[k];
            apply_filter(r, [&](double f) { return cplx{rx_lowpass_gain(f, rx_bandwidth), 0.0}; });
            const cplx rot = std::polar(1.0, psi);
            for (auto& s : r.samples) s *= rot;
            if (std::isfinite(rx_snr_db)) {
                const double sigma =
                    std::sqrt(r.mean_power() * std::pow(10.0, -rx_snr_db / 10.0));
                Rng nrng(Rng::derive(seed, "rx.noise." + std::to_string(k) + "." +
                                               std::to_string(pol)));
                for (auto& s : r.samples) s += sigma * nrng.cnormal();
            }
            recs[k][pol] = SliceRecord{std::move(r), lo_freqs[k], rx_bandwidth, seed, psi};
        }
    }
    return recs;
}

double estimate_phase_offset(const SliceRecord& s1, const SliceRecord& s2,
                             const SliceSpec& spec) {
    double p = 0.0;
    const cplx c = overlap_correlation(s1.wave, s2.wave, s1.lo_freq, s2.lo_freq, spec, &p);
    if (p <= 0.0 || std::abs(c) < 1e-12 * p)
        throw std::invalid_argument("estimate_phase_offset: overlap power too low");
    return std::arg(c);
}

double estimate_phase_offset(const std::array<std::array<SliceRecord, 2>, 2>& records,
                             const SliceSpec& spec) {
    cplx c{0.0, 0.0};
    double p = 0.0;
    for (int pol = 0; pol < 2; ++pol) {
        double pp = 0.0;
        c += overlap_correlation(records[0][pol].wave, records[1][pol].wave,
                                 records[0][pol].lo_freq, records[1][pol].lo_freq, spec, &pp);
        p += pp;
    }
    if (p <= 0.0 || std::abs(c) < 1e-12 * p)
        throw std::invalid_argument("estimate_phase_offset: overlap power too low");
    return std::arg(c);
}

ComplexWaveform stitch(const SliceRecord& s1, const SliceRecord& s2, double phase,
                       const SliceSpec& spec) {
    if (s1.wave.size() != s2.wave.size() || s1.wave.sample_rate != s2.wave.sample_rate)
        throw std::invalid_argument("stitch: records disagree on grid");
    const double center = 0.5 * (s1.lo_freq + s2.lo_freq);

    ComplexWaveform a = mix(s1.wave, s1.lo_freq - center);
    a.center_freq = center;
    apply_filter(a, [&](double f) {
        return cplx{1.0 - crossover_step(f, 0.0, spec.transition()), 0.0};
    });

    ComplexWaveform b = mix(s2.wave, s2.lo_freq - center);
    b.center_freq = center;
    apply_filter(b, [&](double f) {
        return cplx{crossover_step(f, 0.0, spec.transition()), 0.0};
    });

    const cplx rot = std::polar(1.0, -phase);
    for (std::size_t i = 0; i < a.size(); ++i) a.samples[i] += rot * b.samples[i];
    return a;
}

void write_slice_record(const SliceRecord& r, const std::string& path_base) {
    write_waveform(r.wave, path_base + ".bin");
    nlohmann::json j;
    j["lo_freq"] = r.lo_freq;
    j["bandwidth"] = r.bandwidth;
    j["seed"] = r.seed;
    j["injected_offset"] = r.injected_offset;
    std::ofstream os(path_base + ".json");
    if (!os) throw std::runtime_error("cannot write sidecar: " + path_base + ".json");
    os << j.dump(2) << "\n";
}

SliceRecord read_slice_record(const std::string& path_base) {
    SliceRecord r;
    r.wave = read_waveform(path_base + ".bin");
    std::ifstream is(path_base + ".json");
    if (!is) throw std::runtime_error("cannot read sidecar: " + path_base + ".json");
    nlohmann::json j;
    is >> j;
    r.lo_freq = j.at("lo_freq").get<double>();
    r.bandwidth = j.at("bandwidth").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.injected_offset = j.at("injected_offset").get<double>();
    return r;
}

}  // namespace slicewave

#include "slicewave/dsp.hpp"

#include "slicewave/slicer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>

namespace slicewave {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t wrap(std::ptrdiff_t i, std::size_t n) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(n);
    std::ptrdiff_t r = i % m;
    if (r < 0) r += m;
    return static_cast<std::size_t>(r);
}

// Accumulated-dispersion phase coefficients from engineering units.
struct CdcPhase {
    double b2l, b3l;  // beta2*L and beta3*L, SI
};

CdcPhase cdc_phase(double total_ps_per_nm, double slope_ps_per_nm2, double f0) {
    const double lambda = kSpeedOfLight / f0;
    const double dl = total_ps_per_nm * 1e-3;  // s/m
    const double sl = slope_ps_per_nm2 * 1e6;  // s/m^2
    const double k = lambda * lambda / (kTwoPi * kSpeedOfLight);
    return {-dl * k, (sl + 2.0 * dl / lambda) * k * k};
}

double wrap_phase(double d) { return d - kTwoPi * std::round(d / kTwoPi); }

// Unwrap in place: each step moved into (-pi, pi].
void unwrap(std::vector<double>& phi) {
    for (std::size_t i = 1; i < phi.size(); ++i) {
        double d = phi[i] - phi[i - 1];
        d -= kTwoPi * std::round(d / kTwoPi);
        phi[i] = phi[i - 1] + d;
    }
}

void check_pilot_arrays(const EqualizedFrame& f) {
    if (f.residual_pilots_removed) throw std::invalid_argument("pilots already stripped");
    if (f.pilot_pos_x.size() != f.pilot_x.size() || f.pilot_pos_y.size() != f.pilot_y.size())
        throw std::invalid_argument("pilot reference length mismatch");
    if (f.x.size() != f.y.size()) throw std::invalid_argument("pol length mismatch");
    for (const std::size_t p : f.pilot_pos_x)
        if (p >= f.x.size()) throw std::invalid_argument("pilot position outside frame");
    for (const std::size_t p : f.pilot_pos_y)
        if (p >= f.y.size()) throw std::invalid_argument("pilot position outside frame");
}

// Per-pilot complex rotations pooled across pols, one node per distinct
// frame position, sorted.
std::vector<std::pair<std::size_t, cplx>> pilot_nodes(const EqualizedFrame& f) {
    std::vector<std::pair<std::size_t, cplx>> nodes;
    nodes.reserve(f.pilot_pos_x.size() + f.pilot_pos_y.size());
    for (std::size_t i = 0; i < f.pilot_pos_x.size(); ++i)
        nodes.emplace_back(f.pilot_pos_x[i], f.x[f.pilot_pos_x[i]] * std::conj(f.pilot_x[i]));
    for (std::size_t i = 0; i < f.pilot_pos_y.size(); ++i)
        nodes.emplace_back(f.pilot_pos_y[i], f.y[f.pilot_pos_y[i]] * std::conj(f.pilot_y[i]));
    std::sort(nodes.begin(), nodes.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::pair<std::size_t, cplx>> merged;
    for (const auto& nd : nodes) {
        if (!merged.empty() && merged.back().first == nd.first)
            merged.back().second += nd.second;
        else
            merged.push_back(nd);
    }
    return merged;
}

}  // namespace

void DspConfig::validate() const {
    if (!(symbol_rate > 0.0)) throw std::invalid_argument("symbol rate must be positive");
    if (!(rolloff >= 0.0 && rolloff <= 1.0)) throw std::invalid_argument("rolloff outside [0,1]");
    if (mimo_taps < 1 || mimo_taps % 2 == 0)
        throw std::invalid_argument("mimo_taps must be odd and positive");
    if (!(mimo_step > 0.0 && mimo_step < 1.0))
        throw std::invalid_argument("mimo_step outside (0,1)");
    if (wl_taps < 0 || (wl_taps > 0 && wl_taps % 2 == 0))
        throw std::invalid_argument("wl_taps must be odd, or zero to skip the stage");
    if (cpr_avg_pilots < 1 || cpr_avg_pilots % 2 == 0)
        throw std::invalid_argument("cpr_avg_pilots must be odd and positive");
    if (!(wl_step > 0.0 && wl_step < 1.0)) throw std::invalid_argument("wl_step outside (0,1)");
    if (wl_passes < 1) throw std::invalid_argument("wl_passes must be >= 1");
    if (sps_in != 2) throw std::invalid_argument("equalizer runs at 2 samples per symbol");
    if (pilot_x.symbols.empty() || pilot_y.symbols.empty())
        throw std::invalid_argument("pilot frames must be populated");
    if (pilot_x.symbols.size() != pilot_y.symbols.size())
        throw std::invalid_argument("pilot frames must share length");
    if (source.constellation.points.empty())
        throw std::invalid_argument("decision constellation must be populated");
    if (!std::isfinite(cdc_total_ps_per_nm) || !std::isfinite(cdc_slope_ps_per_nm2))
        throw std::invalid_argument("dispersion settings must be finite");
}

DualPolWaveform cd_compensate(const DualPolWaveform& record, double total_ps_per_nm,
                              double slope_ps_per_nm2, double f0, std::size_t max_fft) {
    record.validate();
    if (!(f0 > 0.0)) throw std::invalid_argument("reference frequency must be positive");
    if (total_ps_per_nm == 0.0 && slope_ps_per_nm2 == 0.0) return record;

    const auto [b2l, b3l] = cdc_phase(total_ps_per_nm, slope_ps_per_nm2, f0);
    const auto response = [b2l, b3l](double f) {
        const double w = kTwoPi * f;
        return std::polar(1.0, -(0.5 * b2l * w * w + (b3l / 6.0) * w * w * w));
    };

    const std::size_t n = record.size();
    if (n <= max_fft) {
        DualPolWaveform out = record;
        apply_filter(out, response);
        return out;
    }

    // Overlap-save on the cyclic record. Margin covers the compensator's
    // group-delay span both ways.
    const double fs = record.sample_rate();
    const auto tau = [&](double f) {
        const double w = kTwoPi * f;
        return b2l * w + 0.5 * b3l * w * w;
    };
    const double lo = std::min({tau(-fs / 2), tau(0.0), tau(fs / 2)});
    const double hi = std::max({tau(-fs / 2), tau(0.0), tau(fs / 2)});
    const std::size_t margin = static_cast<std::size_t>(std::ceil((hi - lo) * fs)) + 64;
    std::size_t block = std::size_t{1} << 14;
    while (block < 4 * margin) block <<= 1;
    if (block >= n) {
        DualPolWaveform out = record;
        apply_filter(out, response);
        return out;
    }

    const std::size_t valid = block - 2 * margin;
    const double dfb = fs / static_cast<double>(block);
    CVec filt(block);
    for (std::size_t k = 0; k < block; ++k) {
        const double f = (static_cast<double>(k) - static_cast<double>(block / 2)) * dfb;
        filt[k] = response(f);
    }

    DualPolWaveform out = record;
    for (int pol = 0; pol < 2; ++pol) {
        const CVec& src = pol == 0 ? record.x.samples : record.y.samples;
        CVec& dst = pol == 0 ? out.x.samples : out.y.samples;
        CVec buf(block);
        for (std::size_t base = 0; base < n; base += valid) {
            for (std::size_t k = 0; k < block; ++k)
                buf[k] = src[wrap(static_cast<std::ptrdiff_t>(base + k) -
                                      static_cast<std::ptrdiff_t>(margin),
                                  n)];
            fft_inplace(buf, false);
            // fftshifted filter against an unshifted DFT: index arithmetic
            // instead of two rotations.
            for (std::size_t k = 0; k < block; ++k) buf[k] *= filt[(k + block / 2) % block];
            fft_inplace(buf, true);
            const std::size_t take = std::min(valid, n - base);
            for (std::size_t k = 0; k < take; ++k) dst[base + k] = buf[margin + k];
        }
    }
    return out;
}

EqualizedFrame mimo_equalize(const DualPolWaveform& record, const DspConfig& cfg) {
    cfg.validate();
    record.validate();
    const std::size_t S = cfg.pilot_x.symbols.size();
    if (record.size() != 2 * S)
        throw std::invalid_argument("record must hold 2 samples per framed symbol");

    const int T = cfg.mimo_taps;
    const int c = (T - 1) / 2;
    CVec wxx(T, 0.0), wxy(T, 0.0), wyx(T, 0.0), wyy(T, 0.0);

    std::vector<std::ptrdiff_t> px_at(S, -1), py_at(S, -1);
    for (std::size_t i = 0; i < cfg.pilot_x.pilot_positions.size(); ++i)
        px_at[cfg.pilot_x.pilot_positions[i]] = static_cast<std::ptrdiff_t>(i);
    for (std::size_t i = 0; i < cfg.pilot_y.pilot_positions.size(); ++i)
        py_at[cfg.pilot_y.pilot_positions[i]] = static_cast<std::ptrdiff_t>(i);

    const CVec& rx = record.x.samples;
    const CVec& ry = record.y.samples;
    const auto& points = cfg.source.constellation.points;
    const std::size_t n2 = record.size();

    EqualizedFrame out;
    out.x.resize(S);
    out.y.resize(S);

    const auto decide = [&](cplx z) {
        std::size_t best = 0;
        double bd = std::norm(z - points[0]);
        for (std::size_t q = 1; q < points.size(); ++q) {
            const double d = std::norm(z - points[q]);
            if (d < bd) {
                bd = d;
                best = q;
            }
        }
        return points[best];
    };

    CVec ux(T), uy(T);
    double phi = 0.0;

    // One circular sweep over the record. Pilot symbols always drive LMS;
    // decision-directed errors fill the gaps only once dd is enabled.
    // Returns mean squared pilot error for the sweep.
    const auto run_sweep = [&](bool dd, bool write) {
        double mse = 0.0;
        std::size_t mse_count = 0;
        for (std::size_t n = 0; n < S; ++n) {
            for (int k = 0; k < T; ++k) {
                const std::size_t idx = wrap(static_cast<std::ptrdiff_t>(2 * n) + c - k, n2);
                ux[k] = rx[idx];
                uy[k] = ry[idx];
            }
            cplx yx = 0.0, yy = 0.0;
            for (int k = 0; k < T; ++k) {
                yx += wxx[k] * ux[k] + wxy[k] * uy[k];
                yy += wyx[k] * ux[k] + wyy[k] * uy[k];
            }

            const std::ptrdiff_t ix = px_at[n], iy = py_at[n];

            // First-order loop on a single carrier phase shared by both
            // rows: nudged halfway toward each pilot measurement, and by a
            // quarter toward the decision-derived phase between pilots once
            // decisions run. The blend (rather than hard snapping) matters
            // when the two pols carry pilots at interleaved positions, where
            // snapping would track each row's own phase and let the rows
            // settle a static angle apart. The between-pilot tracking keeps
            // LMS references co-rotating with any carrier ramp so the taps
            // stay put and the ramp survives for the offset estimator.
            cplx r = 0.0;
            if (ix >= 0) r += yx * std::conj(cfg.pilot_x.pilot_symbols[ix]);
            if (iy >= 0) r += yy * std::conj(cfg.pilot_y.pilot_symbols[iy]);
            if (std::abs(r) > 1e-12) {
                phi += 0.5 * wrap_phase(std::arg(r) - phi);
            } else if (dd) {
                const cplx rot0 = std::polar(1.0, phi);
                const cplx pd =
                    yx * std::conj(decide(yx / rot0)) + yy * std::conj(decide(yy / rot0));
                if (std::abs(pd) > 1e-12) phi += 0.25 * wrap_phase(std::arg(pd) - phi);
            }
            const cplx rot = std::polar(1.0, phi);

            bool have_x = false, have_y = false;
            cplx dx = 0.0, dy = 0.0;
            if (ix >= 0) {
                dx = cfg.pilot_x.pilot_symbols[ix] * rot;
                have_x = true;
            } else if (dd) {
                dx = decide(yx / rot) * rot;
                have_x = true;
            }
            if (iy >= 0) {
                dy = cfg.pilot_y.pilot_symbols[iy] * rot;
                have_y = true;
            } else if (dd) {
                dy = decide(yy / rot) * rot;
                have_y = true;
            }

            const cplx ex = have_x ? dx - yx : cplx{0.0, 0.0};
            const cplx ey = have_y ? dy - yy : cplx{0.0, 0.0};
            if (have_x || have_y) {
                for (int k = 0; k < T; ++k) {
                    const cplx cx = std::conj(ux[k]), cy = std::conj(uy[k]);
                    if (have_x) {
                        wxx[k] += cfg.mimo_step * ex * cx;
                        wxy[k] += cfg.mimo_step * ex * cy;
                    }
                    if (have_y) {
                        wyx[k] += cfg.mimo_step * ey * cx;
                        wyy[k] += cfg.mimo_step * ey * cy;
                    }
                }
            }
            if (ix >= 0) {
                mse += std::norm(ex);
                ++mse_count;
            }
            if (iy >= 0) {
                mse += std::norm(ey);
                ++mse_count;
            }
            if (write) {
                out.x[n] = yx;
                out.y[n] = yy;
            }
        }
        return mse_count > 0 ? mse / static_cast<double>(mse_count) : 0.0;
    };

    const auto reset_taps = [&](bool cross) {
        std::fill(wxx.begin(), wxx.end(), cplx{0.0, 0.0});
        std::fill(wxy.begin(), wxy.end(), cplx{0.0, 0.0});
        std::fill(wyx.begin(), wyx.end(), cplx{0.0, 0.0});
        std::fill(wyy.begin(), wyy.end(), cplx{0.0, 0.0});
        (cross ? wxy : wxx)[c] = 1.0;
        (cross ? wyx : wyy)[c] = 1.0;
        phi = 0.0;
    };

    // A channel that lands near a polarization swap leaves the straight start
    // correlating each row against the other tributary's pilots; the shared
    // phase then chases noise and the pilot updates cancel instead of pulling
    // the taps across. One probing sweep per wiring picks the start whose
    // pilot error is actually coherent, and the chosen start re-runs from
    // scratch so the trajectory never depends on the losing probe.
    reset_taps(false);
    const double straight_probe = run_sweep(false, false);
    reset_taps(true);
    const double cross_probe = run_sweep(false, false);
    reset_taps(cross_probe < straight_probe);

    // Pilot-only sweeps run until the pilot error plateaus, so decisions are
    // trustworthy before they start steering the taps. Under heavy crosstalk
    // a premature switch to decision-directed updates locks one row onto
    // wrong decisions and the sparse pilots cannot pull it back.
    double prev_mse = std::numeric_limits<double>::infinity();
    for (int sweeps = 0; sweeps < 16; ++sweeps) {
        const double m = run_sweep(false, false);
        if (m < 1e-12 || m > 0.9 * prev_mse) break;
        prev_mse = m;
    }
    const double mse = run_sweep(true, true);

    out.pilot_pos_x = cfg.pilot_x.pilot_positions;
    out.pilot_pos_y = cfg.pilot_y.pilot_positions;
    out.pilot_x = cfg.pilot_x.pilot_symbols;
    out.pilot_y = cfg.pilot_y.pilot_symbols;
    out.symbol_rate = cfg.symbol_rate;
    out.pilot_mse = mse;
    out.converged = out.pilot_mse <= cfg.mimo_converge_mse;
    return out;
}

EqualizedFrame freq_offset_recover(const EqualizedFrame& frame) {
    check_pilot_arrays(frame);
    if (!(frame.symbol_rate > 0.0)) throw std::invalid_argument("frame needs a symbol rate");

    const auto nodes = pilot_nodes(frame);
    if (nodes.size() < 3) throw std::invalid_argument("not enough pilots");
    std::vector<double> phi;
    phi.reserve(nodes.size());
    for (const auto& nd : nodes) phi.push_back(std::arg(nd.second));
    unwrap(phi);

    const std::size_t m = phi.size();
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        sx += static_cast<double>(nodes[i].first);
        sy += phi[i];
    }
    const double mx = sx / m, my = sy / m;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = static_cast<double>(nodes[i].first) - mx;
        num += dx * (phi[i] - my);
        den += dx * dx;
    }
    if (!(den > 0.0)) throw std::invalid_argument("degenerate pilot layout");
    const double slope = num / den;  // rad/symbol
    const double fhat = slope * frame.symbol_rate / kTwoPi;
    if (std::abs(fhat) >= frame.symbol_rate / 8.0)
        throw std::runtime_error("frequency offset beyond the pilot estimator range");

    EqualizedFrame out = frame;
    for (std::size_t n = 0; n < out.x.size(); ++n) {
        const cplx rot = std::polar(1.0, -slope * static_cast<double>(n));
        out.x[n] *= rot;
        out.y[n] *= rot;
    }
    out.estimated_freq_offset += fhat;
    return out;
}

EqualizedFrame carrier_phase_recover(const EqualizedFrame& frame, CprInterp interp,
                                     int avg_pilots) {
    check_pilot_arrays(frame);
    if (avg_pilots < 1 || avg_pilots % 2 == 0)
        throw std::invalid_argument("avg_pilots must be odd and positive");

    const auto nodes = pilot_nodes(frame);
    if (nodes.empty()) throw std::invalid_argument("not enough pilots");

    // Slips are judged on the raw per-pilot phases; averaging would smear a
    // genuine pi jump below the detector.
    bool slip = false;
    {
        double prev = std::arg(nodes.front().second);
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            const double cur = std::arg(nodes[i].second);
            double d = cur - prev;
            d -= kTwoPi * std::round(d / kTwoPi);
            if (std::abs(d) > 3.0) slip = true;
            prev = cur;
        }
    }

    // Phasor-domain moving average, window clamped at the record ends. Nodes
    // keep their raw magnitudes so a dual-pol pilot position counts twice.
    // Any residual carrier ramp is linear across the window, so a centered
    // mean stays unbiased; only the clamped edge nodes lean slightly inward.
    std::vector<double> phi;
    phi.reserve(nodes.size());
    const std::ptrdiff_t half = avg_pilots / 2;
    const std::ptrdiff_t count = static_cast<std::ptrdiff_t>(nodes.size());
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        cplx acc = 0.0;
        for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - half);
             j <= std::min(count - 1, i + half); ++j)
            acc += nodes[j].second;
        phi.push_back(std::arg(acc));
    }
    unwrap(phi);

    EqualizedFrame out = frame;
    out.phase_track.assign(frame.x.size(), 0.0);
    std::size_t seg = 0;
    for (std::size_t n = 0; n < frame.x.size(); ++n) {
        while (seg + 1 < nodes.size() && nodes[seg + 1].first <= n) ++seg;
        double est;
        if (n <= nodes.front().first) {
            est = phi.front();
        } else if (n >= nodes.back().first || interp == CprInterp::hold) {
            est = phi[seg];
        } else {
            const double t = static_cast<double>(n - nodes[seg].first) /
                             static_cast<double>(nodes[seg + 1].first - nodes[seg].first);
            est = phi[seg] + t * (phi[seg + 1] - phi[seg]);
        }
        out.phase_track[n] = est;
        const cplx rot = std::polar(1.0, -est);
        out.x[n] *= rot;
        out.y[n] *= rot;
    }
    out.cycle_slip_warning = frame.cycle_slip_warning || slip;
    return out;
}

EqualizedFrame wl_postequalize(const EqualizedFrame& frame, int wl_taps,
                               const WlTraining& train) {
    if (wl_taps < 1 || wl_taps % 2 == 0)
        throw std::invalid_argument("wl_taps must be odd and positive");
    if (!(train.step > 0.0 && train.step < 1.0))
        throw std::invalid_argument("wl step outside (0,1)");
    if (train.passes < 1) throw std::invalid_argument("wl passes must be >= 1");
    const bool test_mode = train.ref_x != nullptr;
    if (test_mode) {
        if (!train.ref_y || train.ref_x->size() != frame.x.size() ||
            train.ref_y->size() != frame.y.size())
            throw std::invalid_argument("wl references must cover the frame");
    } else {
        check_pilot_arrays(frame);
        if (frame.pilot_pos_x.empty() || frame.pilot_pos_y.empty())
            throw std::invalid_argument("not enough pilots");
    }

    const int T = wl_taps;
    const int c = (T - 1) / 2;
    EqualizedFrame out = frame;
    if (train.mse_per_pass) train.mse_per_pass->assign(train.passes, 0.0);
    if (train.taps_out) train.taps_out->clear();

    for (int pol = 0; pol < 2; ++pol) {
        const CVec& u = pol == 0 ? frame.x : frame.y;
        CVec& dst = pol == 0 ? out.x : out.y;
        const auto& pos = pol == 0 ? frame.pilot_pos_x : frame.pilot_pos_y;
        const CVec& refs = pol == 0 ? frame.pilot_x : frame.pilot_y;
        const std::size_t n = u.size();
        CVec a(T, 0.0), b(T, 0.0);
        a[c] = 1.0;

        const auto at = [&](std::size_t idx, cplx* win) {
            for (int k = 0; k < T; ++k)
                win[k] = u[wrap(static_cast<std::ptrdiff_t>(idx) + c - k, n)];
        };
        const auto eval = [&](const cplx* win) {
            cplx y = 0.0;
            for (int k = 0; k < T; ++k) y += a[k] * win[k] + b[k] * std::conj(win[k]);
            return y;
        };

        CVec win(T);
        for (int p = 0; p < train.passes; ++p) {
            double mse = 0.0;
            std::size_t count = 0;
            const std::size_t rounds = test_mode ? frame.x.size() : pos.size();
            for (std::size_t i = 0; i < rounds; ++i) {
                const std::size_t idx = test_mode ? i : pos[i];
                const cplx d = test_mode ? (pol == 0 ? (*train.ref_x)[i] : (*train.ref_y)[i])
                                         : refs[i];
                at(idx, win.data());
                const cplx e = d - eval(win.data());
                for (int k = 0; k < T; ++k) {
                    a[k] += train.step * e * std::conj(win[k]);
                    b[k] += train.step * e * win[k];
                }
                mse += std::norm(e);
                ++count;
            }
            if (train.mse_per_pass) (*train.mse_per_pass)[p] += 0.5 * mse / count;
        }

        for (std::size_t i = 0; i < n; ++i) {
            at(i, win.data());
            dst[i] = eval(win.data());
        }
        if (train.taps_out) {
            train.taps_out->push_back(a);
            train.taps_out->push_back(b);
        }
    }
    return out;
}

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(name) + ": " + e.what());
    }
}

}  // namespace

EqualizedFrame demodulate(const DualPolWaveform& record, const DspConfig& cfg) {
    if (record.size() == 0) throw std::invalid_argument("demodulate: empty record");
    cfg.validate();
    record.validate();

    const double f0 = cfg.carrier_freq > 0.0 ? cfg.carrier_freq : record.x.center_freq;
    DualPolWaveform w = stage("cd_compensate", [&] {
        return cd_compensate(record, cfg.cdc_total_ps_per_nm, cfg.cdc_slope_ps_per_nm2, f0);
    });

    stage("resample", [&] {
        const double target = 2.0 * cfg.symbol_rate;
        w.x = resample_pow2(w.x, target);
        w.y = resample_pow2(w.y, target);
        return 0;
    });

    apply_filter(w, [&](double f) {
        return cplx{rrc_amplitude(f, cfg.symbol_rate, cfg.rolloff), 0.0};
    });

    // Launch power is whatever the link left behind; the LMS step is sized
    // for near-unit samples, so level the record once. One shared gain keeps
    // any polarization imbalance visible to the butterfly.
    const double p = 0.5 * (w.x.mean_power() + w.y.mean_power());
    if (p > 0.0) {
        const double g = 1.0 / std::sqrt(p);
        for (cplx& v : w.x.samples) v *= g;
        for (cplx& v : w.y.samples) v *= g;
    }

    EqualizedFrame eq = stage("mimo_equalize", [&] { return mimo_equalize(w, cfg); });
    eq = stage("freq_offset_recover", [&] { return freq_offset_recover(eq); });
    eq = stage("carrier_phase_recover",
               [&] { return carrier_phase_recover(eq, cfg.cpr_interp, cfg.cpr_avg_pilots); });
    if (cfg.wl_taps > 0) {
        eq = stage("wl_postequalize", [&] {
            WlTraining t;
            t.step = cfg.wl_step;
            t.passes = cfg.wl_passes;
            return wl_postequalize(eq, cfg.wl_taps, t);
        });
    }

    return stage("strip_pilots", [&] {
        EqualizedFrame out = eq;
        out.x = strip_pilots(eq.x, eq.pilot_pos_x);
        out.y = strip_pilots(eq.y, eq.pilot_pos_y);
        // The carrier track stays frame-indexed; per-pol stripping would
        // leave it aligned to neither pol.
        out.pilot_pos_x.clear();
        out.pilot_pos_y.clear();
        out.pilot_x.clear();
        out.pilot_y.clear();
        out.residual_pilots_removed = true;
        return out;
    });
}

std::string equalized_csv_header() { return "index,pol,re,im,is_pilot"; }

std::string equalized_csv_row(std::size_t index, char pol, cplx v, bool is_pilot) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%zu,%c,%.10g,%.10g,%d", index, pol, v.real(), v.imag(),
                  is_pilot ? 1 : 0);
    return buf;
}

}  // namespace slicewave

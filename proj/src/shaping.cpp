#include "slicewave/shaping.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace slicewave {

double entropy_bits(const std::vector<double>& probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log2(p);
    return h;
}

ShapingDistribution mb_distribution(const Constellation& c, double nu) {
    if (nu < 0.0) throw std::invalid_argument("mb_distribution: nu must be nonnegative");
    ShapingDistribution d;
    d.constellation = c;
    d.nu = nu;
    d.probs.resize(c.size());
    double z = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        d.probs[i] = std::exp(-nu * std::norm(c.raw_point(i)));
        z += d.probs[i];
    }
    for (auto& p : d.probs) p /= z;

    double mean_energy = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i)
        mean_energy += d.probs[i] * std::norm(c.points[i]);
    const double s = 1.0 / std::sqrt(mean_energy);
    for (auto& p : d.constellation.points) p *= s;
    d.constellation.grid_scale *= s;

    d.entropy = entropy_bits(d.probs);
    return d;
}

double solve_nu(const Constellation& c, double target_entropy) {
    const double h_max = std::log2(static_cast<double>(c.size()));

    // Large-nu limit: all mass collapses onto the innermost ring.
    double r2min = std::norm(c.raw_point(0));
    for (std::size_t i = 1; i < c.size(); ++i) r2min = std::min(r2min, std::norm(c.raw_point(i)));
    std::size_t inner = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (std::norm(c.raw_point(i)) < r2min + 1e-9) ++inner;
    const double h_min = std::log2(static_cast<double>(inner));

    if (!(target_entropy > h_min && target_entropy <= h_max))
        throw std::invalid_argument("solve_nu: target entropy out of achievable range");
    if (target_entropy == h_max) return 0.0;

    double lo = 0.0, hi = 1.0;
    while (mb_distribution(c, hi).entropy > target_entropy) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6) throw std::runtime_error("solve_nu: bracket failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mb_distribution(c, mid).entropy > target_entropy)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<std::uint32_t> draw_symbols(const ShapingDistribution& d, std::size_t n,
                                        std::uint64_t seed) {
    if (n == 0) throw std::invalid_argument("draw_symbols: n must be positive");
    std::vector<double> cdf(d.probs.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < d.probs.size(); ++i) {
        acc += d.probs[i];
        cdf[i] = acc;
    }
    cdf.back() = 1.0;

    Rng rng(seed);
    std::vector<std::uint32_t> out(n);
    for (auto& idx : out) {
        const double u = rng.uniform();
        idx = static_cast<std::uint32_t>(
            std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        if (idx >= d.probs.size()) idx = static_cast<std::uint32_t>(d.probs.size() - 1);
    }
    return out;
}

CVec points_of(const ShapingDistribution& d, const std::vector<std::uint32_t>& indices) {
    CVec out(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i)
        out[i] = d.constellation.points[indices[i]];
    return out;
}

std::size_t pilot_period(double pilot_rate) {
    if (pilot_rate < 0.0 || pilot_rate >= 0.5)
        throw std::invalid_argument("pilot rate must lie in [0, 0.5)");
    if (pilot_rate == 0.0) return 0;
    return static_cast<std::size_t>(std::llround(1.0 / pilot_rate));
}

std::size_t data_length_for_frame(std::size_t frame_len, double pilot_rate) {
    const std::size_t p = pilot_period(pilot_rate);
    if (p == 0) return frame_len;
    const std::size_t n_pilots = (frame_len - 1) / p + 1;
    return frame_len - n_pilots;
}

std::vector<std::size_t> pilot_positions_for(std::size_t frame_len, double pilot_rate) {
    const std::size_t p = pilot_period(pilot_rate);
    std::vector<std::size_t> out;
    if (p == 0) return out;
    for (std::size_t i = 0; i < frame_len; i += p) out.push_back(i);
    return out;
}

CVec pilot_sequence(std::size_t count, std::uint64_t seed) {
    const Constellation qpsk = build_constellation(ConstellationKind::qpsk);
    Rng rng(Rng::derive(seed, "pilots"));
    CVec out(count);
    for (auto& s : out) s = qpsk.points[rng.next_u64() & 3];
    return out;
}

PilotFrame frame_with_pilots(const CVec& data, double pilot_rate, std::uint64_t seed) {
    PilotFrame f;
    f.pilot_rate = pilot_rate;
    const std::size_t p = pilot_period(pilot_rate);
    if (p == 0) {
        f.symbols = data;
        return f;
    }
    std::size_t di = 0;
    while (di < data.size()) {
        if (f.symbols.size() % p == 0) {
            f.pilot_positions.push_back(f.symbols.size());
            f.symbols.push_back(cplx{0.0, 0.0});  // filled below
        } else {
            f.symbols.push_back(data[di++]);
        }
    }
    f.pilot_symbols = pilot_sequence(f.pilot_positions.size(), seed);
    for (std::size_t i = 0; i < f.pilot_positions.size(); ++i)
        f.symbols[f.pilot_positions[i]] = f.pilot_symbols[i];
    return f;
}

CVec strip_pilots(const CVec& frame, const std::vector<std::size_t>& pilot_positions) {
    CVec out;
    out.reserve(frame.size() - pilot_positions.size());
    std::size_t pi = 0;
    for (std::size_t i = 0; i < frame.size(); ++i) {
        if (pi < pilot_positions.size() && pilot_positions[pi] == i) {
            ++pi;
        } else {
            out.push_back(frame[i]);
        }
    }
    return out;
}

PilotFrame delay_frame(const PilotFrame& frame, std::size_t shift) {
    const std::size_t n = frame.symbols.size();
    if (n == 0) return frame;
    shift %= n;
    PilotFrame out;
    out.pilot_rate = frame.pilot_rate;
    out.symbols.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.symbols[(i + shift) % n] = frame.symbols[i];

    std::vector<std::pair<std::size_t, cplx>> slots;
    slots.reserve(frame.pilot_positions.size());
    for (std::size_t i = 0; i < frame.pilot_positions.size(); ++i)
        slots.emplace_back((frame.pilot_positions[i] + shift) % n, frame.pilot_symbols[i]);
    std::sort(slots.begin(), slots.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [pos, sym] : slots) {
        out.pilot_positions.push_back(pos);
        out.pilot_symbols.push_back(sym);
    }
    return out;
}

}  // namespace slicewave

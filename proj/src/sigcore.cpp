#include "slicewave/sigcore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <unordered_map>

namespace slicewave {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
}

// xoshiro256++, fixed reference implementation so every platform produces
// the same stream.
std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 kept away from zero so the log is finite.
    double u1 = 0.0;
    do {
        u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
}

cplx Rng::cnormal() {
    const double re = normal();
    const double im = normal();
    return {re * std::numbers::sqrt2 / 2.0, im * std::numbers::sqrt2 / 2.0};
}

std::uint64_t Rng::derive(std::uint64_t seed, std::string_view tag) {
    // FNV-1a over the tag, folded into the seed, then whitened.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t x = seed ^ h;
    std::uint64_t out = splitmix64(x);
    out ^= splitmix64(x);
    return out;
}

double ComplexWaveform::energy() const {
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc / sample_rate;
}

double ComplexWaveform::mean_power() const {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& s : samples) acc += std::norm(s);
    return acc / static_cast<double>(samples.size());
}

void ComplexWaveform::validate() const {
    if (samples.empty()) throw std::invalid_argument("waveform: empty");
    if (!(sample_rate > 0.0)) throw std::invalid_argument("waveform: sample_rate must be positive");
}

void DualPolWaveform::validate() const {
    x.validate();
    y.validate();
    if (x.size() != y.size() || x.sample_rate != y.sample_rate || x.center_freq != y.center_freq)
        throw std::invalid_argument("dual-pol waveform: polarizations disagree on grid");
}

double Spectrum::energy() const {
    double acc = 0.0;
    for (const auto& b : bins) acc += std::norm(b);
    return acc * bin_spacing;
}

bool is_pow2(std::size_t n) {
    return n != 0 && (n & (n - 1)) == 0;
}

namespace {

// Twiddles for the forward transform, one table per size, grown on demand.
const CVec& twiddle_table(std::size_t n) {
    thread_local std::unordered_map<std::size_t, CVec> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    CVec tw(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) {
        const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        tw[k] = {std::cos(ang), std::sin(ang)};
    }
    return cache.emplace(n, std::move(tw)).first->second;
}

}  // namespace

void fft_inplace(CVec& v, bool inverse) {
    const std::size_t n = v.size();
    if (n <= 1) return;
    if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }

    const CVec& tw = twiddle_table(n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t stride = n / len;
        for (std::size_t i = 0; i < n; i += len) {
            for (std::size_t k = 0; k < len / 2; ++k) {
                const cplx w = inverse ? std::conj(tw[k * stride]) : tw[k * stride];
                const cplx u = v[i + k];
                const cplx t = v[i + k + len / 2] * w;
                v[i + k] = u + t;
                v[i + k + len / 2] = u - t;
            }
        }
    }

    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& s : v) s *= inv;
    }
}

Spectrum to_spectrum(const ComplexWaveform& w) {
    w.validate();
    const std::size_t n = w.size();
    CVec bins = w.samples;
    fft_inplace(bins, false);
    // DFT scaled to a density against frequency, then rotated so the bins run
    // from -fs/2 upward.
    const double inv_fs = 1.0 / w.sample_rate;
    for (auto& b : bins) b *= inv_fs;
    std::rotate(bins.begin(), bins.begin() + static_cast<long>(n / 2), bins.end());
    return {std::move(bins), w.sample_rate / static_cast<double>(n), w.center_freq};
}

ComplexWaveform to_waveform(const Spectrum& s) {
    const std::size_t n = s.size();
    if (!is_pow2(n)) throw std::invalid_argument("to_waveform: length must be a power of two");
    const double fs = s.bin_spacing * static_cast<double>(n);
    CVec v = s.bins;
    std::rotate(v.begin(), v.begin() + static_cast<long>(n / 2), v.end());
    fft_inplace(v, true);
    for (auto& x : v) x *= fs;
    return {std::move(v), fs, s.center_freq};
}

ComplexWaveform mix(const ComplexWaveform& w, double freq_shift_hz) {
    ComplexWaveform out = w;
    const double step = 2.0 * std::numbers::pi * freq_shift_hz / w.sample_rate;
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double ph = step * static_cast<double>(n);
        out.samples[n] *= cplx{std::cos(ph), std::sin(ph)};
    }
    return out;
}

void apply_filter(ComplexWaveform& w, const std::function<cplx(double)>& response) {
    const std::size_t n = w.size();
    fft_inplace(w.samples, false);
    const double df = w.sample_rate / static_cast<double>(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = (k < n / 2 ? static_cast<double>(k)
                                    : static_cast<double>(k) - static_cast<double>(n)) * df;
        w.samples[k] *= response(f);
    }
    fft_inplace(w.samples, true);
}

void apply_filter(DualPolWaveform& w, const std::function<cplx(double)>& response) {
    apply_filter(w.x, response);
    apply_filter(w.y, response);
}

ComplexWaveform circular_delay(const ComplexWaveform& w, long samples) {
    const long n = static_cast<long>(w.size());
    long d = samples % n;
    if (d < 0) d += n;
    ComplexWaveform out = w;
    std::rotate(out.samples.begin(), out.samples.end() - d, out.samples.end());
    return out;
}

ComplexWaveform resample_pow2(const ComplexWaveform& w, double new_rate) {
    if (new_rate == w.sample_rate) return w;
    Spectrum s = to_spectrum(w);
    const double ratio = new_rate / w.sample_rate;
    const std::size_t n = s.size();
    const auto m = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    if (m == 0 || !is_pow2(m) || std::abs(s.bin_spacing * static_cast<double>(m) - new_rate) > 1e-3)
        throw std::invalid_argument("resample: rate ratio must be a power of two");
    // Spectral density is invariant under resampling on the same record
    // duration, so this is a pad or crop around the center.
    CVec bins(m, cplx{0.0, 0.0});
    if (m > n) {
        std::copy(s.bins.begin(), s.bins.end(), bins.begin() + static_cast<long>((m - n) / 2));
    } else {
        std::copy(s.bins.begin() + static_cast<long>((n - m) / 2),
                  s.bins.begin() + static_cast<long>((n - m) / 2 + m), bins.begin());
    }
    return to_waveform({std::move(bins), s.bin_spacing, s.center_freq});
}

DualPolWaveform resample_pow2(const DualPolWaveform& w, double new_rate) {
    return {resample_pow2(w.x, new_rate), resample_pow2(w.y, new_rate)};
}

double evm_db(const CVec& a, const CVec& b) {
    if (a.size() != b.size() || a.empty())
        throw std::invalid_argument("evm: size mismatch");
    cplx dot{0.0, 0.0};
    double bb = 0.0, aa = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * std::conj(b[i]);
        bb += std::norm(b[i]);
        aa += std::norm(a[i]);
    }
    if (aa == 0.0) throw std::invalid_argument("evm: reference is all zero");
    const cplx c = bb > 0.0 ? dot / bb : cplx{0.0, 0.0};
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err += std::norm(a[i] - c * b[i]);
    const double rel = err / aa;
    if (rel < 1e-30) return -300.0;
    return 10.0 * std::log10(rel);
}

ConstellationKind constellation_kind_from_string(const std::string& s) {
    if (s == "qpsk") return ConstellationKind::qpsk;
    if (s == "16qam") return ConstellationKind::qam16;
    if (s == "36qam") return ConstellationKind::qam36;
    throw std::invalid_argument("unknown constellation: " + s);
}

std::string to_string(ConstellationKind k) {
    switch (k) {
        case ConstellationKind::qpsk: return "qpsk";
        case ConstellationKind::qam16: return "16qam";
        case ConstellationKind::qam36: return "36qam";
    }
    throw std::logic_error("bad constellation kind");
}

Constellation build_constellation(ConstellationKind kind) {
    std::vector<int> levels;
    std::vector<std::uint32_t> axis_code;
    int axis_bits = 0;
    switch (kind) {
        case ConstellationKind::qpsk:
            levels = {-1, 1};
            axis_code = {0b0, 0b1};
            axis_bits = 1;
            break;
        case ConstellationKind::qam16:
            levels = {-3, -1, 1, 3};
            axis_code = {0b00, 0b01, 0b11, 0b10};
            axis_bits = 2;
            break;
        case ConstellationKind::qam36:
            // The six inner levels of the eight-level Gray ruler, so
            // neighboring amplitudes still differ in one bit.
            levels = {-5, -3, -1, 1, 3, 5};
            axis_code = {0b001, 0b011, 0b010, 0b110, 0b111, 0b101};
            axis_bits = 3;
            break;
    }

    Constellation c;
    c.kind = kind;
    c.bits_per_symbol = 2 * axis_bits;
    double raw_energy = 0.0;
    for (int li : levels) raw_energy += 2.0 * li * li;  // both axes contribute
    raw_energy /= static_cast<double>(levels.size());
    c.grid_scale = 1.0 / std::sqrt(raw_energy);

    for (std::size_t i = 0; i < levels.size(); ++i) {
        for (std::size_t q = 0; q < levels.size(); ++q) {
            c.points.emplace_back(levels[i] * c.grid_scale, levels[q] * c.grid_scale);
            c.labels.push_back((axis_code[i] << axis_bits) | axis_code[q]);
        }
    }
    return c;
}

namespace {

constexpr char kMagic[4] = {'S', 'L', 'W', 'V'};
constexpr std::uint32_t kDumpVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void write_waveform(const ComplexWaveform& w, const std::string& path) {
    w.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    os.write(kMagic, 4);
    put(os, kDumpVersion);
    put(os, static_cast<std::uint64_t>(w.size()));
    put(os, w.sample_rate);
    put(os, w.center_freq);
    for (const auto& s : w.samples) {
        put(os, s.real());
        put(os, s.imag());
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

ComplexWaveform read_waveform(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("bad waveform magic: " + path);
    const auto version = get<std::uint32_t>(is);
    if (version != kDumpVersion) throw std::runtime_error("unsupported waveform version");
    const auto length = get<std::uint64_t>(is);
    ComplexWaveform w;
    w.sample_rate = get<double>(is);
    w.center_freq = get<double>(is);
    w.samples.resize(length);
    for (auto& s : w.samples) {
        const double re = get<double>(is);
        const double im = get<double>(is);
        s = {re, im};
    }
    if (!is) throw std::runtime_error("truncated waveform: " + path);
    return w;
}

}  // namespace slicewave

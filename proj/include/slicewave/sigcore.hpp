#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace slicewave {

using cplx = std::complex<double>;
using CVec = std::vector<cplx>;

constexpr double kSpeedOfLight = 299792458.0;    // m/s
constexpr double kPlanck = 6.62607015e-34;       // J*s

// Deterministic, platform-stable random stream. All randomness in the
// simulator flows through this type so that (config, seed) fixes every bit
// of the output. std::distributions are avoided on purpose: their mapping
// from raw engine output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                 // [0, 1)
    double normal();                  // N(0, 1)
    cplx cnormal();                   // circular CN(0, 1)

    // Derive an independent sub-stream seed from a master seed and a tag.
    static std::uint64_t derive(std::uint64_t seed, std::string_view tag);

private:
    std::uint64_t state_[4];
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Uniformly sampled complex baseband field. samples are in sqrt(W) units,
// center_freq is the absolute optical frequency of baseband DC.
struct ComplexWaveform {
    CVec samples;
    double sample_rate = 0.0;     // Hz
    double center_freq = 0.0;     // Hz

    std::size_t size() const { return samples.size(); }
    double duration() const { return samples.empty() ? 0.0 : size() / sample_rate; }
    double energy() const;        // sum |x|^2 / sample_rate
    double mean_power() const;    // sum |x|^2 / N
    void validate() const;        // throws on empty / non-positive rate
};

struct DualPolWaveform {
    ComplexWaveform x, y;

    std::size_t size() const { return x.size(); }
    double sample_rate() const { return x.sample_rate; }
    double total_power() const { return x.mean_power() + y.mean_power(); }
    void validate() const;        // both pols share grid and center
};

// Complex amplitudes on a uniform frequency grid, increasing frequency,
// bin i at (i - N/2) * bin_spacing relative to center_freq.
struct Spectrum {
    CVec bins;
    double bin_spacing = 0.0;     // Hz
    double center_freq = 0.0;     // Hz

    std::size_t size() const { return bins.size(); }
    double energy() const;        // sum |b|^2 * bin_spacing
    double freq(std::size_t i) const {
        return (static_cast<double>(i) - static_cast<double>(size()) / 2.0) * bin_spacing;
    }
};

enum class ConstellationKind { qpsk, qam16, qam36 };

ConstellationKind constellation_kind_from_string(const std::string& s);
std::string to_string(ConstellationKind k);

// QAM point set with per-point bit labels. points carry unit mean energy
// under the uniform prior; grid_scale maps the integer grid back:
// points[i] = raw_grid[i] * grid_scale.
struct Constellation {
    std::vector<cplx> points;
    std::vector<std::uint32_t> labels;
    int bits_per_symbol = 0;      // m
    ConstellationKind kind = ConstellationKind::qpsk;
    double grid_scale = 1.0;

    std::size_t size() const { return points.size(); }
    cplx raw_point(std::size_t i) const { return points[i] / grid_scale; }
};

Constellation build_constellation(ConstellationKind kind);

// In-place radix-2 FFT. Length must be a power of two.
void fft_inplace(CVec& v, bool inverse);
bool is_pow2(std::size_t n);

Spectrum to_spectrum(const ComplexWaveform& w);
ComplexWaveform to_waveform(const Spectrum& s);

// Multiply by exp(+j 2 pi f t): moves the spectrum up by f.
ComplexWaveform mix(const ComplexWaveform& w, double freq_shift_hz);

// Apply a frequency-domain transfer function H(f), f relative to baseband DC
// spanning [-fs/2, fs/2). Cyclic (whole-record FFT).
void apply_filter(ComplexWaveform& w, const std::function<cplx(double)>& response);
void apply_filter(DualPolWaveform& w, const std::function<cplx(double)>& response);

// Circular shift by an integer number of samples (positive = delay).
ComplexWaveform circular_delay(const ComplexWaveform& w, long samples);

// Zero-pad or truncate the spectrum to change the sample rate by a power-of-two
// ratio. Exact for band-limited content.
ComplexWaveform resample_pow2(const ComplexWaveform& w, double new_rate);
DualPolWaveform resample_pow2(const DualPolWaveform& w, double new_rate);

// Relative L2 error in dB between two waveforms after the optimal complex
// scalar alignment of b onto a. Returns -inf cap of -300 dB for exact match.
double evm_db(const CVec& a, const CVec& b);

// Binary dump: 32-byte header (magic "SLWV", version u32, length u64,
// sample_rate f64, center_freq f64) followed by interleaved little-endian
// float64 (re, im) pairs.
void write_waveform(const ComplexWaveform& w, const std::string& path);
ComplexWaveform read_waveform(const std::string& path);

}  // namespace slicewave

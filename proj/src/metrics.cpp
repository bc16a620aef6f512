#include "slicewave/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace slicewave {

void FecFamily::validate() const {
    if (rates.empty() || rates.size() != thresholds.size())
        throw std::invalid_argument("fec family: rates and thresholds must pair up");
    for (std::size_t i = 0; i < rates.size(); ++i) {
        if (rates[i] < 0.5 - 1e-12 || rates[i] > 0.9 + 1e-12)
            throw std::invalid_argument("fec family: rate outside [0.5, 0.9]");
        if (i > 0 && (rates[i] <= rates[i - 1] || thresholds[i] <= thresholds[i - 1]))
            throw std::invalid_argument("fec family: rates and thresholds must increase");
    }
}

FecFamily default_fec_family() {
    std::vector<double> rates;
    for (int i = 0; i <= 8; ++i) rates.push_back(0.50 + 0.05 * i);
    rates.push_back(0.74);
    rates.push_back(0.85);
    std::sort(rates.begin(), rates.end());
    rates.erase(std::unique(rates.begin(), rates.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                rates.end());
    FecFamily f;
    f.rates = rates;
    for (double r : rates) f.thresholds.push_back(r + 0.02);
    f.validate();
    return f;
}

std::optional<double> select_fec_rate(double ngmi_val, const FecFamily& family) {
    family.validate();
    std::optional<double> best;
    for (std::size_t i = 0; i < family.rates.size(); ++i)
        if (family.thresholds[i] <= ngmi_val) best = family.rates[i];
    return best;
}

namespace {

// Accumulate signal and residual error power for one polarization. rx is
// scaled so its projection onto tx has unit coefficient; unlike the
// error-minimizing scalar this leaves the noise estimate unbiased.
void snr_accumulate(const CVec& rx, const CVec& tx, double& sig, double& err) {
    if (rx.size() != tx.size() || rx.empty())
        throw std::invalid_argument("estimate_snr: sequences must align");
    cplx dot{0.0, 0.0};
    double tt = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        dot += rx[i] * std::conj(tx[i]);
        tt += std::norm(tx[i]);
    }
    if (std::abs(dot) == 0.0) {
        for (std::size_t i = 0; i < rx.size(); ++i) {
            sig += std::norm(tx[i]);
            err += std::norm(tx[i]);
        }
        return;
    }
    const cplx a = dot / tt;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sig += std::norm(tx[i]);
        err += std::norm(rx[i] / a - tx[i]);
    }
}

double snr_from_powers(double sig, double err) {
    if (sig <= 0.0) throw std::invalid_argument("estimate_snr: reference has no power");
    if (err <= 0.0) return kSnrCapDb;
    return std::min(kSnrCapDb, 10.0 * std::log10(sig / err));
}

}  // namespace

double estimate_snr_db(const CVec& rx, const CVec& tx) {
    double sig = 0.0, err = 0.0;
    snr_accumulate(rx, tx, sig, err);
    return snr_from_powers(sig, err);
}

double estimate_snr_db(const CVec& rx_x, const CVec& rx_y, const CVec& tx_x, const CVec& tx_y) {
    double sig = 0.0, err = 0.0;
    snr_accumulate(rx_x, tx_x, sig, err);
    snr_accumulate(rx_y, tx_y, sig, err);
    return snr_from_powers(sig, err);
}

DualPolWaveform load_noise_to_osnr(const DualPolWaveform& field, double target_osnr_db,
                                   std::uint64_t seed) {
    if (std::isinf(target_osnr_db)) return field;
    field.validate();
    const double p_sig = field.total_power();
    const double osnr = std::pow(10.0, target_osnr_db / 10.0);
    // OSNR counts noise from both polarizations inside the reference band.
    const double psd_per_pol = p_sig / (2.0 * kOsnrRefBandwidth * osnr);
    const double sigma = std::sqrt(psd_per_pol * field.sample_rate());

    DualPolWaveform out = field;
    Rng rx(Rng::derive(seed, "osnr.x"));
    Rng ry(Rng::derive(seed, "osnr.y"));
    for (auto& s : out.x.samples) s += sigma * rx.cnormal();
    for (auto& s : out.y.samples) s += sigma * ry.cnormal();
    return out;
}

namespace {

// log2(1 + 2^0 * e^a), safe across the whole double range
double softplus2(double a) {
    if (a > 40.0) return a / std::numbers::ln2;
    return std::log1p(std::exp(a)) / std::numbers::ln2;
}

double logsumexp(const std::vector<double>& t, const std::vector<std::size_t>& idx) {
    double mx = -std::numeric_limits<double>::infinity();
    for (auto i : idx) mx = std::max(mx, t[i]);
    if (std::isinf(mx)) return mx;
    double acc = 0.0;
    for (auto i : idx) acc += std::exp(t[i] - mx);
    return mx + std::log(acc);
}

}  // namespace

double gmi(const CVec& rx, const std::vector<std::uint32_t>& tx_indices,
           const ShapingDistribution& d) {
    if (rx.size() != tx_indices.size())
        throw std::invalid_argument("gmi: sequences must align");
    if (rx.size() < 10000) throw std::invalid_argument("gmi: too few symbols for a stable estimate");

    const Constellation& c = d.constellation;
    const int m = c.bits_per_symbol;

    // Align rx onto the constellation (projection normalization, so the
    // fitted noise variance stays unbiased) and fit the noise variance.
    cplx dot{0.0, 0.0};
    double tt = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        dot += rx[i] * std::conj(c.points[tx_indices[i]]);
        tt += std::norm(c.points[tx_indices[i]]);
    }
    const cplx g = std::abs(dot) > 0.0 ? tt / dot : cplx{1.0, 0.0};
    double sigma2 = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i)
        sigma2 += std::norm(g * rx[i] - c.points[tx_indices[i]]);
    sigma2 /= static_cast<double>(rx.size());
    if (sigma2 < 1e-12) sigma2 = 1e-12;

    // Index sets per bit value, fixed per constellation.
    std::vector<std::vector<std::size_t>> set0(m), set1(m);
    std::vector<double> logp(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        logp[i] = d.probs[i] > 0.0 ? std::log(d.probs[i]) : -1e300;
        for (int b = 0; b < m; ++b)
            ((c.labels[i] >> b) & 1u ? set1[b] : set0[b]).push_back(i);
    }

    double loss = 0.0;  // sum of per-bit equivocation terms
    std::vector<double> t(c.size());
    for (std::size_t k = 0; k < rx.size(); ++k) {
        const cplx y = g * rx[k];
        for (std::size_t i = 0; i < c.size(); ++i)
            t[i] = logp[i] - std::norm(y - c.points[i]) / sigma2;
        const std::uint32_t label = c.labels[tx_indices[k]];
        for (int b = 0; b < m; ++b) {
            const double llr = logsumexp(t, set0[b]) - logsumexp(t, set1[b]);
            const int bit = (label >> b) & 1u;
            loss += softplus2(bit ? llr : -llr);
        }
    }
    loss /= static_cast<double>(rx.size());
    return std::clamp(d.entropy - loss, 0.0, d.entropy);
}

double ngmi(double gmi_val, double entropy, int cardinality_bits) {
    const double m = cardinality_bits;
    if (gmi_val < -1e-9 || gmi_val > entropy + 1e-9 || entropy > m + 1e-9)
        throw std::invalid_argument("ngmi: need 0 <= gmi <= H <= m");
    return 1.0 - (entropy - gmi_val) / m;
}

double net_bit_rate(double symbol_rate, double pilot_rate, double entropy, double code_rate,
                    int cardinality_bits) {
    if (code_rate < 0.0 || code_rate > 1.0)
        throw std::invalid_argument("net_bit_rate: code rate outside [0, 1]");
    if (entropy > cardinality_bits + 1e-9)
        throw std::invalid_argument("net_bit_rate: entropy exceeds cardinality");
    const double info = entropy - (1.0 - code_rate) * cardinality_bits;
    if (info < 0.0) return 0.0;
    return 2.0 * symbol_rate * (1.0 - pilot_rate) * info;
}

double air(double symbol_rate, double pilot_rate, double entropy, double ngmi_val,
           int cardinality_bits) {
    return net_bit_rate(symbol_rate, pilot_rate, entropy, ngmi_val, cardinality_bits);
}

double spectral_efficiency(double net_rate_bps, double channel_spacing_hz) {
    if (!(channel_spacing_hz > 0.0))
        throw std::invalid_argument("spectral_efficiency: spacing must be positive");
    return net_rate_bps / channel_spacing_hz;
}

std::string rate_report_csv_header() {
    return "distance_km,snr_db,gmi,ngmi,air_tbps,rc,net_tbps,se_bps_hz";
}

std::string rate_report_csv_row(const RateReport& r) {
    char buf[256];
    char rc[32] = "";
    if (r.selected_rc) std::snprintf(rc, sizeof(rc), "%.10g", *r.selected_rc);
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g,%.10g,%.10g,%s,%.10g,%.10g",
                  r.distance_km, r.snr_db, r.gmi, r.ngmi, r.air_bps / 1e12, rc,
                  r.net_bps / 1e12, r.se_bps_hz);
    return buf;
}

}  // namespace slicewave

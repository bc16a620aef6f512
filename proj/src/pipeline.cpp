#include "slicewave/pipeline.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace slicewave {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kVersion = "0.1.0";

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

// Everything upstream of the transmitter impairments, reusable across
// calibration candidates.
struct TxParts {
    ShapingDistribution source;
    SliceSpec spec;
    PilotFrame frame_x, frame_y;
    std::vector<std::uint32_t> indices_x, indices_y;
    CVec ref_x, ref_y;
    std::array<ComplexWaveform, 2> slices;
};

// The y tributary is the x frame circularly delayed, so its r-th stripped
// data symbol originated at x position (q - shift) mod n.
std::vector<std::uint32_t> delayed_indices(const std::vector<std::uint32_t>& ix,
                                           const PilotFrame& fx, const PilotFrame& fy,
                                           std::size_t shift) {
    const std::size_t n = fx.symbols.size();
    std::vector<char> pilot_x(n, 0), pilot_y(n, 0);
    for (std::size_t p : fx.pilot_positions) pilot_x[p] = 1;
    for (std::size_t p : fy.pilot_positions) pilot_y[p] = 1;
    std::vector<std::size_t> rank(n, 0);
    std::size_t r = 0;
    for (std::size_t p = 0; p < n; ++p)
        if (!pilot_x[p]) rank[p] = r++;
    std::vector<std::uint32_t> iy;
    iy.reserve(ix.size());
    shift %= n;
    for (std::size_t q = 0; q < n; ++q) {
        if (pilot_y[q]) continue;
        iy.push_back(ix[rank[(q + n - shift) % n]]);
    }
    return iy;
}

TxParts tx_parts(const ExperimentConfig& cfg) {
    TxParts p;
    Constellation base = build_constellation(cfg.modulation);
    const double nu = cfg.shaped ? solve_nu(base, cfg.entropy) : 0.0;
    p.source = mb_distribution(base, nu);

    const std::size_t n_data = data_length_for_frame(cfg.frame_symbols, cfg.pilot_rate);
    p.indices_x = draw_symbols(p.source, n_data, Rng::derive(cfg.seed, "data"));
    CVec data = points_of(p.source, p.indices_x);
    p.frame_x = frame_with_pilots(data, cfg.pilot_rate, Rng::derive(cfg.seed, "pilt"));

    const std::size_t shift =
        static_cast<std::size_t>(std::llround(cfg.pdme_delay * cfg.symbol_rate));
    p.frame_y = delay_frame(p.frame_x, shift);
    p.indices_y = delayed_indices(p.indices_x, p.frame_x, p.frame_y, shift);
    p.ref_x = data;
    p.ref_y = strip_pilots(p.frame_y.symbols, p.frame_y.pilot_positions);

    const double carrier = cfg.carrier_freq();
    p.spec.tone_freqs = {carrier - cfg.slice_fsr / 2.0, carrier + cfg.slice_fsr / 2.0};
    p.spec.overlap_width = cfg.overlap_width;
    p.spec.rolloff = cfg.rolloff;
    p.spec.symbol_rate = cfg.symbol_rate;

    ComplexWaveform w = shape_pulse(p.frame_x, p.spec, cfg.shaping_sps);
    p.slices = slice(w, p.spec);
    return p;
}

TxSignal finish_tx(const ExperimentConfig& cfg, const TxParts& p, const TxImpairment& imp) {
    ComplexWaveform s1 =
        apply_tx_impairments(p.slices[0], imp, cfg.symbol_rate, Rng::derive(cfg.seed, "txs1"));
    ComplexWaveform s2 =
        apply_tx_impairments(p.slices[1], imp, cfg.symbol_rate, Rng::derive(cfg.seed, "txs2"));

    // Deliberate slice-2 carrier error for the lock to pull out.
    const cplx rot = std::polar(1.0, cfg.sce_initial_phase);
    for (cplx& v : s2.samples) v *= rot;

    SceState st;
    st.loop_gain = cfg.sce_gain;
    SceResult locked = sce_lock(s1, s2, p.spec, st);

    ComplexWaveform one = recombine(locked.s1, locked.s2, p.spec);

    TxSignal tx;
    tx.source = p.source;
    tx.spec = p.spec;
    tx.frame_x = p.frame_x;
    tx.frame_y = p.frame_y;
    tx.indices_x = p.indices_x;
    tx.indices_y = p.indices_y;
    tx.ref_x = p.ref_x;
    tx.ref_y = p.ref_y;
    tx.field = pdme(one, PdmeConfig{cfg.pdme_delay});
    tx.sce = locked.state;
    return tx;
}

// CUT plus dummies, scaled so the launch already sits at the loop's
// operating power instead of waiting a round trip for the first EDFA.
DualPolWaveform launch_comb(const ExperimentConfig& cfg, const DualPolWaveform& field) {
    DualPolWaveform comb = add_dummies(field, cfg.channel.wdm, Rng::derive(cfg.seed, "dums"));
    const double target = dbm_to_watt(cfg.channel.edfa.output_power_dbm);
    const double scale = std::sqrt(target / comb.total_power());
    for (cplx& v : comb.x.samples) v *= scale;
    for (cplx& v : comb.y.samples) v *= scale;
    return comb;
}

unsigned pool_size(std::size_t n_points) {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("SLICEWAVE_THREADS")) {
        char* end = nullptr;
        unsigned long v = std::strtoul(env, &end, 10);
        if (end == env || *end != '\0' || v == 0)
            throw std::runtime_error("SLICEWAVE_THREADS must be a positive integer");
        n = static_cast<unsigned>(v);
    }
    return static_cast<unsigned>(std::min<std::size_t>(n, n_points));
}

std::string osnr_label(double osnr_db) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "osnr_%g", osnr_db);
    return buf;
}

std::string loops_label(int n) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "loops_%02d", n);
    return buf;
}

}  // namespace

TxSignal build_tx(const ExperimentConfig& cfg) {
    return finish_tx(cfg, tx_parts(cfg), cfg.tx);
}

PointResult measure_point(const ExperimentConfig& cfg, const TxSignal& tx,
                          const DualPolWaveform& field, double distance_km, double osnr_db,
                          std::uint64_t point_seed, const std::string& label) {
    // The record is cyclic, so a shared LO error only stays seamless when it
    // lands on a whole number of cycles over the record.
    const double df = field.x.sample_rate / static_cast<double>(field.x.size());
    const double off = std::round(cfg.lo_offset / df) * df;
    const std::array<double, 2> lo{tx.spec.tone_freqs[0] + off, tx.spec.tone_freqs[1] + off};

    auto recs = rx_slice_detect(field, lo, cfg.rx_bandwidth, tx.spec,
                                Rng::derive(point_seed, "rxdt"), cfg.rx_snr_db);
    const double phase = estimate_phase_offset(recs, tx.spec);
    ComplexWaveform sx = stitch(recs[0][0], recs[1][0], phase, tx.spec);
    ComplexWaveform sy = stitch(recs[0][1], recs[1][1], phase, tx.spec);

    PointResult pr;
    pr.label = label;
    // Waveform-level fidelity is only defined against the launched field
    // when nothing shifted the spectrum or added noise.
    if (cfg.scenario == Scenario::stitch_test && off == 0.0 && std::isinf(cfg.rx_snr_db) &&
        distance_km == 0.0) {
        pr.raw_stitch_evm_db = std::max(evm_db(sx.samples, tx.field.x.samples),
                                        evm_db(sy.samples, tx.field.y.samples));
    }

    DspConfig d;
    d.cdc_total_ps_per_nm = cfg.channel.fiber.dispersion_ps_nm_km * distance_km;
    d.cdc_slope_ps_per_nm2 = cfg.channel.fiber.slope_ps_nm2_km * distance_km;
    d.carrier_freq = kSpeedOfLight / (cfg.channel.fiber.reference_wavelength_nm * 1e-9);
    d.symbol_rate = cfg.symbol_rate;
    d.rolloff = cfg.rolloff;
    d.mimo_taps = cfg.mimo_taps;
    d.mimo_step = cfg.mimo_step;
    d.pilot_x = tx.frame_x;
    d.pilot_y = tx.frame_y;
    d.source = tx.source;
    d.cpr_interp = cfg.cpr_interp;
    d.cpr_avg_pilots = cfg.cpr_avg_pilots;
    d.wl_taps = cfg.wl_taps;
    d.wl_passes = cfg.wl_passes;
    EqualizedFrame eq = demodulate(DualPolWaveform{sx, sy}, d);

    const int m = eq.x.size() ? tx.source.constellation.bits_per_symbol : 0;
    const double H = tx.source.entropy;
    RateReport r;
    r.distance_km = distance_km;
    r.osnr_db = osnr_db;
    r.snr_db = estimate_snr_db(eq.x, eq.y, tx.ref_x, tx.ref_y);
    r.gmi = 0.5 * (gmi(eq.x, tx.indices_x, tx.source) + gmi(eq.y, tx.indices_y, tx.source));
    r.ngmi = ngmi(r.gmi, H, m);
    r.air_bps = air(cfg.formula_symbol_rate, cfg.pilot_rate, H, r.ngmi, m);
    r.selected_rc = select_fec_rate(r.ngmi, cfg.fec);
    r.net_bps = r.selected_rc
                    ? net_bit_rate(cfg.formula_symbol_rate, cfg.pilot_rate, H, *r.selected_rc, m)
                    : 0.0;
    r.se_bps_hz = spectral_efficiency(r.net_bps, cfg.formula_channel_spacing);
    r.symbol_rate = cfg.formula_symbol_rate;
    r.pilot_rate = cfg.pilot_rate;
    r.entropy = H;
    r.cardinality_bits = m;
    pr.report = r;
    pr.converged = eq.converged;

    const std::size_t cap = 4096;
    pr.scatter_x.assign(eq.x.begin(),
                        eq.x.begin() + static_cast<std::ptrdiff_t>(std::min(cap, eq.x.size())));
    pr.scatter_y.assign(eq.y.begin(),
                        eq.y.begin() + static_cast<std::ptrdiff_t>(std::min(cap, eq.y.size())));
    return pr;
}

RunResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    if (cfg.scenario == Scenario::calibrate_tx)
        throw std::runtime_error("calibrate_tx runs through calibrate_tx_floor");

    const TxSignal tx = build_tx(cfg);
    RunResult out;
    out.scenario = cfg.scenario;
    out.hash = config_hash(cfg);

    DualPolWaveform comb;
    std::size_t n_points = 1;
    if (cfg.scenario == Scenario::b2b_sweep) n_points = cfg.osnr_list.size();
    if (cfg.scenario == Scenario::transmission_sweep) {
        n_points = cfg.loop_counts.size();
        comb = launch_comb(cfg, tx.field);
    }

    auto compute = [&](std::size_t i) -> PointResult {
        const std::uint64_t pseed = Rng::derive(cfg.seed, "pt" + std::to_string(i));
        switch (cfg.scenario) {
            case Scenario::b2b_sweep: {
                const double osnr = cfg.osnr_list[i];
                DualPolWaveform noisy =
                    load_noise_to_osnr(tx.field, osnr, Rng::derive(pseed, "ldnz"));
                return measure_point(cfg, tx, noisy, 0.0, osnr, pseed, osnr_label(osnr));
            }
            case Scenario::transmission_sweep: {
                const int n = cfg.loop_counts[i];
                LoopRunResult res = run_loop(comb, cfg.channel, n);
                const double dist = n * cfg.channel.loop_length_km();
                const double osnr = n > 0 ? res.telemetry.back().osnr_db
                                          : std::numeric_limits<double>::infinity();
                PointResult pr =
                    measure_point(cfg, tx, res.field, dist, osnr, pseed, loops_label(n));
                pr.telemetry = std::move(res.telemetry);
                return pr;
            }
            default:
                return measure_point(cfg, tx, tx.field, 0.0,
                                     std::numeric_limits<double>::infinity(), pseed, "stitch");
        }
    };

    out.points.resize(n_points);
    const unsigned n_threads = pool_size(n_points);
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_points; ++i) out.points[i] = compute(i);
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr first_error;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_points) return;
            try {
                out.points[i] = compute(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

CalibrationResult calibrate_tx_floor(const ExperimentConfig& cfg) {
    cfg.validate();
    const TxParts parts = tx_parts(cfg);
    int evaluations = 0;

    // Same seeds per candidate: the measured curve is then a smooth monotone
    // function of the floor and bisection cannot chatter on noise redraws.
    auto measure = [&](double floor_db) {
        TxImpairment imp = cfg.tx;
        imp.floor_snr_db = floor_db;
        TxSignal t = finish_tx(cfg, parts, imp);
        ++evaluations;
        return measure_point(cfg, t, t.field, 0.0, std::numeric_limits<double>::infinity(),
                             Rng::derive(cfg.seed, "calb"), "calib")
            .report.snr_db;
    };

    const double target = cfg.calibrate_target_db;
    const double ceiling = measure(std::numeric_limits<double>::infinity());
    if (ceiling < target + 0.1) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "chain ceiling %.2f dB cannot reach the %.2f dB target", ceiling, target);
        throw std::runtime_error(buf);
    }

    double lo = target;  // floor at target measures below target, chain losses on top
    double hi = target + 4.0;
    while (measure(hi) < target) {
        hi += 4.0;
        if (hi > target + 24.0)
            throw std::runtime_error("calibration bracket failed to close");
    }

    double mid = hi, got = 0.0;
    for (int it = 0; it < 24; ++it) {
        mid = 0.5 * (lo + hi);
        got = measure(mid);
        if (std::abs(got - target) < 0.02) break;
        (got < target ? lo : hi) = mid;
    }

    CalibrationResult res;
    res.fitted_floor_snr_db = mid;
    res.measured_snr_db = got;
    res.ceiling_snr_db = ceiling;
    res.evaluations = evaluations;
    return res;
}

namespace {

json number_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

json point_json(const PointResult& p) {
    const RateReport& r = p.report;
    json j;
    j["label"] = p.label;
    j["distance_km"] = r.distance_km;
    j["osnr_db"] = number_or_null(r.osnr_db);
    j["snr_db"] = r.snr_db;
    j["gmi"] = r.gmi;
    j["ngmi"] = r.ngmi;
    j["air_bps"] = r.air_bps;
    j["selected_rc"] = r.selected_rc ? json(*r.selected_rc) : json(nullptr);
    j["net_bps"] = r.net_bps;
    j["se_bps_hz"] = r.se_bps_hz;
    j["symbol_rate"] = r.symbol_rate;
    j["pilot_rate"] = r.pilot_rate;
    j["entropy"] = r.entropy;
    j["cardinality_bits"] = r.cardinality_bits;
    j["converged"] = p.converged;
    if (std::isfinite(p.raw_stitch_evm_db)) j["raw_stitch_evm_db"] = p.raw_stitch_evm_db;
    return j;
}

void write_manifest(const ExperimentConfig& cfg, const std::vector<std::string>& labels,
                    const fs::path& dir) {
    json m;
    m["version"] = kVersion;
    m["scenario"] = to_string(cfg.scenario);
    m["seed"] = cfg.seed;
    m["config_hash"] = config_hash(cfg);
    m["points"] = labels;
    m["config"] = canonical_config(cfg);
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace

void write_run_outputs(const RunResult& r, const ExperimentConfig& cfg,
                       const std::string& out_dir) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);

    std::ostringstream csv;
    csv << rate_report_csv_header() << ",config_hash\n";
    for (const PointResult& p : r.points)
        csv << rate_report_csv_row(p.report) << "," << r.hash << "\n";
    write_text(dir / "results.csv", csv.str());

    json root;
    root["version"] = kVersion;
    root["scenario"] = to_string(r.scenario);
    root["seed"] = cfg.seed;
    root["config_hash"] = r.hash;
    root["sim_symbol_rate"] = cfg.symbol_rate;
    root["points"] = json::array();
    for (const PointResult& p : r.points) root["points"].push_back(point_json(p));
    write_text(dir / "results.json", root.dump(2) + "\n");

    std::vector<std::string> labels;
    for (const PointResult& p : r.points) {
        labels.push_back(p.label);
        std::ostringstream cs;
        cs << equalized_csv_header() << "\n";
        for (std::size_t i = 0; i < p.scatter_x.size(); ++i)
            cs << equalized_csv_row(i, 'x', p.scatter_x[i], false) << "\n";
        for (std::size_t i = 0; i < p.scatter_y.size(); ++i)
            cs << equalized_csv_row(i, 'y', p.scatter_y[i], false) << "\n";
        write_text(dir / ("constellation_" + p.label + ".csv"), cs.str());
    }

    const PointResult* longest = nullptr;
    for (const PointResult& p : r.points)
        if (!p.telemetry.empty() && (!longest || p.telemetry.size() > longest->telemetry.size()))
            longest = &p;
    if (longest) {
        std::ostringstream ts;
        ts << loop_telemetry_csv_header() << "\n";
        for (const LoopTelemetry& t : longest->telemetry)
            ts << loop_telemetry_csv_row(t) << "\n";
        write_text(dir / "telemetry.csv", ts.str());
    }

    write_manifest(cfg, labels, dir);
}

void write_calibration_outputs(const CalibrationResult& r, const ExperimentConfig& cfg,
                               const std::string& out_dir) {
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    json j;
    j["version"] = kVersion;
    j["target_floor_db"] = cfg.calibrate_target_db;
    j["fitted_floor_snr_db"] = r.fitted_floor_snr_db;
    j["measured_snr_db"] = r.measured_snr_db;
    j["ceiling_snr_db"] = r.ceiling_snr_db;
    j["evaluations"] = r.evaluations;
    j["config_hash"] = config_hash(cfg);
    write_text(dir / "calibration.json", j.dump(2) + "\n");
    write_manifest(cfg, {"calib"}, dir);
}

void write_report(const std::string& results_dir, const std::string& out_dir) {
    const fs::path in(results_dir);
    const fs::path src = in / "results.json";
    if (!fs::exists(src))
        throw std::runtime_error("no results found in " + results_dir + " (missing results.json)");
    std::ifstream f(src, std::ios::binary);
    json root;
    f >> root;

    const fs::path dir(out_dir);
    fs::create_directories(dir);

    const double sim_rate = root.at("sim_symbol_rate").get<double>();
    const double osnr_to_snr = 10.0 * std::log10(sim_rate / kOsnrRefBandwidth);

    std::ostringstream rate;
    rate << "distance_km,air_tbps,net_tbps,se_bps_hz\n";
    std::ostringstream snr;
    snr << "osnr_db,snr_db,ideal_snr_db,implementation_gap_db\n";
    std::ostringstream summary;
    summary << "scenario " << root.at("scenario").get<std::string>() << "  seed "
            << root.at("seed").get<std::uint64_t>() << "  config "
            << root.at("config_hash").get<std::string>() << "\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %11s %8s %7s %6s %7s %5s %9s %9s %7s\n", "label",
                  "distance_km", "osnr_db", "snr_db", "gmi", "ngmi", "rc", "air_tbps",
                  "net_tbps", "se");
    summary << line;

    for (const json& p : root.at("points")) {
        const double dist = p.at("distance_km").get<double>();
        const double air_bps = p.at("air_bps").get<double>();
        const double net_bps = p.at("net_bps").get<double>();
        const double se = p.at("se_bps_hz").get<double>();
        const double snr_db = p.at("snr_db").get<double>();
        char row[128];
        std::snprintf(row, sizeof(row), "%.10g,%.10g,%.10g,%.10g\n", dist, air_bps / 1e12,
                      net_bps / 1e12, se);
        rate << row;
        if (!p.at("osnr_db").is_null()) {
            const double osnr = p.at("osnr_db").get<double>();
            const double ideal = osnr - osnr_to_snr;
            std::snprintf(row, sizeof(row), "%.10g,%.10g,%.10g,%.10g\n", osnr, snr_db, ideal,
                          ideal - snr_db);
            snr << row;
        }
        char osnr_txt[32] = "-";
        if (!p.at("osnr_db").is_null())
            std::snprintf(osnr_txt, sizeof(osnr_txt), "%.2f", p.at("osnr_db").get<double>());
        char rc_txt[32] = "-";
        if (!p.at("selected_rc").is_null())
            std::snprintf(rc_txt, sizeof(rc_txt), "%.2f", p.at("selected_rc").get<double>());
        std::snprintf(line, sizeof(line), "%-12s %11.1f %8s %7.2f %6.3f %7.4f %5s %9.4f %9.4f %7.3f\n",
                      p.at("label").get<std::string>().c_str(), dist, osnr_txt, snr_db,
                      p.at("gmi").get<double>(), p.at("ngmi").get<double>(), rc_txt,
                      air_bps / 1e12, net_bps / 1e12, se);
        summary << line;
        if (p.contains("raw_stitch_evm_db")) {
            std::snprintf(line, sizeof(line), "raw stitch EVM %.2f dB\n",
                          p.at("raw_stitch_evm_db").get<double>());
            summary << line;
        }

        // Plot-ready scatter: the first rows of the stored constellation dump.
        const fs::path cpath = in / ("constellation_" + p.at("label").get<std::string>() + ".csv");
        if (fs::exists(cpath)) {
            std::ifstream cf(cpath, std::ios::binary);
            std::ostringstream sc;
            std::string l;
            for (std::size_t i = 0; i < 2001 && std::getline(cf, l); ++i) sc << l << "\n";
            write_text(dir / ("scatter_" + p.at("label").get<std::string>() + ".csv"), sc.str());
        }
    }

    write_text(dir / "rate_vs_distance.csv", rate.str());
    write_text(dir / "snr_vs_osnr.csv", snr.str());
    write_text(dir / "summary.txt", summary.str());
}

namespace {

bool report_check(std::ostream& out, const char* name, bool ok) {
    out << "selftest " << name << ": " << (ok ? "PASS" : "FAIL") << "\n";
    return ok;
}

}  // namespace

bool selftest(std::ostream& out) {
    bool all = true;

    {
        Rng a(7), b(7);
        bool ok = true;
        for (int i = 0; i < 8; ++i) ok = ok && a.next_u64() == b.next_u64();
        all &= report_check(out, "rng determinism", ok);
    }

    {
        Rng rng(11);
        ComplexWaveform w;
        w.sample_rate = 50e9;
        w.center_freq = 193.4e12;
        w.samples.resize(4096);
        for (cplx& v : w.samples) v = rng.cnormal();
        ComplexWaveform back = to_waveform(to_spectrum(w));
        all &= report_check(out, "fft round trip", evm_db(back.samples, w.samples) < -200.0);
    }

    {
        Constellation c = build_constellation(ConstellationKind::qam16);
        double nu = solve_nu(c, 3.8);
        double h = mb_distribution(c, nu).entropy;
        all &= report_check(out, "entropy solver", std::abs(h - 3.8) < 1e-9);
    }

    {
        ShapingDistribution d = mb_distribution(build_constellation(ConstellationKind::qam16), 0.3);
        CVec data = points_of(d, draw_symbols(d, 1000, 5));
        PilotFrame fr = frame_with_pilots(data, 0.0205, 9);
        CVec got = strip_pilots(fr.symbols, fr.pilot_positions);
        all &= report_check(out, "pilot framing round trip", got == data);
    }

    {
        ShapingDistribution d = mb_distribution(build_constellation(ConstellationKind::qam16), 0.0);
        CVec data = points_of(d, draw_symbols(d, 2048, 21));
        SliceSpec spec;
        spec.tone_freqs = {-3e9, 3e9};
        spec.overlap_width = 1e9 / 3.0;
        spec.symbol_rate = 12.5e9;
        ComplexWaveform w = shape_pulse(data, spec, 4);
        auto sl = slice(w, spec);
        const cplx rot = std::polar(1.0, 1.0);
        for (cplx& v : sl[1].samples) v *= rot;
        SceResult lock = sce_lock(sl[0], sl[1], spec, SceState{});
        ComplexWaveform back = recombine(lock.s1, lock.s2, spec);
        bool ok = lock.state.locked && evm_db(back.samples, w.samples) < -35.0;
        all &= report_check(out, "slice lock and stitch", ok);
    }

    {
        Rng rng(3);
        ComplexWaveform w;
        w.sample_rate = 50e9;
        w.center_freq = kSpeedOfLight / 1550e-9;
        w.samples.resize(8192);
        for (cplx& v : w.samples) v = rng.cnormal();
        DualPolWaveform f{w, w};
        DualPolWaveform spread = cd_compensate(f, 12402.5, 363.0, w.center_freq);
        DualPolWaveform back = cd_compensate(spread, -12402.5, -363.0, w.center_freq);
        all &= report_check(out, "dispersion round trip",
                            evm_db(back.x.samples, w.samples) < -100.0);
    }

    {
        ExperimentConfig c = config_from_toml(parse_toml("scenario = \"stitch_test\"\n"));
        ExperimentConfig re = config_from_toml(parse_toml(canonical_config(c)));
        all &= report_check(out, "config hash round trip", config_hash(re) == config_hash(c));
    }

    return all;
}

}  // namespace slicewave

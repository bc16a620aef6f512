#include "slicewave/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace slicewave {

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& msg) {
    throw std::runtime_error("config parse error, line " + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Cut an unquoted # comment. Quotes toggle on double quotes only.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
        if (c == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

bool valid_key(const std::string& k) {
    if (k.empty() || k.front() == '.' || k.back() == '.') return false;
    for (char c : k) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
            return false;
    }
    return k.find("..") == std::string::npos;
}

std::string parse_quoted(const std::string& text, std::size_t line) {
    if (text.size() < 2 || text.back() != '"') fail_line(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        char c = text[i];
        if (c == '\\') {
            if (i + 2 >= text.size()) fail_line(line, "dangling escape");
            char e = text[++i];
            if (e == '"') out += '"';
            else if (e == '\\') out += '\\';
            else if (e == 'n') out += '\n';
            else if (e == 't') out += '\t';
            else fail_line(line, "unknown escape in string");
        } else if (c == '"') {
            fail_line(line, "stray quote inside string");
        } else {
            out += c;
        }
    }
    return out;
}

double parse_number(const std::string& text, std::size_t line) {
    const char* begin = text.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0') fail_line(line, "bad number '" + text + "'");
    return v;
}

// Split a [ ... ] body at top-level commas; elements keep their own quoting.
std::vector<std::string> split_array(const std::string& body, std::size_t line) {
    std::vector<std::string> parts;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < body.size(); ++i) {
        char c = body[i];
        if (c == '"' && (i == 0 || body[i - 1] != '\\')) quoted = !quoted;
        if (c == ',' && !quoted) {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) fail_line(line, "unterminated string in array");
    std::string last = trim(cur);
    if (!last.empty()) parts.push_back(last);
    for (const auto& p : parts)
        if (p.empty()) fail_line(line, "empty array element");
    return parts;
}

TomlValue parse_value(const std::string& text, std::size_t line) {
    if (text.empty()) fail_line(line, "missing value");
    if (text.front() == '"') return parse_quoted(text, line);
    if (text == "true") return true;
    if (text == "false") return false;
    if (text.front() == '[') {
        if (text.back() != ']') fail_line(line, "unterminated array");
        auto parts = split_array(text.substr(1, text.size() - 2), line);
        if (parts.empty()) return std::vector<double>{};
        if (parts.front().front() == '"') {
            std::vector<std::string> out;
            for (const auto& p : parts) {
                if (p.front() != '"') fail_line(line, "mixed array element types");
                out.push_back(parse_quoted(p, line));
            }
            return out;
        }
        std::vector<double> out;
        for (const auto& p : parts) out.push_back(parse_number(p, line));
        return out;
    }
    return parse_number(text, line);
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

const char* type_name(const TomlValue& v) {
    switch (v.index()) {
        case 0: return "boolean";
        case 1: return "number";
        case 2: return "string";
        case 3: return "number array";
        default: return "string array";
    }
}

[[noreturn]] void type_error(const std::string& key, const TomlValue& v, const char* want) {
    throw std::runtime_error("config key '" + key + "' holds a " + type_name(v) +
                             ", expected " + want);
}

}  // namespace

bool TomlTable::has(const std::string& key) const { return values.count(key) != 0; }

double TomlTable::number(const std::string& key, double fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    if (const double* d = std::get_if<double>(&it->second)) return *d;
    type_error(key, it->second, "number");
}

std::int64_t TomlTable::integer(const std::string& key, std::int64_t fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const double* d = std::get_if<double>(&it->second);
    if (!d) type_error(key, it->second, "integer");
    double r = std::round(*d);
    if (std::abs(*d - r) > 1e-9 || std::abs(r) > 9.007199254740992e15)
        throw std::runtime_error("config key '" + key + "' is not an integer");
    return static_cast<std::int64_t>(r);
}

bool TomlTable::boolean(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    if (const bool* b = std::get_if<bool>(&it->second)) return *b;
    type_error(key, it->second, "boolean");
}

std::string TomlTable::str(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    if (const std::string* s = std::get_if<std::string>(&it->second)) return *s;
    type_error(key, it->second, "string");
}

std::vector<double> TomlTable::numbers(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) return {};
    if (const auto* a = std::get_if<std::vector<double>>(&it->second)) return *a;
    if (const double* d = std::get_if<double>(&it->second)) return {*d};
    type_error(key, it->second, "number array");
}

TomlTable parse_toml(const std::string& text) {
    TomlTable table;
    std::string prefix;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail_line(line_no, "unterminated section header");
            std::string name = trim(line.substr(1, line.size() - 2));
            if (!valid_key(name)) fail_line(line_no, "bad section name '" + name + "'");
            prefix = name + ".";
            continue;
        }
        std::size_t eq = std::string::npos;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '=' && !quoted) {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos) fail_line(line_no, "expected key = value");
        std::string key = trim(line.substr(0, eq));
        if (!valid_key(key)) fail_line(line_no, "bad key '" + key + "'");
        std::string full = prefix + key;
        if (table.values.count(full)) fail_line(line_no, "duplicate key '" + full + "'");
        table.values[full] = parse_value(trim(line.substr(eq + 1)), line_no);
    }
    return table;
}

TomlTable parse_toml_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_toml(buf.str());
}

void apply_override(TomlTable& t, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::runtime_error("override '" + assignment + "' needs key=value");
    std::string key = trim(assignment.substr(0, eq));
    if (!valid_key(key)) throw std::runtime_error("override has bad key '" + key + "'");
    t.values[key] = parse_value(trim(assignment.substr(eq + 1)), 0);
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "b2b_sweep") return Scenario::b2b_sweep;
    if (s == "transmission_sweep") return Scenario::transmission_sweep;
    if (s == "stitch_test") return Scenario::stitch_test;
    if (s == "calibrate_tx") return Scenario::calibrate_tx;
    throw std::runtime_error("unknown scenario '" + s + "'");
}

std::string to_string(Scenario s) {
    switch (s) {
        case Scenario::b2b_sweep: return "b2b_sweep";
        case Scenario::transmission_sweep: return "transmission_sweep";
        case Scenario::stitch_test: return "stitch_test";
        default: return "calibrate_tx";
    }
}

ExperimentConfig default_config() {
    ExperimentConfig c;
    // Desk-scale comb: 1/24 of the full grid keeps the same guard ratio and
    // three channels fit a 50 GHz simulation band.
    c.channel.wdm.spacing_hz = 350e9 / 24.0;
    c.channel.wdm.n_dummies = 2;
    c.channel.wdm.dummy_bandwidth_hz = 13.125e9;
    c.fec = default_fec_family();
    return c;
}

void ExperimentConfig::validate() const {
    if (modulation == ConstellationKind::qpsk && shaped)
        throw std::runtime_error("qpsk runs uniform, shaped makes no sense");
    Constellation ref = build_constellation(modulation);
    double m = static_cast<double>(ref.bits_per_symbol);
    if (shaped && (entropy <= 0.0 || entropy > m))
        throw std::runtime_error("entropy must lie in (0, bits_per_symbol]");
    if (symbol_rate <= 0.0) throw std::runtime_error("symbol_rate must be positive");
    if (pilot_rate < 0.0 || pilot_rate >= 0.5)
        throw std::runtime_error("pilot_rate must lie in [0, 0.5)");
    if (frame_symbols < 1024 || !is_pow2(frame_symbols))
        throw std::runtime_error("frame_symbols must be a power of two, at least 1024");
    if (shaping_sps < 2 || !is_pow2(static_cast<std::size_t>(shaping_sps)))
        throw std::runtime_error("shaping_sps must be a power of two, at least 2");
    if (rolloff <= 0.0 || rolloff > 1.0) throw std::runtime_error("rolloff must lie in (0, 1]");
    if (formula_symbol_rate <= 0.0 || formula_channel_spacing <= 0.0)
        throw std::runtime_error("formula rates must be positive");
    if (slice_fsr <= 0.0 || overlap_width <= 0.0 || overlap_width >= slice_fsr)
        throw std::runtime_error("need 0 < overlap < fsr");
    if (rx_bandwidth <= slice_fsr / 2.0 + overlap_width / 2.0)
        throw std::runtime_error("rx_bandwidth must cover fsr/2 + overlap/2");
    if (pdme_delay < 0.0) throw std::runtime_error("pdme_delay must be nonnegative");
    double delay_syms = pdme_delay * symbol_rate;
    if (std::abs(delay_syms - std::round(delay_syms)) > 1e-6)
        throw std::runtime_error("pdme_delay must span a whole number of symbols");
    if (sce_gain <= 0.0 || sce_gain > 1.0) throw std::runtime_error("sce_gain must lie in (0, 1]");
    if (rx_snr_db <= 0.0) throw std::runtime_error("rx_snr_db must be positive");
    if (mimo_taps < 3 || mimo_taps % 2 == 0)
        throw std::runtime_error("mimo_taps must be odd, at least 3");
    if (mimo_step <= 0.0 || mimo_step >= 1.0)
        throw std::runtime_error("mimo_step must lie in (0, 1)");
    if (wl_taps < 0 || (wl_taps > 0 && wl_taps % 2 == 0))
        throw std::runtime_error("wl_taps must be zero to skip, else odd");
    if (wl_passes < 1) throw std::runtime_error("wl_passes must be positive");
    if (cpr_avg_pilots < 1 || cpr_avg_pilots % 2 == 0)
        throw std::runtime_error("cpr_avg_pilots must be odd and positive");
    fec.validate();
    channel.validate();
    switch (scenario) {
        case Scenario::b2b_sweep:
            if (osnr_list.empty()) throw std::runtime_error("b2b_sweep needs sweep.osnr_db");
            for (double v : osnr_list)
                if (v <= 0.0) throw std::runtime_error("osnr_db entries must be positive");
            break;
        case Scenario::transmission_sweep:
            if (loop_counts.empty())
                throw std::runtime_error("transmission_sweep needs sweep.loop_counts");
            for (int n : loop_counts)
                if (n < 0) throw std::runtime_error("loop_counts entries must be nonnegative");
            break;
        default: break;
    }
    if (calibrate_target_db < 5.0 || calibrate_target_db > 40.0)
        throw std::runtime_error("calibrate target must lie in [5, 40] dB");
}

ExperimentConfig config_from_toml(const TomlTable& t) {
    static const std::set<std::string> known = {
        "scenario", "seed",
        "modulation.kind", "modulation.entropy",
        "signal.symbol_rate", "signal.pilot_rate", "signal.frame_symbols",
        "signal.shaping_sps", "signal.rolloff",
        "rates.symbol_rate", "rates.channel_spacing",
        "slices.fsr", "slices.overlap",
        "tx.bandwidth_3db", "tx.iq_gain_imbalance_db", "tx.iq_phase_imbalance_deg",
        "tx.iq_skew", "tx.floor_snr_db", "tx.pdme_delay", "tx.sce_gain",
        "tx.sce_initial_phase",
        "rx.bandwidth", "rx.lo_offset", "rx.snr_db",
        "channel.spans_per_loop", "channel.ssfm_step_km", "channel.scrambler_seed",
        "channel.gff", "channel.comb_equalization",
        "channel.fiber.length_km", "channel.fiber.alpha_db_per_km",
        "channel.fiber.dispersion_ps_nm_km", "channel.fiber.slope_ps_nm2_km",
        "channel.fiber.effective_area_um2", "channel.fiber.n2_m2_per_w",
        "channel.fiber.reference_wavelength_nm",
        "channel.edfa.output_power_dbm", "channel.edfa.noise_figure_db",
        "channel.wdm.spacing", "channel.wdm.n_dummies", "channel.wdm.dummy_bandwidth",
        "channel.wdm.cut_index",
        "dsp.mimo_taps", "dsp.mimo_step", "dsp.wl_taps", "dsp.wl_passes", "dsp.cpr_interp",
        "dsp.cpr_avg_pilots",
        "fec.rates", "fec.thresholds", "fec.threshold_offset",
        "sweep.osnr_db", "sweep.loop_counts",
        "calibrate.target_floor_db",
    };
    for (const auto& [k, v] : t.values) {
        (void)v;
        if (!known.count(k)) throw std::runtime_error("unrecognized config key '" + k + "'");
    }

    ExperimentConfig c = default_config();
    c.scenario = scenario_from_string(t.str("scenario", to_string(c.scenario)));
    c.seed = static_cast<std::uint64_t>(t.integer("seed", static_cast<std::int64_t>(c.seed)));

    std::string kind = t.str("modulation.kind", "pcs16qam");
    if (kind == "pcs16qam") {
        c.modulation = ConstellationKind::qam16;
        c.shaped = true;
    } else if (kind == "pcs36qam") {
        c.modulation = ConstellationKind::qam36;
        c.shaped = true;
    } else if (kind == "qpsk") {
        c.modulation = ConstellationKind::qpsk;
        c.shaped = false;
    } else {
        throw std::runtime_error("unknown modulation.kind '" + kind + "'");
    }
    c.entropy = t.number("modulation.entropy", c.entropy);

    c.symbol_rate = t.number("signal.symbol_rate", c.symbol_rate);
    c.pilot_rate = t.number("signal.pilot_rate", c.pilot_rate);
    c.frame_symbols = static_cast<std::size_t>(
        t.integer("signal.frame_symbols", static_cast<std::int64_t>(c.frame_symbols)));
    c.shaping_sps = static_cast<int>(t.integer("signal.shaping_sps", c.shaping_sps));
    c.rolloff = t.number("signal.rolloff", c.rolloff);

    c.formula_symbol_rate = t.number("rates.symbol_rate", c.formula_symbol_rate);
    c.formula_channel_spacing = t.number("rates.channel_spacing", c.formula_channel_spacing);

    c.slice_fsr = t.number("slices.fsr", c.slice_fsr);
    c.overlap_width = t.number("slices.overlap", c.overlap_width);

    // Nonpositive bandwidth or floor turns the impairment off.
    double bw = t.number("tx.bandwidth_3db", 0.0);
    c.tx.bandwidth_3db = bw > 0.0 ? bw : std::numeric_limits<double>::infinity();
    c.tx.iq_gain_imbalance_db = t.number("tx.iq_gain_imbalance_db", c.tx.iq_gain_imbalance_db);
    c.tx.iq_phase_imbalance_deg =
        t.number("tx.iq_phase_imbalance_deg", c.tx.iq_phase_imbalance_deg);
    c.tx.iq_skew = t.number("tx.iq_skew", c.tx.iq_skew);
    double floor_db = t.number("tx.floor_snr_db", 0.0);
    c.tx.floor_snr_db = floor_db > 0.0 ? floor_db : std::numeric_limits<double>::infinity();
    c.pdme_delay = t.number("tx.pdme_delay", c.pdme_delay);
    c.sce_gain = t.number("tx.sce_gain", c.sce_gain);
    c.sce_initial_phase = t.number("tx.sce_initial_phase", c.sce_initial_phase);

    c.rx_bandwidth = t.number("rx.bandwidth", c.rx_bandwidth);
    c.lo_offset = t.number("rx.lo_offset", c.lo_offset);
    double rx_snr = t.number("rx.snr_db", 0.0);
    c.rx_snr_db = rx_snr > 0.0 ? rx_snr : std::numeric_limits<double>::infinity();

    c.channel.spans_per_loop =
        static_cast<int>(t.integer("channel.spans_per_loop", c.channel.spans_per_loop));
    c.channel.ssfm_step_km = t.number("channel.ssfm_step_km", c.channel.ssfm_step_km);
    c.channel.scrambler_seed = static_cast<std::uint64_t>(
        t.integer("channel.scrambler_seed", static_cast<std::int64_t>(c.channel.scrambler_seed)));
    c.channel.gff = t.boolean("channel.gff", c.channel.gff);
    c.channel.comb_equalization =
        t.boolean("channel.comb_equalization", c.channel.comb_equalization);

    FiberParams& f = c.channel.fiber;
    f.length_km = t.number("channel.fiber.length_km", f.length_km);
    f.alpha_db_per_km = t.number("channel.fiber.alpha_db_per_km", f.alpha_db_per_km);
    f.dispersion_ps_nm_km = t.number("channel.fiber.dispersion_ps_nm_km", f.dispersion_ps_nm_km);
    f.slope_ps_nm2_km = t.number("channel.fiber.slope_ps_nm2_km", f.slope_ps_nm2_km);
    f.effective_area_um2 = t.number("channel.fiber.effective_area_um2", f.effective_area_um2);
    f.n2_m2_per_w = t.number("channel.fiber.n2_m2_per_w", f.n2_m2_per_w);
    f.reference_wavelength_nm =
        t.number("channel.fiber.reference_wavelength_nm", f.reference_wavelength_nm);

    c.channel.edfa.output_power_dbm =
        t.number("channel.edfa.output_power_dbm", c.channel.edfa.output_power_dbm);
    c.channel.edfa.noise_figure_db =
        t.number("channel.edfa.noise_figure_db", c.channel.edfa.noise_figure_db);

    WdmConfig& w = c.channel.wdm;
    w.spacing_hz = t.number("channel.wdm.spacing", w.spacing_hz);
    w.n_dummies = static_cast<int>(t.integer("channel.wdm.n_dummies", w.n_dummies));
    w.dummy_bandwidth_hz = t.number("channel.wdm.dummy_bandwidth", w.dummy_bandwidth_hz);
    w.cut_index = static_cast<int>(t.integer("channel.wdm.cut_index", w.cut_index));

    c.mimo_taps = static_cast<int>(t.integer("dsp.mimo_taps", c.mimo_taps));
    c.mimo_step = t.number("dsp.mimo_step", c.mimo_step);
    c.wl_taps = static_cast<int>(t.integer("dsp.wl_taps", c.wl_taps));
    c.wl_passes = static_cast<int>(t.integer("dsp.wl_passes", c.wl_passes));
    std::string interp = t.str("dsp.cpr_interp", "linear");
    if (interp == "linear") c.cpr_interp = CprInterp::linear;
    else if (interp == "hold") c.cpr_interp = CprInterp::hold;
    else throw std::runtime_error("dsp.cpr_interp must be linear or hold");
    c.cpr_avg_pilots = static_cast<int>(t.integer("dsp.cpr_avg_pilots", c.cpr_avg_pilots));

    std::vector<double> rates = t.numbers("fec.rates");
    if (!rates.empty()) c.fec.rates = rates;
    std::vector<double> thresholds = t.numbers("fec.thresholds");
    if (!thresholds.empty()) {
        c.fec.thresholds = thresholds;
    } else if (!rates.empty() || t.has("fec.threshold_offset")) {
        double off = t.number("fec.threshold_offset", 0.02);
        c.fec.thresholds.clear();
        for (double r : c.fec.rates) c.fec.thresholds.push_back(r + off);
    }

    c.osnr_list = t.numbers("sweep.osnr_db");
    std::vector<double> loops = t.numbers("sweep.loop_counts");
    c.loop_counts.clear();
    for (double v : loops) {
        double r = std::round(v);
        if (std::abs(v - r) > 1e-9) throw std::runtime_error("loop_counts must be integers");
        c.loop_counts.push_back(static_cast<int>(r));
    }
    c.calibrate_target_db = t.number("calibrate.target_floor_db", c.calibrate_target_db);

    c.validate();
    return c;
}

namespace {

std::string render_kind(const ExperimentConfig& c) {
    switch (c.modulation) {
        case ConstellationKind::qam16: return "pcs16qam";
        case ConstellationKind::qam36: return "pcs36qam";
        default: return "qpsk";
    }
}

void put(std::ostringstream& out, const char* key, double v) {
    out << key << " = " << format_double(v) << "\n";
}

void put(std::ostringstream& out, const char* key, const std::vector<double>& v) {
    out << key << " = [";
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << format_double(v[i]);
    out << "]\n";
}

}  // namespace

std::string canonical_config(const ExperimentConfig& c) {
    std::ostringstream out;
    out << "scenario = \"" << to_string(c.scenario) << "\"\n";
    out << "seed = " << c.seed << "\n";
    out << "modulation.kind = \"" << render_kind(c) << "\"\n";
    put(out, "modulation.entropy", c.entropy);
    put(out, "signal.symbol_rate", c.symbol_rate);
    put(out, "signal.pilot_rate", c.pilot_rate);
    out << "signal.frame_symbols = " << c.frame_symbols << "\n";
    out << "signal.shaping_sps = " << c.shaping_sps << "\n";
    put(out, "signal.rolloff", c.rolloff);
    put(out, "rates.symbol_rate", c.formula_symbol_rate);
    put(out, "rates.channel_spacing", c.formula_channel_spacing);
    put(out, "slices.fsr", c.slice_fsr);
    put(out, "slices.overlap", c.overlap_width);
    put(out, "tx.bandwidth_3db", c.tx.bandwidth_3db);
    put(out, "tx.iq_gain_imbalance_db", c.tx.iq_gain_imbalance_db);
    put(out, "tx.iq_phase_imbalance_deg", c.tx.iq_phase_imbalance_deg);
    put(out, "tx.iq_skew", c.tx.iq_skew);
    put(out, "tx.floor_snr_db", c.tx.floor_snr_db);
    put(out, "tx.pdme_delay", c.pdme_delay);
    put(out, "tx.sce_gain", c.sce_gain);
    put(out, "tx.sce_initial_phase", c.sce_initial_phase);
    put(out, "rx.bandwidth", c.rx_bandwidth);
    put(out, "rx.lo_offset", c.lo_offset);
    put(out, "rx.snr_db", c.rx_snr_db);
    out << "channel.spans_per_loop = " << c.channel.spans_per_loop << "\n";
    put(out, "channel.ssfm_step_km", c.channel.ssfm_step_km);
    out << "channel.scrambler_seed = " << c.channel.scrambler_seed << "\n";
    out << "channel.gff = " << (c.channel.gff ? "true" : "false") << "\n";
    out << "channel.comb_equalization = " << (c.channel.comb_equalization ? "true" : "false")
        << "\n";
    put(out, "channel.fiber.length_km", c.channel.fiber.length_km);
    put(out, "channel.fiber.alpha_db_per_km", c.channel.fiber.alpha_db_per_km);
    put(out, "channel.fiber.dispersion_ps_nm_km", c.channel.fiber.dispersion_ps_nm_km);
    put(out, "channel.fiber.slope_ps_nm2_km", c.channel.fiber.slope_ps_nm2_km);
    put(out, "channel.fiber.effective_area_um2", c.channel.fiber.effective_area_um2);
    put(out, "channel.fiber.n2_m2_per_w", c.channel.fiber.n2_m2_per_w);
    put(out, "channel.fiber.reference_wavelength_nm", c.channel.fiber.reference_wavelength_nm);
    put(out, "channel.edfa.output_power_dbm", c.channel.edfa.output_power_dbm);
    put(out, "channel.edfa.noise_figure_db", c.channel.edfa.noise_figure_db);
    put(out, "channel.wdm.spacing", c.channel.wdm.spacing_hz);
    out << "channel.wdm.n_dummies = " << c.channel.wdm.n_dummies << "\n";
    put(out, "channel.wdm.dummy_bandwidth", c.channel.wdm.dummy_bandwidth_hz);
    out << "channel.wdm.cut_index = " << c.channel.wdm.cut_index << "\n";
    out << "dsp.mimo_taps = " << c.mimo_taps << "\n";
    put(out, "dsp.mimo_step", c.mimo_step);
    out << "dsp.wl_taps = " << c.wl_taps << "\n";
    out << "dsp.wl_passes = " << c.wl_passes << "\n";
    out << "dsp.cpr_avg_pilots = " << c.cpr_avg_pilots << "\n";
    out << "dsp.cpr_interp = \"" << (c.cpr_interp == CprInterp::linear ? "linear" : "hold")
        << "\"\n";
    put(out, "fec.rates", c.fec.rates);
    put(out, "fec.thresholds", c.fec.thresholds);
    put(out, "sweep.osnr_db", c.osnr_list);
    std::vector<double> loops(c.loop_counts.begin(), c.loop_counts.end());
    put(out, "sweep.loop_counts", loops);
    put(out, "calibrate.target_floor_db", c.calibrate_target_db);
    return out.str();
}

std::string config_hash(const ExperimentConfig& c) {
    std::string s = canonical_config(c);
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace slicewave

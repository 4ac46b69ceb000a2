#include "iodinesim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "iodinesim/freq.hpp"

namespace iodinesim {

namespace {

constexpr double kPi = 3.141592653589793;

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::size_t levenshtein(std::string_view a, std::string_view b, std::size_t cap) {
    if (a.size() > b.size()) std::swap(a, b);
    if (b.size() - a.size() > cap) return cap + 1;
    std::vector<std::size_t> row(a.size() + 1);
    for (std::size_t i = 0; i <= a.size(); ++i) row[i] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
        std::size_t prev = row[0];
        row[0] = j;
        for (std::size_t i = 1; i <= a.size(); ++i) {
            const std::size_t cur = row[i];
            const std::size_t sub = prev + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[i] = std::min({row[i - 1] + 1, row[i] + 1, sub});
            prev = cur;
        }
    }
    return row[a.size()];
}

std::string_view after_dot(std::string_view key) {
    const auto pos = key.rfind('.');
    return pos == std::string_view::npos ? key : key.substr(pos + 1);
}

void check_string_value(const std::string& key, const std::string& value) {
    if (key == "line.frequency_khz") {
        OpticalFrequency::from_khz_string(value);  // throws on bad input
    } else if (key == "probe_mod.path") {
        if (value != "eom" && value != "aom") {
            throw ConfigError("config: " + key + " must be 'eom' or 'aom', got '" + value + "'");
        }
    } else if (key == "servo.source") {
        if (value != "fm_quadrature" && value != "modulation_transfer" && value != "double_demod") {
            throw ConfigError("config: " + key +
                              " must be one of fm_quadrature, modulation_transfer, double_demod; got '" +
                              value + "'");
        }
    }
    // allan.input: any path, including empty.
}

}  // namespace

const std::map<std::string, NumericSpec>& Config::numeric_registry() {
    static const std::map<std::string, NumericSpec> reg = {
        {"allan.overlapping", {0, 0, 1, "1 = overlapping estimator"}},
        {"cell.pressure", {0.33, 0.0, 100.0, "Pa"}},
        {"cell.probe_power", {400e-6, 1e-9, 1.0, "W"}},
        {"cell.pump_power", {2.7e-3, 1e-9, 10.0, "W"}},
        {"cell.beam_diameter", {6e-3, 1e-4, 1.0, "m"}},
        {"cell.length", {4.0, 0.01, 100.0, "m"}},
        {"comb.f_rep", {1e9, 1e8, 1e10, "Hz"}},
        {"comb.f_0", {140e6, 0.0, 1e9, "Hz"}},
        {"comb.ref_instability", {7.2e-14, 0.0, 1e-9, "fractional at 1 s"}},
        {"comb.f_rep_step", {1e4, 1.0, 1e6, "Hz step for mode determination"}},
        {"counter.gate", {1.0, 1e-3, 100.0, "s"}},
        {"counter.resolution", {1e-3, 1e-6, 1.0, "Hz"}},
        {"counter.dead_time", {0.0, 0.0, 10.0, "s"}},
        {"detect.doppler_depth", {0.25, 0.0, 2.0, "peak field absorbance of the background"}},
        {"detect.dip_contrast", {0.01, 1e-6, 0.5, "dip depth / background depth"}},
        {"detect.sample_rate", {12.5e6, 1e5, 1e9, "Hz"}},
        {"detect.noise_psd", {0.0, 0.0, 1.0, "relative units^2/Hz"}},
        {"detect.phase", {kPi / 2, -3.15, 3.15, "demodulation phase, rad"}},
        {"fig2.sample_rate", {1e6, 1e5, 1e8, "Hz"}},
        {"fig2.duration", {2.0, 0.1, 100.0, "s"}},
        {"fig2.mu", {3.1416e-3, 1e-6, 0.5, "LMS adaptation constant"}},
        {"fig2.floor_psd", {1e-10, 1e-30, 1.0, "electronic floor, units^2/Hz"}},
        {"fig2.tone_power", {0.0, 0.0, 1e6, "total parasitic tone power; 0 = derive from floor"}},
        {"fig2.tone_spread", {30.0, 0.0, 1e4, "Hz, cluster half-spread"}},
        {"fig2.n_tones", {5, 1, 64, "tones in the parasitic cluster"}},
        {"fig2.bandwidth", {1e3, 1.0, 1e5, "Hz, band-power window"}},
        {"fig2.ref_freq", {125e3, 1e3, 1e7, "Hz"}},
        {"laser.white_psd", {1e4, 0.0, 1e12, "Hz^2/Hz"}},
        {"laser.flicker_coeff", {0.0, 0.0, 1e12, "Hz^2 (S = coeff/f)"}},
        {"laser.drift", {1.5e4, -1e6, 1e6, "Hz/s"}},
        {"line.hwhm_zero_pressure", {28750.0, 100.0, 1e6, "Hz"}},
        {"line.broadening_per_pa", {13000.0 / 0.264, 0.0, 1e6, "Hz/Pa"}},
        {"line.gamma_e", {0.8 * 4.0 * kPi * 1e4, 0.0, 1e8, "upper relaxation rate, 1/s"}},
        {"line.gamma_g", {0.2 * 4.0 * kPi * 1e4, 0.0, 1e8, "lower relaxation rate, 1/s"}},
        {"line.temperature_k", {300.0, 1.0, 1000.0, "K"}},
        {"line.reference_pressure", {0.33, 0.0, 100.0, "Pa the configured frequency refers to"}},
        {"lock.gates", {1000, 3, 100000, "counted gates in lock-run"}},
        {"pipeline.gates", {1000, 3, 100000, "counted gates in full-pipeline"}},
        {"pipeline.noiseless", {0, 0, 1, "1 = disable every noise source"}},
        {"pressure.at", {0.33, 0.01, 10.0, "Pa"}},
        {"pressure.window", {0.05, 1e-4, 1.0, "Pa"}},
        {"pressure.points", {11, 3, 1000, "samples across the window"}},
        {"prestab.unity_gain", {200.0, 0.0, 1e5, "Hz; 0 disables the stage"}},
        {"prestab.floor_db", {-50.0, -120.0, 0.0, "low-frequency suppression floor"}},
        {"probe_mod.freq", {2.5e6, 1e5, 1e8, "Hz"}},
        {"probe_mod.index", {1.0, 0.0, 5.0, "phase modulation index"}},
        {"probe_mod.ram_depth", {0.0, 0.0, 0.5, "residual AM index"}},
        {"probe_mod.ram_phase", {0.0, -6.3, 6.3, "rad"}},
        {"probe_mod.aom_spatial_ram", {0.0, 0.0, 0.5, "extra RAM on the aom path"}},
        {"pump_mod.freq", {125e3, 1e3, 1e7, "Hz"}},
        {"pump_mod.chop_freq", {200.0, 1.0, 1e4, "Hz"}},
        {"pump_mod.signal_amplitude", {1.0, 1e-12, 1e6, "detected-signal scale"}},
        {"ram.depth", {1e-4, 0.0, 0.01, "RAM index for the rejection scenario"}},
        {"ram.phase", {0.7, -3.15, 3.15, "rad"}},
        {"ram.mu", {3.1416e-3, 1e-6, 0.5, "LMS adaptation constant"}},
        {"ram.floor_psd", {6.3e-17, 0.0, 1.0, "monitor-diode floor, units^2/Hz"}},
        {"ram.duration", {0.08, 1e-3, 10.0, "s"}},
        {"ram.bandwidth", {1e4, 10.0, 1e6, "Hz, band-power window"}},
        {"repeat.sets", {4, 2, 100, "measurement sets"}},
        {"repeat.per_set", {5, 1, 1000, "measurements per set"}},
        {"repeat.pressure_sigma", {0.022, 0.0, 1.0, "Pa, day-to-day pressure spread"}},
        {"repeat.within_sigma", {180.0, 0.0, 1e6, "Hz, within-set measurement noise"}},
        {"scan.half_span_hwhm", {4.0, 1.0, 10.0, "scan half-width in HWHM units"}},
        {"scan.points", {161, 16, 100000, "scan points"}},
        {"scan.noise_rel", {0.05, 0.0, 1.0, "additive noise / peak signal"}},
        {"scan.seeds", {1, 1, 10000, "fits to aggregate (median)"}},
        {"servo.kp", {0.2, 0.0, 100.0, "proportional gain"}},
        {"servo.ki", {63.0, 1e-6, 1e5, "integral gain, 1/s; unity gain ~ ki/(2 pi)"}},
        {"servo.update_rate", {1000.0, 10.0, 1e6, "Hz"}},
        {"servo.correction_limit", {1e6, 1.0, 1e9, "Hz"}},
        {"servo.meas_noise", {1.36e4, 0.0, 1e9, "Hz rms per update, calibrated default"}},
        {"servo.residual_offset", {0.0, -10.0, 10.0, "error-signal offset"}},
        {"servo.initial_offset", {0.0, -1e6, 1e6, "Hz detuning at lock acquisition"}},
        {"shift.slope_at_reference", {-38400.0, -1e7, 0.0, "Hz/Pa at the reference pressure"}},
        {"shift.linear_fraction", {0.6, 0.0, 1.0, "share of the slope carried by the linear term"}},
        {"shift.power_coeff", {1000.0, 0.0, 1e6, "Hz per probe-power octave"}},
        {"shift.power_sign", {-1.0, -1.0, 1.0, "sign of the power shift"}},
        {"shift.reference_probe_power", {400e-6, 1e-9, 1.0, "W"}},
    };
    return reg;
}

const std::map<std::string, StringSpec>& Config::string_registry() {
    static const std::map<std::string, StringSpec> reg = {
        {"allan.input", {"", "CSV of counted gates; empty = synthesize via lock-run"}},
        {"line.frequency_khz", {"597366498654.62", "locked value at reference conditions, kHz"}},
        {"probe_mod.path", {"eom", "eom | aom"}},
        {"servo.source", {"double_demod", "fm_quadrature | modulation_transfer | double_demod"}},
    };
    return reg;
}

Config::Config() {
    for (const auto& [k, spec] : numeric_registry()) numbers_[k] = spec.def;
    for (const auto& [k, spec] : string_registry()) strings_[k] = spec.def;
}

double Config::number(const std::string& key) const {
    const auto it = numbers_.find(key);
    if (it == numbers_.end()) throw ConfigError("config: no numeric key '" + key + "'");
    return it->second;
}

const std::string& Config::text(const std::string& key) const {
    const auto it = strings_.find(key);
    if (it == strings_.end()) throw ConfigError("config: no string key '" + key + "'");
    return it->second;
}

std::string Config::suggest(const std::string& key) {
    std::string best;
    std::size_t best_d = 3;
    auto consider = [&](const std::string& candidate) {
        const std::size_t d = std::min(levenshtein(key, candidate, 2),
                                       levenshtein(after_dot(key), after_dot(candidate), 2));
        if (d < best_d) {
            best_d = d;
            best = candidate;
        }
    };
    for (const auto& [k, spec] : numeric_registry()) consider(k);
    for (const auto& [k, spec] : string_registry()) consider(k);
    return best;
}

void Config::set(const std::string& key, const std::string& raw) {
    if (const auto it = numeric_registry().find(key); it != numeric_registry().end()) {
        const std::string text = trim(raw);
        double v = 0.0;
        const char* begin = text.data();
        const char* end = begin + text.size();
        if (begin != end && *begin == '+') ++begin;  // from_chars rejects a leading plus
        const auto res = std::from_chars(begin, end, v);
        if (res.ec != std::errc() || res.ptr != end) {
            throw ConfigError("config: " + key + " expects a number, got '" + text + "'");
        }
        set(key, v);
        return;
    }
    if (const auto it = string_registry().find(key); it != string_registry().end()) {
        std::string value = trim(raw);
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        check_string_value(key, value);
        strings_[key] = value;
        return;
    }
    std::string msg = "config: unknown key '" + key + "'";
    if (const std::string near = suggest(key); !near.empty()) {
        msg += "; did you mean '" + near + "'?";
    }
    throw ConfigError(msg);
}

void Config::set(const std::string& key, double value) {
    const auto it = numeric_registry().find(key);
    if (it == numeric_registry().end()) {
        throw ConfigError("config: no numeric key '" + key + "'");
    }
    if (!std::isfinite(value) || value < it->second.min || value > it->second.max) {
        throw ConfigError("config: " + key + " = " + format_double(value) + " out of range [" +
                          format_double(it->second.min) + ", " + format_double(it->second.max) +
                          "] (" + it->second.doc + ")");
    }
    numbers_[key] = value;
}

void Config::apply_override(const std::string& assignment) {
    const auto pos = assignment.find('=');
    if (pos == std::string::npos) {
        throw ConfigError("config: override '" + assignment + "' is not key=value");
    }
    set(trim(assignment.substr(0, pos)), assignment.substr(pos + 1));
}

namespace {

struct Binding {
    std::string key;
    std::string raw;
    std::size_t line_no;
};

std::vector<Binding> parse_bindings(std::istream& in, const std::string& origin) {
    std::vector<Binding> out;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // Strip comments outside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line.resize(i);
                break;
            }
        }
        const std::string body = trim(line);
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']') {
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            section = trim(body.substr(1, body.size() - 2));
            if (section.empty()) {
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
            }
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key = value, got '" + body + "'");
        }
        std::string key = trim(body.substr(0, eq));
        if (key.empty()) {
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        }
        if (!section.empty() && key.find('.') == std::string::npos) key = section + "." + key;
        out.push_back({key, trim(body.substr(eq + 1)), line_no});
    }
    return out;
}

}  // namespace

void Config::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    for (const auto& b : parse_bindings(in, path)) {
        try {
            set(b.key, b.raw);
        } catch (const ConfigError& e) {
            throw ConfigError(path + ":" + std::to_string(b.line_no) + ": " + e.what());
        }
    }
}

std::string Config::dump() const {
    std::ostringstream out;
    // Both maps are ordered; merge them for one sorted listing.
    auto ni = numbers_.begin();
    auto si = strings_.begin();
    while (ni != numbers_.end() || si != strings_.end()) {
        const bool take_num = si == strings_.end() ||
                              (ni != numbers_.end() && ni->first < si->first);
        if (take_num) {
            out << ni->first << " = " << format_double(ni->second) << "\n";
            ++ni;
        } else {
            out << si->first << " = \"" << si->second << "\"\n";
            ++si;
        }
    }
    return out.str();
}

std::uint64_t Config::hash() const {
    const std::string repr = dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const unsigned char c : repr) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string Config::hash_hex() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
    return std::string(buf);
}

bool ValidationReport::ok() const {
    return std::none_of(issues.begin(), issues.end(), [](const ValidationIssue& i) {
        return i.severity == ValidationIssue::Severity::error;
    });
}

ValidationReport validate_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path + "'");
    ValidationReport report;
    Config cfg;
    std::vector<Binding> bindings;
    try {
        bindings = parse_bindings(in, path);
    } catch (const ConfigError& e) {
        report.issues.push_back({ValidationIssue::Severity::error, e.what()});
        report.effective = cfg.dump();
        return report;
    }
    for (const auto& b : bindings) {
        const bool known = Config::numeric_registry().count(b.key) != 0 ||
                           Config::string_registry().count(b.key) != 0;
        try {
            cfg.set(b.key, b.raw);
        } catch (const ConfigError& e) {
            const auto severity =
                known ? ValidationIssue::Severity::error : ValidationIssue::Severity::warning;
            report.issues.push_back(
                {severity, path + ":" + std::to_string(b.line_no) + ": " + e.what()});
        }
    }
    report.effective = cfg.dump();
    return report;
}

}  // namespace iodinesim

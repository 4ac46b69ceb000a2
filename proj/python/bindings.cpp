#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "iodinesim/analysis.hpp"
#include "iodinesim/canceller.hpp"
#include "iodinesim/comb.hpp"
#include "iodinesim/config.hpp"
#include "iodinesim/scenario.hpp"
#include "iodinesim/spectrum.hpp"

namespace py = pybind11;
using namespace iodinesim;

namespace {

using Override = std::variant<double, std::string>;

Config make_config(const std::string& config_file, const std::map<std::string, Override>& overrides) {
    Config cfg;
    if (!config_file.empty()) cfg.load_file(config_file);
    for (const auto& [key, value] : overrides) {
        if (std::holds_alternative<double>(value)) {
            cfg.set(key, std::get<double>(value));
        } else {
            cfg.set(key, std::get<std::string>(value));
        }
    }
    return cfg;
}

TimeSeries make_series(const std::vector<double>& values, double dt, TimeSeries::Kind kind) {
    TimeSeries ts;
    ts.values = values;
    ts.dt = dt;
    ts.kind = kind;
    return ts;
}

}  // namespace

PYBIND11_MODULE(_core, mod) {
    mod.doc() = "iodine-stabilized 501.7 nm laser chain simulator (C++ core)";
    mod.attr("__version__") = kVersion;

    mod.def("scenario_names", [] { return scenario_names(); });

    mod.def(
        "run_scenario",
        [](const std::string& name, const std::string& out_dir, std::uint64_t seed,
           const std::map<std::string, Override>& overrides, const std::string& config_file,
           bool check) {
            ScenarioRequest req;
            req.name = name;
            req.out_dir = out_dir;
            req.seed = seed;
            req.config = make_config(config_file, overrides);
            req.check = check;
            const ScenarioResult res = run_scenario(req);
            return py::make_tuple(res.summary_json, res.check_passed, res.files);
        },
        py::arg("name"), py::arg("out_dir"), py::arg("seed") = 1,
        py::arg("overrides") = std::map<std::string, Override>{}, py::arg("config_file") = "",
        py::arg("check") = false,
        "Run one scenario; returns (summary_json, check_passed, files).");

    mod.def(
        "validate_config",
        [](const std::string& path) {
            const ValidationReport report = validate_config_file(path);
            std::vector<std::pair<std::string, std::string>> issues;
            for (const auto& issue : report.issues) {
                issues.emplace_back(
                    issue.severity == ValidationIssue::Severity::error ? "error" : "warning",
                    issue.message);
            }
            return py::make_tuple(report.ok(), issues, report.effective);
        },
        py::arg("path"), "Validate a config file; returns (ok, issues, effective_config).");

    mod.def(
        "default_config",
        [](const std::map<std::string, Override>& overrides) {
            return make_config("", overrides).dump();
        },
        py::arg("overrides") = std::map<std::string, Override>{},
        "Effective config text after applying overrides to the defaults.");

    mod.def(
        "config_hash",
        [](const std::map<std::string, Override>& overrides) {
            return make_config("", overrides).hash_hex();
        },
        py::arg("overrides") = std::map<std::string, Override>{});

    mod.def(
        "allan_deviation",
        [](const std::vector<double>& values, double dt, const std::vector<double>& taus,
           bool overlapping) {
            const TimeSeries ts = make_series(values, dt, TimeSeries::Kind::fractional_frequency);
            const AllanResult res =
                allan_deviation(ts, taus.empty() ? default_taus(ts) : taus, overlapping);
            return py::make_tuple(res.taus_s, res.sigmas, res.n_samples_per_tau);
        },
        py::arg("values"), py::arg("dt") = 1.0, py::arg("taus") = std::vector<double>{},
        py::arg("overlapping") = false,
        "Allan deviation of a gate-spaced record; returns (taus, sigmas, n).");

    mod.def(
        "welch_psd",
        [](const std::vector<double>& values, double sample_rate, std::size_t nperseg) {
            const Psd psd = welch_psd(values, sample_rate, nperseg);
            return py::make_tuple(psd.freq_hz, psd.power);
        },
        py::arg("values"), py::arg("sample_rate"), py::arg("nperseg") = 0);

    mod.def(
        "fit_dispersion",
        [](const std::vector<double>& detuning_hz, const std::vector<double>& values) {
            const DispersionFit fit =
                fit_dispersion(detuning_hz, values, dispersion_guess(detuning_hz, values));
            py::dict out;
            out["amplitude"] = fit.amplitude;
            out["center_hz"] = fit.center_hz;
            out["hwhm_hz"] = fit.hwhm_hz;
            out["baseline"] = fit.baseline;
            out["residual_rms"] = fit.residual_rms;
            out["converged"] = fit.converged;
            out["iterations"] = fit.iterations;
            return out;
        },
        py::arg("detuning_hz"), py::arg("values"),
        "Fit baseline + A*(-x/(1+x^2)) with x = (f-center)/hwhm.");

    mod.def(
        "lms_notch",
        [](const std::vector<double>& values, double sample_rate, double ref_freq, double mu) {
            LmsNotch notch({mu, ref_freq, sample_rate});
            return notch.process(make_series(values, 1.0 / sample_rate, TimeSeries::Kind::detector))
                .values;
        },
        py::arg("values"), py::arg("sample_rate"), py::arg("ref_freq"), py::arg("mu") = 3.1416e-3,
        "Two-weight LMS notch at ref_freq; returns the cancelled record.");

    mod.def(
        "fm_error_signal",
        [](const std::vector<double>& detuning_hz, const std::map<std::string, Override>& overrides,
           double detection_phase) {
            const ModelBundle m = build_models(make_config("", overrides));
            std::vector<double> out;
            out.reserve(detuning_hz.size());
            for (double d : detuning_hz) {
                out.push_back(fm_demod_signal(m.ctx, m.probe_mod, d, detection_phase));
            }
            return out;
        },
        py::arg("detuning_hz"), py::arg("overrides") = std::map<std::string, Override>{},
        py::arg("detection_phase") = 1.5707963267948966,
        "FM-spectroscopy error signal vs detuning from the shifted dip center.");

    mod.def(
        "ram_lock_shift",
        [](double ram_depth, double ram_phase, const std::map<std::string, Override>& overrides,
           double detection_phase) {
            const ModelBundle m = build_models(make_config("", overrides));
            ModulationConfig mod = m.probe_mod;
            mod.ram_depth = ram_depth;
            mod.ram_phase_rad = ram_phase;
            return ram_lock_shift(m.ctx, mod, detection_phase);
        },
        py::arg("ram_depth"), py::arg("ram_phase") = 0.0,
        py::arg("overrides") = std::map<std::string, Override>{},
        py::arg("detection_phase") = 1.5707963267948966,
        "Lock-point displacement (Hz) caused by residual AM of the given depth.");

    mod.def(
        "pressure_shift_hz",
        [](double pressure_pa, double probe_power_w,
           const std::map<std::string, Override>& overrides) {
            const ModelBundle m = build_models(make_config("", overrides));
            CellConditions cond = m.cell;
            cond.pressure_pa = pressure_pa;
            if (probe_power_w > 0.0) cond.probe_power_w = probe_power_w;
            return center_shift_hz(m.shift, m.line, m.broadening, cond);
        },
        py::arg("pressure_pa"), py::arg("probe_power_w") = 0.0,
        py::arg("overrides") = std::map<std::string, Override>{},
        "Lock-point shift (Hz) relative to the unperturbed line center.");

    mod.def(
        "reconstruct_khz",
        [](double counted_mean_hz, std::int64_t p, double f_rep_hz) {
            CombConfig comb;
            comb.f_rep = OpticalFrequency::from_hertz(f_rep_hz);
            return reconstruct(counted_mean_hz, p, comb).khz_report();
        },
        py::arg("counted_mean_hz"), py::arg("p"), py::arg("f_rep_hz") = 1e9,
        "p*f_rep + counted mean, reported as a 2-decimal kHz string.");

    mod.def(
        "khz_roundtrip",
        [](const std::string& khz) { return OpticalFrequency::from_khz_string(khz).khz_string(); },
        py::arg("khz"), "Parse a decimal-kHz string and reprint it at full mHz precision.");

    py::register_exception<ConfigError>(mod, "ConfigError", PyExc_ValueError);
}

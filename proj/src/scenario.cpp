#include "iodinesim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "iodinesim/analysis.hpp"
#include "iodinesim/canceller.hpp"
#include "iodinesim/rng.hpp"
#include "iodinesim/spectrum.hpp"

namespace iodinesim {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of empty list");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

// Everything one scenario needs: resolved models, output dir, a place to put
// results, and the per-scenario master seed.
struct Runner {
    const ScenarioRequest& req;
    ModelBundle m;
    std::filesystem::path dir;
    ordered_json results;
    std::vector<std::string> files;
    std::uint64_t master;

    double num(const char* key) const { return req.config.number(key); }

    void save(const std::string& name, const std::string& content) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << content;
        if (!out) throw std::runtime_error("short write to " + path.string());
        files.push_back(path.string());
    }

    void save_csv(const std::string& name, const std::string& header,
                  const std::vector<std::vector<double>>& rows) {
        std::ostringstream out;
        out << header << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out << ",";
                out << fmt(row[i]);
            }
            out << "\n";
        }
        save(name, out.str());
    }

    void save_psd_csv(const std::string& name, const Psd& psd) {
        std::ostringstream out;
        out << "freq_Hz,psd_db\n";
        for (std::size_t i = 0; i < psd.freq_hz.size(); ++i) {
            out << fmt(psd.freq_hz[i]) << ","
                << fmt(10.0 * std::log10(std::max(psd.power[i], 1e-300))) << "\n";
        }
        save(name, out.str());
    }

    void save_series_csv(const std::string& name, const char* header, const TimeSeries& ts,
                         std::size_t max_rows = 20000) {
        const std::size_t stride = std::max<std::size_t>(1, (ts.size() + max_rows - 1) / max_rows);
        std::ostringstream out;
        out << header << "\n";
        for (std::size_t i = 0; i < ts.size(); i += stride) {
            out << fmt(static_cast<double>(i) * ts.dt) << "," << fmt(ts.values[i]) << "\n";
        }
        save(name, out.str());
    }

    void save_gates_csv(const std::string& name, const TimeSeries& gates) {
        std::ostringstream out;
        out << "gate_index,counted_Hz\n";
        for (std::size_t i = 0; i < gates.size(); ++i) {
            out << i << "," << fmt(gates.values[i]) << "\n";
        }
        save(name, out.str());
    }

    std::uint64_t stream(const std::string& tag) const { return Rng::derive(master, tag); }
};

TimeSeries second_half(const TimeSeries& ts) {
    TimeSeries out;
    out.dt = ts.dt;
    out.kind = ts.kind;
    out.values.assign(ts.values.begin() + static_cast<std::ptrdiff_t>(ts.size() / 2),
                      ts.values.end());
    return out;
}

// Free laser -> prestabilization -> PI lock; returns the locked detuning
// record at the servo update rate. noiseless kills every stochastic term.
TimeSeries run_locked_detuning(Runner& r, double duration_s, bool noiseless, LockResult* info) {
    NoiseModel noise = noiseless ? NoiseModel{} : r.m.laser_noise;
    const TimeSeries free_run = simulate_free_laser(noise, duration_s, r.m.pi.update_rate_hz,
                                                    r.stream("free-laser"));
    const TimeSeries pre = prestabilize(free_run, r.m.prestab);
    ErrorChainConfig chain = r.m.chain;
    if (noiseless) chain.meas_noise_hz = 0.0;
    LockResult lock = close_lock(pre, r.m.ctx, r.m.probe_mod, r.m.pump, chain, r.m.pi,
                                 r.num("servo.initial_offset"), r.stream("lock"));
    if (info) {
        info->in_lock = lock.in_lock;
        info->mean_detuning_hz = lock.mean_detuning_hz;
        info->stayed_locked = lock.stayed_locked;
    }
    return std::move(lock.locked);
}

TimeSeries counted_to_fractional(const TimeSeries& counted, double carrier_hz) {
    TimeSeries frac;
    frac.dt = counted.dt;
    frac.kind = TimeSeries::Kind::fractional_frequency;
    frac.values.reserve(counted.size());
    for (double v : counted.values) frac.values.push_back(v / carrier_hz);
    return frac;
}

// Least-squares slope of log10(sigma) vs log10(tau) over [tau_lo, tau_hi].
double loglog_slope(const AllanResult& allan, double tau_lo, double tau_hi) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < allan.taus_s.size(); ++i) {
        const double tau = allan.taus_s[i];
        if (tau < tau_lo * 0.999 || tau > tau_hi * 1.001) continue;
        if (allan.sigmas[i] <= 0.0) continue;
        const double x = std::log10(tau);
        const double y = std::log10(allan.sigmas[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) throw std::runtime_error("not enough Allan points in the slope window");
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------- scenarios

bool scenario_lineshape_scan(Runner& r) {
    const double h = r.m.ctx.hwhm_hz();
    const double shift_hz = r.m.ctx.shift_hz();
    const double span = r.num("scan.half_span_hwhm") * h;
    const auto n = static_cast<std::size_t>(r.num("scan.points"));
    const double noise_rel = r.num("scan.noise_rel");
    const auto n_seeds = static_cast<std::size_t>(r.num("scan.seeds"));

    std::vector<double> detuning(n);  // relative to the shifted dip center
    for (std::size_t i = 0; i < n; ++i) {
        detuning[i] = -span + 2.0 * span * static_cast<double>(i) / static_cast<double>(n - 1);
    }

    std::vector<double> rel_unperturbed(n);
    for (std::size_t i = 0; i < n; ++i) rel_unperturbed[i] = detuning[i] + shift_hz;
    const SaturationProfile profile =
        saturation_profile(r.m.line, r.m.broadening, r.m.shift, r.m.cell, rel_unperturbed,
                           r.m.ctx.doppler_depth, r.m.ctx.dip_contrast);
    {
        std::vector<std::vector<double>> rows;
        rows.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            rows.push_back({detuning[i], profile.absorption[i], profile.dispersion[i]});
        }
        r.save_csv("scan.csv", "detuning_Hz,absorption,dispersion", rows);
    }

    std::vector<double> clean(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        clean[i] = fm_demod_signal(r.m.ctx, r.m.probe_mod, detuning[i], r.num("detect.phase"));
        peak = std::max(peak, std::abs(clean[i]));
    }

    std::vector<double> hwhm_fits, center_fits;
    ordered_json fits = ordered_json::array();
    std::vector<double> first_noisy;
    for (std::size_t s = 0; s < n_seeds; ++s) {
        Rng rng(r.stream("scan-noise-" + std::to_string(s)));
        std::vector<double> noisy(n);
        for (std::size_t i = 0; i < n; ++i) {
            noisy[i] = clean[i] + noise_rel * peak * rng.gaussian();
        }
        if (s == 0) first_noisy = noisy;
        const DispersionFit fit = fit_dispersion(detuning, noisy, dispersion_guess(detuning, noisy));
        hwhm_fits.push_back(fit.hwhm_hz);
        center_fits.push_back(fit.center_hz);
        fits.push_back({{"hwhm_hz", fit.hwhm_hz},
                        {"center_hz", fit.center_hz},
                        {"amplitude", fit.amplitude},
                        {"baseline", fit.baseline},
                        {"residual_rms", fit.residual_rms},
                        {"converged", fit.converged}});
    }
    {
        std::vector<std::vector<double>> rows;
        rows.reserve(n);
        for (std::size_t i = 0; i < n; ++i) rows.push_back({detuning[i], first_noisy[i]});
        r.save_csv("error_signal.csv", "detuning_Hz,error_signal", rows);
    }

    const double med_hwhm = median(hwhm_fits);
    const double med_center = median(center_fits);
    ordered_json fit_report;
    fit_report["n_seeds"] = n_seeds;
    fit_report["hwhm_true_hz"] = h;
    fit_report["median_hwhm_hz"] = med_hwhm;
    fit_report["median_center_hz"] = med_center;
    fit_report["fits"] = fits;
    r.save("fit.json", fit_report.dump(2) + "\n");

    r.results["hwhm_true_hz"] = h;
    r.results["median_fit_hwhm_hz"] = med_hwhm;
    r.results["median_fit_center_hz"] = med_center;
    r.results["peak_signal"] = peak;
    r.results["n_seeds"] = n_seeds;
    return std::abs(med_hwhm - h) <= 0.032 * h;
}

bool scenario_notch_fig2(Runner& r) {
    const double fs = r.num("fig2.sample_rate");
    const double f0 = r.num("fig2.ref_freq");
    const double bw = r.num("fig2.bandwidth");
    const double floor_psd = r.num("fig2.floor_psd");
    const auto n = static_cast<std::size_t>(std::llround(fs * r.num("fig2.duration")));
    const auto n_tones = static_cast<std::size_t>(r.num("fig2.n_tones"));
    const double spread = r.num("fig2.tone_spread");

    double tone_power = r.num("fig2.tone_power");
    if (tone_power == 0.0) {
        // 36 dB of parasitic power above the floor band: 27 dB of rejection
        // should leave a residual ~9 dB above the floor.
        tone_power = floor_psd * bw * (std::pow(10.0, 3.6) - 1.0);
    }

    Rng floor_rng(r.stream("fig2-floor"));
    Rng phase_rng(r.stream("fig2-phase"));
    const double sigma = std::sqrt(floor_psd * fs / 2.0);
    const double amp = std::sqrt(2.0 * tone_power / static_cast<double>(n_tones));

    std::vector<double> offsets(n_tones), phases(n_tones);
    for (std::size_t k = 0; k < n_tones; ++k) {
        offsets[k] = n_tones == 1
                         ? spread
                         : spread * (-1.0 + 2.0 * static_cast<double>(k) /
                                                static_cast<double>(n_tones - 1));
        phases[k] = 2.0 * 3.141592653589793 * phase_rng.uniform();
    }

    TimeSeries in;
    in.dt = 1.0 / fs;
    in.kind = TimeSeries::Kind::detector;
    in.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * in.dt;
        double x = sigma * floor_rng.gaussian();
        for (std::size_t k = 0; k < n_tones; ++k) {
            x += amp * std::cos(2.0 * 3.141592653589793 * (f0 + offsets[k]) * t + phases[k]);
        }
        in.values[i] = x;
    }

    LmsNotch notch({r.num("fig2.mu"), f0, fs});
    const TimeSeries out = notch.process(in);

    const TimeSeries in2 = second_half(in);
    const TimeSeries out2 = second_half(out);
    const double depth_db = notch_depth(in2, out2, f0, bw);
    const Psd psd_in = welch_psd(in2.values, fs);
    const Psd psd_out = welch_psd(out2.values, fs);
    const double band_after = band_power(psd_out, f0, bw);
    const double residual_above_floor_db = 10.0 * std::log10(band_after / (floor_psd * bw));

    r.save_psd_csv("psd_before.csv", psd_in);
    r.save_psd_csv("psd_after.csv", psd_out);

    r.results["depth_db"] = depth_db;
    r.results["residual_above_floor_db"] = residual_above_floor_db;
    r.results["notch_fwhm_hz"] = r.num("fig2.mu") * fs / 3.141592653589793;
    r.results["band_power_before"] = band_power(psd_in, f0, bw);
    r.results["band_power_after"] = band_after;
    r.results["tone_power"] = tone_power;
    return std::abs(depth_db - 27.0) <= 1.5 && std::abs(residual_above_floor_db - 9.0) <= 2.0;
}

bool scenario_ram_reject(Runner& r) {
    ModulationConfig mod = r.m.probe_mod;
    mod.ram_depth = r.num("ram.depth");
    mod.ram_phase_rad = r.num("ram.phase");

    DetectorConfig det;
    det.sample_rate_hz = r.num("detect.sample_rate");
    det.noise_psd = r.num("ram.floor_psd");
    det.seed = r.stream("ram-floor");
    const TimeSeries monitor =
        detector_record(r.m.ctx, mod, 0.0, r.num("ram.duration"), det, /*with_medium=*/false);

    LmsNotch notch({r.num("ram.mu"), mod.mod_freq_hz, det.sample_rate_hz});
    const TimeSeries cancelled = notch.process(monitor);

    const TimeSeries in2 = second_half(monitor);
    const TimeSeries out2 = second_half(cancelled);
    const double bw = r.num("ram.bandwidth");
    const double depth_db = notch_depth(in2, out2, mod.mod_freq_hz, bw);
    const double factor = std::pow(10.0, -depth_db / 20.0);

    const double phase = r.num("detect.phase");
    const double disp_before = ram_lock_shift(r.m.ctx, mod, phase);
    ModulationConfig residual = mod;
    residual.ram_depth = mod.ram_depth * factor;
    const double disp_after = ram_lock_shift(r.m.ctx, residual, phase);
    const double shrink = disp_before != 0.0 ? disp_after / disp_before : 0.0;

    r.save_psd_csv("psd_before.csv", welch_psd(in2.values, det.sample_rate_hz));
    r.save_psd_csv("psd_after.csv", welch_psd(out2.values, det.sample_rate_hz));

    r.results["depth_db"] = depth_db;
    r.results["amplitude_factor"] = factor;
    r.results["displacement_before_hz"] = disp_before;
    r.results["displacement_after_hz"] = disp_after;
    r.results["shrink_factor"] = shrink;
    r.results["residual_ram_depth"] = residual.ram_depth;
    return depth_db >= 40.0 && disp_before != 0.0 && std::abs(shrink / factor - 1.0) <= 0.1;
}

bool scenario_lock_run(Runner& r) {
    const double cycle = r.m.counter.gate_s + r.m.counter.dead_time_s;
    const auto gates = static_cast<std::size_t>(r.num("lock.gates"));
    const double duration = static_cast<double>(gates) * cycle;

    LockResult info;
    const TimeSeries locked = run_locked_detuning(r, duration, /*noiseless=*/false, &info);

    const OpticalFrequency carrier = r.m.ctx.dip_center();
    const BeatResult beat = beat_and_mix(carrier, r.m.comb);
    const TimeSeries counted =
        count_beat(beat.mixed, locked, r.m.comb, r.m.counter, beat.p, r.stream("count"));

    const TimeSeries frac = counted_to_fractional(counted, carrier.hertz());
    const AllanResult allan =
        allan_deviation(frac, default_taus(frac), r.req.config.flag("allan.overlapping"));
    const double sigma_gate = allan.sigmas.front();
    const double slope = loglog_slope(allan, allan.taus_s.front(), 30.0 * allan.taus_s.front());

    r.save_series_csv("locked.csv", "time_s,offset_Hz", locked);
    r.save_gates_csv("gates.csv", counted);
    {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < allan.taus_s.size(); ++i) {
            rows.push_back({allan.taus_s[i], allan.sigmas[i]});
        }
        r.save_csv("allan.csv", "tau_s,sigma", rows);
    }

    r.results["n_gates"] = counted.size();
    r.results["sigma_y_at_gate"] = sigma_gate;
    r.results["sigma_gate_hz"] = sigma_gate * carrier.hertz();
    r.results["allan_slope_1_30s"] = slope;
    r.results["mean_detuning_hz"] = info.mean_detuning_hz;
    r.results["stayed_locked"] = info.stayed_locked;
    r.results["mode_number"] = beat.p;
    r.results["mixed_hz"] = beat.mixed.hertz();
    return info.stayed_locked && std::abs(sigma_gate / 7.2e-13 - 1.0) <= 0.15 &&
           std::abs(slope + 0.5) <= 0.05;
}

bool scenario_allan(Runner& r) {
    TimeSeries counted;
    double carrier_hz = 0.0;
    const std::string input = r.req.config.text("allan.input");
    if (input.empty()) {
        const double cycle = r.m.counter.gate_s + r.m.counter.dead_time_s;
        const auto gates = static_cast<std::size_t>(r.num("lock.gates"));
        const TimeSeries locked =
            run_locked_detuning(r, static_cast<double>(gates) * cycle, false, nullptr);
        const OpticalFrequency carrier = r.m.ctx.dip_center();
        const BeatResult beat = beat_and_mix(carrier, r.m.comb);
        counted = count_beat(beat.mixed, locked, r.m.comb, r.m.counter, beat.p, r.stream("count"));
        carrier_hz = carrier.hertz();
    } else {
        std::ifstream in(input);
        if (!in) throw std::runtime_error("allan: cannot read input '" + input + "'");
        counted.dt = r.m.counter.gate_s + r.m.counter.dead_time_s;
        counted.kind = TimeSeries::Kind::counted_hertz;
        std::string line;
        std::getline(in, line);  // header
        while (std::getline(in, line)) {
            const auto comma = line.find(',');
            if (comma == std::string::npos) continue;
            counted.values.push_back(std::stod(line.substr(comma + 1)));
        }
        if (counted.values.empty()) {
            throw std::runtime_error("allan: no rows in input '" + input + "'");
        }
        carrier_hz = r.m.configured_lock_value.hertz();
    }

    const TimeSeries frac = counted_to_fractional(counted, carrier_hz);
    const bool overlapping = r.req.config.flag("allan.overlapping");
    const AllanResult allan = allan_deviation(frac, default_taus(frac), overlapping);

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < allan.taus_s.size(); ++i) {
        rows.push_back({allan.taus_s[i], allan.sigmas[i]});
    }
    r.save_csv("allan.csv", "tau_s,sigma", rows);

    r.results["overlapping"] = overlapping;
    r.results["n_gates"] = counted.size();
    r.results["taus_s"] = allan.taus_s;
    r.results["sigmas"] = allan.sigmas;
    bool ok = true;
    for (double s : allan.sigmas) ok = ok && std::isfinite(s) && s >= 0.0;
    return ok;
}

bool scenario_comb_measure(Runner& r) {
    const auto gates = static_cast<std::size_t>(r.num("pipeline.gates"));
    const double cycle = r.m.counter.gate_s + r.m.counter.dead_time_s;

    TimeSeries quiet;  // ideal laser: zero excursion around the lock point
    quiet.dt = cycle / 16.0;
    quiet.kind = TimeSeries::Kind::fractional_frequency;
    quiet.values.assign(gates * 16, 0.0);

    const OpticalFrequency carrier = r.m.ctx.dip_center();
    const CombConfig comb_a = r.m.comb;
    CombConfig comb_b = r.m.comb;
    comb_b.f_rep = comb_a.f_rep + FrequencyOffset::from_hertz(r.num("comb.f_rep_step"));

    const BeatResult beat = beat_and_mix(carrier, comb_a);
    const FrequencyOffset mixed_b = mixed_for_mode(carrier, beat.p, comb_b);

    const TimeSeries counted_a =
        count_beat(beat.mixed, quiet, comb_a, r.m.counter, beat.p, r.stream("count-a"));
    const TimeSeries counted_b =
        count_beat(mixed_b, quiet, comb_b, r.m.counter, beat.p, r.stream("count-b"));

    const double mean_a = mean_of(counted_a.values);
    const double mean_b = mean_of(counted_b.values);
    const ModeNumberResult mode =
        determine_mode_number(mean_a, comb_a.f_rep, mean_b, comb_b.f_rep);
    const OpticalFrequency recon = reconstruct(mean_a, mode.p, comb_a);
    const double sem = sample_std(counted_a.values) /
                       std::sqrt(static_cast<double>(counted_a.size()));
    const double offset_hz = (recon - carrier).hertz();

    r.save_gates_csv("gates_a.csv", counted_a);
    r.save_gates_csv("gates_b.csv", counted_b);

    ordered_json report;
    report["p"] = mode.p;
    report["f_rep_Hz"] = comb_a.f_rep.hertz();
    report["mean_counted_Hz"] = mean_a;
    report["absolute_kHz"] = recon.khz_report();
    report["n_gates"] = counted_a.size();
    report["mode_residual"] = mode.residual;
    report["true_p"] = beat.p;
    report["offset_from_lock_point_Hz"] = offset_hz;
    r.save("reconstruction.json", report.dump(2) + "\n");

    r.results = report;
    r.results["sem_hz"] = sem;
    return mode.p == beat.p &&
           std::abs(offset_hz) <= 3.0 * sem + r.m.counter.resolution_hz;
}

bool scenario_pressure_shift(Runner& r) {
    const double at = r.num("pressure.at");
    const double window = r.num("pressure.window");
    const auto points = static_cast<std::size_t>(r.num("pressure.points"));

    std::vector<double> pressures(points), shifts(points);
    for (std::size_t i = 0; i < points; ++i) {
        const double p =
            at - window + 2.0 * window * static_cast<double>(i) / static_cast<double>(points - 1);
        CellConditions cond = r.m.cell;
        cond.pressure_pa = p;
        pressures[i] = p;
        shifts[i] = center_shift_hz(r.m.shift, r.m.line, r.m.broadening, cond);
    }
    const double slope = pressure_slope(pressures, shifts, at, window);

    CellConditions cond_at = r.m.cell;
    cond_at.pressure_pa = at;
    const double h_at = hwhm(r.m.broadening, cond_at);
    const double analytic = r.m.shift.linear_hz_per_pa -
                            r.m.shift.nonlinear_amp_hz2 * r.m.line.gamma_ratio_r() *
                                r.m.broadening.broadening_hz_per_pa / (h_at * h_at);

    const double full = center_shift_hz(r.m.shift, r.m.line, r.m.broadening, cond_at);
    CellConditions cond_half = cond_at;
    cond_half.probe_power_w = cond_at.probe_power_w / 2.0;
    const double power_move = center_shift_hz(r.m.shift, r.m.line, r.m.broadening, cond_half) - full;

    {
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < points; ++i) rows.push_back({pressures[i], shifts[i]});
        r.save_csv("shift_vs_pressure.csv", "pressure_Pa,shift_Hz", rows);
    }

    r.results["at_pa"] = at;
    r.results["slope_hz_per_pa"] = slope;
    r.results["analytic_slope_hz_per_pa"] = analytic;
    r.results["power_halving_shift_hz"] = power_move;
    bool ok = std::abs(slope - analytic) <= 0.02 * std::abs(analytic) &&
              std::abs(std::abs(power_move) - 1000.0) <= 1.0;
    if (std::abs(at - 0.33) < 1e-12) {
        ok = ok && std::abs(slope - (-38400.0)) <= 0.02 * 38400.0;
    }
    return ok;
}

bool scenario_repeatability(Runner& r) {
    const auto n_sets = static_cast<std::size_t>(r.num("repeat.sets"));
    const auto per_set = static_cast<std::size_t>(r.num("repeat.per_set"));
    const double sigma_p = r.num("repeat.pressure_sigma");
    const double sigma_w = r.num("repeat.within_sigma");

    Rng day_rng(r.stream("repeat-days"));
    Rng meas_rng(r.stream("repeat-meas"));
    const double base_shift = center_shift_hz(r.m.shift, r.m.line, r.m.broadening, r.m.cell);

    std::vector<MeasurementSet> sets;
    for (std::size_t s = 0; s < n_sets; ++s) {
        MeasurementSet set;
        set.label = "day-" + std::to_string(s + 1);
        set.conditions = r.m.cell;
        set.conditions.pressure_pa =
            std::max(0.0, r.m.cell.pressure_pa + sigma_p * day_rng.gaussian());
        const double day_offset =
            center_shift_hz(r.m.shift, r.m.line, r.m.broadening, set.conditions) - base_shift;
        for (std::size_t j = 0; j < per_set; ++j) {
            set.values.push_back(r.m.configured_lock_value +
                                 FrequencyOffset::from_hertz(day_offset +
                                                             sigma_w * meas_rng.gaussian()));
        }
        sets.push_back(std::move(set));
    }

    const RepeatabilityResult rep = repeatability(sets);

    {
        std::ostringstream out;
        out << "set,label,value_kHz\n";
        for (std::size_t s = 0; s < sets.size(); ++s) {
            for (const auto& v : sets[s].values) {
                out << s + 1 << "," << sets[s].label << "," << v.khz_string() << "\n";
            }
        }
        r.save("measurements.csv", out.str());
    }
    {
        std::ostringstream out;
        out << "label,mean_kHz,std_Hz,peak_to_peak_Hz\n";
        for (std::size_t s = 0; s < sets.size(); ++s) {
            out << sets[s].label << "," << rep.set_means[s].khz_report() << ","
                << fmt(rep.within_set_spreads[s].std_hz) << ","
                << fmt(rep.within_set_spreads[s].peak_to_peak_hz) << "\n";
        }
        r.save("sets.csv", out.str());
    }

    ordered_json set_list = ordered_json::array();
    for (std::size_t s = 0; s < sets.size(); ++s) {
        set_list.push_back({{"label", sets[s].label},
                            {"mean_kHz", rep.set_means[s].khz_report()},
                            {"spread_Hz", rep.within_set_spreads[s].std_hz}});
    }
    ordered_json report;
    report["sets"] = set_list;
    report["grand_mean_kHz"] = rep.grand_mean.khz_report();
    report["std_of_set_means_Hz"] = rep.std_of_set_means_hz;
    r.save("report.json", report.dump(2) + "\n");

    r.results["n_sets"] = n_sets;
    r.results["per_set"] = per_set;
    r.results["std_of_set_means_hz"] = rep.std_of_set_means_hz;
    r.results["grand_mean_khz"] = rep.grand_mean.khz_report();
    r.results["pressure_sigma_pa"] = sigma_p;
    return rep.std_of_set_means_hz >= 50.0 && rep.std_of_set_means_hz <= 5000.0;
}

bool scenario_full_pipeline(Runner& r) {
    const bool noiseless = r.req.config.flag("pipeline.noiseless");
    const auto gates = static_cast<std::size_t>(r.num("pipeline.gates"));
    const double cycle = r.m.counter.gate_s + r.m.counter.dead_time_s;

    LockResult info;
    const TimeSeries locked =
        run_locked_detuning(r, 2.0 * static_cast<double>(gates) * cycle, noiseless, &info);

    TimeSeries locked_a, locked_b;
    locked_a.dt = locked_b.dt = locked.dt;
    locked_a.kind = locked_b.kind = locked.kind;
    const std::size_t half = locked.size() / 2;
    locked_a.values.assign(locked.values.begin(),
                           locked.values.begin() + static_cast<std::ptrdiff_t>(half));
    locked_b.values.assign(locked.values.begin() + static_cast<std::ptrdiff_t>(half),
                           locked.values.end());

    const OpticalFrequency carrier = r.m.ctx.dip_center();
    CombConfig comb_a = r.m.comb;
    if (noiseless) comb_a.ref_instability_1s = 0.0;
    CombConfig comb_b = comb_a;
    comb_b.f_rep = comb_a.f_rep + FrequencyOffset::from_hertz(r.num("comb.f_rep_step"));

    const BeatResult beat = beat_and_mix(carrier, comb_a);
    const FrequencyOffset mixed_b = mixed_for_mode(carrier, beat.p, comb_b);
    const TimeSeries counted_a =
        count_beat(beat.mixed, locked_a, comb_a, r.m.counter, beat.p, r.stream("count-a"));
    const TimeSeries counted_b =
        count_beat(mixed_b, locked_b, comb_b, r.m.counter, beat.p, r.stream("count-b"));

    const double mean_a = mean_of(counted_a.values);
    const double mean_b = mean_of(counted_b.values);
    const ModeNumberResult mode =
        determine_mode_number(mean_a, comb_a.f_rep, mean_b, comb_b.f_rep);
    const OpticalFrequency recon = reconstruct(mean_a, mode.p, comb_a);
    const double sem =
        sample_std(counted_a.values) / std::sqrt(static_cast<double>(counted_a.size()));
    const double offset_hz = (recon - r.m.configured_lock_value).hertz();

    r.save_series_csv("locked.csv", "time_s,offset_Hz", locked);
    r.save_gates_csv("gates_a.csv", counted_a);
    r.save_gates_csv("gates_b.csv", counted_b);

    ordered_json report;
    report["p"] = mode.p;
    report["f_rep_Hz"] = comb_a.f_rep.hertz();
    report["mean_counted_Hz"] = mean_a;
    report["absolute_kHz"] = recon.khz_report();
    report["n_gates"] = counted_a.size();
    report["mode_residual"] = mode.residual;
    report["configured_kHz"] = r.m.configured_lock_value.khz_report();
    report["offset_from_configured_Hz"] = offset_hz;
    report["sem_Hz"] = sem;
    report["stayed_locked"] = info.stayed_locked;
    report["noiseless"] = noiseless;
    r.save("reconstruction.json", report.dump(2) + "\n");

    r.results = report;
    r.results["true_p"] = beat.p;
    r.results["mean_detuning_hz"] = info.mean_detuning_hz;

    if (mode.p != beat.p || !info.stayed_locked) return false;
    if (noiseless) {
        return recon.khz_report() == r.m.configured_lock_value.khz_report() &&
               std::abs(offset_hz) <= r.m.counter.resolution_hz;
    }
    return std::abs(offset_hz) <= 3.0 * sem + r.m.counter.resolution_hz;
}

}  // namespace

ModelBundle build_models(const Config& cfg) {
    ModelBundle m;

    m.broadening.zero_pressure_hwhm_hz = cfg.number("line.hwhm_zero_pressure");
    m.broadening.broadening_hz_per_pa = cfg.number("line.broadening_per_pa");

    m.line.gamma_e = cfg.number("line.gamma_e");
    m.line.gamma_g = cfg.number("line.gamma_g");
    m.line.temperature_k = cfg.number("line.temperature_k");

    m.configured_lock_value = OpticalFrequency::from_khz_string(cfg.text("line.frequency_khz"));
    m.line.doppler_sigma_hz =
        doppler_sigma_hz(m.configured_lock_value.hertz(), m.line.temperature_k);

    m.shift = ShiftModel::calibrated(cfg.number("shift.slope_at_reference"),
                                     cfg.number("line.reference_pressure"),
                                     cfg.number("shift.linear_fraction"), m.broadening, m.line);
    m.shift.power_coeff_hz_per_octave = cfg.number("shift.power_coeff");
    m.shift.power_sign = cfg.number("shift.power_sign");
    m.shift.reference_probe_power_w = cfg.number("shift.reference_probe_power");

    m.cell.pressure_pa = cfg.number("cell.pressure");
    m.cell.probe_power_w = cfg.number("cell.probe_power");
    m.cell.pump_power_w = cfg.number("cell.pump_power");
    m.cell.beam_diameter_m = cfg.number("cell.beam_diameter");
    m.cell.cell_length_m = cfg.number("cell.length");

    // Anchor the unperturbed center so the lock point at the reference
    // conditions reproduces the configured value exactly (same rounding path
    // in both directions).
    CellConditions ref_cond = m.cell;
    ref_cond.pressure_pa = cfg.number("line.reference_pressure");
    ref_cond.probe_power_w = m.shift.reference_probe_power_w;
    m.line.unperturbed_center =
        m.configured_lock_value - center_shift(m.shift, m.line, m.broadening, ref_cond);

    m.ctx.line = m.line;
    m.ctx.broadening = m.broadening;
    m.ctx.shift = m.shift;
    m.ctx.cell = m.cell;
    m.ctx.doppler_depth = cfg.number("detect.doppler_depth");
    m.ctx.dip_contrast = cfg.number("detect.dip_contrast");

    m.probe_mod.mod_freq_hz = cfg.number("probe_mod.freq");
    m.probe_mod.index = cfg.number("probe_mod.index");
    m.probe_mod.path = cfg.text("probe_mod.path") == "aom" ? ModulationConfig::Path::acousto_optic
                                                           : ModulationConfig::Path::electro_optic;
    m.probe_mod.ram_depth = cfg.number("probe_mod.ram_depth");
    m.probe_mod.ram_phase_rad = cfg.number("probe_mod.ram_phase");
    m.probe_mod.aom_spatial_ram = cfg.number("probe_mod.aom_spatial_ram");

    m.pump.mod_freq_hz = cfg.number("pump_mod.freq");
    m.pump.chop_freq_hz = cfg.number("pump_mod.chop_freq");
    m.pump.signal_amplitude = cfg.number("pump_mod.signal_amplitude");

    m.comb.f_rep = OpticalFrequency::from_hertz(cfg.number("comb.f_rep"));
    m.comb.f_0 = OpticalFrequency::from_hertz(cfg.number("comb.f_0"));
    m.comb.ref_instability_1s = cfg.number("comb.ref_instability");

    m.counter.gate_s = cfg.number("counter.gate");
    m.counter.resolution_hz = cfg.number("counter.resolution");
    m.counter.dead_time_s = cfg.number("counter.dead_time");

    m.laser_noise.white_psd_hz2 = cfg.number("laser.white_psd");
    m.laser_noise.flicker_coeff_hz2 = cfg.number("laser.flicker_coeff");
    m.laser_noise.drift_hz_per_s = cfg.number("laser.drift");

    m.prestab.unity_gain_hz = cfg.number("prestab.unity_gain");
    m.prestab.floor_db = cfg.number("prestab.floor_db");

    const std::string source = cfg.text("servo.source");
    m.chain.source = source == "fm_quadrature" ? ErrorChainConfig::Source::fm_quadrature
                     : source == "modulation_transfer"
                         ? ErrorChainConfig::Source::modulation_transfer
                         : ErrorChainConfig::Source::double_demod;
    m.chain.detection_phase_rad = cfg.number("detect.phase");
    m.chain.residual_offset = cfg.number("servo.residual_offset");
    m.chain.meas_noise_hz = cfg.number("servo.meas_noise");

    m.pi.kp = cfg.number("servo.kp");
    m.pi.ki = cfg.number("servo.ki");
    m.pi.update_rate_hz = cfg.number("servo.update_rate");
    m.pi.correction_limit_hz = cfg.number("servo.correction_limit");

    return m;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "lineshape-scan", "notch-fig2",     "ram-reject",    "lock-run",      "comb-measure",
        "allan",          "pressure-shift", "repeatability", "full-pipeline",
    };
    return names;
}

ScenarioResult run_scenario(const ScenarioRequest& req) {
    const auto& names = scenario_names();
    if (std::find(names.begin(), names.end(), req.name) == names.end()) {
        std::string known;
        for (const auto& n : names) known += (known.empty() ? "" : ", ") + n;
        throw ConfigError("unknown scenario '" + req.name + "' (known: " + known + ")");
    }

    Runner r{req, build_models(req.config), std::filesystem::path(req.out_dir),
             ordered_json::object(), {}, Rng::derive(req.seed, req.name)};
    std::filesystem::create_directories(r.dir);

    bool passed = true;
    if (req.name == "lineshape-scan") passed = scenario_lineshape_scan(r);
    else if (req.name == "notch-fig2") passed = scenario_notch_fig2(r);
    else if (req.name == "ram-reject") passed = scenario_ram_reject(r);
    else if (req.name == "lock-run") passed = scenario_lock_run(r);
    else if (req.name == "comb-measure") passed = scenario_comb_measure(r);
    else if (req.name == "allan") passed = scenario_allan(r);
    else if (req.name == "pressure-shift") passed = scenario_pressure_shift(r);
    else if (req.name == "repeatability") passed = scenario_repeatability(r);
    else if (req.name == "full-pipeline") passed = scenario_full_pipeline(r);

    ordered_json summary;
    summary["scenario"] = req.name;
    summary["seed"] = req.seed;
    summary["config_hash"] = req.config.hash_hex();
    summary["version"] = kVersion;
    summary["results"] = r.results;
    if (req.check) summary["check_passed"] = passed;
    const std::string text = summary.dump(2) + "\n";
    r.save("summary.json", text);

    ScenarioResult out;
    out.summary_json = text;
    out.check_passed = passed;
    out.files = std::move(r.files);
    return out;
}

}  // namespace iodinesim

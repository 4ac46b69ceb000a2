#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "iodinesim/analysis.hpp"
#include "iodinesim/sigchain.hpp"
#include "iodinesim/spectrum.hpp"

using namespace iodinesim;

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kQuad = 1.5707963267948966;

// Oracle: Bessel J_n from the defining power series,
// J_n(x) = sum_k (-1)^k (x/2)^(2k+n) / (k! (n+k)!). Converges fast for x <= 5.
double bessel_series(int n, double x) {
    const double half = 0.5 * x;
    double term = 1.0;
    for (int i = 1; i <= n; ++i) term *= half / static_cast<double>(i);
    double sum = term;
    for (int k = 1; k <= 40; ++k) {
        term *= -(half * half) / (static_cast<double>(k) * static_cast<double>(n + k));
        sum += term;
    }
    return sum;
}

HyperfineLine centered_line() {
    HyperfineLine line;
    line.unperturbed_center = OpticalFrequency::from_khz_string("597366498654.62");
    line.gamma_e = 0.8 * 4.0 * M_PI * 1e4;
    line.gamma_g = 0.2 * 4.0 * M_PI * 1e4;
    line.doppler_sigma_hz = doppler_sigma_hz(line.unperturbed_center.hertz(), 300.0);
    return line;
}

// Context with every shift term off, so the dip sits exactly at zero detuning.
LineContext unshifted_ctx(double pressure_pa = 0.33) {
    LineContext ctx;
    ctx.line = centered_line();
    ctx.shift = ShiftModel{};
    ctx.shift.power_coeff_hz_per_octave = 0.0;
    ctx.cell.pressure_pa = pressure_pa;
    return ctx;
}

LineContext shifted_ctx() {
    LineContext ctx;
    ctx.line = centered_line();
    ctx.shift = ShiftModel::calibrated(-38400.0, 0.33, 0.6, ctx.broadening, ctx.line);
    ctx.cell.pressure_pa = 0.33;
    return ctx;
}

double mean_tail(const TimeSeries& ts, double fraction) {
    const std::size_t start = static_cast<std::size_t>(
        static_cast<double>(ts.size()) * (1.0 - fraction));
    double acc = 0.0;
    for (std::size_t i = start; i < ts.size(); ++i) acc += ts.values[i];
    return acc / static_cast<double>(ts.size() - start);
}

double rms_tail(const TimeSeries& ts, double fraction) {
    const std::size_t start = static_cast<std::size_t>(
        static_cast<double>(ts.size()) * (1.0 - fraction));
    double acc = 0.0;
    for (std::size_t i = start; i < ts.size(); ++i) acc += ts.values[i] * ts.values[i];
    return std::sqrt(acc / static_cast<double>(ts.size() - start));
}

// Bisect f over [lo, hi] assuming one sign change.
template <typename F>
double bisect(F f, double lo, double hi) {
    double flo = f(lo);
    REQUIRE(((flo < 0) != (f(hi) < 0)));
    for (int it = 0; it < 200 && hi - lo > 1e-9; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = f(mid);
        if ((flo < 0) != (v < 0)) {
            hi = mid;
        } else {
            lo = mid;
            flo = v;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_SUITE("sigchain") {

TEST_CASE("sideband amplitudes match the series oracle") {
    for (double beta : {0.3, 1.0, 2.0, 4.5}) {
        auto j = sideband_amplitudes(beta, 10);
        REQUIRE(j.size() == 11);
        for (int n = 0; n <= 10; ++n)
            CHECK(j[n] == doctest::Approx(bessel_series(n, beta)).epsilon(1e-10));
    }
    // Frozen reference values at unit index.
    auto j1 = sideband_amplitudes(1.0, 1);
    CHECK(j1[0] == doctest::Approx(0.7651976865579666).epsilon(1e-12));
    CHECK(j1[1] == doctest::Approx(0.4400505857449335).epsilon(1e-12));
}

TEST_CASE("unmodulated carrier has no sidebands") {
    auto j = sideband_amplitudes(0.0, 5);
    CHECK(j[0] == 1.0);
    for (int n = 1; n <= 5; ++n) CHECK(j[n] == 0.0);
}

TEST_CASE("sideband energies sum to one") {
    for (double beta : {0.5, 1.0, 2.0}) {
        auto j = sideband_amplitudes(beta, 20);
        double total = j[0] * j[0];
        for (int n = 1; n <= 20; ++n) total += 2.0 * j[n] * j[n];
        CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("sideband amplitude input checks") {
    CHECK_THROWS_AS(sideband_amplitudes(-0.1, 5), std::invalid_argument);
    CHECK_THROWS_AS(sideband_amplitudes(25.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(sideband_amplitudes(1.0, -1), std::invalid_argument);
}

TEST_CASE("demodulated signal is odd about the dip in both phases") {
    auto ctx = unshifted_ctx();
    ModulationConfig mod;
    const double gamma = ctx.hwhm_hz();
    for (double phase : {0.0, kQuad}) {
        for (int k = 1; k <= 8; ++k) {
            const double d = 0.25 * gamma * k;
            const double plus = fm_demod_signal(ctx, mod, d, phase);
            const double minus = fm_demod_signal(ctx, mod, -d, phase);
            CHECK(plus == doctest::Approx(-minus).epsilon(1e-9));
        }
        CHECK(std::abs(fm_demod_signal(ctx, mod, 0.0, phase)) < 1e-12);
    }
}

TEST_CASE("quadrature zero crossing sits on the dip center") {
    ModulationConfig mod;
    auto ctx = unshifted_ctx();
    CHECK(std::abs(fm_zero_crossing(ctx, mod, kQuad)) < 1e-6);
    // The Doppler background carries no phase, so the crossing tracks the
    // shifted dip exactly (detuning is measured from the shifted center).
    auto shifted = shifted_ctx();
    CHECK(std::abs(fm_zero_crossing(shifted, mod, kQuad)) < 1e-3);
}

TEST_CASE("unresolved sidebands are rejected, not computed") {
    auto ctx = unshifted_ctx();  // hwhm 45 kHz
    ModulationConfig mod;
    mod.mod_freq_hz = 400e3;  // below 10 x hwhm
    CHECK_THROWS_AS(fm_demod_signal(ctx, mod, 0.0, kQuad), std::domain_error);
    mod.mod_freq_hz = 460e3;
    CHECK_NOTHROW(fm_demod_signal(ctx, mod, 0.0, kQuad));
}

TEST_CASE("fitting a noiseless quadrature scan recovers the dip width") {
    auto ctx = unshifted_ctx(0.066);  // hwhm 32 kHz, mod/hwhm ~ 78
    ModulationConfig mod;
    const double gamma = ctx.hwhm_hz();
    std::vector<double> detunings, values;
    for (int i = -80; i <= 80; ++i) {
        const double d = 200e3 * static_cast<double>(i) / 80.0;
        detunings.push_back(d);
        values.push_back(fm_demod_signal(ctx, mod, d, kQuad));
    }
    auto fit = fit_dispersion(detunings, values, dispersion_guess(detunings, values));
    CHECK(fit.converged);
    CHECK(fit.hwhm_hz == doctest::Approx(gamma).epsilon(0.01));
    CHECK(std::abs(fit.center_hz) < 0.01 * gamma);
}

TEST_CASE("residual AM adds an in-phase baseline scaling as m cos(psi)") {
    auto ctx = unshifted_ctx();
    const double far = 400e3;  // well off the dip, well under the mod freq
    ModulationConfig clean;
    const double base = fm_demod_signal(ctx, clean, far, 0.0);

    auto baseline = [&](double m, double psi) {
        ModulationConfig mod;
        mod.ram_depth = m;
        mod.ram_phase_rad = psi;
        return fm_demod_signal(ctx, mod, far, 0.0) - base;
    };

    CHECK(baseline(2e-4, 0.7) / baseline(1e-4, 0.7) == doctest::Approx(2.0).epsilon(0.02));
    CHECK(baseline(1e-4, 0.7) / baseline(1e-4, 0.0) ==
          doctest::Approx(std::cos(0.7)).epsilon(0.02));
}

TEST_CASE("acousto-optic path stacks its spatial AM on top") {
    auto ctx = unshifted_ctx();
    ModulationConfig eom;
    eom.ram_depth = 1e-4;
    eom.ram_phase_rad = 0.7;
    ModulationConfig aom = eom;
    aom.path = ModulationConfig::Path::acousto_optic;
    aom.ram_depth = 0.4e-4;
    aom.aom_spatial_ram = 0.6e-4;
    CHECK(aom.effective_ram() == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(fm_demod_signal(ctx, aom, 100e3, 0.0) ==
          doctest::Approx(fm_demod_signal(ctx, eom, 100e3, 0.0)).epsilon(1e-12));
}

TEST_CASE("lock point displacement is linear in the AM depth") {
    auto ctx = unshifted_ctx();
    ModulationConfig mod;
    mod.ram_phase_rad = 0.7;

    mod.ram_depth = 0.0;
    CHECK(ram_lock_shift(ctx, mod, kQuad) == 0.0);

    mod.ram_depth = 5e-5;
    const double s_half = ram_lock_shift(ctx, mod, kQuad);
    mod.ram_depth = 1e-4;
    const double s_full = ram_lock_shift(ctx, mod, kQuad);
    CHECK(s_full / s_half == doctest::Approx(2.0).epsilon(0.05));

    // 40 dB of AM rejection shrinks the displacement to 1% +- 10%.
    mod.ram_depth = 1e-6;
    const double s_rejected = ram_lock_shift(ctx, mod, kQuad);
    CHECK(s_rejected / s_full == doctest::Approx(0.01).epsilon(0.10));
}

TEST_CASE("AM displacement agrees with the linearized estimate") {
    auto ctx = unshifted_ctx();
    ModulationConfig mod;
    mod.ram_depth = 1e-5;
    mod.ram_phase_rad = 0.7;

    // Oracle: one Newton step -signal(0)/slope(0) of the contaminated signal
    // around the clean crossing.
    const double h = 10.0;
    ModulationConfig clean;
    const double slope = (fm_demod_signal(ctx, clean, h, kQuad) -
                          fm_demod_signal(ctx, clean, -h, kQuad)) /
                         (2.0 * h);
    const double predicted = -fm_demod_signal(ctx, mod, 0.0, kQuad) / slope;
    CHECK(ram_lock_shift(ctx, mod, kQuad) == doctest::Approx(predicted).epsilon(0.02));
}

TEST_CASE("pump transfer signal is odd with a positive central slope") {
    auto ctx = unshifted_ctx();
    PumpModConfig pump;
    CHECK(modulation_transfer_error(ctx, pump, 0.0) == 0.0);
    for (double d : {2e3, 10e3, 30e3, 80e3}) {
        CHECK(modulation_transfer_error(ctx, pump, d) ==
              doctest::Approx(-modulation_transfer_error(ctx, pump, -d)).epsilon(1e-12));
    }
    CHECK(modulation_transfer_error(ctx, pump, 5e3) > 0.0);
    CHECK_THROWS_AS(modulation_transfer_error(ctx, pump, 3.0 * ctx.line.doppler_sigma_hz),
                    std::domain_error);
}

TEST_CASE("offset on the transfer signal moves its crossing by -offset/slope") {
    auto ctx = unshifted_ctx();
    PumpModConfig pump;
    const double gamma = ctx.hwhm_hz();
    double peak = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double d = 3.0 * gamma * static_cast<double>(i) / 100.0;
        peak = std::max(peak, std::abs(modulation_transfer_error(ctx, pump, d)));
    }
    const double b = 0.01 * peak;
    const double h = 10.0;
    const double slope = (modulation_transfer_error(ctx, pump, h) -
                          modulation_transfer_error(ctx, pump, -h)) /
                         (2.0 * h);
    const double crossing = bisect(
        [&](double d) { return modulation_transfer_error(ctx, pump, d, b); }, -gamma, gamma);
    CHECK(crossing == doctest::Approx(-b / slope).epsilon(0.02));
}

TEST_CASE("second demodulation keeps half the dip signal and none of the offset") {
    auto ctx = unshifted_ctx();
    PumpModConfig pump;
    for (double d : {1e3, 15e3, 40e3}) {
        const double dip_only = modulation_transfer_error(ctx, pump, d, 0.0);
        CHECK(double_demod_error(ctx, pump, d, 0.0) == doctest::Approx(0.5 * dip_only));
        // Any pump-independent offset drops out exactly.
        CHECK(double_demod_error(ctx, pump, d, 123.45) ==
              doctest::Approx(0.5 * dip_only).epsilon(1e-12));
    }
}

TEST_CASE("crossing is immune to background offsets up to 30 percent of peak") {
    auto ctx = unshifted_ctx();
    PumpModConfig pump;
    const double gamma = ctx.hwhm_hz();
    double peak = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double d = 3.0 * gamma * static_cast<double>(i) / 100.0;
        peak = std::max(peak, std::abs(modulation_transfer_error(ctx, pump, d)));
    }
    for (double frac : {0.1, 0.3}) {
        const double b = frac * peak;
        const double dd_crossing = bisect(
            [&](double d) { return double_demod_error(ctx, pump, d, b); }, -gamma, gamma);
        CHECK(std::abs(dd_crossing) < 1.0);
        const double single_crossing = bisect(
            [&](double d) { return modulation_transfer_error(ctx, pump, d, b); }, -gamma, gamma);
        CHECK(std::abs(single_crossing) > 100.0);
    }
}

TEST_CASE("lock-in settles to the matched amplitude and nulls the quadrature") {
    const double fs = 1e6;
    const double a = 0.8;
    LockInConfig cfg;
    cfg.ref_freq_hz = 125e3;
    cfg.time_constant_s = 10e-3;

    TimeSeries in;
    in.dt = 1.0 / fs;
    in.values.resize(300000);
    for (std::size_t i = 0; i < in.size(); ++i)
        in.values[i] = a * std::cos(kTwoPi * cfg.ref_freq_hz * static_cast<double>(i) / fs);
    auto matched = lock_in(in, cfg);
    CHECK(mean_tail(matched, 0.2) == doctest::Approx(a).epsilon(1e-3));

    for (std::size_t i = 0; i < in.size(); ++i)
        in.values[i] = a * std::sin(kTwoPi * cfg.ref_freq_hz * static_cast<double>(i) / fs);
    auto quad = lock_in(in, cfg);
    CHECK(std::abs(mean_tail(quad, 0.2)) < 1e-3 * a);
}

TEST_CASE("detuned input attenuates like a single pole") {
    const double fs = 1e6;
    const double a = 1.0;
    LockInConfig cfg;
    cfg.ref_freq_hz = 125e3;
    cfg.time_constant_s = 10e-3;
    const double df = 10.0 / cfg.time_constant_s;  // 1 kHz off the reference

    TimeSeries in;
    in.dt = 1.0 / fs;
    in.values.resize(400000);
    for (std::size_t i = 0; i < in.size(); ++i)
        in.values[i] = a * std::cos(kTwoPi * (cfg.ref_freq_hz + df) * static_cast<double>(i) / fs);
    auto out = lock_in(in, cfg);
    const double envelope = rms_tail(out, 0.5) * std::sqrt(2.0);

    // Oracle: one-pole response 1/sqrt(1 + (2 pi df tau)^2).
    const double predicted = a / std::sqrt(1.0 + std::pow(kTwoPi * df * cfg.time_constant_s, 2));
    CHECK(envelope < 0.1 * a);  // >= 20 dB down
    CHECK(envelope == doctest::Approx(predicted).epsilon(0.10));
}

TEST_CASE("lock-in is linear") {
    const double fs = 1e6;
    LockInConfig cfg;
    cfg.ref_freq_hz = 125e3;
    cfg.time_constant_s = 1e-3;
    TimeSeries x, y;
    x.dt = y.dt = 1.0 / fs;
    x.values.resize(20000);
    y.values.resize(20000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double t = static_cast<double>(i) / fs;
        x.values[i] = std::cos(kTwoPi * 125e3 * t) + 0.2 * std::sin(kTwoPi * 5e3 * t);
        y.values[i] = 0.5 * std::cos(kTwoPi * 125e3 * t + 0.3) + 0.1;
    }
    TimeSeries mix = x;
    for (std::size_t i = 0; i < x.size(); ++i)
        mix.values[i] = 2.5 * x.values[i] - 1.25 * y.values[i];
    auto lx = lock_in(x, cfg), ly = lock_in(y, cfg), lmix = lock_in(mix, cfg);
    for (std::size_t i = 0; i < x.size(); ++i) {
        CHECK(lmix.values[i] ==
              doctest::Approx(2.5 * lx.values[i] - 1.25 * ly.values[i]).epsilon(1e-9));
    }
}

TEST_CASE("undersampled demodulation is rejected") {
    LockInConfig cfg;
    cfg.ref_freq_hz = 125e3;
    TimeSeries in;
    in.dt = 1.0 / 400e3;  // only 3.2 samples per cycle
    in.values.assign(100, 0.0);
    CHECK_THROWS_AS(lock_in(in, cfg), std::invalid_argument);
    CHECK_THROWS_AS(chop_demod(in, 200e3, 0.01), std::invalid_argument);
    cfg.time_constant_s = 0.0;
    CHECK_THROWS_AS(LockInFilter(cfg, 1e6), std::invalid_argument);
}

TEST_CASE("square-wave demodulation of an aligned gate averages to one half") {
    const double fs = 100e3;
    TimeSeries in;
    in.dt = 1.0 / fs;
    in.values.resize(100000);
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double c = std::cos(kTwoPi * 200.0 * static_cast<double>(i) / fs);
        in.values[i] = c >= 0.0 ? 1.0 : 0.0;
    }
    auto out = chop_demod(in, 200.0, 0.02);
    CHECK(mean_tail(out, 0.4) == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("sampled detection chain agrees with the closed forms") {
    auto ctx = unshifted_ctx();
    PumpModConfig pump;
    const double d = 15e3;
    const double b = 0.02;
    DetectorConfig det;
    det.sample_rate_hz = 1e6;

    // Unchopped: carrier amplitude = dip term + offset.
    auto record = mt_detector_record(ctx, pump, d, b, false, 0.3, det);
    LockInConfig first;
    first.ref_freq_hz = pump.mod_freq_hz;
    first.time_constant_s = 10e-3;
    CHECK(mean_tail(lock_in(record, first), 0.2) ==
          doctest::Approx(modulation_transfer_error(ctx, pump, d, b)).epsilon(0.01));

    // Chopped and double demodulated: offset gone, dip term halved.
    auto chopped = mt_detector_record(ctx, pump, d, b, true, 1.0, det);
    first.time_constant_s = 20e-6;  // fast enough to pass the 200 Hz gate
    auto demod = chop_demod(lock_in(chopped, first), pump.chop_freq_hz, 20e-3);
    CHECK(mean_tail(demod, 0.4) ==
          doctest::Approx(double_demod_error(ctx, pump, d, b)).epsilon(0.02));
}

TEST_CASE("photodetector record carries the expected beat power") {
    auto ctx = unshifted_ctx();
    ModulationConfig mod;
    const double d = 0.5 * ctx.hwhm_hz();
    DetectorConfig det;

    // |2 H1| from the two demodulation phases.
    const double re = fm_demod_signal(ctx, mod, d, 0.0);
    const double im = fm_demod_signal(ctx, mod, d, kQuad);
    const double amp = std::hypot(re, im);

    auto rec = detector_record(ctx, mod, d, 0.02, det);
    auto psd = welch_psd(rec.values, det.sample_rate_hz);
    CHECK(band_power(psd, mod.mod_freq_hz, 20e3) ==
          doctest::Approx(amp * amp / 2.0).epsilon(0.05));
}

TEST_CASE("photodetector noise floor matches the configured density") {
    auto ctx = unshifted_ctx();
    ModulationConfig mod;
    DetectorConfig det;
    det.noise_psd = 1e-12;
    det.seed = 5;
    auto rec = detector_record(ctx, mod, 0.0, 0.02, det);
    auto psd = welch_psd(rec.values, det.sample_rate_hz);
    // Between harmonics only the white floor remains.
    CHECK(band_power(psd, 3.7e6, 200e3) / 200e3 == doctest::Approx(1e-12).epsilon(0.2));

    auto again = detector_record(ctx, mod, 0.0, 0.02, det);
    CHECK(rec.values == again.values);
}

TEST_CASE("photodetector input checks") {
    auto ctx = unshifted_ctx();
    ModulationConfig mod;
    DetectorConfig det;
    det.sample_rate_hz = 9e6;  // below 4 x 2.5 MHz
    CHECK_THROWS_AS(detector_record(ctx, mod, 0.0, 0.01, det), std::invalid_argument);
    det.sample_rate_hz = 12.5e6;
    CHECK_THROWS_AS(detector_record(ctx, mod, 0.0, 0.0, det), std::invalid_argument);
    ModulationConfig slow;
    slow.mod_freq_hz = 100e3;  // unresolved against the 45 kHz dip
    CHECK_THROWS_AS(detector_record(ctx, slow, 0.0, 0.01, det), std::domain_error);
}

}  // TEST_SUITE

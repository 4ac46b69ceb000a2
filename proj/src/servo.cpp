#include "iodinesim/servo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "iodinesim/rng.hpp"
#include "iodinesim/spectrum.hpp"

namespace iodinesim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Flicker FM by spectral shaping: gaussian spectrum scaled to the one-sided
// PSD h_-1 / f, synthesized on a padded power-of-two grid.
std::vector<double> flicker_noise(double coeff_hz2, std::size_t n, double rate_hz, Rng& rng) {
    std::size_t padded = 1;
    while (padded < 2 * n) padded <<= 1;
    const double df = rate_hz / static_cast<double>(padded);
    std::vector<std::complex<double>> spec(padded / 2 + 1, {0.0, 0.0});
    for (std::size_t k = 1; k < spec.size(); ++k) {
        const double f = df * static_cast<double>(k);
        const double psd = coeff_hz2 / f;
        // E|X_k|^2 = padded * rate * S(f) / 2 reproduces the target PSD after irfft.
        const double scale = std::sqrt(psd * rate_hz * static_cast<double>(padded) / 2.0) * 0.7071067811865476;
        spec[k] = {scale * rng.gaussian(), scale * rng.gaussian()};
    }
    spec[0] = {0.0, 0.0};
    if (padded % 2 == 0) spec[padded / 2] = {std::real(spec[padded / 2]) * std::sqrt(2.0), 0.0};
    auto x = irfft(spec, padded);
    x.resize(n);
    return x;
}

}  // namespace

TimeSeries simulate_free_laser(const NoiseModel& noise, double duration_s, double rate_hz,
                               std::uint64_t seed) {
    if (duration_s <= 0 || rate_hz <= 0)
        throw std::invalid_argument("simulate_free_laser: duration and rate must be > 0");
    if (noise.white_psd_hz2 < 0 || noise.flicker_coeff_hz2 < 0)
        throw std::invalid_argument("simulate_free_laser: noise levels must be >= 0");
    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * rate_hz));
    if (n == 0) throw std::invalid_argument("simulate_free_laser: empty record");

    TimeSeries out;
    out.dt = 1.0 / rate_hz;
    out.kind = TimeSeries::Kind::fractional_frequency;  // values are Hz offsets
    out.values.assign(n, 0.0);

    if (noise.white_psd_hz2 > 0) {
        Rng rng(Rng::derive(seed, "free-laser-white"));
        const double sigma = std::sqrt(noise.white_psd_hz2 * rate_hz / 2.0);
        for (auto& v : out.values) v += sigma * rng.gaussian();
    }
    if (noise.flicker_coeff_hz2 > 0) {
        Rng rng(Rng::derive(seed, "free-laser-flicker"));
        auto fl = flicker_noise(noise.flicker_coeff_hz2, n, rate_hz, rng);
        for (std::size_t i = 0; i < n; ++i) out.values[i] += fl[i];
    }
    if (noise.drift_hz_per_s != 0) {
        for (std::size_t i = 0; i < n; ++i)
            out.values[i] += noise.drift_hz_per_s * static_cast<double>(i) * out.dt;
    }
    return out;
}

TimeSeries prestabilize(const TimeSeries& free_run, const PrestabConfig& cfg) {
    require_valid(free_run, "prestabilize");
    if (cfg.unity_gain_hz < 0) throw std::invalid_argument("prestabilize: unity gain must be >= 0");
    TimeSeries out = free_run;
    if (cfg.unity_gain_hz == 0.0) return out;  // no loop, no shaping
    const double fs = 1.0 / free_run.dt;
    if (cfg.unity_gain_hz >= 0.25 * fs)
        throw std::invalid_argument("prestabilize: unity gain too close to Nyquist (need < fs/4)");

    // One-pole high-pass prewarped so the -3 dB point lands exactly on f_ug,
    // plus the complementary low-pass scaled to the suppression floor.
    const double wa = std::tan(M_PI * cfg.unity_gain_hz * free_run.dt);
    const double a = (1.0 - wa) / (1.0 + wa);
    const double g_hp = 1.0 / (1.0 + wa);
    const double g_lp = wa / (1.0 + wa);
    const double floor_lin = std::pow(10.0, cfg.floor_db / 20.0);

    double hp = 0.0, lp = 0.0, x_prev = 0.0;
    for (std::size_t i = 0; i < out.values.size(); ++i) {
        const double x = free_run.values[i];
        if (i == 0) {
            hp = g_hp * x;
            lp = g_lp * x;
        } else {
            hp = a * hp + g_hp * (x - x_prev);
            lp = a * lp + g_lp * (x + x_prev);
        }
        x_prev = x;
        out.values[i] = hp + floor_lin * lp;
    }
    return out;
}

LockResult close_lock(const TimeSeries& free_laser, const LineContext& ctx,
                      const ModulationConfig& probe_mod, const PumpModConfig& pump,
                      const ErrorChainConfig& chain, const PiConfig& pi,
                      double initial_offset_hz, std::uint64_t seed) {
    require_valid(free_laser, "close_lock");
    const double dt = 1.0 / pi.update_rate_hz;
    if (std::abs(free_laser.dt - dt) > 1e-12 * dt)
        throw std::invalid_argument("close_lock: free-laser record must be sampled at the update rate");
    const double gamma = ctx.hwhm_hz();
    if (std::abs(initial_offset_hz) >= gamma)
        throw std::invalid_argument("close_lock: initial offset outside the capture range (|offset| < HWHM)");
    if (pi.ki <= 0) throw std::invalid_argument("close_lock: ki must be > 0");
    if (pi.ki * dt >= 1.0)
        throw std::invalid_argument("close_lock: ki too large for the update rate (loop unstable)");

    auto raw_error = [&](double detuning) {
        switch (chain.source) {
            case ErrorChainConfig::Source::fm_quadrature:
                return fm_demod_signal(ctx, probe_mod, detuning, chain.detection_phase_rad);
            case ErrorChainConfig::Source::modulation_transfer:
                return modulation_transfer_error(ctx, pump, detuning, chain.residual_offset);
            case ErrorChainConfig::Source::double_demod:
            default:
                return double_demod_error(ctx, pump, detuning, chain.residual_offset);
        }
    };

    // Normalize so the error is in Hz near the lock point.
    const double h = 1.0;  // Hz; discriminant slopes vary over ~HWHM >> 1 Hz
    const double slope = (raw_error(h) - raw_error(-h)) / (2.0 * h);
    if (slope == 0.0 || !std::isfinite(slope))
        throw std::runtime_error("close_lock: error-signal slope vanishes at the lock point");

    Rng rng(Rng::derive(seed, "lock-meas-noise"));
    const double capture = 2.0 * gamma;

    LockResult res;
    res.locked.dt = dt;
    res.locked.kind = TimeSeries::Kind::fractional_frequency;  // Hz offsets
    res.locked.values.resize(free_laser.size());
    res.in_lock.assign(free_laser.size(), 1);

    double u = 0.0;       // accumulated correction, Hz
    double e_prev = 0.0;
    bool lost = false;
    for (std::size_t i = 0; i < free_laser.size(); ++i) {
        const double detuning = free_laser.values[i] + initial_offset_hz - u;
        double e = raw_error(detuning) / slope;
        if (chain.meas_noise_hz > 0) e += chain.meas_noise_hz * rng.gaussian();
        u += pi.kp * (e - e_prev) + pi.ki * dt * e;
        u = std::clamp(u, -pi.correction_limit_hz, pi.correction_limit_hz);
        e_prev = e;
        res.locked.values[i] = detuning;
        if (std::abs(detuning) > capture) lost = true;
        if (lost) res.in_lock[i] = 0;
    }
    res.stayed_locked = !lost;

    const std::size_t half = free_laser.size() / 2;
    double acc = 0.0;
    for (std::size_t i = half; i < free_laser.size(); ++i) acc += res.locked.values[i];
    res.mean_detuning_hz = acc / static_cast<double>(free_laser.size() - half);
    return res;
}

}  // namespace iodinesim

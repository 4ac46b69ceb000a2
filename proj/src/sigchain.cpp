#include "iodinesim/sigchain.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "iodinesim/rng.hpp"

namespace iodinesim {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

using cplx = std::complex<double>;

// Field absorbance of the medium at detuning from the shifted dip center.
// The Doppler gaussian is centered at the unperturbed line, i.e. at -shift in
// this frame. Its dispersion partner is linear over sub-MHz scans and drops
// out of the resolved-sideband FM combination, so only the dip carries phase.
struct Medium {
    double gamma, shift, sigma, bg_depth, dip_depth;

    explicit Medium(const LineContext& ctx)
        : gamma(ctx.hwhm_hz()),
          shift(ctx.shift_hz()),
          sigma(ctx.line.doppler_sigma_hz),
          bg_depth(ctx.doppler_depth),
          dip_depth(ctx.dip_contrast * ctx.doppler_depth) {
        if (sigma <= 0) throw std::invalid_argument("sigchain: doppler sigma must be > 0");
    }

    cplx field_transmission(double detuning_hz) const {
        const double du = detuning_hz + shift;  // relative to the unperturbed center
        const double x = detuning_hz / gamma;
        const double lor = 1.0 / (1.0 + x * x);
        const double absorbance = bg_depth * std::exp(-du * du / (2.0 * sigma * sigma)) - dip_depth * lor;
        const double phase = -dip_depth * x * lor;  // dip's Kramers-Kronig partner
        return std::exp(cplx(-absorbance, phase));
    }
};

// Sideband field amplitudes including RAM: c_n = J_n + (m/2)(e^{i psi} J_{n-1}
// + e^{-i psi} J_{n+1}). Index 0 of the returned vector is n = -order_span.
std::vector<cplx> sideband_fields(const ModulationConfig& mod, int order_span) {
    const double beta = mod.index;
    const double m = mod.effective_ram();
    if (m < 0 || m >= 1) throw std::invalid_argument("sigchain: RAM depth must be in [0, 1)");
    std::vector<double> j(order_span + 2);
    for (int k = 0; k <= order_span + 1; ++k) j[k] = std::cyl_bessel_j(k, beta);
    auto jn = [&](int n) {
        int a = n < 0 ? -n : n;
        double v = j[a];
        return (n < 0 && (a & 1)) ? -v : v;  // J_{-n} = (-1)^n J_n
    };
    const cplx e_pos = std::polar(0.5 * m, mod.ram_phase_rad);
    const cplx e_neg = std::conj(e_pos);
    std::vector<cplx> c(2 * order_span + 1);
    for (int n = -order_span; n <= order_span; ++n)
        c[n + order_span] = jn(n) + e_pos * jn(n - 1) + e_neg * jn(n + 1);
    return c;
}

int order_span_for(double beta) { return 12 + static_cast<int>(std::ceil(beta)); }

// Photocurrent Fourier coefficient at q * mod_freq: H_q = sum_n a_n conj(a_{n-q})
// where a_n is the transmitted sideband field.
std::vector<cplx> photocurrent_harmonics(const LineContext* ctx, const ModulationConfig& mod,
                                         double detuning_hz, int max_q) {
    const int span = order_span_for(mod.index);
    auto c = sideband_fields(mod, span);
    std::vector<cplx> a(c.size());
    if (ctx) {
        Medium med(*ctx);
        for (int n = -span; n <= span; ++n)
            a[n + span] = c[n + span] * med.field_transmission(detuning_hz + n * mod.mod_freq_hz);
    } else {
        a = c;
    }
    std::vector<cplx> h(max_q + 1, cplx(0.0, 0.0));
    for (int q = 0; q <= max_q; ++q)
        for (int n = -span + q; n <= span; ++n)
            h[q] += a[n + span] * std::conj(a[n - q + span]);
    return h;
}

void check_fm_regime(const LineContext& ctx, const ModulationConfig& mod) {
    if (mod.mod_freq_hz <= 10.0 * ctx.hwhm_hz())
        throw std::domain_error("fm_demod_signal: unresolved sidebands (mod freq <= 10 x HWHM)");
}

double mt_dispersion(double u) { return u / (1.0 + u * u); }

double mt_core(const LineContext& ctx, const PumpModConfig& pump, double detuning_hz) {
    const double gamma = ctx.hwhm_hz();
    if (std::abs(detuning_hz) > 2.0 * ctx.line.doppler_sigma_hz)
        throw std::domain_error("modulation_transfer_error: detuning beyond the Doppler profile");
    const double x = detuning_hz / gamma;
    const double xp = (detuning_hz + pump.mod_freq_hz) / gamma;
    const double xm = (detuning_hz - pump.mod_freq_hz) / gamma;
    const double dip_depth = ctx.dip_contrast * ctx.doppler_depth;
    return pump.signal_amplitude * dip_depth *
           (2.0 * mt_dispersion(x) - mt_dispersion(xp) - mt_dispersion(xm));
}

}  // namespace

std::vector<double> sideband_amplitudes(double beta, int max_order) {
    if (beta < 0 || beta > 20) throw std::invalid_argument("sideband_amplitudes: index must be in [0, 20]");
    if (max_order < 0) throw std::invalid_argument("sideband_amplitudes: max_order must be >= 0");
    std::vector<double> out(max_order + 1);
    for (int k = 0; k <= max_order; ++k) out[k] = std::cyl_bessel_j(k, beta);
    return out;
}

double fm_demod_signal(const LineContext& ctx, const ModulationConfig& mod,
                       double detuning_hz, double detection_phase_rad) {
    check_fm_regime(ctx, mod);
    auto h = photocurrent_harmonics(&ctx, mod, detuning_hz, 1);
    return 2.0 * std::real(h[1] * std::polar(1.0, -detection_phase_rad));
}

double fm_zero_crossing(const LineContext& ctx, const ModulationConfig& mod,
                        double detection_phase_rad) {
    const double gamma = ctx.hwhm_hz();
    auto f = [&](double d) { return fm_demod_signal(ctx, mod, d, detection_phase_rad); };

    // Bracket the crossing on a grid over +/- 2 HWHM, then bisect.
    const int kGrid = 64;
    double lo = -2.0 * gamma, hi = 2.0 * gamma;
    double prev_d = lo, prev_v = f(lo);
    bool found = false;
    for (int i = 1; i <= kGrid; ++i) {
        double d = lo + (hi - lo) * static_cast<double>(i) / kGrid;
        double v = f(d);
        if (prev_v == 0.0) return prev_d;
        if ((prev_v < 0) != (v < 0)) {
            lo = prev_d;
            hi = d;
            found = true;
            break;
        }
        prev_d = d;
        prev_v = v;
    }
    if (!found) throw std::runtime_error("fm_zero_crossing: no zero crossing within +/- 2 HWHM");

    double flo = f(lo);
    for (int it = 0; it < 200 && (hi - lo) > 1e-9; ++it) {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((flo < 0) != (fm < 0)) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    return 0.5 * (lo + hi);
}

double ram_lock_shift(const LineContext& ctx, const ModulationConfig& mod,
                      double detection_phase_rad) {
    ModulationConfig clean = mod;
    clean.ram_depth = 0.0;
    clean.aom_spatial_ram = 0.0;
    const double base = fm_zero_crossing(ctx, clean, detection_phase_rad);
    const double with_ram = fm_zero_crossing(ctx, mod, detection_phase_rad);
    return with_ram - base;
}

double modulation_transfer_error(const LineContext& ctx, const PumpModConfig& pump,
                                 double detuning_hz, double residual_offset) {
    return mt_core(ctx, pump, detuning_hz) + residual_offset;
}

double double_demod_error(const LineContext& ctx, const PumpModConfig& pump,
                          double detuning_hz, double residual_offset) {
    // Chop high: dip signal + background; chop low: background only. The sign-
    // weighted average keeps half the pump-dependent part and none of the rest.
    const double high = mt_core(ctx, pump, detuning_hz) + residual_offset;
    const double low = residual_offset;
    return 0.5 * (high - low);
}

LockInFilter::LockInFilter(const LockInConfig& cfg, double sample_rate_hz) {
    if (cfg.time_constant_s <= 0) throw std::invalid_argument("lock_in: time constant must be > 0");
    if (cfg.ref_freq_hz <= 0) throw std::invalid_argument("lock_in: reference frequency must be > 0");
    if (sample_rate_hz <= 4.0 * cfg.ref_freq_hz)
        throw std::invalid_argument("lock_in: undersampled input (need rate > 4 x reference)");
    const double dt = 1.0 / sample_rate_hz;
    omega_dt_ = kTwoPi * cfg.ref_freq_hz * dt;
    ref_phase_ = cfg.phase_rad;
    phase_ = 0.0;
    alpha_ = 1.0 - std::exp(-dt / cfg.time_constant_s);
}

double LockInFilter::process(double x) {
    const double mixed = 2.0 * x * std::cos(phase_ + ref_phase_);
    phase_ += omega_dt_;
    if (phase_ > kTwoPi) phase_ -= kTwoPi;
    state_ += alpha_ * (mixed - state_);
    ++n_;
    return state_;
}

TimeSeries lock_in(const TimeSeries& in, const LockInConfig& cfg) {
    require_valid(in, "lock_in");
    LockInFilter f(cfg, 1.0 / in.dt);
    TimeSeries out;
    out.dt = in.dt;
    out.kind = TimeSeries::Kind::demodulated;
    out.values.reserve(in.size());
    for (double x : in.values) out.values.push_back(f.process(x));
    return out;
}

TimeSeries chop_demod(const TimeSeries& in, double chop_freq_hz, double time_constant_s) {
    require_valid(in, "chop_demod");
    if (chop_freq_hz <= 0 || time_constant_s <= 0)
        throw std::invalid_argument("chop_demod: chop frequency and time constant must be > 0");
    if (1.0 / in.dt <= 4.0 * chop_freq_hz)
        throw std::invalid_argument("chop_demod: undersampled input");
    const double alpha = 1.0 - std::exp(-in.dt / time_constant_s);
    TimeSeries out;
    out.dt = in.dt;
    out.kind = TimeSeries::Kind::demodulated;
    out.values.reserve(in.size());
    double y = 0.0;
    for (std::size_t i = 0; i < in.size(); ++i) {
        const double c = std::cos(kTwoPi * chop_freq_hz * static_cast<double>(i) * in.dt);
        const double r = c >= 0.0 ? 1.0 : -1.0;
        y += alpha * (in.values[i] * r - y);
        out.values.push_back(y);
    }
    return out;
}

TimeSeries detector_record(const LineContext& ctx, const ModulationConfig& mod,
                           double detuning_hz, double duration_s, const DetectorConfig& det,
                           bool with_medium) {
    if (duration_s <= 0) throw std::invalid_argument("detector_record: duration must be > 0");
    if (det.sample_rate_hz <= 4.0 * mod.mod_freq_hz)
        throw std::invalid_argument("detector_record: sample rate must exceed 4 x mod freq");
    if (with_medium) check_fm_regime(ctx, mod);

    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * det.sample_rate_hz));
    const int span = order_span_for(mod.index);
    // Band-limit to the harmonics a real detector below Nyquist would pass.
    const int max_q = std::min(2 * span, static_cast<int>((0.5 * det.sample_rate_hz) / mod.mod_freq_hz));
    auto h = photocurrent_harmonics(with_medium ? &ctx : nullptr, mod, detuning_hz, max_q);

    const double dt = 1.0 / det.sample_rate_hz;
    std::vector<cplx> rot(max_q + 1), ph(max_q + 1);
    for (int q = 0; q <= max_q; ++q) {
        rot[q] = std::polar(1.0, kTwoPi * q * mod.mod_freq_hz * dt);
        ph[q] = cplx(1.0, 0.0);
    }

    Rng rng(det.seed);
    const double sigma = det.noise_psd > 0 ? std::sqrt(det.noise_psd * det.sample_rate_hz / 2.0) : 0.0;

    TimeSeries out;
    out.dt = dt;
    out.kind = TimeSeries::Kind::detector;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double v = std::real(h[0]);
        for (int q = 1; q <= max_q; ++q) {
            v += 2.0 * std::real(h[q] * ph[q]);
            ph[q] *= rot[q];
        }
        if (sigma > 0) v += sigma * rng.gaussian();
        out.values[i] = v;
    }
    return out;
}

TimeSeries mt_detector_record(const LineContext& ctx, const PumpModConfig& pump,
                              double detuning_hz, double residual_offset, bool chopped,
                              double duration_s, const DetectorConfig& det) {
    if (duration_s <= 0) throw std::invalid_argument("mt_detector_record: duration must be > 0");
    if (det.sample_rate_hz <= 4.0 * pump.mod_freq_hz)
        throw std::invalid_argument("mt_detector_record: sample rate must exceed 4 x mod freq");
    const double amp = mt_core(ctx, pump, detuning_hz);
    const std::size_t n = static_cast<std::size_t>(std::llround(duration_s * det.sample_rate_hz));
    const double dt = 1.0 / det.sample_rate_hz;

    Rng rng(det.seed);
    const double sigma = det.noise_psd > 0 ? std::sqrt(det.noise_psd * det.sample_rate_hz / 2.0) : 0.0;

    TimeSeries out;
    out.dt = dt;
    out.kind = TimeSeries::Kind::detector;
    out.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        double gate = 1.0;
        if (chopped) gate = std::cos(kTwoPi * pump.chop_freq_hz * t) >= 0.0 ? 1.0 : 0.0;
        double v = (amp * gate + residual_offset) * std::cos(kTwoPi * pump.mod_freq_hz * t);
        if (sigma > 0) v += sigma * rng.gaussian();
        out.values[i] = v;
    }
    return out;
}

}  // namespace iodinesim

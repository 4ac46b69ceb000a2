#include "iodinesim/canceller.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace iodinesim {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kWeightLimit = 1e6;
}  // namespace

LmsNotch::LmsNotch(const LmsNotchConfig& cfg) {
    if (!(cfg.mu > 0.0 && cfg.mu < 1.0))
        throw std::invalid_argument("LmsNotch: mu must lie in (0, 1)");
    if (cfg.ref_freq_hz <= 0 || cfg.sample_rate_hz <= 2.0 * cfg.ref_freq_hz)
        throw std::invalid_argument("LmsNotch: need 0 < ref_freq < sample_rate / 2");
    mu_ = cfg.mu;
    omega_dt_ = kTwoPi * cfg.ref_freq_hz / cfg.sample_rate_hz;
}

double LmsNotch::step(double x, double* estimate) {
    const double c = std::cos(phase_);
    const double s = std::sin(phase_);
    phase_ += omega_dt_;
    if (phase_ > kTwoPi) phase_ -= kTwoPi;
    ++n_;

    const double est = w_cos_ * c + w_sin_ * s;
    const double y = x - est;
    w_cos_ += 2.0 * mu_ * y * c;
    w_sin_ += 2.0 * mu_ * y * s;
    if (std::abs(w_cos_) > kWeightLimit || std::abs(w_sin_) > kWeightLimit ||
        !std::isfinite(w_cos_) || !std::isfinite(w_sin_)) {
        std::ostringstream msg;
        msg << "LmsNotch: weights diverged at step " << n_ << " (w_cos=" << w_cos_
            << ", w_sin=" << w_sin_ << ", mu=" << mu_ << "); reduce mu or the input scale";
        throw std::runtime_error(msg.str());
    }
    if (estimate) *estimate = est;
    return y;
}

TimeSeries LmsNotch::process(const TimeSeries& in) {
    require_valid(in, "LmsNotch::process");
    TimeSeries out;
    out.dt = in.dt;
    out.kind = in.kind;
    out.values.reserve(in.size());
    for (double x : in.values) out.values.push_back(step(x));
    return out;
}

double notch_depth(const TimeSeries& input, const TimeSeries& output,
                   double ref_freq_hz, double bandwidth_hz) {
    require_valid(input, "notch_depth");
    require_valid(output, "notch_depth");
    if (input.dt != output.dt)
        throw std::invalid_argument("notch_depth: input/output sample rates differ");
    if (bandwidth_hz <= 2.0 / input.duration() || bandwidth_hz <= 2.0 / output.duration())
        throw std::invalid_argument("notch_depth: records too short for the requested bandwidth");
    const double fs = 1.0 / input.dt;
    const double p_in = band_power(welch_psd(input.values, fs), ref_freq_hz, bandwidth_hz);
    const double p_out = band_power(welch_psd(output.values, fs), ref_freq_hz, bandwidth_hz);
    if (p_out <= 0.0) throw std::runtime_error("notch_depth: output band power is zero");
    return 10.0 * std::log10(p_in / p_out);
}

}  // namespace iodinesim

#pragma once

#include <cstdint>

#include "iodinesim/spectrum.hpp"
#include "iodinesim/timeseries.hpp"

namespace iodinesim {

// Two-weight LMS notch locked to a known reference frequency. The in-phase
// and quadrature weights estimate the narrowband component, the output is the
// input minus that estimate, and the loop behaves as an LTI notch of width
// ~ mu * sample_rate / pi (full width) around ref_freq.
struct LmsNotchConfig {
    double mu = 3.1416e-3;       // adaptation constant, 0 < mu < 1
    double ref_freq_hz = 125e3;
    double sample_rate_hz = 1e6;
};

class LmsNotch {
public:
    explicit LmsNotch(const LmsNotchConfig& cfg);

    // One adaptation step. Returns the cancelled sample; if estimate is
    // non-null it receives the subtracted narrowband estimate so a caller can
    // apply the same correction to a second (out-of-loop) record.
    double step(double x, double* estimate = nullptr);

    TimeSeries process(const TimeSeries& in);

    double weight_cos() const { return w_cos_; }
    double weight_sin() const { return w_sin_; }

private:
    double mu_, omega_dt_;
    double w_cos_ = 0.0, w_sin_ = 0.0;
    double phase_ = 0.0;
    std::uint64_t n_ = 0;
};

// Rejection in dB: band power around ref_freq in `input` over the same band
// in `output`, both via Welch. Throws if the records are too short for the
// requested bandwidth.
double notch_depth(const TimeSeries& input, const TimeSeries& output,
                   double ref_freq_hz, double bandwidth_hz);

}  // namespace iodinesim

#pragma once

#include <cstdint>
#include <vector>

#include "iodinesim/sigchain.hpp"
#include "iodinesim/timeseries.hpp"

namespace iodinesim {

// Free-running laser frequency noise: white FM + flicker FM + linear drift.
// PSDs are one-sided in Hz^2/Hz; the flicker level is S(f) = flicker_coeff/f.
struct NoiseModel {
    double white_psd_hz2 = 0.0;
    double flicker_coeff_hz2 = 0.0;
    double drift_hz_per_s = 0.0;
};

// Frequency-offset record of the unlocked laser at the given rate.
TimeSeries simulate_free_laser(const NoiseModel& noise, double duration_s, double rate_hz,
                               std::uint64_t seed);

// First-order prestabilization loop acting on the frequency-noise record:
// suppression magnitude f / sqrt(f^2 + f_ug^2), floored at floor_db. Realized
// as a complementary one-pole high-pass / low-pass pair (prewarped bilinear),
// so f_ug -> 0 passes the input through unchanged.
struct PrestabConfig {
    double unity_gain_hz = 200.0;
    double floor_db = -50.0;
};
TimeSeries prestabilize(const TimeSeries& free_run, const PrestabConfig& cfg);

// Error-signal source for the slow lock plus its measurement noise, expressed
// as frequency-equivalent white noise per update sample.
struct ErrorChainConfig {
    enum class Source { fm_quadrature, modulation_transfer, double_demod };
    Source source = Source::double_demod;
    double detection_phase_rad = 1.5707963267948966;  // quadrature for the FM source
    double residual_offset = 0.0;
    double meas_noise_hz = 0.0;
};

struct PiConfig {
    double kp = 0.2;                 // Hz per Hz of (normalized) error
    double ki = 63.0;                // Hz/s per Hz of error; unity gain ~ ki/(2 pi)
    double update_rate_hz = 1000.0;
    double correction_limit_hz = 1e6;
};

struct LockResult {
    TimeSeries locked;               // detuning from the shifted line center, Hz
    std::vector<std::uint8_t> in_lock;
    double mean_detuning_hz = 0.0;   // over the second half of the record
    bool stayed_locked = true;
};

// Discrete PI lock of the laser onto the dip. free_laser must be sampled at
// the servo update rate; initial_offset_hz is the starting detuning and must
// sit inside the capture range (|offset| < HWHM).
LockResult close_lock(const TimeSeries& free_laser, const LineContext& ctx,
                      const ModulationConfig& probe_mod, const PumpModConfig& pump,
                      const ErrorChainConfig& chain, const PiConfig& pi,
                      double initial_offset_hz, std::uint64_t seed);

}  // namespace iodinesim

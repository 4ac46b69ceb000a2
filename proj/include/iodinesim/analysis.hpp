#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "iodinesim/freq.hpp"
#include "iodinesim/lineshape.hpp"
#include "iodinesim/timeseries.hpp"

namespace iodinesim {

struct AllanResult {
    std::vector<double> taus_s;
    std::vector<double> sigmas;
    std::vector<std::size_t> n_samples_per_tau;  // averaged samples entering each point
};

// Allan deviation of a gate-spaced frequency record (fractional or Hz; the
// estimator is scale-equivariant). taus must be integer multiples of y.dt with
// at least 3 averaged samples each (m <= N/3). Non-overlapping estimator by
// default; overlapping uses every available start index.
AllanResult allan_deviation(const TimeSeries& y, const std::vector<double>& taus_s,
                            bool overlapping = false);

// Octave-spaced taus (1, 2, 4, ... gates) up to m = N/3.
std::vector<double> default_taus(const TimeSeries& y);

struct DispersionFit {
    double amplitude = 0.0;
    double center_hz = 0.0;
    double hwhm_hz = 0.0;
    double baseline = 0.0;
    double residual_rms = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Least-squares fit of baseline + A * (-x / (1 + x^2)), x = (f - center)/hwhm,
// by damped Gauss-Newton with a numeric Jacobian. Stops when the relative
// parameter step drops below 1e-8 or after 200 iterations.
DispersionFit fit_dispersion(const std::vector<double>& detuning_hz,
                             const std::vector<double>& value, const DispersionFit& guess);

// Starting point from the scan extrema (dispersion peaks sit at x = -/+1).
DispersionFit dispersion_guess(const std::vector<double>& detuning_hz,
                               const std::vector<double>& value);

// Local linear regression slope of shift vs pressure using samples within
// +/- window of 'at'. Needs >= 3 points in the window.
double pressure_slope(const std::vector<double>& pressure_pa, const std::vector<double>& shift_hz,
                      double at_pa, double window_pa);

struct MeasurementSet {
    std::string label;
    std::vector<OpticalFrequency> values;
    CellConditions conditions;
};

struct SetSpread {
    double peak_to_peak_hz = 0.0;
    double std_hz = 0.0;
};

struct RepeatabilityResult {
    std::vector<OpticalFrequency> set_means;
    OpticalFrequency grand_mean;  // unweighted over sets
    double std_of_set_means_hz = 0.0;
    std::vector<SetSpread> within_set_spreads;
};

RepeatabilityResult repeatability(const std::vector<MeasurementSet>& sets);

}  // namespace iodinesim

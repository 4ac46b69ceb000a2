#pragma once

#include <cstdint>

#include "iodinesim/freq.hpp"
#include "iodinesim/timeseries.hpp"

namespace iodinesim {

// Femtosecond comb used as a transfer oscillator. The offset frequency is
// cancelled by mixing before counting, so every downstream quantity depends
// only on f_rep and the mode number.
struct CombConfig {
    OpticalFrequency f_rep = OpticalFrequency::from_millihertz(static_cast<int128>(1000000000) * 1000);
    OpticalFrequency f_0 = OpticalFrequency::from_millihertz(static_cast<int128>(140000000) * 1000);
    double ref_instability_1s = 7.2e-14;  // fractional, white FM, scales as sqrt(1s/gate)
};

struct CounterConfig {
    double gate_s = 1.0;
    double resolution_hz = 1e-3;
    double dead_time_s = 0.0;
};

// f_0 + p * f_rep, exact.
OpticalFrequency mode_freq(std::int64_t p, const CombConfig& comb);

// Mode selection and the f_0-cancelled mixer output: p minimizes
// |laser - p * f_rep| so |mixed| <= f_rep/2, independent of f_0 by
// construction. mixed = laser - p * f_rep, exact.
struct BeatResult {
    std::int64_t p = 0;
    FrequencyOffset mixed;
};
BeatResult beat_and_mix(OpticalFrequency laser, const CombConfig& comb);

// Mixer output for a fixed, already-known mode number (used when stepping
// f_rep while tracking the same beat).
FrequencyOffset mixed_for_mode(OpticalFrequency laser, std::int64_t p, const CombConfig& comb);

// Gated counting of the mixed beat. laser_offsets holds the laser's
// frequency excursions (Hz) around mixed_true at its own sample rate; each
// gate averages the samples it covers, adds white reference noise
// ref_instability_1s * sqrt(1s/gate) * |p * f_rep|, and quantizes to the
// counter resolution. Values are Hz.
TimeSeries count_beat(FrequencyOffset mixed_true, const TimeSeries& laser_offsets,
                      const CombConfig& comb, const CounterConfig& counter, std::int64_t p,
                      std::uint64_t seed);

// Mode number from two counted means at different f_rep:
// p = round((mean_a - mean_b) / (f_rep_b - f_rep_a)). Throws if the residual
// against the nearest integer reaches 0.4 (ambiguous; widen the step or
// average longer).
struct ModeNumberResult {
    std::int64_t p = 0;
    double residual = 0.0;
};
ModeNumberResult determine_mode_number(double mean_a_hz, OpticalFrequency f_rep_a,
                                       double mean_b_hz, OpticalFrequency f_rep_b);

// p * f_rep + counted mean, exact at the counter resolution.
OpticalFrequency reconstruct(double counted_mean_hz, std::int64_t p, const CombConfig& comb);

}  // namespace iodinesim

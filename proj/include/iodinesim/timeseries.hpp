#pragma once

#include <cstddef>
#include <vector>

namespace iodinesim {

// Uniformly sampled record. dt is the sample spacing, or the gate length for
// counted data. Kind is carried so downstream ops can sanity-check inputs.
struct TimeSeries {
    enum class Kind { detector, demodulated, fractional_frequency, counted_hertz };

    std::vector<double> values;
    double dt = 0.0;  // s
    Kind kind = Kind::detector;

    std::size_t size() const { return values.size(); }
    double duration() const { return static_cast<double>(values.size()) * dt; }
};

// Throws std::invalid_argument unless the series is non-empty with dt > 0.
void require_valid(const TimeSeries& ts, const char* what);

}  // namespace iodinesim

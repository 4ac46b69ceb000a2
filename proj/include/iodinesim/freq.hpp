#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace iodinesim {

// Optical carriers live near 6e14 Hz = 6e17 mHz. A 128-bit integer count of
// millihertz keeps every add/subtract exact with ~20 orders of magnitude of
// headroom, so there is no nominal+offset bookkeeping anywhere.
using int128 = __int128;

std::string int128_to_string(int128 v);

class FrequencyOffset {
public:
    constexpr FrequencyOffset() = default;
    static constexpr FrequencyOffset from_millihertz(int128 mhz) { return FrequencyOffset(mhz); }
    // Rounds to the nearest millihertz, half away from zero.
    static FrequencyOffset from_hertz(double hz);

    constexpr int128 millihertz() const { return mhz_; }
    double hertz() const { return static_cast<double>(mhz_) * 1e-3; }

    constexpr FrequencyOffset operator+(FrequencyOffset o) const { return FrequencyOffset(mhz_ + o.mhz_); }
    constexpr FrequencyOffset operator-(FrequencyOffset o) const { return FrequencyOffset(mhz_ - o.mhz_); }
    constexpr FrequencyOffset operator-() const { return FrequencyOffset(-mhz_); }
    constexpr FrequencyOffset operator*(int128 n) const { return FrequencyOffset(mhz_ * n); }
    constexpr bool operator==(const FrequencyOffset&) const = default;

private:
    constexpr explicit FrequencyOffset(int128 mhz) : mhz_(mhz) {}
    int128 mhz_ = 0;
};

class OpticalFrequency {
public:
    constexpr OpticalFrequency() = default;
    static constexpr OpticalFrequency from_millihertz(int128 mhz) { return OpticalFrequency(mhz); }
    static OpticalFrequency from_hertz(double hz);
    // Parses a decimal kHz string, e.g. "597366498654.62". At most 6
    // fractional digits carry information (1e-6 kHz = 1 mHz); nonzero digits
    // beyond that are a precision overflow and rejected.
    static OpticalFrequency from_khz_string(std::string_view text);

    constexpr int128 millihertz() const { return mhz_; }
    double hertz() const { return static_cast<double>(mhz_) * 1e-3; }  // lossy above 2^53 mHz

    // Fixed 6-decimal kHz string; from_khz_string(khz_string()) is the identity.
    std::string khz_string() const;
    // Fixed 2-decimal kHz string for reports, rounded half away from zero.
    std::string khz_report() const;

    constexpr OpticalFrequency operator+(FrequencyOffset o) const { return OpticalFrequency(mhz_ + o.millihertz()); }
    constexpr OpticalFrequency operator-(FrequencyOffset o) const { return OpticalFrequency(mhz_ - o.millihertz()); }
    constexpr FrequencyOffset operator-(OpticalFrequency o) const { return FrequencyOffset::from_millihertz(mhz_ - o.mhz_); }
    // Integer scaling (comb mode number times f_rep).
    constexpr OpticalFrequency scaled(int128 n) const { return OpticalFrequency(mhz_ * n); }
    constexpr bool operator==(const OpticalFrequency&) const = default;
    constexpr auto operator<=>(const OpticalFrequency&) const = default;

private:
    constexpr explicit OpticalFrequency(int128 mhz) : mhz_(mhz) {}
    int128 mhz_ = 0;
};

// (f - ref) / ref carried out in extended precision; good to >= 15 significant
// digits for offsets up to the full optical scale. Throws if ref <= 0.
double fractional_offset(OpticalFrequency f, OpticalFrequency ref);

}  // namespace iodinesim

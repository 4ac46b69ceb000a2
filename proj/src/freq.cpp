#include "iodinesim/freq.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace iodinesim {

namespace {

constexpr int128 kMhzPerKhz = 1000000;  // 1e6 mHz per kHz

int128 abs128(int128 v) { return v < 0 ? -v : v; }

}  // namespace

std::string int128_to_string(int128 v) {
    if (v == 0) return "0";
    bool neg = v < 0;
    // Peel digits from the absolute value; unsigned avoids INT128_MIN trouble.
    unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(v + 1)) + 1
                              : static_cast<unsigned __int128>(v);
    char buf[48];
    int n = 0;
    while (u > 0) {
        buf[n++] = static_cast<char>('0' + static_cast<int>(u % 10));
        u /= 10;
    }
    std::string out;
    if (neg) out.push_back('-');
    while (n > 0) out.push_back(buf[--n]);
    return out;
}

FrequencyOffset FrequencyOffset::from_hertz(double hz) {
    if (!std::isfinite(hz)) throw std::invalid_argument("FrequencyOffset: non-finite value");
    long double mhz = std::roundl(static_cast<long double>(hz) * 1000.0L);
    return FrequencyOffset(static_cast<int128>(mhz));
}

OpticalFrequency OpticalFrequency::from_hertz(double hz) {
    if (!std::isfinite(hz)) throw std::invalid_argument("OpticalFrequency: non-finite value");
    long double mhz = std::roundl(static_cast<long double>(hz) * 1000.0L);
    return OpticalFrequency(static_cast<int128>(mhz));
}

OpticalFrequency OpticalFrequency::from_khz_string(std::string_view text) {
    size_t i = 0, n = text.size();
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    while (n > i && std::isspace(static_cast<unsigned char>(text[n - 1]))) --n;
    if (i >= n) throw std::invalid_argument("frequency string is empty");

    bool neg = false;
    if (text[i] == '+' || text[i] == '-') {
        neg = text[i] == '-';
        ++i;
    }

    // Reject anything beyond ~1e20 kHz up front; int128 could hold more but
    // nothing physical gets there and it keeps the overflow check trivial.
    constexpr int kMaxIntDigits = 24;

    int128 int_part = 0;
    int int_digits = 0;
    bool saw_digit = false;
    for (; i < n && text[i] != '.'; ++i) {
        char c = text[i];
        if (!std::isdigit(static_cast<unsigned char>(c)))
            throw std::invalid_argument(std::string("bad character in frequency string: '") + c + "'");
        saw_digit = true;
        if (int_part != 0 || c != '0') {
            if (++int_digits > kMaxIntDigits) throw std::invalid_argument("frequency string out of range");
        }
        int_part = int_part * 10 + (c - '0');
    }

    int128 frac_mhz = 0;
    if (i < n && text[i] == '.') {
        ++i;
        int pos = 0;
        for (; i < n; ++i, ++pos) {
            char c = text[i];
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw std::invalid_argument(std::string("bad character in frequency string: '") + c + "'");
            saw_digit = true;
            if (pos < 6) {
                frac_mhz = frac_mhz * 10 + (c - '0');
            } else if (c != '0') {
                throw std::invalid_argument("frequency string finer than 1 mHz (precision overflow)");
            }
        }
        for (; pos < 6; ++pos) frac_mhz *= 10;
    }
    if (!saw_digit) throw std::invalid_argument("frequency string has no digits");

    int128 mhz = int_part * kMhzPerKhz + frac_mhz;
    return OpticalFrequency(neg ? -mhz : mhz);
}

std::string OpticalFrequency::khz_string() const {
    int128 v = mhz_;
    std::string sign = v < 0 ? "-" : "";
    int128 a = abs128(v);
    int128 whole = a / kMhzPerKhz;
    int128 frac = a % kMhzPerKhz;
    std::string f = int128_to_string(frac);
    return sign + int128_to_string(whole) + "." + std::string(6 - f.size(), '0') + f;
}

std::string OpticalFrequency::khz_report() const {
    int128 v = mhz_;
    std::string sign = v < 0 ? "-" : "";
    int128 a = abs128(v);
    // Round to 0.01 kHz = 1e4 mHz, half away from zero.
    int128 unit = 10000;
    int128 q = a / unit;
    if (a % unit >= unit / 2) ++q;
    int128 whole = q / 100;
    int128 frac = q % 100;
    std::string f = int128_to_string(frac);
    return sign + int128_to_string(whole) + "." + std::string(2 - f.size(), '0') + f;
}

double fractional_offset(OpticalFrequency f, OpticalFrequency ref) {
    if (ref.millihertz() <= 0)
        throw std::invalid_argument("fractional_offset: reference must be positive");
    long double diff = static_cast<long double>((f - ref).millihertz());
    long double r = static_cast<long double>(ref.millihertz());
    return static_cast<double>(diff / r);
}

}  // namespace iodinesim

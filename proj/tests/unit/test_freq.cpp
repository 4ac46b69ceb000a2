#include <stdexcept>
#include <string>

#include "doctest.h"
#include "iodinesim/freq.hpp"
#include "iodinesim/rng.hpp"

using namespace iodinesim;

namespace {

constexpr int128 kMilli = 1000;
constexpr int128 kKilo = static_cast<int128>(1000) * kMilli;  // mHz per kHz

// Reference line value used throughout: 597366498654.62 kHz in millihertz.
constexpr int128 kLineMhz = static_cast<int128>(597366498654620) * kMilli;

}  // namespace

TEST_SUITE("freq") {

TEST_CASE("khz string parses to exact millihertz") {
    CHECK(OpticalFrequency::from_khz_string("597366498654.62").millihertz() == kLineMhz);
    CHECK(OpticalFrequency::from_khz_string("0").millihertz() == 0);
    CHECK(OpticalFrequency::from_khz_string("0.000001").millihertz() == 1);
    CHECK(OpticalFrequency::from_khz_string("1").millihertz() == kKilo);
    CHECK(OpticalFrequency::from_khz_string("  1.5 ").millihertz() == kKilo + kKilo / 2);
}

TEST_CASE("khz string rejects sub-millihertz digits and garbage") {
    CHECK_THROWS_AS(OpticalFrequency::from_khz_string("0.0000001"), std::invalid_argument);
    CHECK_THROWS_AS(OpticalFrequency::from_khz_string("1.2345678"), std::invalid_argument);
    // Trailing zeros beyond 1 mHz carry no information and stay legal.
    CHECK(OpticalFrequency::from_khz_string("1.0000000").millihertz() == kKilo);
    CHECK_THROWS_AS(OpticalFrequency::from_khz_string(""), std::invalid_argument);
    CHECK_THROWS_AS(OpticalFrequency::from_khz_string("12a.3"), std::invalid_argument);
    CHECK_THROWS_AS(OpticalFrequency::from_khz_string("1.2.3"), std::invalid_argument);
}

TEST_CASE("format and parse are inverse on the fixed-6 form") {
    const char* cases[] = {"597366498654.620000", "0.000000", "0.000001", "12345.678901"};
    for (const char* s : cases) {
        auto f = OpticalFrequency::from_khz_string(s);
        CHECK(f.khz_string() == s);
        CHECK(OpticalFrequency::from_khz_string(f.khz_string()) == f);
    }
    CHECK(OpticalFrequency::from_khz_string("597366498654.62").khz_string() ==
          "597366498654.620000");
}

TEST_CASE("report string rounds half away from zero to 2 decimals") {
    CHECK(OpticalFrequency::from_millihertz(kLineMhz).khz_report() == "597366498654.62");
    CHECK(OpticalFrequency::from_khz_string("1.005").khz_report() == "1.01");
    CHECK(OpticalFrequency::from_khz_string("1.004999").khz_report() == "1.00");
    CHECK(OpticalFrequency::from_khz_string("2.675").khz_report() == "2.68");
}

TEST_CASE("from_hertz rounds to nearest millihertz half away from zero") {
    CHECK(FrequencyOffset::from_hertz(0.0005).millihertz() == 1);
    CHECK(FrequencyOffset::from_hertz(-0.0005).millihertz() == -1);
    CHECK(FrequencyOffset::from_hertz(0.00049).millihertz() == 0);
    // 0.0625 Hz is exactly representable, so the 62.5 mHz tie is a real tie.
    CHECK(FrequencyOffset::from_hertz(0.0625).millihertz() == 63);
    CHECK(FrequencyOffset::from_hertz(-0.0625).millihertz() == -63);
    CHECK(FrequencyOffset::from_hertz(1.2341).millihertz() == 1234);
    CHECK(OpticalFrequency::from_hertz(498654620.0).millihertz() ==
          static_cast<int128>(498654620) * kMilli);
    CHECK_THROWS_AS(FrequencyOffset::from_hertz(std::numeric_limits<double>::quiet_NaN()),
                    std::invalid_argument);
}

TEST_CASE("add then subtract is exact for random in-range values") {
    Rng rng(42);
    for (int i = 0; i < 1000; ++i) {
        // Optical-scale base plus an arbitrary 60-bit offset, random signs.
        int128 a_mhz = kLineMhz + static_cast<int128>(rng.next_u64() >> 4) -
                       static_cast<int128>(rng.next_u64() >> 4);
        int128 b_mhz = static_cast<int128>(rng.next_u64() >> 4) -
                       static_cast<int128>(rng.next_u64() >> 4);
        auto a = OpticalFrequency::from_millihertz(a_mhz);
        auto b = FrequencyOffset::from_millihertz(b_mhz);
        CHECK(((a + b) - b) == a);
        CHECK(((a + b) - a) == b);
    }
}

TEST_CASE("integer scaling matches repeated addition") {
    auto f_rep = OpticalFrequency::from_khz_string("1000000");  // 1 GHz
    auto scaled = f_rep.scaled(597366);
    CHECK(scaled.millihertz() == static_cast<int128>(597366) * f_rep.millihertz());
    CHECK(scaled.khz_report() == "597366000000.00");
    auto off = FrequencyOffset::from_millihertz(250);
    CHECK((off * 4).millihertz() == 1000);
}

TEST_CASE("fractional offset of known displacements") {
    auto ref = OpticalFrequency::from_millihertz(kLineMhz);
    CHECK(fractional_offset(ref, ref) == 0.0);

    // 430.1 Hz on the same carrier is 7.2e-13 to better than 1e-15.
    auto up = ref + FrequencyOffset::from_millihertz(430100);
    CHECK(fractional_offset(up, ref) == doctest::Approx(7.2e-13).epsilon(1.5e-3));

    auto down = ref - FrequencyOffset::from_millihertz(1);
    CHECK(fractional_offset(down, ref) == doctest::Approx(-1.674e-18).epsilon(0.01));

    CHECK_THROWS_AS(fractional_offset(ref, OpticalFrequency::from_millihertz(0)),
                    std::invalid_argument);
}

TEST_CASE("fractional offset is exactly antisymmetric about the reference") {
    auto ref = OpticalFrequency::from_millihertz(kLineMhz);
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        // Offsets up to 1 MHz either side.
        auto d = static_cast<int128>(rng.next_u64() % 1000000000ull);
        auto f = ref + FrequencyOffset::from_millihertz(d);
        auto mirror = ref - FrequencyOffset::from_millihertz(d);
        CHECK(fractional_offset(f, ref) + fractional_offset(mirror, ref) == 0.0);
    }
}

TEST_CASE("int128 decimal printing") {
    CHECK(int128_to_string(0) == "0");
    CHECK(int128_to_string(kLineMhz) == "597366498654620000");
    CHECK(int128_to_string(-kLineMhz) == "-597366498654620000");
    int128 big = static_cast<int128>(1000000000000000000ll) * 1000000;  // 1e24
    CHECK(int128_to_string(big) == "1000000000000000000000000");
}

TEST_CASE("ordering and equality") {
    auto a = OpticalFrequency::from_millihertz(10);
    auto b = OpticalFrequency::from_millihertz(11);
    CHECK(a < b);
    CHECK(a == OpticalFrequency::from_millihertz(10));
    CHECK((b - a).millihertz() == 1);
}

}  // TEST_SUITE

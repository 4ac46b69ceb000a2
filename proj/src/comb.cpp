#include "iodinesim/comb.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "iodinesim/rng.hpp"

namespace iodinesim {

namespace {

int128 abs128(int128 v) { return v < 0 ? -v : v; }

void require_comb(const CombConfig& comb) {
    if (comb.f_rep.millihertz() <= 0) throw std::invalid_argument("comb: f_rep must be positive");
    if (comb.f_0.millihertz() < 0) throw std::invalid_argument("comb: f_0 must be non-negative");
}

}  // namespace

OpticalFrequency mode_freq(std::int64_t p, const CombConfig& comb) {
    require_comb(comb);
    if (p <= 0) throw std::invalid_argument("comb: mode number must be positive");
    return comb.f_0 + FrequencyOffset::from_millihertz(comb.f_rep.millihertz() * static_cast<int128>(p));
}

BeatResult beat_and_mix(OpticalFrequency laser, const CombConfig& comb) {
    require_comb(comb);
    if (laser.millihertz() <= 0) throw std::invalid_argument("comb: laser frequency must be positive");
    const int128 rep = comb.f_rep.millihertz();
    int128 p = laser.millihertz() / rep;  // floor for positive operands
    int128 below = laser.millihertz() - p * rep;
    // below is in [0, rep); the nearest multiple is p or p + 1. Ties round down
    // so the mixed beat comes out at +f_rep/2.
    if (below > rep - below) {
        ++p;
        below -= rep;
    }
    BeatResult out;
    out.p = static_cast<std::int64_t>(p);
    out.mixed = FrequencyOffset::from_millihertz(below);
    return out;
}

FrequencyOffset mixed_for_mode(OpticalFrequency laser, std::int64_t p, const CombConfig& comb) {
    require_comb(comb);
    if (p <= 0) throw std::invalid_argument("comb: mode number must be positive");
    return FrequencyOffset::from_millihertz(laser.millihertz() -
                                            comb.f_rep.millihertz() * static_cast<int128>(p));
}

TimeSeries count_beat(FrequencyOffset mixed_true, const TimeSeries& laser_offsets,
                      const CombConfig& comb, const CounterConfig& counter, std::int64_t p,
                      std::uint64_t seed) {
    require_comb(comb);
    require_valid(laser_offsets, "laser offsets");
    if (counter.gate_s <= 0) throw std::invalid_argument("counter: gate must be positive");
    if (counter.resolution_hz <= 0) throw std::invalid_argument("counter: resolution must be positive");
    if (counter.dead_time_s < 0) throw std::invalid_argument("counter: dead time must be non-negative");
    if (p <= 0) throw std::invalid_argument("counter: mode number must be positive");

    const double cycle = counter.gate_s + counter.dead_time_s;
    const double total = laser_offsets.duration();
    const auto n_gates = static_cast<std::size_t>(std::floor(total / cycle + 1e-9));
    if (n_gates == 0) throw std::invalid_argument("counter: record shorter than one gate");

    const double beat_hz = std::abs(static_cast<double>(comb.f_rep.millihertz()) * 1e-3 *
                                    static_cast<double>(p));
    const double ref_sigma =
        comb.ref_instability_1s * std::sqrt(1.0 / counter.gate_s) * beat_hz;
    Rng rng(Rng::derive(seed, "counter-ref"));

    TimeSeries out;
    out.dt = cycle;
    out.kind = TimeSeries::Kind::counted_hertz;
    out.values.reserve(n_gates);
    const double mixed_hz = mixed_true.hertz();
    for (std::size_t g = 0; g < n_gates; ++g) {
        const double start = static_cast<double>(g) * cycle;
        auto i0 = static_cast<std::size_t>(std::llround(start / laser_offsets.dt));
        auto span = static_cast<std::size_t>(std::llround(counter.gate_s / laser_offsets.dt));
        if (span == 0) span = 1;
        if (i0 >= laser_offsets.size()) i0 = laser_offsets.size() - 1;
        if (i0 + span > laser_offsets.size()) span = laser_offsets.size() - i0;
        double acc = 0.0;
        for (std::size_t i = i0; i < i0 + span; ++i) acc += laser_offsets.values[i];
        double value = mixed_hz + acc / static_cast<double>(span) + ref_sigma * rng.gaussian();
        value = std::round(value / counter.resolution_hz) * counter.resolution_hz;
        out.values.push_back(value);
    }
    return out;
}

ModeNumberResult determine_mode_number(double mean_a_hz, OpticalFrequency f_rep_a,
                                       double mean_b_hz, OpticalFrequency f_rep_b) {
    if (f_rep_a == f_rep_b) throw std::invalid_argument("mode number: repetition rates must differ");
    const double d_rep = (f_rep_b - f_rep_a).hertz();
    const double ratio = (mean_a_hz - mean_b_hz) / d_rep;
    const double rounded = std::round(ratio);
    const double residual = std::abs(ratio - rounded);
    if (residual >= 0.4) {
        throw std::runtime_error("mode number ambiguous (residual " + std::to_string(residual) +
                                 "); widen the f_rep step or average longer");
    }
    if (rounded < 1.0) throw std::runtime_error("mode number came out non-positive");
    ModeNumberResult out;
    out.p = static_cast<std::int64_t>(rounded);
    out.residual = residual;
    return out;
}

OpticalFrequency reconstruct(double counted_mean_hz, std::int64_t p, const CombConfig& comb) {
    require_comb(comb);
    if (p <= 0) throw std::invalid_argument("comb: mode number must be positive");
    const OpticalFrequency backbone = comb.f_rep.scaled(static_cast<int128>(p));
    return backbone + FrequencyOffset::from_hertz(counted_mean_hz);
}

}  // namespace iodinesim

#include "iodinesim/lineshape.hpp"

#include <cmath>
#include <stdexcept>

namespace iodinesim {

namespace {

constexpr double kBoltzmann = 1.380649e-23;      // J/K
constexpr double kSpeedOfLight = 299792458.0;    // m/s
constexpr double kAmu = 1.66053906892e-27;       // kg
constexpr double kIodineMolecularMass = 2.0 * 126.90447 * kAmu;

}  // namespace

double HyperfineLine::gamma_ratio_r() const {
    const double sum = gamma_e + gamma_g;
    if (sum <= 0.0)
        throw std::invalid_argument("HyperfineLine: gamma_e + gamma_g must be > 0 (gamma ratio undefined)");
    return (gamma_e - gamma_g) / sum;
}

BroadeningModel BroadeningModel::from_anchors(double p1_pa, double hwhm1_hz, double p2_pa, double hwhm2_hz) {
    if (p1_pa == p2_pa) throw std::invalid_argument("BroadeningModel: anchor pressures must differ");
    BroadeningModel m;
    m.broadening_hz_per_pa = (hwhm2_hz - hwhm1_hz) / (p2_pa - p1_pa);
    m.zero_pressure_hwhm_hz = hwhm1_hz - m.broadening_hz_per_pa * p1_pa;
    if (m.zero_pressure_hwhm_hz <= 0)
        throw std::invalid_argument("BroadeningModel: anchors give non-positive zero-pressure width");
    return m;
}

double hwhm(const BroadeningModel& model, const CellConditions& cond) {
    if (cond.pressure_pa < 0) throw std::invalid_argument("hwhm: pressure must be >= 0");
    const double w = model.zero_pressure_hwhm_hz + model.broadening_hz_per_pa * cond.pressure_pa;
    if (w <= 0) throw std::invalid_argument("hwhm: model yields non-positive width");
    return w;
}

ShiftModel ShiftModel::calibrated(double slope_hz_per_pa, double at_pa, double linear_fraction,
                                  const BroadeningModel& broadening, const HyperfineLine& line) {
    if (at_pa <= 0) throw std::invalid_argument("ShiftModel: calibration pressure must be > 0");
    if (linear_fraction < 0 || linear_fraction > 1)
        throw std::invalid_argument("ShiftModel: linear_fraction must be in [0,1]");
    ShiftModel m;
    m.linear_hz_per_pa = linear_fraction * slope_hz_per_pa;
    const double r = line.gamma_ratio_r();
    if (r == 0.0) {
        if (linear_fraction != 1.0)
            throw std::invalid_argument("ShiftModel: gamma ratio is zero, nonlinear share impossible");
        m.nonlinear_amp_hz2 = 0.0;
        return m;
    }
    // d/dP [A r / (w0 + kP)] = -A r k / hwhm(P)^2; solve A for the remaining share.
    CellConditions at;
    at.pressure_pa = at_pa;
    const double h = hwhm(broadening, at);
    const double k = broadening.broadening_hz_per_pa;
    if (k == 0.0) throw std::invalid_argument("ShiftModel: zero broadening slope, nonlinear share impossible");
    m.nonlinear_amp_hz2 = -(1.0 - linear_fraction) * slope_hz_per_pa * h * h / (r * k);
    return m;
}

double center_shift_hz(const ShiftModel& model, const HyperfineLine& line,
                       const BroadeningModel& broadening, const CellConditions& cond) {
    if (cond.pressure_pa < 0) throw std::invalid_argument("center_shift: pressure must be >= 0");
    if (cond.probe_power_w <= 0 || model.reference_probe_power_w <= 0)
        throw std::invalid_argument("center_shift: probe powers must be > 0");
    const double r = line.gamma_ratio_r();
    double total = model.linear_hz_per_pa * cond.pressure_pa;
    if (model.nonlinear_amp_hz2 != 0.0)
        total += model.nonlinear_amp_hz2 * r / hwhm(broadening, cond);
    total += model.power_sign * model.power_coeff_hz_per_octave *
             std::log2(cond.probe_power_w / model.reference_probe_power_w);
    return total;
}

FrequencyOffset center_shift(const ShiftModel& model, const HyperfineLine& line,
                             const BroadeningModel& broadening, const CellConditions& cond) {
    return FrequencyOffset::from_hertz(center_shift_hz(model, line, broadening, cond));
}

SaturationProfile saturation_profile(const HyperfineLine& line, const BroadeningModel& broadening,
                                     const ShiftModel& shift, const CellConditions& cond,
                                     const std::vector<double>& detunings_hz,
                                     double background_depth, double dip_contrast) {
    if (line.doppler_sigma_hz <= 0)
        throw std::invalid_argument("saturation_profile: doppler sigma must be > 0");
    const double gamma = hwhm(broadening, cond);
    const double dip_at = center_shift_hz(shift, line, broadening, cond);
    const double dip_depth = dip_contrast * background_depth;
    const double sig2 = 2.0 * line.doppler_sigma_hz * line.doppler_sigma_hz;

    SaturationProfile out;
    out.absorption.reserve(detunings_hz.size());
    out.dispersion.reserve(detunings_hz.size());
    for (double d : detunings_hz) {
        const double x = (d - dip_at) / gamma;
        const double lor = 1.0 / (1.0 + x * x);
        out.absorption.push_back(background_depth * std::exp(-d * d / sig2) - dip_depth * lor);
        out.dispersion.push_back(dip_depth * (-x) * lor);
    }
    return out;
}

double doppler_sigma_hz(double carrier_hz, double temperature_k) {
    if (carrier_hz <= 0 || temperature_k <= 0)
        throw std::invalid_argument("doppler_sigma: carrier and temperature must be > 0");
    return carrier_hz * std::sqrt(kBoltzmann * temperature_k /
                                  (kIodineMolecularMass * kSpeedOfLight * kSpeedOfLight));
}

}  // namespace iodinesim

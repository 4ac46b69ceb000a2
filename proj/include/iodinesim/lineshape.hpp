#pragma once

#include <vector>

#include "iodinesim/freq.hpp"

namespace iodinesim {

// Hyperfine component under study plus the decay rates that drive the
// nonlinear part of the pressure shift.
struct HyperfineLine {
    OpticalFrequency unperturbed_center;
    double gamma_e = 0.0;          // upper-level relaxation rate, 1/s
    double gamma_g = 0.0;          // lower-level relaxation rate, 1/s
    double doppler_sigma_hz = 0.0; // gaussian sigma of the Doppler background
    double temperature_k = 300.0;

    // (gamma_e - gamma_g) / (gamma_e + gamma_g); throws if both rates are zero.
    double gamma_ratio_r() const;
};

struct CellConditions {
    double pressure_pa = 0.33;
    double probe_power_w = 400e-6;
    double pump_power_w = 2.7e-3;
    double beam_diameter_m = 6e-3;
    double cell_length_m = 4.0;
};

// Lamb-dip half width vs pressure, affine: hwhm = w0 + k * P.
struct BroadeningModel {
    double zero_pressure_hwhm_hz = 28750.0;
    double broadening_hz_per_pa = 13000.0 / 0.264;

    static BroadeningModel from_anchors(double p1_pa, double hwhm1_hz, double p2_pa, double hwhm2_hz);
};

double hwhm(const BroadeningModel& model, const CellConditions& cond);

// Lock-point shift: linear pressure term + gamma-ratio term ~ r/HWHM(P) +
// probe-power term in Hz per octave.
struct ShiftModel {
    double linear_hz_per_pa = 0.0;
    double nonlinear_amp_hz2 = 0.0;  // multiplies r / HWHM(P)
    double power_coeff_hz_per_octave = 1000.0;
    double power_sign = -1.0;
    double reference_probe_power_w = 400e-6;

    // Calibrated so d(shift)/dP at `at_pa` equals slope_hz_per_pa, split
    // linear_fraction : (1 - linear_fraction) between the two pressure terms.
    static ShiftModel calibrated(double slope_hz_per_pa, double at_pa, double linear_fraction,
                                 const BroadeningModel& broadening, const HyperfineLine& line);
};

double center_shift_hz(const ShiftModel& model, const HyperfineLine& line,
                       const BroadeningModel& broadening, const CellConditions& cond);
FrequencyOffset center_shift(const ShiftModel& model, const HyperfineLine& line,
                             const BroadeningModel& broadening, const CellConditions& cond);

struct SaturationProfile {
    std::vector<double> absorption;
    std::vector<double> dispersion;
};

// Doppler gaussian minus a Lorentzian Lamb dip at the shifted center, plus the
// dip's dispersion partner -x/(1+x^2). Detunings are relative to the
// unperturbed center. background_depth sets the gaussian peak; the dip depth
// is dip_contrast * background_depth.
SaturationProfile saturation_profile(const HyperfineLine& line, const BroadeningModel& broadening,
                                     const ShiftModel& shift, const CellConditions& cond,
                                     const std::vector<double>& detunings_hz,
                                     double background_depth = 1.0, double dip_contrast = 0.01);

// sigma = f0 * sqrt(kB T / (M c^2)) for molecular iodine at the given carrier.
double doppler_sigma_hz(double carrier_hz, double temperature_k);

}  // namespace iodinesim

#pragma once

#include <cstdint>
#include <vector>

#include "iodinesim/lineshape.hpp"
#include "iodinesim/timeseries.hpp"

namespace iodinesim {

// Probe modulation. The electro-optic path is pure phase modulation plus a
// configurable residual AM (RAM); the acousto-optic path adds a further
// spatial-modulation RAM term on top.
struct ModulationConfig {
    double mod_freq_hz = 2.5e6;
    double index = 1.0;  // beta
    enum class Path { electro_optic, acousto_optic } path = Path::electro_optic;
    double ram_depth = 0.0;       // AM index m, 0 <= m < 1
    double ram_phase_rad = 0.0;   // AM phase relative to the FM
    double aom_spatial_ram = 0.0; // extra RAM when path == acousto_optic

    double effective_ram() const {
        return ram_depth + (path == Path::acousto_optic ? aom_spatial_ram : 0.0);
    }
};

// Pump-side modulation used for modulation transfer plus the slow on/off chop.
struct PumpModConfig {
    double mod_freq_hz = 125e3;
    double chop_freq_hz = 200.0;
    double probe_aom_shift_hz = 250e6;  // bookkeeping for the optical layout
    double pump_aom_shift_hz = 80e6;
    double signal_amplitude = 1.0;      // overall detected-signal scale (free parameter)
};

struct LockInConfig {
    double ref_freq_hz = 0.0;
    double phase_rad = 0.0;
    double time_constant_s = 0.1;
};

// Everything the detection ops need to know about the medium in one place.
struct LineContext {
    HyperfineLine line;
    BroadeningModel broadening;
    ShiftModel shift;
    CellConditions cell;
    double doppler_depth = 0.25;  // peak single-pass field absorbance of the background
    double dip_contrast = 0.01;   // dip depth relative to doppler_depth

    double hwhm_hz() const { return hwhm(broadening, cell); }
    double shift_hz() const { return center_shift_hz(shift, line, broadening, cell); }
    OpticalFrequency dip_center() const {
        return line.unperturbed_center + center_shift(shift, line, broadening, cell);
    }
};

// J_0..J_max_order at the given index; |beta| <= 20 supported.
std::vector<double> sideband_amplitudes(double beta, int max_order);

// Demodulated FM-spectroscopy signal at the probe modulation frequency,
// closed form over the full sideband expansion. detuning is relative to the
// *shifted* dip center. phase 0 reads the in-phase (absorption difference)
// channel, pi/2 the quadrature (dispersion) channel. Requires the resolved-
// sideband regime mod_freq > 10 * HWHM.
double fm_demod_signal(const LineContext& ctx, const ModulationConfig& mod,
                       double detuning_hz, double detection_phase_rad);

// Zero crossing of the FM error signal within +/-2 HWHM of the dip, Hz.
double fm_zero_crossing(const LineContext& ctx, const ModulationConfig& mod,
                        double detection_phase_rad);

// Lock-point displacement caused by RAM: zero crossing with the configured
// ram_depth minus the zero crossing with RAM off.
double ram_lock_shift(const LineContext& ctx, const ModulationConfig& mod,
                      double detection_phase_rad);

// Modulation-transfer error signal (pump FM at pump.mod_freq_hz, detected on
// the probe). Odd about the dip center with positive slope, background-free
// except for the explicit residual_offset term.
double modulation_transfer_error(const LineContext& ctx, const PumpModConfig& pump,
                                 double detuning_hz, double residual_offset = 0.0);

// Second demodulation against the pump chop: pump-independent terms (the
// residual offset) cancel; the surviving dip term carries the 1/2 duty factor.
double double_demod_error(const LineContext& ctx, const PumpModConfig& pump,
                          double detuning_hz, double residual_offset = 0.0);

// Streaming dual-phase-free lock-in: 2 * x * cos(2 pi f t + phase) through a
// single-pole low-pass with the configured time constant.
class LockInFilter {
public:
    LockInFilter(const LockInConfig& cfg, double sample_rate_hz);
    double process(double x);

private:
    double omega_dt_, phase_, alpha_, state_ = 0.0;
    std::uint64_t n_ = 0;
    double ref_phase_;
};

// Whole-series lock-in; input must be sampled at > 4x the reference.
TimeSeries lock_in(const TimeSeries& in, const LockInConfig& cfg);

// Square-wave second demodulation at the chop frequency (sign of cos) with a
// single-pole low-pass. Used after the first lock-in for double demodulation.
TimeSeries chop_demod(const TimeSeries& in, double chop_freq_hz, double time_constant_s);

// Explicit time-domain photodetector record of the FM-spectroscopy beat, band
// limited to the harmonics below Nyquist, plus white detector noise of the
// given one-sided PSD (relative units^2/Hz). with_medium=false models a
// monitor photodiode ahead of the cell.
struct DetectorConfig {
    double sample_rate_hz = 12.5e6;
    double noise_psd = 0.0;
    std::uint64_t seed = 0;
};
TimeSeries detector_record(const LineContext& ctx, const ModulationConfig& mod,
                           double detuning_hz, double duration_s, const DetectorConfig& det,
                           bool with_medium = true);

// Time-domain modulation-transfer record: the 125 kHz beat with amplitude
// modulation_transfer_error(detuning) gated by the pump chop, plus the
// pump-independent residual offset, plus detector noise.
TimeSeries mt_detector_record(const LineContext& ctx, const PumpModConfig& pump,
                              double detuning_hz, double residual_offset, bool chopped,
                              double duration_s, const DetectorConfig& det);

}  // namespace iodinesim

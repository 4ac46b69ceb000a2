#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace iodinesim {

// Real FFT helpers (FFTW backend, double precision, FFTW_ESTIMATE plans).
// Plan creation is serialized internally so these are safe from worker threads.
std::vector<std::complex<double>> rfft(const std::vector<double>& x);
std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n);

struct Psd {
    std::vector<double> freq_hz;
    std::vector<double> power;  // one-sided, units^2/Hz
    double df = 0.0;
    std::size_t segments = 0;
};

// Welch estimate: Hann window, 50% overlap, >= 8 segments. nperseg 0 picks the
// largest power of two that still yields 8 segments. Throws if the record is
// too short (< 8 windows of 16 samples).
Psd welch_psd(const std::vector<double>& x, double sample_rate_hz, std::size_t nperseg = 0);

// Integrated PSD over [f_center - bw/2, f_center + bw/2]. Throws if the band
// holds no bins (record too short for the requested bandwidth) or lies outside
// the one-sided range.
double band_power(const Psd& psd, double f_center_hz, double bandwidth_hz);

}  // namespace iodinesim

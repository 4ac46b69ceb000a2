#include "iodinesim/spectrum.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace iodinesim {

namespace {

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
    const std::size_t n = x.size();
    if (n == 0) throw std::invalid_argument("rfft: empty input");
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    std::memcpy(in, x.data(), n * sizeof(double));
    fftw_execute(plan);
    std::vector<std::complex<double>> spec(n / 2 + 1);
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] = {out[k][0], out[k][1]};
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return spec;
}

std::vector<double> irfft(const std::vector<std::complex<double>>& spec, std::size_t n) {
    if (n == 0 || spec.size() != n / 2 + 1)
        throw std::invalid_argument("irfft: spectrum size must be n/2+1");
    fftw_complex* in = fftw_alloc_complex(spec.size());
    double* out = fftw_alloc_real(n);
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        plan = fftw_plan_dft_c2r_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    }
    for (std::size_t k = 0; k < spec.size(); ++k) {
        in[k][0] = spec[k].real();
        in[k][1] = spec[k].imag();
    }
    fftw_execute(plan);
    std::vector<double> x(n);
    const double norm = 1.0 / static_cast<double>(n);  // FFTW c2r is unnormalized
    for (std::size_t i = 0; i < n; ++i) x[i] = out[i] * norm;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        fftw_destroy_plan(plan);
    }
    fftw_free(in);
    fftw_free(out);
    return x;
}

Psd welch_psd(const std::vector<double>& x, double sample_rate_hz, std::size_t nperseg) {
    if (sample_rate_hz <= 0) throw std::invalid_argument("welch_psd: sample rate must be > 0");
    const std::size_t n = x.size();
    if (nperseg == 0) {
        // Largest power of two leaving >= 8 half-overlapped segments.
        std::size_t limit = (2 * n) / 9;
        nperseg = limit >= 16 ? std::bit_floor(limit) : 0;
    }
    if (nperseg < 16 || n < nperseg + 7 * (nperseg / 2))
        throw std::invalid_argument("welch_psd: record too short (need >= 8 segments of >= 16 samples)");

    const std::size_t hop = nperseg / 2;
    const std::size_t nseg = (n - nperseg) / hop + 1;

    std::vector<double> window(nperseg);
    double u = 0.0;  // sum of squared window for PSD normalization
    for (std::size_t i = 0; i < nperseg; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(nperseg)));
        u += window[i] * window[i];
    }

    Psd psd;
    psd.df = sample_rate_hz / static_cast<double>(nperseg);
    psd.segments = nseg;
    psd.power.assign(nperseg / 2 + 1, 0.0);
    psd.freq_hz.resize(nperseg / 2 + 1);
    for (std::size_t k = 0; k < psd.freq_hz.size(); ++k) psd.freq_hz[k] = psd.df * static_cast<double>(k);

    std::vector<double> seg(nperseg);
    for (std::size_t s = 0; s < nseg; ++s) {
        const double* base = x.data() + s * hop;
        for (std::size_t i = 0; i < nperseg; ++i) seg[i] = base[i] * window[i];
        auto spec = rfft(seg);
        for (std::size_t k = 0; k < spec.size(); ++k) psd.power[k] += std::norm(spec[k]);
    }

    const double scale = 1.0 / (sample_rate_hz * u * static_cast<double>(nseg));
    for (std::size_t k = 0; k < psd.power.size(); ++k) {
        double one_sided = (k == 0 || k == nperseg / 2) ? 1.0 : 2.0;  // fold negative freqs
        psd.power[k] *= scale * one_sided;
    }
    return psd;
}

double band_power(const Psd& psd, double f_center_hz, double bandwidth_hz) {
    if (bandwidth_hz <= 0) throw std::invalid_argument("band_power: bandwidth must be > 0");
    if (psd.freq_hz.empty()) throw std::invalid_argument("band_power: empty PSD");
    const double lo = f_center_hz - 0.5 * bandwidth_hz;
    const double hi = f_center_hz + 0.5 * bandwidth_hz;
    if (hi < psd.freq_hz.front() || lo > psd.freq_hz.back())
        throw std::invalid_argument("band_power: band outside the one-sided range");
    double total = 0.0;
    std::size_t used = 0;
    for (std::size_t k = 0; k < psd.freq_hz.size(); ++k) {
        if (psd.freq_hz[k] >= lo && psd.freq_hz[k] <= hi) {
            total += psd.power[k] * psd.df;
            ++used;
        }
    }
    if (used == 0)
        throw std::invalid_argument("band_power: record too short for the requested bandwidth");
    return total;
}

}  // namespace iodinesim

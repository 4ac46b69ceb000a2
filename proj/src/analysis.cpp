#include "iodinesim/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace iodinesim {

namespace {

std::size_t tau_to_m(double tau_s, double dt) {
    const double ratio = tau_s / dt;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-6 * std::max(1.0, rounded)) {
        throw std::invalid_argument("allan: tau " + std::to_string(tau_s) +
                                    " s is not an integer multiple of the gate " +
                                    std::to_string(dt) + " s");
    }
    return static_cast<std::size_t>(rounded);
}

}  // namespace

AllanResult allan_deviation(const TimeSeries& y, const std::vector<double>& taus_s,
                            bool overlapping) {
    require_valid(y, "allan input");
    if (taus_s.empty()) throw std::invalid_argument("allan: no taus requested");
    const std::size_t n = y.size();
    AllanResult out;
    for (double tau : taus_s) {
        const std::size_t m = tau_to_m(tau, y.dt);
        if (3 * m > n) {
            throw std::invalid_argument(
                "allan: fewer than 3 averaged samples at tau = " + std::to_string(tau) +
                " s (need m <= N/3, got m = " + std::to_string(m) + ", N = " + std::to_string(n) +
                ")");
        }
        double sum_sq = 0.0;
        std::size_t terms = 0;
        std::size_t averaged = 0;
        if (overlapping) {
            // sigma^2 = sum_j (mean_{j+m..j+2m-1} - mean_{j..j+m-1})^2 / (2 * terms)
            double left = 0.0;
            double right = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                left += y.values[i];
                right += y.values[i + m];
            }
            for (std::size_t j = 0;; ++j) {
                const double d = (right - left) / static_cast<double>(m);
                sum_sq += d * d;
                ++terms;
                if (j + 2 * m >= n) break;
                left += y.values[j + m] - y.values[j];
                right += y.values[j + 2 * m] - y.values[j + m];
            }
            averaged = n - m + 1;
        } else {
            const std::size_t groups = n / m;
            double prev = 0.0;
            for (std::size_t k = 0; k < groups; ++k) {
                double acc = 0.0;
                for (std::size_t i = 0; i < m; ++i) acc += y.values[k * m + i];
                const double mean = acc / static_cast<double>(m);
                if (k > 0) {
                    const double d = mean - prev;
                    sum_sq += d * d;
                    ++terms;
                }
                prev = mean;
            }
            averaged = groups;
        }
        out.taus_s.push_back(static_cast<double>(m) * y.dt);
        out.sigmas.push_back(std::sqrt(sum_sq / (2.0 * static_cast<double>(terms))));
        out.n_samples_per_tau.push_back(averaged);
    }
    return out;
}

std::vector<double> default_taus(const TimeSeries& y) {
    require_valid(y, "allan input");
    std::vector<double> taus;
    for (std::size_t m = 1; 3 * m <= y.size(); m *= 2) {
        taus.push_back(static_cast<double>(m) * y.dt);
    }
    if (taus.empty()) throw std::invalid_argument("allan: record shorter than 3 gates");
    return taus;
}

namespace {

double dispersion_model(double f, const std::array<double, 4>& p) {
    // p = {amplitude, center, hwhm, baseline}
    const double x = (f - p[1]) / p[2];
    return p[3] + p[0] * (-x / (1.0 + x * x));
}

double sse(const std::vector<double>& f, const std::vector<double>& v,
           const std::array<double, 4>& p) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        const double r = v[i] - dispersion_model(f[i], p);
        s += r * r;
    }
    return s;
}

// Gaussian elimination with partial pivoting on the 4x4 normal equations.
bool solve4(std::array<std::array<double, 4>, 4>& a, std::array<double, 4>& b,
            std::array<double, 4>& x) {
    for (int col = 0; col < 4; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 4; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        }
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        for (int r = col + 1; r < 4; ++r) {
            const double k = a[r][col] / a[col][col];
            for (int c = col; c < 4; ++c) a[r][c] -= k * a[col][c];
            b[r] -= k * b[col];
        }
    }
    for (int r = 3; r >= 0; --r) {
        double acc = b[r];
        for (int c = r + 1; c < 4; ++c) acc -= a[r][c] * x[c];
        x[r] = acc / a[r][r];
    }
    return true;
}

}  // namespace

DispersionFit fit_dispersion(const std::vector<double>& detuning_hz,
                             const std::vector<double>& value, const DispersionFit& guess) {
    if (detuning_hz.size() != value.size()) {
        throw std::invalid_argument("dispersion fit: detuning/value size mismatch");
    }
    if (detuning_hz.size() < 8) throw std::invalid_argument("dispersion fit: need >= 8 points");
    const auto [min_it, max_it] = std::minmax_element(detuning_hz.begin(), detuning_hz.end());
    if (*max_it - *min_it <= 0.0) {
        throw std::invalid_argument("dispersion fit: degenerate scan (all detunings equal)");
    }
    if (guess.hwhm_hz <= 0.0) throw std::invalid_argument("dispersion fit: guess hwhm must be positive");

    std::array<double, 4> p = {guess.amplitude, guess.center_hz, guess.hwhm_hz, guess.baseline};
    double err = sse(detuning_hz, value, p);
    double lambda = 1e-3;
    const std::size_t n = detuning_hz.size();

    DispersionFit out;
    bool ever_accepted = false;
    for (out.iterations = 1; out.iterations <= 200; ++out.iterations) {
        // Numeric Jacobian, central differences.
        std::array<std::array<double, 4>, 4> jtj{};
        std::array<double, 4> jtr{};
        std::array<double, 4> step_scale = {std::max(std::abs(p[0]), 1e-12) * 1e-6,
                                            std::max(std::abs(p[2]), 1.0) * 1e-6,
                                            std::max(std::abs(p[2]), 1e-12) * 1e-6,
                                            std::max(std::abs(p[0]), 1e-12) * 1e-6};
        for (std::size_t i = 0; i < n; ++i) {
            std::array<double, 4> grad{};
            for (int k = 0; k < 4; ++k) {
                auto ph = p;
                auto pl = p;
                ph[k] += step_scale[k];
                pl[k] -= step_scale[k];
                grad[k] = (dispersion_model(detuning_hz[i], ph) -
                           dispersion_model(detuning_hz[i], pl)) /
                          (2.0 * step_scale[k]);
            }
            const double r = value[i] - dispersion_model(detuning_hz[i], p);
            for (int a = 0; a < 4; ++a) {
                jtr[a] += grad[a] * r;
                for (int b = 0; b < 4; ++b) jtj[a][b] += grad[a] * grad[b];
            }
        }
        bool accepted = false;
        double rel_step = 0.0;
        for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
            auto damped = jtj;
            for (int k = 0; k < 4; ++k) damped[k][k] *= 1.0 + lambda;
            auto rhs = jtr;
            std::array<double, 4> delta{};
            if (!solve4(damped, rhs, delta)) {
                lambda *= 8.0;
                continue;
            }
            std::array<double, 4> trial = {p[0] + delta[0], p[1] + delta[1], p[2] + delta[2],
                                           p[3] + delta[3]};
            if (trial[2] <= 0.0) {
                lambda *= 8.0;
                continue;
            }
            const double trial_err = sse(detuning_hz, value, trial);
            if (trial_err <= err) {
                rel_step = 0.0;
                for (int k = 0; k < 4; ++k) {
                    const double scale = std::max(std::abs(p[k]), std::abs(trial[k]));
                    if (scale > 0.0) rel_step = std::max(rel_step, std::abs(delta[k]) / scale);
                }
                p = trial;
                err = trial_err;
                lambda = std::max(lambda * 0.25, 1e-12);
                accepted = true;
            } else {
                lambda *= 8.0;
            }
        }
        if (!accepted) {
            // No damping level improves the error: already at a local minimum
            // if any step was ever taken, otherwise the guess is hopeless.
            if (!ever_accepted) {
                throw std::runtime_error(
                    "dispersion fit failed to make progress from the initial guess");
            }
            out.converged = true;
            break;
        }
        ever_accepted = true;
        if (rel_step < 1e-8) {
            out.converged = true;
            break;
        }
    }
    out.amplitude = p[0];
    out.center_hz = p[1];
    out.hwhm_hz = p[2];
    out.baseline = p[3];
    out.residual_rms = std::sqrt(err / static_cast<double>(n));
    if (!out.converged && out.iterations > 200) {
        throw std::runtime_error("dispersion fit did not converge in 200 iterations");
    }
    return out;
}

DispersionFit dispersion_guess(const std::vector<double>& detuning_hz,
                               const std::vector<double>& value) {
    if (detuning_hz.size() != value.size() || detuning_hz.size() < 8) {
        throw std::invalid_argument("dispersion fit: need >= 8 matched points");
    }
    std::size_t imax = 0;
    std::size_t imin = 0;
    for (std::size_t i = 1; i < value.size(); ++i) {
        if (value[i] > value[imax]) imax = i;
        if (value[i] < value[imin]) imin = i;
    }
    DispersionFit g;
    g.center_hz = 0.5 * (detuning_hz[imax] + detuning_hz[imin]);
    g.hwhm_hz = 0.5 * std::abs(detuning_hz[imax] - detuning_hz[imin]);
    if (g.hwhm_hz <= 0.0) {
        const auto [lo, hi] = std::minmax_element(detuning_hz.begin(), detuning_hz.end());
        g.hwhm_hz = std::max((*hi - *lo) / 8.0, 1e-9);
    }
    // Model peaks are at x = -/+1 with values baseline +/- A/2; the maximum
    // sits on the low-detuning side when A > 0.
    const double pk = value[imax] - value[imin];
    g.amplitude = detuning_hz[imax] < detuning_hz[imin] ? pk : -pk;
    g.baseline = 0.5 * (value[imax] + value[imin]);
    return g;
}

double pressure_slope(const std::vector<double>& pressure_pa, const std::vector<double>& shift_hz,
                      double at_pa, double window_pa) {
    if (pressure_pa.size() != shift_hz.size()) {
        throw std::invalid_argument("pressure slope: pressure/shift size mismatch");
    }
    if (window_pa <= 0.0) throw std::invalid_argument("pressure slope: window must be positive");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pressure_pa.size(); ++i) {
        if (std::abs(pressure_pa[i] - at_pa) > window_pa) continue;
        const double x = pressure_pa[i] - at_pa;  // recentred for conditioning
        sx += x;
        sy += shift_hz[i];
        sxx += x * x;
        sxy += x * shift_hz[i];
        ++n;
    }
    if (n < 3) {
        throw std::invalid_argument("pressure slope: fewer than 3 samples within the window");
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    if (std::abs(denom) < 1e-300) {
        throw std::invalid_argument("pressure slope: degenerate pressures in window");
    }
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

RepeatabilityResult repeatability(const std::vector<MeasurementSet>& sets) {
    if (sets.size() < 2) throw std::invalid_argument("repeatability: need >= 2 sets");
    for (const auto& s : sets) {
        if (s.values.empty()) {
            throw std::invalid_argument("repeatability: empty set '" + s.label + "'");
        }
    }
    const OpticalFrequency ref = sets.front().values.front();
    RepeatabilityResult out;
    std::vector<double> mean_offsets;
    for (const auto& s : sets) {
        double acc = 0.0;
        double lo = (s.values.front() - ref).hertz();
        double hi = lo;
        for (const auto& v : s.values) {
            const double d = (v - ref).hertz();
            acc += d;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
        const double mean = acc / static_cast<double>(s.values.size());
        mean_offsets.push_back(mean);
        out.set_means.push_back(ref + FrequencyOffset::from_hertz(mean));
        double var = 0.0;
        for (const auto& v : s.values) {
            const double d = (v - ref).hertz() - mean;
            var += d * d;
        }
        SetSpread spread;
        spread.peak_to_peak_hz = hi - lo;
        spread.std_hz = s.values.size() > 1
                            ? std::sqrt(var / static_cast<double>(s.values.size() - 1))
                            : 0.0;
        out.within_set_spreads.push_back(spread);
    }
    const double grand =
        std::accumulate(mean_offsets.begin(), mean_offsets.end(), 0.0) /
        static_cast<double>(mean_offsets.size());
    out.grand_mean = ref + FrequencyOffset::from_hertz(grand);
    double var = 0.0;
    for (double m : mean_offsets) var += (m - grand) * (m - grand);
    out.std_of_set_means_hz =
        std::sqrt(var / static_cast<double>(mean_offsets.size() - 1));
    return out;
}

}  // namespace iodinesim

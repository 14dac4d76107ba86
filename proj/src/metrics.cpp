#include "sapinn/metrics.hpp"

#include "sapinn/errors.hpp"
#include "sapinn/neural.hpp"
#include "sapinn/rng.hpp"

#include <cmath>
#include <complex>
#include <vector>

namespace sapinn::metrics {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place iterative radix-2 FFT.
void fft_pow2(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * kPi / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const auto u = a[i + j];
                const auto v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

std::vector<std::complex<double>> dft(const Eigen::VectorXd& x) {
    const int n = static_cast<int>(x.size());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(n));
    if (is_pow2(n)) {
        for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = x[k];
        fft_pow2(out);
        return out;
    }
    for (int j = 0; j < n; ++j) {
        std::complex<double> acc(0.0);
        for (int k = 0; k < n; ++k) {
            const double ang = -2.0 * kPi * j * k / n;
            acc += x[k] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out[static_cast<std::size_t>(j)] = acc;
    }
    return out;
}

} // namespace

double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size()) throw DimensionError("mse: length mismatch");
    if (a.size() == 0) throw DimensionError("mse: empty series");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double PsdEstimate::integrated_power() const {
    if (omega.size() < 2) return 0.0;
    const double domega = omega[1] - omega[0];
    return psd.sum() * domega;
}

double PsdEstimate::peak_omega() const {
    Eigen::Index idx = 0;
    psd.maxCoeff(&idx);
    return omega[idx];
}

PsdEstimate welch_psd(const Eigen::VectorXd& series, double dt, int segment_length,
                      double overlap) {
    if (!(dt > 0.0)) throw ConfigError("welch_psd: dt must be > 0");
    if (segment_length < 8) throw ConfigError("welch_psd: segment too short");
    if (segment_length > series.size())
        throw ConfigError("welch_psd: segment longer than the series");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("welch_psd: overlap in [0,1)");

    const int nseg = segment_length;
    const int hop = std::max(1, static_cast<int>(std::lround(nseg * (1.0 - overlap))));
    Eigen::VectorXd window(nseg);
    for (int k = 0; k < nseg; ++k)
        window[k] = 0.5 * (1.0 - std::cos(2.0 * kPi * k / (nseg - 1)));
    const double win_power = window.squaredNorm();
    const double fs = 1.0 / dt;

    const int n_bins = nseg / 2 + 1;
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(n_bins);
    int count = 0;
    for (Eigen::Index start = 0; start + nseg <= series.size(); start += hop) {
        const Eigen::VectorXd seg = series.segment(start, nseg).cwiseProduct(window);
        const auto spectrum = dft(seg);
        for (int j = 0; j < n_bins; ++j) {
            double p = std::norm(spectrum[static_cast<std::size_t>(j)]) / (fs * win_power);
            if (j != 0 && !(nseg % 2 == 0 && j == n_bins - 1)) p *= 2.0; // one-sided
            acc[j] += p;
        }
        ++count;
    }
    if (count == 0) throw ConfigError("welch_psd: degenerate segmentation");
    acc /= count;

    PsdEstimate est;
    est.segment_length = nseg;
    est.overlap = overlap;
    est.window = "hann";
    est.omega.resize(n_bins);
    est.psd.resize(n_bins);
    for (int j = 0; j < n_bins; ++j) {
        est.omega[j] = 2.0 * kPi * fs * j / nseg; // rad/s
        est.psd[j] = acc[j] / (2.0 * kPi);        // density per rad/s
    }
    return est;
}

double l2_norm(const Eigen::VectorXd& series, double dt) {
    return std::sqrt(series.squaredNorm() * dt);
}

ProjectionResult projection_error(const Eigen::VectorXd& target,
                                  const families::SpectralFamily& family, double dt,
                                  int restarts, std::uint64_t seed, long iterations,
                                  double learning_rate) {
    if (target.size() != family.times().size())
        throw DimensionError("projection_error: target length does not match the family grid");
    ProjectionResult best;
    best.target_norm = l2_norm(target, dt);
    best.error = best.target_norm;
    best.phi = Eigen::VectorXd::Zero(family.n_phases());

    const Eigen::Index m = family.n_phases();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        Eigen::VectorXd phi(m);
        for (Eigen::Index i = 0; i < m; ++i) phi[i] = rng.uniform(0.0, 2.0 * kPi);
        auto adam = neural::AdamState::zeros(m, learning_rate);
        for (long it = 0; it < iterations; ++it) {
            const Eigen::VectorXd residual = target - family.force(phi, 1.0);
            Eigen::VectorXd grad = Eigen::VectorXd::Zero(m);
            // d/dphi of |residual|^2 dt = -2 dt residual . dU/dphi
            family.accumulate_gradients(phi, 1.0, (-2.0 * dt) * residual, grad);
            neural::adam_step(adam, phi, grad);
        }
        const double err = l2_norm(target - family.force(phi, 1.0), dt);
        if (err < best.error) {
            best.error = err;
            best.phi = phi;
        }
    }
    return best;
}

BoundCheckReport bound_check(const dynamics::StructuralModel& model,
                             const Eigen::VectorXd& times, const Eigen::VectorXd& force_a,
                             const Eigen::VectorXd& force_b, const Eigen::VectorXd& omega_grid,
                             const Eigen::VectorXd& theta_in) {
    if (model.bouc_wen()) throw ConfigError("bound_check: linear models only");
    if (force_a.size() != times.size() || force_b.size() != times.size())
        throw DimensionError("bound_check: force series must match the time grid");
    const Eigen::VectorXd theta = theta_in.size() ? theta_in : model.ones_theta();
    const double dt = times[1] - times[0];
    const double t_end = times[times.size() - 1];

    auto interp = [&](const Eigen::VectorXd& f) {
        return [&times, &f](double t) {
            if (t <= times[0]) return f[0];
            if (t >= times[times.size() - 1]) return f[f.size() - 1];
            const double dt_local = times[1] - times[0];
            const auto i = static_cast<Eigen::Index>((t - times[0]) / dt_local);
            const Eigen::Index j = std::min(i, times.size() - 2);
            const double w = (t - times[j]) / dt_local;
            return (1.0 - w) * f[j] + w * f[j + 1];
        };
    };

    const auto traj_a = dynamics::rk4_integrate(model, interp(force_a), dt, t_end,
                                                Eigen::VectorXd(), theta);
    const auto traj_b = dynamics::rk4_integrate(model, interp(force_b), dt, t_end,
                                                Eigen::VectorXd(), theta);
    const auto gain = dynamics::hinf_gain(model, omega_grid, theta);

    const int n = model.ndof();
    BoundCheckReport report;
    report.lhs.resize(n);
    report.rhs.resize(n);
    report.ratio.resize(n);
    const double input_dist = l2_norm(force_a - force_b, dt);
    for (int ch = 0; ch < n; ++ch) {
        report.lhs[ch] =
            l2_norm(traj_a.acceleration.col(ch) - traj_b.acceleration.col(ch), dt);
        report.rhs[ch] = gain.gain[ch] * input_dist;
        report.ratio[ch] = report.rhs[ch] > 0.0 ? report.lhs[ch] / report.rhs[ch] : 0.0;
    }
    report.max_ratio = report.ratio.maxCoeff();
    report.resonance_covered = gain.resonance_covered;
    return report;
}

} // namespace sapinn::metrics

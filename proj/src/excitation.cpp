#include "sapinn/excitation.hpp"

#include "sapinn/csv.hpp"
#include "sapinn/errors.hpp"

#include <cmath>

namespace sapinn::excitation {

FrequencyGrid::FrequencyGrid(Eigen::VectorXd omega, double delta_omega)
    : omega_(std::move(omega)), delta_omega_(delta_omega) {
    if (omega_.size() == 0) throw ConfigError("FrequencyGrid: empty grid");
    if (delta_omega_ <= 0.0) throw ConfigError("FrequencyGrid: delta_omega must be > 0");
    if (omega_[0] < 0.0) throw ConfigError("FrequencyGrid: omega must be >= 0");
    for (Eigen::Index i = 1; i < omega_.size(); ++i) {
        const double step = omega_[i] - omega_[i - 1];
        if (step <= 0.0) throw ConfigError("FrequencyGrid: omega must be strictly increasing");
        if (std::abs(step - delta_omega_) > 1e-12 * std::max(1.0, delta_omega_))
            throw ConfigError("FrequencyGrid: non-uniform spacing");
    }
}

FrequencyGrid FrequencyGrid::uniform(double omega_min, double omega_max, int n_omega) {
    if (n_omega < 1) throw ConfigError("FrequencyGrid: need at least one frequency");
    if (!(omega_max > omega_min) && n_omega > 1)
        throw ConfigError("FrequencyGrid: omega_max must exceed omega_min");
    const double d = n_omega > 1 ? (omega_max - omega_min) / (n_omega - 1) : omega_max - omega_min;
    Eigen::VectorXd w(n_omega);
    for (int i = 0; i < n_omega; ++i) w[i] = omega_min + d * i;
    return FrequencyGrid(std::move(w), n_omega > 1 ? d : (d > 0 ? d : 1.0));
}

SpectrumModel::SpectrumModel(FrequencyGrid grid, Eigen::VectorXd psd_values)
    : grid_(std::move(grid)), psd_(std::move(psd_values)) {
    if (psd_.size() != grid_.size())
        throw DimensionError("SpectrumModel: psd length does not match grid");
    if ((psd_.array() < 0.0).any())
        throw ConfigError("SpectrumModel: negative PSD entry");
    amplitudes_ = (2.0 * psd_.array() * grid_.delta_omega()).sqrt();
}

double wrap_phase(double phi) {
    double r = std::fmod(phi, kTwoPi);
    if (r < 0.0) r += kTwoPi;
    return r;
}

PhaseVector::PhaseVector(Eigen::VectorXd phi) : phi_(std::move(phi)) {
    for (Eigen::Index i = 0; i < phi_.size(); ++i) phi_[i] = wrap_phase(phi_[i]);
}

PhaseVector PhaseVector::random(Eigen::Index n, Rng& rng) {
    Eigen::VectorXd phi(n);
    for (Eigen::Index i = 0; i < n; ++i) phi[i] = rng.uniform(0.0, kTwoPi);
    return PhaseVector(std::move(phi));
}

Envelope Envelope::constant(double amplitude) {
    Envelope e;
    e.kind = Kind::Constant;
    e.amplitude = amplitude;
    e.validate();
    return e;
}

Envelope Envelope::thunderstorm(double gamma_star, double t_gamma, int power) {
    Envelope e;
    e.kind = Kind::Thunderstorm;
    e.gamma_star = gamma_star;
    e.t_gamma = t_gamma;
    e.power = power;
    e.validate();
    return e;
}

Envelope Envelope::seismic_exp_diff(double g_k, double a, double b, int power) {
    Envelope e;
    e.kind = Kind::SeismicExpDiff;
    e.g_k = g_k;
    e.decay_a = a;
    e.decay_b = b;
    e.power = power;
    e.validate();
    return e;
}

void Envelope::validate() const {
    if (power != 1 && power != 2) throw ConfigError("Envelope: power must be 1 or 2");
    switch (kind) {
        case Kind::Constant:
            break;
        case Kind::Thunderstorm:
            if (!(gamma_star > 0.0 && gamma_star <= 1.0))
                throw ConfigError("Envelope: thunderstorm needs 0 < gamma_star <= 1");
            if (!(t_gamma > 0.0)) throw ConfigError("Envelope: thunderstorm needs t_gamma > 0");
            break;
        case Kind::SeismicExpDiff:
            if (!(decay_b > decay_a && decay_a > 0.0))
                throw ConfigError("Envelope: seismic profile needs b > a > 0");
            if (!(g_k > 0.0)) throw ConfigError("Envelope: seismic profile needs g_k > 0");
            break;
    }
}

double envelope_eval(const Envelope& env, double t) {
    if (t < 0.0) throw ConfigError("envelope_eval: t must be >= 0");
    double base = 0.0;
    switch (env.kind) {
        case Envelope::Kind::Constant:
            base = env.amplitude;
            break;
        case Envelope::Kind::Thunderstorm: {
            const double ratio = t / env.t_gamma;
            base = (1.0 - env.gamma_star) / std::sqrt(1.0 + ratio * ratio) + env.gamma_star;
            break;
        }
        case Envelope::Kind::SeismicExpDiff:
            base = env.g_k * (std::exp(-env.decay_a * t) - std::exp(-env.decay_b * t));
            break;
    }
    return env.power == 2 ? base * base : base;
}

Eigen::VectorXd envelope_eval(const Envelope& env, const Eigen::VectorXd& times) {
    Eigen::VectorXd out(times.size());
    for (Eigen::Index k = 0; k < times.size(); ++k) out[k] = envelope_eval(env, times[k]);
    return out;
}

double seismic_peak_normalizing_gk(double a, double b) {
    if (!(b > a && a > 0.0)) throw ConfigError("seismic_peak_normalizing_gk: needs b > a > 0");
    const double t_peak = std::log(b / a) / (b - a);
    const double peak = std::exp(-a * t_peak) - std::exp(-b * t_peak);
    return 1.0 / peak;
}

TimeSeries srm_realize(const SpectrumModel& spectrum, const PhaseVector& phases,
                       const Eigen::VectorXd& times) {
    if (phases.size() != spectrum.size())
        throw DimensionError("srm_realize: phase count does not match spectrum");
    if (!times.allFinite()) throw ConfigError("srm_realize: non-finite time");
    const auto& a = spectrum.amplitudes();
    const auto& w = spectrum.grid().omega();
    const auto& phi = phases.phi();
    TimeSeries out;
    out.t = times;
    out.v = Eigen::VectorXd::Zero(times.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0) continue;
        out.v.array() += a[i] * (w[i] * times.array() + phi[i]).cos();
    }
    return out;
}

TimeSeries modulated_excitation(const Envelope& env, const SpectrumModel& spectrum,
                                const PhaseVector& phases, const Eigen::VectorXd& times) {
    TimeSeries out = srm_realize(spectrum, phases, times);
    out.v.array() *= envelope_eval(env, times).array();
    return out;
}

TimeSeries phase_gradient(const Envelope& env, const SpectrumModel& spectrum,
                          const PhaseVector& phases, Eigen::Index i,
                          const Eigen::VectorXd& times) {
    if (i < 0 || i >= spectrum.size()) throw ConfigError("phase_gradient: index out of range");
    if (phases.size() != spectrum.size())
        throw DimensionError("phase_gradient: phase count does not match spectrum");
    const double a = spectrum.amplitudes()[i];
    const double w = spectrum.grid().omega()[i];
    const double phi = phases.phi()[i];
    TimeSeries out;
    out.t = times;
    out.v = -a * (w * times.array() + phi).sin() * envelope_eval(env, times).array();
    return out;
}

SpectrumModel turbulence_psd(const FrequencyGrid& grid, double turbulence_scale) {
    if (!(turbulence_scale > 0.0)) throw ConfigError("turbulence_psd: scale must be > 0");
    const auto wl = grid.omega().array() * turbulence_scale;
    Eigen::VectorXd s = 6.868 * wl / (1.0 + 10.302 * wl).pow(5.0 / 3.0);
    return SpectrumModel(grid, std::move(s));
}

SpectrumModel kanai_tajimi_psd(const FrequencyGrid& grid, double s1, double omega_g,
                               double zeta_g) {
    if (!(omega_g > 0.0)) throw ConfigError("kanai_tajimi_psd: omega_g must be > 0");
    if (!(zeta_g > 0.0 && zeta_g < 1.0))
        throw ConfigError("kanai_tajimi_psd: zeta_g must lie in (0, 1)");
    if (!(s1 > 0.0)) throw ConfigError("kanai_tajimi_psd: s1 must be > 0");
    const double wg2 = omega_g * omega_g;
    const double wg4 = wg2 * wg2;
    const double damp = 4.0 * zeta_g * zeta_g * wg2;
    const auto w2 = grid.omega().array().square();
    Eigen::VectorXd s =
        s1 * (wg4 + damp * w2) / ((wg2 - w2).square() + damp * w2);
    return SpectrumModel(grid, std::move(s));
}

double log_wind_profile(double z_h, double u_star, double kappa, double z0) {
    if (!(z0 > 0.0 && z_h >= z0)) throw ConfigError("log_wind_profile: needs z_h >= z0 > 0");
    if (!(u_star > 0.0 && kappa > 0.0))
        throw ConfigError("log_wind_profile: u_star and kappa must be > 0");
    return u_star / kappa * std::log(z_h / z0);
}

void ThunderstormWindParams::validate() const {
    if (!(rho > 0.0 && a_eff > 0.0 && c_d > 0.0 && v_bar > 0.0 && i_v > 0.0 &&
          turbulence_scale > 0.0))
        throw ConfigError("ThunderstormWindParams: all parameters must be > 0");
    if (!(i_v < 1.0)) throw ConfigError("ThunderstormWindParams: i_v must be < 1");
}

TimeSeries thunderstorm_wind_force(const ThunderstormWindParams& params,
                                   const Envelope& env_gamma, const SpectrumModel& spectrum,
                                   const PhaseVector& phases, const Eigen::VectorXd& times) {
    params.validate();
    if (env_gamma.kind != Envelope::Kind::Thunderstorm || env_gamma.power != 1)
        throw ConfigError("thunderstorm_wind_force: envelope must be thunderstorm, power 1");
    const Eigen::VectorXd gamma = envelope_eval(env_gamma, times);
    const TimeSeries nu = srm_realize(spectrum, phases, times);
    const Eigen::ArrayXd v_fluct = gamma.array().square() * nu.v.array();
    const Eigen::ArrayXd v = params.v_bar * gamma.array() * (1.0 + params.i_v * v_fluct);
    TimeSeries out;
    out.t = times;
    out.v = 0.5 * params.rho * params.a_eff * params.c_d * v.square();
    return out;
}

void export_spectrum_csv(const SpectrumModel& spectrum, const std::string& path) {
    csv::write_columns(path, {"omega_rad_s", "psd"}, {spectrum.grid().omega(), spectrum.psd()});
}

void export_series_csv(const TimeSeries& series, const std::string& path) {
    csv::write_columns(path, {"t_s", "value"}, {series.t, series.v});
}

} // namespace sapinn::excitation

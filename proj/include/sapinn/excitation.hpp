// Hazard excitation synthesis: spectral-representation realizations of
// stationary processes, hazard envelopes, and the wind / ground-motion
// spectra used by the estimation experiments.
#pragma once

#include "sapinn/rng.hpp"

#include <Eigen/Core>
#include <optional>
#include <string>

namespace sapinn::excitation {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double hz_to_rad(double hz) { return kTwoPi * hz; }
inline double rad_to_hz(double w) { return w / kTwoPi; }

struct TimeSeries {
    Eigen::VectorXd t; // s
    Eigen::VectorXd v;
};

/// Uniform angular-frequency grid, omega >= 0, strictly increasing.
class FrequencyGrid {
  public:
    FrequencyGrid(Eigen::VectorXd omega, double delta_omega);

    /// n points omega_min, omega_min + d, ... covering [omega_min, omega_max].
    static FrequencyGrid uniform(double omega_min, double omega_max, int n_omega);

    const Eigen::VectorXd& omega() const { return omega_; }
    double delta_omega() const { return delta_omega_; }
    Eigen::Index size() const { return omega_.size(); }

  private:
    Eigen::VectorXd omega_;
    double delta_omega_;
};

/// One-sided PSD sampled on a grid plus the cached cosine amplitudes
/// a_i = sqrt(2 S(omega_i) dw).
class SpectrumModel {
  public:
    SpectrumModel(FrequencyGrid grid, Eigen::VectorXd psd_values);

    const FrequencyGrid& grid() const { return grid_; }
    const Eigen::VectorXd& psd() const { return psd_; }
    const Eigen::VectorXd& amplitudes() const { return amplitudes_; }
    Eigen::Index size() const { return psd_.size(); }

    /// Process variance of the truncated expansion, sum a_i^2 / 2.
    double variance() const { return 0.5 * amplitudes_.squaredNorm(); }

  private:
    FrequencyGrid grid_;
    Eigen::VectorXd psd_;
    Eigen::VectorXd amplitudes_;
};

/// Phase angles, one per grid frequency, stored wrapped into [0, 2pi).
class PhaseVector {
  public:
    explicit PhaseVector(Eigen::VectorXd phi);
    static PhaseVector random(Eigen::Index n, Rng& rng);

    const Eigen::VectorXd& phi() const { return phi_; }
    Eigen::Index size() const { return phi_.size(); }

  private:
    Eigen::VectorXd phi_;
};

/// Wrap a single angle into [0, 2pi).
double wrap_phase(double phi);

/// Deterministic time modulation of the stationary process.
struct Envelope {
    enum class Kind { Constant, Thunderstorm, SeismicExpDiff };

    Kind kind = Kind::Constant;
    double amplitude = 1.0;    // Constant: A
    double gamma_star = 0.45;  // Thunderstorm: residual mean-wind intensity
    double t_gamma = 26.45;    // Thunderstorm: peak duration (s)
    double g_k = 1.0;          // SeismicExpDiff: normalizing constant
    double decay_a = 0.1;      // SeismicExpDiff: slow rate (1/s)
    double decay_b = 0.2;      // SeismicExpDiff: fast rate (1/s)
    int power = 1;             // exponent on the base profile, 1 or 2

    static Envelope constant(double amplitude);
    static Envelope thunderstorm(double gamma_star, double t_gamma, int power = 1);
    static Envelope seismic_exp_diff(double g_k, double a, double b, int power = 1);

    void validate() const;
};

/// Envelope value at one instant; t must be >= 0.
double envelope_eval(const Envelope& env, double t);
Eigen::VectorXd envelope_eval(const Envelope& env, const Eigen::VectorXd& times);

/// g_k that makes the exp-difference profile peak at 1.
double seismic_peak_normalizing_gk(double a, double b);

/// Stationary realization p(t) = sum_i a_i cos(omega_i t + phi_i).
TimeSeries srm_realize(const SpectrumModel& spectrum, const PhaseVector& phases,
                       const Eigen::VectorXd& times);

/// Modulated excitation U_phi(t) = h(t) p(t; phi).
TimeSeries modulated_excitation(const Envelope& env, const SpectrumModel& spectrum,
                                const PhaseVector& phases, const Eigen::VectorXd& times);

/// d U_phi / d phi_i = -h(t) a_i sin(omega_i t + phi_i).
TimeSeries phase_gradient(const Envelope& env, const SpectrumModel& spectrum,
                          const PhaseVector& phases, Eigen::Index i,
                          const Eigen::VectorXd& times);

/// Reduced-turbulence PSD S(w) = 6.868 w L / (1 + 10.302 w L)^(5/3).
SpectrumModel turbulence_psd(const FrequencyGrid& grid, double turbulence_scale);

/// Kanai-Tajimi ground-motion PSD.
SpectrumModel kanai_tajimi_psd(const FrequencyGrid& grid, double s1, double omega_g,
                               double zeta_g);

/// Logarithmic mean-wind profile (u_star / kappa) ln(z_h / z0).
double log_wind_profile(double z_h, double u_star, double kappa, double z0);

/// Drag-law parameters for the thunderstorm wind force.
struct ThunderstormWindParams {
    double rho = 1.225;          // air density, kg/m^3
    double a_eff = 8.0;          // exposed area, m^2
    double c_d = 1.0;            // drag coefficient
    double v_bar = 10.0;         // mean wind speed at z_h, m/s
    double i_v = 0.2;            // mean turbulence intensity
    double turbulence_scale = 1.72; // L_w / v_bar, s

    void validate() const;
};

/// Along-wind drag force U(t) = 1/2 rho v(t)^2 A_eff C_D with
/// v = v_bar gamma(t) (1 + I_v gamma(t)^2 nu(t)), nu a realization of the
/// reduced-turbulence spectrum. env_gamma must be a power-1 thunderstorm envelope.
TimeSeries thunderstorm_wind_force(const ThunderstormWindParams& params,
                                   const Envelope& env_gamma, const SpectrumModel& spectrum,
                                   const PhaseVector& phases, const Eigen::VectorXd& times);

/// CSV export: columns (omega_rad_s, psd).
void export_spectrum_csv(const SpectrumModel& spectrum, const std::string& path);
/// CSV export: columns (t_s, value).
void export_series_csv(const TimeSeries& series, const std::string& path);

} // namespace sapinn::excitation

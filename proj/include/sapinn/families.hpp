// Phase-parameterized excitation families used inside training. Each family
// evaluates U(t) on a fixed collocation grid and accumulates exact adjoints
// with respect to its phase angles (and amplitude where trainable) given the
// loss sensitivity dL/dU(t_k). Cosine/sine tables over the grid are cached so
// per-iteration work reduces to a few matrix-vector products.
#pragma once

#include "sapinn/dynamics.hpp"
#include "sapinn/excitation.hpp"

#include <Eigen/Core>
#include <memory>

namespace sapinn::families {

class SpectralFamily {
  public:
    virtual ~SpectralFamily() = default;

    virtual Eigen::Index n_phases() const = 0;
    virtual bool has_amplitude() const { return false; }
    virtual const Eigen::VectorXd& times() const = 0;

    /// U(t_k) for all collocation times. `amplitude` is ignored unless the
    /// family carries a trainable amplitude.
    virtual Eigen::VectorXd force(const Eigen::VectorXd& phi, double amplitude) const = 0;

    /// Accumulates phi_grad_i += sum_k w_k dU(t_k)/dphi_i and returns
    /// sum_k w_k dU(t_k)/dA (zero when there is no amplitude).
    virtual double accumulate_gradients(const Eigen::VectorXd& phi, double amplitude,
                                        const Eigen::VectorXd& weights,
                                        Eigen::VectorXd& phi_grad) const = 0;

    /// Continuous evaluation for simulation (RK4 half-steps).
    virtual dynamics::ExcitationFn continuous(const Eigen::VectorXd& phi,
                                              double amplitude) const = 0;
};

/// Shared cos/sin tables of omega_i t_k over the collocation grid.
struct SrmTables {
    Eigen::VectorXd times;
    Eigen::VectorXd omega;
    Eigen::VectorXd amps;
    Eigen::MatrixXd cos_wt; // N x M
    Eigen::MatrixXd sin_wt; // N x M

    SrmTables(const excitation::SpectrumModel& spectrum, const Eigen::VectorXd& times);

    Eigen::VectorXd realize(const Eigen::VectorXd& phi) const;
    /// phi_grad_i += sum_k w_k dp(t_k)/dphi_i.
    void accumulate(const Eigen::VectorXd& phi, const Eigen::VectorXd& weights,
                    Eigen::VectorXd& phi_grad) const;
};

/// U(t) = A h(t) sum_i a_i cos(w_i t + phi_i); A trainable when requested
/// (the single-frequency configuration with a constant unit envelope).
class ModulatedSrmFamily final : public SpectralFamily {
  public:
    ModulatedSrmFamily(excitation::Envelope envelope, excitation::SpectrumModel spectrum,
                       Eigen::VectorXd times, bool trainable_amplitude = false);

    Eigen::Index n_phases() const override { return tables_.omega.size(); }
    bool has_amplitude() const override { return trainable_amplitude_; }
    const Eigen::VectorXd& times() const override { return tables_.times; }
    Eigen::VectorXd force(const Eigen::VectorXd& phi, double amplitude) const override;
    double accumulate_gradients(const Eigen::VectorXd& phi, double amplitude,
                                const Eigen::VectorXd& weights,
                                Eigen::VectorXd& phi_grad) const override;
    dynamics::ExcitationFn continuous(const Eigen::VectorXd& phi,
                                      double amplitude) const override;

    const excitation::SpectrumModel& spectrum() const { return spectrum_; }
    const excitation::Envelope& envelope() const { return envelope_; }

  private:
    excitation::Envelope envelope_;
    excitation::SpectrumModel spectrum_;
    SrmTables tables_;
    Eigen::VectorXd h_; // envelope over the grid
    bool trainable_amplitude_;
};

/// Quadratic-drag thunderstorm wind force with turbulence realized from the
/// reduced spectrum; phases enter through the fluctuation term.
class ThunderstormDragFamily final : public SpectralFamily {
  public:
    ThunderstormDragFamily(excitation::ThunderstormWindParams params,
                           excitation::Envelope env_gamma,
                           excitation::SpectrumModel spectrum, Eigen::VectorXd times);

    Eigen::Index n_phases() const override { return tables_.omega.size(); }
    const Eigen::VectorXd& times() const override { return tables_.times; }
    Eigen::VectorXd force(const Eigen::VectorXd& phi, double amplitude) const override;
    double accumulate_gradients(const Eigen::VectorXd& phi, double amplitude,
                                const Eigen::VectorXd& weights,
                                Eigen::VectorXd& phi_grad) const override;
    dynamics::ExcitationFn continuous(const Eigen::VectorXd& phi,
                                      double amplitude) const override;

  private:
    excitation::ThunderstormWindParams params_;
    excitation::Envelope env_gamma_;
    excitation::SpectrumModel spectrum_;
    SrmTables tables_;
    Eigen::VectorXd gamma_;  // envelope over the grid
    Eigen::VectorXd gamma2_; // squared
    double drag_q_;          // 1/2 rho A_eff C_D
};

} // namespace sapinn::families

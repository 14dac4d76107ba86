// Forward simulation of shear-building chains, optionally with a Bouc-Wen
// hysteretic base element, plus noisy acceleration observation synthesis and
// the input-to-acceleration worst-case gain.
#pragma once

#include "sapinn/rng.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sapinn::dynamics {

/// Smooth hysteretic element replacing the elastic action of the base spring:
/// dr/dt = v1 - beta |v1| |r|^(n-1) r - alpha_r v1 |r|^n, force = k1 * r.
struct BoucWen {
    double alpha_r = 1.0; // post-yield ratio parameter
    double beta = 0.5;    // loop-width parameter
    double n_exp = 1.0;   // elastic-to-plastic transition sharpness, >= 1
    int location = 0;     // DoF index of the hysteretic element (base only)
};

/// How the scalar input U(t) enters the equations of motion.
struct InputMap {
    enum class Kind { NodalForce, BaseExcitation };
    Kind kind = Kind::NodalForce;
    int dof = 0; // for NodalForce

    static InputMap nodal_force(int dof) { return {Kind::NodalForce, dof}; }
    static InputMap base_excitation() { return {Kind::BaseExcitation, 0}; }
};

/// Marks a chain element whose nominal value is multiplied by a trainable
/// scaling factor theta[theta_index].
struct ScalingAssignment {
    enum class Target { Stiffness, Damping };
    Target target = Target::Stiffness;
    int element = 0;     // chain element index, 0-based (element 0 connects to ground)
    int theta_index = 0; // position inside the theta vector
};

/// Lumped-mass shear-building chain.
class StructuralModel {
  public:
    StructuralModel(Eigen::VectorXd masses, Eigen::VectorXd damping, Eigen::VectorXd stiffness,
                    InputMap input = InputMap::nodal_force(0),
                    std::optional<BoucWen> bouc_wen = std::nullopt,
                    std::vector<ScalingAssignment> scalings = {},
                    std::vector<std::string> theta_names = {});

    int ndof() const { return static_cast<int>(masses_.size()); }
    int ntheta() const { return ntheta_; }
    const Eigen::VectorXd& masses() const { return masses_; }
    const Eigen::VectorXd& damping() const { return damping_; }
    const Eigen::VectorXd& stiffness() const { return stiffness_; }
    const InputMap& input() const { return input_; }
    const std::optional<BoucWen>& bouc_wen() const { return bouc_wen_; }
    const std::vector<ScalingAssignment>& scalings() const { return scalings_; }
    const std::vector<std::string>& theta_names() const { return theta_names_; }

    /// State dimension: 2 ndof, +1 with a hysteretic element.
    int state_dim() const { return 2 * ndof() + (bouc_wen_ ? 1 : 0); }

    /// Chain stiffness matrix at the given scaling factors. When a Bouc-Wen
    /// element is present its spring contributes through the restoring force
    /// instead and is left out of K.
    Eigen::MatrixXd stiffness_matrix(const Eigen::VectorXd& theta) const;
    Eigen::MatrixXd damping_matrix(const Eigen::VectorXd& theta) const;

    /// Split K(theta) = K_base + sum_p theta_p K_p (same for damping).
    Eigen::MatrixXd stiffness_base() const;
    Eigen::MatrixXd stiffness_theta_part(int theta_index) const;
    Eigen::MatrixXd damping_base() const;
    Eigen::MatrixXd damping_theta_part(int theta_index) const;

    /// Force vector per unit input: e_dof for a nodal force, -masses for base
    /// excitation (input interpreted as ground acceleration).
    Eigen::VectorXd input_vector() const;

    /// Influence vector of the hysteretic restoring force times its spring rate,
    /// zero when the model is purely elastic.
    Eigen::VectorXd restoring_vector() const;

    Eigen::VectorXd ones_theta() const { return Eigen::VectorXd::Ones(ntheta_); }

  private:
    Eigen::MatrixXd chain_matrix(const Eigen::VectorXd& values, bool skip_bw_element) const;
    Eigen::MatrixXd chain_matrix_selected(ScalingAssignment::Target target, int theta_index,
                                          bool base_part) const;

    Eigen::VectorXd masses_, damping_, stiffness_;
    InputMap input_;
    std::optional<BoucWen> bouc_wen_;
    std::vector<ScalingAssignment> scalings_;
    std::vector<std::string> theta_names_;
    int ntheta_ = 0;
};

struct StateSpace {
    Eigen::MatrixXd a; // 2n x 2n companion form
    Eigen::VectorXd b; // 2n input column
};

/// Companion-form matrices for the linear path; rejects hysteretic models.
StateSpace assemble_linear(const StructuralModel& model, const Eigen::VectorXd& theta);
StateSpace assemble_linear(const StructuralModel& model);

/// Scalar input history evaluable at arbitrary t (analytic families or
/// interpolated records).
using ExcitationFn = std::function<double(double)>;

/// State derivative at (t, state); state layout [x, v, (r)].
Eigen::VectorXd rhs(const StructuralModel& model, double t, const Eigen::VectorXd& state,
                    const ExcitationFn& excitation, const Eigen::VectorXd& theta);

struct StateTrajectory {
    Eigen::VectorXd times;        // uniform, starting at 0
    Eigen::MatrixXd displacement; // T x ndof
    Eigen::MatrixXd velocity;     // T x ndof
    Eigen::MatrixXd acceleration; // T x ndof
    std::optional<Eigen::VectorXd> restoring; // T, dimensionless r1
};

/// Classical fourth-order Runge-Kutta from rest (or the given state) at fixed dt.
StateTrajectory rk4_integrate(const StructuralModel& model, const ExcitationFn& excitation,
                              double dt, double t_end,
                              const Eigen::VectorXd& init_state = Eigen::VectorXd(),
                              const Eigen::VectorXd& theta = Eigen::VectorXd());

struct Observation {
    Eigen::VectorXd times;
    Eigen::MatrixXd accel_noisy; // T x ndof
    double noise_ratio = 0.0;
    std::uint64_t seed = 0;
};

/// Add zero-mean Gaussian noise, std = noise_ratio x per-channel RMS.
Observation measure(const StateTrajectory& traj, double noise_ratio, std::uint64_t seed);

struct HinfResult {
    Eigen::VectorXd gain;         // per measured channel, max_w |H(jw)|
    Eigen::VectorXd argmax_omega; // rad/s
    bool resonance_covered = true; // false if some natural frequency lies off-grid
};

/// Worst-case input-to-acceleration transfer gain over the given frequency grid.
HinfResult hinf_gain(const StructuralModel& model, const Eigen::VectorXd& omega_grid,
                     const Eigen::VectorXd& theta = Eigen::VectorXd());

/// Undamped natural frequencies (rad/s), ascending.
Eigen::VectorXd natural_frequencies(const StructuralModel& model, const Eigen::VectorXd& theta);

/// CSV export with columns t_s, x1.., v1.., a1..[, r1].
void export_trajectory_csv(const StateTrajectory& traj, const std::string& path);
/// CSV export with columns t_s, a1..an.
void export_observation_csv(const Observation& obs, const std::string& path);

} // namespace sapinn::dynamics

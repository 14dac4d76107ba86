// Joint input-state-parameter estimation. A sine network represents the
// latent displacements (plus the hysteretic restoring force when present);
// velocities and accelerations come from its exact time derivatives. The
// composite loss couples a model-consistency residual anchored to the
// observed accelerations, a data residual on the network accelerations, and
// an initial-condition term. Unknown forces are either a spectral family
// parameterized by phases or a second network.
#pragma once

#include "sapinn/dynamics.hpp"
#include "sapinn/families.hpp"
#include "sapinn/neural.hpp"

#include <Eigen/Core>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace sapinn::estimators {

enum class Mode { PinnKnownForce, PinnUnknownForce, SapinnRandomPhase, SapinnTrainedPhase };

std::string mode_name(Mode mode);
Mode mode_from_name(const std::string& name);

struct LossWeights {
    double lambda_sp = 1.0; // spectrum-physics (or physics) residual
    double lambda_d = 1.0;  // data residual
    double lambda_bc = 1.0; // boundary/initial-condition residual
};

/// Weighted loss components; total is their exact sum.
struct LossBreakdown {
    double total = 0.0;
    double spectrum_physics = 0.0;
    double data = 0.0;
    double boundary = 0.0;
};

/// Everything the optimizer touches. theta is kept in softplus coordinates so
/// scaling factors stay positive; theta() reports natural units.
struct TrainableSet {
    neural::NetworkParams xi;
    Eigen::VectorXd theta_raw;
    Eigen::VectorXd phi;
    std::optional<neural::NetworkParams> force_net;
    std::optional<double> amplitude;

    Eigen::VectorXd theta() const;
    static double softplus(double raw);
    static double softplus_inv(double natural);
};

/// Estimation problem over a fixed observation record.
struct Problem {
    explicit Problem(dynamics::StructuralModel assumed_model)
        : assumed(std::move(assumed_model)) {}

    dynamics::StructuralModel assumed;
    Mode mode = Mode::SapinnTrainedPhase;
    const dynamics::Observation* obs = nullptr;
    std::shared_ptr<const families::SpectralFamily> family; // sapinn modes
    Eigen::VectorXd known_force;                            // pinn with known force
    LossWeights weights;
    bool normalize_by_channel_variance = true;
    bool use_boundary = true;
    Eigen::VectorXd bc_state;      // [x0.., v0.., (r0)] at the first time stamp
    neural::TimeScaling time_scaling;
    Eigen::VectorXd output_scales; // per network output (ndof [+ restoring])
    double force_scale = 1.0;      // force-network de-normalization
    double amplitude_scale = 1.0;  // trainable-amplitude units (A = raw * scale)
    double omega_ref = 1.0;        // rad/s, balances velocity boundary entries

    int n_latent_outputs() const;
    bool hysteretic() const { return assumed.bouc_wen().has_value(); }
    void validate() const;
};

/// Latent state jets on the collocation grid (values already de-normalized).
struct LatentJets {
    Eigen::MatrixXd x0, x1, x2;     // N x ndof: displacement, velocity, acceleration
    Eigen::VectorXd r0, r1;         // N: restoring force and its rate (may be empty)
};

/// Loss components given latent jets and the input series directly, at the
/// given natural scaling factors. This is the single source of truth for the
/// residual formulas; the network path and the tests both go through it.
LossBreakdown compute_losses(const Problem& problem, const Eigen::VectorXd& theta,
                             const LatentJets& latents, const Eigen::VectorXd& force);

/// Model-predicted accelerations H f(x, v, r, U; theta) used by the
/// consistency residual.
Eigen::MatrixXd model_acceleration(const Problem& problem, const Eigen::VectorXd& theta,
                                   const LatentJets& latents, const Eigen::VectorXd& force);

/// Latent jets produced by the network of a trainable set.
LatentJets evaluate_latents(const Problem& problem, const TrainableSet& trainables, int order,
                            neural::ForwardStash* stash = nullptr);

/// Input series U(t_k) for the current trainables (family, force net, or known).
Eigen::VectorXd evaluate_force(const Problem& problem, const TrainableSet& trainables);

/// Loss only.
LossBreakdown evaluate_loss(const Problem& problem, const TrainableSet& trainables);

/// Loss and the gradient with respect to the packed trainables.
LossBreakdown loss_and_gradient(const Problem& problem, const TrainableSet& trainables,
                                Eigen::VectorXd& grad);

/// Flat parameter vector layout: [xi | force_net? | theta_raw | phi? | amplitude?].
/// phi is packed only in the trained-phase mode.
Eigen::VectorXd pack_trainables(const Problem& problem, const TrainableSet& trainables);
void unpack_trainables(const Problem& problem, const Eigen::VectorXd& flat,
                       TrainableSet& trainables);

struct InitConfig {
    std::vector<int> hidden_layers{20, 20};
    int n_outputs = 1;
    double omega0 = 30.0;
    int n_theta = 1;
    double theta_init = 1.2;
    Eigen::Index n_phases = 0;       // 0 when no spectral family
    bool with_force_net = false;
    std::vector<int> force_hidden;   // defaults to hidden_layers when empty
    bool with_amplitude = false;
    double amplitude_init = 300.0;
};

/// Fresh trainables: theta at 1.2, phases uniform in [0, 2pi), sine-network
/// weights per the initialization recipe.
TrainableSet init_trainables(const InitConfig& config, Rng& rng);

struct TrainConfig {
    long iterations = 20000;
    double learning_rate = 1e-3;
    long log_every = 100;
};

struct LogRow {
    long iteration = 0;
    LossBreakdown loss;
    Eigen::VectorXd theta;
    double phi_norm = 0.0;
};

struct TrainResult {
    TrainableSet best;      // parameters at the lowest recorded total loss
    TrainableSet final;     // last iterate
    LossBreakdown best_loss;
    std::vector<LogRow> history;
    neural::AdamState adam; // optimizer state after the last step
    bool diverged = false;
    long diverged_at = -1;
    long iterations_run = 0;
};

/// Full-batch Adam minimization of the composite loss. `config.iterations` is
/// the total iteration count; resuming passes the restored optimizer state
/// and the iteration already reached.
TrainResult train(const Problem& problem, const TrainConfig& config, TrainableSet initial,
                  const neural::AdamState* resume_adam = nullptr, long start_iteration = 0);

struct Prediction {
    Eigen::VectorXd times;
    Eigen::MatrixXd displacement; // N x ndof
    Eigen::MatrixXd velocity;
    Eigen::VectorXd restoring;      // empty when elastic
    Eigen::VectorXd restoring_rate; // empty when elastic
    Eigen::VectorXd force;          // reconstructed input series
};

/// States from the network, excitation from the fitted family / force net.
Prediction predict(const Problem& problem, const TrainableSet& fitted,
                   const Eigen::VectorXd& times);

/// Training log CSV: iteration, losses, thetas, phi norm.
void export_history_csv(const std::vector<LogRow>& history, const std::string& path);

/// Versioned field-tagged text checkpoint; round-trips every double exactly.
void save_checkpoint(const std::string& path, const TrainableSet& trainables,
                     const neural::AdamState& adam, std::uint64_t rng_seed,
                     std::uint64_t rng_draws, long iteration);
struct Checkpoint {
    TrainableSet trainables;
    neural::AdamState adam;
    std::uint64_t rng_seed = 0;
    std::uint64_t rng_draws = 0;
    long iteration = 0;
};
Checkpoint load_checkpoint(const std::string& path);

} // namespace sapinn::estimators

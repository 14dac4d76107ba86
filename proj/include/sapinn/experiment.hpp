// Config-driven experiment orchestration: the five benchmark setups
// (sinusoidal SDoF, thunderstorm SDoF, low/high-frequency hysteretic chains
// under synthetic ground motion, and a recorded-accelerogram variant), data
// generation, estimation problems built from observation files, ensemble
// reports, and quantitative metric tables.
#pragma once

#include "sapinn/dynamics.hpp"
#include "sapinn/ensemble.hpp"
#include "sapinn/estimators.hpp"
#include "sapinn/excitation.hpp"
#include "sapinn/families.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sapinn::experiment {

enum class Kind {
    ToySdof,
    ThunderstormSdof,
    SyntheticQuake3DofLow,
    SyntheticQuake3DofHigh,
    Elcentro3Dof,
    Custom
};

std::string kind_name(Kind kind);
Kind kind_from_name(const std::string& name);

enum class Profile { Paper, Desk };

struct ModelConfig {
    Eigen::VectorXd masses;     // kg
    Eigen::VectorXd damping;    // N s/m
    Eigen::VectorXd stiffness;  // N/m
    dynamics::InputMap input;
    std::optional<dynamics::BoucWen> bouc_wen;
};

struct ExcitationConfig {
    enum class Family { Sinusoid, ThunderstormWind, KanaiTajimi, Recorded };
    Family family = Family::Sinusoid;

    // sinusoid
    double omega = 0.5;            // rad/s
    double amplitude = 200.0;      // N (truth)
    double phase = 4.712388980384689858; // rad, truth (3 pi / 2: a sine)

    // thunderstorm wind
    excitation::ThunderstormWindParams wind;
    double gamma_star = 0.45;
    double t_gamma = 26.45;

    // kanai-tajimi ground motion
    double s1 = 0.1;
    double omega_g = 21.991148575128552; // rad/s (3.5 Hz)
    double zeta_g = 0.24;
    double envelope_a = 0.1;  // 1/s
    double envelope_b = 0.2;  // 1/s
    double envelope_gk = 1.0;
    int envelope_power = 2;

    // shared spectral grid (thunderstorm + kanai-tajimi)
    double freq_min_hz = 0.0;
    double freq_max_hz = 1.0;
    double delta_freq_hz = 0.0; // 0: derived from n_omega
    int n_omega = 128;

    // recorded ground motion
    std::string record_path;
    std::string record_format = "two_column_csv"; // or "peer"
    std::string record_units = "m_per_s2";        // or "g"
    double record_scale = 1.0;
};

struct NetworkConfig {
    std::vector<int> hidden{20, 20};
    double omega0 = 30.0;
    std::vector<double> output_scales; // empty: derived from the observation
    double force_scale = 0.0;          // 0: derived from the observation
};

struct TrainingConfig {
    long iterations = 20000;
    double learning_rate = 1e-3;
    long log_every = 100;
    estimators::LossWeights weights;
    bool normalize_by_channel_variance = true;
};

struct ExperimentConfig {
    Kind kind = Kind::ToySdof;
    Profile profile = Profile::Desk;
    std::uint64_t seed = 1;
    std::string output_dir = "run";
    estimators::Mode mode = estimators::Mode::SapinnTrainedPhase;

    double duration = 50.0;   // s
    double dt = 0.01;         // s
    double noise_ratio = 0.15;

    ModelConfig truth;
    ModelConfig assumed;
    std::vector<dynamics::ScalingAssignment> theta;
    std::vector<std::string> theta_names;
    ExcitationConfig excitation;
    NetworkConfig network;
    TrainingConfig training;
    int q_members = 5;
};

/// Paper-default configuration for a kind, then profile adjustments
/// (the desk profile shrinks the ensemble, iteration budget and spectral grid).
ExperimentConfig default_config(Kind kind, Profile profile);

/// Parse a JSON config file; unknown keys are rejected. Fields not present
/// fall back to the kind defaults under the requested profile.
ExperimentConfig load_config(const std::string& path,
                             const std::optional<std::string>& profile_override = {},
                             const std::optional<std::uint64_t>& seed_override = {},
                             const std::optional<std::string>& out_override = {},
                             const std::optional<std::string>& mode_override = {});

/// Serialize the effective configuration (snapshot written into run dirs).
std::string config_to_json(const ExperimentConfig& config);

dynamics::StructuralModel build_model(const ModelConfig& model,
                                      const std::vector<dynamics::ScalingAssignment>& theta,
                                      const std::vector<std::string>& theta_names);

/// Spectrum for the configured spectral family (thunderstorm or seismic).
excitation::SpectrumModel build_spectrum(const ExcitationConfig& config);

/// Excitation family over the given collocation grid.
std::shared_ptr<families::SpectralFamily> build_family(const ExperimentConfig& config,
                                                       const Eigen::VectorXd& times);

struct GroundMotionRecord {
    Eigen::VectorXd times;  // s, uniform after resampling
    Eigen::VectorXd accel;  // m/s^2
    std::string source_label;
    double scale = 1.0;
    double original_dt = 0.0;
};

/// Parse a ground-motion file (two-column CSV or fixed-count text with an
/// NPTS/DT header), convert units, apply the scale factor, and resample to
/// target_dt by linear interpolation.
GroundMotionRecord ingest_ground_motion(const std::string& path, const std::string& format,
                                        double target_dt, const std::string& units = "m_per_s2",
                                        double scale = 1.0);

struct SimulationArtifacts {
    dynamics::StateTrajectory trajectory;
    dynamics::Observation observation;
    excitation::TimeSeries truth_force; // scalar input series (force or ground accel)
    Eigen::VectorXd truth_phases;       // empty for deterministic/recorded inputs
};

/// Generate the truth response and noisy observations for a configuration.
SimulationArtifacts simulate(const ExperimentConfig& config);

/// simulate + write run artifacts (config snapshot, seeds, CSVs).
SimulationArtifacts cmd_simulate(const ExperimentConfig& config);

/// Estimation problem for the configured mode over an observation record.
/// Owns the observation via shared storage so the problem stays valid.
struct BuiltProblem {
    std::shared_ptr<dynamics::Observation> observation;
    std::shared_ptr<estimators::Problem> problem;
};
BuiltProblem build_problem(const ExperimentConfig& config,
                           const dynamics::Observation& obs,
                           const Eigen::VectorXd& known_force = Eigen::VectorXd(),
                           const Eigen::VectorXd& initial_state = Eigen::VectorXd());

estimators::InitConfig build_init(const ExperimentConfig& config);

struct TrainArtifacts {
    estimators::TrainResult result;
    std::string checkpoint_path;
};

/// Train a single model from the run directory produced by cmd_simulate;
/// resumes from an existing checkpoint when present.
TrainArtifacts cmd_train(const ExperimentConfig& config);

struct EnsembleArtifacts {
    ensemble::EnsembleResult result;
    ensemble::ParameterStats parameters;
};

/// Ensemble run over the simulated observation, with report, band CSVs and a
/// metrics table written into the run directory.
EnsembleArtifacts cmd_ensemble(const ExperimentConfig& config);

/// Metric tables (parameter statistics and per-quantity MSE) recomputed from
/// the artifacts of a completed ensemble run directory.
std::string cmd_report(const ExperimentConfig& config);

/// Helpers shared with the acceptance suite.
Eigen::VectorXd read_series_csv(const std::string& path, int value_column = 1);
std::string run_path(const ExperimentConfig& config, const std::string& filename);

} // namespace sapinn::experiment

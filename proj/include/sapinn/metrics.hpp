// Evaluation utilities: mean-squared errors, Welch spectral estimates,
// L2 projection onto a phase-parameterized excitation family, and the
// worst-case-gain bound check between two inputs on a linear model.
#pragma once

#include "sapinn/dynamics.hpp"
#include "sapinn/families.hpp"

#include <Eigen/Core>
#include <string>
#include <vector>

namespace sapinn::metrics {

/// Mean of squared differences; lengths must match.
double mse(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct PsdEstimate {
    Eigen::VectorXd omega; // rad/s, one-sided
    Eigen::VectorXd psd;   // density per rad/s
    int segment_length = 0;
    double overlap = 0.0;
    std::string window;

    /// Integral of the density over omega (rectangle rule).
    double integrated_power() const;
    /// Frequency at the maximum density (rad/s).
    double peak_omega() const;
};

/// Averaged modified periodograms, Hann window, one-sided density scaling.
PsdEstimate welch_psd(const Eigen::VectorXd& series, double dt, int segment_length = 1024,
                      double overlap = 0.5);

struct ProjectionResult {
    double error = 0.0;          // discrete L2 distance at the minimizer
    Eigen::VectorXd phi;         // best phases found
    double target_norm = 0.0;    // discrete L2 norm of the target
};

/// Discrete L2 projection of `target` onto the family's phase orbit by Adam
/// with analytic phase gradients and uniform multi-starts. Nonconvex; reports
/// the best of all restarts.
ProjectionResult projection_error(const Eigen::VectorXd& target,
                                  const families::SpectralFamily& family, double dt,
                                  int restarts = 8, std::uint64_t seed = 1,
                                  long iterations = 2000, double learning_rate = 0.05);

struct BoundCheckReport {
    Eigen::VectorXd lhs;     // per-channel response distance
    Eigen::VectorXd rhs;     // per-channel gain x input distance
    Eigen::VectorXd ratio;   // lhs / rhs, 0 when both vanish
    double max_ratio = 0.0;
    bool resonance_covered = true;
};

/// Simulates the linear model under both inputs and compares the response
/// distance against the worst-case frequency gain times the input distance.
BoundCheckReport bound_check(const dynamics::StructuralModel& model,
                             const Eigen::VectorXd& times, const Eigen::VectorXd& force_a,
                             const Eigen::VectorXd& force_b, const Eigen::VectorXd& omega_grid,
                             const Eigen::VectorXd& theta = Eigen::VectorXd());

/// dt-weighted discrete L2 norm.
double l2_norm(const Eigen::VectorXd& series, double dt);

} // namespace sapinn::metrics

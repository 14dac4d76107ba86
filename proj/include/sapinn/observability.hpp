// Rank diagnostics for joint input-state-parameter estimation from a single
// acceleration output with direct feedthrough. Rows of the observability
// matrix are gradients of iterated Lie derivatives of the output map,
// computed with nested dual numbers; time enters the maps as a frozen
// parameter, matching the recursion L^k g = grad(L^{k-1} g) . f.
#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <vector>

namespace sapinn::observability {

/// One SDoF output map family with parameters folded as constant states.
/// appendix_a: unknown damping, stiffness and phase; known mass and amplitude.
/// appendix_b: unknown stiffness, amplitude and phase; known damping.
/// multi_phase: unknown damping, stiffness and one phase per excitation tone.
class AugmentedSystem {
  public:
    static AugmentedSystem appendix_a(double amplitude = 1.0, double omega0 = 1.0);
    static AugmentedSystem appendix_b(double damping = 1.0, double omega0 = 1.0);
    static AugmentedSystem multi_phase(const Eigen::VectorXd& amplitudes,
                                       const Eigen::VectorXd& omegas);
    /// multi_phase with unit amplitudes and omegas 1..n (rad/s).
    static AugmentedSystem multi_phase(int n_omega);

    int dim() const;
    const std::vector<std::string>& labels() const { return labels_; }
    /// Slowest excitation frequency, used for default interval sampling.
    double slowest_omega() const;

    double output(const Eigen::VectorXd& z, double t) const;
    Eigen::VectorXd dynamics(const Eigen::VectorXd& z, double t) const;

    /// Iterated Lie derivative of the output along the dynamics, order k in
    /// [0, dim-1].
    double lie_derivative(int k, const Eigen::VectorXd& z, double t) const;

    /// Rows are gradients of Lie derivatives of orders 0..dim-1.
    Eigen::MatrixXd observability_matrix(const Eigen::VectorXd& z, double t) const;

    struct Impl;
    explicit AugmentedSystem(Impl impl);
    ~AugmentedSystem();
    AugmentedSystem(const AugmentedSystem&);
    AugmentedSystem& operator=(const AugmentedSystem&);
    AugmentedSystem(AugmentedSystem&&) noexcept;
    AugmentedSystem& operator=(AugmentedSystem&&) noexcept;

  private:
    std::unique_ptr<Impl> impl_;
    std::vector<std::string> labels_;
};

/// Named factory for the CLI: appendix_a | appendix_b | multi_phase.
AugmentedSystem builtin_case(const std::string& name, int n_omega = 3);

struct PointAnalysis {
    double t = 0.0;
    Eigen::VectorXd singular_values;
    int rank = 0;
};

struct ObservabilityReport {
    Eigen::VectorXd point;                 // evaluation state
    std::vector<PointAnalysis> per_time;   // pointwise matrices
    Eigen::VectorXd stacked_singular_values;
    int stacked_rank = 0;
    int dim = 0;
    double tolerance = 0.0;
    bool all_zero = false;                 // stacked matrix had no signal

    bool observable_over_interval() const { return stacked_rank == dim; }
};

/// Stack the per-time matrices vertically and count singular values above
/// tol * sigma_max. Needs at least two time samples.
ObservabilityReport stacked_rank(const AugmentedSystem& sys, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& times, double tol = 1e-8);

/// n samples spread over one period of the slowest excitation frequency.
Eigen::VectorXd default_time_samples(const AugmentedSystem& sys, int n = 10);

/// Singular values, ranks and the interval verdict as structured text.
void write_report(const ObservabilityReport& report, const std::string& path);
std::string format_report(const ObservabilityReport& report);

} // namespace sapinn::observability

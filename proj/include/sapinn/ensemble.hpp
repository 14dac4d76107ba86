// Deep-ensemble orchestration: Q independently initialized trainings with
// index-derived seeds, plus predictive statistics over member reconstructions.
// Sums run over sorted addends so statistics are exactly invariant to member
// ordering and to how members were scheduled.
#pragma once

#include "sapinn/estimators.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace sapinn::ensemble {

struct EnsembleSpec {
    int q_members = 5;
    std::uint64_t master_seed = 1;
    std::vector<std::uint64_t> member_seeds; // optional; derived when empty
    estimators::TrainConfig train;
    int n_threads = 1;
};

struct EnsembleResult {
    std::vector<estimators::TrainResult> members; // member order
    std::vector<std::uint64_t> seeds;
    std::vector<int> included; // non-diverged member indices
};

/// Seeds for every member, derived from the master seed unless given.
std::vector<std::uint64_t> member_seeds(const EnsembleSpec& spec);

/// Train Q members. Diverged members are kept in `members` but left out of
/// `included`; fewer than two surviving members is an error.
EnsembleResult run_ensemble(const estimators::Problem& problem,
                            const estimators::InitConfig& init, const EnsembleSpec& spec);

struct SeriesStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd variance; // unbiased, divisor Q-1
};

/// Pointwise mean/variance over rows of member series (N x Q).
SeriesStats series_stats(const Eigen::MatrixXd& member_series);

/// Member force reconstructions at the given times, one column per included member.
Eigen::MatrixXd member_forces(const estimators::Problem& problem, const EnsembleResult& result,
                              const Eigen::VectorXd& times);

/// Ensemble mean/variance of the reconstructed excitation.
SeriesStats force_stats(const estimators::Problem& problem, const EnsembleResult& result,
                        const Eigen::VectorXd& times);

/// Member displacement reconstructions for one DoF.
Eigen::MatrixXd member_displacements(const estimators::Problem& problem,
                                     const EnsembleResult& result, const Eigen::VectorXd& times,
                                     int dof);

/// Member restoring-force reconstructions (hysteretic problems).
Eigen::MatrixXd member_restoring(const estimators::Problem& problem,
                                 const EnsembleResult& result, const Eigen::VectorXd& times);

struct ParameterStats {
    std::vector<std::string> names;
    Eigen::VectorXd mean;
    Eigen::VectorXd sigma;           // sample std, divisor Q-1
    Eigen::MatrixXd member_values;   // rows = included members
};

/// Mean and spread of the fitted scaling factors (and amplitude when present).
ParameterStats parameter_stats(const estimators::Problem& problem,
                               const EnsembleResult& result);

/// CSV with columns t_s, mean, lower_2sigma, upper_2sigma.
void export_band_csv(const Eigen::VectorXd& times, const SeriesStats& stats,
                     const std::string& path);

/// Structured text report: member table plus parameter statistics.
void write_report(const std::string& path, const estimators::Problem& problem,
                  const EnsembleResult& result);

} // namespace sapinn::ensemble

#include "sapinn/ensemble.hpp"

#include "sapinn/csv.hpp"
#include "sapinn/errors.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

namespace sapinn::ensemble {

std::vector<std::uint64_t> member_seeds(const EnsembleSpec& spec) {
    if (spec.q_members < 2) throw ConfigError("EnsembleSpec: need at least two members");
    std::vector<std::uint64_t> seeds = spec.member_seeds;
    if (seeds.empty())
        for (int q = 0; q < spec.q_members; ++q)
            seeds.push_back(derive_seed(spec.master_seed, static_cast<std::uint64_t>(q)));
    if (static_cast<int>(seeds.size()) != spec.q_members)
        throw ConfigError("EnsembleSpec: seed count must equal member count");
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size())
        throw ConfigError("EnsembleSpec: member seeds must be pairwise distinct");
    return seeds;
}

EnsembleResult run_ensemble(const estimators::Problem& problem,
                            const estimators::InitConfig& init, const EnsembleSpec& spec) {
    EnsembleResult result;
    result.seeds = member_seeds(spec);
    result.members.resize(spec.q_members);

    auto run_member = [&](int q) {
        Rng rng(result.seeds[q]);
        auto initial = estimators::init_trainables(init, rng);
        result.members[q] = estimators::train(problem, spec.train, std::move(initial));
    };

    const int workers = std::max(1, std::min(spec.n_threads, spec.q_members));
    if (workers == 1) {
        for (int q = 0; q < spec.q_members; ++q) run_member(q);
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (int q = next.fetch_add(1); q < spec.q_members; q = next.fetch_add(1))
                    run_member(q);
            });
        for (auto& t : pool) t.join();
    }

    for (int q = 0; q < spec.q_members; ++q)
        if (!result.members[q].diverged) result.included.push_back(q);
    if (result.included.size() < 2)
        throw NumericError("run_ensemble: fewer than two members converged");
    return result;
}

namespace {

// Sum in ascending value order: exact invariance to member permutations.
double sorted_sum(std::vector<double>& scratch) {
    std::sort(scratch.begin(), scratch.end());
    double s = 0.0;
    for (double v : scratch) s += v;
    return s;
}

} // namespace

SeriesStats series_stats(const Eigen::MatrixXd& member_series) {
    const Eigen::Index q = member_series.cols();
    if (q < 2) throw NumericError("series_stats: need at least two members");
    SeriesStats stats;
    stats.mean.resize(member_series.rows());
    stats.variance.resize(member_series.rows());
    std::vector<double> scratch(static_cast<std::size_t>(q));
    for (Eigen::Index k = 0; k < member_series.rows(); ++k) {
        for (Eigen::Index j = 0; j < q; ++j) scratch[static_cast<std::size_t>(j)] = member_series(k, j);
        const double mean = sorted_sum(scratch) / static_cast<double>(q);
        for (Eigen::Index j = 0; j < q; ++j) {
            const double d = member_series(k, j) - mean;
            scratch[static_cast<std::size_t>(j)] = d * d;
        }
        stats.mean[k] = mean;
        stats.variance[k] = sorted_sum(scratch) / static_cast<double>(q - 1);
    }
    return stats;
}

Eigen::MatrixXd member_forces(const estimators::Problem& problem, const EnsembleResult& result,
                              const Eigen::VectorXd& times) {
    Eigen::MatrixXd forces(times.size(), static_cast<Eigen::Index>(result.included.size()));
    for (std::size_t j = 0; j < result.included.size(); ++j) {
        const auto& best = result.members[result.included[j]].best;
        forces.col(static_cast<Eigen::Index>(j)) =
            estimators::predict(problem, best, times).force;
    }
    return forces;
}

SeriesStats force_stats(const estimators::Problem& problem, const EnsembleResult& result,
                        const Eigen::VectorXd& times) {
    return series_stats(member_forces(problem, result, times));
}

Eigen::MatrixXd member_displacements(const estimators::Problem& problem,
                                     const EnsembleResult& result, const Eigen::VectorXd& times,
                                     int dof) {
    if (dof < 0 || dof >= problem.assumed.ndof())
        throw ConfigError("member_displacements: DoF out of range");
    Eigen::MatrixXd out(times.size(), static_cast<Eigen::Index>(result.included.size()));
    for (std::size_t j = 0; j < result.included.size(); ++j) {
        const auto& best = result.members[result.included[j]].best;
        out.col(static_cast<Eigen::Index>(j)) =
            estimators::predict(problem, best, times).displacement.col(dof);
    }
    return out;
}

Eigen::MatrixXd member_restoring(const estimators::Problem& problem,
                                 const EnsembleResult& result, const Eigen::VectorXd& times) {
    if (!problem.hysteretic()) throw ConfigError("member_restoring: elastic problem");
    Eigen::MatrixXd out(times.size(), static_cast<Eigen::Index>(result.included.size()));
    for (std::size_t j = 0; j < result.included.size(); ++j) {
        const auto& best = result.members[result.included[j]].best;
        out.col(static_cast<Eigen::Index>(j)) = estimators::predict(problem, best, times).restoring;
    }
    return out;
}

ParameterStats parameter_stats(const estimators::Problem& problem,
                               const EnsembleResult& result) {
    if (result.included.size() < 2)
        throw NumericError("parameter_stats: need at least two members");
    ParameterStats stats;
    stats.names = problem.assumed.theta_names();
    bool with_amplitude = false;
    if (!result.members[result.included.front()].best.amplitude) {
        // no amplitude column
    } else {
        with_amplitude = true;
        stats.names.push_back("amplitude");
    }
    const Eigen::Index cols = static_cast<Eigen::Index>(stats.names.size());
    const Eigen::Index rows = static_cast<Eigen::Index>(result.included.size());
    stats.member_values.resize(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& best = result.members[result.included[static_cast<std::size_t>(r)]].best;
        const Eigen::VectorXd theta = best.theta();
        for (Eigen::Index p = 0; p < theta.size(); ++p) stats.member_values(r, p) = theta[p];
        if (with_amplitude) stats.member_values(r, cols - 1) = *best.amplitude;
    }
    stats.mean.resize(cols);
    stats.sigma.resize(cols);
    std::vector<double> scratch(static_cast<std::size_t>(rows));
    for (Eigen::Index p = 0; p < cols; ++p) {
        for (Eigen::Index r = 0; r < rows; ++r)
            scratch[static_cast<std::size_t>(r)] = stats.member_values(r, p);
        std::sort(scratch.begin(), scratch.end());
        double s = 0.0;
        for (double v : scratch) s += v;
        const double mean = s / static_cast<double>(rows);
        double sv = 0.0;
        for (Eigen::Index r = 0; r < rows; ++r) {
            const double d = stats.member_values(r, p) - mean;
            scratch[static_cast<std::size_t>(r)] = d * d;
        }
        std::sort(scratch.begin(), scratch.end());
        for (double v : scratch) sv += v;
        stats.mean[p] = mean;
        stats.sigma[p] = std::sqrt(sv / static_cast<double>(rows - 1));
    }
    return stats;
}

void export_band_csv(const Eigen::VectorXd& times, const SeriesStats& stats,
                     const std::string& path) {
    const Eigen::VectorXd two_sigma = 2.0 * stats.variance.cwiseSqrt();
    csv::write_columns(path, {"t_s", "mean", "lower_2sigma", "upper_2sigma"},
                       {times, stats.mean, stats.mean - two_sigma, stats.mean + two_sigma});
}

void write_report(const std::string& path, const estimators::Problem& problem,
                  const EnsembleResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_report: cannot open " + path);
    out << "ensemble report\n";
    out << "mode " << estimators::mode_name(problem.mode) << "\n";
    out << "members " << result.members.size() << " included " << result.included.size()
        << "\n\n";
    out << "member seed best_total final_total data_loss diverged";
    const auto& names = problem.assumed.theta_names();
    for (const auto& n : names) out << " " << n;
    out << "\n";
    for (std::size_t q = 0; q < result.members.size(); ++q) {
        const auto& m = result.members[q];
        out << q << " " << result.seeds[q] << " " << csv::format(m.best_loss.total) << " "
            << csv::format(m.history.empty() ? m.best_loss.total
                                             : m.history.back().loss.total)
            << " " << csv::format(m.best_loss.data) << " " << (m.diverged ? 1 : 0);
        const Eigen::VectorXd theta = m.best.theta();
        for (Eigen::Index p = 0; p < theta.size(); ++p) out << " " << csv::format(theta[p]);
        out << "\n";
    }
    out << "\nparameter mean sigma\n";
    const auto stats = parameter_stats(problem, result);
    for (std::size_t p = 0; p < stats.names.size(); ++p)
        out << stats.names[p] << " " << csv::format(stats.mean[static_cast<Eigen::Index>(p)])
            << " " << csv::format(stats.sigma[static_cast<Eigen::Index>(p)]) << "\n";
    if (!out) throw IoError("write_report: write failed " + path);
}

} // namespace sapinn::ensemble

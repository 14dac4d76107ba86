#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sapinn/ensemble.hpp"
#include "sapinn/errors.hpp"

#include <cmath>
#include <cstdio>

using namespace sapinn;
using namespace sapinn::ensemble;
namespace ex = sapinn::excitation;
namespace dyn = sapinn::dynamics;
namespace est = sapinn::estimators;

namespace {

struct SmallProblem {
    dyn::StructuralModel model;
    dyn::StateTrajectory traj;
    dyn::Observation obs;
    est::Problem problem;

    SmallProblem()
        : model((Eigen::VectorXd(1) << 2.0).finished(),
                (Eigen::VectorXd(1) << 0.4).finished(),
                (Eigen::VectorXd(1) << 18.0).finished(), dyn::InputMap::nodal_force(0),
                std::nullopt, {{dyn::ScalingAssignment::Target::Stiffness, 0, 0}}),
          problem(model) {
        auto force = [](double t) { return 3.0 * std::sin(1.5 * t); };
        traj = dyn::rk4_integrate(model, force, 0.02, 10.0);
        obs = dyn::measure(traj, 0.10, 77);
        problem.mode = est::Mode::SapinnTrainedPhase;
        problem.obs = &obs;
        ex::FrequencyGrid grid((Eigen::VectorXd(1) << 1.5).finished(), 1.0);
        ex::SpectrumModel spec(grid, (Eigen::VectorXd(1) << 0.5).finished());
        problem.family = std::make_shared<families::ModulatedSrmFamily>(
            ex::Envelope::constant(1.0), spec, obs.times, true);
        problem.time_scaling = neural::TimeScaling::from_window(0.0, 10.0);
        problem.output_scales = (Eigen::VectorXd(1) << 0.2).finished();
        problem.omega_ref = 3.0;
    }
};

est::InitConfig small_init() {
    est::InitConfig init;
    init.hidden_layers = {8, 8};
    init.omega0 = 8.0;
    init.n_theta = 1;
    init.n_phases = 1;
    init.with_amplitude = true;
    init.amplitude_init = 4.0;
    return init;
}

} // namespace

TEST_CASE("member seeds are derived, distinct, and validated") {
    EnsembleSpec spec;
    spec.q_members = 5;
    spec.master_seed = 99;
    auto seeds = member_seeds(spec);
    CHECK(seeds.size() == 5);
    for (std::size_t i = 0; i < seeds.size(); ++i)
        for (std::size_t j = i + 1; j < seeds.size(); ++j) CHECK(seeds[i] != seeds[j]);

    EnsembleSpec bad;
    bad.q_members = 2;
    bad.member_seeds = {7, 7};
    CHECK_THROWS_AS(member_seeds(bad), ConfigError);
    EnsembleSpec one;
    one.q_members = 1;
    CHECK_THROWS_AS(member_seeds(one), ConfigError);
}

TEST_CASE("series statistics: hand-checked two-member case and degenerate spread") {
    Eigen::MatrixXd two(3, 2);
    two << 1.0, 3.0, -2.0, 2.0, 0.5, 0.5;
    auto stats = series_stats(two);
    CHECK(stats.mean[0] == doctest::Approx(2.0));
    CHECK(stats.mean[1] == doctest::Approx(0.0));
    CHECK(stats.variance[0] == doctest::Approx(2.0));  // ((1-2)^2+(3-2)^2)/(2-1)
    CHECK(stats.variance[1] == doctest::Approx(8.0));
    CHECK(stats.variance[2] == 0.0);

    Eigen::MatrixXd identical = Eigen::MatrixXd::Constant(4, 3, 1.23);
    auto degenerate = series_stats(identical);
    CHECK(degenerate.variance.cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(series_stats(Eigen::MatrixXd::Zero(3, 1)), NumericError);
}

TEST_CASE("statistics are exactly invariant to member permutations") {
    Rng rng(5);
    Eigen::MatrixXd series(50, 6);
    for (Eigen::Index r = 0; r < 50; ++r)
        for (Eigen::Index c = 0; c < 6; ++c) series(r, c) = rng.normal();
    auto base = series_stats(series);
    Eigen::MatrixXd permuted(50, 6);
    const int perm[6] = {4, 2, 0, 5, 1, 3};
    for (int c = 0; c < 6; ++c) permuted.col(c) = series.col(perm[c]);
    auto shuffled = series_stats(permuted);
    CHECK((base.mean.array() == shuffled.mean.array()).all());
    CHECK((base.variance.array() == shuffled.variance.array()).all());
}

TEST_CASE("ensemble run: determinism, reports, parameter statistics") {
    SmallProblem setup;
    EnsembleSpec spec;
    spec.q_members = 3;
    spec.master_seed = 2024;
    spec.train.iterations = 60;
    spec.train.log_every = 30;

    auto result = run_ensemble(setup.problem, small_init(), spec);
    CHECK(result.included.size() == 3);

    auto result2 = run_ensemble(setup.problem, small_init(), spec);
    for (int q = 0; q < 3; ++q) {
        CHECK(result.members[q].best_loss.total == result2.members[q].best_loss.total);
        CHECK((est::pack_trainables(setup.problem, result.members[q].best).array() ==
               est::pack_trainables(setup.problem, result2.members[q].best).array())
                  .all());
    }

    auto pstats = parameter_stats(setup.problem, result);
    CHECK(pstats.names.size() == 2); // theta1 + amplitude
    CHECK(pstats.member_values.rows() == 3);
    CHECK(pstats.sigma.minCoeff() >= 0.0);

    auto fstats = force_stats(setup.problem, result, setup.obs.times);
    CHECK(fstats.mean.size() == setup.obs.times.size());
    CHECK(fstats.variance.minCoeff() >= 0.0);

    const std::string band_path = "test_band.csv";
    export_band_csv(setup.obs.times, fstats, band_path);
    const std::string report_path = "test_report.txt";
    write_report(report_path, setup.problem, result);
    std::remove(band_path.c_str());
    std::remove(report_path.c_str());
}

TEST_CASE("statistics recomputed from serialized members are bit-identical") {
    SmallProblem setup;
    EnsembleSpec spec;
    spec.q_members = 2;
    spec.master_seed = 5;
    spec.train.iterations = 40;

    auto result = run_ensemble(setup.problem, small_init(), spec);
    auto stats = force_stats(setup.problem, result, setup.obs.times);

    // Round-trip each member through the checkpoint text format.
    EnsembleResult reloaded = result;
    for (int q = 0; q < 2; ++q) {
        const std::string path = "test_member_" + std::to_string(q) + ".ckpt";
        est::save_checkpoint(path, result.members[q].best, result.members[q].adam,
                             result.seeds[q], 0, spec.train.iterations);
        reloaded.members[q].best = est::load_checkpoint(path).trainables;
        std::remove(path.c_str());
    }
    auto stats2 = force_stats(setup.problem, reloaded, setup.obs.times);
    CHECK((stats.mean.array() == stats2.mean.array()).all());
    CHECK((stats.variance.array() == stats2.variance.array()).all());
}

TEST_CASE("threaded ensemble matches the sequential result bit-for-bit") {
    SmallProblem setup;
    EnsembleSpec spec;
    spec.q_members = 3;
    spec.master_seed = 404;
    spec.train.iterations = 30;

    auto sequential = run_ensemble(setup.problem, small_init(), spec);
    spec.n_threads = 3;
    auto threaded = run_ensemble(setup.problem, small_init(), spec);
    for (int q = 0; q < 3; ++q)
        CHECK((est::pack_trainables(setup.problem, sequential.members[q].best).array() ==
               est::pack_trainables(setup.problem, threaded.members[q].best).array())
                  .all());
}

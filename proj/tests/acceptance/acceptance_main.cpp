// Acceptance suite: one line per criterion, [PASS]/[FAIL]/[SKIP], nonzero
// exit when anything fails. Criteria 4-7 train desk-scale ensembles and
// dominate the runtime; --only N runs a subset.
#include "sapinn/alloc_tuning.hpp"
#include "sapinn/csv.hpp"
#include "sapinn/dynamics.hpp"
#include "sapinn/ensemble.hpp"
#include "sapinn/errors.hpp"
#include "sapinn/estimators.hpp"
#include "sapinn/excitation.hpp"
#include "sapinn/experiment.hpp"
#include "sapinn/metrics.hpp"
#include "sapinn/neural.hpp"
#include "sapinn/observability.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;
using namespace sapinn;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Outcome {
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

Outcome pass(std::string detail) { return {true, false, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, false, std::move(detail)}; }
Outcome skip(std::string detail) { return {true, true, std::move(detail)}; }

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(4);
    out << v;
    return out.str();
}

fs::path g_workdir;

// ---------------------------------------------------------------------------
// 1. Gradient correctness across random small networks.

Outcome criterion_gradients() {
    Rng rng(101);
    const neural::TimeScaling identity{};
    double worst_grad = 0.0, worst_tangent = 0.0;

    for (int trial = 0; trial < 100; ++trial) {
        auto params = neural::init_network({1, 8, 8, 1}, 3.0, rng);
        Eigen::VectorXd t(8);
        for (int i = 0; i < 8; ++i) t[i] = rng.uniform(-1.0, 1.0);

        // Tangent accuracy against central differences in time.
        const double teps = 1e-5;
        const auto jets = neural::forward_jet(params, t, identity, 1, nullptr);
        const auto plus = neural::forward_jet(params, t.array() + teps, identity, 0, nullptr);
        const auto minus = neural::forward_jet(params, t.array() - teps, identity, 0, nullptr);
        const Eigen::MatrixXd fd_tangent = (plus.v0 - minus.v0) / (2.0 * teps);
        worst_tangent = std::max(
            worst_tangent, (jets.v1 - fd_tangent).norm() / std::max(1e-12, fd_tangent.norm()));

        // Gradient of a loss touching value, velocity and acceleration lanes.
        neural::ForwardStash stash;
        const auto full = neural::forward_jet(params, t, identity, 2, &stash);
        neural::JetBatch adj;
        adj.v0 = 2.0 * full.v0;
        adj.v1 = full.v1;
        adj.v2 = 0.5 * full.v2;
        auto grads = neural::ParamGrads::zeros_like(params);
        neural::backprop(params, stash, adj, 2, grads);
        const Eigen::VectorXd g = neural::pack(grads);

        Eigen::VectorXd flat = neural::pack(params);
        const double eps = 1e-5;
        for (Eigen::Index i = 0; i < flat.size(); ++i) {
            Eigen::VectorXd fp = flat, fm = flat;
            fp[i] += eps;
            fm[i] -= eps;
            neural::NetworkParams pp = params, pm = params;
            neural::unpack(fp, pp);
            neural::unpack(fm, pm);
            auto eval = [&](const neural::NetworkParams& p) {
                const auto j = neural::forward_jet(p, t, identity, 2, nullptr);
                return j.v0.squaredNorm() + 0.5 * j.v1.squaredNorm() +
                       0.25 * j.v2.squaredNorm();
            };
            const double fd = (eval(pp) - eval(pm)) / (2.0 * eps);
            const double scale = std::max({1e-7, std::abs(fd), std::abs(g[i])});
            worst_grad = std::max(worst_grad, std::abs(g[i] - fd) / scale);
        }
    }
    std::ostringstream detail;
    detail << "max grad rel err " << fmt(worst_grad) << " (<1e-5), max tangent rel err "
           << fmt(worst_tangent) << " (<1e-7)";
    if (worst_grad < 1e-5 && worst_tangent < 1e-7) return pass(detail.str());
    return fail(detail.str());
}

// ---------------------------------------------------------------------------
// 2. Spectral fidelity of the synthesis over 200 realizations.

Outcome criterion_srm_fidelity() {
    const double domega_hz = 0.05;
    const double domega = excitation::hz_to_rad(domega_hz);
    const int n_omega = 199; // 0.05 .. 9.95 Hz, bin-aligned interior band
    Eigen::VectorXd w(n_omega);
    for (int i = 0; i < n_omega; ++i) w[i] = domega * (i + 1);
    excitation::FrequencyGrid grid(w, domega);
    const auto spec =
        excitation::kanai_tajimi_psd(grid, 0.1, excitation::hz_to_rad(3.5), 0.24);

    const double t_total = excitation::kTwoPi / domega; // 20 s window
    const double dt = 0.01;
    const auto n = static_cast<Eigen::Index>(std::llround(t_total / dt));
    Eigen::VectorXd times(n);
    for (Eigen::Index k = 0; k < n; ++k) times[k] = k * dt;

    // Cache the transform tables once; the periodogram at the exact grid bins
    // reduces to projections against these.
    Eigen::MatrixXd cos_wt(n, n_omega), sin_wt(n, n_omega);
    for (int i = 0; i < n_omega; ++i) {
        cos_wt.col(i) = (w[i] * times.array()).cos();
        sin_wt.col(i) = (w[i] * times.array()).sin();
    }

    Eigen::VectorXd avg = Eigen::VectorXd::Zero(n_omega);
    Rng rng(20240202);
    const int m_realizations = 200;
    for (int m = 0; m < m_realizations; ++m) {
        const auto phases = excitation::PhaseVector::random(n_omega, rng);
        const auto ts = excitation::srm_realize(spec, phases, times);
        const Eigen::VectorXd re = cos_wt.transpose() * ts.v;
        const Eigen::VectorXd im = sin_wt.transpose() * ts.v;
        avg.array() +=
            (re.array().square() + im.array().square()) * dt / (kPi * static_cast<double>(n));
    }
    avg /= m_realizations;

    double rel = 0.0;
    int count = 0;
    for (int i = 1; i + 1 < n_omega; ++i) {
        rel += std::abs(avg[i] - spec.psd()[i]) / spec.psd()[i];
        ++count;
    }
    rel /= count;
    std::ostringstream detail;
    detail << "mean relative periodogram error " << fmt(rel) << " (<0.10) over " << count
           << " interior frequencies";
    return rel < 0.10 ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// 3. Integrator fidelity on the sinusoidally forced benchmark oscillator.

Outcome criterion_rk4() {
    const double m = 4500.0, k = 27000.0, c = 0.245, a = 200.0, w = 0.5;
    auto model = dynamics::StructuralModel((Eigen::VectorXd(1) << m).finished(),
                                           (Eigen::VectorXd(1) << c).finished(),
                                           (Eigen::VectorXd(1) << k).finished());
    auto force = [&](double t) { return a * std::sin(w * t); };

    // Analytic steady state; starting exactly on it removes the transient,
    // which at this damping would never decay inside any usable window.
    const double denom = std::sqrt(std::pow(k - m * w * w, 2) + std::pow(c * w, 2));
    const double amp = a / denom;
    const double phase = std::atan2(c * w, k - m * w * w);
    Eigen::VectorXd steady(2);
    steady << amp * std::sin(-phase), amp * w * std::cos(-phase);

    auto traj = dynamics::rk4_integrate(model, force, 0.01, 200.0, steady);
    double peak = 0.0;
    for (Eigen::Index i = 0; i < traj.times.size(); ++i)
        peak = std::max(peak, std::abs(traj.displacement(i, 0)));
    const double amp_err = std::abs(peak - amp) / amp;

    auto terminal = [&](double dt) {
        auto t = dynamics::rk4_integrate(model, force, dt, 10.0, Eigen::VectorXd::Zero(2));
        return Eigen::Vector2d(t.displacement(t.times.size() - 1, 0),
                               t.velocity(t.times.size() - 1, 0));
    };
    const Eigen::Vector2d ref = terminal(0.0004);
    const double order =
        std::log2((terminal(0.02) - ref).norm() / (terminal(0.01) - ref).norm());

    std::ostringstream detail;
    detail << "steady-state amplitude error " << fmt(amp_err) << " (<1e-3), convergence order "
           << fmt(order) << " (>=3.8)";
    return (amp_err < 1e-3 && order >= 3.8) ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// Shared ensemble helpers for criteria 4-7.

struct EnsembleRun {
    experiment::ExperimentConfig config;
    experiment::BuiltProblem built;
    ensemble::EnsembleResult result;
    ensemble::ParameterStats stats;
    dynamics::Observation obs;
    Eigen::MatrixXd truth_displacement;
    Eigen::MatrixXd truth_acceleration;
    Eigen::VectorXd truth_restoring;
    Eigen::VectorXd truth_force;
};

EnsembleRun run_ensemble_for(experiment::ExperimentConfig config) {
    EnsembleRun run;
    fs::create_directories(config.output_dir);
    const auto art = experiment::cmd_simulate(config);
    run.obs = art.observation;
    run.truth_displacement = art.trajectory.displacement;
    run.truth_acceleration = art.trajectory.acceleration;
    if (art.trajectory.restoring) run.truth_restoring = *art.trajectory.restoring;
    run.truth_force = art.truth_force.v;

    const auto artifacts = experiment::cmd_ensemble(config);
    run.built = experiment::build_problem(config, run.obs);
    run.result = artifacts.result;
    run.stats = artifacts.parameters;
    run.config = std::move(config);
    return run;
}

double theta_mean(const EnsembleRun& run, int index) { return run.stats.mean[index]; }

// ---------------------------------------------------------------------------
// 4. Sinusoidal benchmark recovery, spectral estimator vs unconstrained-force
//    baseline.

Outcome criterion_toy() {
    auto config = experiment::default_config(experiment::Kind::ToySdof,
                                             experiment::Profile::Desk);
    config.seed = 11;
    config.output_dir = (g_workdir / "toy_sapinn").string();
    config.mode = estimators::Mode::SapinnTrainedPhase;
    auto sapinn = run_ensemble_for(config);

    config.mode = estimators::Mode::PinnUnknownForce;
    config.output_dir = (g_workdir / "toy_pinn").string();
    auto pinn = run_ensemble_for(config);

    const double theta_sapinn = theta_mean(sapinn, 0);
    const double amp = sapinn.stats.mean[sapinn.stats.mean.size() - 1];
    const double theta_pinn = theta_mean(pinn, 0);
    const double dev_sapinn = std::abs(theta_sapinn - 1.0);
    const double dev_pinn = std::abs(theta_pinn - 1.0);

    std::ostringstream detail;
    detail << "theta1 " << fmt(theta_sapinn) << " (within 3% of 1), amplitude " << fmt(amp)
           << " N (within 15% of 200), baseline theta1 " << fmt(theta_pinn)
           << " deviates more (" << fmt(dev_pinn) << " > " << fmt(dev_sapinn) << ")";
    const bool ok = dev_sapinn < 0.03 && std::abs(amp - 200.0) / 200.0 < 0.15 &&
                    dev_pinn > dev_sapinn;
    return ok ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// 5. Thunderstorm wind recovery with mass misspecification.

Outcome criterion_thunderstorm() {
    auto config = experiment::default_config(experiment::Kind::ThunderstormSdof,
                                             experiment::Profile::Desk);
    config.seed = 21;
    config.output_dir = (g_workdir / "thunder_sapinn").string();
    config.mode = estimators::Mode::SapinnTrainedPhase;
    auto sapinn = run_ensemble_for(config);

    config.mode = estimators::Mode::PinnUnknownForce;
    config.output_dir = (g_workdir / "thunder_pinn").string();
    auto pinn = run_ensemble_for(config);

    const double theta_sapinn = theta_mean(sapinn, 0);
    const double theta_pinn = theta_mean(pinn, 0);
    const double dev_sapinn = std::abs(theta_sapinn - 1.0);
    const double dev_pinn = std::abs(theta_pinn - 1.0);

    const auto disp = ensemble::member_displacements(*sapinn.built.problem, sapinn.result,
                                                     sapinn.obs.times, 0);
    const auto disp_stats = ensemble::series_stats(disp);
    const double mse_x = metrics::mse(disp_stats.mean, sapinn.truth_displacement.col(0));

    std::ostringstream detail;
    detail << "theta1 " << fmt(theta_sapinn) << " (in [0.95, 1.04]), MSE(x) " << fmt(mse_x)
           << " (<=5e-5), baseline theta1 " << fmt(theta_pinn) << " deviates more ("
           << fmt(dev_pinn) << " > " << fmt(dev_sapinn) << ")";
    const bool ok = theta_sapinn >= 0.95 && theta_sapinn <= 1.04 && mse_x <= 5e-5 &&
                    dev_pinn > dev_sapinn;
    return ok ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// 6. Hysteretic chain under synthetic ground motion, low-frequency variant.

Outcome criterion_quake_low() {
    auto config = experiment::default_config(experiment::Kind::SyntheticQuake3DofLow,
                                             experiment::Profile::Desk);
    config.seed = 31;
    config.output_dir = (g_workdir / "quake_low_sapinn").string();
    config.mode = estimators::Mode::SapinnTrainedPhase;
    auto run = run_ensemble_for(config);

    const double theta1 = theta_mean(run, 0);
    const double theta2 = theta_mean(run, 1);
    const auto member_r =
        ensemble::member_restoring(*run.built.problem, run.result, run.obs.times);
    const auto r_stats = ensemble::series_stats(member_r);
    const double mse_r = metrics::mse(r_stats.mean, run.truth_restoring);

    std::ostringstream detail;
    detail << "theta1 " << fmt(theta1) << ", theta2 " << fmt(theta2)
           << " (each within 3% of 1), MSE(r1) " << fmt(mse_r) << " (<2e-4)";
    const bool ok =
        std::abs(theta1 - 1.0) < 0.03 && std::abs(theta2 - 1.0) < 0.03 && mse_r < 2e-4;
    return ok ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// 7. High-frequency variant: property gates only.

Outcome criterion_quake_high() {
    auto config = experiment::default_config(experiment::Kind::SyntheticQuake3DofHigh,
                                             experiment::Profile::Desk);
    config.seed = 41;
    config.output_dir = (g_workdir / "quake_high_sapinn").string();
    config.mode = estimators::Mode::SapinnTrainedPhase;
    auto run = run_ensemble_for(config);

    const auto& times = run.obs.times;
    const double dt = times[1] - times[0];
    const auto fstats = ensemble::force_stats(*run.built.problem, run.result, times);

    // (a) dominant spectral peak of the reconstruction within one bin of truth
    const auto psd_true = metrics::welch_psd(run.truth_force, dt, 1024, 0.5);
    const auto psd_pred = metrics::welch_psd(fstats.mean, dt, 1024, 0.5);
    const double bin = psd_true.omega[1] - psd_true.omega[0];
    const double peak_err = std::abs(psd_true.peak_omega() - psd_pred.peak_omega());

    // (b) 2-sigma band coverage of the true base excitation
    const Eigen::VectorXd two_sigma = 2.0 * fstats.variance.cwiseSqrt();
    Eigen::Index covered = 0;
    for (Eigen::Index kk = 0; kk < times.size(); ++kk)
        if (run.truth_force[kk] >= fstats.mean[kk] - two_sigma[kk] &&
            run.truth_force[kk] <= fstats.mean[kk] + two_sigma[kk])
            ++covered;
    const double coverage = static_cast<double>(covered) / static_cast<double>(times.size());

    // (c) no member's data loss below half the measurement-noise floor
    double floor = 0.0;
    {
        const int n = run.built.problem->assumed.ndof();
        for (int ch = 0; ch < n; ++ch) {
            const auto clean = run.truth_acceleration.col(ch);
            const double rms = std::sqrt(clean.squaredNorm() / clean.size());
            const double noise_var = std::pow(run.config.noise_ratio * rms, 2);
            const auto y = run.obs.accel_noisy.col(ch);
            const double var_y = (y.array() - y.mean()).square().mean();
            floor += noise_var / var_y / n;
        }
        floor *= run.config.training.weights.lambda_d;
    }
    double min_data_loss = 1e300;
    for (int q : run.result.included)
        min_data_loss = std::min(min_data_loss, run.result.members[q].best_loss.data);

    std::ostringstream detail;
    detail << "PSD peak offset " << fmt(peak_err) << " rad/s (<= bin " << fmt(bin)
           << "), band coverage " << fmt(coverage) << " (>=0.85), min data loss "
           << fmt(min_data_loss) << " vs floor/2 " << fmt(0.5 * floor);
    const bool ok =
        peak_err <= bin + 1e-12 && coverage >= 0.85 && min_data_loss >= 0.5 * floor;
    return ok ? pass(detail.str()) : fail(detail.str());
}

// El Centro variant of criterion 7: runs only when a record file is present.
Outcome criterion_elcentro() {
    const char* env = std::getenv("SAPINN_ELCENTRO_RECORD");
    const std::string path = env ? env : "data/elcentro_ns.csv";
    if (!fs::exists(path))
        return skip("ground-motion record not found at " + path +
                    " (set SAPINN_ELCENTRO_RECORD); property gates exercised on the "
                    "synthetic high-frequency kind instead");
    auto config = experiment::default_config(experiment::Kind::Elcentro3Dof,
                                             experiment::Profile::Desk);
    config.seed = 51;
    config.excitation.record_path = path;
    config.output_dir = (g_workdir / "elcentro_sapinn").string();
    config.mode = estimators::Mode::SapinnTrainedPhase;
    auto run = run_ensemble_for(config);

    const auto& times = run.obs.times;
    const auto fstats = ensemble::force_stats(*run.built.problem, run.result, times);
    const Eigen::VectorXd two_sigma = 2.0 * fstats.variance.cwiseSqrt();
    Eigen::Index covered = 0;
    for (Eigen::Index kk = 0; kk < times.size(); ++kk)
        if (run.truth_force[kk] >= fstats.mean[kk] - two_sigma[kk] &&
            run.truth_force[kk] <= fstats.mean[kk] + two_sigma[kk])
            ++covered;
    const double coverage = static_cast<double>(covered) / static_cast<double>(times.size());
    std::ostringstream detail;
    detail << "recorded-motion 2-sigma coverage " << fmt(coverage) << " (>=0.85)";
    return coverage >= 0.85 ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// 8. Rank diagnostics.

Outcome criterion_observability() {
    std::ostringstream detail;
    Eigen::VectorXd z5(5);
    z5 << 0.3, -0.7, 1.1, 2.3, 0.9;

    const auto sys_a = observability::AugmentedSystem::appendix_a(1.0, 1.0);
    const auto report_a = observability::stacked_rank(
        sys_a, z5, observability::default_time_samples(sys_a, 10));
    int degenerate_rank = 5;
    for (const auto& pa : report_a.per_time) degenerate_rank = std::min(degenerate_rank, pa.rank);

    const auto sys_b = observability::AugmentedSystem::appendix_b(0.6, 0.8);
    const auto report_b = observability::stacked_rank(
        sys_b, z5, observability::default_time_samples(sys_b, 10));

    bool multi_ok = true;
    std::vector<int> multi_ranks;
    for (int n_omega : {1, 2, 3}) {
        const auto sys = observability::AugmentedSystem::multi_phase(n_omega);
        Eigen::VectorXd z(sys.dim());
        const double generic[] = {0.3, -0.7, 1.1, 2.3, 0.9, 0.4, 1.7};
        for (int i = 0; i < sys.dim(); ++i) z[i] = generic[i % 7];
        const auto report = observability::stacked_rank(
            sys, z, observability::default_time_samples(sys, 10));
        multi_ranks.push_back(report.stacked_rank);
        if (report.stacked_rank != n_omega + 4) multi_ok = false;
    }

    detail << "first case interval rank " << report_a.stacked_rank
           << " (=5) with a single-time rank " << degenerate_rank
           << " (=4); second case rank " << report_b.stacked_rank << " (=5); multi-tone ranks";
    for (std::size_t i = 0; i < multi_ranks.size(); ++i) detail << " " << multi_ranks[i];
    detail << " (=5,6,7)";
    const bool ok = report_a.stacked_rank == 5 && degenerate_rank == 4 &&
                    report_b.stacked_rank == 5 && multi_ok;
    return ok ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// 9. Worst-case-gain bound over random perturbation inputs.

Outcome criterion_gain_bound() {
    const double m = 4500.0, k = 27000.0, c = 0.245;
    auto model = dynamics::StructuralModel((Eigen::VectorXd(1) << m).finished(),
                                           (Eigen::VectorXd(1) << c).finished(),
                                           (Eigen::VectorXd(1) << k).finished());
    const double wn = std::sqrt(k / m);
    Eigen::VectorXd grid(6000);
    {
        // Broad coverage plus a dense band around the lightly damped resonance.
        Eigen::VectorXd broad = Eigen::VectorXd::LinSpaced(4000, 1e-3, 20.0 * wn);
        Eigen::VectorXd dense = Eigen::VectorXd::LinSpaced(2000, 0.9 * wn, 1.1 * wn);
        grid << broad, dense;
        std::sort(grid.data(), grid.data() + grid.size());
    }
    Eigen::VectorXd times = Eigen::VectorXd::LinSpaced(5001, 0.0, 50.0);
    Eigen::VectorXd base(times.size());
    for (Eigen::Index i = 0; i < times.size(); ++i) base[i] = 200.0 * std::sin(0.5 * times[i]);

    Rng rng(909);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::VectorXd perturbed = base;
        const int tones = 1 + static_cast<int>(rng.uniform(0.0, 4.0));
        for (int j = 0; j < tones; ++j) {
            const double w = rng.uniform(0.05, 3.0 * wn);
            const double a = rng.uniform(-60.0, 60.0);
            const double p = rng.uniform(0.0, excitation::kTwoPi);
            for (Eigen::Index i = 0; i < times.size(); ++i)
                perturbed[i] += a * std::cos(w * times[i] + p);
        }
        const auto report = metrics::bound_check(model, times, base, perturbed, grid);
        worst = std::max(worst, report.max_ratio);
    }
    std::ostringstream detail;
    detail << "max response/bound ratio " << fmt(worst) << " over 50 draws (<=1+1e-3)";
    return worst <= 1.0 + 1e-3 ? pass(detail.str()) : fail(detail.str());
}

// ---------------------------------------------------------------------------
// 10. Bit-identical reproducibility of a full experiment.

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome criterion_determinism() {
    auto config = experiment::default_config(experiment::Kind::ToySdof,
                                             experiment::Profile::Desk);
    config.seed = 77;
    config.duration = 10.0;
    config.training.iterations = 120;
    config.training.log_every = 40;
    config.q_members = 2;
    config.network.hidden = {8, 8};

    auto run_once = [&](const std::string& dir) {
        auto c = config;
        c.output_dir = (g_workdir / dir).string();
        fs::remove_all(c.output_dir);
        experiment::cmd_ensemble(c);
        return c.output_dir;
    };
    const std::string dir_a = run_once("determinism_a");
    const std::string dir_b = run_once("determinism_b");

    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        const fs::path other = fs::path(dir_b) / entry.path().filename();
        if (!fs::exists(other)) return fail("missing " + other.string());
        if (entry.path().filename() == "config_snapshot.json") continue; // differs by dir
        if (file_bytes(entry.path()) != file_bytes(other))
            return fail("bytes differ for " + entry.path().filename().string());
        ++compared;
    }
    return pass("two runs byte-identical across " + std::to_string(compared) + " artifacts");
}

struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
};

} // namespace

int main(int argc, char** argv) {
    tune_allocator();
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) {
            std::stringstream ss(argv[++i]);
            std::string tok;
            while (std::getline(ss, tok, ',')) only.insert(std::stoi(tok));
        } else if (std::strcmp(argv[i], "--workdir") == 0 && i + 1 < argc) {
            g_workdir = argv[++i];
        }
    }
    if (g_workdir.empty()) g_workdir = fs::current_path() / "acceptance_runs";
    fs::create_directories(g_workdir);

    const std::vector<Criterion> criteria = {
        {1, "gradient correctness", criterion_gradients},
        {2, "spectral synthesis fidelity", criterion_srm_fidelity},
        {3, "integrator fidelity", criterion_rk4},
        {4, "sinusoidal benchmark recovery", criterion_toy},
        {5, "thunderstorm wind recovery", criterion_thunderstorm},
        {6, "hysteretic chain recovery (low frequency)", criterion_quake_low},
        {7, "high-frequency property gates", criterion_quake_high},
        {7, "recorded-motion property gates", criterion_elcentro},
        {8, "observability ranks", criterion_observability},
        {9, "worst-case gain bound", criterion_gain_bound},
        {10, "determinism", criterion_determinism},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (!only.empty() && !only.count(criterion.number)) continue;
        const auto t0 = Clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome = fail(std::string("exception: ") + e.what());
        }
        const double minutes = std::chrono::duration<double>(Clock::now() - t0).count() / 60.0;
        const char* tag = outcome.skipped ? "[SKIP]" : (outcome.pass ? "[PASS]" : "[FAIL]");
        std::cout << tag << " criterion " << criterion.number << " (" << criterion.name
                  << "): " << outcome.detail << " [" << fmt(minutes) << " min]" << std::endl;
        if (!outcome.pass) ++failures;
    }
    if (failures) {
        std::cout << failures << " criteria failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}

// Command-line front end: data generation, training, ensembles, rank
// diagnostics and report recomputation over JSON experiment configs.
#include "sapinn/alloc_tuning.hpp"
#include "sapinn/errors.hpp"
#include "sapinn/experiment.hpp"
#include "sapinn/observability.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>

namespace {

using namespace sapinn;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> profile;
    std::optional<std::string> mode;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool with_mode = true) {
    cmd->add_option("--config", args.config_path, "Experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&args](std::uint64_t v) { args.seed = v; }, "Master seed override");
    cmd->add_option_function<std::string>(
        "--out", [&args](const std::string& v) { args.out = v; }, "Output directory override");
    cmd->add_option_function<std::string>(
           "--profile", [&args](const std::string& v) { args.profile = v; },
           "Scale profile: paper or desk")
        ->check(CLI::IsMember({"paper", "desk"}));
    if (with_mode)
        cmd->add_option_function<std::string>(
               "--mode", [&args](const std::string& v) { args.mode = v; },
               "Estimator mode")
            ->check(CLI::IsMember(
                {"pinn_known", "pinn_unknown", "sapinn_random", "sapinn_trained"}));
}

experiment::ExperimentConfig load(const CommonArgs& args) {
    return experiment::load_config(args.config_path, args.profile, args.seed, args.out,
                                   args.mode);
}

} // namespace

int main(int argc, char** argv) {
    sapinn::tune_allocator();
    CLI::App app{"Spectrum-constrained input-state-parameter estimation toolkit"};
    app.require_subcommand(1);

    CommonArgs sim_args, train_args, ens_args, report_args;
    auto* sim = app.add_subcommand("simulate", "Generate truth response and noisy observations");
    add_common(sim, sim_args, false);
    auto* train = app.add_subcommand("train", "Train a single estimator on a simulated run");
    add_common(train, train_args);
    auto* ens = app.add_subcommand("ensemble", "Train an ensemble and emit reports");
    add_common(ens, ens_args);
    auto* report = app.add_subcommand("report", "Recompute metric tables from run artifacts");
    add_common(report, report_args);

    std::string obs_case = "appendix_a";
    int obs_nomega = 3;
    std::string obs_out = "observability_report.txt";
    double obs_tol = 1e-8;
    int obs_samples = 10;
    auto* obs = app.add_subcommand("observability", "Rank diagnostics for built-in cases");
    obs->add_option("--case", obs_case, "appendix_a | appendix_b | multi_phase")
        ->check(CLI::IsMember({"appendix_a", "appendix_b", "multi_phase"}));
    obs->add_option("--nomega", obs_nomega, "Tone count for multi_phase");
    obs->add_option("--out", obs_out, "Report file path");
    obs->add_option("--tol", obs_tol, "Relative singular-value tolerance");
    obs->add_option("--samples", obs_samples, "Time samples over one period");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) {
            const auto config = load(sim_args);
            experiment::cmd_simulate(config);
            std::cout << "wrote simulation artifacts to " << config.output_dir << "\n";
        } else if (train->parsed()) {
            const auto config = load(train_args);
            const auto art = experiment::cmd_train(config);
            std::cout << "trained " << art.result.iterations_run
                      << " iterations, best loss " << art.result.best_loss.total << "\n";
        } else if (ens->parsed()) {
            const auto config = load(ens_args);
            const auto art = experiment::cmd_ensemble(config);
            std::cout << "ensemble of " << art.result.members.size() << " members, "
                      << art.result.included.size() << " included\n";
            for (std::size_t p = 0; p < art.parameters.names.size(); ++p)
                std::cout << art.parameters.names[p] << " = "
                          << art.parameters.mean[static_cast<Eigen::Index>(p)] << " +/- "
                          << art.parameters.sigma[static_cast<Eigen::Index>(p)] << "\n";
        } else if (report->parsed()) {
            const auto config = load(report_args);
            std::cout << experiment::cmd_report(config);
        } else if (obs->parsed()) {
            const auto sys = observability::builtin_case(obs_case, obs_nomega);
            Eigen::VectorXd z(sys.dim());
            const double generic[] = {0.3, -0.7, 1.1, 2.3, 0.9, 0.4, 1.7, -0.2, 0.8, 1.3};
            for (int i = 0; i < sys.dim(); ++i) z[i] = generic[i % 10];
            const auto report_data = observability::stacked_rank(
                sys, z, observability::default_time_samples(sys, obs_samples), obs_tol);
            observability::write_report(report_data, obs_out);
            std::cout << observability::format_report(report_data);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sapinn/csv.hpp"
#include "sapinn/errors.hpp"
#include "sapinn/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace sapinn;
using namespace sapinn::experiment;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

ExperimentConfig tiny_toy(const TempDir& dir) {
    ExperimentConfig c = default_config(Kind::ToySdof, Profile::Desk);
    c.duration = 10.0;
    c.training.iterations = 50;
    c.training.log_every = 25;
    c.q_members = 2;
    c.network.hidden = {8, 8};
    c.output_dir = dir.file("toy_run");
    return c;
}

} // namespace

TEST_CASE("default configs carry the documented setups") {
    auto toy = default_config(Kind::ToySdof, Profile::Desk);
    CHECK(toy.truth.masses[0] == 4500.0);
    CHECK(toy.truth.stiffness[0] == 27000.0);
    CHECK(toy.truth.damping[0] == 0.245);
    CHECK(toy.duration == 50.0);
    CHECK(toy.dt == 0.01);
    CHECK(toy.noise_ratio == 0.15);
    CHECK(toy.q_members == 5);
    CHECK(toy.training.iterations >= 20000);
    CHECK(toy.network.hidden == std::vector<int>{20, 20});

    auto thunder = default_config(Kind::ThunderstormSdof, Profile::Paper);
    CHECK(thunder.q_members == 20);
    CHECK(thunder.assumed.masses[0] == doctest::Approx(4500.0 * 1.05));
    CHECK(thunder.excitation.wind.a_eff == 8.0);
    CHECK(thunder.excitation.wind.v_bar == 10.0);
    CHECK(thunder.excitation.wind.turbulence_scale == 1.72);
    CHECK(thunder.network.hidden == std::vector<int>{128, 64, 64, 64, 128});
    CHECK(thunder.theta.size() == 2);

    auto quake = default_config(Kind::SyntheticQuake3DofLow, Profile::Desk);
    CHECK(quake.duration == 80.0);
    CHECK(quake.truth.stiffness[0] == 30.0);
    CHECK(quake.truth.damping[0] == 0.25);
    CHECK(quake.assumed.damping[0] == 1.0); // misspecified
    CHECK(quake.truth.bouc_wen.has_value());
    CHECK(quake.excitation.omega_g == doctest::Approx(excitation::hz_to_rad(3.5)));
    CHECK(quake.excitation.zeta_g == 0.24);
    CHECK(quake.network.hidden == std::vector<int>{64, 64, 32, 64, 64});

    auto high = default_config(Kind::SyntheticQuake3DofHigh, Profile::Desk);
    CHECK(high.truth.stiffness[0] == 3000.0);

    auto elcentro = default_config(Kind::Elcentro3Dof, Profile::Paper);
    CHECK(elcentro.excitation.family == ExcitationConfig::Family::Recorded);
    CHECK(elcentro.excitation.omega_g == doctest::Approx(excitation::hz_to_rad(1.59)));
    CHECK(elcentro.excitation.zeta_g == 0.6);
    CHECK(elcentro.excitation.delta_freq_hz == 0.015);
    CHECK(elcentro.excitation.freq_max_hz == 24.0);
}

TEST_CASE("config round trip and unknown-key rejection") {
    TempDir dir("sapinn_cfg_test");
    {
        std::ofstream out(dir.file("ok.json"));
        out << R"({"kind": "toy_sdof", "seed": 9, "observation": {"duration_s": 12.5}})";
    }
    auto c = load_config(dir.file("ok.json"));
    CHECK(c.seed == 9);
    CHECK(c.duration == 12.5);
    CHECK(c.dt == 0.01); // default preserved

    // Snapshot parses back to the same effective config.
    {
        std::ofstream out(dir.file("snapshot.json"));
        out << config_to_json(c);
    }
    auto c2 = load_config(dir.file("snapshot.json"));
    CHECK(config_to_json(c2) == config_to_json(c));

    {
        std::ofstream out(dir.file("bad.json"));
        out << R"({"kind": "toy_sdof", "observtion": {"duration_s": 12.5}})";
    }
    CHECK_THROWS_AS(load_config(dir.file("bad.json")), ConfigError);
    {
        std::ofstream out(dir.file("bad2.json"));
        out << R"({"kind": "toy_sdof", "observation": {"duration_sec": 12.5}})";
    }
    CHECK_THROWS_AS(load_config(dir.file("bad2.json")), ConfigError);

    // Overrides.
    auto c3 = load_config(dir.file("ok.json"), std::string("paper"), std::uint64_t{77},
                          std::string("elsewhere"), std::string("pinn_unknown"));
    CHECK(c3.profile == Profile::Paper);
    CHECK(c3.seed == 77);
    CHECK(c3.output_dir == "elsewhere");
    CHECK(c3.mode == estimators::Mode::PinnUnknownForce);
}

TEST_CASE("simulate: toy produces the documented record shape") {
    auto c = default_config(Kind::ToySdof, Profile::Desk);
    auto art = simulate(c);
    CHECK(art.observation.times.size() == 5001); // 50 s at 100 Hz
    CHECK(art.truth_force.v.size() == 5001);
    // truth force is A sin(w t)
    for (Eigen::Index k = 0; k < 5001; k += 500)
        CHECK(art.truth_force.v[k] ==
              doctest::Approx(200.0 * std::sin(0.5 * art.truth_force.t[k])).epsilon(1e-9));
    // noiseless override reproduces the trajectory accelerations
    c.noise_ratio = 0.0;
    auto clean = simulate(c);
    CHECK((clean.observation.accel_noisy - clean.trajectory.acceleration)
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("simulate: quake kinds produce 80 s records with restoring force") {
    auto c = default_config(Kind::SyntheticQuake3DofLow, Profile::Desk);
    c.duration = 8.0; // shortened for test runtime; shape checks only
    auto art = simulate(c);
    CHECK(art.trajectory.restoring.has_value());
    CHECK(art.observation.accel_noisy.cols() == 3);
    CHECK(art.truth_phases.size() == build_spectrum(c.excitation).size());
    // ground acceleration starts at zero because the envelope vanishes at t=0
    CHECK(std::abs(art.truth_force.v[0]) < 1e-12);

    auto c80 = default_config(Kind::SyntheticQuake3DofHigh, Profile::Desk);
    CHECK(c80.duration == 80.0);
}

TEST_CASE("cmd_simulate writes deterministic artifacts") {
    TempDir dir("sapinn_sim_test");
    auto c = tiny_toy(dir);
    cmd_simulate(c);
    for (const char* f : {"config_snapshot.json", "seeds.txt", "truth_trajectory.csv",
                          "observation.csv", "truth_excitation.csv", "truth_phases.csv"})
        CHECK(fs::exists(fs::path(c.output_dir) / f));

    auto read_file = [](const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    const std::string obs1 = read_file(run_path(c, "observation.csv"));
    fs::remove_all(c.output_dir);
    cmd_simulate(c);
    const std::string obs2 = read_file(run_path(c, "observation.csv"));
    CHECK(obs1 == obs2);
}

TEST_CASE("cmd_train runs, writes artifacts, resumes monotonically") {
    TempDir dir("sapinn_train_test");
    auto c = tiny_toy(dir);
    cmd_simulate(c);
    auto art = cmd_train(c);
    CHECK_FALSE(art.result.diverged);
    CHECK(fs::exists(run_path(c, "checkpoint.txt")));
    CHECK(fs::exists(run_path(c, "training_log.csv")));
    CHECK(fs::exists(run_path(c, "prediction.csv")));

    // Resume continues the iteration count.
    c.training.iterations = 80;
    auto resumed = cmd_train(c);
    CHECK(resumed.result.history.back().iteration == 80);
    CHECK(resumed.result.iterations_run == 30);

    // A budget below the checkpoint is rejected.
    c.training.iterations = 10;
    CHECK_THROWS_AS(cmd_train(c), ConfigError);
}

TEST_CASE("cmd_train known-force mode consumes the truth excitation file") {
    TempDir dir("sapinn_known_test");
    auto c = tiny_toy(dir);
    c.mode = estimators::Mode::PinnKnownForce;
    cmd_simulate(c);
    auto art = cmd_train(c);
    CHECK_FALSE(art.result.diverged);
    // Prediction force column equals the stored truth series.
    const auto truth = read_series_csv(run_path(c, "truth_excitation.csv"));
    const auto table = csv::read_table(run_path(c, "prediction.csv"));
    const Eigen::VectorXd force = table.data.col(table.data.cols() - 1);
    CHECK((force - truth).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cmd_ensemble bootstraps simulation and emits reports and bands") {
    TempDir dir("sapinn_ens_test");
    auto c = tiny_toy(dir);
    auto art = cmd_ensemble(c);
    CHECK(art.result.included.size() == 2);
    for (const char* f :
         {"sapinn_trained_ensemble_report.txt", "sapinn_trained_force_band.csv",
          "sapinn_trained_displacement_band_x1.csv", "sapinn_trained_metrics.txt",
          "sapinn_trained_member_0.ckpt", "sapinn_trained_member_1.ckpt",
          "sapinn_trained_psd_comparison.csv"})
        CHECK(fs::exists(fs::path(c.output_dir) / f));

    // Report recomputation from the stored artifacts.
    const std::string text = cmd_report(c);
    CHECK(text.find("parameter estimates") != std::string::npos);
    CHECK(text.find("MSE(x1)") != std::string::npos);
    CHECK(text.find("worst-case gain diagnostic") != std::string::npos);
}

TEST_CASE("ground-motion ingestion: two-column CSV round trip at matching dt") {
    TempDir dir("sapinn_ingest_test");
    const std::string path = dir.file("motion.csv");
    Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(101, 0.0, 1.0);
    Eigen::VectorXd a(101);
    for (int k = 0; k <= 100; ++k) a[k] = std::sin(7.0 * t[k]) * 2.5;
    csv::write_columns(path, {"t_s", "accel_m_s2"}, {t, a});

    auto rec = ingest_ground_motion(path, "two_column_csv", 0.01);
    CHECK(rec.times.size() == 101);
    CHECK((rec.accel - a).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rec.original_dt == doctest::Approx(0.01));

    // Resampling to half the step inserts exact midpoints.
    auto fine = ingest_ground_motion(path, "two_column_csv", 0.005);
    CHECK(fine.accel[1] == doctest::Approx(0.5 * (a[0] + a[1])).epsilon(1e-14));

    // g-units conversion and scale application.
    auto scaled = ingest_ground_motion(path, "two_column_csv", 0.01, "g", 2.0);
    CHECK(scaled.accel[50] == doctest::Approx(a[50] * 9.80665 * 2.0));

    CHECK_THROWS_AS(ingest_ground_motion(path, "two_column_csv", 0.01, "m_per_s2", 0.0),
                    ConfigError);
    CHECK_THROWS_AS(ingest_ground_motion(path, "bad_format", 0.01), ConfigError);
}

TEST_CASE("ground-motion ingestion: fixed-count header format and error paths") {
    TempDir dir("sapinn_peer_test");
    const std::string path = dir.file("motion.at2");
    {
        std::ofstream out(path);
        out << "Recorded motion, north-south component\n";
        out << "ACCELERATION TIME SERIES IN UNITS OF G\n";
        out << "NPTS=   10, DT= .0200 SEC\n";
        out << "  .001  .002  .003  .004  .005\n";
        out << "  .006  .007  .008  .009  .010\n";
    }
    auto rec = ingest_ground_motion(path, "peer", 0.02, "g");
    CHECK(rec.times.size() == 10);
    CHECK(rec.accel[0] == doctest::Approx(0.001 * 9.80665));
    CHECK(rec.accel[9] == doctest::Approx(0.010 * 9.80665));
    CHECK(rec.original_dt == doctest::Approx(0.02));

    const std::string bad = dir.file("bad.at2");
    {
        std::ofstream out(bad);
        out << "no header here\n0.1 0.2\n";
    }
    CHECK_THROWS_AS(ingest_ground_motion(bad, "peer", 0.02), IoError);

    const std::string nonmono = dir.file("nonmono.csv");
    {
        std::ofstream out(nonmono);
        out << "t_s,accel\n0.0,1.0\n0.02,2.0\n0.01,3.0\n";
    }
    CHECK_THROWS_AS(ingest_ground_motion(nonmono, "two_column_csv", 0.01), IoError);
}

TEST_CASE("shipped config files load for every kind") {
    for (const char* name :
         {"toy_sdof", "thunderstorm_sdof", "synthetic_quake_3dof_low",
          "synthetic_quake_3dof_high", "elcentro_3dof"}) {
        const std::string path = std::string(SAPINN_SOURCE_DIR) + "/configs/" + name + ".json";
        auto c = load_config(path);
        CHECK(kind_name(c.kind) == name);
    }
}

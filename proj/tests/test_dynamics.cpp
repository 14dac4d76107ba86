#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sapinn/dynamics.hpp"
#include "sapinn/errors.hpp"

#include <cmath>

using namespace sapinn;
using namespace sapinn::dynamics;

namespace {

StructuralModel toy_sdof() {
    return StructuralModel((Eigen::VectorXd(1) << 4500.0).finished(),
                           (Eigen::VectorXd(1) << 0.245).finished(),
                           (Eigen::VectorXd(1) << 27000.0).finished());
}

StructuralModel chain3(double k, double c, double m, std::optional<BoucWen> bw = std::nullopt) {
    return StructuralModel(Eigen::VectorXd::Constant(3, m), Eigen::VectorXd::Constant(3, c),
                           Eigen::VectorXd::Constant(3, k), InputMap::base_excitation(), bw);
}

} // namespace

TEST_CASE("assemble_linear: SDoF companion form") {
    auto ss = assemble_linear(toy_sdof());
    CHECK(ss.a(0, 0) == 0.0);
    CHECK(ss.a(0, 1) == 1.0);
    CHECK(ss.a(1, 0) == doctest::Approx(-6.0));
    CHECK(ss.a(1, 1) == doctest::Approx(-0.245 / 4500.0));
    CHECK(ss.b[0] == 0.0);
    CHECK(ss.b[1] == doctest::Approx(1.0 / 4500.0));
}

TEST_CASE("assemble_linear: theta=1 equals nominal; stiffness scaling is linear") {
    auto model = StructuralModel(
        (Eigen::VectorXd(1) << 2.0).finished(), (Eigen::VectorXd(1) << 0.1).finished(),
        (Eigen::VectorXd(1) << 8.0).finished(), InputMap::nodal_force(0), std::nullopt,
        {{ScalingAssignment::Target::Stiffness, 0, 0}});
    auto nominal = assemble_linear(model, (Eigen::VectorXd(1) << 1.0).finished());
    auto scaled = assemble_linear(model, (Eigen::VectorXd(1) << 2.0).finished());
    CHECK(nominal.a(1, 0) == doctest::Approx(-4.0));
    CHECK(scaled.a(1, 0) == doctest::Approx(-8.0));
}

TEST_CASE("3-DoF chain stiffness assembly") {
    auto model = chain3(30.0, 0.25, 50.0);
    auto k = model.stiffness_matrix(model.ones_theta());
    Eigen::MatrixXd expect(3, 3);
    expect << 60, -30, 0, -30, 60, -30, 0, -30, 30;
    CHECK((k - expect).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("rhs: linear free vibration and Bouc-Wen special cases") {
    auto model = toy_sdof();
    auto zero_force = [](double) { return 0.0; };
    Eigen::VectorXd state(2);
    state << 1.0, 0.0;
    auto dz = rhs(model, 0.0, state, zero_force, model.ones_theta());
    CHECK(dz[0] == 0.0);
    CHECK(dz[1] == doctest::Approx(-6.0));

    BoucWen bw{1.0, 0.5, 1.0, 0};
    auto nl = chain3(30.0, 0.25, 50.0, bw);
    Eigen::VectorXd s7 = Eigen::VectorXd::Zero(7);
    // v1 = 0 forces dr = 0 regardless of r
    s7[6] = 0.4;
    auto d0 = rhs(nl, 0.0, s7, zero_force, nl.ones_theta());
    CHECK(d0[6] == 0.0);
    // v1 = 1, r = 0: only the direct velocity term survives
    s7.setZero();
    s7[3] = 1.0;
    auto d1 = rhs(nl, 0.0, s7, zero_force, nl.ones_theta());
    CHECK(d1[6] == doctest::Approx(1.0));
}

TEST_CASE("rhs: linear path equals A z + B u to machine precision") {
    auto model = StructuralModel(
        (Eigen::VectorXd(3) << 2.0, 3.0, 4.0).finished(),
        (Eigen::VectorXd(3) << 0.3, 0.2, 0.1).finished(),
        (Eigen::VectorXd(3) << 50.0, 40.0, 30.0).finished(), InputMap::nodal_force(1));
    auto ss = assemble_linear(model);
    Eigen::VectorXd z(6);
    z << 0.1, -0.2, 0.3, 1.0, -0.5, 0.25;
    const double u = 2.5;
    Eigen::VectorXd expect = ss.a * z + ss.b * u;
    auto got = rhs(model, 0.0, z, [&](double) { return u; }, model.ones_theta());
    CHECK((got - expect).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rk4: damped free decay has non-increasing energy") {
    auto model = StructuralModel((Eigen::VectorXd(1) << 2.0).finished(),
                                 (Eigen::VectorXd(1) << 0.5).finished(),
                                 (Eigen::VectorXd(1) << 18.0).finished());
    Eigen::VectorXd init(2);
    init << 0.05, 0.0;
    auto traj = rk4_integrate(model, [](double) { return 0.0; }, 0.001, 20.0, init);
    double prev = 1e300;
    for (Eigen::Index k = 0; k < traj.times.size(); k += 100) {
        const double e = 0.5 * 2.0 * traj.velocity(k, 0) * traj.velocity(k, 0) +
                         0.5 * 18.0 * traj.displacement(k, 0) * traj.displacement(k, 0);
        CHECK(e <= prev * (1.0 + 1e-12));
        prev = e;
    }
}

TEST_CASE("rk4: steady-state amplitude matches analytic frequency response to 0.1%") {
    // Use a damped variant so the transient actually decays.
    const double m = 4500.0, k = 27000.0, c = 2000.0, a = 200.0, w = 0.5;
    auto model = StructuralModel((Eigen::VectorXd(1) << m).finished(),
                                 (Eigen::VectorXd(1) << c).finished(),
                                 (Eigen::VectorXd(1) << k).finished());
    auto force = [&](double t) { return a * std::sin(w * t); };
    auto traj = rk4_integrate(model, force, 0.005, 400.0, Eigen::VectorXd::Zero(2));
    const double expect = a / std::sqrt(std::pow(k - m * w * w, 2) + std::pow(c * w, 2));
    double peak = 0.0;
    for (Eigen::Index i = traj.times.size() / 2; i < traj.times.size(); ++i)
        peak = std::max(peak, std::abs(traj.displacement(i, 0)));
    CHECK(std::abs(peak - expect) / expect < 1e-3);
}

TEST_CASE("rk4: fourth-order convergence on the linear SDoF benchmark") {
    const double m = 4500.0, k = 27000.0, c = 0.245;
    auto model = StructuralModel((Eigen::VectorXd(1) << m).finished(),
                                 (Eigen::VectorXd(1) << c).finished(),
                                 (Eigen::VectorXd(1) << k).finished());
    auto force = [](double t) { return 200.0 * std::sin(0.5 * t); };
    auto terminal = [&](double dt) {
        auto traj = rk4_integrate(model, force, dt, 10.0, Eigen::VectorXd::Zero(2));
        const Eigen::Index last = traj.times.size() - 1;
        Eigen::Vector2d z(traj.displacement(last, 0), traj.velocity(last, 0));
        return z;
    };
    const Eigen::Vector2d ref = terminal(0.0004);
    const double err_h = (terminal(0.02) - ref).norm();
    const double err_h2 = (terminal(0.01) - ref).norm();
    const double ratio = err_h / err_h2;
    CHECK(ratio > 12.0);  // order >= 3.8 gives ratio >= 2^3.8 ~ 13.9; keep margin
    CHECK(ratio < 20.0);
    const double order = std::log2(ratio);
    CHECK(order >= 3.8);
}

TEST_CASE("bouc-wen degenerate parameters reproduce the linear system") {
    // n=1, alpha=beta=0 makes dr = dx so k1*r equals the elastic base force.
    BoucWen bw{0.0, 0.0, 1.0, 0};
    auto nonlinear = chain3(30.0, 0.25, 50.0, bw);
    auto linear = chain3(30.0, 0.25, 50.0);
    auto ground = [](double t) { return 0.3 * std::sin(1.1 * t) + 0.2 * std::cos(2.3 * t); };
    auto traj_nl = rk4_integrate(nonlinear, ground, 0.005, 30.0);
    auto traj_li = rk4_integrate(linear, ground, 0.005, 30.0);
    CHECK((traj_nl.displacement - traj_li.displacement).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((traj_nl.acceleration - traj_li.acceleration).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("base excitation applies mass-proportional forces at every DoF") {
    auto model = StructuralModel(
        (Eigen::VectorXd(3) << 2.0, 3.0, 4.0).finished(), Eigen::VectorXd::Zero(3).array() + 0.1,
        Eigen::VectorXd::Constant(3, 30.0), InputMap::base_excitation());
    Eigen::VectorXd z = Eigen::VectorXd::Zero(6);
    const double ug = 1.7;
    auto dz = rhs(model, 0.0, z, [&](double) { return ug; }, model.ones_theta());
    for (int i = 0; i < 3; ++i) CHECK(dz[3 + i] == doctest::Approx(-ug));
}

TEST_CASE("measure: noise statistics, determinism, zero-noise exactness") {
    auto model = toy_sdof();
    auto force = [](double t) { return 200.0 * std::sin(0.5 * t); };
    auto traj = rk4_integrate(model, force, 0.01, 80.0);

    auto clean = measure(traj, 0.0, 1);
    CHECK((clean.accel_noisy - traj.acceleration).cwiseAbs().maxCoeff() == 0.0);

    auto noisy = measure(traj, 0.15, 42);
    auto noisy2 = measure(traj, 0.15, 42);
    CHECK((noisy.accel_noisy.array() == noisy2.accel_noisy.array()).all());

    const Eigen::VectorXd noise = noisy.accel_noisy.col(0) - traj.acceleration.col(0);
    const double rms =
        std::sqrt(traj.acceleration.col(0).squaredNorm() / traj.acceleration.rows());
    const double noise_std = std::sqrt(noise.squaredNorm() / noise.size());
    CHECK(noise_std / rms > 0.13);
    CHECK(noise_std / rms < 0.17);
}

TEST_CASE("hinf gain: SDoF asymptotics and resonance location") {
    const double m = 4500.0, k = 27000.0;
    const double c = 2.0 * 0.1 * std::sqrt(k * m); // 10% damping
    auto model = StructuralModel((Eigen::VectorXd(1) << m).finished(),
                                 (Eigen::VectorXd(1) << c).finished(),
                                 (Eigen::VectorXd(1) << k).finished());
    const double wn = std::sqrt(k / m);
    Eigen::VectorXd grid = Eigen::VectorXd::LinSpaced(20000, 1e-3, 50.0 * wn);
    auto res = hinf_gain(model, grid);
    CHECK(res.resonance_covered);
    // peak near the damped resonance for light damping
    CHECK(res.argmax_omega[0] == doctest::Approx(wn).epsilon(0.05));
    // high-frequency accelerance tends to 1/m
    Eigen::VectorXd far = Eigen::VectorXd::LinSpaced(3, 1e4 * wn, 2e4 * wn);
    auto far_res = hinf_gain(model, far);
    CHECK(far_res.gain[0] == doctest::Approx(1.0 / m).epsilon(1e-4));
    CHECK_FALSE(far_res.resonance_covered);
    // low-frequency gain vanishes
    Eigen::VectorXd low = Eigen::VectorXd::LinSpaced(3, 1e-6, 1e-5);
    CHECK(hinf_gain(model, low).gain[0] < 1e-9);
}

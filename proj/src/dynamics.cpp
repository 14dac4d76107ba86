#include "sapinn/dynamics.hpp"

#include "sapinn/csv.hpp"
#include "sapinn/errors.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <complex>

namespace sapinn::dynamics {

StructuralModel::StructuralModel(Eigen::VectorXd masses, Eigen::VectorXd damping,
                                 Eigen::VectorXd stiffness, InputMap input,
                                 std::optional<BoucWen> bouc_wen,
                                 std::vector<ScalingAssignment> scalings,
                                 std::vector<std::string> theta_names)
    : masses_(std::move(masses)), damping_(std::move(damping)), stiffness_(std::move(stiffness)),
      input_(input), bouc_wen_(std::move(bouc_wen)), scalings_(std::move(scalings)),
      theta_names_(std::move(theta_names)) {
    const auto n = masses_.size();
    if (n == 0) throw ConfigError("StructuralModel: empty model");
    if (damping_.size() != n || stiffness_.size() != n)
        throw DimensionError("StructuralModel: damping/stiffness length must equal DoF count");
    if ((masses_.array() <= 0.0).any()) throw ConfigError("StructuralModel: masses must be > 0");
    if ((stiffness_.array() <= 0.0).any())
        throw ConfigError("StructuralModel: stiffness must be > 0");
    if (input_.kind == InputMap::Kind::NodalForce && (input_.dof < 0 || input_.dof >= n))
        throw ConfigError("StructuralModel: input DoF out of range");
    if (bouc_wen_) {
        if (bouc_wen_->location != 0)
            throw ConfigError("StructuralModel: hysteretic element supported at the base only");
        if (!(bouc_wen_->n_exp >= 1.0)) throw ConfigError("StructuralModel: Bouc-Wen n >= 1");
    }
    for (const auto& s : scalings_) {
        if (s.element < 0 || s.element >= n)
            throw ConfigError("StructuralModel: scaling element out of range");
        if (s.theta_index < 0) throw ConfigError("StructuralModel: negative theta index");
        ntheta_ = std::max(ntheta_, s.theta_index + 1);
        if (bouc_wen_ && s.target == ScalingAssignment::Target::Stiffness &&
            s.element == bouc_wen_->location)
            throw ConfigError("StructuralModel: cannot scale the hysteretic spring");
    }
    if (theta_names_.empty())
        for (int p = 0; p < ntheta_; ++p) theta_names_.push_back("theta" + std::to_string(p + 1));
    if (static_cast<int>(theta_names_.size()) != ntheta_)
        throw DimensionError("StructuralModel: theta name count mismatch");
}

// Chain (shear-building) assembly: element 0 ties DoF 0 to ground; element i
// ties DoF i-1 to DoF i.
static void add_element(Eigen::MatrixXd& m, int element, double value) {
    if (element == 0) {
        m(0, 0) += value;
    } else {
        m(element - 1, element - 1) += value;
        m(element, element) += value;
        m(element - 1, element) -= value;
        m(element, element - 1) -= value;
    }
}

Eigen::MatrixXd StructuralModel::chain_matrix(const Eigen::VectorXd& values,
                                              bool skip_bw_element) const {
    const int n = ndof();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int e = 0; e < n; ++e) {
        if (skip_bw_element && bouc_wen_ && e == bouc_wen_->location) continue;
        add_element(m, e, values[e]);
    }
    return m;
}

Eigen::MatrixXd StructuralModel::chain_matrix_selected(ScalingAssignment::Target target,
                                                       int theta_index, bool base_part) const {
    const int n = ndof();
    const bool is_stiffness = target == ScalingAssignment::Target::Stiffness;
    const Eigen::VectorXd& values = is_stiffness ? stiffness_ : damping_;
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int e = 0; e < n; ++e) {
        if (is_stiffness && bouc_wen_ && e == bouc_wen_->location) continue;
        int owner = -1;
        for (const auto& s : scalings_)
            if (s.target == target && s.element == e) owner = s.theta_index;
        const bool selected = base_part ? owner < 0 : owner == theta_index;
        if (selected) add_element(m, e, values[e]);
    }
    return m;
}

Eigen::MatrixXd StructuralModel::stiffness_matrix(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd k = stiffness_base();
    for (int p = 0; p < ntheta_; ++p) k += theta[p] * stiffness_theta_part(p);
    return k;
}

Eigen::MatrixXd StructuralModel::damping_matrix(const Eigen::VectorXd& theta) const {
    Eigen::MatrixXd c = damping_base();
    for (int p = 0; p < ntheta_; ++p) c += theta[p] * damping_theta_part(p);
    return c;
}

Eigen::MatrixXd StructuralModel::stiffness_base() const {
    return chain_matrix_selected(ScalingAssignment::Target::Stiffness, -1, true);
}
Eigen::MatrixXd StructuralModel::stiffness_theta_part(int theta_index) const {
    return chain_matrix_selected(ScalingAssignment::Target::Stiffness, theta_index, false);
}
Eigen::MatrixXd StructuralModel::damping_base() const {
    return chain_matrix_selected(ScalingAssignment::Target::Damping, -1, true);
}
Eigen::MatrixXd StructuralModel::damping_theta_part(int theta_index) const {
    return chain_matrix_selected(ScalingAssignment::Target::Damping, theta_index, false);
}

Eigen::VectorXd StructuralModel::input_vector() const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(ndof());
    if (input_.kind == InputMap::Kind::NodalForce)
        b[input_.dof] = 1.0;
    else
        b = -masses_;
    return b;
}

Eigen::VectorXd StructuralModel::restoring_vector() const {
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ndof());
    if (bouc_wen_) g[bouc_wen_->location] = stiffness_[bouc_wen_->location];
    return g;
}

StateSpace assemble_linear(const StructuralModel& model, const Eigen::VectorXd& theta) {
    if (model.bouc_wen())
        throw ConfigError("assemble_linear: model has a hysteretic element");
    if (theta.size() != model.ntheta())
        throw DimensionError("assemble_linear: theta size mismatch");
    const int n = model.ndof();
    const Eigen::VectorXd inv_m = model.masses().cwiseInverse();
    StateSpace ss;
    ss.a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    ss.a.topRightCorner(n, n).setIdentity();
    ss.a.bottomLeftCorner(n, n) = inv_m.asDiagonal() * (-model.stiffness_matrix(theta));
    ss.a.bottomRightCorner(n, n) = inv_m.asDiagonal() * (-model.damping_matrix(theta));
    ss.b = Eigen::VectorXd::Zero(2 * n);
    ss.b.tail(n) = inv_m.asDiagonal() * model.input_vector();
    return ss;
}

StateSpace assemble_linear(const StructuralModel& model) {
    return assemble_linear(model, model.ones_theta());
}

Eigen::VectorXd rhs(const StructuralModel& model, double t, const Eigen::VectorXd& state,
                    const ExcitationFn& excitation, const Eigen::VectorXd& theta) {
    const int n = model.ndof();
    if (state.size() != model.state_dim()) throw DimensionError("rhs: state size mismatch");
    if (!state.allFinite()) throw NumericError("rhs: non-finite state");
    const auto x = state.head(n);
    const auto v = state.segment(n, n);
    const double u = excitation(t);

    Eigen::VectorXd force = model.input_vector() * u;
    force.noalias() -= model.damping_matrix(theta) * v;
    force.noalias() -= model.stiffness_matrix(theta) * x;

    Eigen::VectorXd out(state.size());
    out.head(n) = v;
    if (model.bouc_wen()) {
        const auto& bw = *model.bouc_wen();
        const double r = state[2 * n];
        force.noalias() -= model.restoring_vector() * r;
        const double v1 = v[bw.location];
        const double abs_r_nm1 = std::pow(std::abs(r), bw.n_exp - 1.0);
        const double abs_r_n = abs_r_nm1 * std::abs(r);
        out[2 * n] = v1 - bw.beta * std::abs(v1) * abs_r_nm1 * r - bw.alpha_r * v1 * abs_r_n;
    }
    out.segment(n, n) = force.cwiseQuotient(model.masses());
    return out;
}

StateTrajectory rk4_integrate(const StructuralModel& model, const ExcitationFn& excitation,
                              double dt, double t_end, const Eigen::VectorXd& init_state,
                              const Eigen::VectorXd& theta_in) {
    if (!(dt > 0.0)) throw ConfigError("rk4_integrate: dt must be > 0");
    if (!(t_end >= 0.0)) throw ConfigError("rk4_integrate: t_end must be >= 0");
    const Eigen::VectorXd theta = theta_in.size() ? theta_in : model.ones_theta();
    Eigen::VectorXd state = init_state.size() ? init_state
                                              : Eigen::VectorXd::Zero(model.state_dim());
    if (state.size() != model.state_dim())
        throw DimensionError("rk4_integrate: init state size mismatch");

    const int n = model.ndof();
    const auto steps = static_cast<Eigen::Index>(std::llround(t_end / dt));
    StateTrajectory traj;
    traj.times.resize(steps + 1);
    traj.displacement.resize(steps + 1, n);
    traj.velocity.resize(steps + 1, n);
    traj.acceleration.resize(steps + 1, n);
    if (model.bouc_wen()) traj.restoring = Eigen::VectorXd(steps + 1);

    auto store = [&](Eigen::Index k, double t) {
        const Eigen::VectorXd dz = rhs(model, t, state, excitation, theta);
        traj.times[k] = t;
        traj.displacement.row(k) = state.head(n);
        traj.velocity.row(k) = state.segment(n, n);
        traj.acceleration.row(k) = dz.segment(n, n);
        if (traj.restoring) (*traj.restoring)[k] = state[2 * n];
    };

    store(0, 0.0);
    for (Eigen::Index k = 0; k < steps; ++k) {
        const double t = k * dt;
        const Eigen::VectorXd k1 = rhs(model, t, state, excitation, theta);
        const Eigen::VectorXd k2 = rhs(model, t + 0.5 * dt, state + 0.5 * dt * k1, excitation, theta);
        const Eigen::VectorXd k3 = rhs(model, t + 0.5 * dt, state + 0.5 * dt * k2, excitation, theta);
        const Eigen::VectorXd k4 = rhs(model, t + dt, state + dt * k3, excitation, theta);
        state += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!state.allFinite())
            throw NumericError("rk4_integrate: non-finite state at step " + std::to_string(k + 1));
        store(k + 1, (k + 1) * dt);
    }
    return traj;
}

Observation measure(const StateTrajectory& traj, double noise_ratio, std::uint64_t seed) {
    if (noise_ratio < 0.0) throw ConfigError("measure: noise_ratio must be >= 0");
    Observation obs;
    obs.times = traj.times;
    obs.accel_noisy = traj.acceleration;
    obs.noise_ratio = noise_ratio;
    obs.seed = seed;
    if (noise_ratio > 0.0) {
        Rng rng(seed);
        for (Eigen::Index ch = 0; ch < traj.acceleration.cols(); ++ch) {
            const double rms =
                std::sqrt(traj.acceleration.col(ch).squaredNorm() / traj.acceleration.rows());
            const double std_dev = noise_ratio * rms;
            for (Eigen::Index k = 0; k < traj.acceleration.rows(); ++k)
                obs.accel_noisy(k, ch) += rng.normal(0.0, std_dev);
        }
    }
    return obs;
}

Eigen::VectorXd natural_frequencies(const StructuralModel& model, const Eigen::VectorXd& theta_in) {
    const Eigen::VectorXd theta = theta_in.size() ? theta_in : model.ones_theta();
    // Chain K with every spring elastic (the hysteretic element linearizes to
    // its spring rate for n=1, alpha=beta=0; good enough to locate resonances).
    const int n = model.ndof();
    Eigen::MatrixXd k = model.stiffness_matrix(theta);
    if (model.bouc_wen()) add_element(k, model.bouc_wen()->location,
                                      model.stiffness()[model.bouc_wen()->location]);
    const Eigen::VectorXd inv_sqrt_m = model.masses().array().rsqrt();
    const Eigen::MatrixXd sym = inv_sqrt_m.asDiagonal() * k * inv_sqrt_m.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    return eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
}

HinfResult hinf_gain(const StructuralModel& model, const Eigen::VectorXd& omega_grid,
                     const Eigen::VectorXd& theta_in) {
    if (model.bouc_wen()) throw ConfigError("hinf_gain: linear models only");
    if (omega_grid.size() == 0) throw ConfigError("hinf_gain: empty grid");
    const Eigen::VectorXd theta = theta_in.size() ? theta_in : model.ones_theta();
    const int n = model.ndof();
    const Eigen::MatrixXd k = model.stiffness_matrix(theta);
    const Eigen::MatrixXd c = model.damping_matrix(theta);
    const Eigen::VectorXd b = model.input_vector();

    HinfResult res;
    res.gain = Eigen::VectorXd::Zero(n);
    res.argmax_omega = Eigen::VectorXd::Zero(n);
    using Cplx = std::complex<double>;
    Eigen::MatrixXcd dyn(n, n);
    for (Eigen::Index j = 0; j < omega_grid.size(); ++j) {
        const double w = omega_grid[j];
        dyn = k.cast<Cplx>();
        dyn += Cplx(0.0, w) * c.cast<Cplx>();
        dyn -= (w * w) * Eigen::MatrixXd(model.masses().asDiagonal()).cast<Cplx>();
        const Eigen::VectorXcd x = dyn.partialPivLu().solve(b.cast<Cplx>());
        for (int ch = 0; ch < n; ++ch) {
            const double g = w * w * std::abs(x[ch]);
            if (g > res.gain[ch]) {
                res.gain[ch] = g;
                res.argmax_omega[ch] = w;
            }
        }
    }
    const Eigen::VectorXd wn = natural_frequencies(model, theta);
    res.resonance_covered = (wn.minCoeff() >= omega_grid.minCoeff()) &&
                            (wn.maxCoeff() <= omega_grid.maxCoeff());
    return res;
}

void export_trajectory_csv(const StateTrajectory& traj, const std::string& path) {
    std::vector<std::string> header{"t_s"};
    std::vector<Eigen::VectorXd> cols{traj.times};
    const int n = static_cast<int>(traj.displacement.cols());
    for (int i = 0; i < n; ++i) { header.push_back("x" + std::to_string(i + 1)); cols.push_back(traj.displacement.col(i)); }
    for (int i = 0; i < n; ++i) { header.push_back("v" + std::to_string(i + 1)); cols.push_back(traj.velocity.col(i)); }
    for (int i = 0; i < n; ++i) { header.push_back("a" + std::to_string(i + 1)); cols.push_back(traj.acceleration.col(i)); }
    if (traj.restoring) { header.push_back("r1"); cols.push_back(*traj.restoring); }
    csv::write_columns(path, header, cols);
}

void export_observation_csv(const Observation& obs, const std::string& path) {
    std::vector<std::string> header{"t_s"};
    std::vector<Eigen::VectorXd> cols{obs.times};
    for (Eigen::Index i = 0; i < obs.accel_noisy.cols(); ++i) {
        header.push_back("a" + std::to_string(i + 1));
        cols.push_back(obs.accel_noisy.col(i));
    }
    csv::write_columns(path, header, cols);
}

} // namespace sapinn::dynamics

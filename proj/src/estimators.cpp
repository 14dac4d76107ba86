#include "sapinn/estimators.hpp"

#include "sapinn/csv.hpp"
#include "sapinn/errors.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace sapinn::estimators {

std::string mode_name(Mode mode) {
    switch (mode) {
        case Mode::PinnKnownForce: return "pinn_known";
        case Mode::PinnUnknownForce: return "pinn_unknown";
        case Mode::SapinnRandomPhase: return "sapinn_random";
        case Mode::SapinnTrainedPhase: return "sapinn_trained";
    }
    throw ConfigError("mode_name: bad mode");
}

Mode mode_from_name(const std::string& name) {
    if (name == "pinn_known") return Mode::PinnKnownForce;
    if (name == "pinn_unknown") return Mode::PinnUnknownForce;
    if (name == "sapinn_random") return Mode::SapinnRandomPhase;
    if (name == "sapinn_trained") return Mode::SapinnTrainedPhase;
    throw ConfigError("unknown mode: " + name);
}

double TrainableSet::softplus(double raw) {
    if (raw > 30.0) return raw;
    return std::log1p(std::exp(raw));
}

double TrainableSet::softplus_inv(double natural) {
    if (!(natural > 0.0)) throw ConfigError("softplus_inv: value must be > 0");
    if (natural > 30.0) return natural;
    return std::log(std::expm1(natural));
}

static double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::VectorXd TrainableSet::theta() const {
    Eigen::VectorXd out(theta_raw.size());
    for (Eigen::Index i = 0; i < theta_raw.size(); ++i) out[i] = softplus(theta_raw[i]);
    return out;
}

int Problem::n_latent_outputs() const { return assumed.ndof() + (hysteretic() ? 1 : 0); }

void Problem::validate() const {
    if (!obs) throw ConfigError("Problem: observation missing");
    if (obs->accel_noisy.cols() != assumed.ndof())
        throw DimensionError("Problem: observation channel count != DoF count");
    if (mode == Mode::SapinnRandomPhase || mode == Mode::SapinnTrainedPhase) {
        if (!family) throw ConfigError("Problem: spectral family required for this mode");
        if (family->times().size() != obs->times.size())
            throw DimensionError("Problem: family grid does not match observation times");
    }
    if (mode == Mode::PinnKnownForce && known_force.size() != obs->times.size())
        throw DimensionError("Problem: known force must be sampled at observation times");
    if (output_scales.size() != n_latent_outputs())
        throw DimensionError("Problem: output_scales size mismatch");
    if ((output_scales.array() <= 0.0).any())
        throw ConfigError("Problem: output scales must be > 0");
    if (use_boundary && weights.lambda_bc > 0.0 && bc_state.size() != 0 &&
        bc_state.size() != 2 * assumed.ndof() + (hysteretic() ? 1 : 0))
        throw DimensionError("Problem: boundary state size mismatch");
    if (!(force_scale > 0.0)) throw ConfigError("Problem: force scale must be > 0");
}

namespace {

struct Context {
    int n = 0;              // DoF count
    Eigen::Index nt = 0;    // time samples
    bool hyst = false;
    Eigen::VectorXd inv_m;
    Eigen::MatrixXd km, cm;              // mass-normalized K(theta), C(theta)
    std::vector<Eigen::MatrixXd> km_p;   // mass-normalized per-theta parts
    std::vector<Eigen::MatrixXd> cm_p;
    Eigen::VectorXd bm;                  // mass-normalized input vector
    Eigen::VectorXd gm;                  // mass-normalized restoring vector
    Eigen::VectorXd channel_weight;      // 1 / (N n var_ch) or 1 / (N n)
    Eigen::VectorXd bc_values;           // zeros when unset
    Eigen::VectorXd bc_scale_sq;         // normalization per boundary entry
    int n_bc = 0;
};

Context make_context(const Problem& problem, const Eigen::VectorXd& theta) {
    Context ctx;
    const auto& model = problem.assumed;
    ctx.n = model.ndof();
    ctx.nt = problem.obs->times.size();
    ctx.hyst = problem.hysteretic();
    ctx.inv_m = model.masses().cwiseInverse();
    ctx.km = ctx.inv_m.asDiagonal() * model.stiffness_matrix(theta);
    ctx.cm = ctx.inv_m.asDiagonal() * model.damping_matrix(theta);
    for (int p = 0; p < model.ntheta(); ++p) {
        ctx.km_p.push_back(ctx.inv_m.asDiagonal() * model.stiffness_theta_part(p));
        ctx.cm_p.push_back(ctx.inv_m.asDiagonal() * model.damping_theta_part(p));
    }
    ctx.bm = ctx.inv_m.cwiseProduct(model.input_vector());
    ctx.gm = ctx.inv_m.cwiseProduct(model.restoring_vector());

    ctx.channel_weight.resize(ctx.n);
    const double denom = static_cast<double>(ctx.nt) * ctx.n;
    for (int ch = 0; ch < ctx.n; ++ch) {
        double w = 1.0 / denom;
        if (problem.normalize_by_channel_variance) {
            const auto col = problem.obs->accel_noisy.col(ch);
            const double mean = col.mean();
            const double var = (col.array() - mean).square().mean();
            w /= std::max(var, 1e-30);
        }
        ctx.channel_weight[ch] = w;
    }

    ctx.n_bc = 2 * ctx.n + (ctx.hyst ? 1 : 0);
    ctx.bc_values = problem.bc_state.size() ? problem.bc_state
                                            : Eigen::VectorXd::Zero(ctx.n_bc);
    ctx.bc_scale_sq = Eigen::VectorXd::Ones(ctx.n_bc);
    if (problem.normalize_by_channel_variance) {
        for (int ch = 0; ch < ctx.n; ++ch) {
            const double s = problem.output_scales[ch];
            ctx.bc_scale_sq[ch] = s * s;
            const double sv = s * problem.omega_ref;
            ctx.bc_scale_sq[ctx.n + ch] = sv * sv;
        }
        if (ctx.hyst) {
            const double sr = problem.output_scales[ctx.n];
            ctx.bc_scale_sq[2 * ctx.n] = sr * sr;
        }
    }
    return ctx;
}

Eigen::VectorXd boundary_errors(const Context& ctx, const LatentJets& latents) {
    Eigen::VectorXd e(ctx.n_bc);
    e.head(ctx.n) = latents.x0.row(0).transpose() - ctx.bc_values.head(ctx.n);
    e.segment(ctx.n, ctx.n) =
        latents.x1.row(0).transpose() - ctx.bc_values.segment(ctx.n, ctx.n);
    if (ctx.hyst) e[2 * ctx.n] = latents.r0[0] - ctx.bc_values[2 * ctx.n];
    return e;
}

} // namespace

Eigen::MatrixXd model_acceleration(const Problem& problem, const Eigen::VectorXd& theta,
                                   const LatentJets& latents, const Eigen::VectorXd& force) {
    const Context ctx = make_context(problem, theta);
    Eigen::MatrixXd a = force * ctx.bm.transpose();
    a.noalias() -= latents.x1 * ctx.cm.transpose();
    a.noalias() -= latents.x0 * ctx.km.transpose();
    if (ctx.hyst) a.noalias() -= latents.r0 * ctx.gm.transpose();
    return a;
}

namespace {

LossBreakdown losses_from(const Problem& problem, const Context& ctx, const LatentJets& latents,
                          const Eigen::VectorXd& force, Eigen::MatrixXd* r_sp_out,
                          Eigen::MatrixXd* r_d_out) {
    Eigen::MatrixXd a_model = force * ctx.bm.transpose();
    a_model.noalias() -= latents.x1 * ctx.cm.transpose();
    a_model.noalias() -= latents.x0 * ctx.km.transpose();
    if (ctx.hyst) a_model.noalias() -= latents.r0 * ctx.gm.transpose();

    const Eigen::MatrixXd r_sp = problem.obs->accel_noisy - a_model;
    const Eigen::MatrixXd r_d = problem.obs->accel_noisy - latents.x2;

    LossBreakdown out;
    for (int ch = 0; ch < ctx.n; ++ch) {
        out.spectrum_physics +=
            problem.weights.lambda_sp * ctx.channel_weight[ch] * r_sp.col(ch).squaredNorm();
        out.data += problem.weights.lambda_d * ctx.channel_weight[ch] * r_d.col(ch).squaredNorm();
    }
    if (problem.use_boundary) {
        const Eigen::VectorXd e = boundary_errors(ctx, latents);
        double bc = 0.0;
        for (int i = 0; i < ctx.n_bc; ++i) bc += e[i] * e[i] / ctx.bc_scale_sq[i];
        out.boundary = problem.weights.lambda_bc * bc / ctx.n_bc;
    }
    out.total = out.spectrum_physics + out.data + out.boundary;
    if (r_sp_out) *r_sp_out = r_sp;
    if (r_d_out) *r_d_out = r_d;
    return out;
}

} // namespace

LossBreakdown compute_losses(const Problem& problem, const Eigen::VectorXd& theta,
                             const LatentJets& latents, const Eigen::VectorXd& force) {
    problem.validate();
    const Context ctx = make_context(problem, theta);
    return losses_from(problem, ctx, latents, force, nullptr, nullptr);
}

LatentJets evaluate_latents(const Problem& problem, const TrainableSet& trainables, int order,
                            neural::ForwardStash* stash) {
    const int n = problem.assumed.ndof();
    const auto jets = neural::forward_jet(trainables.xi, problem.obs->times,
                                          problem.time_scaling, order, stash);
    if (jets.v0.cols() != problem.n_latent_outputs())
        throw DimensionError("evaluate_latents: network output count mismatch");
    LatentJets lat;
    const auto& s = problem.output_scales;
    lat.x0 = jets.v0.leftCols(n) * s.head(n).asDiagonal();
    if (order >= 1) lat.x1 = jets.v1.leftCols(n) * s.head(n).asDiagonal();
    if (order >= 2) lat.x2 = jets.v2.leftCols(n) * s.head(n).asDiagonal();
    if (problem.hysteretic()) {
        lat.r0 = jets.v0.col(n) * s[n];
        if (order >= 1) lat.r1 = jets.v1.col(n) * s[n];
    }
    return lat;
}

Eigen::VectorXd evaluate_force(const Problem& problem, const TrainableSet& trainables) {
    switch (problem.mode) {
        case Mode::PinnKnownForce:
            return problem.known_force;
        case Mode::PinnUnknownForce: {
            if (!trainables.force_net) throw ConfigError("evaluate_force: force net missing");
            return problem.force_scale *
                   neural::forward(*trainables.force_net, problem.obs->times,
                                   problem.time_scaling)
                       .col(0);
        }
        case Mode::SapinnRandomPhase:
        case Mode::SapinnTrainedPhase:
            return problem.family->force(trainables.phi,
                                         trainables.amplitude.value_or(1.0));
    }
    throw ConfigError("evaluate_force: bad mode");
}

LossBreakdown evaluate_loss(const Problem& problem, const TrainableSet& trainables) {
    problem.validate();
    const Context ctx = make_context(problem, trainables.theta());
    const LatentJets latents = evaluate_latents(problem, trainables, 2, nullptr);
    const Eigen::VectorXd force = evaluate_force(problem, trainables);
    return losses_from(problem, ctx, latents, force, nullptr, nullptr);
}

Eigen::VectorXd pack_trainables(const Problem& problem, const TrainableSet& trainables) {
    std::vector<Eigen::VectorXd> parts;
    parts.push_back(neural::pack(trainables.xi));
    if (problem.mode == Mode::PinnUnknownForce) {
        if (!trainables.force_net) throw ConfigError("pack_trainables: force net missing");
        parts.push_back(neural::pack(*trainables.force_net));
    }
    parts.push_back(trainables.theta_raw);
    if (problem.mode == Mode::SapinnTrainedPhase) parts.push_back(trainables.phi);
    if (problem.mode == Mode::SapinnTrainedPhase && trainables.amplitude)
        parts.push_back(
            Eigen::VectorXd::Constant(1, *trainables.amplitude / problem.amplitude_scale));
    Eigen::Index total = 0;
    for (const auto& p : parts) total += p.size();
    Eigen::VectorXd flat(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        flat.segment(at, p.size()) = p;
        at += p.size();
    }
    return flat;
}

void unpack_trainables(const Problem& problem, const Eigen::VectorXd& flat,
                       TrainableSet& trainables) {
    Eigen::Index at = 0;
    neural::unpack(flat.segment(at, trainables.xi.parameter_count()), trainables.xi);
    at += trainables.xi.parameter_count();
    if (problem.mode == Mode::PinnUnknownForce) {
        neural::unpack(flat.segment(at, trainables.force_net->parameter_count()),
                       *trainables.force_net);
        at += trainables.force_net->parameter_count();
    }
    trainables.theta_raw = flat.segment(at, trainables.theta_raw.size());
    at += trainables.theta_raw.size();
    if (problem.mode == Mode::SapinnTrainedPhase) {
        trainables.phi = flat.segment(at, trainables.phi.size());
        at += trainables.phi.size();
        if (trainables.amplitude) {
            trainables.amplitude = flat[at] * problem.amplitude_scale;
            at += 1;
        }
    }
    if (at != flat.size()) throw DimensionError("unpack_trainables: size mismatch");
}

LossBreakdown loss_and_gradient(const Problem& problem, const TrainableSet& trainables,
                                Eigen::VectorXd& grad) {
    problem.validate();
    const int n = problem.assumed.ndof();
    const Eigen::VectorXd theta = trainables.theta();
    const Context ctx = make_context(problem, theta);

    neural::ForwardStash stash;
    const LatentJets latents = evaluate_latents(problem, trainables, 2, &stash);
    const Eigen::VectorXd force = evaluate_force(problem, trainables);

    Eigen::MatrixXd r_sp, r_d;
    const LossBreakdown loss = losses_from(problem, ctx, latents, force, &r_sp, &r_d);

    // dL/dA_model per entry (P) and dL/dX2 from the data term.
    Eigen::MatrixXd p_sp(ctx.nt, n), g_d(ctx.nt, n);
    for (int ch = 0; ch < n; ++ch) {
        const double wsp = 2.0 * problem.weights.lambda_sp * ctx.channel_weight[ch];
        const double wd = 2.0 * problem.weights.lambda_d * ctx.channel_weight[ch];
        p_sp.col(ch) = -wsp * r_sp.col(ch); // dL/dA_model
        g_d.col(ch) = -wd * r_d.col(ch);    // dL/dX2
    }

    // Latent adjoints.
    Eigen::MatrixXd d_x0 = -p_sp * ctx.km;
    Eigen::MatrixXd d_x1 = -p_sp * ctx.cm;
    Eigen::MatrixXd d_x2 = g_d;
    Eigen::VectorXd d_r0 = ctx.hyst ? Eigen::VectorXd(-p_sp * ctx.gm) : Eigen::VectorXd();
    Eigen::VectorXd d_force = p_sp * ctx.bm;

    // theta gradient (natural units), then the softplus chain.
    Eigen::VectorXd d_theta_raw = Eigen::VectorXd::Zero(trainables.theta_raw.size());
    for (int p = 0; p < problem.assumed.ntheta(); ++p) {
        double d_nat = -(p_sp.cwiseProduct(latents.x0 * ctx.km_p[p].transpose())).sum() -
                       (p_sp.cwiseProduct(latents.x1 * ctx.cm_p[p].transpose())).sum();
        d_theta_raw[p] = d_nat * sigmoid(trainables.theta_raw[p]);
    }

    // Boundary contributions.
    if (problem.use_boundary) {
        const Eigen::VectorXd e = boundary_errors(ctx, latents);
        const double w = 2.0 * problem.weights.lambda_bc / ctx.n_bc;
        for (int ch = 0; ch < n; ++ch) {
            d_x0(0, ch) += w * e[ch] / ctx.bc_scale_sq[ch];
            d_x1(0, ch) += w * e[n + ch] / ctx.bc_scale_sq[n + ch];
        }
        if (ctx.hyst) d_r0[0] += w * e[2 * n] / ctx.bc_scale_sq[2 * n];
    }

    // Back through the output de-normalization into network-output adjoints.
    neural::JetBatch out_adj;
    const int n_out = problem.n_latent_outputs();
    out_adj.v0.resize(ctx.nt, n_out);
    out_adj.v1.resize(ctx.nt, n_out);
    out_adj.v2.resize(ctx.nt, n_out);
    for (int ch = 0; ch < n; ++ch) {
        const double s = problem.output_scales[ch];
        out_adj.v0.col(ch) = s * d_x0.col(ch);
        out_adj.v1.col(ch) = s * d_x1.col(ch);
        out_adj.v2.col(ch) = s * d_x2.col(ch);
    }
    if (ctx.hyst) {
        const double s = problem.output_scales[n];
        out_adj.v0.col(n) = s * d_r0;
        out_adj.v1.col(n).setZero();
        out_adj.v2.col(n).setZero();
    }

    auto xi_grads = neural::ParamGrads::zeros_like(trainables.xi);
    neural::backprop(trainables.xi, stash, out_adj, 2, xi_grads);

    // Force-path gradients.
    Eigen::VectorXd d_phi = Eigen::VectorXd::Zero(trainables.phi.size());
    double d_amplitude = 0.0;
    std::optional<neural::ParamGrads> force_grads;
    if (problem.mode == Mode::SapinnTrainedPhase) {
        d_amplitude = problem.family->accumulate_gradients(
            trainables.phi, trainables.amplitude.value_or(1.0), d_force, d_phi);
    } else if (problem.mode == Mode::PinnUnknownForce) {
        neural::ForwardStash fstash;
        neural::forward_jet(*trainables.force_net, problem.obs->times, problem.time_scaling, 0,
                            &fstash);
        neural::JetBatch fadj;
        fadj.v0 = problem.force_scale * d_force;
        force_grads = neural::ParamGrads::zeros_like(*trainables.force_net);
        neural::backprop(*trainables.force_net, fstash, fadj, 0, *force_grads);
    }

    // Pack in the trainable layout.
    std::vector<Eigen::VectorXd> parts;
    parts.push_back(neural::pack(xi_grads));
    if (problem.mode == Mode::PinnUnknownForce) parts.push_back(neural::pack(*force_grads));
    parts.push_back(d_theta_raw);
    if (problem.mode == Mode::SapinnTrainedPhase) parts.push_back(d_phi);
    if (problem.mode == Mode::SapinnTrainedPhase && trainables.amplitude)
        parts.push_back(Eigen::VectorXd::Constant(1, d_amplitude * problem.amplitude_scale));
    Eigen::Index total = 0;
    for (const auto& p : parts) total += p.size();
    grad.resize(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        grad.segment(at, p.size()) = p;
        at += p.size();
    }
    return loss;
}

TrainableSet init_trainables(const InitConfig& config, Rng& rng) {
    TrainableSet t;
    std::vector<int> sizes{1};
    for (int h : config.hidden_layers) sizes.push_back(h);
    sizes.push_back(config.n_outputs);
    t.xi = neural::init_network(sizes, config.omega0, rng);
    if (config.with_force_net) {
        std::vector<int> fsizes{1};
        const auto& hidden = config.force_hidden.empty() ? config.hidden_layers
                                                         : config.force_hidden;
        for (int h : hidden) fsizes.push_back(h);
        fsizes.push_back(1);
        t.force_net = neural::init_network(fsizes, config.omega0, rng);
    }
    t.theta_raw = Eigen::VectorXd::Constant(config.n_theta,
                                            TrainableSet::softplus_inv(config.theta_init));
    t.phi.resize(config.n_phases);
    for (Eigen::Index i = 0; i < config.n_phases; ++i)
        t.phi[i] = rng.uniform(0.0, excitation::kTwoPi);
    if (config.with_amplitude) t.amplitude = config.amplitude_init;
    return t;
}

TrainResult train(const Problem& problem, const TrainConfig& config, TrainableSet initial,
                  const neural::AdamState* resume_adam, long start_iteration) {
    problem.validate();
    TrainResult result;
    result.final = std::move(initial);
    result.best = result.final;

    Eigen::VectorXd x = pack_trainables(problem, result.final);
    result.adam = resume_adam ? *resume_adam
                              : neural::AdamState::zeros(x.size(), config.learning_rate);
    if (result.adam.m.size() != x.size())
        throw DimensionError("train: restored optimizer state does not match trainables");
    Eigen::VectorXd grad;

    auto record = [&](long it, const LossBreakdown& loss) {
        LogRow row;
        row.iteration = it;
        row.loss = loss;
        row.theta = result.final.theta();
        row.phi_norm = result.final.phi.size() ? result.final.phi.norm() : 0.0;
        result.history.push_back(std::move(row));
    };

    result.best_loss = evaluate_loss(problem, result.final);
    for (long it = start_iteration; it < config.iterations; ++it) {
        const LossBreakdown loss = loss_and_gradient(problem, result.final, grad);
        if (!std::isfinite(loss.total) || !grad.allFinite()) {
            result.diverged = true;
            result.diverged_at = it;
            record(it, loss);
            return result;
        }
        if (loss.total < result.best_loss.total || it == start_iteration) {
            result.best_loss = loss;
            result.best = result.final;
        }
        if (it % config.log_every == 0) record(it, loss);
        neural::adam_step(result.adam, x, grad);
        unpack_trainables(problem, x, result.final);
        result.iterations_run = it + 1 - start_iteration;
    }
    const LossBreakdown final_loss = evaluate_loss(problem, result.final);
    if (std::isfinite(final_loss.total) && final_loss.total < result.best_loss.total) {
        result.best_loss = final_loss;
        result.best = result.final;
    }
    record(config.iterations, final_loss);
    return result;
}

Prediction predict(const Problem& problem, const TrainableSet& fitted,
                   const Eigen::VectorXd& times) {
    Prediction pred;
    pred.times = times;
    const int n = problem.assumed.ndof();
    const auto jets =
        neural::forward_jet(fitted.xi, times, problem.time_scaling, 1, nullptr);
    const auto& s = problem.output_scales;
    pred.displacement = jets.v0.leftCols(n) * s.head(n).asDiagonal();
    pred.velocity = jets.v1.leftCols(n) * s.head(n).asDiagonal();
    if (problem.hysteretic()) {
        pred.restoring = jets.v0.col(n) * s[n];
        pred.restoring_rate = jets.v1.col(n) * s[n];
    }
    switch (problem.mode) {
        case Mode::PinnKnownForce:
            if (times.size() == problem.obs->times.size() &&
                times.isApprox(problem.obs->times))
                pred.force = problem.known_force;
            else
                throw ConfigError("predict: known-force mode needs the observation grid");
            break;
        case Mode::PinnUnknownForce:
            pred.force = problem.force_scale *
                         neural::forward(*fitted.force_net, times, problem.time_scaling).col(0);
            break;
        case Mode::SapinnRandomPhase:
        case Mode::SapinnTrainedPhase: {
            const auto fn =
                problem.family->continuous(fitted.phi, fitted.amplitude.value_or(1.0));
            pred.force.resize(times.size());
            for (Eigen::Index k = 0; k < times.size(); ++k) pred.force[k] = fn(times[k]);
            break;
        }
    }
    return pred;
}

void export_history_csv(const std::vector<LogRow>& history, const std::string& path) {
    const Eigen::Index rows = static_cast<Eigen::Index>(history.size());
    const Eigen::Index n_theta = rows ? history.front().theta.size() : 0;
    std::vector<std::string> header{"iteration", "total", "spectrum_physics", "data", "boundary"};
    for (Eigen::Index p = 0; p < n_theta; ++p) header.push_back("theta" + std::to_string(p + 1));
    header.push_back("phi_norm");
    std::vector<Eigen::VectorXd> cols(header.size(), Eigen::VectorXd(rows));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = history[r];
        cols[0][r] = static_cast<double>(row.iteration);
        cols[1][r] = row.loss.total;
        cols[2][r] = row.loss.spectrum_physics;
        cols[3][r] = row.loss.data;
        cols[4][r] = row.loss.boundary;
        for (Eigen::Index p = 0; p < n_theta; ++p) cols[5 + p][r] = row.theta[p];
        cols.back()[r] = row.phi_norm;
    }
    csv::write_columns(path, header, cols);
}

namespace {

void write_vector(std::ostream& out, const std::string& tag, const Eigen::VectorXd& v) {
    out << tag << " " << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) out << " " << csv::format(v[i]);
    out << "\n";
}

Eigen::VectorXd read_vector(std::istream& in, const std::string& expect_tag) {
    std::string tag;
    Eigen::Index count;
    if (!(in >> tag >> count) || tag != expect_tag)
        throw IoError("checkpoint: expected field " + expect_tag);
    Eigen::VectorXd v(count);
    for (Eigen::Index i = 0; i < count; ++i)
        if (!(in >> v[i])) throw IoError("checkpoint: truncated field " + expect_tag);
    return v;
}

void write_network(std::ostream& out, const std::string& prefix,
                   const neural::NetworkParams& net) {
    out << prefix << "_layers " << net.layer_sizes.size();
    for (int s : net.layer_sizes) out << " " << s;
    out << "\n";
    out << prefix << "_omega0 " << csv::format(net.omega0) << "\n";
    write_vector(out, prefix + "_values", neural::pack(net));
}

neural::NetworkParams read_network(std::istream& in, const std::string& prefix) {
    std::string tag;
    std::size_t count;
    if (!(in >> tag >> count) || tag != prefix + "_layers")
        throw IoError("checkpoint: expected field " + prefix + "_layers");
    std::vector<int> sizes(count);
    for (auto& s : sizes)
        if (!(in >> s)) throw IoError("checkpoint: truncated layer sizes");
    double omega0;
    if (!(in >> tag >> omega0) || tag != prefix + "_omega0")
        throw IoError("checkpoint: expected field " + prefix + "_omega0");
    neural::NetworkParams net;
    net.layer_sizes = sizes;
    net.omega0 = omega0;
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        net.weights.emplace_back(Eigen::MatrixXd::Zero(sizes[l + 1], sizes[l]));
        net.biases.emplace_back(Eigen::VectorXd::Zero(sizes[l + 1]));
    }
    neural::unpack(read_vector(in, prefix + "_values"), net);
    return net;
}

} // namespace

void save_checkpoint(const std::string& path, const TrainableSet& trainables,
                     const neural::AdamState& adam, std::uint64_t rng_seed,
                     std::uint64_t rng_draws, long iteration) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("checkpoint: cannot open for writing: " + path);
    out << "sapinn_checkpoint 1\n";
    out << "iteration " << iteration << "\n";
    out << "rng_seed " << rng_seed << "\n";
    out << "rng_draws " << rng_draws << "\n";
    write_network(out, "xi", trainables.xi);
    out << "has_force_net " << (trainables.force_net ? 1 : 0) << "\n";
    if (trainables.force_net) write_network(out, "force_net", *trainables.force_net);
    write_vector(out, "theta_raw", trainables.theta_raw);
    write_vector(out, "phi", trainables.phi);
    out << "has_amplitude " << (trainables.amplitude ? 1 : 0) << "\n";
    if (trainables.amplitude) out << "amplitude " << csv::format(*trainables.amplitude) << "\n";
    out << "adam_step " << adam.step << "\n";
    out << "adam_lr " << csv::format(adam.lr) << "\n";
    out << "adam_beta1 " << csv::format(adam.beta1) << "\n";
    out << "adam_beta2 " << csv::format(adam.beta2) << "\n";
    out << "adam_eps " << csv::format(adam.eps) << "\n";
    write_vector(out, "adam_m", adam.m);
    write_vector(out, "adam_v", adam.v);
    if (!out) throw IoError("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open: " + path);
    std::string tag;
    int version;
    if (!(in >> tag >> version) || tag != "sapinn_checkpoint")
        throw IoError("checkpoint: bad header in " + path);
    if (version != 1) throw IoError("checkpoint: unsupported version");
    Checkpoint cp;
    auto expect_scalar = [&](const std::string& name, auto& value) {
        std::string t;
        if (!(in >> t >> value) || t != name)
            throw IoError("checkpoint: expected field " + name);
    };
    expect_scalar("iteration", cp.iteration);
    expect_scalar("rng_seed", cp.rng_seed);
    expect_scalar("rng_draws", cp.rng_draws);
    cp.trainables.xi = read_network(in, "xi");
    int has_force = 0;
    expect_scalar("has_force_net", has_force);
    if (has_force) cp.trainables.force_net = read_network(in, "force_net");
    cp.trainables.theta_raw = read_vector(in, "theta_raw");
    cp.trainables.phi = read_vector(in, "phi");
    int has_amp = 0;
    expect_scalar("has_amplitude", has_amp);
    if (has_amp) {
        double a;
        expect_scalar("amplitude", a);
        cp.trainables.amplitude = a;
    }
    expect_scalar("adam_step", cp.adam.step);
    expect_scalar("adam_lr", cp.adam.lr);
    expect_scalar("adam_beta1", cp.adam.beta1);
    expect_scalar("adam_beta2", cp.adam.beta2);
    expect_scalar("adam_eps", cp.adam.eps);
    cp.adam.m = read_vector(in, "adam_m");
    cp.adam.v = read_vector(in, "adam_v");
    return cp;
}

} // namespace sapinn::estimators

#include "sapinn/neural.hpp"

#include "sapinn/errors.hpp"
#include "sapinn/simd_math.hpp"

#include <cmath>

namespace sapinn::neural {

Eigen::Index NetworkParams::parameter_count() const {
    Eigen::Index n = 0;
    for (int l = 0; l < n_layers(); ++l) n += weights[l].size() + biases[l].size();
    return n;
}

void NetworkParams::validate() const {
    if (layer_sizes.size() < 2) throw ConfigError("NetworkParams: need at least in/out layers");
    if (weights.size() + 1 != layer_sizes.size() || biases.size() != weights.size())
        throw DimensionError("NetworkParams: layer count mismatch");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l])
            throw DimensionError("NetworkParams: weight shape mismatch at layer " +
                                 std::to_string(l));
        if (biases[l].size() != layer_sizes[l + 1])
            throw DimensionError("NetworkParams: bias shape mismatch at layer " +
                                 std::to_string(l));
        if (!weights[l].allFinite() || !biases[l].allFinite())
            throw NumericError("NetworkParams: non-finite parameter");
    }
}

NetworkParams init_network(const std::vector<int>& layer_sizes, double omega0, Rng& rng) {
    if (layer_sizes.size() < 2) throw ConfigError("init_network: need at least in/out layers");
    NetworkParams p;
    p.layer_sizes = layer_sizes;
    p.omega0 = omega0;
    const int n_layers = static_cast<int>(layer_sizes.size()) - 1;
    constexpr double kPi = 3.14159265358979323846;
    for (int l = 0; l < n_layers; ++l) {
        const int fan_in = layer_sizes[l];
        const int fan_out = layer_sizes[l + 1];
        const double w_bound = l == 0 ? omega0 / fan_in : std::sqrt(6.0 / fan_in);
        const double b_bound = l == 0 ? kPi : 1.0 / std::sqrt(static_cast<double>(fan_in));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rng.uniform(-w_bound, w_bound);
        Eigen::VectorXd b(fan_out);
        for (int r = 0; r < fan_out; ++r) b[r] = rng.uniform(-b_bound, b_bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    p.validate();
    return p;
}

TimeScaling TimeScaling::from_window(double t0, double t1) {
    if (!(t1 > t0)) throw ConfigError("TimeScaling: empty window");
    TimeScaling ts;
    ts.alpha = 2.0 / (t1 - t0);
    ts.beta = -(t1 + t0) / (t1 - t0);
    return ts;
}

namespace {

// One hidden-layer activation: fills post-activation jets and the stash.
void sine_layer(Eigen::MatrixXd&& u0, Eigen::MatrixXd&& u1, Eigen::MatrixXd&& u2, int order,
                JetBatch& h, LayerStash* stash) {
    Eigen::MatrixXd s(u0.rows(), u0.cols());
    Eigen::MatrixXd c(u0.rows(), u0.cols());
    simd::sincos_array(u0.data(), s.data(), c.data(), static_cast<std::size_t>(u0.size()));
    if (order >= 1) h.v1 = c.cwiseProduct(u1);
    if (order >= 2)
        h.v2 = c.cwiseProduct(u2) - s.cwiseProduct(u1.cwiseProduct(u1));
    if (stash) {
        h.v0 = s;
        stash->h0 = std::move(s);
        stash->c0 = std::move(c);
        if (order >= 1) stash->u1 = std::move(u1);
        if (order >= 2) stash->u2 = std::move(u2);
    } else {
        h.v0 = std::move(s);
    }
}

} // namespace

JetBatch forward_jet(const NetworkParams& params, const Eigen::VectorXd& times,
                     const TimeScaling& scaling, int order, ForwardStash* stash) {
    if (order < 0 || order > 2) throw ConfigError("forward_jet: order must be 0, 1 or 2");
    if (params.n_in() != 1) throw DimensionError("forward_jet: scalar time input expected");
    if (!times.allFinite()) throw NumericError("forward_jet: non-finite time");
    const Eigen::Index batch = times.size();
    const int n_layers = params.n_layers();

    JetBatch h;
    h.v0 = (scaling.alpha * times.array() + scaling.beta).matrix();
    if (order >= 1) h.v1 = Eigen::MatrixXd::Constant(batch, 1, scaling.alpha);
    if (order >= 2) h.v2 = Eigen::MatrixXd::Zero(batch, 1);
    if (stash) {
        stash->input = h;
        stash->layers.assign(n_layers - 1, {});
    }

    for (int l = 0; l < n_layers; ++l) {
        const auto& w = params.weights[l];
        const auto& b = params.biases[l];
        Eigen::MatrixXd u0 = h.v0 * w.transpose();
        u0.rowwise() += b.transpose();
        Eigen::MatrixXd u1, u2;
        if (order >= 1) u1.noalias() = h.v1 * w.transpose();
        if (order >= 2) u2.noalias() = h.v2 * w.transpose();
        if (l + 1 < n_layers) {
            sine_layer(std::move(u0), std::move(u1), std::move(u2), order, h,
                       stash ? &stash->layers[l] : nullptr);
        } else {
            h.v0 = std::move(u0);
            if (order >= 1) h.v1 = std::move(u1);
            if (order >= 2) h.v2 = std::move(u2);
        }
        if (stash && l + 2 == n_layers) stash->last_hidden = h;
    }
    return h;
}

Eigen::MatrixXd forward(const NetworkParams& params, const Eigen::VectorXd& times,
                        const TimeScaling& scaling) {
    return forward_jet(params, times, scaling, 0, nullptr).v0;
}

JetBatch forward_with_tangent(const NetworkParams& params, const Eigen::VectorXd& times,
                              const TimeScaling& scaling) {
    return forward_jet(params, times, scaling, 1, nullptr);
}

ParamGrads ParamGrads::zeros_like(const NetworkParams& params) {
    ParamGrads g;
    for (int l = 0; l < params.n_layers(); ++l) {
        g.d_weights.emplace_back(
            Eigen::MatrixXd::Zero(params.weights[l].rows(), params.weights[l].cols()));
        g.d_biases.emplace_back(Eigen::VectorXd::Zero(params.biases[l].size()));
    }
    return g;
}

void ParamGrads::add_scaled(const ParamGrads& other, double scale) {
    for (std::size_t l = 0; l < d_weights.size(); ++l) {
        d_weights[l] += scale * other.d_weights[l];
        d_biases[l] += scale * other.d_biases[l];
    }
}

void backprop(const NetworkParams& params, const ForwardStash& stash,
              const JetBatch& out_adjoint, int order, ParamGrads& grads) {
    const int n_layers = params.n_layers();
    if (static_cast<int>(stash.layers.size()) != n_layers - 1)
        throw DimensionError("backprop: stash does not match network depth");

    // Post-activation jets of layer l-1 (inputs of layer l), recomputed from
    // the stash where needed.
    auto layer_inputs = [&](int l, Eigen::MatrixXd& h0, Eigen::MatrixXd& h1, Eigen::MatrixXd& h2) {
        if (l == 0) {
            h0 = stash.input.v0;
            if (order >= 1) h1 = stash.input.v1;
            if (order >= 2) h2 = stash.input.v2;
        } else {
            const LayerStash& s = stash.layers[l - 1];
            h0 = s.h0;
            if (order >= 1) h1 = s.c0.cwiseProduct(s.u1);
            if (order >= 2)
                h2 = s.c0.cwiseProduct(s.u2) - s.h0.cwiseProduct(s.u1.cwiseProduct(s.u1));
        }
    };

    Eigen::MatrixXd g0 = out_adjoint.v0;
    Eigen::MatrixXd g1 = out_adjoint.v1;
    Eigen::MatrixXd g2 = out_adjoint.v2;

    for (int l = n_layers - 1; l >= 0; --l) {
        Eigen::MatrixXd u_bar0, u_bar1, u_bar2;
        if (l == n_layers - 1) {
            // Affine output layer: pre-activation adjoints equal the incoming ones.
            u_bar0 = std::move(g0);
            if (order >= 1) u_bar1 = std::move(g1);
            if (order >= 2) u_bar2 = std::move(g2);
        } else {
            const LayerStash& s = stash.layers[l];
            u_bar0 = g0.cwiseProduct(s.c0);
            if (order >= 1) {
                u_bar0 -= g1.cwiseProduct(s.h0.cwiseProduct(s.u1));
                u_bar1 = g1.cwiseProduct(s.c0);
            }
            if (order >= 2) {
                u_bar0 -= g2.cwiseProduct(s.h0.cwiseProduct(s.u2) +
                                          s.c0.cwiseProduct(s.u1.cwiseProduct(s.u1)));
                u_bar1 -= 2.0 * g2.cwiseProduct(s.h0.cwiseProduct(s.u1));
                u_bar2 = g2.cwiseProduct(s.c0);
            }
        }

        Eigen::MatrixXd h0, h1, h2;
        layer_inputs(l, h0, h1, h2);
        grads.d_weights[l].noalias() += u_bar0.transpose() * h0;
        if (order >= 1) grads.d_weights[l].noalias() += u_bar1.transpose() * h1;
        if (order >= 2) grads.d_weights[l].noalias() += u_bar2.transpose() * h2;
        grads.d_biases[l] += u_bar0.colwise().sum().transpose();

        if (l > 0) {
            g0.noalias() = u_bar0 * params.weights[l];
            if (order >= 1) g1.noalias() = u_bar1 * params.weights[l];
            if (order >= 2) g2.noalias() = u_bar2 * params.weights[l];
        }
    }
}

Eigen::VectorXd pack(const NetworkParams& params) {
    Eigen::VectorXd flat(params.parameter_count());
    Eigen::Index at = 0;
    for (int l = 0; l < params.n_layers(); ++l) {
        const auto& w = params.weights[l];
        flat.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        at += w.size();
        flat.segment(at, params.biases[l].size()) = params.biases[l];
        at += params.biases[l].size();
    }
    return flat;
}

void unpack(const Eigen::VectorXd& flat, NetworkParams& params) {
    if (flat.size() != params.parameter_count())
        throw DimensionError("unpack: flat vector size mismatch");
    Eigen::Index at = 0;
    for (int l = 0; l < params.n_layers(); ++l) {
        auto& w = params.weights[l];
        Eigen::Map<Eigen::VectorXd>(w.data(), w.size()) = flat.segment(at, w.size());
        at += w.size();
        params.biases[l] = flat.segment(at, params.biases[l].size());
        at += params.biases[l].size();
    }
}

Eigen::VectorXd pack(const ParamGrads& grads) {
    Eigen::Index total = 0;
    for (std::size_t l = 0; l < grads.d_weights.size(); ++l)
        total += grads.d_weights[l].size() + grads.d_biases[l].size();
    Eigen::VectorXd flat(total);
    Eigen::Index at = 0;
    for (std::size_t l = 0; l < grads.d_weights.size(); ++l) {
        const auto& w = grads.d_weights[l];
        flat.segment(at, w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
        at += w.size();
        flat.segment(at, grads.d_biases[l].size()) = grads.d_biases[l];
        at += grads.d_biases[l].size();
    }
    return flat;
}

AdamState AdamState::zeros(Eigen::Index n, double lr) {
    AdamState s;
    s.m = Eigen::VectorXd::Zero(n);
    s.v = Eigen::VectorXd::Zero(n);
    s.lr = lr;
    return s;
}

void adam_step(AdamState& state, Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
    if (x.size() != state.m.size() || grad.size() != state.m.size())
        throw DimensionError("adam_step: size mismatch");
    state.step += 1;
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    x.array() -= state.lr * (state.m.array() / bc1) /
                 ((state.v.array() / bc2).sqrt() + state.eps);
}

} // namespace sapinn::neural

// Sine-activation MLPs over a scalar time input. The forward pass carries
// truncated Taylor jets (value, d/dt, d2/dt2) so losses can use exact
// velocities and accelerations of the outputs; the reverse pass accumulates
// gradients of a scalar loss through all three jet lanes. Fixed architecture
// family: hidden layers sin(W h + b), affine output layer.
#pragma once

#include "sapinn/rng.hpp"

#include <Eigen/Core>
#include <vector>

namespace sapinn::neural {

struct NetworkParams {
    std::vector<int> layer_sizes;         // [n_in, hidden..., n_out]
    std::vector<Eigen::MatrixXd> weights; // weights[l]: (sizes[l+1] x sizes[l])
    std::vector<Eigen::VectorXd> biases;  // biases[l]: sizes[l+1]
    double omega0 = 30.0;                 // first-layer frequency scale, folded at init

    int n_layers() const { return static_cast<int>(weights.size()); }
    int n_in() const { return layer_sizes.front(); }
    int n_out() const { return layer_sizes.back(); }
    Eigen::Index parameter_count() const;
    void validate() const;
};

/// Sine-network initialization: first layer uniform(-w0/fan_in, w0/fan_in),
/// deeper layers uniform(-sqrt(6/fan_in), sqrt(6/fan_in)).
NetworkParams init_network(const std::vector<int>& layer_sizes, double omega0, Rng& rng);

/// Affine map applied to raw times before the first layer; alpha carries the
/// chain-rule factor for all time derivatives.
struct TimeScaling {
    double alpha = 1.0;
    double beta = 0.0;

    static TimeScaling from_window(double t0, double t1);
    double operator()(double t) const { return alpha * t + beta; }
};

/// Batched jets: row k of each lane corresponds to time sample k.
/// v1/v2 are empty below the order they were computed at.
struct JetBatch {
    Eigen::MatrixXd v0, v1, v2;
};

/// Per-layer forward records kept for the reverse pass.
struct LayerStash {
    Eigen::MatrixXd h0;  // sin(u0), the post-activation values
    Eigen::MatrixXd c0;  // cos(u0)
    Eigen::MatrixXd u1;  // first-derivative pre-activation lane
    Eigen::MatrixXd u2;  // second-derivative pre-activation lane
};

struct ForwardStash {
    JetBatch input;
    std::vector<LayerStash> layers; // one per hidden layer
    JetBatch last_hidden;           // post-activation jets feeding the output layer
};

/// Forward evaluation carrying jets up to `order` (0, 1 or 2) of d/dt.
/// `stash` may be null when no backward pass will follow.
JetBatch forward_jet(const NetworkParams& params, const Eigen::VectorXd& times,
                     const TimeScaling& scaling, int order, ForwardStash* stash);

/// Values only (the v0 lane of forward_jet).
Eigen::MatrixXd forward(const NetworkParams& params, const Eigen::VectorXd& times,
                        const TimeScaling& scaling);

/// Values and exact d/dt of every output.
JetBatch forward_with_tangent(const NetworkParams& params, const Eigen::VectorXd& times,
                              const TimeScaling& scaling);

struct ParamGrads {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;

    static ParamGrads zeros_like(const NetworkParams& params);
    void add_scaled(const ParamGrads& other, double scale);
};

/// Reverse pass: out_adjoint lanes hold dL/d(output jet lanes); gradients are
/// accumulated into `grads`. `order` must match the forward call.
void backprop(const NetworkParams& params, const ForwardStash& stash,
              const JetBatch& out_adjoint, int order, ParamGrads& grads);

/// Flat views used by the optimizer and checkpointing.
Eigen::VectorXd pack(const NetworkParams& params);
void unpack(const Eigen::VectorXd& flat, NetworkParams& params);
Eigen::VectorXd pack(const ParamGrads& grads);

/// Adam with bias correction over a flat parameter vector.
struct AdamState {
    Eigen::VectorXd m, v;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    static AdamState zeros(Eigen::Index n, double lr = 1e-3);
};

void adam_step(AdamState& state, Eigen::VectorXd& x, const Eigen::VectorXd& grad);

} // namespace sapinn::neural

#include "sapinn/families.hpp"

#include "sapinn/errors.hpp"
#include "sapinn/simd_math.hpp"

#include <cmath>

namespace sapinn::families {

SrmTables::SrmTables(const excitation::SpectrumModel& spectrum, const Eigen::VectorXd& times_in)
    : times(times_in), omega(spectrum.grid().omega()), amps(spectrum.amplitudes()) {
    const Eigen::Index n = times.size();
    const Eigen::Index m = omega.size();
    cos_wt.resize(n, m);
    sin_wt.resize(n, m);
    Eigen::VectorXd arg(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        arg = omega[i] * times;
        simd::sincos_array(arg.data(), sin_wt.col(i).data(), cos_wt.col(i).data(),
                           static_cast<std::size_t>(n));
    }
}

Eigen::VectorXd SrmTables::realize(const Eigen::VectorXd& phi) const {
    if (phi.size() != omega.size()) throw DimensionError("SrmTables: phase count mismatch");
    const Eigen::VectorXd ac = amps.cwiseProduct(phi.array().cos().matrix());
    const Eigen::VectorXd as = amps.cwiseProduct(phi.array().sin().matrix());
    return cos_wt * ac - sin_wt * as;
}

void SrmTables::accumulate(const Eigen::VectorXd& phi, const Eigen::VectorXd& weights,
                           Eigen::VectorXd& phi_grad) const {
    // dp/dphi_i = -a_i sin(w_i t + phi_i)
    //           = -a_i (sin(w_i t) cos(phi_i) + cos(w_i t) sin(phi_i))
    const Eigen::VectorXd ws = sin_wt.transpose() * weights;
    const Eigen::VectorXd wc = cos_wt.transpose() * weights;
    phi_grad.array() -= amps.array() * (phi.array().cos() * ws.array() +
                                        phi.array().sin() * wc.array());
}

ModulatedSrmFamily::ModulatedSrmFamily(excitation::Envelope envelope,
                                       excitation::SpectrumModel spectrum,
                                       Eigen::VectorXd times, bool trainable_amplitude)
    : envelope_(envelope), spectrum_(std::move(spectrum)), tables_(spectrum_, times),
      trainable_amplitude_(trainable_amplitude) {
    envelope_.validate();
    h_ = excitation::envelope_eval(envelope_, times);
}

Eigen::VectorXd ModulatedSrmFamily::force(const Eigen::VectorXd& phi, double amplitude) const {
    const double a = trainable_amplitude_ ? amplitude : 1.0;
    return a * h_.cwiseProduct(tables_.realize(phi));
}

double ModulatedSrmFamily::accumulate_gradients(const Eigen::VectorXd& phi, double amplitude,
                                                const Eigen::VectorXd& weights,
                                                Eigen::VectorXd& phi_grad) const {
    const double a = trainable_amplitude_ ? amplitude : 1.0;
    const Eigen::VectorXd wh = weights.cwiseProduct(h_);
    Eigen::VectorXd scaled = Eigen::VectorXd::Zero(phi.size());
    tables_.accumulate(phi, wh, scaled);
    phi_grad += a * scaled;
    if (!trainable_amplitude_) return 0.0;
    return wh.dot(tables_.realize(phi));
}

dynamics::ExcitationFn ModulatedSrmFamily::continuous(const Eigen::VectorXd& phi,
                                                      double amplitude) const {
    const double a = trainable_amplitude_ ? amplitude : 1.0;
    const Eigen::VectorXd amps = tables_.amps;
    const Eigen::VectorXd omega = tables_.omega;
    const excitation::Envelope env = envelope_;
    const Eigen::VectorXd phases = phi;
    return [=](double t) {
        double p = 0.0;
        for (Eigen::Index i = 0; i < amps.size(); ++i)
            p += amps[i] * std::cos(omega[i] * t + phases[i]);
        return a * excitation::envelope_eval(env, t) * p;
    };
}

ThunderstormDragFamily::ThunderstormDragFamily(excitation::ThunderstormWindParams params,
                                               excitation::Envelope env_gamma,
                                               excitation::SpectrumModel spectrum,
                                               Eigen::VectorXd times)
    : params_(params), env_gamma_(env_gamma), spectrum_(std::move(spectrum)),
      tables_(spectrum_, times) {
    params_.validate();
    if (env_gamma_.kind != excitation::Envelope::Kind::Thunderstorm || env_gamma_.power != 1)
        throw ConfigError("ThunderstormDragFamily: envelope must be thunderstorm, power 1");
    gamma_ = excitation::envelope_eval(env_gamma_, times);
    gamma2_ = gamma_.cwiseProduct(gamma_);
    drag_q_ = 0.5 * params_.rho * params_.a_eff * params_.c_d;
}

Eigen::VectorXd ThunderstormDragFamily::force(const Eigen::VectorXd& phi, double) const {
    const Eigen::VectorXd p = tables_.realize(phi);
    const Eigen::ArrayXd v =
        params_.v_bar * gamma_.array() * (1.0 + params_.i_v * gamma2_.array() * p.array());
    return (drag_q_ * v.square()).matrix();
}

double ThunderstormDragFamily::accumulate_gradients(const Eigen::VectorXd& phi, double,
                                                    const Eigen::VectorXd& weights,
                                                    Eigen::VectorXd& phi_grad) const {
    const Eigen::VectorXd p = tables_.realize(phi);
    const Eigen::ArrayXd v =
        params_.v_bar * gamma_.array() * (1.0 + params_.i_v * gamma2_.array() * p.array());
    // dU/dp = 2 q v * v_bar gamma I_v gamma^2
    const Eigen::VectorXd chain =
        (2.0 * drag_q_ * params_.v_bar * params_.i_v) *
        (v * gamma_.array() * gamma2_.array()).matrix();
    const Eigen::VectorXd w = weights.cwiseProduct(chain);
    tables_.accumulate(phi, w, phi_grad);
    return 0.0;
}

dynamics::ExcitationFn ThunderstormDragFamily::continuous(const Eigen::VectorXd& phi,
                                                          double) const {
    const Eigen::VectorXd amps = tables_.amps;
    const Eigen::VectorXd omega = tables_.omega;
    const Eigen::VectorXd phases = phi;
    const excitation::Envelope env = env_gamma_;
    const excitation::ThunderstormWindParams params = params_;
    const double q = drag_q_;
    return [=](double t) {
        double p = 0.0;
        for (Eigen::Index i = 0; i < amps.size(); ++i)
            p += amps[i] * std::cos(omega[i] * t + phases[i]);
        const double g = excitation::envelope_eval(env, t);
        const double v = params.v_bar * g * (1.0 + params.i_v * g * g * p);
        return q * v * v;
    };
}

} // namespace sapinn::families

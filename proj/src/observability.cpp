#include "sapinn/observability.hpp"

#include "sapinn/errors.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <variant>

namespace sapinn::observability {

namespace {

// Scalar dual number; nesting Dual<Dual<...>> carries higher mixed partials.
template <class T>
struct Dual {
    T v{};
    T d{};

    Dual() = default;
    Dual(double value) requires(!std::is_same_v<T, double>) : v(value) {}
    Dual(const T& value) : v(value) {} // NOLINT: implicit lift of constants
    Dual(const T& value, const T& deriv) : v(value), d(deriv) {}
};

template <class T> Dual<T> operator+(const Dual<T>& a, const Dual<T>& b) {
    return {a.v + b.v, a.d + b.d};
}
template <class T> Dual<T> operator-(const Dual<T>& a, const Dual<T>& b) {
    return {a.v - b.v, a.d - b.d};
}
template <class T> Dual<T> operator-(const Dual<T>& a) { return {-a.v, -a.d}; }
template <class T> Dual<T> operator*(const Dual<T>& a, const Dual<T>& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d};
}
template <class T> Dual<T> operator*(double s, const Dual<T>& a) {
    return {T(s) * a.v, T(s) * a.d};
}
template <class T> Dual<T> operator+(double s, const Dual<T>& a) { return {T(s) + a.v, a.d}; }

using std::cos;
using std::sin;
template <class T> Dual<T> sin(const Dual<T>& a) { return {sin(a.v), cos(a.v) * a.d}; }
template <class T> Dual<T> cos(const Dual<T>& a) { return {cos(a.v), T(-1.0) * sin(a.v) * a.d}; }

template <class T> double value_of(const T& x) { return x; }
template <class T> double value_of(const Dual<T>& x) { return value_of(x.v); }

// ---------------------------------------------------------------------------
// Built-in augmented systems. States are ordered [x, xdot, params..., phases...];
// only the first two states have nonzero dynamics, which the Lie recursion
// exploits.

struct AppendixACase {
    // x'' = -x3 x' - x4 x + A cos(w0 t + x5); output y = x''.
    double amplitude = 1.0;
    double omega0 = 1.0;
    static constexpr int kDim = 5;
    int dim() const { return kDim; }
    int n_dynamic() const { return 2; }
    double slowest_omega() const { return omega0; }

    template <class T>
    T output(const std::vector<T>& z, double t) const {
        return -(z[2] * z[1]) - (z[3] * z[0]) + amplitude * cos(T(omega0 * t) + z[4]);
    }
    template <class T>
    void dynamics(const std::vector<T>& z, double t, std::vector<T>& f) const {
        f[0] = z[1];
        f[1] = output(z, t);
        for (int i = 2; i < kDim; ++i) f[i] = T(0.0);
    }
};

struct AppendixBCase {
    // x'' = -c x' - x3 x + x4 cos(w0 t + x5); output y = x''.
    double damping = 1.0;
    double omega0 = 1.0;
    static constexpr int kDim = 5;
    int dim() const { return kDim; }
    int n_dynamic() const { return 2; }
    double slowest_omega() const { return omega0; }

    template <class T>
    T output(const std::vector<T>& z, double t) const {
        return -(damping * z[1]) - (z[2] * z[0]) + z[3] * cos(T(omega0 * t) + z[4]);
    }
    template <class T>
    void dynamics(const std::vector<T>& z, double t, std::vector<T>& f) const {
        f[0] = z[1];
        f[1] = output(z, t);
        for (int i = 2; i < kDim; ++i) f[i] = T(0.0);
    }
};

struct MultiPhaseCase {
    // x'' = -x3 x' - x4 x + sum_i a_i cos(w_i t + x_{5+i}); output y = x''.
    Eigen::VectorXd amps;
    Eigen::VectorXd omegas;
    int dim() const { return 4 + static_cast<int>(amps.size()); }
    int n_dynamic() const { return 2; }
    double slowest_omega() const { return omegas.minCoeff(); }

    template <class T>
    T output(const std::vector<T>& z, double t) const {
        T acc = -(z[2] * z[1]) - (z[3] * z[0]);
        for (Eigen::Index i = 0; i < amps.size(); ++i)
            acc = acc + amps[i] * cos(T(omegas[i] * t) + z[4 + i]);
        return acc;
    }
    template <class T>
    void dynamics(const std::vector<T>& z, double t, std::vector<T>& f) const {
        f[0] = z[1];
        f[1] = output(z, t);
        for (int i = 2; i < dim(); ++i) f[i] = T(0.0);
    }
};

constexpr int kMaxLieDepth = 12;

// L^k g at z with scalar type T; time is a frozen parameter. Depth bounds the
// compile-time dual nesting; callers guarantee k < kMaxLieDepth.
template <int Depth, class T, class Sys>
T lie_value(const Sys& sys, int k, const std::vector<T>& z, double t) {
    if (k == 0) return sys.template output<T>(z, t);
    if constexpr (Depth == 0) {
        throw NumericError("lie_value: order exceeds the compiled nesting depth");
    } else {
        std::vector<T> f(z.size());
        sys.template dynamics<T>(z, t, f);
        T acc{};
        std::vector<Dual<T>> zd(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) zd[j] = Dual<T>(z[j]);
        for (int j = 0; j < sys.n_dynamic(); ++j) {
            zd[j].d = T(1.0);
            const Dual<T> lifted = lie_value<Depth - 1, Dual<T>>(sys, k - 1, zd, t);
            zd[j].d = T(0.0);
            acc = acc + lifted.d * f[j];
        }
        return acc;
    }
}

template <class Sys>
double lie_scalar(const Sys& sys, int k, const Eigen::VectorXd& z, double t) {
    if (k < 0 || k >= sys.dim())
        throw ConfigError("lie_derivative: order must lie in [0, dim-1]");
    if (z.size() != sys.dim()) throw DimensionError("lie_derivative: state size mismatch");
    std::vector<double> zs(z.data(), z.data() + z.size());
    return lie_value<kMaxLieDepth, double>(sys, k, zs, t);
}

template <class Sys>
Eigen::MatrixXd obs_matrix(const Sys& sys, const Eigen::VectorXd& z, double t) {
    const int l = sys.dim();
    if (z.size() != l) throw DimensionError("observability_matrix: state size mismatch");
    if (l > kMaxLieDepth)
        throw ConfigError("observability_matrix: augmented dimension exceeds compiled depth");
    Eigen::MatrixXd out(l, l);
    std::vector<Dual<double>> zd(static_cast<std::size_t>(l));
    for (int j = 0; j < l; ++j) zd[static_cast<std::size_t>(j)] = Dual<double>(z[j]);
    for (int j = 0; j < l; ++j) {
        zd[static_cast<std::size_t>(j)].d = 1.0;
        for (int k = 0; k < l; ++k)
            out(k, j) = lie_value<kMaxLieDepth, Dual<double>>(sys, k, zd, t).d;
        zd[static_cast<std::size_t>(j)].d = 0.0;
    }
    return out;
}

} // namespace

struct AugmentedSystem::Impl {
    std::variant<AppendixACase, AppendixBCase, MultiPhaseCase> sys;
};

AugmentedSystem::AugmentedSystem(Impl impl) : impl_(std::make_unique<Impl>(std::move(impl))) {}
AugmentedSystem::~AugmentedSystem() = default;
AugmentedSystem::AugmentedSystem(const AugmentedSystem& other)
    : impl_(std::make_unique<Impl>(*other.impl_)), labels_(other.labels_) {}
AugmentedSystem& AugmentedSystem::operator=(const AugmentedSystem& other) {
    impl_ = std::make_unique<Impl>(*other.impl_);
    labels_ = other.labels_;
    return *this;
}
AugmentedSystem::AugmentedSystem(AugmentedSystem&&) noexcept = default;
AugmentedSystem& AugmentedSystem::operator=(AugmentedSystem&&) noexcept = default;

AugmentedSystem AugmentedSystem::appendix_a(double amplitude, double omega0) {
    AugmentedSystem s(Impl{AppendixACase{amplitude, omega0}});
    s.labels_ = {"x", "xdot", "theta1", "theta2", "phi"};
    return s;
}

AugmentedSystem AugmentedSystem::appendix_b(double damping, double omega0) {
    AugmentedSystem s(Impl{AppendixBCase{damping, omega0}});
    s.labels_ = {"x", "xdot", "k", "amplitude", "phi"};
    return s;
}

AugmentedSystem AugmentedSystem::multi_phase(const Eigen::VectorXd& amplitudes,
                                             const Eigen::VectorXd& omegas) {
    if (amplitudes.size() != omegas.size() || amplitudes.size() == 0)
        throw ConfigError("multi_phase: amplitude/frequency lists must match and be non-empty");
    for (Eigen::Index i = 1; i < omegas.size(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (omegas[i] == omegas[j])
                throw ConfigError("multi_phase: frequencies must be distinct");
    if (4 + amplitudes.size() > kMaxLieDepth)
        throw ConfigError("multi_phase: too many tones for the compiled nesting depth");
    AugmentedSystem s(Impl{MultiPhaseCase{amplitudes, omegas}});
    s.labels_ = {"x", "xdot", "theta1", "theta2"};
    for (Eigen::Index i = 0; i < amplitudes.size(); ++i)
        s.labels_.push_back("phi" + std::to_string(i + 1));
    return s;
}

AugmentedSystem AugmentedSystem::multi_phase(int n_omega) {
    if (n_omega < 1) throw ConfigError("multi_phase: need at least one tone");
    Eigen::VectorXd amps = Eigen::VectorXd::Ones(n_omega);
    Eigen::VectorXd omegas(n_omega);
    for (int i = 0; i < n_omega; ++i) omegas[i] = i + 1.0;
    return multi_phase(amps, omegas);
}

int AugmentedSystem::dim() const {
    return std::visit([](const auto& s) { return s.dim(); }, impl_->sys);
}

double AugmentedSystem::slowest_omega() const {
    return std::visit([](const auto& s) { return s.slowest_omega(); }, impl_->sys);
}

double AugmentedSystem::output(const Eigen::VectorXd& z, double t) const {
    return lie_derivative(0, z, t);
}

Eigen::VectorXd AugmentedSystem::dynamics(const Eigen::VectorXd& z, double t) const {
    return std::visit(
        [&](const auto& s) {
            if (z.size() != s.dim()) throw DimensionError("dynamics: state size mismatch");
            std::vector<double> zs(z.data(), z.data() + z.size());
            std::vector<double> f(zs.size());
            s.dynamics(zs, t, f);
            return Eigen::Map<Eigen::VectorXd>(f.data(), static_cast<Eigen::Index>(f.size()))
                .eval();
        },
        impl_->sys);
}

double AugmentedSystem::lie_derivative(int k, const Eigen::VectorXd& z, double t) const {
    return std::visit([&](const auto& s) { return lie_scalar(s, k, z, t); }, impl_->sys);
}

Eigen::MatrixXd AugmentedSystem::observability_matrix(const Eigen::VectorXd& z, double t) const {
    return std::visit([&](const auto& s) { return obs_matrix(s, z, t); }, impl_->sys);
}

AugmentedSystem builtin_case(const std::string& name, int n_omega) {
    if (name == "appendix_a") return AugmentedSystem::appendix_a();
    if (name == "appendix_b") return AugmentedSystem::appendix_b();
    if (name == "multi_phase") return AugmentedSystem::multi_phase(n_omega);
    throw ConfigError("unknown observability case: " + name);
}

namespace {

int rank_of(const Eigen::VectorXd& singular_values, double tol, bool* all_zero = nullptr) {
    const double smax = singular_values.size() ? singular_values.maxCoeff() : 0.0;
    if (all_zero) *all_zero = smax == 0.0;
    if (smax == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < singular_values.size(); ++i)
        if (singular_values[i] > tol * smax) ++r;
    return r;
}

} // namespace

ObservabilityReport stacked_rank(const AugmentedSystem& sys, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& times, double tol) {
    if (times.size() < 2) throw ConfigError("stacked_rank: need at least two time samples");
    ObservabilityReport report;
    report.point = z;
    report.dim = sys.dim();
    report.tolerance = tol;
    Eigen::MatrixXd stacked(times.size() * sys.dim(), sys.dim());
    for (Eigen::Index i = 0; i < times.size(); ++i) {
        const Eigen::MatrixXd m = sys.observability_matrix(z, times[i]);
        stacked.middleRows(i * sys.dim(), sys.dim()) = m;
        PointAnalysis pa;
        pa.t = times[i];
        pa.singular_values = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
        pa.rank = rank_of(pa.singular_values, tol);
        report.per_time.push_back(std::move(pa));
    }
    report.stacked_singular_values =
        Eigen::JacobiSVD<Eigen::MatrixXd>(stacked).singularValues();
    report.stacked_rank = rank_of(report.stacked_singular_values, tol, &report.all_zero);
    return report;
}

Eigen::VectorXd default_time_samples(const AugmentedSystem& sys, int n) {
    const double period = 2.0 * 3.14159265358979323846 / sys.slowest_omega();
    Eigen::VectorXd times(n);
    for (int i = 0; i < n; ++i) times[i] = period * (i + 0.5) / n;
    return times;
}

std::string format_report(const ObservabilityReport& report) {
    std::ostringstream out;
    out << "observability report\n";
    out << "dimension " << report.dim << "\n";
    out << "tolerance " << report.tolerance << "\n";
    out << "evaluation point";
    for (Eigen::Index i = 0; i < report.point.size(); ++i) out << " " << report.point[i];
    out << "\n\nper-time analysis\n";
    for (const auto& pa : report.per_time) {
        out << "t " << pa.t << " rank " << pa.rank << " singular values";
        for (Eigen::Index i = 0; i < pa.singular_values.size(); ++i)
            out << " " << pa.singular_values[i];
        out << "\n";
    }
    out << "\nstacked singular values";
    for (Eigen::Index i = 0; i < report.stacked_singular_values.size(); ++i)
        out << " " << report.stacked_singular_values[i];
    out << "\nstacked rank " << report.stacked_rank << " of " << report.dim << "\n";
    if (report.all_zero) out << "warning: stacked matrix is identically zero\n";
    out << "locally observable over interval: "
        << (report.observable_over_interval() ? "yes" : "no") << "\n";
    return out.str();
}

void write_report(const ObservabilityReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_report: cannot open " + path);
    out << format_report(report);
    if (!out) throw IoError("write_report: write failed " + path);
}

} // namespace sapinn::observability

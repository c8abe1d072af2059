#pragma once

// Independent ground truth: the reservoir continuum is discretized into N
// oscillators and the (N+1)-dimensional quadratic form of one k mode is
// diagonalized exactly.  Every continuum quantity is then a finite sum over
// (eigenfrequency, squared system overlap) pairs.
//
// The quadratic form is the symmetric arrow matrix
//   V(0,0) = omega_k^2,  V(j,j) = omega_j^2,  V(0,j) = V(j,0) = -c_j
// with c_j = f(omega_j) sqrt(dw_j).  The arrow structure is exploited only
// for the cheap residual/interlacing validation; the decomposition itself
// uses a dense symmetric solver.

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdsf/coupling.hpp"
#include "qdsf/observables.hpp"

namespace qdsf::bath {

/// Thrown when the discretized quadratic form is not positive definite
/// (the discrete analog of a failing coupling-strength bound).
class InstabilityError : public std::runtime_error {
public:
    InstabilityError(const std::string& what, double min_eigenvalue)
        : std::runtime_error(what), min_eigenvalue(min_eigenvalue) {}
    double min_eigenvalue;
};

enum class Scheme { uniform, log };

template <class Scalar>
struct FiniteBath {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    CouplingSpec<Scalar> spec;
    Mode<Scalar> mode;  // may carry a FAIL-margin mode only via the raw fields
    Scalar omega_max{};
    Scheme scheme = Scheme::uniform;
    Vector bath_omega;  // w_j, ascending
    Vector coupling;    // c_j

    bool diagonalized = false;
    Vector eigen_omega;   // w~_n, ascending
    Vector overlap_sq;    // u_n^2, first eigenvector components squared
    Scalar max_residual{};  // max_n ||V x_n - lambda_n x_n|| / ||V||
};

/// Midpoint discretization on (0, omega_max]; the lowest frequency is the
/// half-cell omega_max/(2N) so no oscillator sits at w = 0.
template <class Scalar>
FiniteBath<Scalar> discretize(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode, long n,
                              Scalar omega_max = Scalar(0), Scheme scheme = Scheme::uniform) {
    if (n < 2) throw std::domain_error("discretize: need N >= 2");
    if (omega_max <= Scalar(0)) omega_max = Scalar(20) * spec.cutoff;
    FiniteBath<Scalar> b{spec, mode};
    b.omega_max = omega_max;
    b.scheme = scheme;
    b.bath_omega.resize(n);
    b.coupling.resize(n);
    if (scheme == Scheme::uniform) {
        const Scalar d = omega_max / Scalar(n);
        for (long j = 0; j < n; ++j) {
            b.bath_omega[j] = (Scalar(j) + Scalar(0.5)) * d;
            b.coupling[j] = eval_f(spec, b.bath_omega[j]) * std::sqrt(d);
        }
    } else {
        const Scalar lo = omega_max / (Scalar(2) * Scalar(n));
        Scalar prev = lo;
        for (long j = 0; j < n; ++j) {
            const Scalar next = lo * std::pow(omega_max / lo, Scalar(j + 1) / Scalar(n));
            b.bath_omega[j] = std::sqrt(prev * next);
            b.coupling[j] = eval_f(spec, b.bath_omega[j]) * std::sqrt(next - prev);
            prev = next;
        }
    }
    return b;
}

/// Dense symmetric eigendecomposition of the arrow matrix; fills the
/// eigenfrequencies and system overlaps and the worst eigenpair residual.
template <class Scalar>
FiniteBath<Scalar> diagonalize(FiniteBath<Scalar> b) {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const long n = b.bath_omega.size();
    Matrix v = Matrix::Zero(n + 1, n + 1);
    v(0, 0) = b.mode.omega_k * b.mode.omega_k;
    for (long j = 0; j < n; ++j) {
        v(j + 1, j + 1) = b.bath_omega[j] * b.bath_omega[j];
        v(0, j + 1) = v(j + 1, 0) = -b.coupling[j];
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(v);
    if (es.info() != Eigen::Success) throw std::runtime_error("diagonalize: eigensolver failed");
    const auto& lam = es.eigenvalues();
    if (lam(0) <= Scalar(0))
        throw InstabilityError("diagonalize: non-positive normal-mode frequency squared "
                               "(coupling beyond the stability bound)",
                               double(lam(0)));
    b.eigen_omega.resize(n + 1);
    b.overlap_sq.resize(n + 1);
    const Scalar vnorm = std::max(std::abs(lam(0)), std::abs(lam(n)));
    Scalar worst = 0;
    for (long i = 0; i <= n; ++i) {
        b.eigen_omega[i] = std::sqrt(lam(i));
        const Scalar u = es.eigenvectors()(0, i);
        b.overlap_sq[i] = u * u;
        // arrow structure makes V*x an O(N) product
        const auto& x = es.eigenvectors().col(i);
        Scalar r0 = v(0, 0) * x(0);
        for (long j = 1; j <= n; ++j) r0 += v(0, j) * x(j);
        Scalar res = (r0 - lam(i) * x(0)) * (r0 - lam(i) * x(0));
        for (long j = 1; j <= n; ++j) {
            const Scalar rj = v(j, 0) * x(0) + v(j, j) * x(j) - lam(i) * x(j);
            res += rj * rj;
        }
        worst = std::max(worst, std::sqrt(res) / vnorm);
    }
    b.max_residual = worst;
    b.diagonalized = true;
    return b;
}

/// Cauchy interlacing of the normal modes with the bath frequencies:
/// lam_0 <= w_1^2 <= lam_1 <= ... <= w_N^2 <= lam_N (within tol).
template <class Scalar>
bool interlaces(const FiniteBath<Scalar>& b, Scalar tol_rel = Scalar(1e-12)) {
    if (!b.diagonalized) throw std::logic_error("interlaces: bath not diagonalized");
    const long n = b.bath_omega.size();
    for (long j = 0; j < n; ++j) {
        const Scalar w2 = b.bath_omega[j] * b.bath_omega[j];
        const Scalar slack = tol_rel * (w2 + Scalar(1));
        const Scalar lo = b.eigen_omega[j] * b.eigen_omega[j];
        const Scalar hi = b.eigen_omega[j + 1] * b.eigen_omega[j + 1];
        if (!(lo <= w2 + slack && w2 <= hi + slack)) return false;
    }
    return true;
}

template <class Scalar>
struct DiscreteObservables {
    Scalar sum_overlap{};  // discrete sum rule, = 1 up to roundoff
    Scalar var_phi{}, var_pi{};
    Scalar occupation{};
};

template <class Scalar>
DiscreteObservables<Scalar> oracle_stats(const FiniteBath<Scalar>& b, Scalar temperature = Scalar(0)) {
    if (!b.diagonalized) throw std::logic_error("oracle_stats: bath not diagonalized");
    if (temperature < Scalar(0)) throw std::domain_error("oracle_stats: T must be >= 0");
    DiscreteObservables<Scalar> s;
    for (long i = 0; i < b.eigen_omega.size(); ++i) {
        const Scalar w = b.eigen_omega[i], u2 = b.overlap_sq[i];
        const Scalar f = 2 * observables::bose_occupation(w, temperature) + 1;
        s.sum_overlap += u2;
        s.var_phi += u2 * f / (2 * w);
        s.var_pi += u2 * w * f / 2;
    }
    const Scalar wk = b.mode.omega_k;
    s.occupation = wk / 2 * s.var_phi + s.var_pi / (2 * wk) - Scalar(0.5);
    return s;
}

template <class Scalar>
struct DiscreteKernels {
    std::vector<Scalar> t, k_cos, k_sin_over_omega, k_omega_sin;
};

template <class Scalar>
DiscreteKernels<Scalar> oracle_kernels(const FiniteBath<Scalar>& b, const std::vector<Scalar>& ts) {
    if (!b.diagonalized) throw std::logic_error("oracle_kernels: bath not diagonalized");
    DiscreteKernels<Scalar> k;
    k.t = ts;
    for (Scalar t : ts) {
        Scalar c = 0, so = 0, ws = 0;
        for (long i = 0; i < b.eigen_omega.size(); ++i) {
            const Scalar w = b.eigen_omega[i], u2 = b.overlap_sq[i];
            c += u2 * std::cos(w * t);
            so += u2 * std::sin(w * t) / w;
            ws += u2 * w * std::sin(w * t);
        }
        k.k_cos.push_back(c);
        k.k_sin_over_omega.push_back(so);
        k.k_omega_sin.push_back(ws);
    }
    return k;
}

}  // namespace qdsf::bath

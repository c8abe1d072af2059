#pragma once

// Parametric coupling family f(w), the mode kernel v(w,k), the renormalized
// mode frequency and the coupling-strength validity gate.
//
// The family is f(w) = sqrt(2*gamma/pi) * w^s * Lambda^(1-s) * exp(-w/Lambda)
// with s >= 1 (s = 1 ohmic).  The Lambda^(1-s) factor keeps gamma a frequency
// regardless of s.  Natural units throughout; temperatures are frequencies.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qdsf/quadrature.hpp"

namespace qdsf {

/// Thrown when a coupling/mode combination violates the positivity bound.
class CouplingValidityError : public std::domain_error {
public:
    CouplingValidityError(const std::string& what, double margin)
        : std::domain_error(what), margin(margin) {}
    double margin;  // omega_k^2 - int f^2/w^2  (<= 0 here)
};

enum class CouplingFamily { power_law_exponential };

template <class Scalar>
struct CouplingSpec {
    CouplingFamily family = CouplingFamily::power_law_exponential;
    Scalar gamma{};     // strength, frequency dimension, >= 0
    Scalar cutoff{};    // Lambda > 0
    Scalar exponent{};  // s >= 1; s = 1 is ohmic

    CouplingSpec(Scalar gamma_, Scalar cutoff_, Scalar exponent_ = Scalar(1),
                 CouplingFamily family_ = CouplingFamily::power_law_exponential)
        : family(family_), gamma(gamma_), cutoff(cutoff_), exponent(exponent_) {
        if (!(gamma >= Scalar(0))) throw std::domain_error("CouplingSpec: gamma must be >= 0");
        if (!(cutoff > Scalar(0))) throw std::domain_error("CouplingSpec: cutoff must be > 0");
        if (!(exponent >= Scalar(1)))
            throw std::domain_error("CouplingSpec: exponent must be >= 1 (f^2/w^2 diverges at w=0 below that)");
    }
};

template <class Scalar>
Scalar eval_f(const CouplingSpec<Scalar>& spec, Scalar w) {
    if (w < Scalar(0)) throw std::domain_error("eval_f: negative frequency");
    if (w == Scalar(0)) return Scalar(0);
    const Scalar amp = std::sqrt(Scalar(2) * spec.gamma / std::numbers::pi_v<Scalar>);
    return amp * std::pow(w, spec.exponent) * std::pow(spec.cutoff, Scalar(1) - spec.exponent) *
           std::exp(-w / spec.cutoff);
}

template <class Scalar>
Scalar eval_f_sq(const CouplingSpec<Scalar>& spec, Scalar w) {
    if (w <= Scalar(0)) return Scalar(0);
    return Scalar(2) * spec.gamma / std::numbers::pi_v<Scalar> *
           std::pow(w, Scalar(2) * spec.exponent) *
           std::pow(spec.cutoff, Scalar(2) - Scalar(2) * spec.exponent) *
           std::exp(Scalar(-2) * w / spec.cutoff);
}

/// int_0^inf f^2(w)/w^2 dw, in closed form (Gamma integral) for this family.
template <class Scalar>
Scalar coupling_self_energy_integral(const CouplingSpec<Scalar>& spec) {
    const Scalar s = spec.exponent;
    return spec.gamma * spec.cutoff / std::numbers::pi_v<Scalar> *
           std::tgamma(Scalar(2) * s - Scalar(1)) * std::pow(Scalar(2), Scalar(2) - Scalar(2) * s);
}

/// Same integral by quadrature; cross-checks the closed form in the tests.
template <class Scalar>
Scalar coupling_self_energy_by_quadrature(const CouplingSpec<Scalar>& spec,
                                          Scalar tol_rel = Scalar(1e-10)) {
    quad::Options<Scalar> opt;
    opt.tol_rel = tol_rel;
    opt.scale = spec.cutoff;
    auto g = [&](Scalar w) { return w > Scalar(0) ? eval_f_sq(spec, w) / (w * w) : Scalar(0); };
    return quad::integrate_semi_infinite<Scalar>(g, opt).value;
}

/// gamma at which the positivity bound saturates for omega_k^2 = wk_sq.
template <class Scalar>
Scalar critical_gamma(const CouplingSpec<Scalar>& spec, Scalar wk_sq) {
    CouplingSpec<Scalar> unit(Scalar(1), spec.cutoff, spec.exponent, spec.family);
    return wk_sq / coupling_self_energy_integral(unit);
}

template <class Scalar>
Scalar renormalized_frequency_sq(const CouplingSpec<Scalar>& spec, Scalar k, Scalar m) {
    return m * m + k * k - coupling_self_energy_integral(spec);
}

template <class Scalar>
struct PositivityReport {
    bool pass = false;
    Scalar margin{};  // omega_k^2 - int f^2/w^2; positive iff pass
};

template <class Scalar>
PositivityReport<Scalar> check_positivity(const CouplingSpec<Scalar>& spec, Scalar k, Scalar m) {
    const Scalar margin = renormalized_frequency_sq(spec, k, m);
    return {margin > Scalar(0), margin};
}

/// One reciprocal-space mode.  Only constructible while the positivity bound
/// holds; a failing coupling throws with the (non-positive) margin attached.
template <class Scalar>
struct Mode {
    Scalar k{};
    Scalar mass{};
    Scalar omega_k{};
    Scalar omega_renorm_sq{};  // Omega_k^2
};

template <class Scalar>
Mode<Scalar> make_mode(const CouplingSpec<Scalar>& spec, Scalar m, Scalar k) {
    if (k < Scalar(0)) throw std::domain_error("make_mode: k must be >= 0");
    if (m < Scalar(0)) throw std::domain_error("make_mode: m must be >= 0");
    if (m + k <= Scalar(0)) throw std::domain_error("make_mode: need m + k > 0");
    auto rep = check_positivity(spec, k, m);
    if (!rep.pass)
        throw CouplingValidityError("make_mode: coupling too strong, renormalized frequency "
                                    "squared is not positive (margin " +
                                        std::to_string(double(rep.margin)) + ")",
                                    double(rep.margin));
    Mode<Scalar> mode;
    mode.k = k;
    mode.mass = m;
    mode.omega_k = std::sqrt(m * m + k * k);
    mode.omega_renorm_sq = rep.margin;
    return mode;
}

/// v(w,k) = f(w) / (2 sqrt(w omega_k)); the w^(s-1/2) cancellation is taken
/// analytically so w -> 0 never divides by zero.
template <class Scalar>
Scalar eval_v(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode, Scalar w) {
    if (w < Scalar(0)) throw std::domain_error("eval_v: negative frequency");
    if (w == Scalar(0)) return Scalar(0);
    const Scalar amp = std::sqrt(Scalar(2) * spec.gamma / std::numbers::pi_v<Scalar>);
    return amp * std::pow(w, spec.exponent - Scalar(0.5)) *
           std::pow(spec.cutoff, Scalar(1) - spec.exponent) * std::exp(-w / spec.cutoff) /
           (Scalar(2) * std::sqrt(mode.omega_k));
}

template <class Scalar>
Scalar eval_v_sq(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode, Scalar w) {
    if (w <= Scalar(0)) return Scalar(0);
    return eval_f_sq(spec, w) / (Scalar(4) * w * mode.omega_k);
}

}  // namespace qdsf

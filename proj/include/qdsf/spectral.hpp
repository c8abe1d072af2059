#pragma once

// Fano coefficients of the dressed modes, the mode probability density
// P_k(w), its normalization (sum rule) and moment functionals <<f(w)>>_k.
//
// Everything is a moment of P_k(w) = w / (omega_k v^2(w,k) (Y^2(w) + pi^2)),
// where Y collects the principal-value self-energy of the coupled continuum:
//
//   Y(w) v^2(w,k) = (omega_k^2 - w^2)/(2 omega_k)
//                   + PV int v^2(w',k)/(w - w') dw'
//                   - int v^2(w',k)/(w + w') dw'.
//
// With this relative sign the bracket at w -> 0 equals Omega_k^2/(2 omega_k)
// (the renormalized frequency), P is exactly normalized, and the finite-bath
// diagonalization reproduces every moment; the sign is cross-checked against
// that oracle in the tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qdsf/coupling.hpp"
#include "qdsf/quadrature.hpp"

namespace qdsf::spectral {

class InvalidDensityError : public std::runtime_error {
public:
    InvalidDensityError(const std::string& what, double defect)
        : std::runtime_error(what), defect(defect) {}
    double defect;
};

template <class Scalar>
struct QuadPolicy {
    Scalar tol_static = Scalar(1e-10);
    Scalar tol_osc = Scalar(1e-6);
};

template <class Scalar>
Scalar omega_cap(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode,
                 Scalar peak = Scalar(0)) {
    return std::max({Scalar(20) * spec.cutoff, Scalar(20) * mode.omega_k, Scalar(4) * peak});
}

namespace detail {

template <class Scalar>
void require_y_domain(const CouplingSpec<Scalar>& spec, Scalar w) {
    if (!(w > Scalar(0))) throw std::domain_error("spectral: Y undefined at w <= 0 (v^2 vanishes)");
    if (!(spec.gamma > Scalar(0)))
        throw std::domain_error("spectral: Y undefined at gamma = 0; the free field has "
                                "P_k = delta(w - omega_k) and textbook observables");
}

template <class Scalar>
quad::Options<Scalar> static_options(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode,
                                     const QuadPolicy<Scalar>& pol,
                                     std::vector<Scalar> breakpoints = {}) {
    quad::Options<Scalar> opt;
    opt.tol_rel = pol.tol_static;
    opt.scale = spec.cutoff / 2;
    opt.initial_cap = omega_cap(spec, mode);
    opt.breakpoints = std::move(breakpoints);
    return opt;
}

}  // namespace detail

/// Y_k(w); the PV term runs through quad::integrate_pv on v^2.
template <class Scalar>
Scalar eval_Y(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode, Scalar w,
              const QuadPolicy<Scalar>& pol = {}) {
    detail::require_y_domain(spec, w);
    auto opt = detail::static_options(spec, mode, pol);
    auto vsq = [spec, mode](Scalar x) { return eval_v_sq(spec, mode, x); };
    const Scalar pv = quad::integrate_pv<Scalar>(w, vsq, opt).value;
    const Scalar reg =
        quad::integrate_semi_infinite<Scalar>([&](Scalar x) { return vsq(x) / (w + x); }, opt).value;
    const Scalar bracket =
        (mode.omega_k * mode.omega_k - w * w) / (Scalar(2) * mode.omega_k) + pv - reg;
    return bracket / eval_v_sq(spec, mode, w);
}

template <class Scalar>
struct SpectralPoint {
    Scalar Y{}, alpha_sq{}, P{};
};

template <class Scalar>
SpectralPoint<Scalar> eval_point(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode,
                                 Scalar w, const QuadPolicy<Scalar>& pol = {}) {
    const Scalar Y = eval_Y(spec, mode, w, pol);
    const Scalar vsq = eval_v_sq(spec, mode, w);
    const Scalar wk = mode.omega_k;
    const Scalar lorentz = Scalar(1) / (Y * Y + std::numbers::pi_v<Scalar> * std::numbers::pi_v<Scalar>);
    SpectralPoint<Scalar> r;
    r.Y = Y;
    r.alpha_sq = (w + wk) * (w + wk) / (Scalar(4) * wk * wk * vsq) * lorentz;
    r.P = w / (wk * vsq) * lorentz;
    return r;
}

template <class Scalar>
Scalar eval_alpha_sq(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode, Scalar w,
                     const QuadPolicy<Scalar>& pol = {}) {
    return eval_point(spec, mode, w, pol).alpha_sq;
}

template <class Scalar>
Scalar eval_P(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode, Scalar w,
              const QuadPolicy<Scalar>& pol = {}) {
    return eval_point(spec, mode, w, pol).P;
}

/// Structured Fano coefficients at fixed w.  The distributional gamma is a
/// (smooth PV weight, delta-spike coefficient) pair, never evaluated
/// pointwise; alpha is fixed real positive (the phase is unobservable).
template <class Scalar>
struct SpectralCoefficients {
    Scalar Y{};
    Scalar alpha_sq{};
    Scalar beta_over_alpha{};
    Scalar delta_at{};         // smooth delta(w, w') at the requested w'
    Scalar gamma_weight_at{};  // smooth PV weight at the requested w'
    Scalar gamma_spike{};      // coefficient of delta(w - w')
    std::function<Scalar(Scalar)> delta_profile;
    std::function<Scalar(Scalar)> gamma_pv_weight;
};

template <class Scalar>
SpectralCoefficients<Scalar> eval_beta_delta_gamma(const CouplingSpec<Scalar>& spec,
                                                   const Mode<Scalar>& mode, Scalar w,
                                                   Scalar w_prime,
                                                   const QuadPolicy<Scalar>& pol = {}) {
    if (!(w_prime > Scalar(0))) throw std::domain_error("eval_beta_delta_gamma: w' must be > 0");
    auto pt = eval_point(spec, mode, w, pol);
    const Scalar wk = mode.omega_k;
    const Scalar alpha = std::sqrt(pt.alpha_sq);
    const Scalar pref = -Scalar(2) * wk / (w + wk) * alpha;
    SpectralCoefficients<Scalar> c;
    c.Y = pt.Y;
    c.alpha_sq = pt.alpha_sq;
    c.beta_over_alpha = (w - wk) / (w + wk);
    c.delta_profile = [spec, mode, w, pref](Scalar x) {
        return eval_v(spec, mode, x) / (w + x) * pref;
    };
    c.gamma_pv_weight = [spec, mode, pref](Scalar x) { return eval_v(spec, mode, x) * pref; };
    c.delta_at = c.delta_profile(w_prime);
    c.gamma_weight_at = c.gamma_pv_weight(w_prime);
    c.gamma_spike = pt.Y * eval_v(spec, mode, w) * pref;
    return c;
}

// ---------------------------------------------------------------------------
// Peak location and density construction
// ---------------------------------------------------------------------------

template <class Scalar>
struct PeakInfo {
    Scalar omega_peak{};
    Scalar p_max{};
    Scalar fwhm{};
    Scalar half_lo{}, half_hi{};
};

/// Bracketed golden-section search for the maximum of P, seeded by a coarse
/// logarithmic scan (Y may change sign several times at strong coupling, so
/// root-finding on Y alone is not used).
template <class Scalar>
PeakInfo<Scalar> locate_peak(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode,
                             const QuadPolicy<Scalar>& pol = {}) {
    detail::require_y_domain(spec, Scalar(1));
    const Scalar lo = spec.cutoff * Scalar(1e-6);
    const Scalar hi = omega_cap(spec, mode);
    const int n = 384;
    auto P = [&](Scalar w) { return eval_P(spec, mode, w, pol); };
    Scalar best_w = lo, best_p = -1;
    std::vector<Scalar> grid(n);
    for (int i = 0; i < n; ++i) {
        grid[i] = lo * std::pow(hi / lo, Scalar(i) / Scalar(n - 1));
        const Scalar p = P(grid[i]);
        if (p > best_p) {
            best_p = p;
            best_w = grid[i];
        }
    }
    auto it = std::lower_bound(grid.begin(), grid.end(), best_w);
    std::size_t i = std::size_t(it - grid.begin());
    Scalar a = grid[i > 0 ? i - 1 : 0];
    Scalar b = grid[std::min(i + 1, std::size_t(n - 1))];
    const Scalar gr = (std::sqrt(Scalar(5)) - 1) / 2;
    Scalar c = b - gr * (b - a), d = a + gr * (b - a);
    Scalar pc = P(c), pd = P(d);
    for (int iter = 0; iter < 200 && (b - a) > Scalar(1e-13) * (std::abs(b) + Scalar(1)); ++iter) {
        if (pc > pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - gr * (b - a);
            pc = P(c);
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + gr * (b - a);
            pd = P(d);
        }
    }
    PeakInfo<Scalar> info;
    info.omega_peak = (a + b) / 2;
    info.p_max = P(info.omega_peak);
    // half-maximum crossings by outward multiplicative march plus bisection
    const Scalar half = info.p_max / 2;
    auto cross = [&](bool up) {
        Scalar inner = info.omega_peak, outer = info.omega_peak;
        bool found = false;
        for (Scalar step = Scalar(1e-9); step < Scalar(40); step *= Scalar(1.9)) {
            outer = up ? info.omega_peak * (1 + step)
                       : std::max(info.omega_peak * (1 - step), lo / 2);
            if (P(outer) < half) {
                found = true;
                break;
            }
            inner = outer;
            if (!up && outer <= lo / 2) break;
        }
        if (!found) return up ? hi : Scalar(0);
        for (int iter = 0; iter < 80; ++iter) {
            const Scalar mid = (inner + outer) / 2;
            (P(mid) >= half ? inner : outer) = mid;
        }
        return (inner + outer) / 2;
    };
    info.half_lo = cross(false);
    info.half_hi = cross(true);
    info.fwhm = info.half_hi - info.half_lo;
    return info;
}

/// Panel edges around the resonance that static quadratures must sample.
template <class Scalar>
std::vector<Scalar> peak_breakpoints(const PeakInfo<Scalar>& peak, Scalar cap) {
    const Scalar g = std::max(peak.fwhm / 2, peak.omega_peak * Scalar(1e-12));
    std::vector<Scalar> b;
    for (Scalar f : {Scalar(1), Scalar(3), Scalar(10), Scalar(100), Scalar(10000)}) {
        const Scalar l = peak.omega_peak - f * g;
        const Scalar h = peak.omega_peak + f * g;
        if (l > Scalar(0)) b.push_back(l);
        if (h < cap) b.push_back(h);
    }
    b.push_back(peak.omega_peak);
    std::sort(b.begin(), b.end());
    return b;
}

/// <<f(w)>>_k by direct quadrature of f*P with the static tolerance.
template <class Scalar, class F>
Scalar moment(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode, F&& f,
              const PeakInfo<Scalar>& peak, const QuadPolicy<Scalar>& pol = {}) {
    auto opt = detail::static_options(spec, mode, pol,
                                      peak_breakpoints(peak, omega_cap(spec, mode)));
    opt.initial_cap = omega_cap(spec, mode, peak.omega_peak);
    auto g = [&](Scalar w) { return f(w) * eval_P(spec, mode, w, pol); };
    return quad::integrate_semi_infinite<Scalar>(g, opt).value;
}

// ---------------------------------------------------------------------------

template <class Scalar>
struct GridPolicy {
    Scalar omega_min_factor = Scalar(1e-6);  // omega_min = factor * cutoff
    int base_points = 192;                   // logarithmic base grid
    int peak_points = 33;                    // linear seed across the peak
    Scalar panel_tol = Scalar(1e-8);         // Simpson-vs-refined, spread over panels
    Scalar sum_rule_threshold = Scalar(1e-6);
    long max_points = 200000;
    bool throw_on_defect = true;
};

/// Tabulated density on an adaptively refined grid with a cubic-Hermite
/// interpolant; immutable after construction.
template <class Scalar>
class SpectralDensity {
public:
    SpectralDensity(CouplingSpec<Scalar> spec_, Mode<Scalar> mode_)
        : spec(std::move(spec_)), mode(std::move(mode_)) {}

    CouplingSpec<Scalar> spec;
    Mode<Scalar> mode;
    PeakInfo<Scalar> peak;
    std::vector<Scalar> omega, p, y, alpha_sq;
    Scalar sum_rule_defect{};
    bool valid = false;

    Scalar interpolate(Scalar w) const {
        if (w <= omega.front() || w >= omega.back()) return Scalar(0);
        auto it = std::upper_bound(omega.begin(), omega.end(), w);
        const std::size_t i = std::size_t(it - omega.begin()) - 1;
        const Scalar h = omega[i + 1] - omega[i];
        const Scalar u = (w - omega[i]) / h;
        const Scalar u2 = u * u, u3 = u2 * u;
        return (2 * u3 - 3 * u2 + 1) * p[i] + (u3 - 2 * u2 + u) * h * slope_[i] +
               (-2 * u3 + 3 * u2) * p[i + 1] + (u3 - u2) * h * slope_[i + 1];
    }

    /// Exact integral of the interpolant over the grid support.
    Scalar interpolant_mass() const {
        Scalar s = 0;
        for (std::size_t i = 0; i + 1 < omega.size(); ++i) {
            const Scalar h = omega[i + 1] - omega[i];
            s += h * (p[i] + p[i + 1]) / 2 + h * h * (slope_[i] - slope_[i + 1]) / 12;
        }
        return s;
    }

    void finalize_slopes() {
        const std::size_t n = omega.size();
        slope_.assign(n, Scalar(0));
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const Scalar hl = omega[i] - omega[i - 1], hr = omega[i + 1] - omega[i];
            slope_[i] = (p[i + 1] * hl * hl - p[i - 1] * hr * hr + p[i] * (hr * hr - hl * hl)) /
                        (hl * hr * (hl + hr));
        }
        if (n >= 2) {
            slope_[0] = (p[1] - p[0]) / (omega[1] - omega[0]);
            slope_[n - 1] = (p[n - 1] - p[n - 2]) / (omega[n - 1] - omega[n - 2]);
        }
    }

private:
    std::vector<Scalar> slope_;
};

template <class Scalar>
SpectralDensity<Scalar> build_density(const CouplingSpec<Scalar>& spec, const Mode<Scalar>& mode,
                                      const GridPolicy<Scalar>& policy = {},
                                      const QuadPolicy<Scalar>& pol = {}) {
    SpectralDensity<Scalar> d{spec, mode};
    d.peak = locate_peak(spec, mode, pol);
    const Scalar lo = spec.cutoff * policy.omega_min_factor;
    const Scalar hi = omega_cap(spec, mode, d.peak.omega_peak);

    std::map<Scalar, SpectralPoint<Scalar>> pts;
    auto add = [&](Scalar w) -> const SpectralPoint<Scalar>& {
        auto it = pts.find(w);
        if (it == pts.end()) it = pts.emplace(w, eval_point(spec, mode, w, pol)).first;
        return it->second;
    };
    for (int i = 0; i < policy.base_points; ++i)
        add(lo * std::pow(hi / lo, Scalar(i) / Scalar(policy.base_points - 1)));
    const Scalar g = std::max(d.peak.fwhm / 2, d.peak.omega_peak * Scalar(1e-12));
    const Scalar ra = std::max(d.peak.omega_peak - 8 * g, lo);
    const Scalar rb = std::min(d.peak.omega_peak + 8 * g, hi);
    for (int i = 0; i < policy.peak_points; ++i)
        add(ra + (rb - ra) * Scalar(i) / Scalar(policy.peak_points - 1));
    for (Scalar f : {Scalar(16), Scalar(48), Scalar(160), Scalar(512), Scalar(2048)}) {
        if (d.peak.omega_peak - f * g > lo) add(d.peak.omega_peak - f * g);
        if (d.peak.omega_peak + f * g < hi) add(d.peak.omega_peak + f * g);
    }

    // Per-panel Simpson refinement; each panel carries a tolerance share
    // proportional to its width so the total defect stays below panel_tol.
    struct Span {
        Scalar a, b;
    };
    std::vector<Span> work;
    {
        auto it = pts.begin();
        Scalar prev = it->first;
        for (++it; it != pts.end(); ++it) {
            work.push_back({prev, it->first});
            prev = it->first;
        }
    }
    const Scalar range = hi - lo;
    while (!work.empty()) {
        if (long(pts.size()) > policy.max_points)
            throw InvalidDensityError("build_density: grid budget exceeded", 1.0);
        Span s = work.back();
        work.pop_back();
        const Scalar m = (s.a + s.b) / 2;
        const Scalar fa = add(s.a).P, fb = add(s.b).P, fm = add(m).P;
        const Scalar ml = (s.a + m) / 2, mr = (m + s.b) / 2;
        const Scalar fml = add(ml).P, fmr = add(mr).P;
        const Scalar h = s.b - s.a;
        const Scalar simpson = h / 6 * (fa + 4 * fm + fb);
        const Scalar refined = h / 12 * (fa + 4 * fml + 2 * fm + 4 * fmr + fb);
        const Scalar share = policy.panel_tol * (h / range);
        if (std::abs(simpson - refined) > share &&
            h > Scalar(64) * std::numeric_limits<Scalar>::epsilon() * (std::abs(m) + Scalar(1))) {
            work.push_back({s.a, ml});
            work.push_back({ml, m});
            work.push_back({m, mr});
            work.push_back({mr, s.b});
        }
    }

    d.omega.reserve(pts.size());
    for (auto& [w, v] : pts) {
        d.omega.push_back(w);
        d.p.push_back(v.P);
        d.y.push_back(v.Y);
        d.alpha_sq.push_back(v.alpha_sq);
    }
    d.finalize_slopes();

    // Defect from the interpolant plus analytic endpoint/tail corrections
    // (P ~ w^(2s) below omega_min; exponential coupling decay past the cap).
    const Scalar head = d.p.front() * lo / (2 * spec.exponent + 1);
    const Scalar tail = d.p.back() * spec.cutoff / 2;
    d.sum_rule_defect = std::abs(d.interpolant_mass() + head + tail - Scalar(1));
    d.valid = d.sum_rule_defect <= policy.sum_rule_threshold;
    if (!d.valid && policy.throw_on_defect)
        throw InvalidDensityError("build_density: sum rule defect " +
                                      std::to_string(double(d.sum_rule_defect)) +
                                      " exceeds threshold",
                                  double(d.sum_rule_defect));
    return d;
}

// ---------------------------------------------------------------------------

/// Cached moment functionals of one mode's density.  Thread-safe reads with
/// at-most-once insertion per key.
template <class Scalar>
class MomentSet {
public:
    MomentSet(CouplingSpec<Scalar> spec, Mode<Scalar> mode, PeakInfo<Scalar> peak,
              QuadPolicy<Scalar> pol = {})
        : spec_(std::move(spec)), mode_(std::move(mode)), peak_(peak), pol_(pol) {
        mean_omega_ = get("omega", [](Scalar w) { return w; });
        mean_inv_omega_ = get("inv_omega", [](Scalar w) { return Scalar(1) / w; });
    }

    Scalar mean_omega() const { return mean_omega_; }
    Scalar mean_inv_omega() const { return mean_inv_omega_; }
    const Mode<Scalar>& mode() const { return mode_; }
    const CouplingSpec<Scalar>& spec() const { return spec_; }
    const PeakInfo<Scalar>& peak() const { return peak_; }
    const QuadPolicy<Scalar>& policy() const { return pol_; }

    template <class F>
    Scalar get(const std::string& key, F&& f) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        const Scalar v = moment(spec_, mode_, f, peak_, pol_);
        cache_.emplace(key, v);
        return v;
    }

private:
    CouplingSpec<Scalar> spec_;
    Mode<Scalar> mode_;
    PeakInfo<Scalar> peak_;
    QuadPolicy<Scalar> pol_;
    Scalar mean_omega_{}, mean_inv_omega_{};
    mutable std::mutex mutex_;
    mutable std::map<std::string, Scalar> cache_;
};

}  // namespace qdsf::spectral

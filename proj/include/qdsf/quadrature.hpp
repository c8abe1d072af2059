#pragma once

// Adaptive quadrature for the semi-infinite, Cauchy principal-value and
// oscillatory integrals used throughout the library.
//
// All routines are built on a 7/15 Gauss-Kronrod panel rule with global
// adaptive bisection.  The semi-infinite range is handled by truncation at a
// caller-provided (or default) cap followed by geometric cap doubling until
// the last extension falls below tolerance; the magnitude of that extension
// is added to the reported error as a tail bound, which is valid for
// integrands decaying at least exponentially beyond `Options::scale`.
// Principal-value integrals use the subtraction method: the pole is removed
// with g(w') -> (g(w') - g(w))/(w - w') on the symmetric interval [0, 2w]
// (where the remaining logarithmic term integrates to zero exactly) plus an
// ordinary integral over [2w, inf).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdsf::quad {

template <class Scalar>
struct QuadratureResult {
    Scalar value{};
    Scalar error_estimate{};
    long evaluations = 0;
};

/// Thrown when the evaluation budget is exhausted; carries the best estimate.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(const std::string& what, double value, double error, long evaluations)
        : std::runtime_error(what), best_value(value), best_error(error), evaluations(evaluations) {}
    double best_value;
    double best_error;
    long evaluations;
};

/// Thrown for times beyond the supported oscillatory range.  Larger t would
/// need a Filon-type rule (weights integrating the trig factor exactly);
/// panel-per-period subdivision is refused instead of silently degrading.
class OscillatoryRangeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

template <class Scalar>
struct Options {
    Scalar tol_rel = Scalar(1e-10);
    Scalar tol_abs = Scalar(0);
    /// Decay scale of the integrand; seeds the initial panelization and cap.
    Scalar scale = Scalar(1);
    /// Truncation point before tail extensions; 0 derives 32*scale.
    Scalar initial_cap = Scalar(0);
    /// Panel edges that must appear in the initial subdivision (narrow
    /// features the error estimator would otherwise never sample).
    std::vector<Scalar> breakpoints{};
    long max_evaluations = 6'000'000;
    int max_extensions = 48;
    long max_initial_panels = 65536;
};

/// Pole position plus the smooth factor of a PV integrand; the smooth part
/// must be finite and differentiable at the pole.
template <class Scalar>
struct PvIntegrand {
    Scalar pole{};
    std::function<Scalar(Scalar)> smooth;
};

enum class Trig { cos, sin };

namespace detail {

// QUADPACK dqk15 abscissae/weights on [-1, 1].
template <class Scalar>
struct GK15 {
    static constexpr Scalar xgk[8] = {
        Scalar(0.991455371120812639206854697526329L),
        Scalar(0.949107912342758524526189684047851L),
        Scalar(0.864864423359769072789712788640926L),
        Scalar(0.741531185599394439863864773280788L),
        Scalar(0.586087235467691130294144838258730L),
        Scalar(0.405845151377397166906606412076961L),
        Scalar(0.207784955007898467600689403773245L),
        Scalar(0.0L)};
    static constexpr Scalar wgk[8] = {
        Scalar(0.022935322010529224963732008058970L),
        Scalar(0.063092092629978553290700663189204L),
        Scalar(0.104790010322250183839876322541518L),
        Scalar(0.140653259715525918745189590510238L),
        Scalar(0.169004726639267902826583426598550L),
        Scalar(0.190350578064785409913256402421014L),
        Scalar(0.204432940075298892414161999234649L),
        Scalar(0.209482141084727828012999174891714L)};
    static constexpr Scalar wg[4] = {
        Scalar(0.129484966168869693270611432679082L),
        Scalar(0.279705391489276667901467771423780L),
        Scalar(0.381830050505118944950369775488975L),
        Scalar(0.417959183673469387755102040816327L)};
};

template <class Scalar>
struct Panel {
    Scalar a{}, b{};
    Scalar integral{};
    Scalar error{};
    Scalar resabs{};
    bool splittable = true;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class Scalar, class F>
Panel<Scalar> evaluate_panel(F&& g, Scalar a, Scalar b) {
    using K = GK15<Scalar>;
    const Scalar mid = (a + b) / 2;
    const Scalar half = (b - a) / 2;
    const Scalar f0 = g(mid);
    Scalar k15 = K::wgk[7] * f0;
    Scalar g7 = K::wg[3] * f0;
    Scalar resabs = K::wgk[7] * std::abs(f0);
    for (int i = 0; i < 7; ++i) {
        const Scalar dx = half * K::xgk[i];
        const Scalar fl = g(mid - dx);
        const Scalar fr = g(mid + dx);
        k15 += K::wgk[i] * (fl + fr);
        resabs += K::wgk[i] * (std::abs(fl) + std::abs(fr));
        if (i % 2 == 1) g7 += K::wg[i / 2] * (fl + fr);
    }
    Panel<Scalar> p;
    p.a = a;
    p.b = b;
    p.integral = k15 * half;
    p.error = std::abs((k15 - g7) * half);
    p.resabs = resabs * std::abs(half);
    return p;
}

// Global adaptive bisection over a fixed set of initial edges.  The error
// target is max(tol_rel*|I|, tol_abs) with a rounding floor tied to the
// L1 mass of the integrand.
template <class Scalar, class F>
QuadratureResult<Scalar> integrate_adaptive(F&& g, const std::vector<Scalar>& edges,
                                            Scalar tol_rel, Scalar tol_abs,
                                            long max_evaluations, long& evaluations) {
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    std::priority_queue<Panel<Scalar>> heap;
    Scalar total = 0, err = 0, resabs = 0;
    Scalar settled_integral = 0, settled_error = 0;  // unsplittable panels
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (!(edges[i + 1] > edges[i])) continue;
        auto p = evaluate_panel(g, edges[i], edges[i + 1]);
        evaluations += 15;
        total += p.integral;
        err += p.error;
        resabs += p.resabs;
        heap.push(p);
    }
    auto target = [&]() {
        return std::max({tol_rel * std::abs(total + settled_integral), tol_abs,
                         Scalar(50) * eps * resabs});
    };
    while (err + settled_error > target() && !heap.empty()) {
        if (evaluations > max_evaluations)
            throw BudgetExceeded("quadrature evaluation budget exceeded",
                                 double(total + settled_integral),
                                 double(err + settled_error), evaluations);
        Panel<Scalar> worst = heap.top();
        heap.pop();
        const Scalar width = worst.b - worst.a;
        if (!worst.splittable ||
            width <= eps * (std::abs(worst.a) + std::abs(worst.b) + Scalar(1))) {
            settled_integral += worst.integral;
            settled_error += worst.error;
            total -= worst.integral;
            err -= worst.error;
            continue;
        }
        const Scalar mid = worst.a + width / 2;
        auto left = evaluate_panel(g, worst.a, mid);
        auto right = evaluate_panel(g, mid, worst.b);
        evaluations += 30;
        total += left.integral + right.integral - worst.integral;
        err += left.error + right.error - worst.error;
        resabs += left.resabs + right.resabs - worst.resabs;
        heap.push(left);
        heap.push(right);
    }
    QuadratureResult<Scalar> r;
    r.value = total + settled_integral;
    r.error_estimate = err + settled_error + Scalar(2) * eps * resabs;
    r.evaluations = evaluations;
    return r;
}

template <class Scalar>
std::vector<Scalar> make_edges(Scalar lo, Scalar hi, Scalar scale,
                               const std::vector<Scalar>& breakpoints) {
    std::vector<Scalar> e{lo, hi};
    for (Scalar s = scale / 4; s < hi; s *= 2)
        if (s > lo) e.push_back(s);
    for (Scalar b : breakpoints)
        if (b > lo && b < hi) e.push_back(b);
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return e;
}

}  // namespace detail

/// Integral of g over [a, b].
template <class Scalar, class F>
QuadratureResult<Scalar> integrate_finite(F&& g, Scalar a, Scalar b,
                                          const Options<Scalar>& opt = {}) {
    long evals = 0;
    auto edges = detail::make_edges(a, b, std::max(opt.scale, (b - a) / 8), opt.breakpoints);
    return detail::integrate_adaptive(g, edges, opt.tol_rel, opt.tol_abs,
                                      opt.max_evaluations, evals);
}

/// Integral of g over [0, inf) by truncation plus geometric cap doubling.
template <class Scalar, class F>
QuadratureResult<Scalar> integrate_semi_infinite(F&& g, const Options<Scalar>& opt = {}) {
    if (!(opt.scale > Scalar(0))) throw std::domain_error("integrate_semi_infinite: scale must be > 0");
    const Scalar cap0 = opt.initial_cap > Scalar(0) ? opt.initial_cap : Scalar(32) * opt.scale;
    long evals = 0;
    auto edges = detail::make_edges(Scalar(0), cap0, opt.scale, opt.breakpoints);
    QuadratureResult<Scalar> acc =
        detail::integrate_adaptive(g, edges, opt.tol_rel, opt.tol_abs, opt.max_evaluations, evals);
    Scalar cap = cap0;
    Scalar tail_bound = 0;
    for (int ext = 0; ext < opt.max_extensions; ++ext) {
        std::vector<Scalar> te{cap, cap * 3 / 2, cap * 2};
        QuadratureResult<Scalar> piece = detail::integrate_adaptive(
            g, te, opt.tol_rel, opt.tol_abs, opt.max_evaluations, evals);
        acc.value += piece.value;
        acc.error_estimate += piece.error_estimate;
        cap *= 2;
        tail_bound = std::abs(piece.value);
        const Scalar need =
            std::max(opt.tol_rel * std::abs(acc.value) / 2, opt.tol_abs / 2);
        if (tail_bound <= need || tail_bound <= std::numeric_limits<Scalar>::min()) break;
        if (ext + 1 == opt.max_extensions)
            throw BudgetExceeded("integrate_semi_infinite: tail did not converge",
                                 double(acc.value), double(acc.error_estimate + tail_bound), evals);
    }
    acc.error_estimate += tail_bound;
    acc.evaluations = evals;
    return acc;
}

/// Cauchy principal value of  int_0^inf g(w') / (pole - w') dw'.
template <class Scalar, class F>
QuadratureResult<Scalar> integrate_pv(Scalar pole, F&& g, const Options<Scalar>& opt = {}) {
    if (!(pole > Scalar(0))) throw std::domain_error("integrate_pv: pole must lie strictly inside (0, inf)");
    const Scalar gp = g(pole);
    if (!std::isfinite(gp)) throw std::domain_error("integrate_pv: smooth factor not finite at the pole");
    long evals = 1;
    auto h = [&](Scalar x) {
        if (x == pole) return Scalar(0);  // unreachable for interior GK nodes
        return (g(x) - gp) / (pole - x);
    };
    // Subtracted (regular) part on the pole-symmetric interval [0, 2*pole];
    // the g(pole)/(pole - w') remainder integrates to zero there exactly.
    std::vector<Scalar> edges{Scalar(0), pole / 2, pole, pole * 3 / 2, Scalar(2) * pole};
    for (Scalar b : opt.breakpoints)
        if (b > Scalar(0) && b < Scalar(2) * pole) edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    QuadratureResult<Scalar> inner =
        detail::integrate_adaptive(h, edges, opt.tol_rel, opt.tol_abs, opt.max_evaluations, evals);
    // Ordinary remainder over [2*pole, inf), shifted to a [0, inf) integral.
    Options<Scalar> oo = opt;
    oo.breakpoints.clear();
    for (Scalar b : opt.breakpoints)
        if (b > Scalar(2) * pole) oo.breakpoints.push_back(b - Scalar(2) * pole);
    oo.initial_cap = std::max(opt.initial_cap > Scalar(0) ? opt.initial_cap : Scalar(32) * opt.scale,
                              Scalar(4) * pole) - Scalar(2) * pole;
    auto outer_g = [&](Scalar y) { return -g(Scalar(2) * pole + y) / (pole + y); };
    QuadratureResult<Scalar> outer = integrate_semi_infinite(outer_g, oo);
    QuadratureResult<Scalar> r;
    r.value = inner.value + outer.value;
    r.error_estimate = inner.error_estimate + outer.error_estimate +
                       Scalar(8) * std::numeric_limits<Scalar>::epsilon() * std::abs(gp);
    r.evaluations = evals + outer.evaluations;
    return r;
}

template <class Scalar>
QuadratureResult<Scalar> integrate_pv(const PvIntegrand<Scalar>& p, const Options<Scalar>& opt = {}) {
    return integrate_pv<Scalar>(p.pole, p.smooth, opt);
}

/// Integral of g(w)*cos(w t) or g(w)*sin(w t) over [0, inf) for g >= 0.
/// Panels are capped at one oscillation period (>= 15 samples per period);
/// the tolerance is taken relative to the non-oscillatory mass of g.
template <class Scalar, class F>
QuadratureResult<Scalar> integrate_oscillatory(F&& g, Scalar t, Trig kind,
                                               const Options<Scalar>& opt = {}) {
    if (t < Scalar(0)) throw std::domain_error("integrate_oscillatory: t must be >= 0");
    if (t == Scalar(0)) {
        if (kind == Trig::sin) return {Scalar(0), Scalar(0), 0};
        return integrate_semi_infinite(g, opt);
    }
    // Non-oscillatory mass anchors the absolute tolerance and fixes the cap.
    Options<Scalar> mo = opt;
    mo.tol_rel = std::max(opt.tol_rel, Scalar(1e-8));
    QuadratureResult<Scalar> mass = integrate_semi_infinite(g, mo);
    Scalar cap = opt.initial_cap > Scalar(0) ? opt.initial_cap : Scalar(32) * opt.scale;
    {  // extend the cap until the g-mass beyond it is negligible
        Scalar c = cap;
        long e = 0;
        while (true) {
            std::vector<Scalar> te{c, c * 3 / 2, c * 2};
            auto piece = detail::integrate_adaptive(g, te, mo.tol_rel, mo.tol_abs,
                                                    mo.max_evaluations, e);
            if (std::abs(piece.value) <= std::max(opt.tol_rel * std::abs(mass.value) / 2,
                                                  std::numeric_limits<Scalar>::min()))
                break;
            c *= 2;
            if (c > cap * Scalar(1e14)) break;
        }
        cap = c * 2;
    }
    const Scalar period = Scalar(2) * std::numbers::pi_v<Scalar> / t;
    auto base = detail::make_edges(Scalar(0), cap, opt.scale, opt.breakpoints);
    std::vector<Scalar> edges;
    long panel_count = 0;
    for (std::size_t i = 0; i + 1 < base.size(); ++i)
        panel_count += long(std::ceil((base[i + 1] - base[i]) / period));
    if (panel_count > opt.max_initial_panels)
        throw OscillatoryRangeError(
            "integrate_oscillatory: t beyond supported range (panel-per-period rule; "
            "a Filon-type extension is required for larger t)");
    for (std::size_t i = 0; i + 1 < base.size(); ++i) {
        const Scalar a = base[i], b = base[i + 1];
        const long n = std::max<long>(1, long(std::ceil((b - a) / period)));
        for (long j = 0; j < n; ++j) edges.push_back(a + (b - a) * Scalar(j) / Scalar(n));
    }
    edges.push_back(cap);
    auto integrand = [&](Scalar w) {
        return g(w) * (kind == Trig::cos ? std::cos(w * t) : std::sin(w * t));
    };
    long evals = mass.evaluations;
    const Scalar tol_abs = std::max(opt.tol_abs, opt.tol_rel * std::abs(mass.value));
    QuadratureResult<Scalar> r = detail::integrate_adaptive(
        integrand, edges, opt.tol_rel, tol_abs, opt.max_evaluations, evals);
    r.evaluations = evals;
    return r;
}

}  // namespace qdsf::quad

// Model evaluation: trig-polynomial potentials, twisted action blocks, and
// the verification integrator.
//
// Exactness notes that the tests rely on:
//  * Potentials are evaluated after reducing the phase j x + k t to [0, 1),
//    so shifting x or t by integers reproduces bit-identical values whenever
//    the inputs themselves are exact (grid nodes with power-of-two spacing).
//  * The form pairing of a block is c * f(t_mid) * (cum(X1) - cum(X0)) with
//    cum the exact lifted cumulative of the density; summed over a loop this
//    telescopes to c * winding independently of the density, which is what
//    makes cohomology an exact notion at the discrete level.

#include "wkam/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wkam {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

double reduced_cos(double phase) { return std::cos(two_pi * frac01(phase)); }
double reduced_sin(double phase) { return std::sin(two_pi * frac01(phase)); }

void require_mechanical(const LagrangianSpec& spec, const char* op) {
    if (spec.kind != ModelKind::Mechanical)
        throw std::invalid_argument(std::string(op) +
                                    ": generating-function models have no pointwise Lagrangian");
}

} // namespace

double LagrangianSpec::potential_curvature_bound() const {
    double bound = 0.0;
    for (const TrigTerm& term : potential) {
        double amp = std::abs(term.a) + std::abs(term.b);
        bound += (two_pi * term.j) * (two_pi * term.j) * amp;
    }
    return bound;
}

TimeProfile TimeProfile::smoothstep(double t0, double t1) {
    if (!(t1 > t0))
        throw std::invalid_argument("TimeProfile: ramp needs t1 > t0");
    TimeProfile p;
    p.ramped = true;
    p.t0 = t0;
    p.t1 = t1;
    return p;
}

OneForm OneForm::with_density(double c, std::vector<double> g, TimeProfile ramp) {
    if (g.size() < 2)
        throw std::invalid_argument("OneForm: density needs at least 2 samples");
    for (double v : g)
        if (!(v >= 0.0))
            throw std::invalid_argument("OneForm: density must be nonnegative");

    OneForm f;
    f.cohomology_class = c;
    f.uniform = false;
    f.ramp = ramp;

    // Piecewise-linear density: exact cell integrals are trapezoids.
    const int m = static_cast<int>(g.size());
    std::vector<double> cum(m + 1, 0.0);
    for (int i = 0; i < m; ++i) {
        double right = g[(i + 1) % m];
        cum[i + 1] = cum[i] + 0.5 * (g[i] + right) / m;
    }
    double mass = cum[m];
    if (!(mass > 0.0))
        throw std::invalid_argument("OneForm: density has zero mass");
    for (double& v : g) v /= mass;
    for (double& v : cum) v /= mass;
    cum[m] = 1.0; // kill the final rounding ulp so lifts telescope exactly

    f.density = std::move(g);
    f.cumulative = std::move(cum);

    // Support arc = complement of the largest cyclic run of zero samples
    // (the piecewise-linear interpolant vanishes identically on the cells
    // interior to a zero run).  Whole-circle support is flagged as (0, 0):
    // the arc runs forward from support_lo to support_hi.
    int best_start = -1, best_len = 0;
    for (int i = 0; i < m; ++i) {
        if (f.density[i] != 0.0 || f.density[(i + m - 1) % m] == 0.0) continue;
        int len = 0;
        while (len < m && f.density[(i + len) % m] == 0.0) ++len;
        if (len > best_len) { best_len = len; best_start = i; }
    }
    if (best_start < 0) {
        f.support_lo = f.support_hi = 0.0;
    } else {
        f.support_lo = frac01(static_cast<double>(best_start + best_len - 1) / m);
        f.support_hi = frac01(static_cast<double>(best_start) / m);
    }
    return f;
}

// Integral of the density over [0, u] for u in [0, 1).
double OneForm::frac_integral(double u) const {
    const int m = static_cast<int>(density.size());
    double scaled = u * m;
    int cell = std::min(static_cast<int>(scaled), m - 1);
    double s = scaled - cell; // in [0, 1)
    double g0 = density[cell];
    double g1 = density[(cell + 1) % m];
    // integral of the linear interpolant over the partial cell
    double partial = (g0 * s + 0.5 * (g1 - g0) * s * s) / m;
    return cumulative[cell] + partial;
}

double OneForm::cum(double X) const {
    if (uniform) return X;
    double w = std::floor(X);
    double u = X - w;
    if (u >= 1.0) { w += 1.0; u = 0.0; }
    return w + frac_integral(u);
}

double OneForm::segment_mass(double X0, double X1) const {
    if (uniform) return X1 - X0;
    double w0 = std::floor(X0), u0 = X0 - w0;
    double w1 = std::floor(X1), u1 = X1 - w1;
    if (u0 >= 1.0) { w0 += 1.0; u0 = 0.0; }
    if (u1 >= 1.0) { w1 += 1.0; u1 = 0.0; }
    return (w1 - w0) + (frac_integral(u1) - frac_integral(u0));
}

bool OneForm::segment_avoids_support(double X0, double X1) const {
    if (uniform) return false;
    if (support_lo == 0.0 && support_hi == 0.0) return false;
    if (X1 < X0) std::swap(X0, X1);
    // The segment avoids the support iff its fold lies inside the zero arc,
    // which runs forward from support_hi to support_lo.
    double zero_start = support_hi;
    double zero_len = frac01(support_lo - support_hi);
    double len = X1 - X0;
    if (len > zero_len) return false;
    return frac01(X0 - zero_start) + len <= zero_len;
}

// ===== pointwise evaluation =================================================

double potential_value(const LagrangianSpec& spec, double x, double t) {
    double v = 0.0;
    for (const TrigTerm& term : spec.potential) {
        double phase = term.j * x + term.k * t;
        if (term.a != 0.0) v += term.a * reduced_cos(phase);
        if (term.b != 0.0) v += term.b * reduced_sin(phase);
    }
    return v;
}

double potential_dx(const LagrangianSpec& spec, double x, double t) {
    double v = 0.0;
    for (const TrigTerm& term : spec.potential) {
        double phase = term.j * x + term.k * t;
        double w = two_pi * term.j;
        if (term.a != 0.0) v -= term.a * w * reduced_sin(phase);
        if (term.b != 0.0) v += term.b * w * reduced_cos(phase);
    }
    return v;
}

double eval_lagrangian(const LagrangianSpec& spec, double x, double v, double t) {
    require_mechanical(spec, "eval_lagrangian");
    return 0.5 * v * v - potential_value(spec, x, t);
}

double twist_lagrangian(const LagrangianSpec& spec, const OneForm& form, double x,
                        double v, double t) {
    require_mechanical(spec, "twist_lagrangian");
    double g = 1.0;
    if (!form.uniform) {
        // density value at x via linear interpolation
        const int m = static_cast<int>(form.density.size());
        double scaled = frac01(x) * m;
        int cell = std::min(static_cast<int>(scaled), m - 1);
        double s = scaled - cell;
        g = form.density[cell] * (1.0 - s) + form.density[(cell + 1) % m] * s;
    }
    return eval_lagrangian(spec, x, v, t) - form.cohomology_class * form.ramp(t) * g * v -
           form.extra_uniform * v;
}

double generating_block(const LagrangianSpec& spec, double X0, double X1) {
    double d = X1 - X0;
    return 0.5 * d * d + spec.coupling / (two_pi * two_pi) * reduced_cos(X0);
}

double generating_block_d1(const LagrangianSpec& spec, double X0, double X1) {
    return -(X1 - X0) - spec.coupling / two_pi * reduced_sin(X0);
}

double generating_block_d2(const LagrangianSpec& /*spec*/, double X0, double X1) {
    return X1 - X0;
}

// ===== discrete action block ================================================

double convexity_dt_threshold(const LagrangianSpec& spec) {
    if (spec.kind == ModelKind::GeneratingFunction) return 1.0;
    double curv = spec.potential_curvature_bound();
    if (curv <= 0.0) return 1.0;
    // Block action in the displacement d: d^2/(2 dt) - dt V(x + d/2); second
    // derivative 1/dt - dt * V_xx / 4 stays positive for dt^2 < 4 / |V_xx|.
    return std::min(1.0, 2.0 / std::sqrt(curv));
}

double lifted_block(const LagrangianSpec& spec, const OneForm& form, double X0,
                    double X1, double t, double dt) {
    double kinetic;
    double t_mid = t + 0.5 * dt;
    if (spec.kind == ModelKind::GeneratingFunction) {
        kinetic = generating_block(spec, X0, X1);
    } else {
        double d = X1 - X0;
        double v = d / dt;
        kinetic = dt * (0.5 * v * v - potential_value(spec, X0 + 0.5 * d, t_mid));
    }
    if (form.extra_uniform != 0.0) kinetic -= form.extra_uniform * (X1 - X0);
    double c = form.cohomology_class;
    if (c == 0.0) return kinetic;
    return kinetic - c * form.ramp(t_mid) * form.segment_mass(X0, X1);
}

double discrete_lagrangian(const LagrangianSpec& spec, const OneForm& form,
                           const GridSpec& grid, double x0, double x1, int m,
                           double t, double dt) {
    if (std::abs(m) > grid.winding_cap)
        throw std::invalid_argument("discrete_lagrangian: winding " + std::to_string(m) +
                                    " exceeds cap " + std::to_string(grid.winding_cap));
    if (spec.kind == ModelKind::GeneratingFunction) {
        if (dt != 1.0)
            throw std::invalid_argument(
                "discrete_lagrangian: generating-function blocks span dt == 1");
    } else if (dt > convexity_dt_threshold(spec)) {
        throw std::invalid_argument(
            "discrete_lagrangian: dt above the block-convexity threshold " +
            std::to_string(convexity_dt_threshold(spec)));
    }
    return lifted_block(spec, form, x0, x0 + (x1 - x0) + m, t, dt);
}

// ===== discrete flow ========================================================

FlowState flow_step(const LagrangianSpec& spec, const OneForm& form, double x,
                    double v, double t, double dt) {
    const double c = form.cohomology_class;
    const double cx = form.extra_uniform;
    auto density_at = [&](double pos) -> double {
        if (form.uniform) return 1.0;
        const int m = static_cast<int>(form.density.size());
        double scaled = frac01(pos) * m;
        int cell = std::min(static_cast<int>(scaled), m - 1);
        double s = scaled - cell;
        return form.density[cell] * (1.0 - s) + form.density[(cell + 1) % m] * s;
    };

    if (spec.kind == ModelKind::GeneratingFunction) {
        if (dt != 1.0)
            throw std::invalid_argument("flow_step: generating-function steps span dt == 1");
        double fm = c == 0.0 ? 0.0 : c * form.ramp(t + 0.5);
        // Momentum matching: p = -D1[h - pairing](x, x') is linear in x', so
        // (x' - x) + (coupling/2pi) sin(2 pi x) - fm g(x) - cx = p solves directly.
        double xp = x + v - spec.coupling / two_pi * reduced_sin(x) + fm * density_at(x) + cx;
        double vp = generating_block_d2(spec, x, xp) - fm * density_at(xp) - cx;
        return FlowState{xp, vp};
    }

    double t_mid = t + 0.5 * dt;
    double fm = c == 0.0 ? 0.0 : c * form.ramp(t_mid);
    // Twisted momentum entering the step.
    double p = v - cx - (c == 0.0 ? 0.0 : c * form.ramp(t) * density_at(x));
    // Solve p = d/dt' + (dt/2) V_x(x + d/2, t_mid) - fm g(x) - cx for displacement d.
    double d = p * dt;
    for (int iter = 0; iter < 50; ++iter) {
        double res = d / dt + 0.5 * dt * potential_dx(spec, x + 0.5 * d, t_mid) -
                     fm * density_at(x) - cx - p;
        double slope = 1.0 / dt; // dominant term; curvature correction is O(dt)
        double step = res / slope;
        d -= step;
        if (std::abs(step) < 1e-15) break;
    }
    double xp = x + d;
    double pp = d / dt - 0.5 * dt * potential_dx(spec, x + 0.5 * d, t_mid) -
                fm * density_at(xp) - cx;
    double vp = pp + cx + (c == 0.0 ? 0.0 : c * form.ramp(t + dt) * density_at(xp));
    return FlowState{xp, vp};
}

} // namespace wkam

// Lagrangian models on the circle and the closed 1-forms used to twist them.
//
// Two model families:
//   * Mechanical: L(x, v, t) = v^2/2 - V(x, t) with V a trigonometric
//     polynomial, 1-periodic in both x and t.
//   * GeneratingFunction: a twist-map generating block
//     h(X, X') = (X' - X)^2 / 2 + (coupling / 4 pi^2) cos(2 pi X)
//     evaluated on lifted endpoints; one block spans exactly one period,
//     so these models require n_substeps == 1.  There is no pointwise
//     Lagrangian for this kind.
//
// A OneForm represents c * f(t) * g(x) dx: cohomology class c, a unit-mass
// density g on the circle, and a monotone ramp f in [0, 1] (identically 1
// for stationary forms).  Twisted actions subtract the form's pairing with
// the motion; the density enters through its exact lifted cumulative so that
// the pairing of a closed loop telescopes to c * (total winding) no matter
// what unit-mass density represents the class.

#pragma once

#include "wkam/grid.hpp"

#include <vector>

namespace wkam {

enum class ModelKind { Mechanical, GeneratingFunction };

// One potential term a*cos(2 pi (j x + k t)) + b*sin(2 pi (j x + k t)).
struct TrigTerm {
    int j = 0;
    int k = 0;
    double a = 0.0; // cosine coefficient
    double b = 0.0; // sine coefficient
};

struct LagrangianSpec {
    ModelKind kind = ModelKind::Mechanical;
    std::vector<TrigTerm> potential; // mechanical only
    double coupling = 0.0;           // generating-function only

    static LagrangianSpec free_particle() { return LagrangianSpec{}; }
    static LagrangianSpec mechanical(std::vector<TrigTerm> terms) {
        LagrangianSpec s;
        s.potential = std::move(terms);
        return s;
    }
    // V(x) = amplitude * cos(2 pi x): the prototype with a hyperbolic rest point.
    static LagrangianSpec pendulum(double amplitude = 1.0) {
        return mechanical({TrigTerm{1, 0, amplitude, 0.0}});
    }
    static LagrangianSpec standard_family(double coupling) {
        LagrangianSpec s;
        s.kind = ModelKind::GeneratingFunction;
        s.coupling = coupling;
        return s;
    }

    // Upper bound on |V_xx|, used for the block-convexity threshold.
    double potential_curvature_bound() const;
};

// Monotone time ramp: 0 for t <= t0, 1 for t >= t1, smoothstep in between.
// Default-constructed profiles are identically 1 (stationary forms).
struct TimeProfile {
    bool ramped = false;
    double t0 = 0.0;
    double t1 = 1.0;

    double operator()(double t) const {
        if (!ramped || t >= t1) return 1.0;
        if (t <= t0) return 0.0;
        double s = (t - t0) / (t1 - t0);
        return s * s * (3.0 - 2.0 * s);
    }
    static TimeProfile constant_one() { return TimeProfile{}; }
    static TimeProfile smoothstep(double t0, double t1);
};

struct OneForm {
    double cohomology_class = 0.0; // c
    bool uniform = true;           // g identically 1
    // Sampled density on its own uniform grid (size() nodes, periodic),
    // interpreted as piecewise linear.  Empty when uniform.
    std::vector<double> density;
    // cumulative[i] = integral of g over [0, i/M]; cumulative[M] forced to 1.
    std::vector<double> cumulative;
    TimeProfile ramp;
    // Support arc of a non-uniform density (lo, hi) in [0,1); both 0 when
    // the density covers the whole circle.
    double support_lo = 0.0;
    double support_hi = 0.0;
    // Additional uniform class paired with plain displacement, bypassing the
    // ramp and the density.  Lets one form carry "uniform base class plus a
    // ramped localized bump" as cohomology schedules need.
    double extra_uniform = 0.0;

    static OneForm uniform_form(double c) {
        OneForm f;
        f.cohomology_class = c;
        return f;
    }
    // Takes ownership of node samples of g (>= 0), normalizes mass to 1.
    static OneForm with_density(double c, std::vector<double> g, TimeProfile ramp);

    // Integral of the periodized density from 0 to lifted position X.
    double cum(double X) const;
    // Integral of the density over the lifted segment [X0, X1], computed as
    // (winding difference) + (fractional-part difference) so that a whole
    // winding carries mass exactly 1 in floating point.
    double segment_mass(double X0, double X1) const;
    // True if the (lifted) segment stays clear of the density support.
    bool segment_avoids_support(double X0, double X1) const;

  private:
    double frac_integral(double u) const;
};

// ===== pointwise evaluation =================================================

double potential_value(const LagrangianSpec& spec, double x, double t);
double potential_dx(const LagrangianSpec& spec, double x, double t);

// L(x, v, t); throws for GeneratingFunction models (no pointwise Lagrangian).
double eval_lagrangian(const LagrangianSpec& spec, double x, double v, double t);

// L(x, v, t) - c f(t) g(x) v.
double twist_lagrangian(const LagrangianSpec& spec, const OneForm& form, double x,
                        double v, double t);

// Generating block on lifted endpoints (GeneratingFunction kind only).
double generating_block(const LagrangianSpec& spec, double X0, double X1);
double generating_block_d1(const LagrangianSpec& spec, double X0, double X1);
double generating_block_d2(const LagrangianSpec& spec, double X0, double X1);

// ===== discrete action block ================================================

// Action of one block from x to x' with winding m over [t, t + dt], twisted
// by the form.  Mechanical kind uses the midpoint rule
//   dt * L((x + x')/2 + m/2, (x' - x + m)/dt, t + dt/2)
// and requires dt below the convexity threshold; GeneratingFunction kind
// requires dt == 1.  Throws a winding-cap error when |m| > grid.winding_cap.
double discrete_lagrangian(const LagrangianSpec& spec, const OneForm& form,
                           const GridSpec& grid, double x0, double x1, int m,
                           double t, double dt);

// Same block on lifted endpoints without the winding/grid bookkeeping
// (used by kernel builders and curve refinement; no cap check).
double lifted_block(const LagrangianSpec& spec, const OneForm& form, double X0,
                    double X1, double t, double dt);

// Largest dt for which mechanical blocks stay strictly convex in the
// displacement (kinetic term dominates the midpoint potential curvature).
double convexity_dt_threshold(const LagrangianSpec& spec);

// ===== discrete flow (verification integrator) =============================

struct FlowState {
    double x = 0.0; // lifted position
    double v = 0.0; // velocity (mechanical) / momentum (generating function)
};

// One step of the discrete Euler-Lagrange map induced by the block action.
// Used to verify extracted orbits, never to minimize.
FlowState flow_step(const LagrangianSpec& spec, const OneForm& form, double x,
                    double v, double t, double dt);

} // namespace wkam

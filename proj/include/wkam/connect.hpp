// Gap detection, step forms, C-equivalence, dwell estimation, cohomology
// schedules, and long-horizon connecting orbits with visit verification.
//
// A transition between nearby cohomology classes is carried by a "step
// form": the base class plus a ramped unit-mass bump supported inside a gap
// of the rotation-aware minimizing set.  A schedule alternates dwell windows
// (uniform class, stationary kernels) with one-period transitions; the
// assembled kernel sequence is minimized end to end, the minimizer is
// polished against the accumulated closed form, and the visit inequalities
// (one pass within epsilon of each class's Mather-set approximation inside
// each dwell window) are checked explicitly, never assumed.

#pragma once

#include "wkam/barrier.hpp"
#include "wkam/curve.hpp"
#include "wkam/sets.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace wkam {

struct ConnectOptions {
    double delta_cap = 0.25;   // largest class step carried by one transition
    double gap_cells = 3.0;    // minimum gap width, in grid cells
    int transition_periods = 1;
    int dwell_cap = 64;        // dwell-estimate search ceiling (periods)
    int dwell_pad = 2;         // safety periods added to every estimate
    int dwell_override = 0;    // > 0 forces this dwell everywhere (testing)
    int endpoint_samples = 12; // endpoint grid sampled by dwell_estimate
    int rotation_horizon = 60; // periods behind the rotation number
    int q_max = 64;            // rational-rotation reporting bound
    // Set-membership threshold, in units of (one-block kernel Lipschitz)/N.
    // Tight enough to resolve the small hole-crossing barriers the gap test
    // depends on, wide enough to keep true set points that fall between
    // nodes (endpoint fattening is about half a unit).
    double set_tol_factor = 2.5;
    BarrierOptions barrier;    // barrier knobs for the per-class fields
};

// ===== gap analysis and the R-space dichotomy ===============================

struct SectionGap {
    int section = 0;
    bool has_gap = false;
    double lo = 0.0, hi = 0.0; // widest arc free of set points (hi may be > 1)
    double length = 0.0;
};

struct GapReport {
    double cohomology_class = 0.0;
    double rotation = 0.0;
    bool rational = false; // rotation within 1/N of some p/q with q <= q_max
    int p = 0;
    int q = 1;
    bool autonomous = false; // one section computed, the rest replicated
    bool has_gap = false;    // some section misses an arc wider than gap_cells
    int widest_section = 0;
    double widest_lo = 0.0, widest_hi = 0.0, widest_length = 0.0;
    std::vector<SectionGap> sections; // one per substep section
};

// Computes the minimizing set at every section and reports the arcs it
// misses.  A gap wider than gap_cells grid cells at any section certifies
// there is no rotational invariant graph through that class.  The set fields
// use one-period blocks regardless of the detected rotation: their horizons
// already sweep every return time, an invariant graph covers the circle in
// them if and only if it does in the q-block refinement, and q-fold horizons
// would bury the small hole barriers under the quantization floor.  p/q is
// still reported for reference.
GapReport gap_analysis(const LagrangianSpec& spec, double c, const GridSpec& grid,
                       const ConnectOptions& options = {}, KernelCache* cache = nullptr);

// Full when gap_analysis finds a gap (every class direction admits a step
// form), Trivial when the minimizing set covers the circle at every section
// (an invariant graph blocks all class changes).
enum class RSpace { Trivial, Full };

RSpace r_space(const LagrangianSpec& spec, double c, const GridSpec& grid,
               const ConnectOptions& options = {}, KernelCache* cache = nullptr);

// ===== C-equivalence ========================================================

struct CEquivalenceReport {
    bool equivalent = false;
    std::optional<double> failing_class; // first sample with RSpace::Trivial
    std::vector<double> samples;         // classes tested, in test order
};

// Samples [min(c0,c1), max(c0,c1)] uniformly (n_samples points including the
// endpoints); equivalent iff r_space is Full at every sample.  Equal classes
// are trivially equivalent.
CEquivalenceReport c_equivalence(const LagrangianSpec& spec, double c0, double c1,
                                 const GridSpec& grid, int n_samples = 9,
                                 const ConnectOptions& options = {},
                                 KernelCache* cache = nullptr);

// ===== step forms ===========================================================

// One class transition: pairing = base_class dx + delta_class f(t) g(x) dx,
// where g is a unit-mass cosine-taper bump supported strictly inside a gap
// arc of the minimizing set and f ramps 0 -> 1 over ramp_periods.
struct StepForm {
    double base_class = 0.0;
    double delta_class = 0.0;
    bool zero = true;            // delta == 0: identity transition
    std::vector<double> density; // bump samples (grid-node spacing), unnormalized
    int section = 0;             // section whose gap hosts the bump
    double gap_lo = 0.0, gap_hi = 0.0;         // the gap arc used
    double support_lo = 0.0, support_hi = 0.0; // bump support (inset >= 1 cell)
    int ramp_periods = 1;
};

// Builds the bump in the widest gap arc (quarter-length inset, at least one
// cell).  Throws when |delta| exceeds delta_cap or no gap exists; delta == 0
// yields the zero step form without requiring a gap.
StepForm build_step_form(const LagrangianSpec& spec, double c, double delta,
                         const GridSpec& grid, const ConnectOptions& options = {},
                         KernelCache* cache = nullptr);

// The one-form realizing a step form with its ramp anchored at absolute time
// t_start (smoothstep over [t_start, t_start + ramp_periods]).  Zero step
// forms give the plain uniform form of the base class.
OneForm transition_form(const StepForm& step, double t_start);

// ===== dwell estimation =====================================================

struct DwellEstimate {
    int periods = 0;        // smallest horizon with the visit property
    bool achieved = false;  // false: property not attained within dwell_cap
    double epsilon = 0.0;
    double worst_distance = 0.0; // worst over sampled minimizers at `periods`
    bool mather_fallback = false; // Mather stand-in was empty, Aubry set used
};

// Smallest T <= dwell_cap such that every sampled endpoint-pair minimizer
// over T periods passes within epsilon of the Mather-set approximation at a
// period boundary.  Returns dwell_cap with achieved == false when no horizon
// qualifies.
DwellEstimate dwell_estimate(const LagrangianSpec& spec, double c, const GridSpec& grid,
                             double epsilon, const ConnectOptions& options = {},
                             KernelCache* cache = nullptr);

// ===== schedules ============================================================

struct ScheduleClass {
    double cohomology_class = 0.0;
    double epsilon = 0.0;
    int input_index = -1; // index in the requested list; -1 for split-inserted
    int dwell_periods = 0;
    DwellEstimate estimate;
    std::vector<double> target_points;     // Mather stand-in, section 0
    std::vector<double> target_velocities; // graph section over the targets
    bool mather_fallback = false;
};

struct CohomologySchedule {
    LagrangianSpec spec;
    GridSpec grid;
    ConnectOptions options;
    std::vector<ScheduleClass> classes; // ladder after splitting large jumps
    std::vector<StepForm> transitions;  // classes.size() - 1 entries
    std::vector<OneForm> transition_forms; // absolute-time forms, same order
    std::vector<int> dwell_start, dwell_end; // period window [start, end) per class
    std::vector<int> transition_start;       // first period of each transition
    int total_periods = 0;
    // One kernel per period / per substep.  Dwell periods of equal classes
    // share the same stationary kernel objects bit for bit.
    std::vector<std::shared_ptr<const ActionKernel>> kernel_sequence;
    std::vector<std::shared_ptr<const ActionKernel>> block_sequence;
    std::vector<OneForm> period_forms; // form scoring each period
    std::vector<int> period_class;     // owning ladder index (transitions: source)
};

// Splits class jumps larger than delta_cap into equal sub-steps, sizes every
// dwell by dwell_estimate (+ dwell_pad, or dwell_override), verifies the
// R-test for every nonzero transition (throws naming the failing step), and
// assembles the per-period and per-substep kernel sequences.
CohomologySchedule build_schedule(const LagrangianSpec& spec,
                                  const std::vector<double>& classes,
                                  const std::vector<double>& epsilons,
                                  const GridSpec& grid,
                                  const ConnectOptions& options = {},
                                  KernelCache* cache = nullptr);

// ===== connecting orbits ====================================================

struct ConnectingOrbitResult {
    DiscreteCurve curve; // refined minimizer over the full horizon, t0 = 0
    std::vector<double> visit_times;     // one per dwell window, increasing
    std::vector<double> visit_distances; // circle distance to the target set
    std::vector<double> visit_velocity_mismatch; // |FD velocity - target|
    std::vector<int> visit_periods;      // period index of each visit
    std::vector<double> window_rotations; // mean rotation over each window
    bool verified = false;    // all visit distances within their epsilons
    bool mather_fallback = false;
    double action = 0.0;      // action against the accumulated closed form
    double dp_action = 0.0;   // kernel-sequence minimum before refinement
};

// Minimizes the schedule's substep kernel train with free endpoints,
// polishes the samples against the accumulated transition form, then checks
// one visit per dwell window against that class's target set.
ConnectingOrbitResult connecting_orbit(const CohomologySchedule& schedule);

// ===== extremality audit ====================================================

struct ExtremalReport {
    double max_outside = 0.0; // max |residual| at samples clear of all bumps
    double max_inside = 0.0;  // max |residual| over the remaining samples
    int outside_samples = 0;
    int inside_samples = 0;
};

// Discrete Euler-Lagrange residual of the unmodified Lagrangian at every
// interior sample, split by whether the sample position lies inside any
// step-form bump support.  Closed forms cancel in the true equations of
// motion, so a valid orbit shows residuals at quadrature accuracy outside
// the supports regardless of the schedule's class changes.
ExtremalReport verify_extremal(const CohomologySchedule& schedule,
                               const DiscreteCurve& curve);

} // namespace wkam

// Discrete curves on the circle and their extraction from kernel sequences.
//
// A curve is a uniform-step sample train (time, position, winding-to-next)
// plus its total discrete action and mean rotation.  minimize_endpoint /
// minimize_free run the vector dynamic program over a time-contiguous block
// sequence and backtrack through stored argmins; refine_curve polishes the
// interior samples off-grid by cyclic coordinate descent on the lifted
// action, never increasing it.

#pragma once

#include "wkam/kernel.hpp"

#include <optional>
#include <vector>

namespace wkam {

struct DiscreteCurve {
    double t0 = 0.0;              // time of the first sample
    double dt = 0.0;              // uniform step between samples
    std::vector<double> x;        // positions in [0,1), size S+1
    std::vector<std::int32_t> m;  // winding toward the next sample, size S
    double action = 0.0;          // total discrete action
    double rotation = 0.0;        // total lifted displacement / total duration

    int steps() const { return static_cast<int>(m.size()); }
    double t_end() const { return t0 + dt * steps(); }
    double time_at(int s) const { return t0 + dt * s; }
    // Lifted (real-line) positions with X(0) = x(0).
    std::vector<double> lifted() const;
};

// Dynamic-programming minimizer over a time-contiguous block sequence with
// both endpoints snapped to the grid.  The returned action matches the
// corresponding composed-kernel entry.
DiscreteCurve minimize_endpoint(const std::vector<const ActionKernel*>& kernels,
                                const GridSpec& grid, double x_start, double x_end);

// Same dynamic program with one or both endpoints free (minimized over).
// Ties at the free end resolve to the smallest node index.
DiscreteCurve minimize_free(const std::vector<const ActionKernel*>& kernels,
                            const GridSpec& grid,
                            std::optional<double> x_start = std::nullopt,
                            std::optional<double> x_end = std::nullopt);

// Contiguous sub-curve over sample steps [step_begin, step_end]; keeps the
// original times and windings, recomputes the rotation, zeroes the action
// (callers re-score the slice against whatever form applies to the window).
DiscreteCurve slice_curve(const DiscreteCurve& curve, int step_begin, int step_end);

// Per-step evaluation context for curves that cross form transitions: block s
// is scored with forms[s] starting at the curve's own time grid.
struct StepForms {
    std::vector<const OneForm*> forms; // size = curve.steps()
};

// Sub-grid polish: cyclic coordinate descent over interior samples on the
// lifted action, endpoints fixed, strictly decreasing accepts only.  Stops
// when the largest sample update drops below tol or after max_sweeps.
DiscreteCurve refine_curve(const LagrangianSpec& spec, const OneForm& form,
                           const DiscreteCurve& curve, double tol = 1e-10,
                           int max_sweeps = 500);
DiscreteCurve refine_curve_multi(const LagrangianSpec& spec, const StepForms& step_forms,
                                 const DiscreteCurve& curve, double tol = 1e-10,
                                 int max_sweeps = 500);

// Total action of a curve recomputed from the model (sum of lifted blocks).
double curve_action(const LagrangianSpec& spec, const OneForm& form,
                    const DiscreteCurve& curve);
double curve_action_multi(const LagrangianSpec& spec, const StepForms& step_forms,
                          const DiscreteCurve& curve);

// The same sum split per step (size = curve.steps()); prefix sums of this
// vector give every sub-window action in O(1).
std::vector<double> step_actions(const LagrangianSpec& spec, const OneForm& form,
                                 const DiscreteCurve& curve);

} // namespace wkam

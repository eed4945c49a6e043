// Invariant-set approximations from barrier fields: Aubry set, static
// classes, Mane set, rational-rotation set detection, minimality
// classification of curves, and Lipschitz graph checks.
//
// All sets are node subsets of one spatial section.  Membership thresholds
// default to the barrier field's grid-scale tolerance (10 * Lip / N).
// Velocities are recovered from the first substep of a one-block minimizer
// leaving each member point, so every reported set is a sampled graph
// (x_i, v_i) over its projection.

#pragma once

#include "wkam/barrier.hpp"
#include "wkam/curve.hpp"

#include <vector>

namespace wkam {

enum class SetKind { Aubry, Mane, Mather, GSet };

struct InvariantSetApprox {
    SetKind kind = SetKind::Aubry;
    int n = 0;           // nodes on the section
    int section = 0;     // substep index of the section
    double tol = 0.0;    // membership threshold used
    std::vector<int> points;         // member node indices, ascending
    std::vector<double> velocities;  // per member
    // Complementary maximal open arcs (lo, hi) in [0, 1), hi possibly > 1
    // when an arc wraps; empty when the set covers every node.
    std::vector<std::pair<double, double>> gaps;

    bool contains(int node) const;
};

// Nodes with d(x, x) <= tol.  Throws if empty: d attains min 0 on a grid up
// to resolution error, so an empty result means tol is inconsistent with the
// field's resolution.
InvariantSetApprox aubry_set(const BarrierField& field, double tol = -1.0);

// Partition of the Aubry points into static classes: transitive closure of
// d(x, x') <= tol.  Each class is an ascending node list.
std::vector<std::vector<int>> static_classes(const BarrierField& field,
                                             const InvariantSetApprox& aubry,
                                             double tol = -1.0);

// Nodes through which some pair of Aubry points chains within tol:
//   min over (y, y') of  h(y, x) + h(x, y') - h(y, y')  <= tol.
InvariantSetApprox mane_set(const BarrierField& field, const InvariantSetApprox& aubry,
                            double tol = -1.0);

// Recurrent subset of the Aubry set under the one-block successor map
// sigma(i) = argmin_j [F_c(i, j) + h(j, i)] (support of minimizing measures).
InvariantSetApprox mather_set(const BarrierField& field, const InvariantSetApprox& aubry);

// First continued-fraction convergent p/q of `rotation` with q <= q_max and
// |rotation - p/q| < err_bound; false when no convergent qualifies.
bool detect_rational(double rotation, int q_max, double err_bound, int& p, int& q);

// Continued-fraction detection of a rational rotation number p/q (q <= q_max,
// error < 1/N): the set is then computed from the q-period block kernel; an
// irrational (undetected) rotation falls back to q = 1.  q = 1 follows the
// exact same code path as mane_set.  Barrier horizons are divided by q so the
// total-period range (and with it the path-quantization floor) stays fixed
// instead of growing q-fold.
struct GSetResult {
    InvariantSetApprox set;
    BarrierField field;   // the (possibly q-period) field the set came from
    int q = 1;            // detected denominator (1 when none)
    int p = 0;            // detected numerator
    bool rational = false;
};
GSetResult g_set(const LagrangianSpec& spec, const OneForm& form, const GridSpec& grid,
                 double rotation, double tol = -1.0, int q_max = 64, int section = 0,
                 KernelCache* cache = nullptr);

// ===== curve classification =================================================

enum class CurveClass { Static, SemiStatic, MinimizingOnly, NotMinimizing };

struct CurveClassification {
    CurveClass curve_class = CurveClass::NotMinimizing;
    // Worst window excesses against each test (negative = passes with slack).
    double minimizing_excess = 0.0;
    double semi_static_excess = 0.0;
    double static_excess = 0.0;
    int windows_checked = 0;
};

// Classifies a curve against a barrier field by checking every whole-period
// window [a, b] of its samples:
//   minimizing:   A_c(window) <= F_c^k(a, b) + tol
//   semi-static:  A_c(window) <= phi(a, b) + tol
//   static:       A_c(window) <= -phi(b, a) + tol
// where A_c is the curve's action plus alpha per period.  The curve must
// span at least one whole period and its sample step must equal the grid's.
CurveClassification classify_curve(const DiscreteCurve& curve, const BarrierField& field,
                                   double tol = -1.0);

// ===== graph property =======================================================

struct GraphCheck {
    double lipschitz_constant = 0.0; // max |v_i - v_j| / dist over close pairs
    int violations = 0;              // close pairs exceeding `bound`
    int pairs_checked = 0;
};

// Checks the a-priori Lipschitz graph property over member pairs within
// `max_cells` grid cells of each other (default 4).
GraphCheck graph_check(const InvariantSetApprox& set, double bound, int max_cells = 4);

} // namespace wkam

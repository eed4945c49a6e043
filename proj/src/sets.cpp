// Invariant-set extraction on top of barrier fields.

#include "wkam/sets.hpp"

#include "wkam/weakkam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace wkam {

namespace {

double resolve_tol(const BarrierField& field, double tol) {
    return tol < 0.0 ? field.default_tol() : tol;
}

// First-substep minimizer recovery: the velocity of a member point i heading
// to a one-block target j is read off the argmin split of
//   B_0(i, u) + R(u, j),
// where B_0 is the first substep kernel of the section and R the rest of the
// block (remaining substeps, then q - 1 whole periods).
struct VelocityHelper {
    ActionKernel b0;   // first substep, with windings
    ActionKernel rest; // values-only remainder; n == 0 when the block is B_0
    double dt_block = 0.0;
    int n = 0;

    double velocity(int i, int target) const {
        int u = target;
        if (rest.n != 0) {
            double best = b0.at(i, 0) + rest.at(0, target);
            u = 0;
            for (int cand = 1; cand < n; ++cand) {
                const double s = b0.at(i, cand) + rest.at(cand, target);
                if (s < best) {
                    best = s;
                    u = cand;
                }
            }
        }
        const double x0 = static_cast<double>(i) / n;
        const double x1 = static_cast<double>(u) / n + b0.winding_at(i, u);
        return (x1 - x0) / dt_block;
    }
};

VelocityHelper make_velocity_helper(const BarrierField& field) {
    VelocityHelper h;
    const GridSpec& grid = field.grid;
    const double t0 = field.options.section * grid.dt();
    std::vector<ActionKernel> blocks = substep_kernels(field.spec, field.form, grid, t0);
    h.b0 = blocks.front();
    h.dt_block = grid.dt();
    h.n = field.n;

    bool have_rest = false;
    ActionKernel rest;
    for (std::size_t s = 1; s < blocks.size(); ++s) {
        rest = have_rest ? minplus_compose_values(rest, blocks[s]) : blocks[s];
        rest.winding.clear();
        rest.split.clear();
        have_rest = true;
    }
    if (field.options.periods_per_block > 1) {
        ActionKernel period = blocks.front();
        for (std::size_t s = 1; s < blocks.size(); ++s)
            period = minplus_compose_values(period, blocks[s]);
        PowCache pows(period);
        const ActionKernel tail = pows.power(field.options.periods_per_block - 1);
        rest = have_rest ? minplus_compose_values(rest, tail) : tail;
        have_rest = true;
    }
    if (have_rest) h.rest = std::move(rest);
    return h;
}

// One-block successor on the critical kernel: argmin_j [F_c(i, j) + w(j)].
int successor(const BarrierField& field, int i, const std::vector<double>& w) {
    const int n = field.n;
    int best_j = 0;
    double best = field.critical_.at(i, 0) + w[0];
    for (int j = 1; j < n; ++j) {
        const double s = field.critical_.at(i, j) + w[static_cast<std::size_t>(j)];
        if (s < best) {
            best = s;
            best_j = j;
        }
    }
    return best_j;
}

std::vector<double> h_column(const BarrierField& field, int i) {
    std::vector<double> col(static_cast<std::size_t>(field.n));
    for (int j = 0; j < field.n; ++j) col[static_cast<std::size_t>(j)] = field.h_at(j, i);
    return col;
}

std::vector<std::pair<double, double>> compute_gaps(const std::vector<int>& points, int n) {
    std::vector<std::pair<double, double>> gaps;
    const int count = static_cast<int>(points.size());
    if (count == 0 || count == n) return gaps;
    for (int k = 0; k < count; ++k) {
        const int i = points[static_cast<std::size_t>(k)];
        const int j = points[static_cast<std::size_t>((k + 1) % count)];
        const int span = (k + 1 < count) ? j - i : j + n - i;
        if (span > 1)
            gaps.emplace_back(static_cast<double>(i) / n, static_cast<double>(i + span) / n);
    }
    return gaps;
}

} // namespace

bool InvariantSetApprox::contains(int node) const {
    return std::binary_search(points.begin(), points.end(), node);
}

InvariantSetApprox aubry_set(const BarrierField& field, double tol) {
    tol = resolve_tol(field, tol);
    InvariantSetApprox set;
    set.kind = SetKind::Aubry;
    set.n = field.n;
    set.section = field.options.section;
    set.tol = tol;
    for (int i = 0; i < field.n; ++i)
        if (field.d_at(i, i) <= tol) set.points.push_back(i);
    if (set.points.empty())
        throw std::runtime_error(
            "aubry_set: no node satisfies d(x, x) <= " + std::to_string(tol) +
            " (min is " +
            std::to_string([&] {
                double m = field.d_at(0, 0);
                for (int i = 1; i < field.n; ++i) m = std::min(m, field.d_at(i, i));
                return m;
            }()) +
            "); the tolerance is inconsistent with the grid resolution");

    const VelocityHelper vh = make_velocity_helper(field);
    set.velocities.reserve(set.points.size());
    for (int i : set.points) {
        const int target = successor(field, i, h_column(field, i));
        set.velocities.push_back(vh.velocity(i, target));
    }
    set.gaps = compute_gaps(set.points, set.n);
    return set;
}

std::vector<std::vector<int>> static_classes(const BarrierField& field,
                                             const InvariantSetApprox& aubry, double tol) {
    tol = resolve_tol(field, tol);
    const int count = static_cast<int>(aubry.points.size());
    std::vector<int> parent(static_cast<std::size_t>(count));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int a) {
        while (parent[static_cast<std::size_t>(a)] != a) {
            parent[static_cast<std::size_t>(a)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
            a = parent[static_cast<std::size_t>(a)];
        }
        return a;
    };
    for (int a = 0; a < count; ++a)
        for (int b = a + 1; b < count; ++b) {
            if (field.d_at(aubry.points[static_cast<std::size_t>(a)],
                           aubry.points[static_cast<std::size_t>(b)]) <= tol) {
                const int ra = find(a), rb = find(b);
                if (ra != rb) parent[static_cast<std::size_t>(rb)] = ra;
            }
        }
    std::vector<std::vector<int>> classes;
    std::vector<int> root_to_class(static_cast<std::size_t>(count), -1);
    for (int a = 0; a < count; ++a) {
        const int r = find(a);
        if (root_to_class[static_cast<std::size_t>(r)] < 0) {
            root_to_class[static_cast<std::size_t>(r)] = static_cast<int>(classes.size());
            classes.emplace_back();
        }
        classes[static_cast<std::size_t>(root_to_class[static_cast<std::size_t>(r)])].push_back(
            aubry.points[static_cast<std::size_t>(a)]);
    }
    return classes;
}

InvariantSetApprox mane_set(const BarrierField& field, const InvariantSetApprox& aubry,
                            double tol) {
    tol = resolve_tol(field, tol);
    InvariantSetApprox set;
    set.kind = SetKind::Mane;
    set.n = field.n;
    set.section = field.options.section;
    set.tol = tol;

    const std::vector<int>& a = aubry.points;
    std::vector<int> exit_witness; // y' of the best chain through each member
    for (int x = 0; x < field.n; ++x) {
        if (aubry.contains(x)) {
            set.points.push_back(x);
            exit_witness.push_back(x);
            continue;
        }
        double best = std::numeric_limits<double>::infinity();
        int best_exit = a.front();
        for (int y : a)
            for (int yp : a) {
                const double v = field.h_at(y, x) + field.h_at(x, yp) - field.h_at(y, yp);
                if (v < best) {
                    best = v;
                    best_exit = yp;
                }
            }
        if (best <= tol) {
            set.points.push_back(x);
            exit_witness.push_back(best_exit);
        }
    }

    const VelocityHelper vh = make_velocity_helper(field);
    set.velocities.reserve(set.points.size());
    for (std::size_t k = 0; k < set.points.size(); ++k) {
        const int x = set.points[k];
        const int target = successor(field, x, h_column(field, exit_witness[k]));
        set.velocities.push_back(vh.velocity(x, target));
    }
    set.gaps = compute_gaps(set.points, set.n);
    return set;
}

InvariantSetApprox mather_set(const BarrierField& field, const InvariantSetApprox& aubry) {
    InvariantSetApprox set;
    set.kind = SetKind::Mather;
    set.n = field.n;
    set.section = field.options.section;
    set.tol = aubry.tol;

    const int count = static_cast<int>(aubry.points.size());
    std::vector<int> index_of(static_cast<std::size_t>(field.n), -1);
    for (int k = 0; k < count; ++k)
        index_of[static_cast<std::size_t>(aubry.points[static_cast<std::size_t>(k)])] = k;

    // Successor map restricted to the Aubry points; orbits leaving the set
    // are transient by definition.
    std::vector<int> next(static_cast<std::size_t>(count), -1);
    for (int k = 0; k < count; ++k) {
        const int i = aubry.points[static_cast<std::size_t>(k)];
        next[static_cast<std::size_t>(k)] = index_of[static_cast<std::size_t>(
            successor(field, i, h_column(field, i)))];
    }

    // Color walk: 0 = unvisited, 1 = on current path, 2 = finished.  A node
    // re-entered while on the current path closes a cycle.
    std::vector<int> color(static_cast<std::size_t>(count), 0);
    std::vector<bool> recurrent(static_cast<std::size_t>(count), false);
    for (int start = 0; start < count; ++start) {
        if (color[static_cast<std::size_t>(start)] != 0) continue;
        std::vector<int> path;
        int cur = start;
        while (cur >= 0 && color[static_cast<std::size_t>(cur)] == 0) {
            color[static_cast<std::size_t>(cur)] = 1;
            path.push_back(cur);
            cur = next[static_cast<std::size_t>(cur)];
        }
        if (cur >= 0 && color[static_cast<std::size_t>(cur)] == 1) {
            bool in_cycle = false;
            for (int node : path) {
                if (node == cur) in_cycle = true;
                if (in_cycle) recurrent[static_cast<std::size_t>(node)] = true;
            }
        }
        for (int node : path) color[static_cast<std::size_t>(node)] = 2;
    }

    for (int k = 0; k < count; ++k) {
        if (!recurrent[static_cast<std::size_t>(k)]) continue;
        set.points.push_back(aubry.points[static_cast<std::size_t>(k)]);
        set.velocities.push_back(aubry.velocities[static_cast<std::size_t>(k)]);
    }
    set.gaps = compute_gaps(set.points, set.n);
    return set;
}

bool detect_rational(double rotation, int q_max, double err_bound, int& p, int& q) {
    double x = rotation;
    long long p_prev = 1, q_prev = 0;
    long long p_cur = static_cast<long long>(std::floor(x)), q_cur = 1;
    for (int depth = 0; depth < 48; ++depth) {
        const double approx = static_cast<double>(p_cur) / static_cast<double>(q_cur);
        if (q_cur <= q_max && std::abs(rotation - approx) < err_bound) {
            p = static_cast<int>(p_cur);
            q = static_cast<int>(q_cur);
            return true;
        }
        if (q_cur > q_max) break;
        const double frac = x - std::floor(x);
        if (frac < 1e-12) break;
        x = 1.0 / frac;
        const long long a = static_cast<long long>(std::floor(x));
        const long long p_next = a * p_cur + p_prev;
        const long long q_next = a * q_cur + q_prev;
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
    }
    return false;
}

GSetResult g_set(const LagrangianSpec& spec, const OneForm& form, const GridSpec& grid,
                 double rotation, double tol, int q_max, int section, KernelCache* cache) {
    // Accept the first convergent approximating to better than one grid cell.
    int p = 0, q = 1;
    const bool rational = detect_rational(rotation, q_max, 1.0 / grid.n_space, p, q);

    GSetResult result;
    result.p = rational ? p : 0;
    result.q = rational ? q : 1;
    result.rational = rational;

    BarrierOptions options;
    options.periods_per_block = result.q;
    options.section = section;
    // Keep the total-period horizons fixed: q-block powers already advance q
    // periods each, and stretching the range q-fold would let the path
    // quantization floor swallow the small barriers the set test relies on.
    options.n_min = std::max(1, options.n_min / result.q);
    options.n_max = std::max(options.n_min + 1, options.n_max / result.q);
    options.phi_n_max = std::max(2, options.phi_n_max / result.q);
    result.field = build_barriers(spec, form, grid, options, cache);
    const InvariantSetApprox aubry = aubry_set(result.field, tol);
    result.set = mane_set(result.field, aubry, tol);
    result.set.kind = SetKind::GSet;
    return result;
}

CurveClassification classify_curve(const DiscreteCurve& curve, const BarrierField& field,
                                   double tol) {
    tol = resolve_tol(field, tol);
    const GridSpec& grid = field.grid;
    const int steps_per_block = grid.n_substeps * field.options.periods_per_block;
    const int S = curve.steps();
    if (S < steps_per_block)
        throw std::invalid_argument("classify_curve: curve spans less than one period block");
    if (S % steps_per_block != 0)
        throw std::invalid_argument(
            "classify_curve: curve must span a whole number of period blocks");
    if (std::abs(curve.dt - grid.dt()) > 1e-12)
        throw std::invalid_argument("classify_curve: curve step differs from the grid step");

    const std::vector<double> per_step = step_actions(field.spec, field.form, curve);
    std::vector<double> prefix(per_step.size() + 1, 0.0);
    for (std::size_t s = 0; s < per_step.size(); ++s) prefix[s + 1] = prefix[s] + per_step[s];

    const int blocks = S / steps_per_block;

    CurveClassification out;
    out.minimizing_excess = -std::numeric_limits<double>::infinity();
    out.semi_static_excess = -std::numeric_limits<double>::infinity();
    out.static_excess = -std::numeric_limits<double>::infinity();

    // Sequential critical powers F_c^1 .. F_c^blocks.
    std::vector<ActionKernel> powers;
    powers.reserve(static_cast<std::size_t>(blocks));
    powers.push_back(field.critical_);
    for (int k = 2; k <= blocks; ++k)
        powers.push_back(minplus_compose_values(powers.back(), field.critical_));

    const double alpha_per_block = field.alpha * field.options.periods_per_block;
    for (int a = 0; a < blocks; ++a)
        for (int b = a + 1; b <= blocks; ++b) {
            const int sa = a * steps_per_block;
            const int sb = b * steps_per_block;
            const int i = grid.snap(curve.x[static_cast<std::size_t>(sa)]);
            const int j = grid.snap(curve.x[static_cast<std::size_t>(sb)]);
            const double a_crit = (prefix[static_cast<std::size_t>(sb)] -
                                   prefix[static_cast<std::size_t>(sa)]) +
                                  alpha_per_block * (b - a);
            const double kernel_bound =
                powers[static_cast<std::size_t>(b - a - 1)].at(i, j);
            out.minimizing_excess = std::max(out.minimizing_excess, a_crit - kernel_bound);
            out.semi_static_excess =
                std::max(out.semi_static_excess, a_crit - field.phi_at(i, j));
            out.static_excess =
                std::max(out.static_excess, a_crit - (-field.phi_at(j, i)));
            ++out.windows_checked;
        }

    if (out.minimizing_excess <= tol && out.semi_static_excess <= tol &&
        out.static_excess <= tol)
        out.curve_class = CurveClass::Static;
    else if (out.minimizing_excess <= tol && out.semi_static_excess <= tol)
        out.curve_class = CurveClass::SemiStatic;
    else if (out.minimizing_excess <= tol)
        out.curve_class = CurveClass::MinimizingOnly;
    else
        out.curve_class = CurveClass::NotMinimizing;
    return out;
}

GraphCheck graph_check(const InvariantSetApprox& set, double bound, int max_cells) {
    GraphCheck out;
    const int count = static_cast<int>(set.points.size());
    if (count < 2) return out;
    for (int a = 0; a < count; ++a)
        for (int b = a + 1; b < count; ++b) {
            const int i = set.points[static_cast<std::size_t>(a)];
            const int j = set.points[static_cast<std::size_t>(b)];
            const int cells = std::min(std::abs(i - j), set.n - std::abs(i - j));
            if (cells == 0 || cells > max_cells) continue;
            const double dist = circle_dist(static_cast<double>(i) / set.n,
                                            static_cast<double>(j) / set.n);
            const double ratio = std::abs(set.velocities[static_cast<std::size_t>(a)] -
                                          set.velocities[static_cast<std::size_t>(b)]) /
                                 dist;
            out.lipschitz_constant = std::max(out.lipschitz_constant, ratio);
            if (ratio > bound) ++out.violations;
            ++out.pairs_checked;
        }
    return out;
}

} // namespace wkam

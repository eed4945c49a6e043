// Kernel construction and min-plus products.
//
// The compose inner loop is the runtime bottleneck of the whole toolkit
// (barrier fields take dozens of products at n = 512).  It runs over a
// transposed copy of the right factor so the reduction is a contiguous
// add+min scan that the compiler vectorizes.  Output rows are independent,
// so the OpenMP parallelization cannot change results.

#include "wkam/kernel.hpp"
#include "wkam/cache.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Winding candidates in tie-break order: smaller |m| first, negative before
// positive at equal magnitude.
std::vector<int> winding_order(int cap) {
    std::vector<int> order;
    order.push_back(0);
    for (int m = 1; m <= cap; ++m) {
        order.push_back(-m);
        order.push_back(m);
    }
    return order;
}

} // namespace

void ActionKernel::min_entry(int& bi, int& bj, double& bv) const {
    bi = bj = 0;
    bv = value[0];
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double v = at(i, j);
            if (v < bv) { bv = v; bi = i; bj = j; }
        }
}

ActionKernel substep_kernel(const LagrangianSpec& spec, const OneForm& form,
                            const GridSpec& grid, double t) {
    grid.validate();
    if (spec.kind == ModelKind::GeneratingFunction && grid.n_substeps != 1)
        throw std::invalid_argument(
            "substep_kernel: generating-function models require n_substeps == 1");
    const int n = grid.n_space;
    const double dt = grid.dt();
    if (spec.kind == ModelKind::Mechanical && dt > convexity_dt_threshold(spec))
        throw std::invalid_argument("substep_kernel: dt above the convexity threshold; "
                                    "raise n_substeps");

    ActionKernel k;
    k.n = n;
    k.t_start = t;
    k.t_end = t + dt;
    k.value.assign(static_cast<size_t>(n) * n, kInf);
    k.winding.assign(static_cast<size_t>(n) * n, 0);

    const std::vector<int> order = winding_order(grid.winding_cap);

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double xi = grid.node(i);
        for (int j = 0; j < n; ++j) {
            double best = kInf;
            int best_m = 0;
            for (int m : order) {
                // displacement with an exact integer numerator so that the
                // entry depends on j - i only (translation invariance)
                double delta = static_cast<double>(j - i + m * n) / n;
                double v = lifted_block(spec, form, xi, xi + delta, t, dt);
                if (v < best) { best = v; best_m = m; }
            }
            k.value[static_cast<size_t>(i) * n + j] = best;
            k.winding[static_cast<size_t>(i) * n + j] = best_m;
        }
    }
    return k;
}

namespace {

// Shared compose core.  The value reduction is a contiguous add+min scan
// (vectorized); the argmin recovery pass is scalar and therefore optional —
// barrier power loops only need values, so they skip it entirely.
void compose_into(const ActionKernel& a, const ActionKernel& b, ActionKernel& out,
                  bool with_winding, bool with_split) {
    const int n = a.n;
    if (b.n != n) throw std::invalid_argument("minplus_compose: size mismatch");
    // Splice times must agree modulo the unit period: everything here is
    // 1-periodic in time, and power loops legitimately compose a kernel with
    // a whole-period translate of itself.
    const double gap = a.t_end - b.t_start;
    if (std::abs(gap - std::nearbyint(gap)) > 1e-9)
        throw std::invalid_argument("minplus_compose: kernels not time-contiguous (mod 1)");
    out.n = n;
    out.t_start = a.t_start;
    out.t_end = a.t_end + (b.t_end - b.t_start);
    out.value.resize(static_cast<size_t>(n) * n);
    if (with_winding) out.winding.resize(static_cast<size_t>(n) * n);
    else out.winding.clear();
    if (with_split) out.split.resize(static_cast<size_t>(n) * n);
    else out.split.clear();

    // Transpose b so the j-scan is contiguous in both factors.
    std::vector<double> bt(static_cast<size_t>(n) * n);
    for (int j = 0; j < n; ++j)
        for (int kcol = 0; kcol < n; ++kcol)
            bt[static_cast<size_t>(kcol) * n + j] = b.value[static_cast<size_t>(j) * n + kcol];

#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
        const double* arow = &a.value[static_cast<size_t>(i) * n];
        for (int kcol = 0; kcol < n; ++kcol) {
            const double* bcol = &bt[static_cast<size_t>(kcol) * n];
            double best = arow[0] + bcol[0];
            for (int j = 1; j < n; ++j) {
                double s = arow[j] + bcol[j];
                best = s < best ? s : best;
            }
            const size_t idx = static_cast<size_t>(i) * n + kcol;
            out.value[idx] = best;
            if (with_winding || with_split) {
                // Recover the smallest index attaining the min; re-adding the
                // same operands rounds identically, so equality is exact.
                int arg = 0;
                for (int j = 0; j < n; ++j)
                    if (arow[j] + bcol[j] == best) { arg = j; break; }
                if (with_winding)
                    out.winding[idx] = a.winding[static_cast<size_t>(i) * n + arg] +
                                       b.winding[static_cast<size_t>(arg) * n + kcol];
                if (with_split) out.split[idx] = arg;
            }
        }
    }
}

} // namespace

ActionKernel minplus_compose(const ActionKernel& a, const ActionKernel& b) {
    ActionKernel out;
    compose_into(a, b, out, true, true);
    return out;
}

ActionKernel compose_winding(const ActionKernel& a, const ActionKernel& b) {
    ActionKernel out;
    compose_into(a, b, out, true, false);
    return out;
}

ActionKernel minplus_compose_values(const ActionKernel& a, const ActionKernel& b) {
    ActionKernel out;
    compose_into(a, b, out, false, false);
    return out;
}

std::vector<ActionKernel> substep_kernels(const LagrangianSpec& spec,
                                          const OneForm& form, const GridSpec& grid,
                                          double t0) {
    std::vector<ActionKernel> blocks;
    blocks.reserve(grid.n_substeps);
    for (int s = 0; s < grid.n_substeps; ++s)
        blocks.push_back(substep_kernel(spec, form, grid, t0 + s * grid.dt()));
    return blocks;
}

ActionKernel period_kernel(const LagrangianSpec& spec, const OneForm& form,
                           const GridSpec& grid, double t0, KernelCache* cache) {
    if (cache) {
        ActionKernel hit;
        if (cache->load(spec, form, grid, t0, hit)) return hit;
    }
    std::vector<ActionKernel> blocks = substep_kernels(spec, form, grid, t0);
    ActionKernel acc = std::move(blocks.front());
    for (size_t s = 1; s < blocks.size(); ++s)
        acc = compose_winding(acc, blocks[s]);
    if (cache) cache->store(spec, form, grid, t0, acc);
    return acc;
}

ActionKernel identity_kernel(int n) {
    ActionKernel k;
    k.n = n;
    k.value.assign(static_cast<size_t>(n) * n, kInf);
    k.winding.assign(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i) k.value[static_cast<size_t>(i) * n + i] = 0.0;
    return k;
}

ActionKernel shifted(const ActionKernel& k, double delta) {
    ActionKernel out = k;
    for (double& v : out.value) v -= delta;
    return out;
}

double kernel_lipschitz(const ActionKernel& k) {
    const int n = k.n;
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double dcol = std::abs(k.at(i, (j + 1) % n) - k.at(i, j));
            double drow = std::abs(k.at((i + 1) % n, j) - k.at(i, j));
            worst = std::max(worst, std::max(dcol, drow));
        }
    return worst * n;
}

} // namespace wkam

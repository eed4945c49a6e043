// Minimal-action kernels between grid sections and their min-plus algebra.
//
// An ActionKernel stores, for every ordered node pair (i, j), the least
// twisted action of a block (or composition of blocks) from x_i at t_start
// to x_j at t_end, minimized over winding branches, together with the total
// winding of the minimizer.  Kernels compose by the min-plus matrix product
//   (A ∘ B)(i, k) = min_j A(i, j) + B(j, k),
// which is associative exactly (the min of floats picks an element, it does
// not round).  Ties in every minimization are broken deterministically:
// windings toward smaller |m| then smaller m, intermediate nodes toward the
// smallest index.

#pragma once

#include "wkam/grid.hpp"
#include "wkam/model.hpp"

#include <cstdint>
#include <vector>

namespace wkam {

class KernelCache; // cache.hpp

struct ActionKernel {
    int n = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::vector<double> value;    // n*n row-major, action i -> j
    std::vector<int32_t> winding; // total winding of the minimizer i -> j
    // For kernels produced by minplus_compose: the intermediate node the
    // minimizer passes through, for backtracking.  Empty otherwise.
    std::vector<int32_t> split;

    double at(int i, int j) const { return value[static_cast<size_t>(i) * n + j]; }
    int32_t winding_at(int i, int j) const { return winding[static_cast<size_t>(i) * n + j]; }

    // Smallest entry and its (row, col), ties toward smaller row then col.
    void min_entry(int& i, int& j, double& v) const;
};

// Kernel of a single block [t, t + grid.dt()].  Mechanical models only,
// unless n_substeps == 1 (generating-function blocks span a full period).
ActionKernel substep_kernel(const LagrangianSpec& spec, const OneForm& form,
                            const GridSpec& grid, double t);

// Min-plus product recording split nodes for backtracking.
ActionKernel minplus_compose(const ActionKernel& a, const ActionKernel& b);

// Min-plus product with winding totals but no split bookkeeping.
ActionKernel compose_winding(const ActionKernel& a, const ActionKernel& b);

// Values-only min-plus product (no argmin pass; the power-loop fast path).
ActionKernel minplus_compose_values(const ActionKernel& a, const ActionKernel& b);

// Composition of the n_substeps block kernels spanning [t0, t0 + 1].
// With a cache, the result is stored/retrieved content-addressed.
ActionKernel period_kernel(const LagrangianSpec& spec, const OneForm& form,
                           const GridSpec& grid, double t0,
                           KernelCache* cache = nullptr);

// The n_substeps block kernels of one period, in order.
std::vector<ActionKernel> substep_kernels(const LagrangianSpec& spec,
                                          const OneForm& form, const GridSpec& grid,
                                          double t0);

// Min-plus identity (0 diagonal, +inf elsewhere); unit of composition.
ActionKernel identity_kernel(int n);

// Subtract a constant from every entry (criticalization uses value - alpha).
ActionKernel shifted(const ActionKernel& k, double delta);

// Largest |value(i, j+1) - value(i, j)| * n over all i, j (cyclic), i.e. the
// discrete Lipschitz constant in the second argument; and the same for the
// first argument.  Returns the max of the two.
double kernel_lipschitz(const ActionKernel& k);

} // namespace wkam

// Mane potentials, Peierls barriers, and the pseudometrics d and d-tilde.
//
// All four fields live on the critical kernel F_c = F - lambda (lambda the
// min-plus eigenvalue):
//   phi(i,j) = min over n in [1, phi_n_max] of F_c^n(i,j)   (Mane potential)
//   h(i,j)   = min over n in [n_min, n_max] of F_c^n(i,j)   (Peierls barrier,
//              the discrete liminf realized as a tail minimum)
//   d = h + h^T,  d_tilde = phi + phi^T.
//
// Tail minima decompose exactly in min-plus algebra:
//   min_{n in [a,b]} F^n = F^(a-1) (x) min_{n in [1, b-a+1]} F^n,
// and the prefix minimum doubles (P_2m = min(P_m, F^m (x) P_m)), because
// (x) distributes over the entrywise min bit-exactly (both sides minimize
// over the same multiset of rounded sums).  A PowCache memoizes the binary
// powers so a whole field costs O(log n_max) compositions.

#pragma once

#include "wkam/kernel.hpp"

#include <vector>

namespace wkam {

class KernelCache;

// Memoized min-plus powers of one base kernel (values only).
class PowCache {
  public:
    explicit PowCache(ActionKernel base);

    const ActionKernel& base() const { return pow2_[0]; }
    // F^(2^k), memoized squarings.
    const ActionKernel& pow2(int k);
    // F^n by binary decomposition.
    ActionKernel power(int n);
    // Entrywise min of F^1 .. F^n (exact prefix-min doubling).
    ActionKernel prefix_min(int n);
    // Entrywise min of F^n over n in [lo, hi].
    ActionKernel range_min(int lo, int hi);

  private:
    std::vector<ActionKernel> pow2_;
};

struct ManePotentialResult {
    std::vector<double> phi; // n*n row-major
    bool converged = false;  // one extra power moves nothing beyond 1e-10
    int n_used = 0;
};

// Entrywise min of critical-kernel powers F^1 .. F^n_max.
ManePotentialResult mane_potential(const ActionKernel& critical_kernel, int n_max);

struct PeierlsResult {
    std::vector<double> h; // n*n row-major
    // Fraction of entries whose sampled tail powers (n_min, midpoint, n_max)
    // stay within 1e-6 of the tail minimum; `regular` when all do.
    double regular_fraction = 0.0;
    bool regular = false;
    int n_min = 0, n_max = 0, stride = 1;
};

// Tail minimum of critical-kernel powers over n in [n_min, n_max] (stride 1
// uses the exact range decomposition; larger strides iterate explicitly).
PeierlsResult peierls_barrier(const ActionKernel& critical_kernel, int n_min,
                              int n_max, int stride = 1);

struct BarrierOptions {
    int n_min = 50;
    int n_max = 400;
    int stride = 1;
    int phi_n_max = 400;
    int section = 0;           // substep index s: barriers on F_{s/K, s/K + q}
    int periods_per_block = 1; // q: base unit of the power iteration (L^q)
};

struct BarrierField {
    int n = 0;
    double cohomology_class = 0.0;
    double alpha = 0.0; // critical value per single period
    BarrierOptions options;
    bool phi_converged = false;
    int phi_n_used = 0;
    bool h_regular = false;
    double h_regular_fraction = 0.0;

    // Everything needed to rebuild substep kernels for velocity recovery.
    LagrangianSpec spec;
    OneForm form;
    GridSpec grid;

    std::vector<double> phi, h, d, d_tilde; // n*n row-major

    double phi_at(int i, int j) const { return phi[static_cast<std::size_t>(i) * n + j]; }
    double h_at(int i, int j) const { return h[static_cast<std::size_t>(i) * n + j]; }
    double d_at(int i, int j) const { return d[static_cast<std::size_t>(i) * n + j]; }
    double d_tilde_at(int i, int j) const {
        return d_tilde[static_cast<std::size_t>(i) * n + j];
    }

    // Critical one-block kernel (q periods) the fields were built from.
    const ActionKernel& critical_kernel() const { return critical_; }
    ActionKernel critical_;

    // Detection threshold scaled to grid accuracy: 10 * Lip(F) / N.
    double default_tol() const;
};

BarrierField build_barriers(const LagrangianSpec& spec, const OneForm& form,
                            const GridSpec& grid, const BarrierOptions& options = {},
                            KernelCache* cache = nullptr);

} // namespace wkam

// Barrier fields: memoized kernel powers, Mane potential, Peierls barrier.

#include "wkam/barrier.hpp"

#include "wkam/weakkam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wkam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Entrywise min of two value matrices; time labels are kept from `a` (tail
// minima mix durations, so no single span is meaningful — what matters is
// that further compositions still splice mod 1, and all spans here are whole
// periods).
ActionKernel entrywise_min(const ActionKernel& a, const ActionKernel& b) {
    ActionKernel out;
    out.n = a.n;
    out.t_start = a.t_start;
    out.t_end = a.t_end;
    out.value.resize(a.value.size());
    for (std::size_t idx = 0; idx < a.value.size(); ++idx)
        out.value[idx] = std::min(a.value[idx], b.value[idx]);
    return out;
}

int highest_bit(int n) {
    int k = 0;
    while ((n >> (k + 1)) != 0) ++k;
    return k;
}

} // namespace

PowCache::PowCache(ActionKernel base) {
    if (base.n <= 0) throw std::invalid_argument("PowCache: empty base kernel");
    base.winding.clear();
    base.split.clear();
    pow2_.push_back(std::move(base));
}

const ActionKernel& PowCache::pow2(int k) {
    if (k < 0) throw std::invalid_argument("PowCache::pow2: negative exponent");
    while (static_cast<int>(pow2_.size()) <= k) {
        const ActionKernel& p = pow2_.back();
        pow2_.push_back(minplus_compose_values(p, p));
    }
    return pow2_[static_cast<std::size_t>(k)];
}

ActionKernel PowCache::power(int n) {
    if (n < 1) throw std::invalid_argument("PowCache::power: exponent must be >= 1");
    ActionKernel acc;
    bool have = false;
    for (int k = 0; (n >> k) != 0; ++k) {
        if (((n >> k) & 1) == 0) continue;
        const ActionKernel& p = pow2(k);
        if (!have) {
            acc = p;
            have = true;
        } else {
            acc = minplus_compose_values(acc, p);
        }
    }
    return acc;
}

ActionKernel PowCache::prefix_min(int n) {
    if (n < 1) throw std::invalid_argument("PowCache::prefix_min: length must be >= 1");
    // MSB-to-LSB doubling, invariant after each step for prefix length L:
    //   acc = min_{1 <= i <= L} F^i,   run = F^L.
    ActionKernel acc = pow2_[0];
    ActionKernel run = pow2_[0];
    for (int k = highest_bit(n) - 1; k >= 0; --k) {
        acc = entrywise_min(acc, minplus_compose_values(run, acc));
        run = minplus_compose_values(run, run);
        if ((n >> k) & 1) {
            run = minplus_compose_values(run, pow2_[0]);
            acc = entrywise_min(acc, run);
        }
    }
    return acc;
}

ActionKernel PowCache::range_min(int lo, int hi) {
    if (lo < 1 || hi < lo)
        throw std::invalid_argument("PowCache::range_min: need 1 <= lo <= hi");
    if (lo == 1) return prefix_min(hi);
    return minplus_compose_values(power(lo - 1), prefix_min(hi - lo + 1));
}

namespace {

ManePotentialResult mane_from(PowCache& pows, int n_max) {
    if (n_max < 1) throw std::invalid_argument("mane_potential: n_max must be >= 1");
    ManePotentialResult res;
    ActionKernel acc = pows.prefix_min(n_max);
    const ActionKernel next = pows.power(n_max + 1);
    double change = 0.0;
    for (std::size_t idx = 0; idx < acc.value.size(); ++idx)
        change = std::max(change, acc.value[idx] - next.value[idx]);
    res.converged = change <= 1e-10;
    res.n_used = n_max;
    res.phi = std::move(acc.value);
    return res;
}

PeierlsResult peierls_from(PowCache& pows, int n_min, int n_max, int stride) {
    if (n_min < 1 || n_max < n_min)
        throw std::invalid_argument("peierls_barrier: need 1 <= n_min <= n_max");
    if (stride < 1) throw std::invalid_argument("peierls_barrier: stride must be >= 1");
    PeierlsResult res;
    res.n_min = n_min;
    res.n_max = n_max;
    res.stride = stride;

    ActionKernel h;
    ActionKernel first, mid, last;
    if (stride == 1) {
        h = pows.range_min(n_min, n_max);
        first = pows.power(n_min);
        mid = pows.power(n_min + (n_max - n_min) / 2);
        last = pows.power(n_max);
    } else {
        const ActionKernel step = pows.power(stride);
        ActionKernel cur = pows.power(n_min);
        h = cur;
        first = cur;
        const int mid_exponent = n_min + ((n_max - n_min) / stride / 2) * stride;
        for (int n = n_min + stride; n <= n_max; n += stride) {
            cur = minplus_compose_values(cur, step);
            h = entrywise_min(h, cur);
            if (n == mid_exponent) mid = cur;
        }
        last = cur;
        if (mid.n == 0) mid = first;
    }

    // Pointwise regularity of the tail: every sampled exponent stays within
    // 1e-6 of the tail minimum (the tail minimum is a true liminf proxy; the
    // samples bound the limsup from below, so this is a necessary check, not
    // a proof).
    std::size_t regular_entries = 0;
    for (std::size_t idx = 0; idx < h.value.size(); ++idx) {
        const double hi = std::max(first.value[idx], std::max(mid.value[idx], last.value[idx]));
        if (hi - h.value[idx] <= 1e-6) ++regular_entries;
    }
    res.regular_fraction =
        h.value.empty() ? 1.0 : static_cast<double>(regular_entries) / h.value.size();
    res.regular = regular_entries == h.value.size();
    res.h = std::move(h.value);
    return res;
}

} // namespace

ManePotentialResult mane_potential(const ActionKernel& critical_kernel, int n_max) {
    PowCache pows(critical_kernel);
    return mane_from(pows, n_max);
}

PeierlsResult peierls_barrier(const ActionKernel& critical_kernel, int n_min, int n_max,
                              int stride) {
    PowCache pows(critical_kernel);
    return peierls_from(pows, n_min, n_max, stride);
}

double BarrierField::default_tol() const {
    return 10.0 * kernel_lipschitz(critical_) / n;
}

BarrierField build_barriers(const LagrangianSpec& spec, const OneForm& form,
                            const GridSpec& grid, const BarrierOptions& options,
                            KernelCache* cache) {
    if (options.section < 0 || options.section >= grid.n_substeps)
        throw std::invalid_argument("build_barriers: section out of range");
    if (options.periods_per_block < 1)
        throw std::invalid_argument("build_barriers: periods_per_block must be >= 1");

    BarrierField field;
    field.options = options;
    field.spec = spec;
    field.form = form;
    field.grid = grid;
    field.cohomology_class = form.cohomology_class;
    field.n = grid.n_space;

    // One-period kernel anchored at the requested section; q periods compose
    // the same matrix (the model is 1-periodic in time, so reusing the block
    // avoids re-rounding the trigonometry at shifted absolute times).
    const double t0 = options.section * grid.dt();
    const ActionKernel f1 = period_kernel(spec, form, grid, t0, cache);
    ActionKernel base;
    if (options.periods_per_block == 1) {
        base = f1;
    } else {
        PowCache raw(f1);
        base = raw.power(options.periods_per_block);
    }

    const double lambda = karp_min_mean(base);
    field.alpha = -lambda / options.periods_per_block;
    field.critical_ = shifted(base, lambda);
    field.critical_.winding.clear();
    field.critical_.split.clear();

    PowCache pows(field.critical_);
    ManePotentialResult mp = mane_from(pows, options.phi_n_max);
    field.phi_converged = mp.converged;
    field.phi_n_used = mp.n_used;
    field.phi = std::move(mp.phi);

    PeierlsResult pr = peierls_from(pows, options.n_min, options.n_max, options.stride);
    field.h_regular = pr.regular;
    field.h_regular_fraction = pr.regular_fraction;
    field.h = std::move(pr.h);

    const std::size_t nn = field.h.size();
    field.d.resize(nn);
    field.d_tilde.resize(nn);
    for (int i = 0; i < field.n; ++i)
        for (int j = 0; j < field.n; ++j) {
            const std::size_t ij = static_cast<std::size_t>(i) * field.n + j;
            const std::size_t ji = static_cast<std::size_t>(j) * field.n + i;
            field.d[ij] = field.h[ij] + field.h[ji];
            field.d_tilde[ij] = field.phi[ij] + field.phi[ji];
        }
    return field;
}

} // namespace wkam

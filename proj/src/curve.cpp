// Curve extraction (vector dynamic program + backtracking) and sub-grid
// refinement (cyclic coordinate descent on the lifted action).

#include "wkam/curve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wkam {

namespace {

constexpr double k_inf = std::numeric_limits<double>::infinity();

void check_sequence(const std::vector<const ActionKernel*>& kernels, const GridSpec& grid,
                    double& dt_out) {
    if (kernels.empty()) throw std::invalid_argument("minimize: empty kernel sequence");
    const int n = grid.n_space;
    double dt = kernels.front()->t_end - kernels.front()->t_start;
    for (std::size_t s = 0; s < kernels.size(); ++s) {
        const ActionKernel& k = *kernels[s];
        if (k.n != n) throw std::invalid_argument("minimize: kernel size mismatch");
        if (std::abs((k.t_end - k.t_start) - dt) > 1e-9)
            throw std::invalid_argument("minimize: non-uniform block durations");
        if (s > 0) {
            // Mod-1 splice check, as in compose: 1-periodic trains may reuse
            // one kernel object across periods.
            const double gap = kernels[s - 1]->t_end - k.t_start;
            if (std::abs(gap - std::nearbyint(gap)) > 1e-9)
                throw std::invalid_argument("minimize: kernels not time-contiguous (mod 1)");
        }
    }
    dt_out = dt;
}

DiscreteCurve dp_run(const std::vector<const ActionKernel*>& kernels, const GridSpec& grid,
                     std::optional<double> x_start, std::optional<double> x_end) {
    double dt = 0.0;
    check_sequence(kernels, grid, dt);
    const int n = grid.n_space;
    const int S = static_cast<int>(kernels.size());

    std::vector<double> u(static_cast<std::size_t>(n), 0.0);
    if (x_start) {
        std::fill(u.begin(), u.end(), k_inf);
        u[static_cast<std::size_t>(grid.snap(*x_start))] = 0.0;
    }

    std::vector<std::int32_t> arg(static_cast<std::size_t>(S) * n, 0);
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int s = 0; s < S; ++s) {
        const ActionKernel& k = *kernels[s];
        std::int32_t* as = arg.data() + static_cast<std::size_t>(s) * n;
        std::fill(v.begin(), v.end(), k_inf);
        for (int i = 0; i < n; ++i) {
            const double ui = u[static_cast<std::size_t>(i)];
            if (ui == k_inf) continue;
            const double* row = k.value.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) {
                const double cand = ui + row[j];
                if (cand < v[static_cast<std::size_t>(j)]) {
                    v[static_cast<std::size_t>(j)] = cand;
                    as[j] = static_cast<std::int32_t>(i);
                }
            }
        }
        u.swap(v);
    }

    int end_idx = 0;
    if (x_end) {
        end_idx = grid.snap(*x_end);
    } else {
        double best = k_inf;
        for (int j = 0; j < n; ++j) {
            if (u[static_cast<std::size_t>(j)] < best) {
                best = u[static_cast<std::size_t>(j)];
                end_idx = j;
            }
        }
    }
    const double action = u[static_cast<std::size_t>(end_idx)];
    if (!(action < k_inf)) throw std::runtime_error("minimize: no finite path to endpoint");

    std::vector<int> idx(static_cast<std::size_t>(S) + 1);
    idx[static_cast<std::size_t>(S)] = end_idx;
    for (int s = S - 1; s >= 0; --s)
        idx[static_cast<std::size_t>(s)] =
            arg[static_cast<std::size_t>(s) * n + idx[static_cast<std::size_t>(s) + 1]];

    DiscreteCurve c;
    c.t0 = kernels.front()->t_start;
    c.dt = dt;
    c.x.resize(static_cast<std::size_t>(S) + 1);
    c.m.resize(static_cast<std::size_t>(S));
    double displacement = 0.0;
    for (int s = 0; s <= S; ++s) c.x[static_cast<std::size_t>(s)] = grid.node(idx[static_cast<std::size_t>(s)]);
    for (int s = 0; s < S; ++s) {
        const int i = idx[static_cast<std::size_t>(s)];
        const int j = idx[static_cast<std::size_t>(s) + 1];
        const std::int32_t m = kernels[static_cast<std::size_t>(s)]->winding_at(i, j);
        c.m[static_cast<std::size_t>(s)] = m;
        displacement += static_cast<double>(j - i) / n + m;
    }
    c.action = action;
    c.rotation = displacement / (dt * S);
    return c;
}

// Golden-section minimization of f on [lo, hi]; fixed iteration count keeps
// the search deterministic.
template <typename F>
double golden_min(F&& f, double lo, double hi, int iters = 48) {
    const double inv_phi = 0.6180339887498949;
    double a = lo, b = hi;
    double x1 = b - inv_phi * (b - a);
    double x2 = a + inv_phi * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < iters; ++it) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

DiscreteCurve refine_impl(const LagrangianSpec& spec, const std::vector<const OneForm*>& forms,
                          const DiscreteCurve& curve, double tol, int max_sweeps) {
    const int S = curve.steps();
    if (S != static_cast<int>(forms.size()))
        throw std::invalid_argument("refine: one form per step required");
    if (S < 2) return curve;

    std::vector<double> X = curve.lifted();
    const double dt = curve.dt;

    auto local = [&](int k, double Xk) {
        const double t_prev = curve.time_at(k - 1);
        const double t_here = curve.time_at(k);
        return lifted_block(spec, *forms[static_cast<std::size_t>(k - 1)],
                            X[static_cast<std::size_t>(k - 1)], Xk, t_prev, dt) +
               lifted_block(spec, *forms[static_cast<std::size_t>(k)], Xk,
                            X[static_cast<std::size_t>(k + 1)], t_here, dt);
    };

    // Move window around each sample: wide enough to cover several grid
    // cells of any shipped resolution, narrow enough to stay local.
    const double window = 0.08;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_update = 0.0;
        for (int k = 1; k < S; ++k) {
            const double cur = X[static_cast<std::size_t>(k)];
            const double f_cur = local(k, cur);
            // Coarse bracket scan, then golden polish around the best sample.
            const double lo = cur - window, hi = cur + window;
            int best_i = 8;
            double best_f = f_cur;
            for (int i = 0; i <= 16; ++i) {
                const double p = lo + (hi - lo) * i / 16.0;
                const double fp = local(k, p);
                if (fp < best_f) {
                    best_f = fp;
                    best_i = i;
                }
            }
            const double bl = lo + (hi - lo) * std::max(0, best_i - 1) / 16.0;
            const double bh = lo + (hi - lo) * std::min(16, best_i + 1) / 16.0;
            const double cand = golden_min([&](double p) { return local(k, p); }, bl, bh);
            const double f_cand = local(k, cand);
            if (f_cand < f_cur) {
                X[static_cast<std::size_t>(k)] = cand;
                max_update = std::max(max_update, std::abs(cand - cur));
            }
        }
        if (max_update < tol) break;
    }

    DiscreteCurve out = curve;
    for (int s = 0; s <= S; ++s) out.x[static_cast<std::size_t>(s)] = frac01(X[static_cast<std::size_t>(s)]);
    for (int s = 0; s < S; ++s) {
        const double lift_step = X[static_cast<std::size_t>(s) + 1] - X[static_cast<std::size_t>(s)];
        const double frac_step = out.x[static_cast<std::size_t>(s) + 1] - out.x[static_cast<std::size_t>(s)];
        out.m[static_cast<std::size_t>(s)] = static_cast<std::int32_t>(std::lround(lift_step - frac_step));
    }
    double action = 0.0;
    for (int s = 0; s < S; ++s)
        action += lifted_block(spec, *forms[static_cast<std::size_t>(s)], X[static_cast<std::size_t>(s)],
                               X[static_cast<std::size_t>(s) + 1], curve.time_at(s), dt);
    out.action = action;
    out.rotation = (X[static_cast<std::size_t>(S)] - X[0]) / (dt * S);
    return out;
}

} // namespace

std::vector<double> DiscreteCurve::lifted() const {
    std::vector<double> X(x.size());
    if (x.empty()) return X;
    X[0] = x[0];
    for (std::size_t s = 0; s + 1 < x.size(); ++s)
        X[s + 1] = X[s] + (x[s + 1] - x[s]) + m[s];
    return X;
}

DiscreteCurve minimize_endpoint(const std::vector<const ActionKernel*>& kernels,
                                const GridSpec& grid, double x_start, double x_end) {
    return dp_run(kernels, grid, x_start, x_end);
}

DiscreteCurve slice_curve(const DiscreteCurve& curve, int step_begin, int step_end) {
    if (step_begin < 0 || step_end > curve.steps() || step_begin >= step_end)
        throw std::invalid_argument("slice_curve: bad step range");
    DiscreteCurve out;
    out.t0 = curve.time_at(step_begin);
    out.dt = curve.dt;
    out.x.assign(curve.x.begin() + step_begin, curve.x.begin() + step_end + 1);
    out.m.assign(curve.m.begin() + step_begin, curve.m.begin() + step_end);
    out.action = 0.0;
    const std::vector<double> X = out.lifted();
    out.rotation = (X.back() - X.front()) / (out.dt * out.steps());
    return out;
}

DiscreteCurve minimize_free(const std::vector<const ActionKernel*>& kernels,
                            const GridSpec& grid, std::optional<double> x_start,
                            std::optional<double> x_end) {
    return dp_run(kernels, grid, x_start, x_end);
}

DiscreteCurve refine_curve(const LagrangianSpec& spec, const OneForm& form,
                           const DiscreteCurve& curve, double tol, int max_sweeps) {
    std::vector<const OneForm*> forms(static_cast<std::size_t>(curve.steps()), &form);
    return refine_impl(spec, forms, curve, tol, max_sweeps);
}

DiscreteCurve refine_curve_multi(const LagrangianSpec& spec, const StepForms& step_forms,
                                 const DiscreteCurve& curve, double tol, int max_sweeps) {
    return refine_impl(spec, step_forms.forms, curve, tol, max_sweeps);
}

double curve_action(const LagrangianSpec& spec, const OneForm& form,
                    const DiscreteCurve& curve) {
    StepForms sf;
    sf.forms.assign(static_cast<std::size_t>(curve.steps()), &form);
    return curve_action_multi(spec, sf, curve);
}

double curve_action_multi(const LagrangianSpec& spec, const StepForms& step_forms,
                          const DiscreteCurve& curve) {
    const std::vector<double> X = curve.lifted();
    double action = 0.0;
    for (int s = 0; s < curve.steps(); ++s)
        action += lifted_block(spec, *step_forms.forms[static_cast<std::size_t>(s)],
                               X[static_cast<std::size_t>(s)], X[static_cast<std::size_t>(s) + 1],
                               curve.time_at(s), curve.dt);
    return action;
}

std::vector<double> step_actions(const LagrangianSpec& spec, const OneForm& form,
                                 const DiscreteCurve& curve) {
    const std::vector<double> X = curve.lifted();
    std::vector<double> per_step(static_cast<std::size_t>(curve.steps()));
    for (int s = 0; s < curve.steps(); ++s)
        per_step[static_cast<std::size_t>(s)] =
            lifted_block(spec, form, X[static_cast<std::size_t>(s)],
                         X[static_cast<std::size_t>(s) + 1], curve.time_at(s), curve.dt);
    return per_step;
}

} // namespace wkam

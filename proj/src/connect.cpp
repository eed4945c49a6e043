// Connecting-orbit machinery: rotation-aware gap analysis, step forms carried
// by localized bumps, dwell estimation against Mather-set approximations,
// cohomology schedules with seam-corrected kernel sequences, and end-to-end
// orbit extraction with visit verification plus an extremality audit.
//
// The one nonstandard ingredient is the seam correction.  Transition periods
// score blocks against "base class + ramped bump"; the following dwell scores
// against the full target class.  The two pairings differ by the exact
// differential of psi(X) = delta * (G(X) - X), G the bump's lifted
// cumulative, so psi is added to the junction column of the last transition
// block.  The composed program then minimizes one consistent functional:
// unmodified Euler-Lagrange residuals are proportional to the bump density at
// the sample, hence vanish identically outside the bump supports, and the
// only leftover is a bounded boundary potential at the final free endpoint
// (subtracted from the reported orbit action).

#include "wkam/connect.hpp"

#include "wkam/weakkam.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace wkam {

namespace {

constexpr double k_pi = 3.14159265358979323846;
constexpr double k_inf = std::numeric_limits<double>::infinity();

bool is_autonomous(const LagrangianSpec& spec) {
    if (spec.kind == ModelKind::GeneratingFunction) return true;
    for (const TrigTerm& term : spec.potential)
        if (term.k != 0) return false;
    return true;
}

// Set-membership threshold for the connect-layer set computations: the
// configured factor times the one-block boundary sensitivity per cell.
double membership_tol(const LagrangianSpec& spec, const OneForm& form, const GridSpec& grid,
                      int section, const ConnectOptions& options) {
    const ActionKernel k = substep_kernel(spec, form, grid, section * grid.dt());
    return options.set_tol_factor * kernel_lipschitz(k) / grid.n_space;
}

SectionGap widest_arc(const GSetResult& g, int section) {
    SectionGap sg;
    sg.section = section;
    for (const auto& arc : g.set.gaps) {
        const double len = arc.second - arc.first;
        if (len > sg.length) {
            sg.length = len;
            sg.lo = arc.first;
            sg.hi = arc.second;
        }
    }
    return sg;
}

// Step form from an existing gap report (shared by build_step_form and
// build_schedule, which memoizes the reports per class).
StepForm make_step_form(const GapReport& report, double c, double delta,
                        const GridSpec& grid, const ConnectOptions& options) {
    if (!(options.delta_cap > 0.0))
        throw std::invalid_argument("build_step_form: delta_cap must be positive");
    if (std::abs(delta) > options.delta_cap + 1e-12)
        throw std::invalid_argument("build_step_form: |delta| = " + std::to_string(std::abs(delta)) +
                                    " exceeds delta_cap = " + std::to_string(options.delta_cap));
    StepForm sf;
    sf.base_class = c;
    sf.delta_class = delta;
    sf.ramp_periods = std::max(1, options.transition_periods);
    if (delta == 0.0) return sf;

    if (!report.has_gap)
        throw std::runtime_error("build_step_form: minimizing set at class " + std::to_string(c) +
                                 " leaves no gap wider than " + std::to_string(options.gap_cells) +
                                 " cells");
    sf.zero = false;
    sf.section = report.widest_section;
    sf.gap_lo = frac01(report.widest_lo);
    sf.gap_hi = sf.gap_lo + report.widest_length;

    const int n = grid.n_space;
    const double len = report.widest_length;
    const double inset = std::max(len / 4.0, 1.0 / n);
    const double w = len - 2.0 * inset;
    if (!(w > 1.0 / n))
        throw std::runtime_error("build_step_form: gap at class " + std::to_string(c) +
                                 " too narrow to host a bump");
    const double s_lo = frac01(sf.gap_lo + inset);
    sf.density.assign(static_cast<std::size_t>(n), 0.0);
    for (int i = 0; i < n; ++i) {
        const double u = frac01(grid.node(i) - s_lo);
        if (u < w) sf.density[static_cast<std::size_t>(i)] = 1.0 - std::cos(2.0 * k_pi * u / w);
    }
    // Probe form: normalizes the mass and computes the support arc exactly
    // the way every later pairing will see it.
    const OneForm probe =
        OneForm::with_density(delta, sf.density, TimeProfile::constant_one());
    sf.support_lo = probe.support_lo;
    sf.support_hi = probe.support_hi;
    return sf;
}

// ===== per-class artifacts ==================================================

struct ClassData {
    BarrierField field;
    std::vector<double> points;     // target positions (section 0)
    std::vector<double> velocities; // graph section over the targets
    bool fallback = false;          // Mather stand-in empty, Aubry set used
    std::vector<double> dist;       // per-node circle distance to the targets
};

ClassData make_class_data(const LagrangianSpec& spec, double c, const GridSpec& grid,
                          const ConnectOptions& options, KernelCache* cache) {
    ClassData data;
    BarrierOptions bo = options.barrier;
    bo.section = 0;
    bo.periods_per_block = 1;
    const OneForm form = OneForm::uniform_form(c);
    data.field = build_barriers(spec, form, grid, bo, cache);

    const double tol = membership_tol(spec, form, grid, 0, options);
    const InvariantSetApprox aubry = aubry_set(data.field, tol);
    const InvariantSetApprox mather = mather_set(data.field, aubry);
    const InvariantSetApprox& target = mather.points.empty() ? aubry : mather;
    data.fallback = mather.points.empty();
    data.points.reserve(target.points.size());
    for (std::size_t k = 0; k < target.points.size(); ++k) {
        data.points.push_back(grid.node(target.points[k]));
        data.velocities.push_back(target.velocities[k]);
    }

    const int n = grid.n_space;
    data.dist.assign(static_cast<std::size_t>(n), k_inf);
    for (int i = 0; i < n; ++i)
        for (double p : data.points)
            data.dist[static_cast<std::size_t>(i)] =
                std::min(data.dist[static_cast<std::size_t>(i)], circle_dist(grid.node(i), p));
    return data;
}

// Smallest horizon whose sampled canonical minimizers all pass within
// epsilon of the target set.  The running closest approach of the canonical
// (smallest-argmin) path to node j propagates forward with the value table,
// so no backtracking is needed.
DwellEstimate dwell_from(const ClassData& data, const GridSpec& grid, double epsilon,
                         const ConnectOptions& options) {
    if (!(epsilon > 0.0))
        throw std::invalid_argument("dwell_estimate: epsilon must be positive");
    DwellEstimate est;
    est.epsilon = epsilon;
    est.mather_fallback = data.fallback;

    const int n = grid.n_space;
    const ActionKernel& F = data.field.critical_kernel();
    std::vector<double> ft(static_cast<std::size_t>(n) * n); // transposed for row scans
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            ft[static_cast<std::size_t>(j) * n + i] = F.at(i, j);

    const int cap = std::max(1, options.dwell_cap);
    const int m = std::clamp(options.endpoint_samples, 2, n);
    std::vector<int> samples;
    for (int k = 0; k < m; ++k) {
        const int i = static_cast<int>(static_cast<long long>(k) * n / m);
        if (samples.empty() || samples.back() != i) samples.push_back(i);
    }

    struct State {
        std::vector<double> val, md, nval, nmd;
    };
    std::vector<State> st(samples.size());
    for (std::size_t si = 0; si < samples.size(); ++si) {
        st[si].val.assign(static_cast<std::size_t>(n), k_inf);
        st[si].md.assign(static_cast<std::size_t>(n), k_inf);
        st[si].nval.resize(static_cast<std::size_t>(n));
        st[si].nmd.resize(static_cast<std::size_t>(n));
        st[si].val[static_cast<std::size_t>(samples[si])] = 0.0;
        st[si].md[static_cast<std::size_t>(samples[si])] =
            data.dist[static_cast<std::size_t>(samples[si])];
    }

    double worst = k_inf;
    for (int t = 1; t <= cap; ++t) {
        worst = 0.0;
        for (std::size_t si = 0; si < samples.size(); ++si) {
            State& s = st[si];
            for (int j = 0; j < n; ++j) {
                const double* col = &ft[static_cast<std::size_t>(j) * n];
                double best = k_inf;
                double best_md = k_inf;
                for (int i = 0; i < n; ++i) {
                    const double cand = s.val[static_cast<std::size_t>(i)] + col[i];
                    if (cand < best) {
                        best = cand;
                        best_md = s.md[static_cast<std::size_t>(i)];
                    }
                }
                s.nval[static_cast<std::size_t>(j)] = best;
                s.nmd[static_cast<std::size_t>(j)] =
                    std::min(best_md, data.dist[static_cast<std::size_t>(j)]);
            }
            s.val.swap(s.nval);
            s.md.swap(s.nmd);
            for (int e : samples) worst = std::max(worst, s.md[static_cast<std::size_t>(e)]);
        }
        if (worst <= epsilon) {
            est.periods = t;
            est.achieved = true;
            est.worst_distance = worst;
            return est;
        }
    }
    est.periods = cap;
    est.achieved = false;
    est.worst_distance = worst;
    return est;
}

double target_distance(const std::vector<double>& points, double x) {
    double d = k_inf;
    for (double p : points) d = std::min(d, circle_dist(x, p));
    return d;
}

} // namespace

// ===== gap analysis and the R-space dichotomy ===============================

GapReport gap_analysis(const LagrangianSpec& spec, double c, const GridSpec& grid,
                       const ConnectOptions& options, KernelCache* cache) {
    grid.validate();
    GapReport report;
    report.cohomology_class = c;
    report.autonomous = is_autonomous(spec);

    const OneForm form = OneForm::uniform_form(c);
    const int horizon = std::max(10, options.rotation_horizon);
    report.rotation = rotation_number(spec, form, grid, horizon, cache);
    report.rational =
        detect_rational(report.rotation, options.q_max, 1.0 / grid.n_space, report.p, report.q);
    if (!report.rational) {
        report.p = 0;
        report.q = 1;
    }

    const int sections = grid.n_substeps;
    const double min_len = options.gap_cells / grid.n_space;
    report.sections.reserve(static_cast<std::size_t>(sections));
    if (report.autonomous) {
        // Time-independent blocks: every section sees the same kernel, so
        // one set serves all of them.
        const double tol = membership_tol(spec, form, grid, 0, options);
        const GSetResult g = g_set(spec, form, grid, report.rotation, tol, 1, 0, cache);
        const SectionGap sg0 = widest_arc(g, 0);
        for (int s = 0; s < sections; ++s) {
            SectionGap sg = sg0;
            sg.section = s;
            sg.has_gap = sg.length > min_len;
            report.sections.push_back(sg);
        }
    } else {
        for (int s = 0; s < sections; ++s) {
            const double tol = membership_tol(spec, form, grid, s, options);
            const GSetResult g = g_set(spec, form, grid, report.rotation, tol, 1, s, cache);
            SectionGap sg = widest_arc(g, s);
            sg.has_gap = sg.length > min_len;
            report.sections.push_back(sg);
        }
    }
    for (const SectionGap& sg : report.sections) {
        report.has_gap = report.has_gap || sg.has_gap;
        if (sg.length > report.widest_length) {
            report.widest_length = sg.length;
            report.widest_lo = sg.lo;
            report.widest_hi = sg.hi;
            report.widest_section = sg.section;
        }
    }
    return report;
}

RSpace r_space(const LagrangianSpec& spec, double c, const GridSpec& grid,
               const ConnectOptions& options, KernelCache* cache) {
    return gap_analysis(spec, c, grid, options, cache).has_gap ? RSpace::Full
                                                               : RSpace::Trivial;
}

CEquivalenceReport c_equivalence(const LagrangianSpec& spec, double c0, double c1,
                                 const GridSpec& grid, int n_samples,
                                 const ConnectOptions& options, KernelCache* cache) {
    CEquivalenceReport report;
    if (c0 == c1) {
        report.equivalent = true;
        report.samples.push_back(c0);
        return report;
    }
    if (c1 < c0) std::swap(c0, c1);
    const int m = std::max(2, n_samples);
    for (int k = 0; k < m; ++k) {
        const double c = c0 + (c1 - c0) * k / (m - 1);
        report.samples.push_back(c);
        if (r_space(spec, c, grid, options, cache) == RSpace::Trivial) {
            report.failing_class = c;
            return report;
        }
    }
    report.equivalent = true;
    return report;
}

// ===== step forms ===========================================================

StepForm build_step_form(const LagrangianSpec& spec, double c, double delta,
                         const GridSpec& grid, const ConnectOptions& options,
                         KernelCache* cache) {
    grid.validate();
    if (!(options.delta_cap > 0.0))
        throw std::invalid_argument("build_step_form: delta_cap must be positive");
    if (std::abs(delta) > options.delta_cap + 1e-12)
        throw std::invalid_argument("build_step_form: |delta| = " + std::to_string(std::abs(delta)) +
                                    " exceeds delta_cap = " + std::to_string(options.delta_cap));
    if (delta == 0.0) {
        StepForm sf;
        sf.base_class = c;
        sf.ramp_periods = std::max(1, options.transition_periods);
        return sf;
    }
    const GapReport report = gap_analysis(spec, c, grid, options, cache);
    return make_step_form(report, c, delta, grid, options);
}

OneForm transition_form(const StepForm& step, double t_start) {
    if (step.zero) return OneForm::uniform_form(step.base_class);
    OneForm f = OneForm::with_density(
        step.delta_class, step.density,
        TimeProfile::smoothstep(t_start, t_start + step.ramp_periods));
    f.extra_uniform = step.base_class;
    return f;
}

// ===== dwell estimation =====================================================

DwellEstimate dwell_estimate(const LagrangianSpec& spec, double c, const GridSpec& grid,
                             double epsilon, const ConnectOptions& options,
                             KernelCache* cache) {
    grid.validate();
    const ClassData data = make_class_data(spec, c, grid, options, cache);
    return dwell_from(data, grid, epsilon, options);
}

// ===== schedules ============================================================

CohomologySchedule build_schedule(const LagrangianSpec& spec,
                                  const std::vector<double>& classes,
                                  const std::vector<double>& epsilons,
                                  const GridSpec& grid, const ConnectOptions& options,
                                  KernelCache* cache) {
    grid.validate();
    if (classes.empty())
        throw std::invalid_argument("build_schedule: at least one class required");
    if (classes.size() != epsilons.size())
        throw std::invalid_argument("build_schedule: classes and epsilons sizes differ");
    for (double eps : epsilons)
        if (!(eps > 0.0))
            throw std::invalid_argument("build_schedule: epsilons must be positive");
    if (!(options.delta_cap > 0.0))
        throw std::invalid_argument("build_schedule: delta_cap must be positive");
    if (options.dwell_override < 0)
        throw std::invalid_argument("build_schedule: dwell_override must be >= 0");

    CohomologySchedule sch;
    sch.spec = spec;
    sch.grid = grid;
    sch.options = options;

    // Ladder: split jumps wider than delta_cap into equal sub-steps.  Target
    // endpoints are copied verbatim; inserted intermediates inherit the
    // target entry's epsilon.
    struct Entry {
        double c;
        double eps;
        int idx;
    };
    std::vector<Entry> ladder;
    ladder.push_back({classes[0], epsilons[0], 0});
    for (std::size_t i = 0; i + 1 < classes.size(); ++i) {
        const double a = classes[i];
        const double b = classes[i + 1];
        const int parts =
            std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / options.delta_cap - 1e-12)));
        for (int j = 1; j <= parts; ++j) {
            const double c = (j == parts) ? b : a + (b - a) * j / parts;
            ladder.push_back({c, epsilons[i + 1], j == parts ? static_cast<int>(i + 1) : -1});
        }
    }
    const std::size_t L = ladder.size();

    // Per-class artifacts, memoized on the exact class value: the ladder
    // revisits classes freely and each barrier field is the expensive part.
    // Deques keep references stable across later insertions.
    std::deque<std::pair<double, ClassData>> class_memo;
    auto data_for = [&](double c) -> const ClassData& {
        for (const auto& kv : class_memo)
            if (kv.first == c) return kv.second;
        class_memo.emplace_back(c, make_class_data(spec, c, grid, options, cache));
        return class_memo.back().second;
    };
    std::deque<std::pair<double, GapReport>> gap_memo;
    auto gaps_for = [&](double c) -> const GapReport& {
        for (const auto& kv : gap_memo)
            if (kv.first == c) return kv.second;
        gap_memo.emplace_back(c, gap_analysis(spec, c, grid, options, cache));
        return gap_memo.back().second;
    };

    // Classes: targets and dwell sizes.
    sch.classes.reserve(L);
    for (std::size_t k = 0; k < L; ++k) {
        const ClassData& data = data_for(ladder[k].c);
        ScheduleClass sc;
        sc.cohomology_class = ladder[k].c;
        sc.epsilon = ladder[k].eps;
        sc.input_index = ladder[k].idx;
        sc.target_points = data.points;
        sc.target_velocities = data.velocities;
        sc.mather_fallback = data.fallback;
        if (options.dwell_override > 0) {
            sc.dwell_periods = options.dwell_override;
        } else {
            sc.estimate = dwell_from(data, grid, ladder[k].eps, options);
            if (!sc.estimate.achieved)
                throw std::runtime_error(
                    "build_schedule: class " + std::to_string(ladder[k].c) +
                    " dwell estimate not achieved within " + std::to_string(options.dwell_cap) +
                    " periods (worst distance " + std::to_string(sc.estimate.worst_distance) + ")");
            sc.dwell_periods = sc.estimate.periods + std::max(0, options.dwell_pad);
        }
        sch.classes.push_back(std::move(sc));
    }

    // Transitions: the class-change test and the step forms.
    sch.transitions.reserve(L > 0 ? L - 1 : 0);
    for (std::size_t k = 0; k + 1 < L; ++k) {
        const double c_src = ladder[k].c;
        const double delta = ladder[k + 1].c - c_src;
        if (delta != 0.0 && !gaps_for(c_src).has_gap)
            throw std::runtime_error("build_schedule: step " + std::to_string(k) + " (class " +
                                     std::to_string(c_src) + " -> " +
                                     std::to_string(ladder[k + 1].c) +
                                     ") blocked: minimizing set leaves no gap");
        sch.transitions.push_back(delta == 0.0
                                      ? make_step_form(GapReport{}, c_src, 0.0, grid, options)
                                      : make_step_form(gaps_for(c_src), c_src, delta, grid, options));
    }

    // Period layout: dwell windows interleaved with transitions.
    sch.dwell_start.resize(L);
    sch.dwell_end.resize(L);
    sch.transition_start.resize(sch.transitions.size());
    int p = 0;
    for (std::size_t k = 0; k < L; ++k) {
        sch.dwell_start[k] = p;
        p += sch.classes[k].dwell_periods;
        sch.dwell_end[k] = p;
        if (k < sch.transitions.size()) {
            sch.transition_start[k] = p;
            p += sch.transitions[k].ramp_periods;
        }
    }
    sch.total_periods = p;

    for (std::size_t k = 0; k < sch.transitions.size(); ++k)
        sch.transition_forms.push_back(
            transition_form(sch.transitions[k], static_cast<double>(sch.transition_start[k])));

    // Kernels.  Stationary kernels are built once per distinct class at
    // t0 = 0 and shared across every dwell period of that class (the models
    // are 1-periodic in time, so integer start times give the same blocks).
    struct ClassKernels {
        std::shared_ptr<const ActionKernel> period;
        std::vector<std::shared_ptr<const ActionKernel>> blocks;
    };
    std::deque<std::pair<double, ClassKernels>> kernel_memo;
    auto kernels_for = [&](double c) -> const ClassKernels& {
        for (const auto& kv : kernel_memo)
            if (kv.first == c) return kv.second;
        const OneForm f = OneForm::uniform_form(c);
        ClassKernels ck;
        ck.period = std::make_shared<ActionKernel>(period_kernel(spec, f, grid, 0.0, cache));
        std::vector<ActionKernel> blocks = substep_kernels(spec, f, grid, 0.0);
        ck.blocks.reserve(blocks.size());
        for (ActionKernel& b : blocks)
            ck.blocks.push_back(std::make_shared<ActionKernel>(std::move(b)));
        kernel_memo.emplace_back(c, std::move(ck));
        return kernel_memo.back().second;
    };

    const int n = grid.n_space;
    sch.kernel_sequence.reserve(static_cast<std::size_t>(sch.total_periods));
    for (std::size_t k = 0; k < L; ++k) {
        const double c_k = ladder[k].c;
        const ClassKernels& ck = kernels_for(c_k);
        for (int q = sch.dwell_start[k]; q < sch.dwell_end[k]; ++q) {
            sch.kernel_sequence.push_back(ck.period);
            for (const auto& b : ck.blocks) sch.block_sequence.push_back(b);
            sch.period_forms.push_back(OneForm::uniform_form(c_k));
            sch.period_class.push_back(static_cast<int>(k));
        }
        if (k >= sch.transitions.size()) continue;

        const StepForm& sf = sch.transitions[k];
        if (sf.zero) {
            // Identity transition: the window dwells on the source class and
            // reuses its kernel objects outright.
            for (int q = 0; q < sf.ramp_periods; ++q) {
                sch.kernel_sequence.push_back(ck.period);
                for (const auto& b : ck.blocks) sch.block_sequence.push_back(b);
                sch.period_forms.push_back(OneForm::uniform_form(c_k));
                sch.period_class.push_back(static_cast<int>(k));
            }
            continue;
        }
        const OneForm& ft = sch.transition_forms[k];
        const double t_start = static_cast<double>(sch.transition_start[k]);
        for (int q = 0; q < sf.ramp_periods; ++q) {
            std::vector<ActionKernel> blocks = substep_kernels(spec, ft, grid, t_start + q);
            if (q == sf.ramp_periods - 1) {
                // Seam correction: fold psi(X) = delta * (G(X) - X) into the
                // junction column so the next dwell's plain pairing splices
                // without a spurious boundary differential.
                ActionKernel& last = blocks.back();
                for (int j = 0; j < n; ++j) {
                    const double xj = grid.node(j);
                    const double corr = sf.delta_class * (ft.cum(xj) - xj);
                    for (int i = 0; i < n; ++i)
                        last.value[static_cast<std::size_t>(i) * n + j] += corr;
                }
            }
            ActionKernel composite = blocks[0];
            for (std::size_t b = 1; b < blocks.size(); ++b)
                composite = minplus_compose(composite, blocks[b]);
            sch.kernel_sequence.push_back(
                std::make_shared<ActionKernel>(std::move(composite)));
            for (ActionKernel& b : blocks)
                sch.block_sequence.push_back(std::make_shared<ActionKernel>(std::move(b)));
            sch.period_forms.push_back(ft);
            sch.period_class.push_back(static_cast<int>(k));
        }
    }
    return sch;
}

// ===== connecting orbits ====================================================

namespace {

// Junction potentials: sample index -> (delta, form) for every completed
// nonzero transition.
struct Junction {
    int sample = 0;
    double delta = 0.0;
    const OneForm* form = nullptr;
};

std::vector<Junction> schedule_junctions(const CohomologySchedule& sch) {
    std::vector<Junction> junctions;
    const int K = sch.grid.n_substeps;
    for (std::size_t k = 0; k < sch.transitions.size(); ++k) {
        const StepForm& sf = sch.transitions[k];
        if (sf.zero) continue;
        Junction j;
        j.sample = (sch.transition_start[k] + sf.ramp_periods) * K;
        j.delta = sf.delta_class;
        j.form = &sch.transition_forms[k];
        junctions.push_back(j);
    }
    return junctions;
}

double junction_potential(const std::vector<Junction>& junctions, int sample, double X) {
    double v = 0.0;
    for (const Junction& j : junctions)
        if (j.sample == sample) v += j.delta * (j.form->cum(X) - X);
    return v;
}

// Same deterministic golden-section polish as the generic curve refiner.
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

// Cyclic coordinate descent on the schedule objective (blocks scored with
// their period's form, plus the junction potentials).  Mirrors the generic
// refiner; the extra potentials keep the polished curve stationary for the
// same functional the dynamic program minimized.
DiscreteCurve refine_schedule_curve(const CohomologySchedule& sch, const DiscreteCurve& curve,
                                    double tol, int max_sweeps) {
    const int S = curve.steps();
    if (S < 2) return curve;
    const int K = sch.grid.n_substeps;
    const LagrangianSpec& spec = sch.spec;
    const std::vector<Junction> junctions = schedule_junctions(sch);

    std::vector<double> X = curve.lifted();
    const double dt = curve.dt;
    auto form_at = [&](int s) -> const OneForm& {
        return sch.period_forms[static_cast<std::size_t>(s / K)];
    };
    auto local = [&](int k, double Xk) {
        double v = lifted_block(spec, form_at(k - 1), X[static_cast<std::size_t>(k - 1)], Xk,
                                curve.time_at(k - 1), dt) +
                   lifted_block(spec, form_at(k), Xk, X[static_cast<std::size_t>(k + 1)],
                                curve.time_at(k), dt);
        return v + junction_potential(junctions, k, Xk);
    };

    const double window = 0.08;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_update = 0.0;
        for (int k = 1; k < S; ++k) {
            const double cur = X[static_cast<std::size_t>(k)];
            const double f_cur = local(k, cur);
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
    for (int s = 0; s <= S; ++s)
        out.x[static_cast<std::size_t>(s)] = frac01(X[static_cast<std::size_t>(s)]);
    for (int s = 0; s < S; ++s) {
        const double lift_step = X[static_cast<std::size_t>(s) + 1] - X[static_cast<std::size_t>(s)];
        const double frac_step =
            out.x[static_cast<std::size_t>(s) + 1] - out.x[static_cast<std::size_t>(s)];
        out.m[static_cast<std::size_t>(s)] = static_cast<std::int32_t>(std::lround(lift_step - frac_step));
    }
    double action = 0.0;
    for (int s = 0; s < S; ++s)
        action += lifted_block(spec, form_at(s), X[static_cast<std::size_t>(s)],
                               X[static_cast<std::size_t>(s) + 1], curve.time_at(s), dt);
    for (const Junction& j : junctions)
        action += j.delta * (j.form->cum(X[static_cast<std::size_t>(j.sample)]) -
                             X[static_cast<std::size_t>(j.sample)]);
    out.action = action;
    out.rotation = (X[static_cast<std::size_t>(S)] - X[0]) / (dt * S);
    return out;
}

} // namespace

ConnectingOrbitResult connecting_orbit(const CohomologySchedule& sch) {
    if (sch.block_sequence.empty())
        throw std::invalid_argument("connecting_orbit: empty schedule");
    std::vector<const ActionKernel*> blocks;
    blocks.reserve(sch.block_sequence.size());
    for (const auto& b : sch.block_sequence) blocks.push_back(b.get());

    ConnectingOrbitResult res;
    DiscreteCurve dp = minimize_free(blocks, sch.grid);
    res.dp_action = dp.action;
    res.curve = refine_schedule_curve(sch, dp, 1e-10, 2000);

    // Orbit action against the accumulated closed form: the objective minus
    // the boundary potential the seam corrections leave at the free endpoint.
    const std::vector<double> X = res.curve.lifted();
    double terminal_bias = 0.0;
    for (std::size_t k = 0; k < sch.transitions.size(); ++k) {
        const StepForm& sf = sch.transitions[k];
        if (sf.zero) continue;
        terminal_bias += sf.delta_class * (sch.transition_forms[k].cum(X.back()) - X.back());
    }
    res.action = res.curve.action - terminal_bias;

    // Visits: closest period-boundary sample of each dwell window.
    const int K = sch.grid.n_substeps;
    const int S = res.curve.steps();
    const double dt = res.curve.dt;
    auto fd_velocity = [&](int s) {
        if (s == 0) return (X[1] - X[0]) / dt;
        if (s == S) return (X[static_cast<std::size_t>(S)] - X[static_cast<std::size_t>(S) - 1]) / dt;
        return (X[static_cast<std::size_t>(s) + 1] - X[static_cast<std::size_t>(s) - 1]) / (2.0 * dt);
    };

    res.verified = true;
    for (std::size_t k = 0; k < sch.classes.size(); ++k) {
        const ScheduleClass& sc = sch.classes[k];
        res.mather_fallback = res.mather_fallback || sc.mather_fallback;
        int best_period = sch.dwell_start[k];
        double best_dist = k_inf;
        for (int p = sch.dwell_start[k]; p <= sch.dwell_end[k]; ++p) {
            const double d =
                target_distance(sc.target_points, res.curve.x[static_cast<std::size_t>(p) * K]);
            if (d < best_dist) {
                best_dist = d;
                best_period = p;
            }
        }
        const int sample = best_period * K;
        res.visit_periods.push_back(best_period);
        res.visit_times.push_back(res.curve.time_at(sample));
        res.visit_distances.push_back(best_dist);

        double mismatch = k_inf;
        if (!sc.target_points.empty()) {
            std::size_t nearest = 0;
            double nd = k_inf;
            for (std::size_t i = 0; i < sc.target_points.size(); ++i) {
                const double d = circle_dist(res.curve.x[static_cast<std::size_t>(sample)],
                                             sc.target_points[i]);
                if (d < nd) {
                    nd = d;
                    nearest = i;
                }
            }
            mismatch = std::abs(fd_velocity(sample) - sc.target_velocities[nearest]);
        }
        res.visit_velocity_mismatch.push_back(mismatch);

        const int s0 = sch.dwell_start[k] * K;
        const int s1 = sch.dwell_end[k] * K;
        res.window_rotations.push_back(
            (X[static_cast<std::size_t>(s1)] - X[static_cast<std::size_t>(s0)]) /
            (dt * (s1 - s0)));

        res.verified = res.verified && best_dist <= sc.epsilon;
    }
    return res;
}

// ===== extremality audit ====================================================

ExtremalReport verify_extremal(const CohomologySchedule& sch, const DiscreteCurve& curve) {
    const LagrangianSpec& spec = sch.spec;
    const std::vector<double> X = curve.lifted();
    const int S = curve.steps();
    const double dt = curve.dt;
    if (S < 2) return ExtremalReport{};

    auto inside_support = [&](double x) {
        for (const StepForm& sf : sch.transitions) {
            if (sf.zero) continue;
            const double len = frac01(sf.support_hi - sf.support_lo);
            if (len == 0.0) continue;
            const double u = frac01(x - sf.support_lo);
            if (u > 0.0 && u < len) return true;
        }
        return false;
    };

    ExtremalReport rep;
    for (int s = 1; s < S; ++s) {
        double residual;
        if (spec.kind == ModelKind::GeneratingFunction) {
            residual = generating_block_d2(spec, X[static_cast<std::size_t>(s) - 1],
                                           X[static_cast<std::size_t>(s)]) +
                       generating_block_d1(spec, X[static_cast<std::size_t>(s)],
                                           X[static_cast<std::size_t>(s) + 1]);
        } else {
            const double Xp = X[static_cast<std::size_t>(s) - 1];
            const double Xc = X[static_cast<std::size_t>(s)];
            const double Xn = X[static_cast<std::size_t>(s) + 1];
            const double t_prev = curve.time_at(s - 1);
            const double t_here = curve.time_at(s);
            const double d2 = (Xc - Xp) / dt -
                              0.5 * dt * potential_dx(spec, 0.5 * (Xp + Xc), t_prev + 0.5 * dt);
            const double d1 = -(Xn - Xc) / dt -
                              0.5 * dt * potential_dx(spec, 0.5 * (Xc + Xn), t_here + 0.5 * dt);
            residual = d2 + d1;
        }
        if (inside_support(curve.x[static_cast<std::size_t>(s)])) {
            rep.max_inside = std::max(rep.max_inside, std::abs(residual));
            ++rep.inside_samples;
        } else {
            rep.max_outside = std::max(rep.max_outside, std::abs(residual));
            ++rep.outside_samples;
        }
    }
    return rep;
}

} // namespace wkam

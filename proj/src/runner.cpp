// Task pipelines and artifact emission.  Every artifact except the manifest
// timings is a pure function of the configuration and artifact version:
// number formatting goes through to_chars and JSON objects serialize in
// sorted key order.

#include "wkam/runner.hpp"

#include "wkam/cache.hpp"
#include "wkam/csv.hpp"
#include "wkam/sets.hpp"
#include "wkam/weakkam.hpp"

#include <json.hpp>
#ifdef _OPENMP
#include <omp.h>
#endif

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <utility>

namespace wkam {

namespace {

using nlohmann::json;

struct RunContext {
    const ExperimentConfig& cfg;
    std::unique_ptr<KernelCache> cache;
    RunResult result;
    std::vector<std::pair<std::string, double>> stages;
    json summary;

    KernelCache* cache_ptr() { return cache.get(); }

    void warn(std::string message) { result.warnings.push_back(std::move(message)); }

    void emit(const std::string& name) { result.files.push_back(name); }

    template <typename F>
    auto stage(const std::string& name, F&& body) {
        const auto start = std::chrono::steady_clock::now();
        if constexpr (std::is_void_v<decltype(body())>) {
            body();
            stages.emplace_back(name, std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - start)
                                          .count());
        } else {
            auto value = body();
            stages.emplace_back(name, std::chrono::duration<double>(
                                          std::chrono::steady_clock::now() - start)
                                          .count());
            return value;
        }
    }
};

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("runner: cannot write " + path.string());
    f << doc.dump(2) << '\n';
    if (!f) throw std::runtime_error("runner: write failed for " + path.string());
}

void write_manifest(RunContext& ctx) {
    json manifest;
    manifest["artifact_version"] = k_artifact_version;
    manifest["config_hash"] = config_hash(ctx.cfg);
    manifest["task"] = task_name(ctx.cfg.task);
    manifest["cache"] = {{"hits", ctx.cache ? ctx.cache->hits() : 0},
                         {"misses", ctx.cache ? ctx.cache->misses() : 0}};
    manifest["warnings"] = ctx.result.warnings;
    json stages = json::array();
    for (const auto& [name, seconds] : ctx.stages)
        stages.push_back({{"name", name}, {"seconds", seconds}});
    manifest["stages"] = stages;
    manifest["exit_code"] = ctx.result.exit_code;
    write_json(ctx.cfg.out_dir / "manifest.json", manifest);
    ctx.emit("manifest.json");
}

double node_x(const GridSpec& grid, int i) { return grid.node(i); }

// ===== alpha / regularity ===================================================

void run_alpha(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    AlphaTable table = ctx.stage("alpha", [&] {
        return alpha_function(cfg.model, cfg.classes, cfg.grid, ctx.cache_ptr());
    });

    struct ClassRow {
        double rotation = 0.0;
        RegularityReport regularity;
    };
    std::vector<ClassRow> rows(cfg.classes.size());
    ctx.stage("regularity", [&] {
        for (std::size_t i = 0; i < cfg.classes.size(); ++i) {
            const OneForm form = OneForm::uniform_form(cfg.classes[i]);
            rows[i].rotation =
                rotation_number(cfg.model, form, cfg.grid, 60, ctx.cache_ptr());
            rows[i].regularity = regularity_test(cfg.model, form, cfg.grid,
                                                 cfg.regularity_max_n, ctx.cache_ptr());
        }
    });

    CsvWriter csv(cfg.out_dir / "alpha.csv",
                  {"c", "alpha", "alpha_prime", "rotation", "regular", "period_detected"});
    json classes = json::array();
    for (std::size_t i = 0; i < cfg.classes.size(); ++i) {
        const AlphaSample& s = table.samples[i];
        const ClassRow& row = rows[i];
        csv.field(s.c)
            .field(s.alpha)
            .field(s.alpha_prime)
            .field(row.rotation)
            .field(row.regularity.regular ? 1 : 0)
            .field(row.regularity.period_detected);
        csv.end_row();
        classes.push_back({{"c", s.c},
                           {"alpha", s.alpha},
                           {"alpha_prime", s.alpha_prime},
                           {"rotation", row.rotation},
                           {"regular", row.regularity.regular},
                           {"oscillation", row.regularity.oscillation},
                           {"period_detected", row.regularity.period_detected}});
        if (!row.regularity.regular && row.regularity.period_detected == 0)
            ctx.warn("semigroup iteration did not settle at class " + format_double(s.c));
    }
    ctx.emit("alpha.csv");
    ctx.summary["classes"] = classes;
}

// ===== barrier ==============================================================

void run_barrier(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    BarrierOptions options = cfg.barrier;
    options.section = cfg.section;
    const int base = cfg.grid.snap(cfg.base_point);

    json classes = json::array();
    for (double c : cfg.classes) {
        BarrierField field = ctx.stage("barriers c=" + format_double(c), [&] {
            return build_barriers(cfg.model, OneForm::uniform_form(c), cfg.grid, options,
                                  ctx.cache_ptr());
        });
        const std::string name = "barrier_" + format_double(c) + ".csv";
        CsvWriter csv(cfg.out_dir / name, {"x", "phi", "h", "d", "d_tilde", "d_diag"});
        for (int i = 0; i < field.n; ++i) {
            csv.field(node_x(cfg.grid, i))
                .field(field.phi_at(base, i))
                .field(field.h_at(base, i))
                .field(field.d_at(base, i))
                .field(field.d_tilde_at(base, i))
                .field(field.d_at(i, i));
            csv.end_row();
        }
        ctx.emit(name);
        classes.push_back({{"c", c},
                           {"alpha", field.alpha},
                           {"base_point", node_x(cfg.grid, base)},
                           {"section", cfg.section},
                           {"phi_converged", field.phi_converged},
                           {"h_regular", field.h_regular},
                           {"h_regular_fraction", field.h_regular_fraction}});
        if (!field.phi_converged)
            ctx.warn("potential power iteration still moving at class " + format_double(c));
    }
    ctx.summary["classes"] = classes;
}

// ===== sets =================================================================

void run_sets(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    BarrierOptions options = cfg.barrier;
    options.section = cfg.section;

    json classes = json::array();
    for (double c : cfg.classes) {
        const OneForm form = OneForm::uniform_form(c);
        BarrierField field = ctx.stage("barriers c=" + format_double(c), [&] {
            return build_barriers(cfg.model, form, cfg.grid, options, ctx.cache_ptr());
        });
        InvariantSetApprox aubry = aubry_set(field, cfg.set_tol);
        InvariantSetApprox mane = mane_set(field, aubry, cfg.set_tol);
        InvariantSetApprox mather = mather_set(field, aubry);
        const double rotation =
            rotation_number(cfg.model, form, cfg.grid, 60, ctx.cache_ptr());
        GSetResult g = ctx.stage("g-set c=" + format_double(c), [&] {
            return g_set(cfg.model, form, cfg.grid, rotation, cfg.set_tol, cfg.connect.q_max,
                         cfg.section, ctx.cache_ptr());
        });

        auto velocity_of = [](const InvariantSetApprox& set, int node) -> const double* {
            for (std::size_t k = 0; k < set.points.size(); ++k)
                if (set.points[k] == node) return &set.velocities[k];
            return nullptr;
        };

        const std::string name = "sets_" + format_double(c) + ".csv";
        CsvWriter csv(cfg.out_dir / name, {"x", "d", "in_aubry", "in_mane", "in_g", "velocity"});
        for (int i = 0; i < field.n; ++i) {
            csv.field(node_x(cfg.grid, i))
                .field(field.d_at(i, i))
                .field(aubry.contains(i) ? 1 : 0)
                .field(mane.contains(i) ? 1 : 0)
                .field(g.set.contains(i) ? 1 : 0);
            const double* v = velocity_of(aubry, i);
            if (!v) v = velocity_of(mane, i);
            if (!v) v = velocity_of(g.set, i);
            if (v)
                csv.field(*v);
            else
                csv.field(std::string_view(""));
            csv.end_row();
        }
        ctx.emit(name);
        classes.push_back({{"c", c},
                           {"alpha", field.alpha},
                           {"section", cfg.section},
                           {"tol", aubry.tol},
                           {"rotation", rotation},
                           {"rational", g.rational},
                           {"p", g.p},
                           {"q", g.q},
                           {"aubry_points", aubry.points.size()},
                           {"mane_points", mane.points.size()},
                           {"mather_points", mather.points.size()},
                           {"g_points", g.set.points.size()}});
    }
    ctx.summary["classes"] = classes;
}

// ===== connect ==============================================================

void run_connect(RunContext& ctx) {
    const ExperimentConfig& cfg = ctx.cfg;
    std::vector<double> classes, epsilons;
    for (const ScheduleEntry& entry : cfg.schedule) {
        classes.push_back(entry.cohomology_class);
        epsilons.push_back(entry.epsilon);
    }

    CohomologySchedule schedule = ctx.stage("schedule", [&] {
        return build_schedule(cfg.model, classes, epsilons, cfg.grid, cfg.connect,
                              ctx.cache_ptr());
    });
    ConnectingOrbitResult orbit =
        ctx.stage("orbit", [&] { return connecting_orbit(schedule); });
    ExtremalReport residuals =
        ctx.stage("verify", [&] { return verify_extremal(schedule, orbit.curve); });

    for (const ScheduleClass& sc : schedule.classes)
        if (sc.mather_fallback)
            ctx.warn("Mather stand-in empty at class " +
                     format_double(sc.cohomology_class) + "; Aubry set used as target");

    // Per-sample trace: each sample belongs to the period containing it (the
    // final sample to the last period), and 'window_index' names the ladder
    // class owning that period.
    const int K = cfg.grid.n_substeps;
    const int S = orbit.curve.steps();
    const std::vector<double> lifted = orbit.curve.lifted();
    CsvWriter csv(cfg.out_dir / "orbit.csv",
                  {"t", "x", "v_fd", "window_index", "dist_to_target"});
    for (int s = 0; s <= S; ++s) {
        const int period = std::min(s / K, schedule.total_periods - 1);
        const int owner = schedule.period_class[static_cast<std::size_t>(period)];
        const std::vector<double>& targets =
            schedule.classes[static_cast<std::size_t>(owner)].target_points;
        double dist = 1.0;
        for (double y : targets)
            dist = std::min(dist, circle_dist(orbit.curve.x[static_cast<std::size_t>(s)], y));
        double v_fd;
        if (s == 0)
            v_fd = (lifted[1] - lifted[0]) / orbit.curve.dt;
        else if (s == S)
            v_fd = (lifted[static_cast<std::size_t>(S)] - lifted[static_cast<std::size_t>(S) - 1]) /
                   orbit.curve.dt;
        else
            v_fd = (lifted[static_cast<std::size_t>(s) + 1] -
                    lifted[static_cast<std::size_t>(s) - 1]) /
                   (2.0 * orbit.curve.dt);
        csv.field(orbit.curve.time_at(s))
            .field(orbit.curve.x[static_cast<std::size_t>(s)])
            .field(v_fd)
            .field(owner)
            .field(dist);
        csv.end_row();
    }
    ctx.emit("orbit.csv");

    json ladder = json::array();
    for (const ScheduleClass& sc : schedule.classes)
        ladder.push_back({{"class", sc.cohomology_class},
                          {"epsilon", sc.epsilon},
                          {"input_index", sc.input_index},
                          {"dwell_periods", sc.dwell_periods},
                          {"mather_fallback", sc.mather_fallback}});
    ctx.summary["verified"] = orbit.verified;
    ctx.summary["visit_times"] = orbit.visit_times;
    ctx.summary["distances"] = orbit.visit_distances;
    ctx.summary["velocity_mismatch"] = orbit.visit_velocity_mismatch;
    ctx.summary["visit_periods"] = orbit.visit_periods;
    ctx.summary["window_rotations"] = orbit.window_rotations;
    ctx.summary["action"] = orbit.action;
    ctx.summary["dp_action"] = orbit.dp_action;
    ctx.summary["total_periods"] = schedule.total_periods;
    ctx.summary["mather_fallback"] = orbit.mather_fallback;
    ctx.summary["ladder"] = ladder;
    ctx.summary["residuals"] = {{"max_outside", residuals.max_outside},
                                {"max_inside", residuals.max_inside},
                                {"outside_samples", residuals.outside_samples},
                                {"inside_samples", residuals.inside_samples}};

    if (!orbit.verified) ctx.result.exit_code = 2;
}

} // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    std::filesystem::create_directories(config.out_dir);
#ifdef _OPENMP
    if (config.workers > 0) omp_set_num_threads(config.workers);
#endif

    RunContext ctx{config,
                   config.cache_dir.empty() ? nullptr
                                            : std::make_unique<KernelCache>(config.cache_dir),
                   {},
                   {},
                   json::object()};
    ctx.summary["task"] = task_name(config.task);

    try {
        switch (config.task) {
            case TaskKind::Alpha:
            case TaskKind::Regularity: run_alpha(ctx); break;
            case TaskKind::Barrier: run_barrier(ctx); break;
            case TaskKind::Sets: run_sets(ctx); break;
            case TaskKind::Connect: run_connect(ctx); break;
        }
    } catch (const std::exception& e) {
        ctx.warn(std::string("error: ") + e.what());
        ctx.result.exit_code = 1;
        write_manifest(ctx);
        throw;
    }

    if (ctx.result.exit_code == 0 && !ctx.result.warnings.empty()) ctx.result.exit_code = 3;

    ctx.summary["warnings"] = ctx.result.warnings;
    write_json(config.out_dir / "summary.json", ctx.summary);
    ctx.emit("summary.json");
    write_manifest(ctx);
    return ctx.result;
}

} // namespace wkam

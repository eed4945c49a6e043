// Strict JSON configuration parsing.  Every object is checked against an
// explicit key list, so typos and misplaced task parameters fail loudly with
// the offending path instead of being silently ignored.

#include "wkam/config.hpp"

#include "wkam/cache.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace wkam {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& origin, const std::string& where,
                       const std::string& message) {
    throw std::runtime_error(origin + ": " + (where.empty() ? "" : where + ": ") + message);
}

void reject_unknown(const json& object, const std::set<std::string>& allowed,
                    const std::string& origin, const std::string& where) {
    for (const auto& item : object.items())
        if (!allowed.count(item.key()))
            fail(origin, where, "unknown key '" + item.key() + "'");
}

const json* find(const json& object, const char* key) {
    auto it = object.find(key);
    return it == object.end() ? nullptr : &*it;
}

const json& require(const json& object, const char* key, const std::string& origin,
                    const std::string& where) {
    const json* v = find(object, key);
    if (!v) fail(origin, where, std::string("missing required key '") + key + "'");
    return *v;
}

double as_number(const json& v, const std::string& origin, const std::string& where) {
    if (!v.is_number()) fail(origin, where, "expected a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& origin, const std::string& where) {
    if (!v.is_number_integer()) fail(origin, where, "expected an integer");
    return v.get<int>();
}

std::string as_string(const json& v, const std::string& origin, const std::string& where) {
    if (!v.is_string()) fail(origin, where, "expected a string");
    return v.get<std::string>();
}

const json& as_object(const json& v, const std::string& origin, const std::string& where) {
    if (!v.is_object()) fail(origin, where, "expected an object");
    return v;
}

const json& as_array(const json& v, const std::string& origin, const std::string& where) {
    if (!v.is_array()) fail(origin, where, "expected an array");
    return v;
}

TaskKind parse_task(const std::string& name, const std::string& origin) {
    if (name == "alpha") return TaskKind::Alpha;
    if (name == "barrier") return TaskKind::Barrier;
    if (name == "sets") return TaskKind::Sets;
    if (name == "regularity") return TaskKind::Regularity;
    if (name == "connect") return TaskKind::Connect;
    fail(origin, "task", "unknown task '" + name +
                             "' (expected alpha, barrier, sets, regularity, or connect)");
}

LagrangianSpec parse_model(const json& node, const std::string& origin) {
    const std::string where = "model";
    const json& object = as_object(node, origin, where);
    const std::string kind = as_string(require(object, "kind", origin, where), origin,
                                       where + ".kind");
    if (kind == "free") {
        reject_unknown(object, {"kind"}, origin, where);
        return LagrangianSpec::free_particle();
    }
    if (kind == "pendulum") {
        reject_unknown(object, {"kind"}, origin, where);
        return LagrangianSpec::pendulum();
    }
    if (kind == "standard") {
        reject_unknown(object, {"kind", "coupling"}, origin, where);
        const double coupling =
            as_number(require(object, "coupling", origin, where), origin, where + ".coupling");
        if (!(coupling > 0.0)) fail(origin, where + ".coupling", "must be positive");
        return LagrangianSpec::standard_family(coupling);
    }
    if (kind == "mechanical") {
        reject_unknown(object, {"kind", "potential"}, origin, where);
        const json& terms =
            as_array(require(object, "potential", origin, where), origin, where + ".potential");
        if (terms.empty()) fail(origin, where + ".potential", "needs at least one term");
        std::vector<TrigTerm> potential;
        for (std::size_t i = 0; i < terms.size(); ++i) {
            const std::string tw = where + ".potential[" + std::to_string(i) + "]";
            const json& t = as_object(terms[i], origin, tw);
            reject_unknown(t, {"j", "k", "a", "b"}, origin, tw);
            TrigTerm term;
            term.j = as_int(require(t, "j", origin, tw), origin, tw + ".j");
            term.k = as_int(require(t, "k", origin, tw), origin, tw + ".k");
            term.a = find(t, "a") ? as_number(*find(t, "a"), origin, tw + ".a") : 0.0;
            term.b = find(t, "b") ? as_number(*find(t, "b"), origin, tw + ".b") : 0.0;
            if (term.j < 0) fail(origin, tw + ".j", "must be >= 0");
            potential.push_back(term);
        }
        return LagrangianSpec::mechanical(potential);
    }
    fail(origin, where + ".kind",
         "unknown model kind '" + kind + "' (expected free, pendulum, mechanical, or standard)");
}

GridSpec parse_grid(const json& node, const std::string& origin) {
    const std::string where = "grid";
    const json& object = as_object(node, origin, where);
    reject_unknown(object, {"n_space", "n_substeps", "winding_cap"}, origin, where);
    GridSpec grid;
    grid.n_space = as_int(require(object, "n_space", origin, where), origin, where + ".n_space");
    grid.n_substeps =
        as_int(require(object, "n_substeps", origin, where), origin, where + ".n_substeps");
    if (const json* w = find(object, "winding_cap"))
        grid.winding_cap = as_int(*w, origin, where + ".winding_cap");
    try {
        grid.validate();
    } catch (const std::exception& e) {
        fail(origin, where, e.what());
    }
    return grid;
}

ConnectOptions parse_connect_options(const json& node, const std::string& origin) {
    const std::string where = "options";
    const json& object = as_object(node, origin, where);
    reject_unknown(object,
                   {"delta_cap", "gap_cells", "transition_periods", "dwell_cap", "dwell_pad",
                    "dwell_override", "endpoint_samples", "rotation_horizon", "q_max",
                    "set_tol_factor"},
                   origin, where);
    ConnectOptions opts;
    auto number = [&](const char* key, double& slot) {
        if (const json* v = find(object, key)) slot = as_number(*v, origin, where + "." + key);
    };
    auto integer = [&](const char* key, int& slot) {
        if (const json* v = find(object, key)) slot = as_int(*v, origin, where + "." + key);
    };
    number("delta_cap", opts.delta_cap);
    number("gap_cells", opts.gap_cells);
    integer("transition_periods", opts.transition_periods);
    integer("dwell_cap", opts.dwell_cap);
    integer("dwell_pad", opts.dwell_pad);
    integer("dwell_override", opts.dwell_override);
    integer("endpoint_samples", opts.endpoint_samples);
    integer("rotation_horizon", opts.rotation_horizon);
    integer("q_max", opts.q_max);
    number("set_tol_factor", opts.set_tol_factor);
    if (!(opts.delta_cap > 0.0)) fail(origin, where + ".delta_cap", "must be positive");
    if (opts.dwell_override < 0) fail(origin, where + ".dwell_override", "must be >= 0");
    if (opts.dwell_pad < 0) fail(origin, where + ".dwell_pad", "must be >= 0");
    if (!(opts.set_tol_factor > 0.0)) fail(origin, where + ".set_tol_factor", "must be positive");
    return opts;
}

BarrierOptions parse_barrier_options(const json& node, const std::string& origin) {
    const std::string where = "barrier_options";
    const json& object = as_object(node, origin, where);
    reject_unknown(object, {"n_min", "n_max", "stride", "phi_n_max"}, origin, where);
    BarrierOptions opts;
    auto integer = [&](const char* key, int& slot) {
        if (const json* v = find(object, key)) slot = as_int(*v, origin, where + "." + key);
    };
    integer("n_min", opts.n_min);
    integer("n_max", opts.n_max);
    integer("stride", opts.stride);
    integer("phi_n_max", opts.phi_n_max);
    if (opts.n_min < 1) fail(origin, where + ".n_min", "must be >= 1");
    if (opts.n_max <= opts.n_min) fail(origin, where + ".n_max", "must exceed n_min");
    if (opts.stride < 1) fail(origin, where + ".stride", "must be >= 1");
    if (opts.phi_n_max < 2) fail(origin, where + ".phi_n_max", "must be >= 2");
    return opts;
}

std::vector<double> parse_classes(const json& node, const std::string& origin) {
    const std::string where = "classes";
    const json& array = as_array(node, origin, where);
    if (array.empty()) fail(origin, where, "needs at least one class");
    std::vector<double> classes;
    for (std::size_t i = 0; i < array.size(); ++i) {
        const double c =
            as_number(array[i], origin, where + "[" + std::to_string(i) + "]");
        if (!std::isfinite(c))
            fail(origin, where + "[" + std::to_string(i) + "]", "must be finite");
        classes.push_back(c);
    }
    return classes;
}

std::vector<ScheduleEntry> parse_schedule(const json& node, const std::string& origin) {
    const std::string where = "schedule";
    const json& array = as_array(node, origin, where);
    if (array.empty()) fail(origin, where, "needs at least one entry");
    std::vector<ScheduleEntry> schedule;
    for (std::size_t i = 0; i < array.size(); ++i) {
        const std::string ew = where + "[" + std::to_string(i) + "]";
        const json& entry = as_object(array[i], origin, ew);
        reject_unknown(entry, {"class", "epsilon"}, origin, ew);
        ScheduleEntry se;
        se.cohomology_class =
            as_number(require(entry, "class", origin, ew), origin, ew + ".class");
        se.epsilon = as_number(require(entry, "epsilon", origin, ew), origin, ew + ".epsilon");
        if (!std::isfinite(se.cohomology_class)) fail(origin, ew + ".class", "must be finite");
        if (!(se.epsilon > 0.0)) fail(origin, ew + ".epsilon", "must be positive");
        schedule.push_back(se);
    }
    return schedule;
}

void forbid(const json& root, const char* key, TaskKind task, const std::string& origin) {
    if (find(root, key))
        fail(origin, key,
             std::string("not valid for task '") + task_name(task) + "'");
}

} // namespace

const char* task_name(TaskKind task) {
    switch (task) {
        case TaskKind::Alpha: return "alpha";
        case TaskKind::Barrier: return "barrier";
        case TaskKind::Sets: return "sets";
        case TaskKind::Regularity: return "regularity";
        case TaskKind::Connect: return "connect";
    }
    return "?";
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(origin + ": " + e.what());
    }
    if (!root.is_object()) fail(origin, "", "top level must be an object");

    reject_unknown(root,
                   {"version", "task", "model", "grid", "out", "cache", "workers", "seed",
                    "classes", "base_point", "section", "set_tol", "regularity_max_n",
                    "schedule", "options", "barrier_options"},
                   origin, "");

    ExperimentConfig cfg;
    cfg.version = as_int(require(root, "version", origin, ""), origin, "version");
    if (cfg.version != 1)
        fail(origin, "version", "unsupported schema version " + std::to_string(cfg.version));
    cfg.task = parse_task(as_string(require(root, "task", origin, ""), origin, "task"), origin);
    cfg.model = parse_model(require(root, "model", origin, ""), origin);
    cfg.grid = parse_grid(require(root, "grid", origin, ""), origin);

    if (const json* v = find(root, "out"))
        cfg.out_dir = as_string(*v, origin, "out");
    if (const json* v = find(root, "cache"))
        cfg.cache_dir = as_string(*v, origin, "cache");
    if (const json* v = find(root, "workers")) {
        cfg.workers = as_int(*v, origin, "workers");
        if (cfg.workers < 0) fail(origin, "workers", "must be >= 0");
    }
    if (const json* v = find(root, "seed")) cfg.seed = as_int(*v, origin, "seed");

    const bool wants_classes = cfg.task != TaskKind::Connect;
    if (wants_classes) {
        cfg.classes = parse_classes(require(root, "classes", origin, ""), origin);
        const bool is_alpha =
            cfg.task == TaskKind::Alpha || cfg.task == TaskKind::Regularity;
        if (is_alpha && cfg.classes.size() < 2)
            fail(origin, "classes", "alpha table needs at least 2 classes");
        forbid(root, "schedule", cfg.task, origin);
        forbid(root, "options", cfg.task, origin);
    } else {
        cfg.schedule = parse_schedule(require(root, "schedule", origin, ""), origin);
        forbid(root, "classes", cfg.task, origin);
        if (const json* v = find(root, "options"))
            cfg.connect = parse_connect_options(*v, origin);
    }

    if (cfg.task == TaskKind::Barrier) {
        if (const json* v = find(root, "base_point")) {
            cfg.base_point = as_number(*v, origin, "base_point");
            if (!(cfg.base_point >= 0.0) || !(cfg.base_point < 1.0))
                fail(origin, "base_point", "must lie in [0, 1)");
        }
    } else {
        forbid(root, "base_point", cfg.task, origin);
    }

    if (cfg.task == TaskKind::Barrier || cfg.task == TaskKind::Sets) {
        if (const json* v = find(root, "section")) {
            cfg.section = as_int(*v, origin, "section");
            if (cfg.section < 0 || cfg.section >= cfg.grid.n_substeps)
                fail(origin, "section", "must lie in [0, n_substeps)");
        }
    } else {
        forbid(root, "section", cfg.task, origin);
    }

    if (cfg.task == TaskKind::Sets) {
        if (const json* v = find(root, "set_tol")) {
            cfg.set_tol = as_number(*v, origin, "set_tol");
            if (!(cfg.set_tol > 0.0)) fail(origin, "set_tol", "must be positive");
        }
    } else {
        forbid(root, "set_tol", cfg.task, origin);
    }

    if (cfg.task == TaskKind::Alpha || cfg.task == TaskKind::Regularity) {
        if (const json* v = find(root, "regularity_max_n")) {
            cfg.regularity_max_n = as_int(*v, origin, "regularity_max_n");
            if (cfg.regularity_max_n < 10)
                fail(origin, "regularity_max_n", "must be >= 10");
        }
    } else {
        forbid(root, "regularity_max_n", cfg.task, origin);
    }

    if (cfg.task == TaskKind::Barrier || cfg.task == TaskKind::Sets ||
        cfg.task == TaskKind::Connect) {
        if (const json* v = find(root, "barrier_options"))
            cfg.barrier = parse_barrier_options(*v, origin);
        if (cfg.task == TaskKind::Connect) cfg.connect.barrier = cfg.barrier;
    } else {
        forbid(root, "barrier_options", cfg.task, origin);
    }

    // Canonical form: nlohmann objects iterate in sorted key order, so a
    // compact dump of the parsed document is a stable fingerprint.
    cfg.canonical = root.dump();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("config: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << f.rdbuf();
    return parse_config(buffer.str(), path.filename().string());
}

std::string config_hash(const ExperimentConfig& config) {
    std::uint64_t h = fnv1a(config.canonical);
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return s;
}

} // namespace wkam

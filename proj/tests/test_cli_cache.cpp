// Tests for the persistence and front-end layers: kernel cache (round-trip
// bit identity, key sensitivity, garbage collection), CSV formatting,
// configuration parsing with its strict schema, and the experiment runner
// (artifact layout, byte-level determinism, exit codes).
//
// Numeric expectations are either closed-form (free-particle alpha values
// at grid-representable classes are exact powers of two) or frozen from
// independently checked runs of the same pipeline.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "wkam/cache.hpp"
#include "wkam/config.hpp"
#include "wkam/csv.hpp"
#include "wkam/kernel.hpp"
#include "wkam/model.hpp"
#include "wkam/runner.hpp"

#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace wkam;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "wkam_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

// Runs fn, requires that it throws E, and checks the message contains needle.
template <typename E, typename Fn>
void check_throws_containing(Fn&& fn, const std::string& needle) {
    bool threw = false;
    try {
        fn();
    } catch (const E& e) {
        threw = true;
        INFO("message: " << e.what());
        CHECK(contains(e.what(), needle));
    }
    CHECK(threw);
}

bool same_kernel(const ActionKernel& a, const ActionKernel& b) {
    if (a.n != b.n || a.t_start != b.t_start || a.t_end != b.t_end) return false;
    if (a.value.size() != b.value.size() || a.winding.size() != b.winding.size())
        return false;
    for (std::size_t i = 0; i < a.value.size(); ++i)
        if (a.value[i] != b.value[i]) return false;
    for (std::size_t i = 0; i < a.winding.size(); ++i)
        if (a.winding[i] != b.winding[i]) return false;
    return true;
}

GridSpec tiny_grid() { return GridSpec{32, 1, 2}; }

} // namespace

// --------------------------------------------------------------------------
// format_double / CsvWriter
// --------------------------------------------------------------------------

TEST_CASE("format_double emits shortest round-trip strings") {
    CHECK(format_double(0.0) == "0");
    CHECK(format_double(1.0) == "1");
    CHECK(format_double(0.5) == "0.5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(0.25) == "0.25");
    CHECK(format_double(-0.125) == "-0.125");
    CHECK(format_double(0.00390625) == "0.00390625"); // 1/256
}

TEST_CASE("format_double round-trips exactly on random doubles") {
    std::mt19937_64 rng(20260814);
    std::uniform_real_distribution<double> mant(-1.0, 1.0);
    std::uniform_int_distribution<int> expo(-40, 40);
    for (int trial = 0; trial < 2000; ++trial) {
        const double v = std::ldexp(mant(rng), expo(rng));
        const std::string s = format_double(v);
        const double back = std::strtod(s.c_str(), nullptr);
        CHECK(back == v);
    }
    // Sign of zero survives the trip.
    const std::string nz = format_double(-0.0);
    CHECK(std::signbit(std::strtod(nz.c_str(), nullptr)));
}

TEST_CASE("CsvWriter enforces the declared column count") {
    const fs::path dir = fresh_dir("csv");
    const fs::path file = dir / "t.csv";
    {
        CsvWriter w(file, {"a", "b", "c"});
        w.field(1).field(0.5).field("x");
        w.end_row();
        w.field(2).field(-0.25).field("y");
        w.end_row();
    }
    CHECK(read_file(file) == "a,b,c\n1,0.5,x\n2,-0.25,y\n");

    CsvWriter bad(dir / "bad.csv", {"a", "b"});
    bad.field(1);
    CHECK_THROWS_AS(bad.end_row(), std::logic_error);   // too few
    CsvWriter bad2(dir / "bad2.csv", {"a"});
    bad2.field(1).field(2);
    CHECK_THROWS_AS(bad2.end_row(), std::logic_error);  // too many
}

// --------------------------------------------------------------------------
// Kernel cache
// --------------------------------------------------------------------------

TEST_CASE("cache round-trip is bit identical and counts hits") {
    const fs::path dir = fresh_dir("cache_rt");
    const LagrangianSpec spec = LagrangianSpec::pendulum();
    const GridSpec grid = tiny_grid();
    const OneForm form = OneForm::uniform_form(0.5);

    const ActionKernel fresh = period_kernel(spec, form, grid, 0.0, nullptr);
    {
        KernelCache cache(dir);
        ActionKernel out;
        CHECK_FALSE(cache.load(spec, form, grid, 0.0, out));
        CHECK(cache.misses() == 1);
        cache.store(spec, form, grid, 0.0, fresh);
        REQUIRE(cache.load(spec, form, grid, 0.0, out));
        CHECK(cache.hits() == 1);
        CHECK(same_kernel(out, fresh));
    }
    // A separate cache instance reads the same bytes back.
    {
        KernelCache cache(dir);
        ActionKernel out;
        REQUIRE(cache.load(spec, form, grid, 0.0, out));
        CHECK(same_kernel(out, fresh));
    }
    // period_kernel itself goes through the cache and returns identical data.
    {
        KernelCache cache(dir);
        const ActionKernel warm = period_kernel(spec, form, grid, 0.0, &cache);
        CHECK(cache.hits() == 1);
        CHECK(same_kernel(warm, fresh));
    }
}

TEST_CASE("cache keys separate every ingredient of the build recipe") {
    const LagrangianSpec spec = LagrangianSpec::pendulum();
    const GridSpec grid = tiny_grid();
    const OneForm form = OneForm::uniform_form(0.5);

    const std::string base = KernelCache::key(spec, form, grid, 0.0);
    CHECK(KernelCache::key(spec, form, grid, 0.0) == base); // deterministic

    CHECK(KernelCache::key(spec, form, grid, 0.25) != base);              // t0
    CHECK(KernelCache::key(spec, form, GridSpec{64, 1, 2}, 0.0) != base); // n
    CHECK(KernelCache::key(spec, form, GridSpec{32, 2, 2}, 0.0) != base); // substeps
    CHECK(KernelCache::key(spec, form, GridSpec{32, 1, 3}, 0.0) != base); // cap
    CHECK(KernelCache::key(LagrangianSpec::free_particle(), form, grid, 0.0) != base);
    CHECK(KernelCache::key(spec, OneForm::uniform_form(0.25), grid, 0.0) != base);

    OneForm shifted = form;
    shifted.extra_uniform = 0.0625;
    CHECK(KernelCache::key(spec, shifted, grid, 0.0) != base);

    // A non-uniform density with the same class is a different recipe.
    OneForm bump = form;
    bump.uniform = false;
    bump.density.assign(static_cast<std::size_t>(grid.n_space), 0.5);
    bump.density[3] += 0.25;
    bump.density[7] -= 0.25;
    CHECK(KernelCache::key(spec, bump, grid, 0.0) != base);
}

TEST_CASE("cache load rejects corrupt files as a miss") {
    const fs::path dir = fresh_dir("cache_bad");
    const LagrangianSpec spec = LagrangianSpec::free_particle();
    const GridSpec grid = tiny_grid();
    const OneForm form = OneForm::uniform_form(0.0);

    const std::string key = KernelCache::key(spec, form, grid, 0.0);
    {
        std::ofstream out(dir / (key + ".kern"), std::ios::binary);
        out << "not a kernel";
    }
    KernelCache cache(dir);
    ActionKernel out;
    CHECK_FALSE(cache.load(spec, form, grid, 0.0, out));
    CHECK(cache.misses() == 1);
}

TEST_CASE("cache gc honours budgets, LRU order, and live locks") {
    const fs::path dir = fresh_dir("cache_gc");
    const LagrangianSpec spec = LagrangianSpec::free_particle();
    const GridSpec grid = tiny_grid();
    const OneForm f0 = OneForm::uniform_form(0.0);
    const OneForm f1 = OneForm::uniform_form(0.25);
    const ActionKernel k0 = period_kernel(spec, f0, grid, 0.0, nullptr);
    const ActionKernel k1 = period_kernel(spec, f1, grid, 0.0, nullptr);

    {
        // While this cache is alive its lock file protects both kernels.
        KernelCache cache(dir);
        cache.store(spec, f0, grid, 0.0, k0);
        cache.store(spec, f1, grid, 0.0, k1);
        const GcReport live = cache_gc(dir, 0);
        CHECK(live.scanned == 2);
        CHECK(live.removed == 0);
        CHECK(live.kept_live == 2);
        ActionKernel out;
        CHECK(cache.load(spec, f0, grid, 0.0, out));
        CHECK(cache.load(spec, f1, grid, 0.0, out));
    }

    // Budget above usage: nothing to do.
    const GcReport roomy = cache_gc(dir, 1u << 30);
    CHECK(roomy.scanned == 2);
    CHECK(roomy.removed == 0);
    CHECK(roomy.bytes_after == roomy.bytes_before);

    // Make f0 strictly older, then shrink to one file: LRU evicts f0.
    const fs::path p0 = dir / (KernelCache::key(spec, f0, grid, 0.0) + ".kern");
    const fs::path p1 = dir / (KernelCache::key(spec, f1, grid, 0.0) + ".kern");
    fs::last_write_time(p0, fs::last_write_time(p1) - std::chrono::hours(1));
    const GcReport lru = cache_gc(dir, fs::file_size(p1));
    CHECK(lru.removed == 1);
    CHECK_FALSE(fs::exists(p0));
    CHECK(fs::exists(p1));
    CHECK(lru.bytes_after <= fs::file_size(p1));

    // Zero budget with no live locks clears everything.
    const GcReport none = cache_gc(dir, 0);
    CHECK(none.removed == 1);
    CHECK(none.bytes_after == 0);
}

TEST_CASE("fnv1a matches the published 64-bit vectors") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a("foobar") == 0x85944171f73967e8ull);
}

// --------------------------------------------------------------------------
// Configuration parsing
// --------------------------------------------------------------------------

namespace {

std::string alpha_config_text() {
    return R"({
        "version": 1,
        "task": "alpha",
        "model": {"kind": "pendulum"},
        "grid": {"n_space": 64, "n_substeps": 4, "winding_cap": 2},
        "classes": [0.0, 0.5, 1.0],
        "out": "runs/demo",
        "cache": "runs/cache",
        "workers": 2
    })";
}

} // namespace

TEST_CASE("parse_config fills every field of a valid document") {
    const ExperimentConfig cfg = parse_config(alpha_config_text(), "t.json");
    CHECK(cfg.version == 1);
    CHECK(cfg.task == TaskKind::Alpha);
    CHECK(cfg.model.kind == ModelKind::Mechanical);
    REQUIRE(cfg.model.potential.size() == 1);
    CHECK(cfg.model.potential[0].j == 1);
    CHECK(cfg.model.potential[0].a == 1.0);
    CHECK(cfg.grid.n_space == 64);
    CHECK(cfg.grid.n_substeps == 4);
    CHECK(cfg.grid.winding_cap == 2);
    CHECK(cfg.classes == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(cfg.out_dir == fs::path("runs/demo"));
    CHECK(cfg.cache_dir == fs::path("runs/cache"));
    CHECK(cfg.workers == 2);
    CHECK(cfg.regularity_max_n == 400); // default
    CHECK_FALSE(cfg.canonical.empty());
    CHECK(task_name(cfg.task) == std::string("alpha"));
}

TEST_CASE("parse_config parses connect schedules and options") {
    const std::string text = R"({
        "version": 1,
        "task": "connect",
        "model": {"kind": "standard", "coupling": 2.0},
        "grid": {"n_space": 128, "n_substeps": 1, "winding_cap": 4},
        "schedule": [
            {"class": 0.0, "epsilon": 0.05},
            {"class": 0.25, "epsilon": 0.1}
        ],
        "options": {"delta_cap": 0.125, "dwell_override": 4},
        "barrier_options": {"phi_n_max": 96}
    })";
    const ExperimentConfig cfg = parse_config(text, "c.json");
    CHECK(cfg.task == TaskKind::Connect);
    REQUIRE(cfg.schedule.size() == 2);
    CHECK(cfg.schedule[0].cohomology_class == 0.0);
    CHECK(cfg.schedule[0].epsilon == 0.05);
    CHECK(cfg.schedule[1].cohomology_class == 0.25);
    CHECK(cfg.schedule[1].epsilon == 0.1);
    CHECK(cfg.connect.delta_cap == 0.125);
    CHECK(cfg.connect.dwell_override == 4);
    CHECK(cfg.connect.set_tol_factor == 2.5); // default survives
    // Barrier knobs flow into the connect options' field builder.
    CHECK(cfg.connect.barrier.phi_n_max == 96);
    CHECK(cfg.out_dir == fs::path("out")); // default
    CHECK(cfg.cache_dir.empty());
}

TEST_CASE("parse_config rejects schema violations with named fields") {
    auto patch = [](const std::string& from, const std::string& to) {
        std::string text = alpha_config_text();
        const std::size_t at = text.find(from);
        REQUIRE(at != std::string::npos);
        text.replace(at, from.size(), to);
        return text;
    };
    using RT = std::runtime_error;

    check_throws_containing<RT>(
        [&] { parse_config(patch("\"workers\": 2", "\"workers\": 2, \"bogus\": 1"), "x.json"); },
        "unknown key 'bogus'");
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"kind\": \"pendulum\"", "\"kind\": \"pendulum\", \"z\": 0"), "x.json"); },
        "unknown key 'z'");
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"version\": 1", "\"version\": 7"), "x.json"); },
        "unsupported schema version");
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"task\": \"alpha\"", "\"task\": \"frobnicate\""), "x.json"); },
        "task");
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"classes\": [0.0, 0.5, 1.0]", "\"classes\": [0.0]"), "x.json"); },
        "alpha table needs at least 2 classes");
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"classes\": [0.0, 0.5, 1.0]", "\"classes\": []"), "x.json"); },
        "at least one class");
    check_throws_containing<RT>(
        [&] {
            parse_config(patch("\"workers\": 2",
                               "\"workers\": 2, \"schedule\": [{\"class\": 0.0, \"epsilon\": 0.1}]"),
                         "x.json");
        },
        "not valid for task 'alpha'");
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"workers\": 2", "\"workers\": 2, \"base_point\": 0.5"), "x.json"); },
        "not valid for task 'alpha'");
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"n_space\": 64", "\"n_space\": 0"), "x.json"); }, "n_space");
    check_throws_containing<RT>(
        [&] { parse_config("{\"version\":1,,}", "x.json"); }, "x.json");

    // Model-specific requirements.
    check_throws_containing<RT>(
        [&] { parse_config(patch("\"kind\": \"pendulum\"", "\"kind\": \"standard\""), "x.json"); },
        "coupling");
    check_throws_containing<RT>(
        [&] {
            parse_config(patch("\"kind\": \"pendulum\"", "\"kind\": \"standard\", \"coupling\": -1"),
                         "x.json");
        },
        "coupling");
    check_throws_containing<RT>(
        [&] {
            parse_config(patch("\"kind\": \"pendulum\"", "\"kind\": \"mechanical\", \"potential\": []"),
                         "x.json");
        },
        "potential");

    // Connect-side validation.
    const std::string connect_base = R"({
        "version": 1, "task": "connect",
        "model": {"kind": "free"},
        "grid": {"n_space": 32, "n_substeps": 1, "winding_cap": 2},
        "schedule": [{"class": 0.0, "epsilon": 0.1}]
    })";
    check_throws_containing<RT>(
        [&] {
            std::string t = connect_base;
            t.replace(t.find("\"epsilon\": 0.1"), 14, "\"epsilon\": 0");
            parse_config(t, "c.json");
        },
        "epsilon");
    check_throws_containing<RT>(
        [&] {
            std::string t = connect_base;
            t.insert(t.rfind('}'), ", \"classes\": [0.0, 1.0]");
            parse_config(t, "c.json");
        },
        "not valid for task 'connect'");
}

TEST_CASE("config hash ignores formatting but tracks content") {
    const ExperimentConfig a = parse_config(alpha_config_text(), "a.json");
    const std::string hash = config_hash(a);
    CHECK(hash.size() == 16);
    CHECK(hash.find_first_not_of("0123456789abcdef") == std::string::npos);

    // Reordered keys and collapsed whitespace: same canonical form.
    const std::string reordered = R"({"task":"alpha","version":1,
        "grid":{"winding_cap":2,"n_space":64,"n_substeps":4},
        "model":{"kind":"pendulum"},"workers":2,
        "cache":"runs/cache","out":"runs/demo","classes":[0.0,0.5,1.0]})";
    const ExperimentConfig b = parse_config(reordered, "b.json");
    CHECK(b.canonical == a.canonical);
    CHECK(config_hash(b) == hash);

    // Any content change moves the hash.
    const ExperimentConfig c =
        parse_config(R"({"version":1,"task":"alpha","model":{"kind":"pendulum"},
            "grid":{"n_space":64,"n_substeps":4,"winding_cap":2},
            "classes":[0.0,0.5,1.0],"out":"runs/demo","cache":"runs/cache","workers":3})",
                     "c.json");
    CHECK(config_hash(c) != hash);
}

// --------------------------------------------------------------------------
// Runner
// --------------------------------------------------------------------------

namespace {

ExperimentConfig tiny_alpha_config(const fs::path& out, const fs::path& cache) {
    std::string text = R"({
        "version": 1,
        "task": "alpha",
        "model": {"kind": "free"},
        "grid": {"n_space": 32, "n_substeps": 1, "winding_cap": 2},
        "classes": [-0.5, -0.25, 0.0, 0.25, 0.5]
    })";
    ExperimentConfig cfg = parse_config(text, "tiny.json");
    cfg.out_dir = out;
    cfg.cache_dir = cache;
    return cfg;
}

// Splits CSV text into rows of cells.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        std::vector<std::string> cells;
        std::istringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

} // namespace

TEST_CASE("runner emits exact artifacts for the alpha task") {
    const fs::path dir = fresh_dir("run_alpha");
    const ExperimentConfig cfg = tiny_alpha_config(dir / "out", dir / "cache");

    const RunResult res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(res.warnings.empty());
    CHECK(res.files == std::vector<std::string>{"alpha.csv", "summary.json", "manifest.json"});

    const auto rows = csv_rows(read_file(cfg.out_dir / "alpha.csv"));
    REQUIRE(rows.size() == 6);
    CHECK(rows[0] == std::vector<std::string>{"c", "alpha", "alpha_prime", "rotation",
                                              "regular", "period_detected"});
    // Free particle: alpha(c) = c^2/2, exact at grid-representable classes.
    const std::vector<std::string> expect_c = {"-0.5", "-0.25", "0", "0.25", "0.5"};
    const std::vector<double> expect_alpha = {0.125, 0.03125, 0.0, 0.03125, 0.125};
    const std::vector<double> expect_slope = {-0.375, -0.25, 0.0, 0.25, 0.375};
    for (std::size_t i = 0; i < 5; ++i) {
        REQUIRE(rows[i + 1].size() == 6);
        CHECK(rows[i + 1][0] == expect_c[i]);
        CHECK(std::strtod(rows[i + 1][1].c_str(), nullptr) == expect_alpha[i]);
        CHECK(std::strtod(rows[i + 1][2].c_str(), nullptr) == expect_slope[i]);
        CHECK(rows[i + 1][3] == expect_c[i]); // rotation number equals the class
        CHECK(rows[i + 1][4] == "1");
    }

    const auto manifest = nlohmann::json::parse(read_file(cfg.out_dir / "manifest.json"));
    CHECK(manifest.at("artifact_version") == k_artifact_version);
    CHECK(manifest.at("task") == "alpha");
    CHECK(manifest.at("exit_code") == 0);
    CHECK(manifest.at("config_hash") == config_hash(cfg));
    CHECK(manifest.at("warnings").empty());
    CHECK_FALSE(manifest.at("stages").empty());
}

TEST_CASE("runner output is byte identical across runs and cache warms up") {
    const fs::path dir = fresh_dir("run_det");
    const ExperimentConfig cfg1 = tiny_alpha_config(dir / "o1", dir / "cache");
    const ExperimentConfig cfg2 = tiny_alpha_config(dir / "o2", dir / "cache");

    CHECK(run_experiment(cfg1).exit_code == 0);
    CHECK(run_experiment(cfg2).exit_code == 0);

    CHECK(read_file(dir / "o1/alpha.csv") == read_file(dir / "o2/alpha.csv"));
    CHECK(read_file(dir / "o1/summary.json") == read_file(dir / "o2/summary.json"));

    const auto m1 = nlohmann::json::parse(read_file(dir / "o1/manifest.json"));
    const auto m2 = nlohmann::json::parse(read_file(dir / "o2/manifest.json"));
    CHECK(m1.at("config_hash") == m2.at("config_hash"));
    CHECK(m1.at("cache").at("misses").get<int>() > 0);
    CHECK(m2.at("cache").at("misses").get<int>() == 0);
    CHECK(m2.at("cache").at("hits").get<int>() > 0);
}

TEST_CASE("runner surfaces convergence warnings as exit code 3") {
    const fs::path dir = fresh_dir("run_warn");
    std::string text = R"({
        "version": 1,
        "task": "alpha",
        "model": {"kind": "pendulum"},
        "grid": {"n_space": 64, "n_substeps": 4, "winding_cap": 2},
        "classes": [1.4, 1.5],
        "regularity_max_n": 10
    })";
    ExperimentConfig cfg = parse_config(text, "warn.json");
    cfg.out_dir = dir / "out";
    cfg.cache_dir = dir / "cache";

    const RunResult res = run_experiment(cfg);
    CHECK(res.exit_code == 3);
    REQUIRE_FALSE(res.warnings.empty());
    CHECK(contains(res.warnings.front(), "did not settle"));
    const auto manifest = nlohmann::json::parse(read_file(cfg.out_dir / "manifest.json"));
    CHECK(manifest.at("exit_code") == 3);
}

TEST_CASE("runner completes a small connect task end to end") {
    const fs::path dir = fresh_dir("run_conn");
    std::string text = R"({
        "version": 1,
        "task": "connect",
        "model": {"kind": "standard", "coupling": 2.0},
        "grid": {"n_space": 64, "n_substeps": 1, "winding_cap": 4},
        "schedule": [
            {"class": 0.0, "epsilon": 0.1},
            {"class": 0.25, "epsilon": 0.1}
        ],
        "options": {"dwell_override": 3}
    })";
    ExperimentConfig cfg = parse_config(text, "conn.json");
    cfg.out_dir = dir / "out";
    cfg.cache_dir = dir / "cache";

    const RunResult res = run_experiment(cfg);
    CHECK(res.exit_code == 0);
    CHECK(res.files == std::vector<std::string>{"orbit.csv", "summary.json", "manifest.json"});

    const auto rows = csv_rows(read_file(cfg.out_dir / "orbit.csv"));
    REQUIRE(rows.size() >= 2);
    CHECK(rows[0] == std::vector<std::string>{"t", "x", "v_fd", "window_index",
                                              "dist_to_target"});

    const auto summary = nlohmann::json::parse(read_file(cfg.out_dir / "summary.json"));
    CHECK(summary.at("verified") == true);
    CHECK(summary.at("total_periods") == 7); // 3 dwell + 1 transition + 3 dwell
    REQUIRE(summary.at("distances").size() == 2);
    CHECK(summary.at("distances")[0].get<double>() <= 0.05);
    CHECK(summary.at("distances")[1].get<double>() <= 0.05);
    CHECK(summary.at("residuals").at("max_outside").get<double>() <= 1e-6);
    CHECK(summary.at("ladder").size() == 2);
}

TEST_CASE("runner propagates a blocked schedule and still writes the manifest") {
    const fs::path dir = fresh_dir("run_blocked");
    std::string text = R"({
        "version": 1,
        "task": "connect",
        "model": {"kind": "free"},
        "grid": {"n_space": 32, "n_substeps": 1, "winding_cap": 2},
        "schedule": [
            {"class": 0.0, "epsilon": 0.1},
            {"class": 0.5, "epsilon": 0.1}
        ]
    })";
    ExperimentConfig cfg = parse_config(text, "blocked.json");
    cfg.out_dir = dir / "out";
    cfg.cache_dir = dir / "cache";

    check_throws_containing<std::runtime_error>([&] { run_experiment(cfg); }, "blocked");
    const auto manifest = nlohmann::json::parse(read_file(cfg.out_dir / "manifest.json"));
    CHECK(manifest.at("exit_code") == 1);
    REQUIRE_FALSE(manifest.at("warnings").empty());
    CHECK(contains(manifest.at("warnings")[0].get<std::string>(), "error:"));
}

TEST_CASE("runner emits per-class artifacts for barrier and sets tasks") {
    const fs::path dir = fresh_dir("run_fields");

    std::string bar_text = R"({
        "version": 1,
        "task": "barrier",
        "model": {"kind": "pendulum"},
        "grid": {"n_space": 64, "n_substeps": 4, "winding_cap": 2},
        "classes": [0.0],
        "base_point": 0.0
    })";
    ExperimentConfig bar = parse_config(bar_text, "bar.json");
    bar.out_dir = dir / "bar";
    bar.cache_dir = dir / "cache";
    const RunResult bres = run_experiment(bar);
    CHECK(bres.exit_code == 0);
    CHECK(bres.files ==
          std::vector<std::string>{"barrier_0.csv", "summary.json", "manifest.json"});
    const auto brows = csv_rows(read_file(bar.out_dir / "barrier_0.csv"));
    REQUIRE(brows.size() == 65); // header + one row per node
    CHECK(brows[0] == std::vector<std::string>{"x", "phi", "h", "d", "d_tilde", "d_diag"});
    CHECK(brows[1][0] == "0"); // base row starts at the base point itself
    CHECK(brows[1][1] == "0"); // phi(base, base) = 0 at the critical class
    for (std::size_t i = 1; i < brows.size(); ++i) {
        const double d = std::strtod(brows[i][3].c_str(), nullptr);
        const double dt = std::strtod(brows[i][4].c_str(), nullptr);
        CHECK(d >= dt - 1e-9); // d dominates its symmetrized counterpart
    }

    std::string sets_text = R"({
        "version": 1,
        "task": "sets",
        "model": {"kind": "free"},
        "grid": {"n_space": 32, "n_substeps": 1, "winding_cap": 2},
        "classes": [0.5]
    })";
    ExperimentConfig sets = parse_config(sets_text, "sets.json");
    sets.out_dir = dir / "sets";
    sets.cache_dir = dir / "cache";
    const RunResult sres = run_experiment(sets);
    CHECK(sres.exit_code == 0);
    CHECK(sres.files ==
          std::vector<std::string>{"sets_0.5.csv", "summary.json", "manifest.json"});
    const auto srows = csv_rows(read_file(sets.out_dir / "sets_0.5.csv"));
    REQUIRE(srows.size() == 33);
    CHECK(srows[0] ==
          std::vector<std::string>{"x", "d", "in_aubry", "in_mane", "in_g", "velocity"});
    // The free particle at class 1/2 rotates uniformly: every node is in every
    // set and the minimizing velocity is the rotation number itself.
    for (std::size_t i = 1; i < srows.size(); ++i) {
        CHECK(srows[i][2] == "1");
        CHECK(srows[i][3] == "1");
        CHECK(srows[i][5] == "0.5");
    }
    const auto ssum = nlohmann::json::parse(read_file(sets.out_dir / "summary.json"));
    const auto& cls = ssum.at("classes")[0];
    CHECK(cls.at("rotation").get<double>() == 0.5);
    CHECK(cls.at("p") == 1);
    CHECK(cls.at("q") == 2);
}

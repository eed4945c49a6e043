// Command-line front end: one subcommand per task plus cache-gc.  All real
// work happens in the library; this file only parses flags, loads the
// config, applies overrides, and maps outcomes to exit codes.

#include "wkam/cache.hpp"
#include "wkam/config.hpp"
#include "wkam/runner.hpp"

#include <CLI11.hpp>

#include <clocale>
#include <cstdio>
#include <exception>
#include <string>

namespace {

struct TaskFlags {
    std::string config_path;
    std::string out_dir;
    std::string cache_dir;
    int workers = -1;
    int seed = -1;
};

void add_task_flags(CLI::App* cmd, TaskFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", flags.out_dir, "output directory (overrides config)");
    cmd->add_option("--cache", flags.cache_dir, "kernel cache directory (overrides config)");
    cmd->add_option("--workers", flags.workers, "worker threads (overrides config)");
    cmd->add_option("--seed", flags.seed, "reserved; all algorithms are deterministic");
}

int run_task(const TaskFlags& flags, wkam::TaskKind expected) {
    wkam::ExperimentConfig cfg = wkam::load_config(flags.config_path);
    if (cfg.task != expected) {
        std::fprintf(stderr, "error: config task '%s' does not match subcommand '%s'\n",
                     wkam::task_name(cfg.task), wkam::task_name(expected));
        return 1;
    }
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (!flags.cache_dir.empty()) cfg.cache_dir = flags.cache_dir;
    if (flags.workers >= 0) cfg.workers = flags.workers;

    wkam::RunResult result = wkam::run_experiment(cfg);
    for (const std::string& w : result.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::fprintf(stderr, "wrote %zu files to %s (exit %d)\n", result.files.size(),
                 cfg.out_dir.string().c_str(), result.exit_code);
    return result.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");

    CLI::App app{"circle weak-KAM toolkit: alpha/beta, barriers, invariant sets, "
                 "and connecting orbits across cohomology classes"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
        wkam::TaskKind task;
    };
    const Sub subs[] = {
        {"alpha", "critical values, rotation numbers, and semigroup regularity", wkam::TaskKind::Alpha},
        {"barrier", "potential and barrier fields from a base point", wkam::TaskKind::Barrier},
        {"sets", "Aubry / Mane / minimizing set membership per node", wkam::TaskKind::Sets},
        {"regularity", "semigroup convergence sweep (alpha pipeline)", wkam::TaskKind::Regularity},
        {"connect", "assemble and verify a connecting orbit schedule", wkam::TaskKind::Connect},
    };

    TaskFlags flags[5];
    wkam::TaskKind chosen{};
    const TaskFlags* chosen_flags = nullptr;
    for (std::size_t i = 0; i < 5; ++i) {
        CLI::App* cmd = app.add_subcommand(subs[i].name, subs[i].help);
        add_task_flags(cmd, flags[i]);
        cmd->callback([&, i] {
            chosen = subs[i].task;
            chosen_flags = &flags[i];
        });
    }

    std::string gc_dir;
    std::uint64_t gc_max_bytes = 0;
    CLI::App* gc = app.add_subcommand("cache-gc", "evict least-recently-used cached kernels");
    gc->add_option("--cache", gc_dir, "cache directory")->required();
    gc->add_option("--max-bytes", gc_max_bytes, "size budget in bytes")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gc->parsed()) {
            wkam::GcReport report = wkam::cache_gc(gc_dir, gc_max_bytes);
            std::printf("scanned %d, removed %d, kept %d live, %llu -> %llu bytes\n",
                        report.scanned, report.removed, report.kept_live,
                        static_cast<unsigned long long>(report.bytes_before),
                        static_cast<unsigned long long>(report.bytes_after));
            return 0;
        }
        return run_task(*chosen_flags, chosen);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

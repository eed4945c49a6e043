// Versioned JSON experiment configuration.  The schema is strict: unknown
// keys are rejected anywhere in the document, task-specific keys may only
// appear for their task, and every diagnostic names the offending field.

#pragma once

#include "wkam/barrier.hpp"
#include "wkam/connect.hpp"
#include "wkam/grid.hpp"
#include "wkam/model.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace wkam {

enum class TaskKind { Alpha, Barrier, Sets, Regularity, Connect };

const char* task_name(TaskKind task);

struct ScheduleEntry {
    double cohomology_class = 0.0;
    double epsilon = 0.0;
};

struct ExperimentConfig {
    int version = 1;
    TaskKind task = TaskKind::Alpha;
    LagrangianSpec model;
    GridSpec grid;

    std::vector<double> classes;         // alpha / regularity / barrier / sets
    double base_point = 0.0;             // barrier: row point of the emitted fields
    int section = 0;                     // barrier / sets
    double set_tol = -1.0;               // sets: absolute threshold, -1 = field default
    int regularity_max_n = 400;          // alpha / regularity iteration budget
    std::vector<ScheduleEntry> schedule; // connect
    ConnectOptions connect;              // connect tuning knobs
    BarrierOptions barrier;              // barrier-field tuning knobs

    std::filesystem::path out_dir = "out";
    std::filesystem::path cache_dir; // empty: no cache
    int workers = 0;                 // 0: library default
    int seed = 0;                    // reserved; everything is deterministic

    std::string canonical; // normalized serialization, hashed into manifests
};

// Parses and validates config text; `origin` prefixes every diagnostic
// (typically the file name).  Throws std::runtime_error on any violation.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);

ExperimentConfig load_config(const std::filesystem::path& path);

// FNV-1a of the canonical serialization, as a fixed-width hex string.
std::string config_hash(const ExperimentConfig& config);

} // namespace wkam

// Experiment runner: dispatches a parsed configuration to the library
// pipeline, writes the CSV/JSON artifacts plus a run manifest, and maps the
// outcome to the documented exit codes.

#pragma once

#include "wkam/config.hpp"

#include <string>
#include <vector>

namespace wkam {

inline constexpr const char* k_artifact_version = "0.1.0";

struct RunResult {
    // 0 success; 2 verification failure (connect with verified == false);
    // 3 completed with convergence warnings.  Errors escape as exceptions
    // and the command-line front end maps them to exit 1.
    int exit_code = 0;
    std::vector<std::string> warnings;
    std::vector<std::string> files; // emitted names, relative to out_dir
};

// Runs the task, emitting its outputs and manifest.json into config.out_dir.
// A manifest is written even when the task fails with an exception (the
// error text lands in its warnings before the exception propagates).
RunResult run_experiment(const ExperimentConfig& config);

} // namespace wkam

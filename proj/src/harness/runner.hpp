#pragma once

#include <string>

#include "harness/report.hpp"
#include "harness/scenario.hpp"

namespace qk {

struct RunOptions {
  std::string out_dir;  // empty: no files written
  int threads = 0;      // 0: QK_THREADS, else 1
};

/// QK_THREADS as a positive integer, 1 when unset or malformed.
int threads_from_env();

/// Dispatches to the scenario's experiment, writes report.json and the CSV
/// tables when out_dir is set, and returns the report.
Report run_scenario(const Scenario& s, const RunOptions& options = {});

}  // namespace qk

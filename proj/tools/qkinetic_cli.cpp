#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qkinetic/qkinetic.h"

namespace fs = std::filesystem;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitInvalid = 2;

int exit_code(qk_status st) {
  switch (st) {
    case QK_OK: return kExitPass;
    case QK_ERR_INVALID_ARGUMENT:
    case QK_ERR_VALIDATION:
    case QK_ERR_IO: return kExitInvalid;
    default: return kExitCheckFailure;
  }
}

int report_error(qk_status st, const std::string& context) {
  std::cerr << "qkinetic: " << context << ":\n  ";
  for (const char* c = qk_last_error(); *c; ++c) {
    std::cerr << *c;
    if (*c == '\n') std::cerr << "  ";
  }
  std::cerr << '\n';
  return exit_code(st);
}

struct RunArgs {
  std::string scenario;
  int n_max = -1;
  std::vector<double> eps_ladder;
  bool ladder_set = false;
  std::string out_dir;
  bool json = false;
};

// Returns the exit code; prints a one-line summary (or the full report).
int run_one(const RunArgs& a) {
  qk_scenario* s = nullptr;
  if (qk_status st = qk_scenario_load(a.scenario.c_str(), &s); st != QK_OK)
    return report_error(st, a.scenario);
  qk_status st = QK_OK;
  if (a.n_max >= 0) st = qk_scenario_set_n_max(s, a.n_max);
  if (st == QK_OK && a.ladder_set)
    st = qk_scenario_set_eps_ladder(s, a.eps_ladder.data(), a.eps_ladder.size());
  qk_report* r = nullptr;
  if (st == QK_OK) st = qk_run(s, a.out_dir.empty() ? nullptr : a.out_dir.c_str(), &r);
  qk_scenario_free(s);
  if (st != QK_OK) return report_error(st, a.scenario);

  int passed = 0;
  qk_report_passed(r, &passed);
  char* text = nullptr;
  qk_report_json(r, &text);
  if (a.json) {
    std::cout << text << '\n';
  } else {
    std::cout << (passed ? "PASS " : "FAIL ") << a.scenario << '\n';
    if (!passed) std::cout << text << '\n';
  }
  qk_string_free(text);
  qk_report_free(r);
  return passed ? kExitPass : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-expansion kinetic hierarchy experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", qk_version());

  RunArgs run;
  std::string ladder_text;
  auto* run_cmd = app.add_subcommand("run", "Run one scenario file");
  run_cmd->add_option("scenario", run.scenario, "Scenario JSON")->required();
  run_cmd->add_option("--n-max", run.n_max, "Override the truncation order n_max")
      ->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--eps-ladder", run.eps_ladder, "Override the epsilon ladder (a,b,c)")
      ->delimiter(',');
  run_cmd->add_option("--out-dir", run.out_dir, "Write report.json and CSV tables here");
  run_cmd->add_flag("--json", run.json, "Print the full JSON report");

  std::string fixtures = QK_DEFAULT_FIXTURE_DIR;
  std::string check_out;
  auto* check_cmd = app.add_subcommand("check", "Run every scenario of the fixture suite");
  check_cmd->add_option("--fixtures", fixtures, "Directory of scenario JSON files")
      ->check(CLI::ExistingDirectory);
  check_cmd->add_option("--out-dir", check_out, "Write one report directory per scenario");

  std::string report_path, kind, plot_out;
  auto* plot_cmd = app.add_subcommand("plot", "Extract a report table as plain CSV");
  plot_cmd->add_option("report", report_path, "report.json")->required();
  plot_cmd->add_option("kind", kind, "convergence | trajectory")
      ->required()
      ->check(CLI::IsMember({"convergence", "trajectory"}));
  plot_cmd->add_option("--out", plot_out, "Output CSV (default <kind>.csv beside the report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitInvalid;
  }

  if (*run_cmd) {
    run.ladder_set = run_cmd->count("--eps-ladder") > 0;
    return run_one(run);
  }
  if (*check_cmd) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(fixtures))
      if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      std::cerr << "qkinetic: no scenario files in " << fixtures << '\n';
      return kExitInvalid;
    }
    int worst = kExitPass;
    for (const auto& f : files) {
      RunArgs a;
      a.scenario = f.string();
      if (!check_out.empty()) a.out_dir = (fs::path(check_out) / f.stem()).string();
      worst = std::max(worst, run_one(a));
    }
    return worst;
  }
  if (plot_out.empty()) plot_out = (fs::path(report_path).parent_path() / (kind + ".csv")).string();
  if (qk_status st = qk_emit_plot_data(report_path.c_str(), kind.c_str(), plot_out.c_str());
      st != QK_OK)
    return report_error(st, report_path);
  std::cout << plot_out << '\n';
  return kExitPass;
}

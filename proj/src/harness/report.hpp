#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace qk {

struct Check {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct Report {
  std::string scenario_hash;
  std::string name;
  std::string experiment;
  std::vector<Check> checks;
  std::map<std::string, Table> tables;
  std::vector<std::string> warnings;
  nlohmann::json details = nlohmann::json::object();
  std::map<std::string, double> timing;  // milliseconds; excluded from determinism

  bool passed() const;
  /// residual <= tolerance.
  Check& add_check(const std::string& name, double residual, double tolerance);
  /// Records an explicit outcome (for checks that are not a plain bound).
  Check& add_check(const std::string& name, double residual, double tolerance, bool pass);
  void warn(const std::string& w);
};

// Column layouts of the plot-data tables.
extern const std::vector<std::string> kConvergenceColumns;
extern const std::vector<std::string> kTrajectoryColumns;

nlohmann::json report_to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

void write_csv(const std::string& path, const Table& t);
/// report.json plus one <table>.csv per table in `dir` (created if needed).
void write_report(const std::string& dir, const Report& r);

/// Writes the table for `kind` ("convergence" or "trajectory") of the report
/// at `report_path` to `out_path`. Throws when the report lacks that table.
void emit_plot_data(const std::string& report_path, const std::string& kind,
                    const std::string& out_path);

}  // namespace qk

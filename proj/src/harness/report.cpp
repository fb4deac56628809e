#include "harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "core/labeled_operator.hpp"

namespace qk {

const std::vector<std::string> kConvergenceColumns = {"epsilon", "t", "distance",
                                                      "tail_estimate", "runtime_ms"};
const std::vector<std::string> kTrajectoryColumns = {"t", "trace", "trace_norm", "min_eig"};

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Check& Report::add_check(const std::string& name, double residual, double tolerance) {
  return add_check(name, residual, tolerance, std::isfinite(residual) && residual <= tolerance);
}

Check& Report::add_check(const std::string& name, double residual, double tolerance,
                         bool pass) {
  checks.push_back({name, residual, tolerance, pass});
  return checks.back();
}

void Report::warn(const std::string& w) {
  if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
}

namespace {

// JSON has no inf/nan; store them as strings.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double from_number(const nlohmann::json& j) {
  if (j.is_number()) return j.get<double>();
  const std::string s = j.get<std::string>();
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  return NAN;
}

}  // namespace

nlohmann::json report_to_json(const Report& r) {
  nlohmann::json j;
  j["scenario_hash"] = r.scenario_hash;
  j["name"] = r.name;
  j["experiment"] = r.experiment;
  j["passed"] = r.passed();
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks)
    j["checks"].push_back({{"name", c.name},
                           {"residual", number(c.residual)},
                           {"tolerance", number(c.tolerance)},
                           {"pass", c.pass}});
  j["tables"] = nlohmann::json::object();
  for (const auto& [name, t] : r.tables) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : t.rows) {
      nlohmann::json jr = nlohmann::json::array();
      for (double v : row) jr.push_back(number(v));
      rows.push_back(std::move(jr));
    }
    j["tables"][name] = {{"columns", t.columns}, {"rows", rows}};
  }
  j["warnings"] = r.warnings;
  j["details"] = r.details;
  j["timing"] = r.timing;
  return j;
}

Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.scenario_hash = j.value("scenario_hash", "");
  r.name = j.value("name", "");
  r.experiment = j.value("experiment", "");
  const nlohmann::json checks = j.value("checks", nlohmann::json::array());
  const nlohmann::json tables = j.value("tables", nlohmann::json::object());
  for (const auto& c : checks)
    r.checks.push_back({c.at("name").get<std::string>(), from_number(c.at("residual")),
                        from_number(c.at("tolerance")), c.at("pass").get<bool>()});
  for (const auto& [name, t] : tables.items()) {
    Table table;
    table.columns = t.at("columns").get<std::vector<std::string>>();
    for (const auto& row : t.at("rows")) {
      std::vector<double> values;
      for (const auto& v : row) values.push_back(from_number(v));
      table.rows.push_back(std::move(values));
    }
    r.tables.emplace(name, std::move(table));
  }
  r.warnings = j.value("warnings", std::vector<std::string>{});
  r.details = j.value("details", nlohmann::json::object());
  r.timing = j.value("timing", std::map<std::string, double>{});
  return r;
}

void write_csv(const std::string& path, const Table& t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  for (std::size_t i = 0; i < t.columns.size(); ++i) out << (i ? "," : "") << t.columns[i];
  out << '\n' << std::setprecision(17);
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path);
}

void write_report(const std::string& dir, const Report& r) {
  std::filesystem::create_directories(dir);
  const std::string path = (std::filesystem::path(dir) / "report.json").string();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << std::setw(2) << report_to_json(r) << '\n';
  for (const auto& [name, t] : r.tables)
    write_csv((std::filesystem::path(dir) / (name + ".csv")).string(), t);
}

void emit_plot_data(const std::string& report_path, const std::string& kind,
                    const std::string& out_path) {
  if (kind != "convergence" && kind != "trajectory")
    throw InvalidArgument("unknown plot kind '" + kind + "' (convergence | trajectory)");
  std::ifstream in(report_path);
  if (!in) throw Error("cannot read report " + report_path);
  Report r;
  try {
    r = report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed report " + report_path + ": " + e.what());
  }
  auto it = r.tables.find(kind);
  if (it == r.tables.end())
    throw InvalidArgument("report has no " + kind + " table: " + report_path);
  const auto& expected = kind == "convergence" ? kConvergenceColumns : kTrajectoryColumns;
  if (it->second.columns != expected)
    throw InvalidArgument("report " + kind + " table has unexpected columns");
  write_csv(out_path, it->second);
}

}  // namespace qk

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/labeled_operator.hpp"
#include "hierarchy/correlations.hpp"

namespace qk {

/// Every violated constraint of a scenario, collected before anything runs.
class ValidationError : public InvalidArgument {
 public:
  explicit ValidationError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

enum class Experiment {
  Identities,
  HierarchyEquivalence,
  MeanfieldLadder,
  CorrelationPropagation,
  Continuum
};

std::string to_string(Experiment e);
std::optional<Experiment> experiment_from_string(const std::string& s);

struct ContinuumConfig {
  double length = 2.0 * 3.14159265358979323846;
  int points = 32;
  double t_end = 1.0;
  int steps = 1000;
  std::string equation = "nls";    // nls | hartree | gp
  std::string initial = "modulated";  // modulated | gaussian | plane_wave
  double amplitude = 0.1;  // modulation depth
  int mode = 1;
  double x0 = 0.0;
  double sigma = 1.0;
  double k0 = 0.0;
  std::string kernel = "delta";  // delta | projector (gp only)
  double kernel_strength = 1.0;
  double kernel_width = 1.0;
  double scale = 1.0;
  int snapshot_stride = 0;
};

struct Scenario {
  std::string name;
  Experiment experiment = Experiment::Identities;
  std::uint64_t seed = 0;
  int dim = 0;
  LabeledOperator kinetic;
  LabeledOperator potential;
  double epsilon = 1.0;
  bool chaos = true;
  std::map<int, LabeledOperator> g;
  CorrelationFamily::Closure closure = CorrelationFamily::Closure::Pair;
  LabeledOperator f1_0;
  int n_max = 2;
  int s_max = 2;
  double t_end = 0.5;
  int steps = 5;
  std::vector<double> eps_ladder;
  std::map<std::string, double> tolerances;
  std::optional<ContinuumConfig> continuum;

  /// Source document with overrides applied; hashed for the report.
  nlohmann::json document;

  double tolerance(const std::string& key, double fallback) const;
  CorrelationFamily correlations() const;
};

/// Check tolerances by name; a scenario's "tolerances" object may override
/// any of these and nothing else.
const std::map<std::string, double>& default_tolerances();

/// Parses and validates; throws ValidationError listing every violation.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario(const std::string& path);

/// Command-line overrides; re-validated.
void override_n_max(Scenario& s, int n_max);
void override_eps_ladder(Scenario& s, const std::vector<double>& ladder);

/// FNV-1a 64 of the canonical (sorted-key, compact) dump, as 16 hex digits.
std::string scenario_hash(const Scenario& s);

}  // namespace qk

#include "harness/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "core/serialization.hpp"
#include "dynamics/dynamics.hpp"
#include "dynamics/expansion.hpp"
#include "hierarchy/hierarchy.hpp"

namespace qk {

namespace {

std::string join_lines(const std::vector<std::string>& v) {
  std::string out = "invalid scenario:";
  for (const auto& s : v) out += "\n  - " + s;
  return out;
}

const std::set<std::string> kTopKeys = {
    "name",         "experiment", "seed",       "dim",        "kinetic",
    "potential",    "epsilon",    "correlations", "f1_0",     "truncation",
    "time",         "eps_ladder", "tolerances", "continuum", "description"};

const std::set<std::string> kContinuumKeys = {
    "length", "points", "t_end",  "steps",           "equation",        "initial",
    "amplitude", "mode", "x0",    "sigma",           "k0",              "kernel",
    "kernel_strength", "kernel_width", "scale", "snapshot_stride"};

// Largest operator side the dense representation accepts.
constexpr Eigen::Index kMaxSide = 4096;

class Collector {
 public:
  void fail(std::string msg) { violations.push_back(std::move(msg)); }

  template <typename T>
  std::optional<T> get(const nlohmann::json& obj, const std::string& key, const std::string& path,
                       bool required) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) fail(path + ": missing");
      return std::nullopt;
    }
    try {
      const auto& v = obj.at(key);
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw std::runtime_error("not a number");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer()) throw std::runtime_error("not an integer");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw std::runtime_error("not a string");
      }
      return v.get<T>();
    } catch (const std::exception& e) {
      fail(path + ": wrong type (" + e.what() + ")");
      return std::nullopt;
    }
  }

  std::optional<LabeledOperator> op(const nlohmann::json& obj, const std::string& key,
                                    int dim, const Labels& labels, const std::string& path,
                                    bool required) {
    if (!obj.is_object() || !obj.contains(key)) {
      if (required) fail(path + ": missing");
      return std::nullopt;
    }
    const auto& j = obj.at(key);
    try {
      if (!j.is_object() || !j.contains("data")) throw InvalidArgument("needs a data array");
      if (j.contains("dim") && j.at("dim").get<int>() != dim)
        throw InvalidArgument("dim differs from the scenario dim");
      if (j.contains("labels") && j.at("labels").get<Labels>() != labels)
        throw InvalidArgument("labels must be " + label_text(labels));
      const Matrix m = matrix_from_pairs(j.at("data"));
      const Eigen::Index side = space_size(dim, labels.size());
      if (m.rows() != side)
        throw InvalidArgument("side " + std::to_string(m.rows()) + " != dim^" +
                              std::to_string(labels.size()) + " = " + std::to_string(side));
      if (!m.allFinite()) throw InvalidArgument("non-finite entries");
      return LabeledOperator(dim, labels, m);
    } catch (const std::exception& e) {
      fail(path + ": " + e.what());
      return std::nullopt;
    }
  }

  static std::string label_text(const Labels& l) {
    std::string s = "[";
    for (std::size_t i = 0; i < l.size(); ++i) s += (i ? "," : "") + std::to_string(l[i]);
    return s + "]";
  }

  void unknown_keys(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& path) {
    if (!obj.is_object()) return;
    for (const auto& [k, v] : obj.items())
      if (!allowed.count(k)) fail(path + k + ": unknown key");
  }

  std::vector<std::string> violations;
};

void parse_continuum(Collector& c, const nlohmann::json& j, ContinuumConfig& cfg) {
  if (!j.is_object()) {
    c.fail("continuum: must be an object");
    return;
  }
  c.unknown_keys(j, kContinuumKeys, "continuum.");
  auto set = [&](auto& field, const char* key) {
    using T = std::decay_t<decltype(field)>;
    if (auto v = c.get<T>(j, key, std::string("continuum.") + key, false)) field = *v;
  };
  set(cfg.length, "length");
  set(cfg.points, "points");
  set(cfg.t_end, "t_end");
  set(cfg.steps, "steps");
  set(cfg.equation, "equation");
  set(cfg.initial, "initial");
  set(cfg.amplitude, "amplitude");
  set(cfg.mode, "mode");
  set(cfg.x0, "x0");
  set(cfg.sigma, "sigma");
  set(cfg.k0, "k0");
  set(cfg.kernel, "kernel");
  set(cfg.kernel_strength, "kernel_strength");
  set(cfg.kernel_width, "kernel_width");
  set(cfg.scale, "scale");
  set(cfg.snapshot_stride, "snapshot_stride");
  if (!(cfg.length > 0.0)) c.fail("continuum.length: must be positive");
  if (cfg.points < 16 || (cfg.points & (cfg.points - 1)) != 0)
    c.fail("continuum.points: must be a power of two >= 16");
  if (!(cfg.t_end > 0.0)) c.fail("continuum.t_end: must be positive");
  if (cfg.steps < 1) c.fail("continuum.steps: must be >= 1");
  if (cfg.equation != "nls" && cfg.equation != "hartree" && cfg.equation != "gp")
    c.fail("continuum.equation: must be nls, hartree or gp");
  if (cfg.initial != "modulated" && cfg.initial != "gaussian" && cfg.initial != "plane_wave")
    c.fail("continuum.initial: must be modulated, gaussian or plane_wave");
  if (cfg.kernel != "delta" && cfg.kernel != "projector")
    c.fail("continuum.kernel: must be delta or projector");
  if (!(cfg.sigma > 0.0)) c.fail("continuum.sigma: must be positive");
  if (!(cfg.kernel_width > 0.0)) c.fail("continuum.kernel_width: must be positive");
  if (!(cfg.scale > 0.0)) c.fail("continuum.scale: must be positive");
  if (cfg.snapshot_stride < 0) c.fail("continuum.snapshot_stride: must be >= 0");
  if (cfg.initial == "modulated" && std::abs(cfg.amplitude) >= 1.0)
    c.fail("continuum.amplitude: modulation depth must be below 1");
}

void semantic_checks(Collector& c, Scenario& s) {
  if (s.experiment == Experiment::Continuum) return;
  try {
    HamiltonianSpec{s.kinetic, s.potential, s.epsilon}.validate();
  } catch (const std::exception& e) {
    c.fail(std::string("hamiltonian: ") + e.what());
  }
  for (const auto& [n, g] : s.g) {
    const double scale = std::max(1.0, g.matrix().cwiseAbs().maxCoeff());
    if (symmetry_report(g).max_deviation > 1e-10 * scale)
      c.fail("correlations.g." + std::to_string(n) + ": not permutation-symmetric");
  }
  int top = 1;
  for (const auto& [n, g] : s.g) top = std::max(top, n);
  for (int n = 2; n <= top; ++n)
    if (!s.g.count(n)) c.fail("correlations.g: missing order " + std::to_string(n));
  const int needed = s.s_max + s.n_max;
  if (!s.chaos && s.closure == CorrelationFamily::Closure::None && top < needed)
    c.fail("correlations: g_n up to n = " + std::to_string(needed) +
           " required (s_max + n_max) without closure");
  if (space_size(s.dim, static_cast<std::size_t>(needed)) > kMaxSide)
    c.fail("truncation: dim^(s_max + n_max) exceeds the dense limit " +
           std::to_string(kMaxSide));
  if (s.f1_0.arity() == 1) {
    try {
      InitialDatum{s.f1_0, CorrelationFamily(s.dim)}.validate();
    } catch (const std::exception& e) {
      c.fail(std::string("f1_0: ") + e.what());
    }
  }
  if (s.experiment == Experiment::HierarchyEquivalence && s.s_max < 2)
    c.fail("truncation.s_max: hierarchy-equivalence needs s_max >= 2");
  if (s.experiment == Experiment::CorrelationPropagation && s.s_max < 2)
    c.fail("truncation.s_max: correlation-propagation needs s_max >= 2");
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : InvalidArgument(join_lines(violations)), violations_(std::move(violations)) {}

const std::map<std::string, double>& default_tolerances() {
  static const std::map<std::string, double> defaults = {
      {"mobius", 0.0},          {"cumulant_t0", 1e-12},  {"cluster_inversion", 1e-10},
      {"kce", 1e-9},            {"closed_form", 1e-10},  {"t0_consistency", 1e-12},
      {"round_trip", 1e-12},    {"gke_defect", 1e-8},    {"trace_drift", 1e-10},
      {"hermiticity", 1e-10},   {"roundoff", 1e-14},     {"mass_per_step", 1e-12},
      {"energy_drift", 1e-8},   {"dt_ratio_window", 0.2}, {"vlasov_series", 1e-10}};
  return defaults;
}

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Identities: return "identities";
    case Experiment::HierarchyEquivalence: return "hierarchy-equivalence";
    case Experiment::MeanfieldLadder: return "meanfield-ladder";
    case Experiment::CorrelationPropagation: return "correlation-propagation";
    case Experiment::Continuum: return "continuum";
  }
  return "unknown";
}

std::optional<Experiment> experiment_from_string(const std::string& s) {
  for (Experiment e : {Experiment::Identities, Experiment::HierarchyEquivalence,
                       Experiment::MeanfieldLadder, Experiment::CorrelationPropagation,
                       Experiment::Continuum})
    if (to_string(e) == s) return e;
  return std::nullopt;
}

double Scenario::tolerance(const std::string& key, double fallback) const {
  auto it = tolerances.find(key);
  return it == tolerances.end() ? fallback : it->second;
}

CorrelationFamily Scenario::correlations() const {
  const int order = std::max(6, s_max + n_max);
  if (chaos) return CorrelationFamily(dim, order);
  return CorrelationFamily(dim, g, closure, order);
}

Scenario parse_scenario(const nlohmann::json& doc) {
  Collector c;
  Scenario s;
  if (!doc.is_object()) throw ValidationError({"scenario: must be a JSON object"});
  s.document = doc;
  c.unknown_keys(doc, kTopKeys, "");

  if (auto v = c.get<std::string>(doc, "name", "name", true)) {
    s.name = *v;
    if (s.name.empty()) c.fail("name: must be nonempty");
  }
  if (auto v = c.get<std::string>(doc, "experiment", "experiment", true)) {
    if (auto e = experiment_from_string(*v))
      s.experiment = *e;
    else
      c.fail("experiment: unknown experiment '" + *v +
             "' (identities | hierarchy-equivalence | meanfield-ladder | "
             "correlation-propagation | continuum)");
  }
  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned())
      c.fail("seed: must be a nonnegative integer");
    else
      s.seed = doc["seed"].get<std::uint64_t>();
  } else {
    c.fail("seed: missing");
  }

  const bool continuum = s.experiment == Experiment::Continuum;
  if (continuum) {
    ContinuumConfig cfg;
    if (doc.contains("continuum"))
      parse_continuum(c, doc["continuum"], cfg);
    else
      c.fail("continuum: missing (required by the continuum experiment)");
    s.continuum = cfg;
  }

  if (auto v = c.get<int>(doc, "dim", "dim", !continuum)) {
    s.dim = *v;
    if (s.dim < 1) c.fail("dim: must be >= 1");
  }
  if (auto v = c.get<double>(doc, "epsilon", "epsilon", false)) s.epsilon = *v;
  if (!(s.epsilon > 0.0)) c.fail("epsilon: must be positive");

  if (auto tr = doc.find("truncation"); tr != doc.end()) {
    c.unknown_keys(*tr, {"n_max", "s_max"}, "truncation.");
    if (auto v = c.get<int>(*tr, "n_max", "truncation.n_max", false)) s.n_max = *v;
    if (auto v = c.get<int>(*tr, "s_max", "truncation.s_max", false)) s.s_max = *v;
  }
  if (s.n_max < 0 || s.n_max > GeneratedEvolution::kMaxSupportedOrder)
    c.fail("truncation.n_max: must be in [0, 3]");
  if (s.s_max < 1) c.fail("truncation.s_max: must be >= 1");

  if (auto tm = doc.find("time"); tm != doc.end()) {
    c.unknown_keys(*tm, {"t_end", "steps"}, "time.");
    if (auto v = c.get<double>(*tm, "t_end", "time.t_end", false)) s.t_end = *v;
    if (auto v = c.get<int>(*tm, "steps", "time.steps", false)) s.steps = *v;
  }
  if (!(s.t_end >= 0.0)) c.fail("time.t_end: must be >= 0");
  if (s.steps < 1) c.fail("time.steps: must be >= 1");

  if (doc.contains("eps_ladder")) {
    if (!doc["eps_ladder"].is_array()) {
      c.fail("eps_ladder: must be an array");
    } else {
      for (const auto& e : doc["eps_ladder"]) {
        if (!e.is_number()) {
          c.fail("eps_ladder: entries must be numbers");
          break;
        }
        s.eps_ladder.push_back(e.get<double>());
      }
    }
  }
  for (std::size_t i = 0; i < s.eps_ladder.size(); ++i) {
    if (!(s.eps_ladder[i] > 0.0)) c.fail("eps_ladder[" + std::to_string(i) + "]: must be positive");
    if (i > 0 && !(s.eps_ladder[i] < s.eps_ladder[i - 1]))
      c.fail("eps_ladder: must be strictly decreasing");
  }

  if (doc.contains("tolerances")) {
    const auto& t = doc["tolerances"];
    if (!t.is_object()) {
      c.fail("tolerances: must be an object");
    } else {
      for (const auto& [k, v] : t.items()) {
        if (!default_tolerances().count(k))
          c.fail("tolerances." + k + ": unknown tolerance name");
        else if (!v.is_number() || !(v.get<double>() > 0.0))
          c.fail("tolerances." + k + ": must be a positive number");
        else
          s.tolerances[k] = v.get<double>();
      }
    }
  }

  if (!continuum && s.dim >= 1) {
    if (auto op = c.op(doc, "kinetic", s.dim, {1}, "kinetic", true)) s.kinetic = *op;
    if (auto op = c.op(doc, "potential", s.dim, {1, 2}, "potential", true)) s.potential = *op;
    if (auto op = c.op(doc, "f1_0", s.dim, {1}, "f1_0", true)) s.f1_0 = *op;
    if (auto cr = doc.find("correlations"); cr != doc.end()) {
      c.unknown_keys(*cr, {"g", "closure"}, "correlations.");
      if (auto v = c.get<std::string>(*cr, "closure", "correlations.closure", false)) {
        if (*v == "pair")
          s.closure = CorrelationFamily::Closure::Pair;
        else if (*v == "none")
          s.closure = CorrelationFamily::Closure::None;
        else
          c.fail("correlations.closure: must be pair or none");
      }
      if (cr->contains("g")) {
        const auto& gj = (*cr)["g"];
        if (!gj.is_object()) c.fail("correlations.g: must be an object keyed by order");
        for (const auto& [key, val] : gj.items()) {
          int n = 0;
          try {
            std::size_t used = 0;
            n = std::stoi(key, &used);
            if (used != key.size()) n = 0;
          } catch (...) {
            n = 0;
          }
          if (n < 2) {
            c.fail("correlations.g." + key + ": order must be an integer >= 2");
            continue;
          }
          if (space_size(s.dim, static_cast<std::size_t>(n)) > kMaxSide) {
            c.fail("correlations.g." + key + ": exceeds the dense limit");
            continue;
          }
          if (auto op = c.op(gj, key, s.dim, label_range(1, n), "correlations.g." + key, true))
            s.g.emplace(n, *op);
        }
        s.chaos = s.g.empty();
      }
    }
    if (c.violations.empty()) semantic_checks(c, s);
  }

  if (!c.violations.empty()) throw ValidationError(c.violations);
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot open scenario file " + path});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw ValidationError({"scenario file " + path + " is not valid JSON: " + e.what()});
  }
  return parse_scenario(doc);
}

void override_n_max(Scenario& s, int n_max) {
  nlohmann::json doc = s.document;
  doc["truncation"]["n_max"] = n_max;
  s = parse_scenario(doc);
}

void override_eps_ladder(Scenario& s, const std::vector<double>& ladder) {
  nlohmann::json doc = s.document;
  doc["eps_ladder"] = ladder;
  s = parse_scenario(doc);
}

std::string scenario_hash(const Scenario& s) {
  const std::string text = s.document.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qk

#include "qkinetic/qkinetic.h"

#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "core/serialization.hpp"
#include "harness/runner.hpp"

struct qk_operator {
  qk::LabeledOperator op;
};
struct qk_scenario {
  qk::Scenario scenario;
};
struct qk_report {
  qk::Report report;
};

namespace {

thread_local std::string last_error;

qk_status fail(qk_status code, const std::string& msg) {
  last_error = msg;
  return code;
}

// Runs body, translating exceptions into status codes.
template <class F>
qk_status guarded(F&& body) {
  try {
    body();
    last_error.clear();
    return QK_OK;
  } catch (const qk::ValidationError& e) {
    return fail(QK_ERR_VALIDATION, e.what());
  } catch (const qk::InvalidArgument& e) {
    return fail(QK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const qk::NumericError& e) {
    return fail(QK_ERR_NUMERIC, e.what());
  } catch (const qk::Error& e) {
    return fail(QK_ERR_IO, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(QK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(QK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(QK_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw qk::InvalidArgument(std::string("null or invalid argument: ") + what);
}

}  // namespace

extern "C" {

const char* qk_version(void) { return "0.1.0"; }
const char* qk_last_error(void) { return last_error.c_str(); }
void qk_string_free(char* s) { delete[] s; }

qk_status qk_operator_create(int dim, const int* labels, size_t n_labels, const double* data,
                             qk_operator** out) {
  return guarded([&] {
    require(out && data && (labels || n_labels == 0), "operator_create");
    *out = nullptr;
    const auto side = qk::space_size(dim, n_labels);
    qk::Matrix m(side, side);
    for (Eigen::Index r = 0; r < side; ++r)
      for (Eigen::Index c = 0; c < side; ++c) {
        const std::size_t k = 2 * static_cast<std::size_t>(r * side + c);
        m(r, c) = {data[k], data[k + 1]};
      }
    qk::Labels l(labels, labels + n_labels);
    for (std::size_t i = 1; i < l.size(); ++i)
      if (l[i] <= l[i - 1]) throw qk::InvalidArgument("labels must be strictly increasing");
    *out = new qk_operator{qk::LabeledOperator(dim, std::move(l), std::move(m))};
  });
}

void qk_operator_free(qk_operator* op) { delete op; }

qk_status qk_operator_tensor(const qk_operator* a, const qk_operator* b, qk_operator** out) {
  return guarded([&] {
    require(a && b && out, "operator_tensor");
    *out = new qk_operator{qk::tensor(a->op, b->op)};
  });
}

qk_status qk_operator_partial_trace(const qk_operator* op, const int* keep, size_t n_keep,
                                    qk_operator** out) {
  return guarded([&] {
    require(op && out && (keep || n_keep == 0), "operator_partial_trace");
    *out = new qk_operator{qk::partial_trace(op->op, qk::Labels(keep, keep + n_keep))};
  });
}

qk_status qk_operator_trace_norm(const qk_operator* op, double* out) {
  return guarded([&] {
    require(op && out, "operator_trace_norm");
    *out = qk::trace_norm(op->op);
  });
}

qk_status qk_operator_side(const qk_operator* op, size_t* out) {
  return guarded([&] {
    require(op && out, "operator_side");
    *out = static_cast<size_t>(op->op.side());
  });
}

qk_status qk_operator_data(const qk_operator* op, double* buffer, size_t capacity) {
  return guarded([&] {
    require(op && buffer, "operator_data");
    const auto side = op->op.side();
    const auto needed = static_cast<size_t>(2 * side * side);
    if (capacity < needed)
      throw qk::InvalidArgument("buffer holds " + std::to_string(capacity) + " doubles, need " +
                                std::to_string(needed));
    const auto& m = op->op.matrix();
    for (Eigen::Index r = 0; r < side; ++r)
      for (Eigen::Index c = 0; c < side; ++c) {
        buffer[2 * (r * side + c)] = m(r, c).real();
        buffer[2 * (r * side + c) + 1] = m(r, c).imag();
      }
  });
}

qk_status qk_operator_to_json(const qk_operator* op, char** out) {
  return guarded([&] {
    require(op && out, "operator_to_json");
    *out = dup(qk::to_json(op->op).dump());
  });
}

qk_status qk_scenario_load(const char* path, qk_scenario** out) {
  return guarded([&] {
    require(path && out, "scenario_load");
    *out = nullptr;
    *out = new qk_scenario{qk::load_scenario(path)};
  });
}

qk_status qk_scenario_parse(const char* json_text, qk_scenario** out) {
  return guarded([&] {
    require(json_text && out, "scenario_parse");
    *out = nullptr;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      throw qk::ValidationError({std::string("malformed JSON: ") + e.what()});
    }
    *out = new qk_scenario{qk::parse_scenario(doc)};
  });
}

void qk_scenario_free(qk_scenario* s) { delete s; }

qk_status qk_scenario_set_n_max(qk_scenario* s, int n_max) {
  return guarded([&] {
    require(s, "scenario_set_n_max");
    qk::override_n_max(s->scenario, n_max);
  });
}

qk_status qk_scenario_set_eps_ladder(qk_scenario* s, const double* ladder, size_t n) {
  return guarded([&] {
    require(s && (ladder || n == 0), "scenario_set_eps_ladder");
    qk::override_eps_ladder(s->scenario, std::vector<double>(ladder, ladder + n));
  });
}

qk_status qk_scenario_hash(const qk_scenario* s, char** out) {
  return guarded([&] {
    require(s && out, "scenario_hash");
    *out = dup(qk::scenario_hash(s->scenario));
  });
}

qk_status qk_run(const qk_scenario* s, const char* out_dir, qk_report** out) {
  return guarded([&] {
    require(s && out, "run");
    *out = nullptr;
    qk::RunOptions options;
    if (out_dir) options.out_dir = out_dir;
    *out = new qk_report{qk::run_scenario(s->scenario, options)};
  });
}

qk_status qk_report_passed(const qk_report* r, int* out) {
  return guarded([&] {
    require(r && out, "report_passed");
    *out = r->report.passed() ? 1 : 0;
  });
}

qk_status qk_report_json(const qk_report* r, char** out) {
  return guarded([&] {
    require(r && out, "report_json");
    *out = dup(qk::report_to_json(r->report).dump(2));
  });
}

void qk_report_free(qk_report* r) { delete r; }

qk_status qk_emit_plot_data(const char* report_path, const char* kind, const char* out_path) {
  return guarded([&] {
    require(report_path && kind && out_path, "emit_plot_data");
    qk::emit_plot_data(report_path, kind, out_path);
  });
}

}  // extern "C"

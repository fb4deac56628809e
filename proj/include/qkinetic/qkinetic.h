#ifndef QKINETIC_H
#define QKINETIC_H

#include <stddef.h>

#if defined(QK_BUILDING_LIBRARY)
#define QK_API __attribute__((visibility("default")))
#else
#define QK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qk_status {
  QK_OK = 0,
  QK_ERR_INVALID_ARGUMENT = 1,
  QK_ERR_VALIDATION = 2,
  QK_ERR_NUMERIC = 3,
  QK_ERR_IO = 4,
  QK_ERR_INTERNAL = 5
} qk_status;

typedef struct qk_operator qk_operator;
typedef struct qk_scenario qk_scenario;
typedef struct qk_report qk_report;

QK_API const char* qk_version(void);
/* Message of the last failed call on this thread; "" after success. A
   rejected scenario lists every violation, one per line. */
QK_API const char* qk_last_error(void);
/* Frees strings returned through char** out-parameters. */
QK_API void qk_string_free(char* s);

/* Operator on H^{n}, H = C^dim, with sorted distinct labels. `data` holds
   side*side (re, im) pairs in row-major order, side = dim^n_labels. */
QK_API qk_status qk_operator_create(int dim, const int* labels, size_t n_labels,
                                    const double* data, qk_operator** out);
QK_API void qk_operator_free(qk_operator* op);
QK_API qk_status qk_operator_tensor(const qk_operator* a, const qk_operator* b,
                                    qk_operator** out);
QK_API qk_status qk_operator_partial_trace(const qk_operator* op, const int* keep,
                                           size_t n_keep, qk_operator** out);
QK_API qk_status qk_operator_trace_norm(const qk_operator* op, double* out);
QK_API qk_status qk_operator_side(const qk_operator* op, size_t* out);
/* Copies side*side (re, im) pairs into `buffer` of `capacity` doubles. */
QK_API qk_status qk_operator_data(const qk_operator* op, double* buffer, size_t capacity);
QK_API qk_status qk_operator_to_json(const qk_operator* op, char** out);

QK_API qk_status qk_scenario_load(const char* path, qk_scenario** out);
QK_API qk_status qk_scenario_parse(const char* json_text, qk_scenario** out);
QK_API void qk_scenario_free(qk_scenario* s);
QK_API qk_status qk_scenario_set_n_max(qk_scenario* s, int n_max);
QK_API qk_status qk_scenario_set_eps_ladder(qk_scenario* s, const double* ladder, size_t n);
QK_API qk_status qk_scenario_hash(const qk_scenario* s, char** out);

/* out_dir may be NULL or "" to skip writing files. */
QK_API qk_status qk_run(const qk_scenario* s, const char* out_dir, qk_report** out);
QK_API qk_status qk_report_passed(const qk_report* r, int* out);
QK_API qk_status qk_report_json(const qk_report* r, char** out);
QK_API void qk_report_free(qk_report* r);

/* kind: "convergence" or "trajectory". */
QK_API qk_status qk_emit_plot_data(const char* report_path, const char* kind,
                                   const char* out_path);

#ifdef __cplusplus
}
#endif

#endif

#ifndef NETCORRUPT_H
#define NETCORRUPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NcStatus {
  NC_STATUS_OK = 0,
  NC_STATUS_NULL_POINTER = 1,
  NC_STATUS_INVALID_UTF8 = 2,
  NC_STATUS_CONFIG = 3,
  NC_STATUS_IO = 4,
  NC_STATUS_NUMERICAL = 5,
  NC_STATUS_BUFFER_TOO_SMALL = 6,
  NC_STATUS_INVALID_ARGUMENT = 7,
  NC_STATUS_PANIC = 8,
} NcStatus;

typedef enum NcMode {
  NC_MODE_RUN = 0,
  NC_MODE_ANALYTIC = 1,
  NC_MODE_MRF = 2,
} NcMode;

// Parsed experiment configuration.
typedef struct NcConfig NcConfig;

// Result of one experiment run.
typedef struct NcReport NcReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next failing call on the same thread.
const char *nc_last_error(void);

// Library version as a static NUL-terminated string.
const char *nc_version(void);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum NcStatus nc_config_load(const char *path, struct NcConfig **out);

// # Safety
// `text` must be a NUL-terminated TOML document; `out` must be writable.
enum NcStatus nc_config_from_toml(const char *text, struct NcConfig **out);

// # Safety
// `cfg` must come from `nc_config_load`/`nc_config_from_toml` or be NULL.
void nc_config_free(struct NcConfig *cfg);

// # Safety
// `cfg` must be a live config handle.
enum NcStatus nc_config_set_seed(struct NcConfig *cfg, uint64_t seed);

// # Safety
// `cfg` must be a live config handle.
enum NcStatus nc_config_set_trials(struct NcConfig *cfg, size_t trials);

// Runs the pipeline selected by `mode`.
//
// # Safety
// `cfg` must be a live config handle; `out` must be writable.
enum NcStatus nc_run(const struct NcConfig *cfg, enum NcMode mode, struct NcReport **out);

// # Safety
// `report` must come from `nc_run` or be NULL.
void nc_report_free(struct NcReport *report);

// 0 if the recovered graph lies inside the prediction, 2 otherwise, -1 on NULL.
//
// # Safety
// `report` must be a live report handle or NULL.
int32_t nc_report_exit_code(const struct NcReport *report);

// Node count, or 0 on NULL.
//
// # Safety
// `report` must be a live report handle or NULL.
size_t nc_report_node_count(const struct NcReport *report);

// Number of edges outside the perturbed graph.
//
// # Safety
// `report` must be a live report handle or NULL.
size_t nc_report_violation_count(const struct NcReport *report);

// Recovered edges as 0-based index pairs `(i, j)`, `i < j`, flattened into
// `buf`. `*len` receives the edge count; call with `buf = NULL, cap = 0`
// to query it.
//
// # Safety
// `buf` must hold `cap` elements; `len` must be writable.
enum NcStatus nc_report_edges(const struct NcReport *report, size_t *buf, size_t cap, size_t *len);

// Full report as JSON; release with `nc_string_free`. NULL on error.
//
// # Safety
// `report` must be a live report handle.
char *nc_report_json(const struct NcReport *report);

// Writes report.json, scores.csv and the DOT files into `dir`.
//
// # Safety
// `report` must be a live report handle; `dir` a NUL-terminated path.
enum NcStatus nc_report_write(const struct NcReport *report, const char *dir);

// # Safety
// `s` must come from this library or be NULL.
void nc_string_free(char *s);

// Perturbed graph of an undirected graph on `n` nodes (edges as flattened
// index pairs) for corrupted nodes `z`. Output follows `nc_report_edges`.
//
// # Safety
// `edges` holds `2 * n_edges` elements, `z` holds `n_z`; `out` holds `cap`.
enum NcStatus nc_perturbed_graph(size_t n,
                                 const size_t *edges,
                                 size_t n_edges,
                                 const size_t *z,
                                 size_t n_z,
                                 size_t *out,
                                 size_t cap,
                                 size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NETCORRUPT_H */

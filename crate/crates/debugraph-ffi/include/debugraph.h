/* C interface to the debugraph engine. Handles are opaque; every
 * entry point returns a DgStatus and reports detail through
 * dg_last_error_message(). Strings are UTF-8, JSON-encoded where the
 * signature says so, and owned strings must be released with
 * dg_string_free(). */

#ifndef DEBUGRAPH_H
#define DEBUGRAPH_H

/* Generated by cbindgen from debugraph-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Zero is success; nonzero values mirror the
 * engine's error categories, plus [`DgStatus::Panic`] for a caught internal
 * fault.
 */
enum DgStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  DG_STATUS_OK = 0,
  /**
   * Filesystem or other I/O failure.
   */
  DG_STATUS_IO = 1,
  /**
   * Malformed JSON or manifest.
   */
  DG_STATUS_PARSE = 2,
  /**
   * Graph-structure violation (unknown node, dangling edge, ...).
   */
  DG_STATUS_GRAPH = 3,
  /**
   * Invalid arguments or configuration.
   */
  DG_STATUS_USAGE = 4,
  /**
   * Pattern-memory violation (duplicate id, time regression, ...).
   */
  DG_STATUS_MEMORY = 5,
  /**
   * Fix-loop failure.
   */
  DG_STATUS_FIX_LOOP = 6,
  /**
   * Evaluation-harness failure.
   */
  DG_STATUS_EVAL = 7,
  /**
   * An internal invariant broke; the handle is still valid but the
   * operation had no effect.
   */
  DG_STATUS_PANIC = 8,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum DgStatus DgStatus;
#else
typedef int32_t DgStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque handle to an in-memory code graph.
 */
typedef struct DgGraph DgGraph;

/**
 * Opaque handle to an open pattern store.
 */
typedef struct DgPdm DgPdm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of this library as a static NUL-terminated string. Never freed.
 */
const char *dg_version(void);

/**
 * A copy of the message from the most recent failure on this thread, or
 * null when the last call succeeded. Release it with [`dg_string_free`].
 */
char *dg_last_error_message(void);

/**
 * Release a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `text` must be null or a pointer previously returned by a function in
 * this library, not yet freed.
 */
void dg_string_free(char *text);

/**
 * Build a graph from a JSON manifest. With `lenient` set, unknown manifest
 * fields are tolerated instead of rejected. On success `*out_graph` owns the
 * new handle; release it with [`dg_graph_free`].
 *
 * # Safety
 * `manifest_json` must be a valid NUL-terminated string and `out_graph` a
 * valid destination pointer.
 */
DgStatus dg_graph_from_manifest_json(const char *manifest_json,
                                     bool lenient,
                                     struct DgGraph **out_graph);

/**
 * Build a graph from a manifest file on disk. See
 * [`dg_graph_from_manifest_json`].
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out_graph` a valid
 * destination pointer.
 */
DgStatus dg_graph_from_manifest_file(const char *path, bool lenient, struct DgGraph **out_graph);

/**
 * Number of nodes in the graph.
 *
 * # Safety
 * `graph` must be a live handle from this library and `out_count` a valid
 * destination pointer.
 */
DgStatus dg_graph_node_count(const struct DgGraph *graph, size_t *out_count);

/**
 * Number of edges in the graph.
 *
 * # Safety
 * `graph` must be a live handle from this library and `out_count` a valid
 * destination pointer.
 */
DgStatus dg_graph_edge_count(const struct DgGraph *graph, size_t *out_count);

/**
 * Serialize the graph back to its JSON manifest form. The caller owns
 * `*out_json`.
 *
 * # Safety
 * `graph` must be a live handle from this library and `out_json` a valid
 * destination pointer.
 */
DgStatus dg_graph_to_manifest_json(const struct DgGraph *graph, char **out_json);

/**
 * Release a graph handle. Null is a no-op.
 *
 * # Safety
 * `graph` must be null or a handle from this library, not yet freed.
 */
void dg_graph_free(struct DgGraph *graph);

/**
 * Run adaptive retrieval. `query_json` is a query document (`text`,
 * `seed_hints`, `stack_frames`); `config_json` may be null for the default
 * tuning. `now` is the evaluation clock in epoch seconds. On success
 * `*out_json` holds `{"confidence": .., "context": ..}` and belongs to the
 * caller.
 *
 * # Safety
 * `graph` must be a live handle from this library; `query_json` must be a
 * valid NUL-terminated string; `config_json` must be null or a valid
 * NUL-terminated string; `out_json` must be a valid destination pointer.
 */
DgStatus dg_retrieve_json(const struct DgGraph *graph,
                          const char *query_json,
                          const char *config_json,
                          int64_t now,
                          char **out_json);

/**
 * Open (or create) a pattern store rooted at `dir`. On success `*out_pdm`
 * owns the handle; release it with [`dg_pdm_free`].
 *
 * # Safety
 * `dir` must be a valid NUL-terminated string and `out_pdm` a valid
 * destination pointer.
 */
DgStatus dg_pdm_open(const char *dir, struct DgPdm **out_pdm);

/**
 * Number of live records in the store.
 *
 * # Safety
 * `pdm` must be a live handle from this library and `out_count` a valid
 * destination pointer.
 */
DgStatus dg_pdm_len(const struct DgPdm *pdm, size_t *out_count);

/**
 * Insert one debug-pattern record, given as JSON.
 *
 * # Safety
 * `pdm` must be a live handle from this library (and not aliased by a
 * concurrent call) and `record_json` a valid NUL-terminated string.
 */
DgStatus dg_pdm_store_json(struct DgPdm *pdm, const char *record_json);

/**
 * Rank stored patterns against a probe. `paths_json` may be null or a JSON
 * array of context paths. On success `*out_json` holds an array of
 * `{"record": .., "score": ..}` rows and belongs to the caller.
 *
 * # Safety
 * `pdm` must be a live handle from this library; `signature` must be a
 * valid NUL-terminated string; `paths_json` must be null or a valid
 * NUL-terminated string; `out_json` must be a valid destination pointer.
 */
DgStatus dg_pdm_query_json(const struct DgPdm *pdm,
                           const char *signature,
                           const char *paths_json,
                           int64_t now,
                           size_t limit,
                           char **out_json);

/**
 * Apply the retention policy as of `now`. On success `*out_json` holds the
 * eviction report and belongs to the caller.
 *
 * # Safety
 * `pdm` must be a live handle from this library (and not aliased by a
 * concurrent call) and `out_json` a valid destination pointer.
 */
DgStatus dg_pdm_gc_json(struct DgPdm *pdm, int64_t now, char **out_json);

/**
 * Release a store handle. Null is a no-op. Pending state is already on
 * disk; there is nothing to flush.
 *
 * # Safety
 * `pdm` must be null or a handle from this library, not yet freed.
 */
void dg_pdm_free(struct DgPdm *pdm);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEBUGRAPH_H */

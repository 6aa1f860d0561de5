/* SPDX-License-Identifier: Apache-2.0 */

#ifndef SCRIPT_INTENT_H
#define SCRIPT_INTENT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Comment density class of a script.
 */
typedef enum {
  SI_COMMENT_CLASS_UNCOMMENTED = 0,
  SI_COMMENT_CLASS_COMMENTED = 1,
  SI_COMMENT_CLASS_WELL_COMMENTED = 2,
} SiCommentClass;

/**
 * Metric selector for [`si_metric_report_get`].
 */
typedef enum {
  SI_METRIC_BLEU1 = 0,
  SI_METRIC_BLEU2 = 1,
  SI_METRIC_BLEU3 = 2,
  SI_METRIC_BLEU4 = 3,
  SI_METRIC_CIDER = 4,
  SI_METRIC_METEOR = 5,
  SI_METRIC_ROUGE_L = 6,
} SiMetric;

/**
 * Outcome of a call.
 */
typedef enum {
  SI_STATUS_OK = 0,
  SI_STATUS_NULL_ARGUMENT = 1,
  SI_STATUS_INVALID_UTF8 = 2,
  SI_STATUS_PARSE_ERROR = 3,
  SI_STATUS_NOT_FOUND = 4,
  SI_STATUS_INVALID_ARGUMENT = 5,
  SI_STATUS_IO_ERROR = 6,
  SI_STATUS_PANIC = 7,
} SiStatus;

/**
 * Parsed UI hierarchy dump.
 */
typedef struct SiLayout SiLayout;

/**
 * Corpus scores from [`si_metrics_evaluate`].
 */
typedef struct SiMetricReport SiMetricReport;

/**
 * Parsed operation sequence of one test script.
 */
typedef struct SiScript SiScript;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into the library from this thread.
 */
const char *si_last_error(void);

/**
 * Library version as a static string.
 */
const char *si_version(void);

/**
 * Release a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` is NULL or a pointer obtained from this library and not yet freed.
 */
void si_string_free(char *s);

/**
 * Parse a test script into its operation sequence.
 *
 * # Safety
 * `source` and `script_path` are NUL-terminated strings; `out` is writable.
 */
SiStatus si_script_parse(const char *source, const char *script_path, SiScript **out);

/**
 * # Safety
 * `s` is NULL or a handle from [`si_script_parse`] not yet freed.
 */
void si_script_free(SiScript *s);

/**
 * Number of operations in the script.
 *
 * # Safety
 * `s` is a live script handle; `out` is writable.
 */
SiStatus si_script_len(const SiScript *s, size_t *out);

/**
 * The operation sequence as a JSON string, freed with [`si_string_free`].
 *
 * # Safety
 * `s` is a live script handle; `out` is writable.
 */
SiStatus si_script_to_json(const SiScript *s, char **out);

/**
 * Comment-to-code line ratio of a script and its class.
 *
 * # Safety
 * `source` is a NUL-terminated string; `ratio` and `class_out` are writable.
 */
SiStatus si_comment_ratio(const char *source, double *ratio, SiCommentClass *class_out);

/**
 * Parse a UI hierarchy dump.
 *
 * # Safety
 * `xml` is a NUL-terminated string; `out` is writable.
 */
SiStatus si_layout_parse(const char *xml, SiLayout **out);

/**
 * # Safety
 * `l` is NULL or a handle from [`si_layout_parse`] not yet freed.
 */
void si_layout_free(SiLayout *l);

/**
 * Number of nodes, root included. Node ids run from 0 (the root) in document order.
 *
 * # Safety
 * `l` is a live layout handle; `out` is writable.
 */
SiStatus si_layout_len(const SiLayout *l, size_t *out);

/**
 * Resolve a selector to a node id.
 *
 * # Safety
 * `l` is a live layout handle; `xpath` is a NUL-terminated string; `node_out` is writable.
 */
SiStatus si_layout_resolve(const SiLayout *l, const char *xpath, size_t *node_out);

/**
 * Canonical hierarchy selector of `node`, freed with [`si_string_free`].
 *
 * # Safety
 * `l` is a live layout handle; `out` is writable.
 */
SiStatus si_layout_node_xpath(const SiLayout *l, size_t node, char **out);

/**
 * Score candidates against references. Both arguments hold one sentence
 * per line; alternative references on a line are separated by ` ||| `.
 *
 * # Safety
 * `candidates` and `references` are NUL-terminated strings; `out` is writable.
 */
SiStatus si_metrics_evaluate(const char *candidates, const char *references, SiMetricReport **out);

/**
 * # Safety
 * `r` is NULL or a handle from [`si_metrics_evaluate`] not yet freed.
 */
void si_metric_report_free(SiMetricReport *r);

/**
 * One corpus score in `[0, 1]`.
 *
 * # Safety
 * `r` is a live report handle; `out` is writable.
 */
SiStatus si_metric_report_get(const SiMetricReport *r, SiMetric metric, double *out);

/**
 * Run the full analysis of one script and return the JSON report, freed
 * with [`si_string_free`]. Captions come from the gallery and code intents
 * from method names; no model backend is started.
 *
 * # Safety
 * All path arguments are NUL-terminated strings; `out` is writable.
 */
SiStatus si_analyze(const char *script_path,
                    const char *bundle_dir,
                    const char *source_dir,
                    const char *gallery_dir,
                    char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCRIPT_INTENT_H */

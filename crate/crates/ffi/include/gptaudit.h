#ifndef GPTAUDIT_H
#define GPTAUDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GaStatus {
  GA_STATUS_OK = 0,
  GA_STATUS_NULL_ARGUMENT = 1,
  GA_STATUS_INVALID_UTF8 = 2,
  GA_STATUS_INVALID_INPUT = 3,
  GA_STATUS_NOT_FOUND = 4,
  GA_STATUS_CORRUPT = 5,
  GA_STATUS_IO = 6,
  GA_STATUS_INCONSISTENT = 7,
  GA_STATUS_OUT_OF_RANGE = 8,
  GA_STATUS_PANIC = 99,
} GaStatus;

typedef enum GaClass {
  GA_CLASS_PROMPT_BASED = 0,
  GA_CLASS_KNOWLEDGE_BASED = 1,
  GA_CLASS_ACTION_BASED = 2,
} GaClass;

typedef enum GaReportFormat {
  GA_REPORT_FORMAT_CSV = 0,
  GA_REPORT_FORMAT_JSON = 1,
} GaReportFormat;

/**
 * Opaque diff result; events are rendered as JSON on creation.
 */
typedef struct GaDiff GaDiff;

/**
 * Opaque loaded snapshot.
 */
typedef struct GaSnapshot GaSnapshot;

typedef struct GaAuditDistribution {
  uint64_t accessible;
  uint64_t broken;
  uint64_t homepage;
  uint64_t timeout;
  uint64_t server_error;
} GaAuditDistribution;

typedef struct GaDomainBuckets {
  uint64_t zero;
  uint64_t one;
  uint64_t two_plus;
} GaDomainBuckets;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next library call on the same thread.
 */
const char *ga_last_error_message(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void ga_string_free(char *s);

/**
 * # Safety
 * `id` must be a valid NUL-terminated string.
 */
enum GaStatus ga_validate_gizmo_id(const char *id);

/**
 * Writes `{base}/g/g-{id}` to `out`. A null `base` means the public store.
 *
 * # Safety
 * `base` may be null; `id` must be a valid string; `out` must be writable.
 */
enum GaStatus ga_build_access_url(const char *base, const char *id, char **out);

/**
 * Classifies one metadata record given as JSON.
 *
 * # Safety
 * `json` must be a valid string; `out` must be writable.
 */
enum GaStatus ga_classify_json(const char *json, enum GaClass *out);

/**
 * # Safety
 * `url` must be a valid string; `out` must be writable.
 */
enum GaStatus ga_is_placeholder(const char *url, bool *out);

/**
 * # Safety
 * `url` must be a valid string; `out` must be writable.
 */
enum GaStatus ga_is_homepage_only(const char *url, bool *out);

/**
 * Visible text of an HTML document, whitespace collapsed.
 *
 * # Safety
 * `html` must point to `len` readable bytes; `out` must be writable.
 */
enum GaStatus ga_extract_text(const uint8_t *html, size_t len, char **out);

/**
 * Loads and verifies snapshot `id` under `root`.
 *
 * # Safety
 * `root` and `id` must be valid strings; `out` must be writable.
 */
enum GaStatus ga_snapshot_load(const char *root, const char *id, struct GaSnapshot **out);

/**
 * # Safety
 * `s` must come from [`ga_snapshot_load`] or be null.
 */
void ga_snapshot_free(struct GaSnapshot *s);

/**
 * # Safety
 * `s` must be a live snapshot handle.
 */
uint64_t ga_snapshot_app_count(const struct GaSnapshot *s);

/**
 * # Safety
 * `s` must be a live snapshot handle; `out` must be writable.
 */
enum GaStatus ga_snapshot_audit_distribution(const struct GaSnapshot *s,
                                             struct GaAuditDistribution *out);

/**
 * # Safety
 * `s` must be a live snapshot handle; `out` must be writable.
 */
enum GaStatus ga_snapshot_domain_buckets(const struct GaSnapshot *s, struct GaDomainBuckets *out);

/**
 * Writes the report tables into `dir`.
 *
 * # Safety
 * `s` must be a live snapshot handle; `dir` must be a valid string.
 */
enum GaStatus ga_snapshot_export_report(const struct GaSnapshot *s,
                                        enum GaReportFormat format,
                                        const char *dir);

/**
 * Change events from `a` to `b`.
 *
 * # Safety
 * `a` and `b` must be live snapshot handles; `out` must be writable.
 */
enum GaStatus ga_diff_new(const struct GaSnapshot *a,
                          const struct GaSnapshot *b,
                          struct GaDiff **out);

/**
 * # Safety
 * `d` must be a live diff handle or null.
 */
uint64_t ga_diff_len(const struct GaDiff *d);

/**
 * JSON of event `index`. The pointer stays valid while the handle lives.
 *
 * # Safety
 * `d` must be a live diff handle; `out` must be writable.
 */
enum GaStatus ga_diff_event_json(const struct GaDiff *d, uint64_t index, const char **out);

/**
 * # Safety
 * `d` must come from [`ga_diff_new`] or be null.
 */
void ga_diff_free(struct GaDiff *d);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPTAUDIT_H */

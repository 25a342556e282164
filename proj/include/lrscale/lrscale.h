/* Copyright 2026 The lrscale Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to liblrscale.
 *
 * Conventions:
 *   - Every fallible call returns an lrs_status; LRS_OK is 0. On failure the
 *     message is available from lrs_last_error() on the same thread.
 *   - Structured inputs and outputs are JSON text (UTF-8, NUL-terminated).
 *     Strings returned through `char**` are owned by the caller and must be
 *     released with lrs_string_free().
 *   - Handles are opaque; each has a matching free/close function that
 *     accepts NULL.
 *   - Handles are not synchronized. Distinct handles may be used from
 *     different threads concurrently.
 */
#ifndef LRSCALE_LRSCALE_H_
#define LRSCALE_LRSCALE_H_

#include <stddef.h>
#include <stdint.h>

#if defined(LRSCALE_BUILDING_LIBRARY)
#define LRS_API __attribute__((visibility("default")))
#else
#define LRS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lrs_status {
  LRS_OK = 0,
  LRS_INVALID_ARGUMENT = 1,
  LRS_PARSE = 2,
  LRS_DUPLICATE = 3,
  LRS_UNDERDETERMINED = 4,
  LRS_DEGENERATE = 5,
  LRS_NO_INTERIOR_OPTIMUM = 6,
  LRS_NOT_CONVERGED = 7,
  LRS_PLAN_COMPLETE = 8,
  LRS_SHAPE_MISMATCH = 9,
  LRS_UNIT_MISMATCH = 10,
  LRS_OUT_OF_TRUST_REGION = 11,
  LRS_DIVERGED = 12,
  LRS_IO = 13,
  LRS_INTERNAL = 99
} lrs_status;

typedef struct lrs_run_store lrs_run_store;
typedef struct lrs_law lrs_law;
typedef struct lrs_search_plan lrs_search_plan;
typedef struct lrs_transfer_plan lrs_transfer_plan;

LRS_API const char* lrs_version(void);
/* Stable identifier such as "invalid_argument"; "unknown" for other values. */
LRS_API const char* lrs_status_name(lrs_status status);
/* Message of the last failed call on this thread; "" if none. */
LRS_API const char* lrs_last_error(void);
LRS_API void lrs_string_free(char* s);

/* ---- utilities ---------------------------------------------------------- */

/* "12e9", "500B", "1.5k", "7M" -> raw count. */
LRS_API lrs_status lrs_parse_quantity(const char* text, double* out);
/* FNV-1a 64 of the bytes as 16 lowercase hex digits. */
LRS_API lrs_status lrs_digest(const char* bytes, size_t len, char** hex_out);
/* Built-in model shape ("0.5b" ... "12b", "2b-proxy"); "shapes/" prefix ok. */
LRS_API lrs_status lrs_builtin_shape(const char* name, char** shape_json);
/* WSD learning rate after `step` updates. */
LRS_API lrs_status lrs_wsd_lr(int64_t warmup_steps, double peak_lr, double decay_fraction,
                              int64_t decay_steps, int64_t step, int64_t total_stable_steps,
                              double* out);

/* ---- run store ---------------------------------------------------------- */

/* Opens (or prepares to create) an append-only JSONL store; "" = in memory. */
LRS_API lrs_status lrs_run_store_open(const char* path, lrs_run_store** out);
LRS_API void lrs_run_store_close(lrs_run_store* store);
/* Parses JSONL and appends all records atomically. `report_json` (may be
 * NULL) receives {"accepted": n, "rejected": [{"line", "field", "message"}]}.
 * Any rejected line appends nothing and returns LRS_PARSE; a run_id already
 * stored returns LRS_DUPLICATE. */
LRS_API lrs_status lrs_run_store_ingest(lrs_run_store* store, const char* jsonl,
                                        char** report_json);
LRS_API lrs_status lrs_run_store_size(const lrs_run_store* store, size_t* out);
LRS_API lrs_status lrs_run_store_export(const lrs_run_store* store, char** jsonl);
LRS_API lrs_status lrs_run_store_get(const lrs_run_store* store, const char* run_id,
                                     char** run_json);

/* ---- single-run fits ---------------------------------------------------- */

/* request: {"samples": [[tokens, loss], ...], "min_tokens"?, "min_gamma"?,
 *           "max_gamma_rel_stderr"?}  ->  power_law artifact. */
LRS_API lrs_status lrs_fit_power_law(const char* request, char** artifact);
/* Evaluates a power_law artifact; *extrapolated is set when tokens lie past
 * the fitted range. */
LRS_API lrs_status lrs_extrapolate(const char* artifact, double tokens, double* loss,
                                   int* extrapolated);
/* -> {"samples": [[tokens, loss], ...]} */
LRS_API lrs_status lrs_resample(const char* artifact, double interval, double lo, double hi,
                                int strict, char** samples_json);
/* request: {"points": [[lr, loss], ...]}  ->  quad_log artifact with eta_star. */
LRS_API lrs_status lrs_fit_quad(const char* request, char** artifact);

/* ---- optimal-LR law ----------------------------------------------------- */

/* options: {"D_grid": [...], "source": "smoothed"|"raw",
 *           "param_count": "total"|"active"}  ->  optima artifact with failures. */
LRS_API lrs_status lrs_collect_optima(const lrs_run_store* store, const char* options,
                                      char** optima_json);
/* optima artifact (or bare point list) + optional units {"n_scale", "d_scale",
 * "n_label", "d_label"} (NULL = raw)  ->  lr_law artifact. */
LRS_API lrs_status lrs_fit_law(const char* optima_json, const char* units_json,
                               char** law_artifact);
LRS_API lrs_status lrs_law_from_json(const char* artifact, lrs_law** out);
LRS_API void lrs_law_free(lrs_law* law);
/* N and D in the law's units. */
LRS_API lrs_status lrs_law_predict(const lrs_law* law, double N, double D, double* out);
/* Like lrs_law_predict, checking the caller's declared units first. */
LRS_API lrs_status lrs_law_predict_units(const lrs_law* law, double N, double D,
                                         const char* units_json, double* out);
LRS_API lrs_status lrs_law_ratio(const lrs_law* law, double N1, double N2, double D1,
                                 double D2, double* out);
LRS_API lrs_status lrs_law_to_json(const lrs_law* law, char** artifact);

/* ---- module-level search ------------------------------------------------ */

/* request: {"shape": <shape or builtin name>, "global_opt_lr": x,
 *           "grids": {"lm_head": [...], ...} | {"all": [...]},
 *           "D_budget"?: tokens, "stage_order"?: ["lm_head", ...]} */
LRS_API lrs_status lrs_search_plan_init(const char* request, lrs_search_plan** out);
LRS_API lrs_status lrs_search_plan_from_json(const char* json, lrs_search_plan** out);
LRS_API void lrs_search_plan_free(lrs_search_plan* plan);
LRS_API lrs_status lrs_search_plan_to_json(const lrs_search_plan* plan, char** json);
/* -> [run config, ...]; LRS_PLAN_COMPLETE once every stage is recorded. */
LRS_API lrs_status lrs_search_plan_next(const lrs_search_plan* plan, char** configs_json);
/* points: [[lr, loss], ...] for the current stage; advances the plan. */
LRS_API lrs_status lrs_search_plan_record(lrs_search_plan* plan, const char* points_json);
/* plans: [search_plan, ...] -> module_lr_table artifact; csv may be NULL. */
LRS_API lrs_status lrs_module_table(const char* plans_json, char** table_json, char** csv);

/* ---- transfer plans ----------------------------------------------------- */

/* request: {"proxy": <shape or name>, "target": <shape or name>,
 *           "tokens_proxy": n, "tokens_target": n, "alpha"?: 1,
 *           "variant"?: "complete_p"|"mup"} */
LRS_API lrs_status lrs_transfer_plan_make(const char* request, lrs_transfer_plan** out);
LRS_API lrs_status lrs_transfer_plan_from_json(const char* json, lrs_transfer_plan** out);
LRS_API void lrs_transfer_plan_free(lrs_transfer_plan* plan);
LRS_API lrs_status lrs_transfer_plan_to_json(const lrs_transfer_plan* plan, char** json);
LRS_API lrs_status lrs_transfer_plan_compose(const lrs_transfer_plan* first,
                                             const lrs_transfer_plan* second,
                                             lrs_transfer_plan** out);
/* base: {"eta_b", "sigma_b", "eps_b", "lambda_b", "tokens_b"?} */
LRS_API lrs_status lrs_transfer_plan_apply(const lrs_transfer_plan* plan, const char* base,
                                           char** hparams_json);
LRS_API lrs_status lrs_transfer_plan_table(const lrs_transfer_plan* plan, char** text);

/* ---- oracle ------------------------------------------------------------- */

LRS_API lrs_status lrs_reference_surface(double noise_sigma, uint64_t seed, char** surface_json);
/* request: {"surface": {...}, "shapes": [name or shape, ...], "D_grid": [...],
 *           "lr_grid": [...]}; missing fields take the built-in reference design. -> JSONL. */
LRS_API lrs_status lrs_simulate(const char* request, char** jsonl);
LRS_API lrs_status lrs_sample_loss(const char* surface_json, double N, double D, double eta,
                                   double* out);

/* ---- micro-trainer ------------------------------------------------------ */

/* request: {"width", "depth", "heads"?, "vocab"?, "moe_experts"?, "qk_norm"?,
 *           "parametrization": "sp"|"mup_complete", "lr"? (sp),
 *           "base"?: {...}, "base_width"?, "base_depth"?, "plan"?: transfer plan,
 *           "seed"?}  ->  net_config. */
LRS_API lrs_status lrs_net_config(const char* request, char** net_config_json);
/* request: {"net": net_config, "task"?: {...}, "steps"?, "warmup_steps"?,
 *           "decay_steps"?, "checkpoints"?, "probe_sequences"?,
 *           "ablate_qk_norm"?, "keep_snapshots"?}  ->  train_trace. */
LRS_API lrs_status lrs_train_micro(const char* request, char** trace_json);
/* sweep config -> coord_check report (with a step series when with_steps). */
LRS_API lrs_status lrs_coordcheck(const char* sweep_json, int with_steps, char** report_json);
/* request: {"net": net_config, "task"?: {...}, "epsilon"? (1e-4), "coords"? (6)}. */
LRS_API lrs_status lrs_grad_check(const char* request, char** result_json);

#ifdef __cplusplus
}
#endif

#endif /* LRSCALE_LRSCALE_H_ */

/* Copyright 2026 The lrscale Authors
 * SPDX-License-Identifier: Apache-2.0 */

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "lrscale/lrscale.h"

static int failures = 0;

#define EXPECT(cond)                                                  \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define EXPECT_OK(call)                                                         \
  do {                                                                          \
    lrs_status st_ = (call);                                                    \
    if (st_ != LRS_OK) {                                                        \
      fprintf(stderr, "%s:%d: %s -> %s: %s\n", __FILE__, __LINE__, #call,       \
              lrs_status_name(st_), lrs_last_error());                          \
      ++failures;                                                               \
    }                                                                           \
  } while (0)

static int near(double a, double b, double rel) { return fabs(a - b) <= rel * fabs(b); }

static void test_utilities(void) {
  double q = 0;
  char* hex = NULL;
  EXPECT(lrs_version() != NULL && strlen(lrs_version()) > 0);
  EXPECT(strcmp(lrs_status_name(LRS_OK), "ok") == 0);
  EXPECT_OK(lrs_parse_quantity("500B", &q));
  EXPECT(q == 500e9);
  EXPECT(lrs_parse_quantity("12X", &q) == LRS_PARSE);
  EXPECT(strlen(lrs_last_error()) > 0);
  EXPECT(lrs_parse_quantity(NULL, &q) == LRS_INVALID_ARGUMENT);
  EXPECT_OK(lrs_digest("foobar", 6, &hex));
  EXPECT(hex && strcmp(hex, "85944171f73967e8") == 0);
  lrs_string_free(hex);
  lrs_string_free(NULL);

  double lr = 0;
  EXPECT_OK(lrs_wsd_lr(10, 2.0, 0.1, 10, 5, 100, &lr));
  EXPECT(lr == 1.0);
  EXPECT_OK(lrs_wsd_lr(10, 2.0, 0.1, 10, 500, 100, &lr));
  EXPECT(near(lr, 0.2, 1e-12));

  char* shape = NULL;
  EXPECT_OK(lrs_builtin_shape("shapes/12b", &shape));
  EXPECT(shape && strstr(shape, "1280") != NULL);
  lrs_string_free(shape);
  EXPECT(lrs_builtin_shape("7b", &shape) == LRS_INVALID_ARGUMENT);
}

static void test_pipeline(void) {
  char* jsonl = NULL;
  EXPECT_OK(lrs_simulate("{\"surface\": {\"noise_sigma\": 0.0}}", &jsonl));
  if (!jsonl) return;

  lrs_run_store* store = NULL;
  char* report = NULL;
  size_t n = 0;
  EXPECT_OK(lrs_run_store_open("", &store));
  EXPECT_OK(lrs_run_store_ingest(store, jsonl, &report));
  EXPECT(report && strstr(report, "\"accepted\":28") != NULL);
  lrs_string_free(report);
  EXPECT_OK(lrs_run_store_size(store, &n));
  EXPECT(n == 28);
  EXPECT(lrs_run_store_ingest(store, jsonl, NULL) == LRS_DUPLICATE);
  EXPECT(lrs_run_store_ingest(store, "{not json}\n", NULL) == LRS_PARSE);
  EXPECT_OK(lrs_run_store_size(store, &n));
  EXPECT(n == 28);

  char* exported = NULL;
  EXPECT_OK(lrs_run_store_export(store, &exported));
  EXPECT(exported && strcmp(exported, jsonl) == 0);
  lrs_string_free(exported);

  char* optima = NULL;
  EXPECT_OK(lrs_collect_optima(store, "{\"D_grid\": [\"80B\", \"120B\", \"220B\"], \"source\": \"raw\"}",
                               &optima));
  char* law_json = NULL;
  if (optima) EXPECT_OK(lrs_fit_law(optima, "{\"n_scale\": 1e9, \"n_label\": \"B\"}", &law_json));
  lrs_law* law = NULL;
  if (law_json) EXPECT_OK(lrs_law_from_json(law_json, &law));
  if (law) {
    double eta = 0, ratio = 0;
    const double want = 38.4588 * pow(4e9, -0.2219) * pow(120e9, -0.3509);
    EXPECT_OK(lrs_law_predict(law, 4.0, 120e9, &eta));
    EXPECT(near(eta, want, 1e-4));
    EXPECT(lrs_law_predict_units(law, 4e9, 120e9, "{}", &eta) == LRS_UNIT_MISMATCH);
    EXPECT_OK(lrs_law_ratio(law, 0.55, 4.0, 1.0, 1.0, &ratio));
    EXPECT(near(ratio, 1.553, 1e-3));
    EXPECT(lrs_law_predict(law, -1.0, 1.0, &eta) == LRS_INVALID_ARGUMENT);
    lrs_law_free(law);
  }
  lrs_string_free(optima);
  lrs_string_free(law_json);
  lrs_run_store_close(store);
  lrs_string_free(jsonl);
}

static void test_search_plan(void) {
  lrs_search_plan* plan = NULL;
  char* configs = NULL;
  EXPECT_OK(lrs_search_plan_init(
      "{\"shape\": \"4b\", \"global_opt_lr\": 5.55e-4, \"grids\": {\"all\": [1e-4, 3e-4, 1e-3]}}",
      &plan));
  if (!plan) return;
  EXPECT_OK(lrs_search_plan_next(plan, &configs));
  EXPECT(configs && strstr(configs, "lm_head") != NULL);
  lrs_string_free(configs);
  for (int s = 0; s < 4; ++s) {
    EXPECT_OK(lrs_search_plan_record(plan, "[[1e-4, 2.1], [3e-4, 2.0], [1e-3, 2.1]]"));
  }
  EXPECT(lrs_search_plan_next(plan, &configs) == LRS_PLAN_COMPLETE);
  EXPECT(lrs_search_plan_record(plan, "[[1e-4, 2.1], [3e-4, 2.0], [1e-3, 2.1]]") ==
         LRS_PLAN_COMPLETE);
  char* pj = NULL;
  EXPECT_OK(lrs_search_plan_to_json(plan, &pj));
  if (pj) {
    size_t len = strlen(pj);
    char* arr = malloc(len + 3);
    snprintf(arr, len + 3, "[%s]", pj);
    char *table = NULL, *csv = NULL;
    EXPECT_OK(lrs_module_table(arr, &table, &csv));
    EXPECT(csv && strncmp(csv, "shape,N,", 8) == 0);
    lrs_string_free(table);
    lrs_string_free(csv);
    free(arr);
  }
  lrs_string_free(pj);
  lrs_search_plan_free(plan);
  EXPECT(lrs_search_plan_init("{\"shape\": \"4b\"}", &plan) != LRS_OK);
}

static void test_transfer(void) {
  lrs_transfer_plan *p = NULL, *q = NULL, *pq = NULL;
  EXPECT_OK(lrs_transfer_plan_make(
      "{\"proxy\": \"2b-proxy\", \"target\": \"12b\", \"tokens_proxy\": \"200B\","
      " \"tokens_target\": \"500B\"}",
      &p));
  EXPECT_OK(lrs_transfer_plan_make(
      "{\"proxy\": \"12b\", \"target\": \"12b\", \"tokens_proxy\": \"500B\","
      " \"tokens_target\": \"500B\"}",
      &q));
  if (!p || !q) return;
  char* applied = NULL;
  EXPECT_OK(lrs_transfer_plan_apply(p, "{\"eta_b\": 5e-4, \"sigma_b\": 0.02, \"eps_b\": 1e-8, \"lambda_b\": 0.1}",
                                    &applied));
  EXPECT(applied && strstr(applied, "residual_mult") != NULL);
  lrs_string_free(applied);
  EXPECT_OK(lrs_transfer_plan_compose(p, q, &pq));
  char *a = NULL, *b = NULL;
  if (pq) {
    EXPECT_OK(lrs_transfer_plan_to_json(p, &a));
    EXPECT_OK(lrs_transfer_plan_to_json(pq, &b));
    EXPECT(a && b && strcmp(a, b) == 0);
  }
  lrs_string_free(a);
  lrs_string_free(b);
  lrs_transfer_plan* bad = NULL;
  EXPECT(lrs_transfer_plan_compose(q, q, &bad) == LRS_OK);
  lrs_transfer_plan_free(bad);
  bad = NULL;
  EXPECT(lrs_transfer_plan_compose(q, p, &bad) == LRS_SHAPE_MISMATCH);
  EXPECT(bad == NULL);
  char* table = NULL;
  EXPECT_OK(lrs_transfer_plan_table(p, &table));
  lrs_string_free(table);
  lrs_transfer_plan_free(p);
  lrs_transfer_plan_free(q);
  lrs_transfer_plan_free(pq);
}

static void test_micro(void) {
  char* net = NULL;
  EXPECT_OK(lrs_net_config("{\"width\": 16, \"depth\": 2, \"heads\": 2, \"vocab\": 16,"
                           " \"moe_experts\": 2, \"parametrization\": \"sp\", \"lr\": 0.01}",
                           &net));
  if (!net) return;
  size_t len = strlen(net) + 256;
  char* req = malloc(len);
  snprintf(req, len, "{\"net\": %s, \"coords\": 10}", net);
  char* gc = NULL;
  EXPECT_OK(lrs_grad_check(req, &gc));
  EXPECT(gc && strstr(gc, "max_rel_error") != NULL);
  lrs_string_free(gc);
  snprintf(req, len, "{\"net\": %s, \"steps\": 5, \"warmup_steps\": 1}", net);
  char *t1 = NULL, *t2 = NULL;
  EXPECT_OK(lrs_train_micro(req, &t1));
  EXPECT_OK(lrs_train_micro(req, &t2));
  EXPECT(t1 && t2 && strcmp(t1, t2) == 0);
  lrs_string_free(t1);
  lrs_string_free(t2);
  snprintf(req, len, "{\"net\": %s, \"steps\": 0}", net);
  EXPECT(lrs_train_micro(req, &t1) == LRS_INVALID_ARGUMENT);
  free(req);
  lrs_string_free(net);
}

int main(void) {
  test_utilities();
  test_pipeline();
  test_search_plan();
  test_transfer();
  test_micro();
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("capi: all checks passed\n");
  return 0;
}

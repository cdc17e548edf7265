/**
 * Copyright 2026 The tlbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
/* C interface to the tlbench core. Every entry point returns a tlb_status;
 * on failure tlb_last_error() describes the problem for the calling thread.
 * Strings returned through char ** are owned by the caller and released with
 * tlb_string_free. */
#ifndef TLBENCH_TLBENCH_H_
#define TLBENCH_TLBENCH_H_

#include <stddef.h>
#include <stdint.h>

#if defined(TLB_BUILDING_LIBRARY)
#define TLB_API __attribute__((visibility("default")))
#else
#define TLB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tlb_status {
  TLB_OK = 0,
  TLB_ERR_INVALID_ARGUMENT = 1,
  TLB_ERR_PARSE = 2,
  TLB_ERR_VALIDATION = 3,
  TLB_ERR_IO = 4,
  TLB_ERR_UNDEFINED_TEST = 5,
  TLB_ERR_RUNTIME = 6,
  TLB_ERR_INTERNAL = 99
} tlb_status;

typedef struct tlb_config tlb_config;
typedef struct tlb_manifest tlb_manifest;
typedef struct tlb_results tlb_results;

typedef void (*tlb_log_fn)(const char *message, void *user);

TLB_API const char *tlb_version(void);
TLB_API const char *tlb_last_error(void);
TLB_API const char *tlb_status_name(tlb_status status);
TLB_API void tlb_string_free(char *s);

/* Configuration. tiny != 0 starts from the desk-scale profile. */
TLB_API tlb_status tlb_config_new(int tiny, tlb_config **out);
TLB_API tlb_status tlb_config_load(const char *path, int tiny, tlb_config **out);
TLB_API tlb_status tlb_config_set(tlb_config *cfg, const char *key, const char *value);
TLB_API tlb_status tlb_config_to_text(const tlb_config *cfg, char **out);
TLB_API void tlb_config_free(tlb_config *cfg);

/* Dataset manifests. */
TLB_API tlb_status tlb_manifest_load(const char *path, tlb_manifest **out);
TLB_API tlb_status tlb_manifest_counts(const tlb_manifest *m, size_t *records, size_t *classes);
/* Stratified split; paths in the written manifests are absolute. summary_json
 * may be NULL. */
TLB_API tlb_status tlb_manifest_split(const tlb_manifest *m, uint64_t seed, double test_fraction,
                                      const char *train_path, const char *test_path, char **summary_json);
TLB_API void tlb_manifest_free(tlb_manifest *m);

/* Result tables: a .jsonl result store, a fixture .csv, or a directory
 * holding results.jsonl. Repeated loads into one handle merge tables. */
TLB_API tlb_status tlb_results_new(tlb_results **out);
TLB_API tlb_status tlb_results_load(tlb_results *table, const char *path);
TLB_API tlb_status tlb_results_size(const tlb_results *table, size_t *rows);
TLB_API tlb_status tlb_results_to_json(const tlb_results *table, char **out);
TLB_API void tlb_results_free(tlb_results *table);

typedef struct tlb_stats_options {
  const char *zero_method; /* drop | pratt | zsplit | conservative */
  const char *tie_method;  /* average | max | min | ordinal */
  int d_differences;       /* nonzero: d over sd of differences */
  int n_resamples;
  uint64_t seed;
} tlb_stats_options;

TLB_API tlb_stats_options tlb_stats_options_default(void);

/* holding: comma-separated factor list. filter: "factor=v1|v2;factor=v3",
 * may be NULL or empty. */
TLB_API tlb_status tlb_paired_comparison(const tlb_results *table, const char *factor, const char *level_a,
                                         const char *level_b, const char *holding, const char *filter,
                                         const tlb_stats_options *options, char **json_out);
/* The four headline comparisons (policy and approach, standard test and
 * different-robot scenarios). */
TLB_API tlb_status tlb_headline_stats(const tlb_results *table, const tlb_stats_options *options, char **json_out);
/* Batch / elapsed against the recorded throughput for one platform (all
 * platforms when platform is NULL or empty). */
TLB_API tlb_status tlb_throughput_check(const char *timing_csv, const char *platform, double tolerance,
                                        int *all_ok, char **json_out);

/* Training and snapshots. */
TLB_API tlb_status tlb_train_grid(const tlb_config *cfg, const char *out_dir, tlb_log_fn log, void *user,
                                  char **summary_json);
TLB_API tlb_status tlb_evaluate_snapshot(const char *snapshot, const char *manifest, char **json_out);
/* scheme: baseline_fp32 | ptq_int8 | fp16. ptq_int8 calibrates on the first
 * calibration_images records of calibration_manifest. */
TLB_API tlb_status tlb_quantize_snapshot(const char *snapshot, const char *scheme, const char *calibration_manifest,
                                         int calibration_images, const char *out_path, char **json_out);
/* Times a snapshot on a synthetic batch. csv_path may be NULL. */
TLB_API tlb_status tlb_bench_snapshot(const char *snapshot, int batch_size, int warmup, int repeats, int per_image,
                                      const char *dataset, const char *csv_path, char **json_out);

/* Report bundle; fixtures_dir may be NULL. */
TLB_API tlb_status tlb_emit_report(const tlb_results *table, const char *fixtures_dir, const char *out_dir,
                                   const tlb_stats_options *options, char **json_out);

/* Synthetic datasets. */
TLB_API tlb_status tlb_synth_patterns(const char *dir, int classes, int per_class, int size, uint64_t seed);
TLB_API tlb_status tlb_synth_idol(const char *dir, int rooms, int per_cell, int size, uint64_t seed);

/* Array primitives. */
TLB_API tlb_status tlb_quant_params(const double *values, size_t n, int bits, int is_signed, double *scale,
                                    int32_t *zero_point);
TLB_API tlb_status tlb_quantize(const double *x, size_t n, double scale, int32_t zero_point, int bits, int is_signed,
                                int32_t *q);
TLB_API tlb_status tlb_dequantize(const int32_t *q, size_t n, double scale, int32_t zero_point, int bits,
                                  int is_signed, double *x);
TLB_API tlb_status tlb_fake_quant(const double *x, size_t n, double scale, int32_t zero_point, int bits,
                                  int is_signed, double *y);
TLB_API tlb_status tlb_cast_fp16(const double *x, size_t n, double *y);
TLB_API tlb_status tlb_wilcoxon(const double *a, const double *b, size_t n, const char *zero_method,
                                const char *tie_method, double *statistic, double *p_value);
TLB_API tlb_status tlb_cohens_d(const double *a, const double *b, size_t n, int d_differences, double *d);
TLB_API tlb_status tlb_balanced_accuracy(const int *truth, const int *predicted, size_t n, size_t n_classes,
                                         double *value);

#ifdef __cplusplus
}
#endif

#endif /* TLBENCH_TLBENCH_H_ */

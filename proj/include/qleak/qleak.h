/*
 * Copyright 2026 The qleak Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/*
 * C interface to the qleak library.
 *
 * Every function returns a qleak_status. On failure the message is available
 * from qleak_last_error() until the next call on the same thread. Strings
 * returned through char** outputs are owned by the caller and released with
 * qleak_string_free(). Handles are released with their *_free function;
 * passing NULL to a free function is a no-op.
 */

#ifndef QLEAK_H
#define QLEAK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define QLEAK_API __declspec(dllexport)
#else
#define QLEAK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum qleak_status {
    QLEAK_OK = 0,
    QLEAK_ERR_INVALID_ARGUMENT = 1,
    QLEAK_ERR_OUT_OF_RANGE = 2,
    QLEAK_ERR_INFEASIBLE = 3,
    QLEAK_ERR_NUMERICAL = 4,
    QLEAK_ERR_IO = 5,
    QLEAK_ERR_INTERNAL = 99
} qleak_status;

typedef enum qleak_gate_kind {
    QLEAK_GATE_H = 0,
    QLEAK_GATE_RY = 1,
    QLEAK_GATE_RZ = 2,
    QLEAK_GATE_PHASE = 3,
    QLEAK_GATE_CX = 4
} qleak_gate_kind;

typedef struct qleak_cohort qleak_cohort;
typedef struct qleak_circuit qleak_circuit;

QLEAK_API const char* qleak_version(void);
QLEAK_API const char* qleak_last_error(void);
QLEAK_API void qleak_string_free(char* s);

/* Configuration. `path` may be NULL for the built-in defaults. The result is
 * the fully populated, validated config document. */
QLEAK_API qleak_status qleak_config_load(const char* path, char** config_json);

/* Cohorts. */
QLEAK_API qleak_status qleak_cohort_generate(uint64_t seed, double coupling_weight, qleak_cohort** out);
/* Reads the config's cohort path, or generates from its cohort seed. A
 * non-NULL `seed` overrides the cohort seed. */
QLEAK_API qleak_status qleak_cohort_from_config(const char* config_json, const uint64_t* seed, qleak_cohort** out);
QLEAK_API qleak_status qleak_cohort_read_csv(const char* path, qleak_cohort** out);
QLEAK_API qleak_status qleak_cohort_write_csv(const qleak_cohort* cohort, const char* path);
QLEAK_API qleak_status qleak_cohort_size(const qleak_cohort* cohort, size_t* n_rows);
/* counts receives (exposed leak, exposed no-leak, unexposed leak, unexposed no-leak). */
QLEAK_API qleak_status qleak_cohort_contingency(const qleak_cohort* cohort, const char* feature, size_t counts[4]);
QLEAK_API qleak_status qleak_cohort_stats(const qleak_cohort* cohort, char** text, char** json);
QLEAK_API void qleak_cohort_free(qleak_cohort* cohort);

/* Experiments. `out_dir` and `base_seed` override the config when non-NULL.
 * `all_ok` is set to 1 only if every run succeeded; `summary` receives a
 * short human-readable listing (may be NULL). */
QLEAK_API qleak_status qleak_benchmark_run(const char* config_json, const char* out_dir, const uint64_t* base_seed,
                                           int* all_ok, char** summary);
/* Trains one grid cell with one seed and writes its record under out_dir. */
QLEAK_API qleak_status qleak_train(const char* config_json, const char* cell, uint64_t seed, const char* out_dir,
                                   char** record_json);
/* Rebuilds the aggregate reports from persisted run records. */
QLEAK_API qleak_status qleak_report(const char* config_json, const char* out_dir, const uint64_t* base_seed,
                                    int* all_ok, char** summary);

/* Circuits. Angles are ignored for H and CX; `q1` is ignored except for CX
 * (control q0, target q1). */
QLEAK_API qleak_status qleak_circuit_create(unsigned n_qubits, qleak_circuit** out);
QLEAK_API qleak_status qleak_circuit_add_gate(qleak_circuit* circuit, qleak_gate_kind kind, unsigned q0, unsigned q1,
                                              double angle);
QLEAK_API qleak_status qleak_circuit_size(const qleak_circuit* circuit, size_t* n_gates);
/* Z-basis marginal of `qubit` after density-matrix simulation with
 * depolarizing probability p_gate after each single-qubit gate. */
QLEAK_API qleak_status qleak_circuit_readout(const qleak_circuit* circuit, double p_gate, unsigned qubit, double* p0,
                                             double* p1);
QLEAK_API void qleak_circuit_free(qleak_circuit* circuit);

QLEAK_API qleak_status qleak_sample_counts(double p0, uint64_t shots, uint64_t seed, uint64_t* n0, uint64_t* n1);
/* Fidelity kernel of the second-order feature map on n-dimensional inputs.
 * `entanglement` is "full", "linear" or "none". */
QLEAK_API qleak_status qleak_quantum_kernel(const double* x, const double* y, size_t n, unsigned reps,
                                            const char* entanglement, double* value);

#ifdef __cplusplus
}
#endif

#endif /* QLEAK_H */

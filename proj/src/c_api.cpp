// Copyright 2026 The qleak Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qleak/qleak.h"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "qleak/circuit.hpp"
#include "qleak/cohort.hpp"
#include "qleak/encodings.hpp"
#include "qleak/error.hpp"
#include "qleak/runner.hpp"

struct qleak_cohort {
    qleak::CohortDataset data;
};

struct qleak_circuit {
    qleak::Circuit circuit;
};

namespace {

thread_local std::string g_last_error;

qleak_status to_status(qleak::ErrorCode code) {
    switch (code) {
        case qleak::ErrorCode::InvalidArgument: return QLEAK_ERR_INVALID_ARGUMENT;
        case qleak::ErrorCode::OutOfRange: return QLEAK_ERR_OUT_OF_RANGE;
        case qleak::ErrorCode::Infeasible: return QLEAK_ERR_INFEASIBLE;
        case qleak::ErrorCode::Numerical: return QLEAK_ERR_NUMERICAL;
        case qleak::ErrorCode::Io: return QLEAK_ERR_IO;
    }
    return QLEAK_ERR_INTERNAL;
}

template <class F>
qleak_status guarded(F&& body) {
    g_last_error.clear();
    try {
        body();
        return QLEAK_OK;
    } catch (const qleak::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return QLEAK_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QLEAK_ERR_INTERNAL;
    }
}

void need(const void* p, const char* name) {
    qleak::require(p != nullptr, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string summarize(const qleak::BenchmarkSummary& s) {
    std::string text;
    for (const auto& c : s.cells) {
        char line[160];
        std::snprintf(line, sizeof line, "%-18s runs %zu failed %zu auc %.4f\n", c.cell.c_str(), c.n_runs, c.n_failed,
                      c.mean.auc);
        text += line;
    }
    for (const auto& f : s.failures) text += "FAILED " + f + "\n";
    return text;
}

qleak::ExperimentConfig resolve(const char* config_json, const char* out_dir, const uint64_t* base_seed) {
    need(config_json, "config_json");
    auto config = qleak::parse_config(config_json);
    if (out_dir != nullptr) config.out = out_dir;
    if (base_seed != nullptr) config.base_seed = *base_seed;
    return config;
}

}  // namespace

extern "C" {

const char* qleak_version(void) { return "1.0.0"; }

const char* qleak_last_error(void) { return g_last_error.c_str(); }

void qleak_string_free(char* s) { std::free(s); }

qleak_status qleak_config_load(const char* path, char** config_json) {
    return guarded([&] {
        need(config_json, "config_json");
        const auto config = path != nullptr ? qleak::load_config(path) : qleak::ExperimentConfig::defaults();
        *config_json = dup_string(qleak::config_to_json(config));
    });
}

qleak_status qleak_cohort_generate(uint64_t seed, double coupling_weight, qleak_cohort** out) {
    return guarded([&] {
        need(out, "out");
        auto spec = qleak::CohortSpec::published();
        spec.coupling_weight = coupling_weight;
        *out = new qleak_cohort{qleak::generate_cohort(spec, seed)};
    });
}

qleak_status qleak_cohort_from_config(const char* config_json, const uint64_t* seed, qleak_cohort** out) {
    return guarded([&] {
        need(out, "out");
        auto config = resolve(config_json, nullptr, nullptr);
        if (seed != nullptr) {
            config.cohort_seed = *seed;
            config.cohort_path.reset();
        }
        *out = new qleak_cohort{qleak::load_cohort(config)};
    });
}

qleak_status qleak_cohort_read_csv(const char* path, qleak_cohort** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = new qleak_cohort{qleak::read_cohort_csv(std::string(path))};
    });
}

qleak_status qleak_cohort_write_csv(const qleak_cohort* cohort, const char* path) {
    return guarded([&] {
        need(cohort, "cohort");
        need(path, "path");
        qleak::write_cohort_csv(std::string(path), cohort->data);
    });
}

qleak_status qleak_cohort_size(const qleak_cohort* cohort, size_t* n_rows) {
    return guarded([&] {
        need(cohort, "cohort");
        need(n_rows, "n_rows");
        *n_rows = cohort->data.size();
    });
}

qleak_status qleak_cohort_contingency(const qleak_cohort* cohort, const char* feature, size_t counts[4]) {
    return guarded([&] {
        need(cohort, "cohort");
        need(feature, "feature");
        need(counts, "counts");
        const auto t = qleak::contingency(cohort->data, feature);
        counts[0] = t.a;
        counts[1] = t.b;
        counts[2] = t.c;
        counts[3] = t.d;
    });
}

qleak_status qleak_cohort_stats(const qleak_cohort* cohort, char** text, char** json) {
    return guarded([&] {
        need(cohort, "cohort");
        const auto report = qleak::emit_stats_report(cohort->data);
        char* t = text != nullptr ? dup_string(report.text) : nullptr;
        try {
            if (json != nullptr) *json = dup_string(report.json);
        } catch (...) {
            std::free(t);
            throw;
        }
        if (text != nullptr) *text = t;
    });
}

void qleak_cohort_free(qleak_cohort* cohort) { delete cohort; }

qleak_status qleak_benchmark_run(const char* config_json, const char* out_dir, const uint64_t* base_seed, int* all_ok,
                                 char** summary) {
    return guarded([&] {
        const auto config = resolve(config_json, out_dir, base_seed);
        const auto result = qleak::run_benchmark(config);
        if (all_ok != nullptr) *all_ok = result.ok() ? 1 : 0;
        if (summary != nullptr) *summary = dup_string(summarize(result));
    });
}

qleak_status qleak_train(const char* config_json, const char* cell, uint64_t seed, const char* out_dir,
                         char** record_json) {
    return guarded([&] {
        need(cell, "cell");
        const auto config = resolve(config_json, out_dir, nullptr);
        const auto cohort = qleak::load_cohort(config);
        const auto record = qleak::train_run(config, cohort, cell, seed);
        qleak::write_record(config.out, record);
        if (record_json != nullptr) *record_json = dup_string(qleak::record_to_json(record));
    });
}

qleak_status qleak_report(const char* config_json, const char* out_dir, const uint64_t* base_seed, int* all_ok,
                          char** summary) {
    return guarded([&] {
        const auto config = resolve(config_json, out_dir, base_seed);
        const auto result = qleak::aggregate_reports(config);
        if (all_ok != nullptr) *all_ok = result.ok() ? 1 : 0;
        if (summary != nullptr) *summary = dup_string(summarize(result));
    });
}

qleak_status qleak_circuit_create(unsigned n_qubits, qleak_circuit** out) {
    return guarded([&] {
        need(out, "out");
        qleak::require(n_qubits >= 1 && n_qubits <= qleak::kMaxQubits, "n_qubits must lie in [1, 12]",
                       qleak::ErrorCode::OutOfRange);
        *out = new qleak_circuit{qleak::Circuit(n_qubits)};
    });
}

qleak_status qleak_circuit_add_gate(qleak_circuit* circuit, qleak_gate_kind kind, unsigned q0, unsigned q1,
                                    double angle) {
    return guarded([&] {
        need(circuit, "circuit");
        const auto a = qleak::Angle::fixed(angle);
        switch (kind) {
            case QLEAK_GATE_H: circuit->circuit.append(qleak::Gate::h(q0)); return;
            case QLEAK_GATE_RY: circuit->circuit.append(qleak::Gate::ry(q0, a)); return;
            case QLEAK_GATE_RZ: circuit->circuit.append(qleak::Gate::rz(q0, a)); return;
            case QLEAK_GATE_PHASE: circuit->circuit.append(qleak::Gate::phase(q0, a)); return;
            case QLEAK_GATE_CX: circuit->circuit.append(qleak::Gate::cx(q0, q1)); return;
        }
        qleak::fail(qleak::ErrorCode::InvalidArgument, "unknown gate kind");
    });
}

qleak_status qleak_circuit_size(const qleak_circuit* circuit, size_t* n_gates) {
    return guarded([&] {
        need(circuit, "circuit");
        need(n_gates, "n_gates");
        *n_gates = circuit->circuit.size();
    });
}

qleak_status qleak_circuit_readout(const qleak_circuit* circuit, double p_gate, unsigned qubit, double* p0,
                                   double* p1) {
    return guarded([&] {
        need(circuit, "circuit");
        need(p0, "p0");
        need(p1, "p1");
        qleak::NoiseConfig noise;
        noise.p_gate = p_gate;
        const auto rho = qleak::apply_circuit_density(circuit->circuit, noise);
        const auto probs = qleak::measure_qubit_probs(rho, qubit);
        *p0 = probs.p0;
        *p1 = probs.p1;
    });
}

void qleak_circuit_free(qleak_circuit* circuit) { delete circuit; }

qleak_status qleak_sample_counts(double p0, uint64_t shots, uint64_t seed, uint64_t* n0, uint64_t* n1) {
    return guarded([&] {
        need(n0, "n0");
        need(n1, "n1");
        const auto counts = qleak::sample_counts(p0, shots, seed);
        *n0 = counts.n0;
        *n1 = counts.n1;
    });
}

qleak_status qleak_quantum_kernel(const double* x, const double* y, size_t n, unsigned reps, const char* entanglement,
                                  double* value) {
    return guarded([&] {
        need(x, "x");
        need(y, "y");
        need(value, "value");
        qleak::FeatureMapSpec spec;
        spec.n_qubits = static_cast<unsigned>(n);
        spec.reps = reps;
        spec.entanglement = qleak::parse_entanglement(entanglement != nullptr ? entanglement : "full");
        *value = qleak::quantum_kernel({x, n}, {y, n}, spec);
    });
}

}  // extern "C"

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

/**
 * @file
 * Experiment configuration, the model grid, persistence of per-run records
 * and the aggregate reports built from them.
 *
 * Output layout under `out`:
 *   cohort.csv, config.json
 *   runs/<cell>/<seed>.json, runs/<cell>/<seed>_trace.csv
 *   report.csv, report.json, auc_ranking.csv, mcnemar.csv
 *   convergence/<cell>.csv
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qleak/circuit.hpp"
#include "qleak/cohort.hpp"
#include "qleak/encodings.hpp"
#include "qleak/metrics.hpp"
#include "qleak/optimizers.hpp"

namespace qleak {

struct QnnCellSpec {
    AnsatzKind ansatz = AnsatzKind::RealAmplitudes;
    Method optimizer = Method::SPSA;
};

struct ExperimentConfig {
    /// Cohort source: a CSV path, or generation from `cohort_seed`.
    std::optional<std::string> cohort_path;
    uint64_t cohort_seed = 7;
    double coupling_weight = 3.0;
    std::vector<std::string> features = {"dm", "smoking", "nocoil", "acsp"};

    double test_fraction = 0.2;
    bool stratified = true;
    uint64_t split_seed = 2024;
    /// Redraw the split for every run seed (from split_seed and the run
    /// seed). All models with the same run seed still share a test set.
    bool split_per_run = true;

    std::vector<QnnCellSpec> qnn_grid;
    std::vector<std::string> classical;

    unsigned feature_map_reps = 2;
    Entanglement feature_map_entanglement = Entanglement::Full;
    unsigned ansatz_reps = 3;
    Entanglement ansatz_entanglement = Entanglement::Linear;
    NoiseConfig noise = NoiseConfig::hardware_like();
    double link_gain = 3.0;
    /// Binary features are multiplied by this before encoding.
    double feature_scale = 1.5707963267948966;

    size_t n_runs = 10;
    uint64_t base_seed = 1;
    double beta = 2.0;
    size_t budget = 3000;
    size_t n_boot = 1000;
    size_t workers = 1;
    std::string out = "out";

    /// Cells forced to fail (QNN objectives return NaN, classical fits
    /// throw). Used to exercise failure isolation.
    std::vector<std::string> inject_failure;

    /// Full grid: (RA, ESU2) x (SPSA, CMAES, COBYLA, BFGS) + five baselines.
    static ExperimentConfig defaults();
    void validate() const;
    std::vector<std::string> cell_ids() const;
};

/// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& config);
/// FNV-1a over the config JSON minus `out` and `workers`, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct SplitIndices {
    std::vector<size_t> train;
    std::vector<size_t> test;
};

/// Stratified: each class contributes round(test_fraction * class size)
/// test rows, clamped so both sides keep at least one. Indices are sorted.
SplitIndices split_dataset(const std::vector<int>& labels, double test_fraction, bool stratified, uint64_t seed);

struct RunRecord {
    std::string cell;
    uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double wall_seconds = 0.0;
    EvaluationReport report;
    std::vector<double> test_probs;
    std::vector<int> test_labels;
    std::string hyperparameters;
    std::string config_hash;
    // QNN cells only.
    std::optional<double> initial_loss;
    std::optional<double> final_loss;
    size_t n_evals = 0;
    bool converged = false;
    std::string optimizer_message;
    std::vector<TracePoint> trace;
};

std::string record_to_json(const RunRecord& record);
RunRecord record_from_json(const std::string& json_text);

/// The cohort the config points at (read or generated).
CohortDataset load_cohort(const ExperimentConfig& config);

/// Trains and evaluates one (cell, seed) on the config's split. Throws on
/// failure; `run_benchmark` converts failures into records.
RunRecord train_run(const ExperimentConfig& config, const CohortDataset& cohort, const std::string& cell, uint64_t seed);

/// Writes the record and, for QNN cells, the trace CSV under out/runs/<cell>/.
void write_record(const std::string& out_dir, const RunRecord& record);
RunRecord read_record(const std::string& out_dir, const std::string& cell, uint64_t seed);

struct CellSummary {
    std::string cell;
    size_t n_runs = 0;
    size_t n_failed = 0;
    /// Mean over successful runs.
    EvaluationReport mean;
    std::optional<double> mean_initial_loss;
    std::optional<double> mean_final_loss;
};

struct BenchmarkSummary {
    std::vector<CellSummary> cells;
    std::vector<std::string> failures;
    bool ok() const { return failures.empty(); }
};

/// Runs every (cell, run) pair, persists records, then aggregates from disk.
BenchmarkSummary run_benchmark(const ExperimentConfig& config);

/// Rebuilds report.csv, report.json, auc_ranking.csv, mcnemar.csv and the
/// convergence CSVs from persisted records.
BenchmarkSummary aggregate_reports(const ExperimentConfig& config);

/// Header of report.csv.
std::string benchmark_csv_header();

struct StatsReport {
    std::string text;
    std::string json;
};

/// Per-feature counts, RR, chi-square (plain and Yates) and the AIC trace
/// over all five cohort features.
StatsReport emit_stats_report(const CohortDataset& data);

}  // namespace qleak

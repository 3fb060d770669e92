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

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace qleak {

/// Binary labels (1 = positive) with predicted positive-class probabilities.
struct ScoredPredictions {
    std::vector<int> labels;
    std::vector<double> probs;

    void validate() const;
    size_t n_positive() const;
    size_t n_negative() const { return labels.size() - n_positive(); }
};

/// Upper tail of the chi-square distribution with one degree of freedom,
/// erfc(sqrt(x / 2)).
double chi2_sf_1dof(double x);

/// Mann-Whitney AUC with average ranks for ties.
double roc_auc(const ScoredPredictions& s);

/// F_beta from confusion counts; 0 when there are no true positives.
double fbeta_from_counts(size_t tp, size_t fp, size_t fn, double beta);

/// 0, 1 and the midpoints between consecutive distinct probabilities, ascending.
std::vector<double> threshold_candidates(const ScoredPredictions& s);

/// Candidate threshold maximizing F_beta under the rule prob >= threshold.
/// Ties resolve to the lowest threshold.
double optimize_threshold_fbeta(const ScoredPredictions& s, double beta);

struct ConfusionMetrics {
    size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0, sensitivity = 0, specificity = 0, precision = 0, f1 = 0, npv = 0;
    /// Set when any rate had a zero denominator (reported as 0).
    bool degenerate = false;
};

ConfusionMetrics confusion_metrics(const ScoredPredictions& s, double threshold);

double brier(const ScoredPredictions& s);
double log_loss(const ScoredPredictions& s, double eps = 1e-15);
/// 1 - sum (y - p)^2 / sum (y - mean y)^2. Rejects single-valued labels.
double efron_r2(const ScoredPredictions& s);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Percentile (2.5%, 97.5%) interval of AUC under class-stratified
/// resampling. Resample b draws from its own stream derive_seed(seed, b).
Interval bootstrap_auc_ci(const ScoredPredictions& s, size_t n_boot = 1000, uint64_t seed = 0);

/// Linear-interpolation sample quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct McNemarResult {
    double statistic = 0.0;
    double p_value = 1.0;
    /// A wrong, B right.
    size_t n01 = 0;
    /// A right, B wrong.
    size_t n10 = 0;
    /// Exact binomial variant (discordant pairs < 25); statistic is then
    /// min(n01, n10).
    bool exact = true;
};

McNemarResult mcnemar(std::span<const int> correct_a, std::span<const int> correct_b);

struct EvaluationReport {
    double threshold = 0, auc = 0, accuracy = 0, sensitivity = 0, specificity = 0, f1 = 0, npv = 0;
    double brier = 0, log_loss = 0, efron_r2 = 0;
    Interval auc_ci;
    size_t n = 0, n_positive = 0;
};

/// Full battery at a fixed threshold, with a bootstrap CI on AUC.
EvaluationReport evaluate(const ScoredPredictions& s, double threshold, size_t n_boot, uint64_t seed);

/// Table column order: model first, then the metric columns, then extras.
std::string report_csv_header();
std::string report_csv_row(const std::string& model, const EvaluationReport& r);

}  // namespace qleak

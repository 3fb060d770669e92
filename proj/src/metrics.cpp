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

#include "qleak/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "qleak/error.hpp"
#include "qleak/rng.hpp"

namespace qleak {

namespace {

void require_both_classes(const ScoredPredictions& s, const char* what) {
    require(s.n_positive() > 0 && s.n_negative() > 0, std::string(what) + " needs both classes present");
}

double safe_ratio(double num, double den, bool& degenerate) {
    if (den == 0.0) {
        degenerate = true;
        return 0.0;
    }
    return num / den;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void ScoredPredictions::validate() const {
    require(labels.size() == probs.size(), "labels and probabilities differ in length");
    for (int y : labels) {
        require(y == 0 || y == 1, "labels must be 0 or 1");
    }
    for (double p : probs) {
        require(p >= 0.0 && p <= 1.0, "probabilities must lie in [0, 1]");
    }
}

size_t ScoredPredictions::n_positive() const {
    return static_cast<size_t>(std::count(labels.begin(), labels.end(), 1));
}

double chi2_sf_1dof(double x) {
    if (x <= 0.0) {
        return 1.0;
    }
    return std::erfc(std::sqrt(x / 2.0));
}

double roc_auc(const ScoredPredictions& s) {
    s.validate();
    require_both_classes(s, "roc_auc");
    const size_t n = s.probs.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return s.probs[a] < s.probs[b]; });
    double rank_sum_pos = 0.0;
    for (size_t i = 0; i < n;) {
        size_t j = i;
        while (j + 1 < n && s.probs[order[j + 1]] == s.probs[order[i]]) {
            ++j;
        }
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k) {
            if (s.labels[order[k]] == 1) {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    const double np = static_cast<double>(s.n_positive());
    const double nn = static_cast<double>(s.n_negative());
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

double fbeta_from_counts(size_t tp, size_t fp, size_t fn, double beta) {
    if (tp == 0) {
        return 0.0;
    }
    const double b2 = beta * beta;
    const double num = (1.0 + b2) * static_cast<double>(tp);
    return num / (num + b2 * static_cast<double>(fn) + static_cast<double>(fp));
}

std::vector<double> threshold_candidates(const ScoredPredictions& s) {
    std::vector<double> distinct = s.probs;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> out{0.0};
    for (size_t i = 0; i + 1 < distinct.size(); ++i) {
        out.push_back(0.5 * (distinct[i] + distinct[i + 1]));
    }
    out.push_back(1.0);
    return out;
}

double optimize_threshold_fbeta(const ScoredPredictions& s, double beta) {
    s.validate();
    require_both_classes(s, "optimize_threshold_fbeta");
    require(beta > 0.0 && std::isfinite(beta), "beta must be positive");
    const auto candidates = threshold_candidates(s);

    // Sweep ascending; counts of predicted positives shrink as the threshold rises.
    std::vector<size_t> order(s.probs.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return s.probs[a] < s.probs[b]; });
    const size_t n_pos = s.n_positive();
    size_t tp = n_pos, fp = s.n_negative();
    size_t cursor = 0;
    double best_t = candidates.front();
    double best_f = -1.0;
    for (double t : candidates) {
        while (cursor < order.size() && s.probs[order[cursor]] < t) {
            (s.labels[order[cursor]] == 1 ? tp : fp) -= 1;
            ++cursor;
        }
        const double f = fbeta_from_counts(tp, fp, n_pos - tp, beta);
        if (f > best_f) {
            best_f = f;
            best_t = t;
        }
    }
    return best_t;
}

ConfusionMetrics confusion_metrics(const ScoredPredictions& s, double threshold) {
    s.validate();
    ConfusionMetrics m;
    for (size_t i = 0; i < s.labels.size(); ++i) {
        const bool predicted = s.probs[i] >= threshold;
        if (s.labels[i] == 1) {
            (predicted ? m.tp : m.fn) += 1;
        } else {
            (predicted ? m.fp : m.tn) += 1;
        }
    }
    const auto d = [](size_t v) { return static_cast<double>(v); };
    bool degenerate = false;
    m.accuracy = safe_ratio(d(m.tp + m.tn), d(s.labels.size()), degenerate);
    m.sensitivity = safe_ratio(d(m.tp), d(m.tp + m.fn), degenerate);
    m.specificity = safe_ratio(d(m.tn), d(m.tn + m.fp), degenerate);
    m.precision = safe_ratio(d(m.tp), d(m.tp + m.fp), degenerate);
    m.npv = safe_ratio(d(m.tn), d(m.tn + m.fn), degenerate);
    m.f1 = safe_ratio(2.0 * d(m.tp), d(2 * m.tp + m.fp + m.fn), degenerate);
    m.degenerate = degenerate;
    return m;
}

double brier(const ScoredPredictions& s) {
    s.validate();
    require(!s.labels.empty(), "brier of an empty set");
    double total = 0.0;
    for (size_t i = 0; i < s.labels.size(); ++i) {
        const double r = s.labels[i] - s.probs[i];
        total += r * r;
    }
    return total / static_cast<double>(s.labels.size());
}

double log_loss(const ScoredPredictions& s, double eps) {
    s.validate();
    require(!s.labels.empty(), "log_loss of an empty set");
    double total = 0.0;
    for (size_t i = 0; i < s.labels.size(); ++i) {
        const double p = std::clamp(s.probs[i], eps, 1.0 - eps);
        total -= s.labels[i] ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(s.labels.size());
}

double efron_r2(const ScoredPredictions& s) {
    s.validate();
    require_both_classes(s, "efron_r2");
    const double ybar = static_cast<double>(s.n_positive()) / static_cast<double>(s.labels.size());
    double sse = 0.0, sst = 0.0;
    for (size_t i = 0; i < s.labels.size(); ++i) {
        sse += (s.labels[i] - s.probs[i]) * (s.labels[i] - s.probs[i]);
        sst += (s.labels[i] - ybar) * (s.labels[i] - ybar);
    }
    return 1.0 - sse / sst;
}

double quantile(std::vector<double> values, double q) {
    require(!values.empty(), "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double h = (static_cast<double>(values.size()) - 1.0) * q;
    const auto lo = static_cast<size_t>(std::floor(h));
    const size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Interval bootstrap_auc_ci(const ScoredPredictions& s, size_t n_boot, uint64_t seed) {
    s.validate();
    require(n_boot > 0, "n_boot must be positive");
    std::vector<size_t> pos, neg;
    for (size_t i = 0; i < s.labels.size(); ++i) {
        (s.labels[i] == 1 ? pos : neg).push_back(i);
    }
    require(pos.size() >= 2 && neg.size() >= 2, "stratified bootstrap needs at least two members per class");
    std::vector<double> aucs(n_boot);
    ScoredPredictions resample;
    resample.labels.resize(s.labels.size());
    resample.probs.resize(s.labels.size());
    for (size_t b = 0; b < n_boot; ++b) {
        Rng rng(derive_seed(seed, b));
        size_t k = 0;
        for (const auto* group : {&pos, &neg}) {
            for (size_t i = 0; i < group->size(); ++i, ++k) {
                const size_t src = (*group)[rng.below(group->size())];
                resample.labels[k] = s.labels[src];
                resample.probs[k] = s.probs[src];
            }
        }
        aucs[b] = roc_auc(resample);
    }
    return {quantile(aucs, 0.025), quantile(aucs, 0.975)};
}

McNemarResult mcnemar(std::span<const int> correct_a, std::span<const int> correct_b) {
    require(correct_a.size() == correct_b.size(), "McNemar inputs differ in length");
    McNemarResult r;
    for (size_t i = 0; i < correct_a.size(); ++i) {
        if (!correct_a[i] && correct_b[i]) ++r.n01;
        if (correct_a[i] && !correct_b[i]) ++r.n10;
    }
    const size_t n = r.n01 + r.n10;
    if (n < 25) {
        r.exact = true;
        const size_t k = std::min(r.n01, r.n10);
        r.statistic = static_cast<double>(k);
        double tail = 0.0;
        double binom = 1.0;  // C(n, i)
        for (size_t i = 0; i <= k; ++i) {
            tail += binom;
            binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
        }
        r.p_value = std::min(1.0, 2.0 * tail * std::pow(0.5, static_cast<double>(n)));
        return r;
    }
    r.exact = false;
    const double diff = std::abs(static_cast<double>(r.n01) - static_cast<double>(r.n10)) - 1.0;
    r.statistic = diff * diff / static_cast<double>(n);
    r.p_value = chi2_sf_1dof(r.statistic);
    return r;
}

EvaluationReport evaluate(const ScoredPredictions& s, double threshold, size_t n_boot, uint64_t seed) {
    s.validate();
    EvaluationReport r;
    r.threshold = threshold;
    r.auc = roc_auc(s);
    const auto cm = confusion_metrics(s, threshold);
    r.accuracy = cm.accuracy;
    r.sensitivity = cm.sensitivity;
    r.specificity = cm.specificity;
    r.f1 = cm.f1;
    r.npv = cm.npv;
    r.brier = brier(s);
    r.log_loss = log_loss(s);
    r.efron_r2 = efron_r2(s);
    r.auc_ci = bootstrap_auc_ci(s, n_boot, seed);
    r.n = s.labels.size();
    r.n_positive = s.n_positive();
    return r;
}

std::string report_csv_header() {
    return "model,threshold,auc,accuracy,sensitivity,specificity,f1,brier,log_loss,efron_r2,npv,auc_ci_lo,auc_ci_hi,"
           "n_test,n_test_positive";
}

std::string report_csv_row(const std::string& model, const EvaluationReport& r) {
    std::string row = model;
    for (double v : {r.threshold, r.auc, r.accuracy, r.sensitivity, r.specificity, r.f1, r.brier, r.log_loss,
                     r.efron_r2, r.npv, r.auc_ci.lo, r.auc_ci.hi}) {
        row += ',' + fmt(v);
    }
    row += ',' + std::to_string(r.n) + ',' + std::to_string(r.n_positive);
    return row;
}

}  // namespace qleak

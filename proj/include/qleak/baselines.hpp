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
 * Classical comparators: L2-penalized logistic regression (IRLS), linear
 * discriminant analysis, Gaussian naive Bayes, discrete AdaBoost over decision
 * stumps, and a one-hidden-layer tanh perceptron. All of them report the
 * probability of the positive class.
 */

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qleak/data.hpp"

namespace qleak {

enum class ClassicalKind { LR, LDA, GNB, AdaBoost, MLP };

ClassicalKind parse_classical_kind(const std::string& name);
std::string to_string(ClassicalKind kind);

struct LogisticParams {
    double intercept = 0.0;
    std::vector<double> coef;
};

/// p(x) = sigmoid(w . x + bias).
struct LdaParams {
    std::vector<double> weights;
    double bias = 0.0;
};

struct GnbParams {
    /// Index 0 is the negative class.
    std::array<double, 2> prior{0.5, 0.5};
    std::array<std::vector<double>, 2> mean;
    std::array<std::vector<double>, 2> var;
};

/// h(x) = polarity if x[feature] > threshold, else -polarity.
struct Stump {
    size_t feature = 0;
    double threshold = 0.0;
    int polarity = 1;
    double alpha = 0.0;
};

struct AdaBoostParams {
    std::vector<Stump> stumps;
};

/// hidden = tanh(W1 x + b1), p = sigmoid(w2 . hidden + b2). W1 is row-major
/// (hidden x input).
struct MlpParams {
    size_t hidden = 0;
    size_t input = 0;
    std::vector<double> w1;
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;

    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);
};

struct ClassicalModel {
    ClassicalKind kind = ClassicalKind::LR;
    size_t feature_dim = 0;
    std::variant<LogisticParams, LdaParams, GnbParams, AdaBoostParams, MlpParams> params;
};

ClassicalModel fit_logistic(const LabeledData& data, double l2);
/// Log-likelihood of the data under a logistic model (no penalty term).
double logistic_log_likelihood(const ClassicalModel& model, const LabeledData& data);

ClassicalModel fit_lda(const LabeledData& data);

ClassicalModel fit_gnb(const LabeledData& data, double var_smoothing);
/// Per-class joint log-densities plus log priors, {class 0, class 1}.
std::array<double, 2> gnb_log_joint(const GnbParams& params, std::span<const double> x);

ClassicalModel fit_adaboost(const LabeledData& data, size_t n_stumps);
/// Sum of alpha_t h_t(x).
double adaboost_margin(const AdaBoostParams& params, std::span<const double> x);

struct MlpConfig {
    size_t hidden_units = 8;
    size_t epochs = 1000;
    double learning_rate = 0.5;
    uint64_t seed = 0;
};

MlpParams mlp_initialize(size_t input, size_t hidden, uint64_t seed);
double mlp_loss(const MlpParams& params, const LabeledData& data);
/// Gradient of the (unclipped) mean cross-entropy, in flatten() order.
std::vector<double> mlp_gradient(const MlpParams& params, const LabeledData& data);
ClassicalModel fit_mlp(const LabeledData& data, const MlpConfig& config);

/// Probability of the positive class.
double predict_proba(const ClassicalModel& model, std::span<const double> x);
std::vector<double> predict_proba(const ClassicalModel& model, const LabeledData& data);

/// Result of grid search by stratified k-fold cross-validated AUC.
struct TunedModel {
    ClassicalModel model;
    std::string hyperparameters;
    double cv_auc = 0.0;
};

/// Fits `kind` with the fixed grid (LR l2 in {0.01, 0.1, 1}; AdaBoost stumps
/// in {25, 50, 100}; MLP hidden in {4, 8, 16}; GNB smoothing in {1e-9, 1e-6};
/// LDA has no grid). Ties keep the earlier grid entry.
TunedModel fit_tuned(ClassicalKind kind, const LabeledData& data, uint64_t seed, size_t folds = 5);

}  // namespace qleak

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
 * Variational classifier head. The model output is f = <Z_0> of
 * W(theta) U(x) |0...0>, and the leak probability is sigmoid(-gain * f):
 * f = -1 is read as the positive (leak) class.
 */

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qleak/circuit.hpp"
#include "qleak/data.hpp"
#include "qleak/encodings.hpp"

namespace qleak {

/// Probability clip used by every cross-entropy in the library.
inline constexpr double kProbClip = 1e-12;

struct QnnModel {
    FeatureMapSpec feature_map;
    AnsatzSpec ansatz;
    std::vector<double> theta;
    NoiseConfig noise;
    double link_gain = 3.0;
    /// Test mode: start the ansatz from |0...0> instead of U(x)|0...0>.
    bool bypass_feature_map = false;

    void validate() const;
};

/// W(theta) U(x) as one bound circuit.
Circuit qnn_circuit(const QnnModel& model, std::span<const double> x);

/// <Z_0> under the model's noise, without shot sampling.
double qnn_expectation(const QnnModel& model, std::span<const double> x);

/// <Z_0> as the model would report it: exact, or estimated from
/// `model.noise.shots` samples drawn with `seed`.
double qnn_forward(const QnnModel& model, std::span<const double> x, uint64_t seed = 0);

/// sigmoid(-gain * f).
double predict_proba(double f, double link_gain = 3.0);

/// Mean clipped binary cross-entropy.
double binary_cross_entropy(std::span<const int> labels, std::span<const double> probs, double clip = kProbClip);

double bce_loss(const QnnModel& model, const LabeledData& data, uint64_t seed = 0);

/// Parameter-shift gradient of f with respect to theta. Exact mode only.
std::vector<double> parameter_shift_gradient(const QnnModel& model, std::span<const double> x);

/// Gradient of bce_loss through the link, built from parameter-shift terms.
std::vector<double> bce_loss_gradient(const QnnModel& model, const LabeledData& data);

/// Batched evaluator over a fixed dataset. Encoded states U(x)|0> (noisy when
/// p_gate > 0) are computed once per distinct input row, so each loss
/// evaluation only simulates the ansatz. Immutable after construction.
class QnnEvaluator {
public:
    QnnEvaluator(const FeatureMapSpec& feature_map, const AnsatzSpec& ansatz, const NoiseConfig& noise,
                 double link_gain, const LabeledData& data);

    size_t n_params() const { return n_params_; }
    size_t n_rows() const { return row_to_state_.size(); }
    size_t n_distinct_inputs() const { return encoded_.size(); }
    const std::vector<int>& labels() const { return labels_; }

    /// Shot-free readout expectation per row.
    std::vector<double> expectations_exact(std::span<const double> theta) const;

    /// Per-row expectation as observed: sampled with seeds derived from `seed`
    /// when shots are configured, exact otherwise.
    std::vector<double> expectations(std::span<const double> theta, uint64_t seed) const;

    std::vector<double> probabilities(std::span<const double> theta, uint64_t seed) const;

    double loss(std::span<const double> theta, uint64_t seed) const;
    double loss_exact(std::span<const double> theta) const;

    /// Parameter-shift gradient of loss_exact. Exact mode only.
    std::vector<double> loss_gradient(std::span<const double> theta) const;

private:
    std::vector<double> readout_p0(std::span<const double> theta) const;

    Circuit ansatz_;
    NoiseConfig noise_;
    double link_gain_;
    size_t n_params_;
    std::vector<QuantumState> encoded_;
    std::vector<size_t> row_to_state_;
    std::vector<int> labels_;
};

}  // namespace qleak

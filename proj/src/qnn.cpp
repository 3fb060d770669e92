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

#include "qleak/qnn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "qleak/error.hpp"
#include "qleak/rng.hpp"

namespace qleak {

namespace {

constexpr double kShift = std::numbers::pi / 2;

Representation representation_for(const NoiseConfig& noise) {
    return noise.p_gate > 0.0 ? Representation::DensityMatrix : Representation::StateVector;
}

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

QuantumState initial_state(const QnnModel& model, std::span<const double> x) {
    const auto rep = representation_for(model.noise);
    if (model.bypass_feature_map) {
        return QuantumState::zero(model.ansatz.n_qubits, rep);
    }
    return evolve(build_zz_feature_map(x, model.feature_map), QuantumState::zero(model.ansatz.n_qubits, rep),
                  model.noise.p_gate, model.noise.noisy_cx);
}

}  // namespace

void QnnModel::validate() const {
    if (!bypass_feature_map) {
        feature_map.validate();
        require(feature_map.n_qubits == ansatz.n_qubits, "feature map and ansatz registers differ");
    }
    ansatz.validate();
    noise.validate();
    require(theta.size() == ansatz.parameter_count(), "theta has " + std::to_string(theta.size()) +
                                                          " entries, ansatz expects " +
                                                          std::to_string(ansatz.parameter_count()));
    require(std::isfinite(link_gain) && link_gain > 0.0, "link gain must be positive");
}

Circuit qnn_circuit(const QnnModel& model, std::span<const double> x) {
    model.validate();
    Circuit c = model.bypass_feature_map ? Circuit(model.ansatz.n_qubits) : build_zz_feature_map(x, model.feature_map);
    c.extend(build_ansatz(model.ansatz).bind(model.theta));
    return c;
}

double qnn_expectation(const QnnModel& model, std::span<const double> x) {
    model.validate();
    const Circuit ansatz = build_ansatz(model.ansatz).bind(model.theta);
    const auto state = evolve(ansatz, initial_state(model, x), model.noise.p_gate, model.noise.noisy_cx);
    const auto probs = measure_qubit_probs(state, 0);
    return expectation_z(probs.p0, probs.p1);
}

double qnn_forward(const QnnModel& model, std::span<const double> x, uint64_t seed) {
    const double f = qnn_expectation(model, x);
    if (!model.noise.shots) {
        return f;
    }
    const double p0 = std::clamp(0.5 * (1.0 + f), 0.0, 1.0);
    return expectation_z(sample_counts(p0, *model.noise.shots, seed));
}

double predict_proba(double f, double link_gain) {
    require(f >= -1.0 - 1e-9 && f <= 1.0 + 1e-9, "readout value outside [-1, 1]");
    return sigmoid(-link_gain * f);
}

double binary_cross_entropy(std::span<const int> labels, std::span<const double> probs, double clip) {
    require(!labels.empty(), "cross-entropy over an empty set");
    require(labels.size() == probs.size(), "labels and probabilities differ in length");
    double total = 0.0;
    for (size_t i = 0; i < labels.size(); ++i) {
        const double p = std::clamp(probs[i], clip, 1.0 - clip);
        total -= labels[i] ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(labels.size());
}

double bce_loss(const QnnModel& model, const LabeledData& data, uint64_t seed) {
    require(data.size() > 0, "bce_loss: empty dataset");
    data.validate();
    std::vector<double> probs(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        probs[i] = predict_proba(qnn_forward(model, data.rows[i], derive_seed(seed, i)), model.link_gain);
    }
    return binary_cross_entropy(data.labels, probs);
}

std::vector<double> parameter_shift_gradient(const QnnModel& model, std::span<const double> x) {
    model.validate();
    require(model.noise.is_exact(), "parameter-shift gradients need exact mode (p_gate = 0, exact shots)");
    std::vector<double> grad(model.theta.size());
    QnnModel shifted = model;
    for (size_t i = 0; i < grad.size(); ++i) {
        shifted.theta[i] = model.theta[i] + kShift;
        const double plus = qnn_expectation(shifted, x);
        shifted.theta[i] = model.theta[i] - kShift;
        const double minus = qnn_expectation(shifted, x);
        shifted.theta[i] = model.theta[i];
        grad[i] = 0.5 * (plus - minus);
    }
    return grad;
}

std::vector<double> bce_loss_gradient(const QnnModel& model, const LabeledData& data) {
    require(data.size() > 0, "bce_loss_gradient: empty dataset");
    data.validate();
    std::vector<double> grad(model.theta.size(), 0.0);
    for (size_t r = 0; r < data.size(); ++r) {
        const double f = qnn_expectation(model, data.rows[r]);
        const double p = predict_proba(f, model.link_gain);
        const auto df = parameter_shift_gradient(model, data.rows[r]);
        // dL/dz = p - y with z = -gain * f.
        const double scale = -(p - data.labels[r]) * model.link_gain;
        for (size_t i = 0; i < grad.size(); ++i) {
            grad[i] += scale * df[i];
        }
    }
    for (double& g : grad) {
        g /= static_cast<double>(data.size());
    }
    return grad;
}

QnnEvaluator::QnnEvaluator(const FeatureMapSpec& feature_map, const AnsatzSpec& ansatz, const NoiseConfig& noise,
                           double link_gain, const LabeledData& data)
    : ansatz_(build_ansatz(ansatz)),
      noise_(noise),
      link_gain_(link_gain),
      n_params_(ansatz.parameter_count()),
      labels_(data.labels) {
    feature_map.validate();
    ansatz.validate();
    noise.validate();
    require(feature_map.n_qubits == ansatz.n_qubits, "feature map and ansatz registers differ");
    require(std::isfinite(link_gain) && link_gain > 0.0, "link gain must be positive");
    require(data.size() > 0, "evaluator needs a non-empty dataset");
    data.validate();
    std::map<std::vector<double>, size_t> index;
    row_to_state_.reserve(data.size());
    for (const auto& row : data.rows) {
        auto [it, inserted] = index.try_emplace(row, encoded_.size());
        if (inserted) {
            encoded_.push_back(evolve(build_zz_feature_map(row, feature_map),
                                      QuantumState::zero(ansatz.n_qubits, representation_for(noise)), noise.p_gate,
                                      noise.noisy_cx));
        }
        row_to_state_.push_back(it->second);
    }
}

std::vector<double> QnnEvaluator::readout_p0(std::span<const double> theta) const {
    const Circuit bound = ansatz_.bind(theta);
    std::vector<double> per_state(encoded_.size());
    for (size_t s = 0; s < encoded_.size(); ++s) {
        per_state[s] = measure_qubit_probs(evolve(bound, encoded_[s], noise_.p_gate, noise_.noisy_cx), 0).p0;
    }
    std::vector<double> p0(row_to_state_.size());
    for (size_t r = 0; r < p0.size(); ++r) {
        p0[r] = per_state[row_to_state_[r]];
    }
    return p0;
}

std::vector<double> QnnEvaluator::expectations_exact(std::span<const double> theta) const {
    auto values = readout_p0(theta);
    for (double& v : values) {
        v = 2.0 * v - 1.0;
    }
    return values;
}

std::vector<double> QnnEvaluator::expectations(std::span<const double> theta, uint64_t seed) const {
    if (!noise_.shots) {
        return expectations_exact(theta);
    }
    auto values = readout_p0(theta);
    for (size_t r = 0; r < values.size(); ++r) {
        values[r] = expectation_z(sample_counts(values[r], *noise_.shots, derive_seed(seed, r)));
    }
    return values;
}

std::vector<double> QnnEvaluator::probabilities(std::span<const double> theta, uint64_t seed) const {
    auto values = expectations(theta, seed);
    for (double& v : values) {
        v = predict_proba(v, link_gain_);
    }
    return values;
}

double QnnEvaluator::loss(std::span<const double> theta, uint64_t seed) const {
    return binary_cross_entropy(labels_, probabilities(theta, seed));
}

double QnnEvaluator::loss_exact(std::span<const double> theta) const {
    auto values = expectations_exact(theta);
    for (double& v : values) {
        v = predict_proba(v, link_gain_);
    }
    return binary_cross_entropy(labels_, values);
}

std::vector<double> QnnEvaluator::loss_gradient(std::span<const double> theta) const {
    require(noise_.is_exact(), "parameter-shift gradients need exact mode (p_gate = 0, exact shots)");
    require(theta.size() == n_params_, "theta length does not match the ansatz");
    const auto f = expectations_exact(theta);
    std::vector<double> weight(f.size());
    for (size_t r = 0; r < f.size(); ++r) {
        const double p = predict_proba(f[r], link_gain_);
        weight[r] = -(p - labels_[r]) * link_gain_ / static_cast<double>(f.size());
    }
    std::vector<double> shifted(theta.begin(), theta.end());
    std::vector<double> grad(n_params_, 0.0);
    for (size_t i = 0; i < n_params_; ++i) {
        shifted[i] = theta[i] + kShift;
        const auto plus = expectations_exact(shifted);
        shifted[i] = theta[i] - kShift;
        const auto minus = expectations_exact(shifted);
        shifted[i] = theta[i];
        double g = 0.0;
        for (size_t r = 0; r < f.size(); ++r) {
            g += weight[r] * 0.5 * (plus[r] - minus[r]);
        }
        grad[i] = g;
    }
    return grad;
}

}  // namespace qleak

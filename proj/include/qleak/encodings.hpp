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

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qleak/circuit.hpp"

namespace qleak {

/// Two-qubit coupling pattern. `None` drops every pairwise block, which gives
/// a product-state encoding (used to contrast against the entangled map).
enum class Entanglement { Full, Linear, None };

Entanglement parse_entanglement(const std::string& name);
std::string to_string(Entanglement e);

/// Ordered (j, k) pairs, j < k. Full is lexicographic over all pairs.
std::vector<std::pair<unsigned, unsigned>> entanglement_edges(unsigned n_qubits, Entanglement e);

struct FeatureMapSpec {
    unsigned n_qubits = 4;
    unsigned reps = 2;
    Entanglement entanglement = Entanglement::Full;

    void validate() const;
};

enum class AnsatzKind { RealAmplitudes, EfficientSU2 };

AnsatzKind parse_ansatz_kind(const std::string& name);
/// Short tag: "RA" or "ESU2".
std::string to_string(AnsatzKind kind);

struct AnsatzSpec {
    AnsatzKind kind = AnsatzKind::RealAmplitudes;
    unsigned n_qubits = 4;
    unsigned reps = 3;
    Entanglement entanglement = Entanglement::Linear;

    /// n (reps + 1) for RealAmplitudes, 2 n (reps + 1) for EfficientSU2.
    size_t parameter_count() const;
    void validate() const;
};

/// Second-order ZZ feature map. Per repetition: H on every qubit, Phase(2 x_j)
/// on qubit j, then for every edge (j, k) the block
/// CX(j, k) . Phase(2 (pi - x_j)(pi - x_k)) on k . CX(j, k).
Circuit build_zz_feature_map(std::span<const double> x, const FeatureMapSpec& spec);

/// Symbolic variational circuit; slots are numbered in gate order.
Circuit build_ansatz(const AnsatzSpec& spec);

/// Fidelity kernel |<Phi(x)|Phi(y)>|^2 from exact statevectors.
double quantum_kernel(std::span<const double> x, std::span<const double> y, const FeatureMapSpec& spec);

/// Row-major Gram matrix over `points`.
std::vector<double> kernel_matrix(const std::vector<std::vector<double>>& points, const FeatureMapSpec& spec);

}  // namespace qleak

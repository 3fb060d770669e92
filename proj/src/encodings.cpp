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

#include "qleak/encodings.hpp"

#include <algorithm>
#include <cctype>
#include <numbers>

#include "qleak/error.hpp"

namespace qleak {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

void append_entangling_layer(Circuit& c, Entanglement e) {
    for (const auto& [j, k] : entanglement_edges(c.n_qubits(), e)) {
        c.append(Gate::cx(j, k));
    }
}

}  // namespace

Entanglement parse_entanglement(const std::string& name) {
    const auto s = lower(name);
    if (s == "full") return Entanglement::Full;
    if (s == "linear") return Entanglement::Linear;
    if (s == "none") return Entanglement::None;
    fail(ErrorCode::InvalidArgument, "unknown entanglement '" + name + "'");
}

std::string to_string(Entanglement e) {
    switch (e) {
        case Entanglement::Full: return "full";
        case Entanglement::Linear: return "linear";
        case Entanglement::None: return "none";
    }
    return "?";
}

std::vector<std::pair<unsigned, unsigned>> entanglement_edges(unsigned n_qubits, Entanglement e) {
    std::vector<std::pair<unsigned, unsigned>> edges;
    if (e == Entanglement::Full) {
        for (unsigned j = 0; j < n_qubits; ++j) {
            for (unsigned k = j + 1; k < n_qubits; ++k) {
                edges.emplace_back(j, k);
            }
        }
    } else if (e == Entanglement::Linear) {
        for (unsigned j = 0; j + 1 < n_qubits; ++j) {
            edges.emplace_back(j, j + 1);
        }
    }
    return edges;
}

AnsatzKind parse_ansatz_kind(const std::string& name) {
    const auto s = lower(name);
    if (s == "ra" || s == "realamplitudes") return AnsatzKind::RealAmplitudes;
    if (s == "esu2" || s == "efficientsu2") return AnsatzKind::EfficientSU2;
    fail(ErrorCode::InvalidArgument, "unknown ansatz '" + name + "'");
}

std::string to_string(AnsatzKind kind) { return kind == AnsatzKind::RealAmplitudes ? "RA" : "ESU2"; }

void FeatureMapSpec::validate() const {
    require(n_qubits >= 2, "feature map needs at least 2 qubits");
    require(n_qubits <= kMaxQubits, "feature map exceeds the qubit cap", ErrorCode::OutOfRange);
    require(reps >= 1, "feature map needs at least one repetition");
}

size_t AnsatzSpec::parameter_count() const {
    const size_t per_layer = kind == AnsatzKind::RealAmplitudes ? n_qubits : 2 * size_t{n_qubits};
    return per_layer * (reps + 1);
}

void AnsatzSpec::validate() const {
    require(n_qubits >= 1 && n_qubits <= kMaxQubits, "ansatz register size out of range", ErrorCode::OutOfRange);
}

Circuit build_zz_feature_map(std::span<const double> x, const FeatureMapSpec& spec) {
    spec.validate();
    require(x.size() == spec.n_qubits, "feature vector has " + std::to_string(x.size()) + " entries, map expects " +
                                           std::to_string(spec.n_qubits));
    const auto edges = entanglement_edges(spec.n_qubits, spec.entanglement);
    Circuit c(spec.n_qubits);
    for (unsigned r = 0; r < spec.reps; ++r) {
        for (unsigned q = 0; q < spec.n_qubits; ++q) {
            c.append(Gate::h(q));
        }
        for (unsigned q = 0; q < spec.n_qubits; ++q) {
            c.append(Gate::phase(q, Angle::fixed(2.0 * x[q])));
        }
        for (const auto& [j, k] : edges) {
            const double phi = (std::numbers::pi - x[j]) * (std::numbers::pi - x[k]);
            c.append(Gate::cx(j, k));
            c.append(Gate::phase(k, Angle::fixed(2.0 * phi)));
            c.append(Gate::cx(j, k));
        }
    }
    return c;
}

Circuit build_ansatz(const AnsatzSpec& spec) {
    spec.validate();
    Circuit c(spec.n_qubits);
    int slot = 0;
    auto rotation_block = [&] {
        for (unsigned q = 0; q < spec.n_qubits; ++q) {
            c.append(Gate::ry(q, Angle::slot(slot++)));
        }
        if (spec.kind == AnsatzKind::EfficientSU2) {
            for (unsigned q = 0; q < spec.n_qubits; ++q) {
                c.append(Gate::rz(q, Angle::slot(slot++)));
            }
        }
    };
    rotation_block();
    for (unsigned r = 0; r < spec.reps; ++r) {
        append_entangling_layer(c, spec.entanglement);
        rotation_block();
    }
    return c;
}

double quantum_kernel(std::span<const double> x, std::span<const double> y, const FeatureMapSpec& spec) {
    const auto sx = apply_circuit_statevector(build_zz_feature_map(x, spec));
    const auto sy = apply_circuit_statevector(build_zz_feature_map(y, spec));
    complex_t overlap = 0.0;
    const auto a = sx.data();
    const auto b = sy.data();
    for (size_t i = 0; i < a.size(); ++i) {
        overlap += std::conj(a[i]) * b[i];
    }
    return std::norm(overlap);
}

std::vector<double> kernel_matrix(const std::vector<std::vector<double>>& points, const FeatureMapSpec& spec) {
    const size_t n = points.size();
    std::vector<QuantumState> states;
    states.reserve(n);
    for (const auto& p : points) {
        states.push_back(apply_circuit_statevector(build_zz_feature_map(p, spec)));
    }
    std::vector<double> gram(n * n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i; j < n; ++j) {
            complex_t overlap = 0.0;
            const auto a = states[i].data();
            const auto b = states[j].data();
            for (size_t k = 0; k < a.size(); ++k) {
                overlap += std::conj(a[k]) * b[k];
            }
            gram[i * n + j] = gram[j * n + i] = std::norm(overlap);
        }
    }
    return gram;
}

}  // namespace qleak

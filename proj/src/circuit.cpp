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

#include "qleak/circuit.hpp"

#include <algorithm>
#include <cmath>

#include "qleak/error.hpp"
#include "qleak/rng.hpp"

namespace qleak {

namespace {

// Applies a 2x2 matrix to bit `bit` of a flat vector of 2^k entries.
void apply_1q(std::span<complex_t> v, unsigned bit, const std::array<complex_t, 4>& m) {
    const size_t stride = size_t{1} << bit;
    const size_t n = v.size();
    for (size_t base = 0; base < n; base += 2 * stride) {
        for (size_t i = base; i < base + stride; ++i) {
            const complex_t a = v[i];
            const complex_t b = v[i + stride];
            v[i] = m[0] * a + m[1] * b;
            v[i + stride] = m[2] * a + m[3] * b;
        }
    }
}

void apply_diag_1q(std::span<complex_t> v, unsigned bit, complex_t d0, complex_t d1) {
    const size_t mask = size_t{1} << bit;
    for (size_t i = 0; i < v.size(); ++i) {
        v[i] *= (i & mask) ? d1 : d0;
    }
}

void apply_cx(std::span<complex_t> v, unsigned control_bit, unsigned target_bit) {
    const size_t cmask = size_t{1} << control_bit;
    const size_t tmask = size_t{1} << target_bit;
    for (size_t i = 0; i < v.size(); ++i) {
        if ((i & cmask) && !(i & tmask)) {
            std::swap(v[i], v[i | tmask]);
        }
    }
}

void apply_gate_vector(std::span<complex_t> v, const Gate& g, unsigned bit_offset, bool conjugate) {
    if (g.kind == GateKind::CX) {
        apply_cx(v, g.targets[0] + bit_offset, g.targets[1] + bit_offset);
        return;
    }
    auto m = gate_matrix(g.kind, g.angle.value);
    if (conjugate) {
        for (auto& z : m) {
            z = std::conj(z);
        }
    }
    const unsigned bit = g.targets[0] + bit_offset;
    if (g.kind == GateKind::RZ || g.kind == GateKind::Phase) {
        apply_diag_1q(v, bit, m[0], m[3]);
    } else {
        apply_1q(v, bit, m);
    }
}

void check_bound(const Circuit& c) {
    require(c.is_bound(), "circuit has " + std::to_string(c.n_symbols()) + " unbound symbolic angles");
}

}  // namespace

std::string to_string(GateKind kind) {
    switch (kind) {
        case GateKind::H: return "H";
        case GateKind::RY: return "RY";
        case GateKind::RZ: return "RZ";
        case GateKind::Phase: return "Phase";
        case GateKind::CX: return "CX";
    }
    return "?";
}

std::array<complex_t, 4> gate_matrix(GateKind kind, double angle) {
    using namespace std::complex_literals;
    switch (kind) {
        case GateKind::H: {
            const double r = 1.0 / std::sqrt(2.0);
            return {r, r, r, -r};
        }
        case GateKind::RY: {
            const double c = std::cos(angle / 2), s = std::sin(angle / 2);
            return {c, -s, s, c};
        }
        case GateKind::RZ:
            return {std::exp(-0.5i * angle), 0.0, 0.0, std::exp(0.5i * angle)};
        case GateKind::Phase:
            return {1.0, 0.0, 0.0, std::exp(1.0i * angle)};
        case GateKind::CX:
            break;
    }
    fail(ErrorCode::InvalidArgument, "gate_matrix: CX is not a single-qubit gate");
}

Circuit::Circuit(unsigned n_qubits) : n_qubits_(n_qubits) {
    require(n_qubits >= 1, "circuit needs at least one qubit");
    require(n_qubits <= kMaxQubits, "circuit exceeds " + std::to_string(kMaxQubits) + " qubits", ErrorCode::OutOfRange);
}

Circuit& Circuit::append(const Gate& gate) {
    for (unsigned k = 0; k < gate.arity(); ++k) {
        require(gate.targets[k] < n_qubits_,
                to_string(gate.kind) + " target " + std::to_string(gate.targets[k]) + " out of range for " +
                    std::to_string(n_qubits_) + " qubits",
                ErrorCode::OutOfRange);
    }
    if (gate.kind == GateKind::CX) {
        require(gate.targets[0] != gate.targets[1], "CX control and target must differ");
    }
    if (gate.angle.is_symbolic()) {
        require(gate.is_parameterized(), to_string(gate.kind) + " takes no angle");
        n_symbols_ = std::max(n_symbols_, static_cast<size_t>(gate.angle.symbol) + 1);
    }
    gates_.push_back(gate);
    return *this;
}

Circuit& Circuit::extend(const Circuit& other) {
    require(other.n_qubits_ == n_qubits_, "cannot concatenate circuits over different registers");
    const int offset = static_cast<int>(n_symbols_);
    for (Gate g : other.gates_) {
        if (g.angle.is_symbolic()) {
            g.angle.symbol += offset;
        }
        append(g);
    }
    n_symbols_ = std::max(n_symbols_, static_cast<size_t>(offset) + other.n_symbols_);
    return *this;
}

Circuit Circuit::bind(std::span<const double> params) const {
    require(params.size() == n_symbols_, "bind: expected " + std::to_string(n_symbols_) + " parameters, got " +
                                             std::to_string(params.size()));
    Circuit out(n_qubits_);
    out.gates_.reserve(gates_.size());
    for (Gate g : gates_) {
        if (g.angle.is_symbolic()) {
            g.angle = Angle::fixed(params[static_cast<size_t>(g.angle.symbol)]);
        }
        out.gates_.push_back(g);
    }
    return out;
}

size_t Circuit::depth() const {
    std::vector<size_t> level(n_qubits_, 0);
    size_t depth = 0;
    for (const Gate& g : gates_) {
        size_t l = level[g.targets[0]];
        if (g.arity() == 2) {
            l = std::max(l, level[g.targets[1]]);
        }
        ++l;
        for (unsigned k = 0; k < g.arity(); ++k) {
            level[g.targets[k]] = l;
        }
        depth = std::max(depth, l);
    }
    return depth;
}

void NoiseConfig::validate() const {
    require(std::isfinite(p_gate) && p_gate >= 0.0 && p_gate <= 0.75,
            "p_gate must lie in [0, 0.75], got " + std::to_string(p_gate));
    if (shots) {
        require(*shots > 0, "shots must be positive");
    }
}

QuantumState QuantumState::zero(unsigned n_qubits, Representation rep) {
    require(n_qubits >= 1 && n_qubits <= kMaxQubits, "register size out of range", ErrorCode::OutOfRange);
    const size_t dim = size_t{1} << n_qubits;
    std::vector<complex_t> data(rep == Representation::StateVector ? dim : dim * dim, 0.0);
    data[0] = 1.0;
    return QuantumState(n_qubits, rep, std::move(data));
}

QuantumState QuantumState::from_amplitudes(unsigned n_qubits, std::vector<complex_t> amplitudes) {
    require(n_qubits >= 1 && n_qubits <= kMaxQubits, "register size out of range", ErrorCode::OutOfRange);
    require(amplitudes.size() == (size_t{1} << n_qubits), "amplitude vector length must be 2^n");
    return QuantumState(n_qubits, Representation::StateVector, std::move(amplitudes));
}

complex_t QuantumState::amplitude(size_t basis) const {
    require(rep_ == Representation::StateVector, "amplitude() needs a statevector");
    require(basis < dim(), "basis index out of range", ErrorCode::OutOfRange);
    return data_[basis];
}

complex_t QuantumState::element(size_t row, size_t col) const {
    require(rep_ == Representation::DensityMatrix, "element() needs a density matrix");
    require(row < dim() && col < dim(), "matrix index out of range", ErrorCode::OutOfRange);
    return data_[row * dim() + col];
}

double QuantumState::trace() const {
    double t = 0.0;
    if (rep_ == Representation::StateVector) {
        for (const auto& a : data_) {
            t += std::norm(a);
        }
    } else {
        for (size_t i = 0; i < dim(); ++i) {
            t += data_[i * dim() + i].real();
        }
    }
    return t;
}

QuantumState QuantumState::to_density() const {
    if (rep_ == Representation::DensityMatrix) {
        return *this;
    }
    const size_t d = dim();
    std::vector<complex_t> rho(d * d);
    for (size_t r = 0; r < d; ++r) {
        for (size_t c = 0; c < d; ++c) {
            rho[r * d + c] = data_[r] * std::conj(data_[c]);
        }
    }
    return QuantumState(n_qubits_, Representation::DensityMatrix, std::move(rho));
}

void apply_depolarizing(QuantumState& rho, unsigned qubit, double p) {
    require(rho.representation() == Representation::DensityMatrix, "depolarizing needs a density matrix");
    require(qubit < rho.n_qubits(), "depolarizing target out of range", ErrorCode::OutOfRange);
    if (p == 0.0) {
        return;
    }
    // Pauli twirl on one qubit: populations relax toward 1/2 at rate 2p/3,
    // coherences shrink by (1 - 4p/3).
    const unsigned n = rho.n_qubits();
    const size_t col_mask = size_t{1} << qubit;
    const size_t row_mask = size_t{1} << (qubit + n);
    const double keep = 1.0 - 2.0 * p / 3.0;
    const double move = 2.0 * p / 3.0;
    const double shrink = 1.0 - 4.0 * p / 3.0;
    auto v = rho.data();
    for (size_t i = 0; i < v.size(); ++i) {
        if (i & (col_mask | row_mask)) {
            continue;
        }
        const size_t i11 = i | col_mask | row_mask;
        const complex_t a = v[i];
        const complex_t d = v[i11];
        v[i] = keep * a + move * d;
        v[i11] = keep * d + move * a;
        v[i | col_mask] *= shrink;
        v[i | row_mask] *= shrink;
    }
}

QuantumState evolve(const Circuit& circuit, QuantumState state, double p_gate, bool noisy_cx) {
    check_bound(circuit);
    require(circuit.n_qubits() == state.n_qubits(), "circuit and state registers differ");
    NoiseConfig{p_gate, std::nullopt, noisy_cx}.validate();
    if (p_gate > 0.0 && state.representation() == Representation::StateVector) {
        state = state.to_density();
    }
    const unsigned n = circuit.n_qubits();
    if (state.representation() == Representation::StateVector) {
        for (const Gate& g : circuit.gates()) {
            apply_gate_vector(state.data(), g, 0, false);
        }
        return state;
    }
    for (const Gate& g : circuit.gates()) {
        // rho -> U rho U^dagger: U on the row bits, conj(U) on the column bits.
        apply_gate_vector(state.data(), g, n, false);
        apply_gate_vector(state.data(), g, 0, true);
        if (g.kind != GateKind::CX) {
            apply_depolarizing(state, g.targets[0], p_gate);
        } else if (noisy_cx) {
            apply_depolarizing(state, g.targets[0], p_gate);
            apply_depolarizing(state, g.targets[1], p_gate);
        }
    }
    return state;
}

QuantumState apply_circuit_statevector(const Circuit& circuit) {
    check_bound(circuit);
    return evolve(circuit, QuantumState::zero(circuit.n_qubits(), Representation::StateVector), 0.0);
}

QuantumState apply_circuit_density(const Circuit& circuit, const NoiseConfig& noise) {
    noise.validate();
    check_bound(circuit);
    return evolve(circuit, QuantumState::zero(circuit.n_qubits(), Representation::DensityMatrix), noise.p_gate,
                  noise.noisy_cx);
}

ReadoutProbs measure_qubit_probs(const QuantumState& state, unsigned qubit) {
    require(qubit < state.n_qubits(), "measured qubit out of range", ErrorCode::OutOfRange);
    const size_t mask = size_t{1} << qubit;
    const size_t d = state.dim();
    double p0 = 0.0, p1 = 0.0;
    const auto v = state.data();
    for (size_t i = 0; i < d; ++i) {
        const double w = state.representation() == Representation::StateVector ? std::norm(v[i])
                                                                                 : v[i * d + i].real();
        ((i & mask) ? p1 : p0) += w;
    }
    // Renormalize away accumulated rounding so p0 + p1 == 1 exactly.
    const double total = p0 + p1;
    return {p0 / total, p1 / total};
}

ShotCounts sample_counts(double p0, uint64_t shots, uint64_t seed) {
    require(shots > 0, "shots must be positive");
    require(p0 >= -1e-12 && p0 <= 1.0 + 1e-12, "p0 must be a probability");
    p0 = std::clamp(p0, 0.0, 1.0);
    Rng rng(seed);
    uint64_t n0 = 0;
    for (uint64_t s = 0; s < shots; ++s) {
        n0 += rng.uniform() < p0 ? 1 : 0;
    }
    return {n0, shots - n0};
}

double expectation_z(double p0, double p1) { return p0 - p1; }

double expectation_z(const ShotCounts& counts) {
    const double total = static_cast<double>(counts.n0 + counts.n1);
    require(total > 0, "no shots recorded");
    return (static_cast<double>(counts.n0) - static_cast<double>(counts.n1)) / total;
}

}  // namespace qleak

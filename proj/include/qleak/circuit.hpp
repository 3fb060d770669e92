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
 * Gate-level circuit IR and the two simulation backends (pure statevector and
 * density matrix with a single-qubit depolarizing channel), plus readout
 * marginals and shot sampling.
 *
 * Conventions used throughout:
 *   RY(t) = exp(-i t Y / 2), RZ(t) = exp(-i t Z / 2), Phase(l) = diag(1, e^{il})
 *   qubit 0 is the least-significant bit of a basis-state index
 *   density matrices are stored row-major, rho[row * dim + col]
 */

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qleak {

using complex_t = std::complex<double>;

/// Largest register the simulators accept.
inline constexpr unsigned kMaxQubits = 12;

enum class GateKind { H, RY, RZ, Phase, CX };

std::string to_string(GateKind kind);

/// Rotation angle: either a fixed value in radians or a symbolic slot that is
/// filled in by Circuit::bind.
struct Angle {
    double value = 0.0;
    int symbol = -1;

    static Angle fixed(double radians) { return Angle{radians, -1}; }
    static Angle slot(int index) { return Angle{0.0, index}; }
    bool is_symbolic() const { return symbol >= 0; }
};

struct Gate {
    GateKind kind = GateKind::H;
    std::array<unsigned, 2> targets{0, 0};
    Angle angle{};

    unsigned arity() const { return kind == GateKind::CX ? 2u : 1u; }
    bool is_parameterized() const { return kind == GateKind::RY || kind == GateKind::RZ || kind == GateKind::Phase; }

    static Gate h(unsigned q) { return {GateKind::H, {q, q}, {}}; }
    static Gate ry(unsigned q, Angle a) { return {GateKind::RY, {q, q}, a}; }
    static Gate rz(unsigned q, Angle a) { return {GateKind::RZ, {q, q}, a}; }
    static Gate phase(unsigned q, Angle a) { return {GateKind::Phase, {q, q}, a}; }
    static Gate cx(unsigned control, unsigned target) { return {GateKind::CX, {control, target}, {}}; }
};

/// 2x2 unitary of a bound single-qubit gate, row-major.
std::array<complex_t, 4> gate_matrix(GateKind kind, double angle);

/// Ordered gate list over a fixed register. Gates are validated on append.
class Circuit {
public:
    explicit Circuit(unsigned n_qubits);

    unsigned n_qubits() const { return n_qubits_; }
    size_t n_symbols() const { return n_symbols_; }
    size_t size() const { return gates_.size(); }
    bool is_bound() const { return n_symbols_ == 0; }
    const std::vector<Gate>& gates() const { return gates_; }

    Circuit& append(const Gate& gate);

    /// Appends every gate of `other`, shifting its symbolic slots past ours.
    Circuit& extend(const Circuit& other);

    /// Substitutes `params[k]` for slot k. Requires params.size() == n_symbols().
    Circuit bind(std::span<const double> params) const;

    /// ASAP layer count. Informational only.
    size_t depth() const;

private:
    unsigned n_qubits_;
    size_t n_symbols_ = 0;
    std::vector<Gate> gates_;
};

struct NoiseConfig {
    /// Depolarizing probability applied after every single-qubit gate.
    double p_gate = 0.0;
    /// Shots per circuit evaluation; nullopt means exact expectations.
    std::optional<uint64_t> shots;
    /// Extension point: also depolarize both qubits after each CX. Off by default.
    bool noisy_cx = false;

    bool is_exact() const { return p_gate == 0.0 && !shots.has_value(); }
    void validate() const;

    static NoiseConfig exact() { return {}; }
    /// p_gate = 0.05 with 1024 shots.
    static NoiseConfig hardware_like() { return {0.05, 1024, false}; }
};

enum class Representation { StateVector, DensityMatrix };

class QuantumState {
public:
    /// |0...0>, or its projector for the density representation.
    static QuantumState zero(unsigned n_qubits, Representation rep);
    static QuantumState from_amplitudes(unsigned n_qubits, std::vector<complex_t> amplitudes);

    Representation representation() const { return rep_; }
    unsigned n_qubits() const { return n_qubits_; }
    size_t dim() const { return size_t{1} << n_qubits_; }

    std::span<const complex_t> data() const { return data_; }
    std::span<complex_t> data() { return data_; }

    /// Amplitude (statevector) lookup.
    complex_t amplitude(size_t basis) const;
    /// Matrix element (density) lookup.
    complex_t element(size_t row, size_t col) const;

    /// Sum of |amplitude|^2, or the real trace.
    double trace() const;

    /// |psi><psi| of a statevector; a density matrix is returned unchanged.
    QuantumState to_density() const;

private:
    QuantumState(unsigned n, Representation rep, std::vector<complex_t> data)
        : rep_(rep), n_qubits_(n), data_(std::move(data)) {}

    Representation rep_;
    unsigned n_qubits_;
    std::vector<complex_t> data_;
};

/// U_circuit |0...0>.
QuantumState apply_circuit_statevector(const Circuit& circuit);

/// Noisy evolution of |0...0><0...0|.
QuantumState apply_circuit_density(const Circuit& circuit, const NoiseConfig& noise);

/// Continues evolution from `initial` (either representation). A pure state is
/// promoted to a density matrix when p_gate > 0.
QuantumState evolve(const Circuit& circuit, QuantumState initial, double p_gate, bool noisy_cx = false);

/// Single-qubit depolarizing channel on qubit q of a density matrix.
void apply_depolarizing(QuantumState& rho, unsigned qubit, double p);

struct ReadoutProbs {
    double p0 = 1.0;
    double p1 = 0.0;
};

ReadoutProbs measure_qubit_probs(const QuantumState& state, unsigned qubit);

struct ShotCounts {
    uint64_t n0 = 0;
    uint64_t n1 = 0;
};

ShotCounts sample_counts(double p0, uint64_t shots, uint64_t seed);

/// <Z> = p0 - p1.
double expectation_z(double p0, double p1);
double expectation_z(const ShotCounts& counts);

}  // namespace qleak

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
 * Unconstrained minimizers sharing one interface: SPSA, CMA-ES, COBYLA
 * (linear-model trust region on a simplex) and BFGS. Every objective
 * evaluation is recorded in the result trace.
 */

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace qleak {

struct Objective {
    /// May be stochastic; called serially by one minimize() invocation.
    std::function<double(std::span<const double>)> eval;
    size_t dim = 0;
    /// Optional analytic gradient (BFGS uses it instead of finite differences).
    std::function<std::vector<double>(std::span<const double>)> gradient;
};

enum class Method { SPSA, CMAES, COBYLA, BFGS };

Method parse_method(const std::string& name);
std::string to_string(Method m);

struct TracePoint {
    size_t index = 0;
    double loss = 0.0;
    double best_so_far = 0.0;
};

struct OptResult {
    std::vector<double> theta_best;
    double f_best = 0.0;
    std::vector<TracePoint> trace;
    size_t n_evals = 0;
    size_t n_gradient_evals = 0;
    bool converged = false;
    std::string message;
};

struct OptimizerOptions {
    // SPSA gains a_k = a / (k + 1 + A)^alpha, c_k = c / (k + 1)^gamma.
    double spsa_a = 0.2;
    double spsa_c = 0.1;
    double spsa_alpha = 0.602;
    double spsa_gamma = 0.101;
    /// Stability constant A; negative means budget / 10.
    double spsa_A = -1.0;
    /// The iterate itself is evaluated every this many iterations (and last).
    size_t spsa_eval_every = 5;

    double cma_sigma0 = 0.5;

    double cobyla_rhobeg = 0.5;
    double cobyla_rhoend = 1e-4;

    /// Central-difference step when no analytic gradient is supplied.
    double bfgs_fd_step = 0.05;
    double bfgs_armijo_c1 = 1e-4;
    double bfgs_gtol = 1e-10;
};

/// Minimizes `obj` from theta0 using at most about `budget` evaluations.
/// Throws if the objective is non-finite at theta0 or budget < 10 m.
OptResult minimize(const Objective& obj, std::span<const double> theta0, Method method, size_t budget,
                   uint64_t seed, const OptimizerOptions& options = {});

/// CSV rows "evaluation_index,loss,best_so_far" with a header line.
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

}  // namespace qleak

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


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "qleak/error.hpp"
#include "qleak/optimizers.hpp"

using namespace qleak;

namespace {

double sphere_value(std::span<const double> t, std::span<const double> shift = {}) {
    double s = 0.0;
    for (size_t i = 0; i < t.size(); ++i) {
        const double d = t[i] - (shift.empty() ? 0.0 : shift[i]);
        s += d * d;
    }
    return s;
}

Objective sphere(size_t m, bool with_gradient) {
    Objective o;
    o.dim = m;
    o.eval = [](std::span<const double> t) { return sphere_value(t); };
    if (with_gradient) {
        o.gradient = [](std::span<const double> t) {
            std::vector<double> g(t.size());
            for (size_t i = 0; i < t.size(); ++i) g[i] = 2 * t[i];
            return g;
        };
    }
    return o;
}

Objective rosenbrock() {
    Objective o;
    o.dim = 2;
    o.eval = [](std::span<const double> t) {
        return 100 * std::pow(t[1] - t[0] * t[0], 2) + std::pow(1 - t[0], 2);
    };
    return o;
}

bool best_so_far_monotone(const OptResult& r) {
    for (size_t i = 1; i < r.trace.size(); ++i) {
        if (r.trace[i].best_so_far > r.trace[i - 1].best_so_far) return false;
    }
    return true;
}

double trace_min(const OptResult& r) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& t : r.trace) m = std::min(m, t.best_so_far);
    return m;
}

constexpr Method kAll[] = {Method::SPSA, Method::CMAES, Method::COBYLA, Method::BFGS};

}  // namespace

TEST_CASE("BFGS sphere m=16") {
    const std::vector<double> x0(16, 1.0);
    const auto r = minimize(sphere(16, true), x0, Method::BFGS, 500, 0);
    CHECK(r.f_best < 1e-8);
    CHECK(r.n_evals <= 500);
    const auto fd = minimize(sphere(16, false), x0, Method::BFGS, 500, 0);
    CHECK(fd.f_best < 1e-8);
    CHECK(fd.n_evals <= 500 + 2 * 16);
}

TEST_CASE("CMA-ES Rosenbrock") {
    const std::vector<double> x0{-1.2, 1.0};
    const auto r = minimize(rosenbrock(), x0, Method::CMAES, 5000, 3);
    CHECK(r.f_best < 1e-3);
    CHECK(r.n_evals <= 5000 + 10);
}

TEST_CASE("COBYLA sphere m=8") {
    const std::vector<double> x0(8, 1.0);
    const auto r = minimize(sphere(8, false), x0, Method::COBYLA, 2000, 0);
    CHECK(r.f_best < 1e-4);
    CHECK(r.n_evals <= 2000);
}

TEST_CASE("COBYLA ill-conditioned quadratic") {
    Objective o;
    o.dim = 4;
    o.eval = [](std::span<const double> t) {
        const double u = t[0] + t[1], v = t[0] - t[1];
        return u * u + 100 * v * v + 10 * t[2] * t[2] + (t[3] - 0.5) * (t[3] - 0.5);
    };
    const auto r = minimize(o, std::vector<double>{1.0, -0.3, 0.7, 2.0}, Method::COBYLA, 3000, 0);
    CHECK(r.converged);
    CHECK(r.f_best < 1e-3);
}

TEST_CASE("SPSA noisy sphere against the noiseless oracle") {
    double total = 0.0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        auto gen = std::make_shared<std::mt19937_64>(1000 + seed);
        Objective o;
        o.dim = 16;
        o.eval = [gen](std::span<const double> t) {
            std::normal_distribution<double> noise(0.0, 0.01);
            return sphere_value(t) + noise(*gen);
        };
        const auto r = minimize(o, std::vector<double>(16, 1.0), Method::SPSA, 3000, seed);
        CHECK(r.n_evals <= 3000 + 2);
        total += sphere_value(r.theta_best);
    }
    CHECK(total / 10 < 0.05);
}

TEST_CASE("budget compliance and trace invariants") {
    const std::vector<double> x0(6, 2.0);
    for (auto m : kAll) {
        CAPTURE(to_string(m));
        for (size_t budget : {60u, 200u, 777u}) {
            // A plateau keeps every method busy until the budget runs out.
            Objective o = sphere(6, false);
            o.eval = [](std::span<const double> t) { return std::log1p(sphere_value(t)) + 1.0; };
            const auto r = minimize(o, x0, m, budget, 9);
            const size_t slack = m == Method::CMAES ? 4 + static_cast<size_t>(3 * std::log(6.0)) : 2 * 6;
            CHECK(r.n_evals <= budget + slack);
            REQUIRE(!r.trace.empty());
            CHECK(r.n_evals == r.trace.size());
            CHECK(r.f_best == trace_min(r));
            CHECK(best_so_far_monotone(r));
            for (size_t i = 0; i < r.trace.size(); ++i) CHECK(r.trace[i].index == i);
        }
    }
}

TEST_CASE("seed determinism") {
    const std::vector<double> x0(5, 0.7);
    for (auto m : kAll) {
        const auto a = minimize(sphere(5, false), x0, m, 400, 17);
        const auto b = minimize(sphere(5, false), x0, m, 400, 17);
        CHECK(a.theta_best == b.theta_best);
        CHECK(a.n_evals == b.n_evals);
        for (size_t i = 0; i < a.trace.size(); ++i) CHECK(a.trace[i].loss == b.trace[i].loss);
    }
    for (auto m : {Method::COBYLA, Method::BFGS}) {
        const auto a = minimize(sphere(5, false), x0, m, 400, 1);
        const auto b = minimize(sphere(5, false), x0, m, 400, 2);
        CHECK(a.theta_best == b.theta_best);
    }
    const auto s1 = minimize(sphere(5, false), x0, Method::SPSA, 400, 1);
    const auto s2 = minimize(sphere(5, false), x0, Method::SPSA, 400, 2);
    CHECK(s1.theta_best != s2.theta_best);
}

TEST_CASE("translation invariance on the sphere") {
    const std::vector<double> v{0.3, -1.1, 0.8, 2.0};
    const std::vector<double> x0{1.0, -0.5, 0.25, 0.9};
    std::vector<double> x0v(4);
    for (size_t i = 0; i < 4; ++i) x0v[i] = x0[i] + v[i];
    const struct {
        Method m;
        size_t budget;
        double tol;
    } cases[] = {{Method::BFGS, 400, 1e-5}, {Method::COBYLA, 1500, 1e-3}, {Method::CMAES, 3000, 1e-3},
                 {Method::SPSA, 3000, 0.05}};
    for (const auto& c : cases) {
        CAPTURE(to_string(c.m));
        Objective shifted;
        shifted.dim = 4;
        shifted.eval = [&](std::span<const double> t) { return sphere_value(t, v); };
        const auto a = minimize(sphere(4, false), x0, c.m, c.budget, 5);
        const auto b = minimize(shifted, x0v, c.m, c.budget, 5);
        for (size_t i = 0; i < 4; ++i) {
            CHECK(std::abs(a.theta_best[i]) < c.tol);
            CHECK(std::abs(b.theta_best[i] - v[i]) < c.tol);
        }
    }
}

TEST_CASE("non-finite objectives") {
    Objective bad;
    bad.dim = 3;
    bad.eval = [](std::span<const double>) { return std::numeric_limits<double>::quiet_NaN(); };
    for (auto m : kAll) CHECK_THROWS_AS(minimize(bad, std::vector<double>(3, 0.0), m, 100, 0), Error);

    for (auto m : kAll) {
        CAPTURE(to_string(m));
        auto calls = std::make_shared<size_t>(0);
        Objective late;
        late.dim = 3;
        late.eval = [calls](std::span<const double> t) {
            return ++*calls > 8 ? std::numeric_limits<double>::quiet_NaN() : sphere_value(t);
        };
        const auto r = minimize(late, std::vector<double>(3, 1.0), m, 300, 0);
        CHECK(!r.converged);
        CHECK(r.trace.size() == 8);
        CHECK(r.message.find("non-finite") != std::string::npos);
    }
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(minimize(sphere(4, false), std::vector<double>(4, 0.0), Method::SPSA, 39, 0), Error);
    CHECK_THROWS_AS(minimize(sphere(4, false), std::vector<double>(3, 0.0), Method::SPSA, 100, 0), Error);
    CHECK(parse_method("CMAES") == Method::CMAES);
    CHECK(to_string(parse_method("COBYLA")) == "COBYLA");
    CHECK_THROWS_AS(parse_method("SLSQP"), Error);
}

TEST_CASE("trace CSV") {
    const std::vector<TracePoint> t{{0, 2.5, 2.5}, {1, 3.0, 2.5}, {2, 0.125, 0.125}};
    std::ostringstream os;
    write_trace_csv(os, t);
    CHECK(os.str() == "evaluation_index,loss,best_so_far\n0,2.5,2.5\n1,3,2.5\n2,0.125,0.125\n");
}

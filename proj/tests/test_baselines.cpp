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

#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "oracle.hpp"
#include "qleak/baselines.hpp"
#include "qleak/error.hpp"

using namespace qleak;

namespace {

double sig(double z) { return 1.0 / (1.0 + std::exp(-z)); }

LabeledData make(std::vector<std::vector<double>> rows, std::vector<int> labels) {
    LabeledData d;
    d.rows = std::move(rows);
    d.labels = std::move(labels);
    return d;
}

LabeledData random_binary(std::mt19937_64& gen, size_t n, size_t dim, double signal) {
    std::bernoulli_distribution coin(0.5);
    std::uniform_real_distribution<double> u(0, 1);
    LabeledData d;
    for (size_t i = 0; i < n; ++i) {
        std::vector<double> r(dim);
        for (auto& v : r) v = coin(gen) ? 1.0 : 0.0;
        d.rows.push_back(r);
        d.labels.push_back(u(gen) < sig(-1.5 + signal * (r[0] - r[1])) ? 1 : 0);
    }
    d.labels[0] = 1;
    d.labels[1] = 0;
    return d;
}

// Newton's method written with plain loops and Gaussian elimination.
std::vector<double> newton_logistic(const LabeledData& d, double l2) {
    const size_t k = d.dim() + 1;
    std::vector<double> b(k, 0.0);
    for (int it = 0; it < 100; ++it) {
        std::vector<double> g(k, 0.0);
        std::vector<std::vector<double>> H(k, std::vector<double>(k, 0.0));
        for (size_t i = 0; i < d.size(); ++i) {
            std::vector<double> x{1.0};
            x.insert(x.end(), d.rows[i].begin(), d.rows[i].end());
            double eta = 0.0;
            for (size_t j = 0; j < k; ++j) eta += b[j] * x[j];
            const double p = sig(eta);
            for (size_t j = 0; j < k; ++j) {
                g[j] += (d.labels[i] - p) * x[j];
                for (size_t l = 0; l < k; ++l) H[j][l] += p * (1 - p) * x[j] * x[l];
            }
        }
        for (size_t j = 1; j < k; ++j) {
            g[j] -= l2 * b[j];
            H[j][j] += l2;
        }
        // Solve H s = g.
        for (size_t c = 0; c < k; ++c) {
            size_t piv = c;
            for (size_t r = c + 1; r < k; ++r) {
                if (std::abs(H[r][c]) > std::abs(H[piv][c])) piv = r;
            }
            std::swap(H[c], H[piv]);
            std::swap(g[c], g[piv]);
            for (size_t r = c + 1; r < k; ++r) {
                const double f = H[r][c] / H[c][c];
                for (size_t l = c; l < k; ++l) H[r][l] -= f * H[c][l];
                g[r] -= f * g[c];
            }
        }
        std::vector<double> s(k);
        for (size_t c = k; c-- > 0;) {
            double v = g[c];
            for (size_t l = c + 1; l < k; ++l) v -= H[c][l] * s[l];
            s[c] = v / H[c][c];
        }
        for (size_t j = 0; j < k; ++j) b[j] += s[j];
    }
    return b;
}

double stump_error(const LabeledData& d, const std::vector<double>& w, size_t f, double thr, int pol) {
    double e = 0.0;
    for (size_t i = 0; i < d.size(); ++i) {
        const int h = d.rows[i][f] > thr ? pol : -pol;
        if (h != (d.labels[i] ? 1 : -1)) e += w[i];
    }
    return e;
}

}  // namespace

TEST_CASE("logistic regression matches an independent Newton oracle") {
    const auto d = make({{0, 1.0}, {1, 0.5}, {1, 2.0}, {0, -1.0}, {1, 1.5}, {0, 0.0}}, {0, 1, 1, 0, 0, 1});
    for (double l2 : {0.0, 0.1, 1.0}) {
        const auto m = fit_logistic(d, l2);
        const auto& p = std::get<LogisticParams>(m.params);
        const auto ref = newton_logistic(d, l2);
        CHECK(std::abs(p.intercept - ref[0]) < 1e-6);
        CHECK(std::abs(p.coef[0] - ref[1]) < 1e-6);
        CHECK(std::abs(p.coef[1] - ref[2]) < 1e-6);
    }
    std::mt19937_64 gen(3);
    const auto r = random_binary(gen, 80, 4, 2.0);
    const auto m = fit_logistic(r, 0.1);
    const auto ref = newton_logistic(r, 0.1);
    const auto& p = std::get<LogisticParams>(m.params);
    CHECK(std::abs(p.intercept - ref[0]) < 1e-6);
    for (size_t j = 0; j < 4; ++j) CHECK(std::abs(p.coef[j] - ref[j + 1]) < 1e-6);
}

TEST_CASE("logistic regression limits") {
    // A constant zero column leaves only the intercept.
    const auto bal = make({{0}, {0}, {0}, {0}}, {1, 0, 1, 0});
    const auto m = fit_logistic(bal, 1.0);
    CHECK(std::abs(predict_proba(m, std::vector<double>{0.0}) - 0.5) < 1e-12);
    CHECK(std::abs(predict_proba(m, std::vector<double>{1.0}) - 0.5) < 1e-12);

    std::mt19937_64 gen(5);
    const auto d = random_binary(gen, 100, 3, 2.0);
    const auto big = fit_logistic(d, 1e6);
    const double freq = static_cast<double>(d.count_positive()) / static_cast<double>(d.size());
    for (const auto& row : d.rows) CHECK(std::abs(predict_proba(big, row) - freq) < 1e-3);

    // Separable data is rejected without a penalty and ordered with one.
    const auto sep = make({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 0, 1, 1});
    CHECK_THROWS_AS(fit_logistic(sep, 0.0), Error);
    const auto dup = make({{0, 0}, {1, 1}, {0, 0}, {1, 1}, {1, 1}}, {0, 0, 1, 1, 0});
    CHECK_THROWS_AS(fit_logistic(dup, 0.0), Error);
    CHECK_NOTHROW(fit_logistic(dup, 0.1));
    const auto pen = fit_logistic(sep, 1.0);
    for (double x = -1.0; x < 4.0; x += 0.5) {
        CHECK(predict_proba(pen, std::vector<double>{x}) < predict_proba(pen, std::vector<double>{x + 0.5}));
    }
    CHECK_THROWS_AS(fit_logistic(d, -1.0), Error);
}

TEST_CASE("LDA direction matches the dense-solve oracle") {
    const auto d = make({{0.1, 1.2}, {0.4, 0.7}, {1.1, 0.3}, {0.8, 1.9}, {2.0, 1.0}, {1.7, 2.2}, {2.4, 1.5}, {1.5, 0.4}},
                        {0, 0, 0, 0, 1, 1, 1, 1});
    Eigen::Vector2d mu0 = Eigen::Vector2d::Zero(), mu1 = Eigen::Vector2d::Zero();
    for (size_t i = 0; i < 8; ++i) {
        const Eigen::Vector2d x(d.rows[i][0], d.rows[i][1]);
        (d.labels[i] ? mu1 : mu0) += x / 4.0;
    }
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    for (size_t i = 0; i < 8; ++i) {
        const Eigen::Vector2d r = Eigen::Vector2d(d.rows[i][0], d.rows[i][1]) - (d.labels[i] ? mu1 : mu0);
        S += r * r.transpose() / 6.0;
    }
    S += 1e-6 * Eigen::Matrix2d::Identity();
    const Eigen::Vector2d w = S.fullPivLu().solve(mu1 - mu0);
    const auto m = fit_lda(d);
    const auto& p = std::get<LdaParams>(m.params);
    CHECK(std::abs(p.weights[0] - w[0]) < 1e-8);
    CHECK(std::abs(p.weights[1] - w[1]) < 1e-8);
    CHECK(std::abs(p.bias + 0.5 * (mu0 + mu1).dot(w)) < 1e-8);
}

TEST_CASE("LDA separable clouds and identical means") {
    std::mt19937_64 gen(9);
    std::normal_distribution<double> n01(0, 0.3);
    LabeledData d;
    for (int i = 0; i < 40; ++i) {
        const int y = i % 2;
        d.rows.push_back({y * 4.0 + n01(gen), y * 4.0 + n01(gen)});
        d.labels.push_back(y);
    }
    const auto m = fit_lda(d);
    for (size_t i = 0; i < d.size(); ++i) CHECK((predict_proba(m, d.rows[i]) > 0.5) == (d.labels[i] == 1));

    const auto same = make({{0, 1}, {1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 0}}, {0, 0, 0, 0, 1, 1});
    const auto z = fit_lda(same);
    const auto& p = std::get<LdaParams>(z.params);
    CHECK(std::abs(p.weights[0]) < 1e-9);
    CHECK(std::abs(p.weights[1]) < 1e-9);
    CHECK(std::abs(predict_proba(z, std::vector<double>{0.3, 0.9}) - 2.0 / 6.0) < 1e-9);
    CHECK_THROWS_AS(fit_lda(make({{0}, {1}}, {0, 0})), Error);
}

TEST_CASE("GNB log-posterior matches hand-summed Gaussian log-densities") {
    const auto d = make({{1.0, 0.0, 2.0}, {2.0, 1.0, 0.0}, {3.0, 1.0, 1.0}, {0.0, 0.0, 4.0}, {1.0, 1.0, 3.0}},
                        {0, 0, 0, 1, 1});
    // Column variances over all rows: 1.04, 0.24, 2.0; the largest is 2.0.
    const double floor = 1e-3 * 2.0;
    // Class 0 means (2, 2/3, 1), variances (2/3, 2/9, 2/3); class 1 means (0.5, 0.5, 3.5), variances 0.25 each.
    const double m0[3] = {2.0, 2.0 / 3, 1.0}, v0[3] = {2.0 / 3 + floor, 2.0 / 9 + floor, 2.0 / 3 + floor};
    const double m1[3] = {0.5, 0.5, 3.5}, v1[3] = {0.25 + floor, 0.25 + floor, 0.25 + floor};
    const auto m = fit_gnb(d, 1e-3);
    const std::vector<double> x{1.5, 0.2, 2.5};
    double l0 = std::log(0.6), l1 = std::log(0.4);
    for (int j = 0; j < 3; ++j) {
        l0 += -0.5 * std::log(2 * std::numbers::pi * v0[j]) - (x[j] - m0[j]) * (x[j] - m0[j]) / (2 * v0[j]);
        l1 += -0.5 * std::log(2 * std::numbers::pi * v1[j]) - (x[j] - m1[j]) * (x[j] - m1[j]) / (2 * v1[j]);
    }
    const auto lj = gnb_log_joint(std::get<GnbParams>(m.params), x);
    CHECK(std::abs(lj[0] - l0) < 1e-10);
    CHECK(std::abs(lj[1] - l1) < 1e-10);
    CHECK(std::abs(predict_proba(m, x) - sig(l1 - l0)) < 1e-12);
}

TEST_CASE("GNB degenerate cases") {
    const auto sep = make({{0}, {0}, {1}, {1}}, {0, 0, 1, 1});
    const auto m = fit_gnb(sep, 1e-9);
    CHECK(predict_proba(m, std::vector<double>{0.0}) < 0.5);
    CHECK(predict_proba(m, std::vector<double>{1.0}) > 0.5);

    // Equal per-class distributions with a 14% positive rate return the prior.
    LabeledData d;
    for (int i = 0; i < 100; ++i) {
        d.rows.push_back({static_cast<double>(i % 2)});
        d.labels.push_back(i < 14 ? 1 : 0);
    }
    // Rows 0..13 hold 7 zeros and 7 ones; rows 14..99 hold 43 of each.
    const auto g = fit_gnb(d, 1e-9);
    CHECK(std::abs(predict_proba(g, std::vector<double>{0.0}) - 0.14) < 1e-12);
    CHECK(std::abs(predict_proba(g, std::vector<double>{1.0}) - 0.14) < 1e-12);
    CHECK_THROWS_AS(fit_gnb(sep, 0.0), Error);
}

TEST_CASE("AdaBoost matches an exhaustive stump oracle") {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> u(0, 1);
    LabeledData d;
    for (int i = 0; i < 10; ++i) {
        d.rows.push_back({u(gen), u(gen)});
        d.labels.push_back(u(gen) < 0.5 ? 1 : 0);
    }
    d.labels[0] = 1;
    d.labels[1] = 0;
    const auto m = fit_adaboost(d, 3);
    const auto& p = std::get<AdaBoostParams>(m.params);
    REQUIRE(!p.stumps.empty());
    std::vector<double> w(10, 0.1);
    for (const auto& s : p.stumps) {
        double best = 1.0;
        for (size_t f = 0; f < 2; ++f) {
            std::vector<double> v;
            for (const auto& r : d.rows) v.push_back(r[f]);
            std::sort(v.begin(), v.end());
            for (size_t k = 0; k + 1 < v.size(); ++k) {
                for (int pol : {1, -1}) best = std::min(best, stump_error(d, w, f, 0.5 * (v[k] + v[k + 1]), pol));
            }
        }
        const double e = stump_error(d, w, s.feature, s.threshold, s.polarity);
        CHECK(std::abs(e - best) < 1e-12);
        CHECK(e < 0.5);
        CHECK(std::abs(s.alpha - 0.5 * std::log((1 - e) / e)) < 1e-12);
        double total = 0.0;
        for (size_t i = 0; i < 10; ++i) {
            const int h = d.rows[i][s.feature] > s.threshold ? s.polarity : -s.polarity;
            w[i] *= std::exp(-s.alpha * (d.labels[i] ? 1 : -1) * h);
            total += w[i];
        }
        for (auto& wi : w) wi /= total;
    }
    CHECK(p.stumps.size() == 3);
}

TEST_CASE("AdaBoost perfect split and no signal") {
    const auto sep = make({{0, 3}, {1, 2}, {0, 1}, {1, 0}}, {0, 1, 0, 1});
    const auto m = fit_adaboost(sep, 10);
    const auto& p = std::get<AdaBoostParams>(m.params);
    REQUIRE(p.stumps.size() == 1);
    CHECK(p.stumps[0].feature == 0);
    CHECK(std::abs(p.stumps[0].alpha - 0.5 * std::log((1 - 1e-6) / 1e-6)) < 1e-9);
    for (size_t i = 0; i < 4; ++i) CHECK((predict_proba(m, sep.rows[i]) > 0.5) == (sep.labels[i] == 1));

    // Identical feature rows leave no candidate threshold.
    const auto flat = make({{1}, {1}, {1}, {1}}, {0, 1, 0, 1});
    const auto f = fit_adaboost(flat, 5);
    CHECK(std::get<AdaBoostParams>(f.params).stumps.empty());
    CHECK(predict_proba(f, std::vector<double>{1.0}) == 0.5);
    CHECK_THROWS_AS(fit_adaboost(sep, 0), Error);
}

TEST_CASE("MLP learns XOR") {
    const auto x = make({{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0});
    const auto m = fit_mlp(x, MlpConfig{8, 5000, 0.5, 1});
    CHECK(mlp_loss(std::get<MlpParams>(m.params), x) < 0.1);
    for (size_t i = 0; i < 4; ++i) CHECK((predict_proba(m, x.rows[i]) > 0.5) == (x.labels[i] == 1));
}

TEST_CASE("MLP gradient matches finite differences") {
    std::mt19937_64 gen(4);
    const auto d = random_binary(gen, 20, 3, 1.0);
    const auto p = mlp_initialize(3, 5, 11);
    const auto g = mlp_gradient(p, d);
    const auto flat = p.flatten();
    for (size_t k = 0; k < flat.size(); ++k) {
        const double fd = oracle::central_difference(
            [&](double t) {
                auto f = flat;
                f[k] = t;
                auto q = p;
                q.unflatten(f);
                return mlp_loss(q, d);
            },
            flat[k], 1e-5);
        CHECK(std::abs(g[k] - fd) < 1e-5);
    }
}

TEST_CASE("MLP zero epochs reproduces the seeded initialization") {
    std::mt19937_64 gen(6);
    const auto d = random_binary(gen, 10, 2, 1.0);
    const auto a = fit_mlp(d, MlpConfig{4, 0, 0.5, 99});
    const auto b = fit_mlp(d, MlpConfig{4, 0, 0.5, 99});
    const auto c = fit_mlp(d, MlpConfig{4, 0, 0.5, 100});
    const auto init = mlp_initialize(2, 4, 99);
    CHECK(std::get<MlpParams>(a.params).flatten() == init.flatten());
    CHECK(predict_proba(a, d) == predict_proba(b, d));
    CHECK(predict_proba(a, d) != predict_proba(c, d));
    CHECK_THROWS_AS(fit_mlp(d, MlpConfig{0, 1, 0.5, 1}), Error);
}

TEST_CASE("feature permutation equivariance") {
    std::mt19937_64 gen(8);
    auto d = random_binary(gen, 60, 3, 2.0);
    std::normal_distribution<double> jitter(0, 0.3);
    for (auto& r : d.rows) {
        for (auto& v : r) v += jitter(gen);
    }
    const std::vector<size_t> perm{2, 0, 1};
    LabeledData pd = d;
    for (auto& r : pd.rows) r = {r[perm[0]], r[perm[1]], r[perm[2]]};

    const auto lr = fit_logistic(d, 0.1), plr = fit_logistic(pd, 0.1);
    const auto lda = fit_lda(d), plda = fit_lda(pd);
    const auto gnb = fit_gnb(d, 1e-9), pgnb = fit_gnb(pd, 1e-9);
    for (size_t j = 0; j < 3; ++j) {
        CHECK(std::abs(std::get<LogisticParams>(plr.params).coef[j] - std::get<LogisticParams>(lr.params).coef[perm[j]]) < 1e-10);
        CHECK(std::abs(std::get<LdaParams>(plda.params).weights[j] - std::get<LdaParams>(lda.params).weights[perm[j]]) < 1e-10);
        for (int c = 0; c < 2; ++c) {
            CHECK(std::abs(std::get<GnbParams>(pgnb.params).mean[c][j] - std::get<GnbParams>(gnb.params).mean[c][perm[j]]) < 1e-12);
            CHECK(std::abs(std::get<GnbParams>(pgnb.params).var[c][j] - std::get<GnbParams>(gnb.params).var[c][perm[j]]) < 1e-12);
        }
    }
    for (size_t i = 0; i < d.size(); ++i) {
        CHECK(std::abs(predict_proba(lr, d.rows[i]) - predict_proba(plr, pd.rows[i])) < 1e-10);
        CHECK(std::abs(predict_proba(lda, d.rows[i]) - predict_proba(plda, pd.rows[i])) < 1e-10);
        CHECK(std::abs(predict_proba(gnb, d.rows[i]) - predict_proba(pgnb, pd.rows[i])) < 1e-10);
    }
}

TEST_CASE("every model predicts finite probabilities in [0, 1]") {
    std::mt19937_64 gen(12);
    const auto d = random_binary(gen, 50, 4, 2.0);
    std::normal_distribution<double> wild(0, 50);
    for (auto kind : {ClassicalKind::LR, ClassicalKind::LDA, ClassicalKind::GNB, ClassicalKind::AdaBoost, ClassicalKind::MLP}) {
        CAPTURE(to_string(kind));
        const auto t = fit_tuned(kind, d, 3);
        CHECK(!t.hyperparameters.empty());
        const auto again = fit_tuned(kind, d, 3);
        CHECK(again.hyperparameters == t.hyperparameters);
        CHECK(predict_proba(again.model, d) == predict_proba(t.model, d));
        for (int i = 0; i < 200; ++i) {
            const std::vector<double> x{wild(gen), wild(gen), wild(gen), wild(gen)};
            const double p = predict_proba(t.model, x);
            CHECK(std::isfinite(p));
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
        CHECK_THROWS_AS(predict_proba(t.model, std::vector<double>{0.0, 1.0}), Error);
    }
    CHECK(parse_classical_kind("adaboost") == ClassicalKind::AdaBoost);
    CHECK_THROWS_AS(parse_classical_kind("svm"), Error);
}

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

#include "qleak/baselines.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>

#include "qleak/error.hpp"
#include "qleak/metrics.hpp"
#include "qleak/rng.hpp"

namespace qleak {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double sigmoid(double z) {
    if (z >= 0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

void check_training_data(const LabeledData& data) {
    data.validate();
    require(data.size() > 0 && data.dim() > 0, "training data is empty");
    const size_t pos = data.count_positive();
    require(pos > 0 && pos < data.size(), "training data must contain both classes");
}

void check_dim(const ClassicalModel& model, std::span<const double> x) {
    require(x.size() == model.feature_dim, "feature vector has " + std::to_string(x.size()) +
                                               " entries, model expects " + std::to_string(model.feature_dim));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Design matrix with a leading intercept column.
MatrixXd design(const LabeledData& data) {
    MatrixXd X(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(data.dim() + 1));
    for (size_t i = 0; i < data.size(); ++i) {
        X(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (size_t j = 0; j < data.dim(); ++j) {
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = data.rows[i][j];
        }
    }
    return X;
}

double penalized_nll(const MatrixXd& X, const VectorXd& y, const VectorXd& beta, double l2) {
    const VectorXd eta = X * beta;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        nll += softplus(eta[i]) - y[i] * eta[i];
    }
    return nll + 0.5 * l2 * beta.tail(beta.size() - 1).squaredNorm();
}

}  // namespace

ClassicalKind parse_classical_kind(const std::string& name) {
    const auto s = lower(name);
    if (s == "lr" || s == "logistic") return ClassicalKind::LR;
    if (s == "lda") return ClassicalKind::LDA;
    if (s == "gnb") return ClassicalKind::GNB;
    if (s == "adaboost") return ClassicalKind::AdaBoost;
    if (s == "mlp") return ClassicalKind::MLP;
    fail(ErrorCode::InvalidArgument, "unknown classical model '" + name + "'");
}

std::string to_string(ClassicalKind kind) {
    switch (kind) {
        case ClassicalKind::LR: return "LR";
        case ClassicalKind::LDA: return "LDA";
        case ClassicalKind::GNB: return "GNB";
        case ClassicalKind::AdaBoost: return "AdaBoost";
        case ClassicalKind::MLP: return "MLP";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Logistic regression: Newton / IRLS on the L2-penalized likelihood. The
// intercept is not penalized.

ClassicalModel fit_logistic(const LabeledData& data, double l2) {
    data.validate();
    require(data.size() > 0, "training data is empty");
    require(std::isfinite(l2) && l2 >= 0.0, "l2 must be non-negative");
    const MatrixXd X = design(data);
    const Eigen::Index k = X.cols();
    VectorXd y(X.rows());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y[i] = data.labels[static_cast<size_t>(i)];
    }
    VectorXd penalty = VectorXd::Constant(k, l2);
    penalty[0] = 0.0;

    VectorXd beta = VectorXd::Zero(k);
    double nll = penalized_nll(X, y, beta, l2);
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
        const VectorXd eta = X * beta;
        VectorXd p(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            p[i] = sigmoid(eta[i]);
            w[i] = p[i] * (1.0 - p[i]);
        }
        const VectorXd grad = X.transpose() * (y - p) - penalty.cwiseProduct(beta);
        if (grad.lpNorm<Eigen::Infinity>() < 1e-8) {
            converged = true;
            break;
        }
        MatrixXd H = X.transpose() * w.asDiagonal() * X;
        H.diagonal() += penalty;
        Eigen::LDLT<MatrixXd> ldlt(H);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
            ldlt.vectorD().minCoeff() <= 1e-13 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
            fail(ErrorCode::Numerical, "logistic fit: weighted design is singular; use l2 > 0");
        }
        const VectorXd step = ldlt.solve(grad);
        // Step halving keeps the penalized likelihood monotone.
        double t = 1.0;
        VectorXd candidate = beta + step;
        double cand_nll = penalized_nll(X, y, candidate, l2);
        while (cand_nll > nll + 1e-12 * std::abs(nll) && t > 1e-10) {
            t *= 0.5;
            candidate = beta + t * step;
            cand_nll = penalized_nll(X, y, candidate, l2);
        }
        beta = candidate;
        nll = cand_nll;
    }
    if (!converged || !beta.allFinite()) {
        fail(ErrorCode::Numerical, "logistic fit did not converge (separable data?); use l2 > 0");
    }
    if (l2 == 0.0) {
        // A saturated fit on every row means the classes are separable and
        // the unpenalized maximum likelihood estimate does not exist.
        const VectorXd eta = X * beta;
        bool saturated = true;
        for (Eigen::Index i = 0; i < eta.size() && saturated; ++i) {
            saturated = std::abs(sigmoid(eta[i]) - y[i]) < 1e-6;
        }
        if (saturated) {
            fail(ErrorCode::Numerical, "logistic fit: classes are separable; use l2 > 0");
        }
    }
    LogisticParams params;
    params.intercept = beta[0];
    params.coef.assign(beta.data() + 1, beta.data() + k);
    return {ClassicalKind::LR, data.dim(), params};
}

double logistic_log_likelihood(const ClassicalModel& model, const LabeledData& data) {
    require(model.kind == ClassicalKind::LR, "log-likelihood needs a logistic model");
    const auto& p = std::get<LogisticParams>(model.params);
    double ll = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
        check_dim(model, data.rows[i]);
        double eta = p.intercept;
        for (size_t j = 0; j < p.coef.size(); ++j) {
            eta += p.coef[j] * data.rows[i][j];
        }
        ll += data.labels[i] * eta - softplus(eta);
    }
    return ll;
}

// ---------------------------------------------------------------------------
// LDA with pooled covariance and a 1e-6 ridge.

ClassicalModel fit_lda(const LabeledData& data) {
    check_training_data(data);
    const auto d = static_cast<Eigen::Index>(data.dim());
    std::array<VectorXd, 2> mean{VectorXd::Zero(d), VectorXd::Zero(d)};
    std::array<double, 2> count{0.0, 0.0};
    for (size_t i = 0; i < data.size(); ++i) {
        const int c = data.labels[i];
        mean[c] += Eigen::Map<const VectorXd>(data.rows[i].data(), d);
        count[c] += 1.0;
    }
    mean[0] /= count[0];
    mean[1] /= count[1];
    MatrixXd S = MatrixXd::Zero(d, d);
    for (size_t i = 0; i < data.size(); ++i) {
        const VectorXd r = Eigen::Map<const VectorXd>(data.rows[i].data(), d) - mean[data.labels[i]];
        S += r * r.transpose();
    }
    const double n = static_cast<double>(data.size());
    S /= n > 2.0 ? n - 2.0 : n;
    S.diagonal().array() += 1e-6;
    const VectorXd w = S.ldlt().solve(mean[1] - mean[0]);
    LdaParams params;
    params.weights.assign(w.data(), w.data() + d);
    params.bias = -0.5 * (mean[1] + mean[0]).dot(w) + std::log(count[1] / count[0]);
    return {ClassicalKind::LDA, data.dim(), params};
}

// ---------------------------------------------------------------------------
// Gaussian naive Bayes

ClassicalModel fit_gnb(const LabeledData& data, double var_smoothing) {
    check_training_data(data);
    require(var_smoothing > 0.0, "var_smoothing must be positive");
    const size_t d = data.dim();
    const double n = static_cast<double>(data.size());

    double max_var = 0.0;
    for (size_t j = 0; j < d; ++j) {
        double m = 0.0, m2 = 0.0;
        for (const auto& r : data.rows) {
            m += r[j];
            m2 += r[j] * r[j];
        }
        m /= n;
        max_var = std::max(max_var, m2 / n - m * m);
    }
    const double floor = var_smoothing * (max_var > 0.0 ? max_var : 1.0);

    GnbParams params;
    for (int c = 0; c < 2; ++c) {
        params.mean[c].assign(d, 0.0);
        params.var[c].assign(d, 0.0);
    }
    std::array<double, 2> count{0.0, 0.0};
    for (size_t i = 0; i < data.size(); ++i) {
        const int c = data.labels[i];
        count[c] += 1.0;
        for (size_t j = 0; j < d; ++j) {
            params.mean[c][j] += data.rows[i][j];
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (size_t j = 0; j < d; ++j) {
            params.mean[c][j] /= count[c];
        }
    }
    for (size_t i = 0; i < data.size(); ++i) {
        const int c = data.labels[i];
        for (size_t j = 0; j < d; ++j) {
            const double r = data.rows[i][j] - params.mean[c][j];
            params.var[c][j] += r * r;
        }
    }
    for (int c = 0; c < 2; ++c) {
        for (size_t j = 0; j < d; ++j) {
            params.var[c][j] = params.var[c][j] / count[c] + floor;
        }
        params.prior[c] = count[c] / n;
    }
    return {ClassicalKind::GNB, d, params};
}

std::array<double, 2> gnb_log_joint(const GnbParams& params, std::span<const double> x) {
    std::array<double, 2> out{};
    for (int c = 0; c < 2; ++c) {
        double lp = std::log(params.prior[c]);
        for (size_t j = 0; j < x.size(); ++j) {
            const double v = params.var[c][j];
            const double r = x[j] - params.mean[c][j];
            lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - r * r / (2.0 * v);
        }
        out[c] = lp;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Discrete AdaBoost over axis-aligned stumps.

ClassicalModel fit_adaboost(const LabeledData& data, size_t n_stumps) {
    check_training_data(data);
    require(n_stumps >= 1, "AdaBoost needs at least one round");
    const size_t n = data.size(), d = data.dim();

    struct Candidate {
        size_t feature;
        double threshold;
    };
    std::vector<Candidate> candidates;
    for (size_t j = 0; j < d; ++j) {
        std::vector<double> values;
        for (const auto& r : data.rows) values.push_back(r[j]);
        std::sort(values.begin(), values.end());
        values.erase(std::unique(values.begin(), values.end()), values.end());
        for (size_t k = 0; k + 1 < values.size(); ++k) {
            candidates.push_back({j, 0.5 * (values[k] + values[k + 1])});
        }
    }

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<int> y(n);
    for (size_t i = 0; i < n; ++i) y[i] = data.labels[i] ? 1 : -1;

    AdaBoostParams params;
    for (size_t round = 0; round < n_stumps && !candidates.empty(); ++round) {
        Stump best;
        double best_err = 2.0;
        for (const auto& c : candidates) {
            double err_pos = 0.0;  // weighted error of polarity +1
            for (size_t i = 0; i < n; ++i) {
                const int h = data.rows[i][c.feature] > c.threshold ? 1 : -1;
                if (h != y[i]) err_pos += w[i];
            }
            const double err_neg = 1.0 - err_pos;
            if (err_pos < best_err) {
                best_err = err_pos;
                best = {c.feature, c.threshold, 1, 0.0};
            }
            if (err_neg < best_err) {
                best_err = err_neg;
                best = {c.feature, c.threshold, -1, 0.0};
            }
        }
        best_err = std::max(best_err, 0.0);
        if (best_err >= 0.5) {
            break;
        }
        const double eps = std::max(best_err, 1e-6);
        best.alpha = 0.5 * std::log((1.0 - eps) / eps);
        params.stumps.push_back(best);
        if (best_err <= 1e-12) {
            break;
        }
        double total = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const int h = data.rows[i][best.feature] > best.threshold ? best.polarity : -best.polarity;
            w[i] *= std::exp(-best.alpha * y[i] * h);
            total += w[i];
        }
        for (double& wi : w) wi /= total;
    }
    return {ClassicalKind::AdaBoost, d, params};
}

double adaboost_margin(const AdaBoostParams& params, std::span<const double> x) {
    double score = 0.0;
    for (const auto& s : params.stumps) {
        score += s.alpha * (x[s.feature] > s.threshold ? s.polarity : -s.polarity);
    }
    return score;
}

// ---------------------------------------------------------------------------
// One-hidden-layer perceptron trained by full-batch gradient descent.

std::vector<double> MlpParams::flatten() const {
    std::vector<double> out;
    out.reserve(w1.size() + b1.size() + w2.size() + 1);
    out.insert(out.end(), w1.begin(), w1.end());
    out.insert(out.end(), b1.begin(), b1.end());
    out.insert(out.end(), w2.begin(), w2.end());
    out.push_back(b2);
    return out;
}

void MlpParams::unflatten(std::span<const double> flat) {
    require(flat.size() == hidden * input + 2 * hidden + 1, "flat MLP parameter vector has the wrong length");
    auto it = flat.begin();
    w1.assign(it, it + static_cast<std::ptrdiff_t>(hidden * input));
    it += static_cast<std::ptrdiff_t>(hidden * input);
    b1.assign(it, it + static_cast<std::ptrdiff_t>(hidden));
    it += static_cast<std::ptrdiff_t>(hidden);
    w2.assign(it, it + static_cast<std::ptrdiff_t>(hidden));
    it += static_cast<std::ptrdiff_t>(hidden);
    b2 = *it;
}

MlpParams mlp_initialize(size_t input, size_t hidden, uint64_t seed) {
    require(hidden >= 1, "MLP needs at least one hidden unit");
    require(input >= 1, "MLP needs at least one input");
    Rng rng(seed);
    MlpParams p;
    p.input = input;
    p.hidden = hidden;
    const double a1 = std::sqrt(6.0 / static_cast<double>(input + hidden));
    const double a2 = std::sqrt(6.0 / static_cast<double>(hidden + 1));
    p.w1.resize(hidden * input);
    for (double& v : p.w1) v = rng.uniform(-a1, a1);
    p.b1.assign(hidden, 0.0);
    p.w2.resize(hidden);
    for (double& v : p.w2) v = rng.uniform(-a2, a2);
    p.b2 = 0.0;
    return p;
}

namespace {

// Forward pass; fills hidden activations and returns the output logit.
double mlp_logit(const MlpParams& p, std::span<const double> x, std::vector<double>& act) {
    act.resize(p.hidden);
    double z2 = p.b2;
    for (size_t h = 0; h < p.hidden; ++h) {
        double z = p.b1[h];
        for (size_t j = 0; j < p.input; ++j) {
            z += p.w1[h * p.input + j] * x[j];
        }
        act[h] = std::tanh(z);
        z2 += p.w2[h] * act[h];
    }
    return z2;
}

}  // namespace

double mlp_loss(const MlpParams& params, const LabeledData& data) {
    require(data.size() > 0, "MLP loss over an empty set");
    std::vector<double> act;
    double total = 0.0;
    for (size_t i = 0; i < data.size(); ++i) {
        const double z = mlp_logit(params, data.rows[i], act);
        total += softplus(z) - data.labels[i] * z;
    }
    return total / static_cast<double>(data.size());
}

std::vector<double> mlp_gradient(const MlpParams& p, const LabeledData& data) {
    require(data.size() > 0, "MLP gradient over an empty set");
    MlpParams g = p;
    std::fill(g.w1.begin(), g.w1.end(), 0.0);
    std::fill(g.b1.begin(), g.b1.end(), 0.0);
    std::fill(g.w2.begin(), g.w2.end(), 0.0);
    g.b2 = 0.0;
    const double inv_n = 1.0 / static_cast<double>(data.size());
    std::vector<double> act;
    for (size_t i = 0; i < data.size(); ++i) {
        const auto& x = data.rows[i];
        const double dz2 = (sigmoid(mlp_logit(p, x, act)) - data.labels[i]) * inv_n;
        g.b2 += dz2;
        for (size_t h = 0; h < p.hidden; ++h) {
            g.w2[h] += dz2 * act[h];
            const double dz1 = dz2 * p.w2[h] * (1.0 - act[h] * act[h]);
            g.b1[h] += dz1;
            for (size_t j = 0; j < p.input; ++j) {
                g.w1[h * p.input + j] += dz1 * x[j];
            }
        }
    }
    return g.flatten();
}

ClassicalModel fit_mlp(const LabeledData& data, const MlpConfig& config) {
    data.validate();
    require(data.size() > 0, "training data is empty");
    require(config.hidden_units >= 1, "MLP needs at least one hidden unit");
    MlpParams p = mlp_initialize(data.dim(), config.hidden_units, config.seed);
    std::vector<double> flat = p.flatten();
    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const auto grad = mlp_gradient(p, data);
        for (size_t k = 0; k < flat.size(); ++k) {
            flat[k] -= config.learning_rate * grad[k];
        }
        p.unflatten(flat);
    }
    const double loss = mlp_loss(p, data);
    if (!std::isfinite(loss)) {
        fail(ErrorCode::Numerical, "MLP training diverged (non-finite loss); lower the learning rate");
    }
    return {ClassicalKind::MLP, data.dim(), p};
}

// ---------------------------------------------------------------------------

double predict_proba(const ClassicalModel& model, std::span<const double> x) {
    check_dim(model, x);
    switch (model.kind) {
        case ClassicalKind::LR: {
            const auto& p = std::get<LogisticParams>(model.params);
            double eta = p.intercept;
            for (size_t j = 0; j < x.size(); ++j) eta += p.coef[j] * x[j];
            return sigmoid(eta);
        }
        case ClassicalKind::LDA: {
            const auto& p = std::get<LdaParams>(model.params);
            double eta = p.bias;
            for (size_t j = 0; j < x.size(); ++j) eta += p.weights[j] * x[j];
            return sigmoid(eta);
        }
        case ClassicalKind::GNB: {
            const auto lj = gnb_log_joint(std::get<GnbParams>(model.params), x);
            return sigmoid(lj[1] - lj[0]);
        }
        case ClassicalKind::AdaBoost:
            return sigmoid(2.0 * adaboost_margin(std::get<AdaBoostParams>(model.params), x));
        case ClassicalKind::MLP: {
            std::vector<double> act;
            return sigmoid(mlp_logit(std::get<MlpParams>(model.params), x, act));
        }
    }
    fail(ErrorCode::InvalidArgument, "unknown classical model kind");
}

std::vector<double> predict_proba(const ClassicalModel& model, const LabeledData& data) {
    std::vector<double> out(data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        out[i] = predict_proba(model, data.rows[i]);
    }
    return out;
}

TunedModel fit_tuned(ClassicalKind kind, const LabeledData& data, uint64_t seed, size_t folds) {
    check_training_data(data);
    struct Option {
        std::string label;
        std::function<ClassicalModel(const LabeledData&)> fit;
    };
    std::vector<Option> grid;
    switch (kind) {
        case ClassicalKind::LR:
            for (double l2 : {0.01, 0.1, 1.0}) {
                grid.push_back({"l2=" + std::to_string(l2), [l2](const LabeledData& d) { return fit_logistic(d, l2); }});
            }
            break;
        case ClassicalKind::LDA:
            grid.push_back({"shrinkage=1e-6", [](const LabeledData& d) { return fit_lda(d); }});
            break;
        case ClassicalKind::GNB:
            for (double s : {1e-9, 1e-6}) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "var_smoothing=%g", s);
                grid.push_back({buf, [s](const LabeledData& d) { return fit_gnb(d, s); }});
            }
            break;
        case ClassicalKind::AdaBoost:
            for (size_t k : {25u, 50u, 100u}) {
                grid.push_back({"n_stumps=" + std::to_string(k), [k](const LabeledData& d) { return fit_adaboost(d, k); }});
            }
            break;
        case ClassicalKind::MLP:
            for (size_t h : {4u, 8u, 16u}) {
                grid.push_back({"hidden=" + std::to_string(h), [h, seed](const LabeledData& d) {
                                    return fit_mlp(d, MlpConfig{h, 1000, 0.5, seed});
                                }});
            }
            break;
    }

    const auto fold_of = stratified_fold_ids(data.labels, folds, derive_seed(seed, 0xF01D));
    size_t best = 0;
    double best_auc = -1.0;
    for (size_t g = 0; g < grid.size(); ++g) {
        double auc_sum = 0.0;
        size_t used = 0;
        if (grid.size() > 1) {
            for (size_t f = 0; f < folds; ++f) {
                std::vector<size_t> train_idx, val_idx;
                for (size_t i = 0; i < data.size(); ++i) {
                    (fold_of[i] == f ? val_idx : train_idx).push_back(i);
                }
                const auto train = data.subset(train_idx);
                const auto val = data.subset(val_idx);
                const size_t val_pos = val.count_positive();
                const size_t train_pos = train.count_positive();
                if (val_pos == 0 || val_pos == val.size() || train_pos == 0 || train_pos == train.size()) {
                    continue;
                }
                const auto model = grid[g].fit(train);
                auc_sum += roc_auc({val.labels, predict_proba(model, val)});
                ++used;
            }
        }
        const double auc = used > 0 ? auc_sum / static_cast<double>(used) : 0.0;
        if (auc > best_auc) {
            best_auc = auc;
            best = g;
        }
    }
    return {grid[best].fit(data), grid[best].label, best_auc};
}

}  // namespace qleak

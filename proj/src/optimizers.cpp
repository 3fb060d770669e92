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

#include "qleak/optimizers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>

#include "qleak/error.hpp"
#include "qleak/rng.hpp"

namespace qleak {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct NonFiniteObjective {};

// Counts evaluations, records the trace and keeps the best point seen.
class Recorder {
public:
    Recorder(const Objective& obj, size_t budget) : obj_(obj), budget_(budget) {}

    double operator()(const VectorXd& x) {
        const double f = obj_.eval(std::span<const double>(x.data(), static_cast<size_t>(x.size())));
        if (!std::isfinite(f)) {
            if (trace_.empty()) {
                fail(ErrorCode::Numerical, "objective is not finite at theta0");
            }
            throw NonFiniteObjective{};
        }
        if (trace_.empty() || f < best_f_) {
            best_f_ = f;
            best_x_ = x;
        }
        trace_.push_back({trace_.size(), f, best_f_});
        return f;
    }

    VectorXd gradient(const VectorXd& x) {
        ++n_gradient_;
        auto g = obj_.gradient(std::span<const double>(x.data(), static_cast<size_t>(x.size())));
        require(g.size() == static_cast<size_t>(x.size()), "gradient has the wrong dimension");
        VectorXd out = Eigen::Map<const VectorXd>(g.data(), static_cast<Eigen::Index>(g.size()));
        if (!out.allFinite()) {
            throw NonFiniteObjective{};
        }
        return out;
    }

    size_t evals() const { return trace_.size(); }
    bool exhausted() const { return trace_.size() >= budget_; }
    size_t budget() const { return budget_; }

    OptResult finish(bool converged, std::string message) && {
        OptResult r;
        r.theta_best.assign(best_x_.data(), best_x_.data() + best_x_.size());
        r.f_best = best_f_;
        r.trace = std::move(trace_);
        r.n_evals = r.trace.size();
        r.n_gradient_evals = n_gradient_;
        r.converged = converged;
        r.message = std::move(message);
        return r;
    }

private:
    const Objective& obj_;
    size_t budget_;
    std::vector<TracePoint> trace_;
    VectorXd best_x_;
    double best_f_ = std::numeric_limits<double>::infinity();
    size_t n_gradient_ = 0;
};

// ---------------------------------------------------------------------------
// SPSA

OptResult run_spsa(Recorder& rec, VectorXd theta, uint64_t seed, const OptimizerOptions& o) {
    const Eigen::Index m = theta.size();
    const double A = o.spsa_A >= 0 ? o.spsa_A : static_cast<double>(rec.budget()) / 10.0;
    const size_t every = std::max<size_t>(1, o.spsa_eval_every);
    Rng rng(seed);
    rec(theta);
    VectorXd delta(m);
    size_t k = 0;
    bool last_evaluated = true;
    // Each iteration needs two evaluations plus one reserved for the iterate.
    while (rec.evals() + 3 <= rec.budget()) {
        const double ak = o.spsa_a / std::pow(static_cast<double>(k) + 1.0 + A, o.spsa_alpha);
        const double ck = o.spsa_c / std::pow(static_cast<double>(k) + 1.0, o.spsa_gamma);
        for (Eigen::Index i = 0; i < m; ++i) {
            delta[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
        }
        const double fp = rec(theta + ck * delta);
        const double fm = rec(theta - ck * delta);
        // Delta_i = +-1, so 1 / Delta_i = Delta_i.
        theta -= ak * ((fp - fm) / (2.0 * ck)) * delta;
        ++k;
        last_evaluated = false;
        if (k % every == 0) {
            rec(theta);
            last_evaluated = true;
        }
    }
    if (!last_evaluated) {
        rec(theta);
    }
    return std::move(rec).finish(false, "evaluation budget exhausted after " + std::to_string(k) + " iterations");
}

// ---------------------------------------------------------------------------
// CMA-ES with rank-one and rank-mu covariance updates and cumulative step-size
// adaptation.

OptResult run_cmaes(Recorder& rec, VectorXd mean, uint64_t seed, const OptimizerOptions& o) {
    const Eigen::Index n = mean.size();
    const double N = static_cast<double>(n);
    const int lambda = 4 + static_cast<int>(std::floor(3.0 * std::log(N)));
    const int mu = lambda / 2;

    VectorXd w(mu);
    for (int i = 0; i < mu; ++i) {
        w[i] = std::log(mu + 0.5) - std::log(i + 1.0);
    }
    w /= w.sum();
    const double mueff = 1.0 / w.squaredNorm();

    const double cc = (4.0 + mueff / N) / (N + 4.0 + 2.0 * mueff / N);
    const double cs = (mueff + 2.0) / (N + mueff + 5.0);
    const double c1 = 2.0 / ((N + 1.3) * (N + 1.3) + mueff);
    const double cmu = std::min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((N + 2.0) * (N + 2.0) + mueff));
    const double damps = 1.0 + 2.0 * std::max(0.0, std::sqrt((mueff - 1.0) / (N + 1.0)) - 1.0) + cs;
    const double chi_n = std::sqrt(N) * (1.0 - 1.0 / (4.0 * N) + 1.0 / (21.0 * N * N));

    double sigma = o.cma_sigma0;
    VectorXd pc = VectorXd::Zero(n), ps = VectorXd::Zero(n);
    MatrixXd C = MatrixXd::Identity(n, n);
    MatrixXd B = MatrixXd::Identity(n, n);
    VectorXd D = VectorXd::Ones(n);

    Rng rng(seed);
    rec(mean);

    std::vector<VectorXd> xs(static_cast<size_t>(lambda)), ys(static_cast<size_t>(lambda));
    std::vector<double> fs(static_cast<size_t>(lambda));
    std::vector<int> order(static_cast<size_t>(lambda));
    size_t generation = 0;

    while (!rec.exhausted()) {
        for (int k = 0; k < lambda; ++k) {
            VectorXd z(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                z[i] = rng.normal();
            }
            ys[k] = B * D.cwiseProduct(z);
            xs[k] = mean + sigma * ys[k];
            fs[k] = rec(xs[k]);
        }
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fs[a] < fs[b]; });

        const VectorXd old_mean = mean;
        VectorXd y_w = VectorXd::Zero(n);
        for (int i = 0; i < mu; ++i) {
            y_w += w[i] * ys[order[i]];
        }
        mean = old_mean + sigma * y_w;

        const MatrixXd c_inv_sqrt = B * D.cwiseInverse().asDiagonal() * B.transpose();
        ps = (1.0 - cs) * ps + std::sqrt(cs * (2.0 - cs) * mueff) * (c_inv_sqrt * y_w);
        ++generation;
        const double ps_norm = ps.norm();
        const bool hsig = ps_norm / std::sqrt(1.0 - std::pow(1.0 - cs, 2.0 * static_cast<double>(generation))) / chi_n <
                          1.4 + 2.0 / (N + 1.0);
        pc = (1.0 - cc) * pc + (hsig ? std::sqrt(cc * (2.0 - cc) * mueff) : 0.0) * y_w;

        MatrixXd rank_mu = MatrixXd::Zero(n, n);
        for (int i = 0; i < mu; ++i) {
            rank_mu += w[i] * ys[order[i]] * ys[order[i]].transpose();
        }
        C = (1.0 - c1 - cmu) * C + c1 * (pc * pc.transpose() + (hsig ? 0.0 : cc * (2.0 - cc)) * C) + cmu * rank_mu;
        sigma *= std::exp((cs / damps) * (ps_norm / chi_n - 1.0));

        C = 0.5 * (C + C.transpose());
        Eigen::SelfAdjointEigenSolver<MatrixXd> eig(C);
        if (eig.info() != Eigen::Success) {
            return std::move(rec).finish(false, "covariance eigendecomposition failed");
        }
        B = eig.eigenvectors();
        D = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();

        if (sigma * D.maxCoeff() < 1e-12) {
            return std::move(rec).finish(true, "step size below tolerance");
        }
        const auto [lo, hi] = std::minmax_element(fs.begin(), fs.end());
        if (generation > 10 && *hi - *lo < 1e-14 * (1.0 + std::abs(*lo)) && sigma * D.maxCoeff() < 1e-8) {
            return std::move(rec).finish(true, "objective range below tolerance");
        }
    }
    return std::move(rec).finish(false, "evaluation budget exhausted after " + std::to_string(generation) +
                                            " generations");
}

// ---------------------------------------------------------------------------
// COBYLA without constraints: a linear interpolation model on m+1 simplex
// vertices, steps of length rho against the model gradient, Powell's simplex
// acceptability test (alpha = 0.25, beta = 2.1) with geometry-improving
// steps, and rho halving down to rhoend.

OptResult run_cobyla(Recorder& rec, const VectorXd& x0, const OptimizerOptions& o) {
    const Eigen::Index m = x0.size();
    constexpr double kAlpha = 0.25, kBeta = 2.1, kGamma = 0.5;
    const double rhoend = o.cobyla_rhoend;
    double rho = o.cobyla_rhobeg;

    std::vector<VectorXd> pts;
    std::vector<double> vals;
    auto rebuild = [&](const VectorXd& base, double base_f) {
        pts.assign(1, base);
        vals.assign(1, base_f);
        for (Eigen::Index j = 0; j < m && !rec.exhausted(); ++j) {
            VectorXd p = base;
            p[j] += rho;
            vals.push_back(rec(p));
            pts.push_back(std::move(p));
        }
    };
    rebuild(x0, rec(x0));

    bool last_step_good = false;
    size_t iterations = 0;
    while (!rec.exhausted()) {
        if (static_cast<Eigen::Index>(pts.size()) != m + 1) {
            break;
        }
        ++iterations;
        const size_t pivot = static_cast<size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
        const VectorXd& x_piv = pts[pivot];
        const double f_piv = vals[pivot];

        // Rows of D are vertex displacements; the model gradient solves D g = df.
        MatrixXd D(m, m);
        VectorXd df(m);
        std::vector<size_t> vertex(static_cast<size_t>(m));
        for (size_t j = 0, r = 0; j < pts.size(); ++j) {
            if (j == pivot) continue;
            D.row(static_cast<Eigen::Index>(r)) = (pts[j] - x_piv).transpose();
            df[static_cast<Eigen::Index>(r)] = vals[j] - f_piv;
            vertex[r++] = j;
        }
        Eigen::FullPivLU<MatrixXd> lu(D);
        if (!lu.isInvertible()) {
            rebuild(x_piv, f_piv);
            continue;
        }
        // Barycentric weights of a displacement d are B d, B = D^{-T}.
        const MatrixXd Bmat = lu.inverse().transpose();
        const VectorXd g = lu.solve(df);

        VectorXd veta(m), vsig(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            veta[r] = D.row(r).norm();
            vsig[r] = 1.0 / Bmat.row(r).norm();
        }
        const bool acceptable = (vsig.array() >= kAlpha * rho).all() && (veta.array() <= kBeta * rho).all();

        auto geometry_step = [&] {
            Eigen::Index j;
            if (veta.maxCoeff(&j) <= kBeta * rho) {
                vsig.minCoeff(&j);
            }
            VectorXd d = (kGamma * rho / Bmat.row(j).norm()) * Bmat.row(j).transpose();
            if (g.dot(d) > 0) {
                d = -d;
            }
            const size_t slot = vertex[static_cast<size_t>(j)];
            pts[slot] = x_piv + d;
            vals[slot] = rec(pts[slot]);
        };

        if (!acceptable && !last_step_good) {
            geometry_step();
            last_step_good = false;
            continue;
        }

        const double gnorm = g.norm();
        if (gnorm == 0.0 || !std::isfinite(gnorm)) {
            if (rho <= rhoend) {
                return std::move(rec).finish(true, "trust radius reached rhoend");
            }
            rho = rho * 0.5 <= 1.5 * rhoend ? rhoend : rho * 0.5;
            last_step_good = false;
            continue;
        }

        const VectorXd d = (-rho / gnorm) * g;
        const double predicted = rho * gnorm;
        const VectorXd x_new = x_piv + d;
        const double f_new = rec(x_new);
        const double actual = f_piv - f_new;
        const double ratio = actual / predicted;

        // Replace the vertex whose removal best preserves simplex volume,
        // favouring vertices far from the new point.
        const VectorXd lambda = Bmat * d;
        Eigen::Index drop = -1;
        double best_score = actual > 0 ? 0.0 : 1.0;
        for (Eigen::Index r = 0; r < m; ++r) {
            const double dist = (D.row(r).transpose() - d).norm();
            const double far = std::max(1.0, dist / rho);
            const double score = std::abs(lambda[r]) * far * far * far;
            if (score > best_score) {
                best_score = score;
                drop = r;
            }
        }
        if (drop >= 0) {
            const size_t slot = vertex[static_cast<size_t>(drop)];
            pts[slot] = x_new;
            vals[slot] = f_new;
        }

        last_step_good = ratio >= 0.1;
        if (last_step_good) {
            continue;
        }
        if (!acceptable) {
            continue;
        }
        if (rho <= rhoend) {
            return std::move(rec).finish(true, "trust radius reached rhoend");
        }
        rho = rho * 0.5 <= 1.5 * rhoend ? rhoend : rho * 0.5;
    }
    return std::move(rec).finish(false, "evaluation budget exhausted after " + std::to_string(iterations) +
                                            " iterations");
}

// ---------------------------------------------------------------------------
// BFGS on the inverse Hessian with Armijo backtracking.

OptResult run_bfgs(Recorder& rec, VectorXd x, const Objective& obj, const OptimizerOptions& o) {
    const Eigen::Index m = x.size();
    const bool analytic = static_cast<bool>(obj.gradient);
    const double h = o.bfgs_fd_step;

    auto gradient = [&](const VectorXd& at) -> VectorXd {
        if (analytic) {
            return rec.gradient(at);
        }
        VectorXd g(m);
        VectorXd probe = at;
        for (Eigen::Index i = 0; i < m; ++i) {
            probe[i] = at[i] + h;
            const double fp = rec(probe);
            probe[i] = at[i] - h;
            const double fm = rec(probe);
            probe[i] = at[i];
            g[i] = (fp - fm) / (2.0 * h);
        }
        return g;
    };

    double f = rec(x);
    VectorXd g = gradient(x);
    MatrixXd H = MatrixXd::Identity(m, m);
    bool identity = true;
    bool first_update = true;
    size_t iterations = 0;

    while (!rec.exhausted()) {
        if (g.lpNorm<Eigen::Infinity>() < o.bfgs_gtol) {
            return std::move(rec).finish(true, "gradient norm below tolerance");
        }
        ++iterations;
        VectorXd p = -H * g;
        double slope = g.dot(p);
        if (!(slope < 0)) {
            H.setIdentity();
            identity = true;
            first_update = true;
            p = -g;
            slope = -g.squaredNorm();
        }

        double t = 1.0;
        bool accepted = false;
        double f_new = f;
        VectorXd x_new;
        for (int halvings = 0; halvings < 40 && !rec.exhausted(); ++halvings) {
            x_new = x + t * p;
            f_new = rec(x_new);
            if (f_new <= f + o.bfgs_armijo_c1 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (rec.exhausted()) {
                break;
            }
            if (identity) {
                return std::move(rec).finish(false, "line search failed along steepest descent");
            }
            H.setIdentity();
            identity = true;
            first_update = true;
            continue;
        }

        const VectorXd s = x_new - x;
        x = x_new;
        f = f_new;
        if (rec.exhausted()) {
            break;
        }
        const VectorXd g_new = gradient(x);
        const VectorXd y = g_new - g;
        g = g_new;
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            if (first_update) {
                H = (sy / y.squaredNorm()) * MatrixXd::Identity(m, m);
                first_update = false;
            }
            const double r = 1.0 / sy;
            const MatrixXd I = MatrixXd::Identity(m, m);
            H = (I - r * s * y.transpose()) * H * (I - r * y * s.transpose()) + r * s * s.transpose();
            identity = false;
        }
    }
    return std::move(rec).finish(false, "evaluation budget exhausted after " + std::to_string(iterations) +
                                            " iterations");
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

}  // namespace

Method parse_method(const std::string& name) {
    const auto s = lower(name);
    if (s == "spsa") return Method::SPSA;
    if (s == "cmaes" || s == "cma-es" || s == "cma") return Method::CMAES;
    if (s == "cobyla") return Method::COBYLA;
    if (s == "bfgs") return Method::BFGS;
    fail(ErrorCode::InvalidArgument, "unknown optimizer '" + name + "'");
}

std::string to_string(Method m) {
    switch (m) {
        case Method::SPSA: return "SPSA";
        case Method::CMAES: return "CMAES";
        case Method::COBYLA: return "COBYLA";
        case Method::BFGS: return "BFGS";
    }
    return "?";
}

OptResult minimize(const Objective& obj, std::span<const double> theta0, Method method, size_t budget,
                   uint64_t seed, const OptimizerOptions& options) {
    require(static_cast<bool>(obj.eval), "objective has no evaluation function");
    require(theta0.size() == obj.dim && obj.dim > 0, "theta0 length does not match the objective dimension");
    require(budget >= 10 * obj.dim, "budget must be at least 10 evaluations per parameter");

    const VectorXd x0 = Eigen::Map<const VectorXd>(theta0.data(), static_cast<Eigen::Index>(theta0.size()));

    Recorder rec(obj, budget);
    try {
        switch (method) {
            case Method::SPSA: return run_spsa(rec, x0, seed, options);
            case Method::CMAES: return run_cmaes(rec, x0, seed, options);
            case Method::COBYLA: return run_cobyla(rec, x0, options);
            case Method::BFGS: return run_bfgs(rec, x0, obj, options);
        }
    } catch (const NonFiniteObjective&) {
        return std::move(rec).finish(false, "aborted: non-finite objective value");
    }
    fail(ErrorCode::InvalidArgument, "unknown optimizer");
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "evaluation_index,loss,best_so_far\n";
    char buf[96];
    for (const auto& t : trace) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", t.index, t.loss, t.best_so_far);
        out << buf;
    }
}

}  // namespace qleak

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

#include "qleak/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qleak/baselines.hpp"
#include "qleak/error.hpp"
#include "qleak/metrics.hpp"
#include "qleak/rng.hpp"

namespace qleak {

namespace {

constexpr size_t kMaxSwaps = 100000;

// Draws an index from `pool` with probability proportional to weight(i).
template <class Weight>
size_t weighted_pick(const std::vector<size_t>& pool, Weight weight, Rng& rng) {
    double total = 0.0;
    for (size_t i : pool) total += weight(i);
    double u = rng.uniform() * total;
    for (size_t k = 0; k < pool.size(); ++k) {
        u -= weight(pool[k]);
        if (u < 0.0) return k;
    }
    return pool.size() - 1;
}

}  // namespace

CohortSpec CohortSpec::published() {
    CohortSpec s;
    s.features = {{"dm", 36, 9}, {"smoking", 34, 9}, {"nocoil", 55, 3}, {"acsp", 65, 5}, {"icg", 100, 9}};
    return s;
}

void CohortSpec::validate() const {
    require(n_total > 0 && n_leak <= n_total, "cohort totals are inconsistent", ErrorCode::Infeasible);
    require(!features.empty(), "cohort has no features");
    require(coupling_weight > 0.0 && std::isfinite(coupling_weight), "coupling weight must be positive");
    for (const auto& f : features) {
        require(f.n_exposed <= n_total, f.name + ": more exposed patients than the cohort holds",
                ErrorCode::Infeasible);
        require(f.n_leak_exposed <= std::min(f.n_exposed, n_leak),
                f.name + ": exposed leaks exceed min(exposed, leaks)", ErrorCode::Infeasible);
        require(f.n_exposed - f.n_leak_exposed <= n_total - n_leak,
                f.name + ": exposed non-leaks exceed the non-leak count", ErrorCode::Infeasible);
    }
}

size_t CohortDataset::feature_index(const std::string& name) const {
    const auto it = std::find(feature_names.begin(), feature_names.end(), name);
    require(it != feature_names.end(), "unknown feature '" + name + "'");
    return static_cast<size_t>(it - feature_names.begin());
}

LabeledData CohortDataset::to_labeled(const std::vector<std::string>& features, double scale) const {
    std::vector<size_t> cols;
    for (const auto& f : features) cols.push_back(feature_index(f));
    LabeledData out;
    out.rows.reserve(rows.size());
    for (const auto& r : rows) {
        std::vector<double> x;
        for (size_t c : cols) x.push_back(scale * r[c]);
        out.rows.push_back(std::move(x));
    }
    out.labels = leak;
    return out;
}

CohortDataset CohortDataset::subset(const std::vector<size_t>& indices) const {
    CohortDataset out;
    out.feature_names = feature_names;
    out.seed = seed;
    for (size_t i : indices) {
        require(i < rows.size(), "subset index out of range", ErrorCode::OutOfRange);
        out.rows.push_back(rows[i]);
        out.leak.push_back(leak[i]);
    }
    return out;
}

// Each feature column starts as a (coupling-weighted) random exposed set of
// the right size, then exposed/unexposed pairs are swapped across the leak
// split until the exposed-leak count is exact. Every swap moves the count by
// one, and passes repeat until all tables hold simultaneously.
CohortDataset generate_cohort(const CohortSpec& spec, uint64_t seed) {
    spec.validate();
    Rng rng(seed);
    const size_t n = spec.n_total;

    CohortDataset data;
    data.seed = seed;
    for (const auto& f : spec.features) data.feature_names.push_back(f.name);
    data.leak.assign(n, 0);
    std::fill(data.leak.begin(), data.leak.begin() + static_cast<std::ptrdiff_t>(spec.n_leak), 1);
    rng.shuffle(data.leak);
    data.rows.assign(n, std::vector<int>(spec.features.size(), 0));

    auto column_index = [&](const std::string& name) -> std::optional<size_t> {
        for (size_t j = 0; j < spec.features.size(); ++j) {
            if (spec.features[j].name == name) return j;
        }
        return std::nullopt;
    };
    const auto coupled = column_index(spec.coupled_feature);
    const auto partner = column_index(spec.coupled_with);

    size_t swaps = 0;
    for (size_t j = 0; j < spec.features.size(); ++j) {
        const auto& f = spec.features[j];
        const bool is_coupled = coupled && partner && *coupled == j && *partner != j;
        auto weight = [&](size_t i) {
            return is_coupled && data.rows[i][*partner] ? spec.coupling_weight : 1.0;
        };

        std::vector<size_t> unexposed(n);
        for (size_t i = 0; i < n; ++i) unexposed[i] = i;
        for (size_t k = 0; k < f.n_exposed; ++k) {
            const size_t pos = weighted_pick(unexposed, weight, rng);
            data.rows[unexposed[pos]][j] = 1;
            unexposed.erase(unexposed.begin() + static_cast<std::ptrdiff_t>(pos));
        }

        auto leak_exposed = [&] {
            size_t c = 0;
            for (size_t i = 0; i < n; ++i) c += (data.rows[i][j] && data.leak[i]) ? 1 : 0;
            return c;
        };
        for (size_t current = leak_exposed(); current != f.n_leak_exposed;) {
            require(++swaps <= kMaxSwaps,
                    "cohort repair did not converge after " + std::to_string(kMaxSwaps) + " swaps (feature " + f.name +
                        ", exposed leaks " + std::to_string(current) + " vs " + std::to_string(f.n_leak_exposed) + ")",
                    ErrorCode::Infeasible);
            // Too many exposed leaks: unexpose a leak row, expose a non-leak row.
            const int drop_leak = current > f.n_leak_exposed ? 1 : 0;
            std::vector<size_t> out_pool, in_pool;
            for (size_t i = 0; i < n; ++i) {
                if (data.rows[i][j] && data.leak[i] == drop_leak) out_pool.push_back(i);
                if (!data.rows[i][j] && data.leak[i] != drop_leak) in_pool.push_back(i);
            }
            const size_t out = out_pool[weighted_pick(out_pool, [&](size_t i) { return 1.0 / weight(i); }, rng)];
            const size_t in = in_pool[weighted_pick(in_pool, weight, rng)];
            data.rows[out][j] = 0;
            data.rows[in][j] = 1;
            current = drop_leak ? current - 1 : current + 1;
        }
    }
    for (const auto& f : spec.features) {
        const auto t = contingency(data, f.name);
        require(t.a == f.n_leak_exposed && t.a + t.b == f.n_exposed, "cohort repair left " + f.name + " inexact",
                ErrorCode::Infeasible);
    }
    return data;
}

void write_cohort_csv(std::ostream& out, const CohortDataset& data) {
    for (const auto& name : data.feature_names) out << name << ',';
    out << "leak\n";
    for (size_t i = 0; i < data.size(); ++i) {
        for (int v : data.rows[i]) out << v << ',';
        out << data.leak[i] << '\n';
    }
}

CohortDataset read_cohort_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "cohort CSV is empty", ErrorCode::Io);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    require(header.size() >= 2 && header.back() == "leak", "cohort CSV header must end with 'leak'", ErrorCode::Io);
    CohortDataset data;
    data.feature_names.assign(header.begin(), header.end() - 1);
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<int> values;
        while (std::getline(ss, cell, ',')) {
            require(cell == "0" || cell == "1", "line " + std::to_string(line_no) + ": values must be 0 or 1",
                    ErrorCode::Io);
            values.push_back(cell == "1");
        }
        require(values.size() == header.size(),
                "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " columns",
                ErrorCode::Io);
        data.leak.push_back(values.back());
        values.pop_back();
        data.rows.push_back(std::move(values));
    }
    return data;
}

void write_cohort_csv(const std::string& path, const CohortDataset& data) {
    std::ofstream out(path);
    require(static_cast<bool>(out), "cannot open " + path + " for writing", ErrorCode::Io);
    write_cohort_csv(out, data);
}

CohortDataset read_cohort_csv(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open " + path, ErrorCode::Io);
    return read_cohort_csv(in);
}

ContingencyTable contingency(const CohortDataset& data, const std::string& feature) {
    const size_t j = data.feature_index(feature);
    ContingencyTable t;
    for (size_t i = 0; i < data.size(); ++i) {
        const bool exposed = data.rows[i][j] != 0;
        const bool leak = data.leak[i] != 0;
        if (exposed) {
            (leak ? t.a : t.b) += 1;
        } else {
            (leak ? t.c : t.d) += 1;
        }
    }
    return t;
}

RelativeRisk relative_risk(const ContingencyTable& t, RiskOrientation orientation) {
    require(t.a + t.b > 0 && t.c + t.d > 0, "undefined RR: an exposure group is empty", ErrorCode::Numerical);
    const double exposed = static_cast<double>(t.a) / static_cast<double>(t.a + t.b);
    const double unexposed = static_cast<double>(t.c) / static_cast<double>(t.c + t.d);
    bool protective = orientation == RiskOrientation::Protective;
    if (orientation == RiskOrientation::Auto) {
        protective = exposed < unexposed;
    }
    const double num = protective ? unexposed : exposed;
    const double den = protective ? exposed : unexposed;
    require(den > 0.0, "undefined RR: zero risk in the reference group", ErrorCode::Numerical);
    return {num / den, protective};
}

Chi2Result chi2_test(const ContingencyTable& t, bool yates) {
    const double n = static_cast<double>(t.total());
    require(n > 0, "chi-square on an empty table");
    const double r1 = static_cast<double>(t.a + t.b), r2 = static_cast<double>(t.c + t.d);
    const double c1 = static_cast<double>(t.a + t.c), c2 = static_cast<double>(t.b + t.d);
    if (r1 == 0 || r2 == 0 || c1 == 0 || c2 == 0) {
        return {0.0, 1.0, true};
    }
    double diff = std::abs(static_cast<double>(t.a) * static_cast<double>(t.d) -
                           static_cast<double>(t.b) * static_cast<double>(t.c));
    if (yates) {
        diff = std::max(0.0, diff - n / 2.0);
    }
    const double stat = n * diff * diff / (r1 * r2 * c1 * c2);
    return {stat, chi2_sf_1dof(stat), false};
}

AicSelection aic_stepwise(const LabeledData& data, const std::vector<std::string>& names) {
    require(!names.empty(), "AIC selection needs at least one candidate");
    require(names.size() == data.dim(), "candidate names do not match the data width");

    auto aic_of = [&](const std::vector<size_t>& cols) {
        LabeledData sub;
        sub.labels = data.labels;
        for (const auto& r : data.rows) {
            std::vector<double> x;
            for (size_t c : cols) x.push_back(r[c]);
            sub.rows.push_back(std::move(x));
        }
        if (cols.empty()) {
            // Intercept-only model in closed form.
            const double n = static_cast<double>(data.size());
            const double k = static_cast<double>(data.count_positive());
            require(k > 0 && k < n, "AIC selection needs both classes");
            const double ll = k * std::log(k / n) + (n - k) * std::log1p(-k / n);
            return 2.0 - 2.0 * ll;
        }
        const auto model = fit_logistic(sub, 0.0);
        return 2.0 * static_cast<double>(cols.size() + 1) - 2.0 * logistic_log_likelihood(model, sub);
    };
    auto names_of = [&](const std::vector<size_t>& cols) {
        std::vector<std::string> out;
        for (size_t c : cols) out.push_back(names[c]);
        return out;
    };

    std::vector<size_t> current(names.size());
    for (size_t j = 0; j < names.size(); ++j) current[j] = j;
    AicSelection result;
    double current_aic = aic_of(current);
    result.steps.push_back({names_of(current), current_aic, ""});
    while (!current.empty()) {
        double best_aic = current_aic;
        size_t best_drop = current.size();
        for (size_t k = 0; k < current.size(); ++k) {
            auto trial = current;
            trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(k));
            const double aic = aic_of(trial);
            if (aic < best_aic) {
                best_aic = aic;
                best_drop = k;
            }
        }
        if (best_drop == current.size()) {
            break;
        }
        const std::string removed = names[current[best_drop]];
        current.erase(current.begin() + static_cast<std::ptrdiff_t>(best_drop));
        current_aic = best_aic;
        result.steps.push_back({names_of(current), current_aic, removed});
    }
    result.selected = names_of(current);
    return result;
}

AicSelection aic_stepwise(const CohortDataset& data, const std::vector<std::string>& candidates) {
    require(!candidates.empty(), "AIC selection needs at least one candidate");
    return aic_stepwise(data.to_labeled(candidates), candidates);
}

}  // namespace qleak

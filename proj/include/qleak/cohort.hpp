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
 * Synthetic surgical cohort with exact published 2x2 marginals, plus the
 * univariate statistics (relative risk, Pearson chi-square) and backward AIC
 * selection on a logistic model.
 */

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qleak/data.hpp"

namespace qleak {

struct FeatureMarginal {
    std::string name;
    size_t n_exposed = 0;
    size_t n_leak_exposed = 0;
};

struct CohortSpec {
    size_t n_total = 200;
    size_t n_leak = 28;
    std::vector<FeatureMarginal> features;
    /// Optional coupling: exposure to `coupled_feature` is drawn with this
    /// weight on rows exposed to `coupled_with` (1 = no coupling).
    std::string coupled_feature = "icg";
    std::string coupled_with = "nocoil";
    double coupling_weight = 3.0;

    /// 200 patients, 28 leaks; DM 9/36, Smoking 9/34, NoCoil 3/55, ACSP 5/65,
    /// ICG 9/100 (leaks / exposed).
    static CohortSpec published();
    void validate() const;
};

/// Feature columns in CSV order.
inline const std::vector<std::string> kCohortFeatures = {"dm", "smoking", "nocoil", "acsp", "icg"};

struct CohortDataset {
    std::vector<std::string> feature_names;
    /// rows[i][j] is feature j of patient i, 0 or 1.
    std::vector<std::vector<int>> rows;
    std::vector<int> leak;
    std::optional<uint64_t> seed;

    size_t size() const { return rows.size(); }
    size_t feature_index(const std::string& name) const;

    /// Selected columns as doubles, each value multiplied by `scale`.
    LabeledData to_labeled(const std::vector<std::string>& features, double scale = 1.0) const;
    CohortDataset subset(const std::vector<size_t>& indices) const;
};

CohortDataset generate_cohort(const CohortSpec& spec, uint64_t seed);

/// Writes the header `dm,smoking,nocoil,acsp,icg,leak` (feature names in
/// dataset order) then one 0/1 row per patient.
void write_cohort_csv(std::ostream& out, const CohortDataset& data);
CohortDataset read_cohort_csv(std::istream& in);
void write_cohort_csv(const std::string& path, const CohortDataset& data);
CohortDataset read_cohort_csv(const std::string& path);

/// (exposed leak, exposed no-leak, unexposed leak, unexposed no-leak).
struct ContingencyTable {
    size_t a = 0, b = 0, c = 0, d = 0;
    size_t total() const { return a + b + c + d; }
};

ContingencyTable contingency(const CohortDataset& data, const std::string& feature);

enum class RiskOrientation {
    /// exposed risk / unexposed risk
    Harmful,
    /// unexposed risk / exposed risk
    Protective,
    /// Protective when the exposed risk is lower, Harmful otherwise.
    Auto,
};

struct RelativeRisk {
    double ratio = 1.0;
    bool protective = false;
};

RelativeRisk relative_risk(const ContingencyTable& t, RiskOrientation orientation = RiskOrientation::Auto);

struct Chi2Result {
    double statistic = 0.0;
    double p_value = 1.0;
    /// A zero margin; statistic reported as 0 and p as 1.
    bool degenerate = false;
};

/// Pearson chi-square on a 2x2 table, optionally Yates-corrected.
Chi2Result chi2_test(const ContingencyTable& t, bool yates = false);

struct AicStep {
    std::vector<std::string> features;
    double aic = 0.0;
    /// Feature dropped to reach this model; empty for the starting model.
    std::string removed;
};

struct AicSelection {
    std::vector<std::string> selected;
    std::vector<AicStep> steps;
};

/// Backward elimination on an unpenalized logistic model with
/// AIC = 2 k - 2 ln L (k counts the intercept).
AicSelection aic_stepwise(const CohortDataset& data, const std::vector<std::string>& candidates);
AicSelection aic_stepwise(const LabeledData& data, const std::vector<std::string>& names);

}  // namespace qleak

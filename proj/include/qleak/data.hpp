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

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace qleak {

/// Dense feature rows with binary labels (1 = positive class).
struct LabeledData {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;

    size_t size() const { return rows.size(); }
    size_t dim() const { return rows.empty() ? 0 : rows.front().size(); }
    size_t count_positive() const;

    /// Throws unless rows and labels agree in length, rows share one width and
    /// labels are 0/1.
    void validate() const;

    LabeledData subset(const std::vector<size_t>& indices) const;
};

/// Assigns each row to one of k folds so every class is spread as evenly as
/// possible. Rows are shuffled within class with `seed` first.
std::vector<size_t> stratified_fold_ids(const std::vector<int>& labels, size_t k, uint64_t seed);

}  // namespace qleak

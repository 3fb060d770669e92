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

#include "qleak/data.hpp"

#include <algorithm>

#include "qleak/error.hpp"
#include "qleak/rng.hpp"

namespace qleak {

size_t LabeledData::count_positive() const {
    return static_cast<size_t>(std::count(labels.begin(), labels.end(), 1));
}

void LabeledData::validate() const {
    require(rows.size() == labels.size(), "rows and labels differ in length");
    const size_t d = dim();
    for (const auto& r : rows) {
        require(r.size() == d, "ragged feature rows");
    }
    for (int y : labels) {
        require(y == 0 || y == 1, "labels must be 0 or 1");
    }
}

LabeledData LabeledData::subset(const std::vector<size_t>& indices) const {
    LabeledData out;
    out.rows.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (size_t i : indices) {
        require(i < rows.size(), "subset index out of range", ErrorCode::OutOfRange);
        out.rows.push_back(rows[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

std::vector<size_t> stratified_fold_ids(const std::vector<int>& labels, size_t k, uint64_t seed) {
    require(k >= 1, "need at least one fold");
    Rng rng(seed);
    std::vector<size_t> ids(labels.size(), 0);
    size_t next = 0;
    for (int cls : {1, 0}) {
        std::vector<size_t> members;
        for (size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == cls) members.push_back(i);
        }
        rng.shuffle(members);
        // Continue the round-robin across classes so fold sizes stay balanced.
        for (size_t i : members) {
            ids[i] = next++ % k;
        }
    }
    return ids;
}

}  // namespace qleak

// Copyright 2026 The fsadapt Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FSADAPT_CLAP_HEAD_HPP_
#define FSADAPT_CLAP_HEAD_HPP_

#include <span>
#include <vector>

#include "fsadapt/embedding_store.hpp"

namespace fsadapt {

// Logit multiplier for softmax use. Argmax metrics do not depend on it.
inline constexpr double kDefaultLogitScale = 100.0;

struct LogitVector {
  std::vector<double> scores;
  double scale = 1.0;
};

// scores[j] = scale * <u, W_c[j]>. `u` is expected to be unit-norm.
LogitVector ClapLogits(std::span<const double> u, const ClassWeights& weights,
                       double scale);

// Fraction of records whose argmax clap logit equals the label.
double ZeroShotAccuracy(const EmbeddingDataset& test, const ClassWeights& weights,
                        double scale);

void CheckLabelSpace(const EmbeddingDataset& ds, const ClassWeights& weights);

}  // namespace fsadapt

#endif  // FSADAPT_CLAP_HEAD_HPP_

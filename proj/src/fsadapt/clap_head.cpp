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

#include "fsadapt/clap_head.hpp"

#include <string>

#include "fsadapt/error.hpp"

namespace fsadapt {

LogitVector ClapLogits(std::span<const double> u, const ClassWeights& weights,
                       double scale) {
  if (u.size() != weights.dim) {
    Fail(ErrorCode::kDimMismatch, "query width " + std::to_string(u.size()) +
                                      " vs class weight width " + std::to_string(weights.dim));
  }
  LogitVector out;
  out.scale = scale;
  out.scores.resize(weights.num_classes);
  for (std::size_t j = 0; j < weights.num_classes; ++j) {
    out.scores[j] = scale * Dot(u, weights.rows.row(j));
  }
  return out;
}

void CheckLabelSpace(const EmbeddingDataset& ds, const ClassWeights& weights) {
  if (ds.dim != weights.dim) {
    Fail(ErrorCode::kDimMismatch, "dataset width " + std::to_string(ds.dim) +
                                      " vs class weight width " + std::to_string(weights.dim));
  }
  if (ds.num_classes != weights.num_classes) {
    Fail(ErrorCode::kDimMismatch, "dataset has " + std::to_string(ds.num_classes) +
                                      " classes, class weights have " +
                                      std::to_string(weights.num_classes));
  }
}

double ZeroShotAccuracy(const EmbeddingDataset& test, const ClassWeights& weights,
                        double scale) {
  CheckLabelSpace(test, weights);
  if (test.records.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& r : test.records) {
    const auto u = ToDouble(r.vector);
    if (Argmax(ClapLogits(u, weights, scale).scores) == r.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.records.size());
}

}  // namespace fsadapt

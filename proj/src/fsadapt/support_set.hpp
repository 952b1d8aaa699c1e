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

#ifndef FSADAPT_SUPPORT_SET_HPP_
#define FSADAPT_SUPPORT_SET_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "fsadapt/clap_head.hpp"
#include "fsadapt/embedding_store.hpp"
#include "fsadapt/linalg.hpp"

namespace fsadapt {

inline constexpr double kDefaultBeta = 5.5;

// K-shot key-value cache: keys F_train (NK x C) and one-hot values
// L_train (NK x N). Rows are class-major.
struct SupportSet {
  Matrix<double> keys;
  Matrix<double> values;
  std::vector<std::uint32_t> labels;
  std::vector<std::string> ids;
  std::uint32_t shots = 0;
  std::uint32_t num_classes = 0;
  // False for the unbalanced full-shot cache, where column sums equal the
  // per-class record counts instead of `shots`.
  bool balanced = true;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return keys.cols(); }

  void Validate() const;
};

// Seeded class-balanced sampling without replacement of `shots` records per
// class. Throws kInsufficientShots when a class has fewer records.
SupportSet BuildSupport(const EmbeddingDataset& train, std::uint32_t shots,
                        std::uint64_t seed);

// Every record, grouped class-major in dataset order. Balanced when all
// classes have the same count.
SupportSet BuildFullSupport(const EmbeddingDataset& train);

// Smallest per-class record count.
std::uint32_t MinClassCount(const EmbeddingDataset& ds);

// Concatenates caches over the same label space (rows of `a` first).
SupportSet ConcatSupport(const SupportSet& a, const SupportSet& b);

// Exponential affinities exp(-beta * (1 - <query, key_i>)) for all rows of
// `keys`. Row `exclude` (if in range) gets affinity 0.
std::vector<double> Affinities(std::span<const double> query, const Matrix<double>& keys,
                               double beta, std::ptrdiff_t exclude = -1);

// scores = affinities^T L_train.
LogitVector SupportLogits(std::span<const double> u, const SupportSet& support,
                          double beta);
LogitVector SupportLogitsWithKeys(std::span<const double> u, const Matrix<double>& keys,
                                  const SupportSet& support, double beta,
                                  std::ptrdiff_t exclude = -1);

double SupportAccuracy(const EmbeddingDataset& test, const SupportSet& support,
                       double beta);

}  // namespace fsadapt

#endif  // FSADAPT_SUPPORT_SET_HPP_

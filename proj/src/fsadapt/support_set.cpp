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

#include "fsadapt/support_set.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fsadapt/error.hpp"
#include "fsadapt/random.hpp"

namespace fsadapt {
namespace {

std::vector<std::vector<std::size_t>> IndicesByClass(const EmbeddingDataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    by_class[ds.records[i].label].push_back(i);
  }
  return by_class;
}

SupportSet Assemble(const EmbeddingDataset& ds, const std::vector<std::size_t>& rows) {
  SupportSet s;
  s.num_classes = ds.num_classes;
  s.keys = Matrix<double>(rows.size(), ds.dim);
  s.values = Matrix<double>(rows.size(), ds.num_classes, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Record& r = ds.records[rows[i]];
    std::copy(r.vector.begin(), r.vector.end(), s.keys.row(i).begin());
    s.values(i, r.label) = 1.0;
    s.labels.push_back(r.label);
    s.ids.push_back(r.id);
  }
  return s;
}

void CheckQuery(std::span<const double> u, std::size_t dim) {
  if (u.size() != dim) {
    Fail(ErrorCode::kDimMismatch, "query width " + std::to_string(u.size()) +
                                      " vs support key width " + std::to_string(dim));
  }
}

}  // namespace

void SupportSet::Validate() const {
  if (keys.rows() != labels.size() || values.rows() != labels.size() ||
      values.cols() != num_classes) {
    Fail(ErrorCode::kDimMismatch, "support set matrices disagree in shape");
  }
  std::vector<double> column_sums(num_classes, 0.0);
  for (std::size_t i = 0; i < size(); ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < num_classes; ++j) {
      row_sum += values(i, j);
      column_sums[j] += values(i, j);
    }
    if (row_sum != 1.0 || values(i, labels[i]) != 1.0) {
      Fail(ErrorCode::kBadFormat, "support value row " + std::to_string(i) + " is not one-hot");
    }
    if (std::abs(Norm(keys.row(i)) - 1.0) > 1e-5) {
      Fail(ErrorCode::kBadFormat, "support key " + std::to_string(i) + " is not unit-norm");
    }
  }
  if (balanced) {
    for (std::size_t j = 0; j < num_classes; ++j) {
      if (column_sums[j] != static_cast<double>(shots)) {
        Fail(ErrorCode::kBadFormat, "support class " + std::to_string(j) + " holds " +
                                        std::to_string(column_sums[j]) + " rows, expected " +
                                        std::to_string(shots));
      }
    }
  }
}

std::uint32_t MinClassCount(const EmbeddingDataset& ds) {
  const auto by_class = IndicesByClass(ds);
  std::size_t least = by_class.empty() ? 0 : by_class.front().size();
  for (const auto& members : by_class) least = std::min(least, members.size());
  return static_cast<std::uint32_t>(least);
}

SupportSet BuildSupport(const EmbeddingDataset& train, std::uint32_t shots,
                        std::uint64_t seed) {
  if (shots == 0) Fail(ErrorCode::kInvalidArgument, "shots must be positive");
  auto by_class = IndicesByClass(train);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < shots) {
      Fail(ErrorCode::kInsufficientShots,
           "class " + std::to_string(c) + " ('" + train.class_names[c] + "') has " +
               std::to_string(by_class[c].size()) + " records, requested " +
               std::to_string(shots));
    }
  }
  Rng rng(seed);
  std::vector<std::size_t> rows;
  rows.reserve(static_cast<std::size_t>(shots) * by_class.size());
  for (auto& members : by_class) {
    // Partial Fisher-Yates: the first `shots` slots become the sample.
    for (std::size_t i = 0; i < shots; ++i) {
      const std::size_t j = i + rng.Index(members.size() - i);
      std::swap(members[i], members[j]);
      rows.push_back(members[i]);
    }
  }
  SupportSet s = Assemble(train, rows);
  s.shots = shots;
  return s;
}

SupportSet BuildFullSupport(const EmbeddingDataset& train) {
  const auto by_class = IndicesByClass(train);
  std::vector<std::size_t> rows;
  bool balanced = true;
  for (const auto& members : by_class) {
    balanced = balanced && members.size() == by_class.front().size();
    rows.insert(rows.end(), members.begin(), members.end());
  }
  SupportSet s = Assemble(train, rows);
  s.balanced = balanced;
  s.shots = balanced ? MinClassCount(train) : 0;
  return s;
}

SupportSet ConcatSupport(const SupportSet& a, const SupportSet& b) {
  if (a.num_classes != b.num_classes || a.dim() != b.dim()) {
    Fail(ErrorCode::kLabelSpaceMismatch, "cannot concatenate support sets of different shape");
  }
  SupportSet s;
  s.num_classes = a.num_classes;
  s.keys = Matrix<double>(a.size() + b.size(), a.dim());
  s.values = Matrix<double>(a.size() + b.size(), a.num_classes);
  std::copy(a.keys.flat().begin(), a.keys.flat().end(), s.keys.flat().begin());
  std::copy(b.keys.flat().begin(), b.keys.flat().end(),
            s.keys.flat().begin() + static_cast<std::ptrdiff_t>(a.keys.flat().size()));
  std::copy(a.values.flat().begin(), a.values.flat().end(), s.values.flat().begin());
  std::copy(b.values.flat().begin(), b.values.flat().end(),
            s.values.flat().begin() + static_cast<std::ptrdiff_t>(a.values.flat().size()));
  s.labels = a.labels;
  s.labels.insert(s.labels.end(), b.labels.begin(), b.labels.end());
  s.ids = a.ids;
  s.ids.insert(s.ids.end(), b.ids.begin(), b.ids.end());
  s.balanced = a.balanced && b.balanced;
  s.shots = s.balanced ? a.shots + b.shots : 0;
  return s;
}

std::vector<double> Affinities(std::span<const double> query, const Matrix<double>& keys,
                               double beta, std::ptrdiff_t exclude) {
  std::vector<double> a(keys.rows());
  for (std::size_t i = 0; i < keys.rows(); ++i) {
    a[i] = static_cast<std::ptrdiff_t>(i) == exclude
               ? 0.0
               : std::exp(-beta * (1.0 - Dot(query, keys.row(i))));
  }
  return a;
}

LogitVector SupportLogitsWithKeys(std::span<const double> u, const Matrix<double>& keys,
                                  const SupportSet& support, double beta,
                                  std::ptrdiff_t exclude) {
  CheckQuery(u, keys.cols());
  const std::vector<double> a = Affinities(u, keys, beta, exclude);
  LogitVector out;
  out.scores.assign(support.num_classes, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto value_row = support.values.row(i);
    for (std::size_t j = 0; j < out.scores.size(); ++j) out.scores[j] += a[i] * value_row[j];
  }
  return out;
}

LogitVector SupportLogits(std::span<const double> u, const SupportSet& support, double beta) {
  return SupportLogitsWithKeys(u, support.keys, support, beta);
}

double SupportAccuracy(const EmbeddingDataset& test, const SupportSet& support, double beta) {
  if (test.dim != support.dim() || test.num_classes != support.num_classes) {
    Fail(ErrorCode::kDimMismatch, "test set and support set disagree in shape");
  }
  if (test.records.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& r : test.records) {
    if (Argmax(SupportLogits(ToDouble(r.vector), support, beta).scores) == r.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test.records.size());
}

}  // namespace fsadapt

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

#ifndef FSADAPT_HARNESS_HPP_
#define FSADAPT_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fsadapt/adapter.hpp"
#include "fsadapt/adapter_train.hpp"
#include "fsadapt/embedding_store.hpp"
#include "fsadapt/predictor.hpp"
#include "fsadapt/variant.hpp"
#include "json.hpp"

namespace fsadapt {

struct DatasetRef {
  std::string name;
  std::filesystem::path data;
  std::filesystem::path weights;
};

// A shot count, or "full" (every train record; see BuildFullSupport).
struct Shots {
  std::uint32_t k = 0;
  bool full = false;

  static Shots Full() { return {0, true}; }
  std::string Label() const { return full ? "full" : std::to_string(k); }
  bool operator==(const Shots&) const = default;
};

Shots ParseShots(const std::string& text);

struct AdapterShape {
  std::uint32_t hidden = 0;  // 0 selects DefaultHidden(dim)
  double residual_ratio = kDefaultResidualRatio;
};

struct ExperimentSpec {
  std::vector<DatasetRef> datasets;
  std::vector<Variant> variants;
  std::vector<Shots> shots = {{2}, {4}, {8}, {16}, {24}, Shots::Full()};
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::vector<double> alpha_grid = DefaultAlphaGrid();
  std::vector<double> beta_grid = DefaultBetaGrid();
  TrainConfig train;
  AdapterShape adapter;
  double scale = kDefaultLogitScale;
  // Interpolation used by the training loss; the reported (alpha, beta) come
  // from the validation grid search.
  std::optional<double> train_alpha;
  double train_beta = kDefaultBeta;
  std::filesystem::path output;

  void Validate() const;
};

ExperimentSpec ExperimentSpecFromJson(const nlohmann::json& j);
nlohmann::json ExperimentSpecToJson(const ExperimentSpec& spec);

// One (dataset, variant, shots, seed) evaluation.
struct RunRecord {
  std::string dataset;
  std::string variant;  // variant name, with "/joint" or "/independent" in joint mode
  std::string shots;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double train_s = 0.0;
  double infer_ms = 0.0;
  std::size_t params = 0;
};

// Aggregate over seeds. `std_acc` is the population standard deviation.
struct SummaryRow {
  std::string dataset;
  std::string variant;
  std::string shots;
  std::size_t seeds = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0;
  double train_s = 0.0;
  double infer_ms = 0.0;
  std::size_t params = 0;
};

struct ResultTable {
  std::vector<RunRecord> runs;
  std::vector<SummaryRow> rows;
};

// Groups runs by (dataset, variant, shots) in first-seen order.
std::vector<SummaryRow> Summarize(const std::vector<RunRecord>& runs);

// For each dataset, variant, shot count and seed: build the support set,
// train when the variant has an adapter, grid-search (alpha, beta) on val and
// evaluate on test. zs-clap ignores the shot list and reports shots "0".
ResultTable RunExperiment(const ExperimentSpec& spec);

// Independent mode trains one adapter per dataset; joint mode trains one
// adapter on the union of the per-dataset support sets and evaluates it on
// each dataset with that dataset's own support set. Throws
// kLabelSpaceMismatch unless all datasets share class names.
ResultTable RunJointVsIndependent(const ExperimentSpec& spec);

struct Timing {
  double train_seconds = 0.0;
  double infer_ms_per_query = 0.0;
  std::size_t params = 0;
};

// Wall-clock medians over `repetitions` runs; the parameter count is exact.
Timing TimeVariant(Variant variant, const EmbeddingDataset& ds, const ClassWeights& weights,
                   Shots shots, const ExperimentSpec& settings, int repetitions = 3);

// Trainable parameters of a variant: 2 C H + H + C with an adapter, else 0.
std::size_t TrainableParameters(Variant variant, std::uint32_t dim, std::uint32_t hidden);

struct ShiftBenchmarkOptions {
  std::uint32_t num_classes = 8;
  std::uint32_t dim = 64;
  std::uint32_t shots_available = 35;  // train records per class
  double shift = 1.0;
  double noise = 0.1;
  std::uint64_t seed = 0;
  // Seeds the per-record noise. Domains that share `seed` but not
  // `domain_seed` share class structure and differ in their samples.
  std::optional<std::uint64_t> domain_seed;
};

// Synthetic domain-gap benchmark. Class weights are orthonormal prototypes;
// class centers are the prototypes rotated by shift * 90 degrees towards
// directions orthogonal to every prototype (when dim >= 2 N); records are
// unit-normalized centers plus isotropic Gaussian noise of per-coordinate
// std `noise`. Per class: shots_available train, 1/7 as many val, 2/7 as
// many test (70/10/20).
std::pair<EmbeddingDataset, ClassWeights> MakeShiftBenchmark(const ShiftBenchmarkOptions& options);

// CSV columns: dataset,variant,shots,seed,alpha,beta,val_acc,test_acc,train_s,infer_ms,params.
// With include_timing = false the two timing fields are left empty.
void WriteCsv(const ResultTable& table, std::ostream& out, bool include_timing = true);
void WriteMarkdown(const ResultTable& table, std::ostream& out);

}  // namespace fsadapt

#endif  // FSADAPT_HARNESS_HPP_

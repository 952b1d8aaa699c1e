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

#ifndef FSADAPT_PREDICTOR_HPP_
#define FSADAPT_PREDICTOR_HPP_

#include <span>
#include <vector>

#include "fsadapt/adapter.hpp"
#include "fsadapt/clap_head.hpp"
#include "fsadapt/embedding_store.hpp"
#include "fsadapt/support_set.hpp"
#include "fsadapt/variant.hpp"

namespace fsadapt {

// Final logits z = (1 - alpha) p_clap + alpha p_support with raw head scores:
// scale * cosine for the clap head, the unnormalized exponential sum for the
// support head. Heads with zero weight are not evaluated, so the endpoints
// alpha = 0 and alpha = 1 reproduce a single head exactly.
//
// `adapter` is required when the variant uses u_f; `support` when the
// support head carries weight. Adapted keys are computed once up front.
class Predictor {
 public:
  Predictor(const PredictorConfig& cfg, const AdapterParams* adapter,
            const SupportSet* support, const ClassWeights& weights);

  LogitVector Logits(std::span<const double> u0) const;
  std::size_t Predict(std::span<const double> u0) const;
  double Accuracy(const EmbeddingDataset& ds) const;

  const PredictorConfig& config() const { return cfg_; }

 private:
  PredictorConfig cfg_;
  HeadWeights head_weights_;
  const AdapterParams* adapter_;
  const SupportSet* support_;
  const ClassWeights& weights_;
  Matrix<double> adapted_keys_;
};

LogitVector FinalLogits(const PredictorConfig& cfg, std::span<const double> u0,
                        const AdapterParams* adapter, const SupportSet* support,
                        const ClassWeights& weights);

// z_j = w.clap_raw * clap_raw_j + w.clap_adapted * clap_adapted_j + w.support * support_j,
// skipping zero-weight terms. Shared by prediction, grid search and training.
void CombineHeads(const HeadWeights& w, std::span<const double> clap_raw,
                  std::span<const double> clap_adapted, std::span<const double> support,
                  std::span<double> out);

std::vector<double> DefaultAlphaGrid();
std::vector<double> DefaultBetaGrid();

struct GridResult {
  double alpha = 0.0;
  double beta = 0.0;
  double val_accuracy = 0.0;
};

// Exhaustive validation search. Ties go to the smaller alpha, then the
// smaller beta. A variant's forced alpha replaces the alpha grid; variants
// without a support head evaluate only the smallest beta.
GridResult GridSearch(const PredictorConfig& cfg_template, const EmbeddingDataset& val,
                      const AdapterParams* adapter, const SupportSet* support,
                      const ClassWeights& weights, std::span<const double> alpha_grid,
                      std::span<const double> beta_grid);

}  // namespace fsadapt

#endif  // FSADAPT_PREDICTOR_HPP_

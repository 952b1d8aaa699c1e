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

#ifndef FSADAPT_ADAPTER_TRAIN_HPP_
#define FSADAPT_ADAPTER_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fsadapt/adapter.hpp"
#include "fsadapt/clap_head.hpp"
#include "fsadapt/support_set.hpp"
#include "fsadapt/variant.hpp"

namespace fsadapt {

struct TrainConfig {
  double lr = 1e-5;
  std::uint32_t batch_size = 64;
  std::uint32_t epochs = 20;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void Validate() const;
};

// One training query. `support_row` names the support row the query came
// from; that row is left out of the query's own retrieval term.
struct TrainingQuery {
  std::span<const double> u0;
  std::uint32_t label = 0;
  std::ptrdiff_t support_row = -1;
};

struct LossAndGrads {
  double loss = 0.0;
  AdapterGrads grads;
};

// Mean cross-entropy of softmax(final logits) over the batch, where the final
// logits follow cfg.variant and adapted support keys are recomputed from
// `params`. `support` may be null when the variant's support weight is zero.
double TrainingLoss(const AdapterParams& params, std::span<const TrainingQuery> batch,
                    const PredictorConfig& cfg, const SupportSet* support,
                    const ClassWeights& weights);

// TrainingLoss and its exact gradient with respect to every adapter block.
LossAndGrads AdapterBackward(const AdapterParams& params, std::span<const TrainingQuery> batch,
                             const PredictorConfig& cfg, const SupportSet* support,
                             const ClassWeights& weights);

// AdamW with decoupled weight decay. Moments are kept in double precision;
// parameters are rounded back to float after each step.
class AdamW {
 public:
  AdamW(const AdapterParams& params, const TrainConfig& cfg);

  void Step(AdapterParams& params, const AdapterGrads& grads);
  std::uint64_t steps() const { return step_; }

 private:
  void Update(std::span<float> param, std::span<const double> grad, std::vector<double>& m,
              std::vector<double>& v);

  TrainConfig cfg_;
  std::uint64_t step_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

struct TrainResult {
  AdapterParams params;
  std::vector<double> epoch_loss;  // mean per-example loss of each epoch
};

// Trains `init` on the support records themselves, each acting as a query
// against the remaining rows. Per-epoch shuffles are seeded from cfg.seed.
TrainResult TrainAdapter(const SupportSet& support, const ClassWeights& weights,
                         const PredictorConfig& predictor_cfg, const TrainConfig& train_cfg,
                         AdapterParams init);

}  // namespace fsadapt

#endif  // FSADAPT_ADAPTER_TRAIN_HPP_

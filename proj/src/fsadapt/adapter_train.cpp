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

#include "fsadapt/adapter_train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fsadapt/error.hpp"
#include "fsadapt/predictor.hpp"
#include "fsadapt/random.hpp"

namespace fsadapt {
namespace {

double Objective(const AdapterParams& params, std::span<const TrainingQuery> batch,
                 const PredictorConfig& cfg, const SupportSet* support,
                 const ClassWeights& weights, AdapterGrads* grads) {
  cfg.Validate();
  if (batch.empty()) Fail(ErrorCode::kInvalidArgument, "training batch is empty");
  if (params.dim != weights.dim) Fail(ErrorCode::kDimMismatch, "adapter width vs class weights");

  const HeadWeights w = WeightsFor(cfg.variant, cfg.alpha);
  const bool use_support = w.support != 0.0;
  if (use_support && support == nullptr) {
    Fail(ErrorCode::kMissingSupport, std::string(VariantName(cfg.variant)) + " needs a support set");
  }
  if (use_support && (support->dim() != weights.dim || support->num_classes != weights.num_classes)) {
    Fail(ErrorCode::kDimMismatch, "support set vs class weights");
  }
  const bool adapted_support = use_support && SupportUsesAdaptedEmbeddings(cfg.variant);
  const bool needs_uf = w.clap_adapted != 0.0 || adapted_support;
  const std::size_t n = weights.num_classes;
  const std::size_t dim = weights.dim;

  std::vector<AdapterTrace> key_traces;
  Matrix<double> adapted_keys;
  Matrix<double> key_grads;
  if (adapted_support) {
    adapted_keys = Matrix<double>(support->size(), dim);
    for (std::size_t i = 0; i < support->size(); ++i) {
      key_traces.push_back(AdapterForwardTrace(params, support->keys.row(i)));
      std::copy(key_traces.back().output.begin(), key_traces.back().output.end(),
                adapted_keys.row(i).begin());
    }
    if (grads != nullptr) key_grads = Matrix<double>(support->size(), dim, 0.0);
  }

  const double inv_batch = 1.0 / static_cast<double>(batch.size());
  double total_loss = 0.0;
  std::vector<double> z(n), grad_z(n), grad_uf(dim);
  std::vector<double> clap_raw, clap_adapted, support_scores, affinities;

  for (const TrainingQuery& q : batch) {
    if (q.u0.size() != dim) Fail(ErrorCode::kDimMismatch, "training query width");
    if (q.label >= n) Fail(ErrorCode::kLabelOutOfRange, "training label " + std::to_string(q.label));

    AdapterTrace trace;
    if (needs_uf) trace = AdapterForwardTrace(params, q.u0);
    const std::span<const double> uf(trace.output);

    if (w.clap_raw != 0.0) clap_raw = ClapLogits(q.u0, weights, cfg.scale).scores;
    if (w.clap_adapted != 0.0) clap_adapted = ClapLogits(uf, weights, cfg.scale).scores;
    const std::span<const double> query = adapted_support ? uf : q.u0;
    if (use_support) {
      const Matrix<double>& keys = adapted_support ? adapted_keys : support->keys;
      const std::ptrdiff_t exclude =
          q.support_row >= 0 && static_cast<std::size_t>(q.support_row) < support->size()
              ? q.support_row
              : -1;
      affinities = Affinities(query, keys, cfg.beta, exclude);
      support_scores.assign(n, 0.0);
      for (std::size_t i = 0; i < affinities.size(); ++i) {
        const auto value_row = support->values.row(i);
        for (std::size_t j = 0; j < n; ++j) support_scores[j] += affinities[i] * value_row[j];
      }
    }
    CombineHeads(w, clap_raw, clap_adapted, support_scores, z);

    const double z_max = *std::max_element(z.begin(), z.end());
    double sum_exp = 0.0;
    for (double v : z) sum_exp += std::exp(v - z_max);
    const double log_sum_exp = z_max + std::log(sum_exp);
    total_loss += log_sum_exp - z[q.label];

    if (grads == nullptr) continue;

    for (std::size_t j = 0; j < n; ++j) {
      grad_z[j] = (std::exp(z[j] - log_sum_exp) - (j == q.label ? 1.0 : 0.0)) * inv_batch;
    }
    std::fill(grad_uf.begin(), grad_uf.end(), 0.0);
    if (w.clap_adapted != 0.0) {
      for (std::size_t j = 0; j < n; ++j) {
        const double g = w.clap_adapted * cfg.scale * grad_z[j];
        const auto row = weights.rows.row(j);
        for (std::size_t c = 0; c < dim; ++c) grad_uf[c] += g * row[c];
      }
    }
    if (adapted_support) {
      // d a_i / d<q, k_i> = beta * a_i
      for (std::size_t i = 0; i < affinities.size(); ++i) {
        if (affinities[i] == 0.0) continue;
        const double upstream = Dot(std::span<const double>(grad_z), support->values.row(i));
        const double g = w.support * upstream * cfg.beta * affinities[i];
        const auto key = adapted_keys.row(i);
        auto key_grad = key_grads.row(i);
        for (std::size_t c = 0; c < dim; ++c) {
          grad_uf[c] += g * key[c];
          key_grad[c] += g * query[c];
        }
      }
    }
    if (needs_uf) AdapterBackwardInto(params, q.u0, trace, grad_uf, *grads);
  }

  if (grads != nullptr && adapted_support) {
    for (std::size_t i = 0; i < support->size(); ++i) {
      AdapterBackwardInto(params, support->keys.row(i), key_traces[i], key_grads.row(i), *grads);
    }
  }
  return total_loss * inv_batch;
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) Fail(ErrorCode::kInvalidArgument, "lr must be non-negative");
  if (batch_size == 0) Fail(ErrorCode::kInvalidArgument, "batch_size must be positive");
  if (epochs == 0) Fail(ErrorCode::kInvalidArgument, "epochs must be positive");
  if (!(weight_decay >= 0.0)) Fail(ErrorCode::kInvalidArgument, "weight_decay must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && eps > 0.0)) {
    Fail(ErrorCode::kInvalidArgument, "AdamW betas must lie in [0, 1) and eps must be positive");
  }
}

double TrainingLoss(const AdapterParams& params, std::span<const TrainingQuery> batch,
                    const PredictorConfig& cfg, const SupportSet* support,
                    const ClassWeights& weights) {
  return Objective(params, batch, cfg, support, weights, nullptr);
}

LossAndGrads AdapterBackward(const AdapterParams& params, std::span<const TrainingQuery> batch,
                             const PredictorConfig& cfg, const SupportSet* support,
                             const ClassWeights& weights) {
  LossAndGrads out;
  out.grads = AdapterGrads::ZerosLike(params);
  out.loss = Objective(params, batch, cfg, support, weights, &out.grads);
  return out;
}

AdamW::AdamW(const AdapterParams& params, const TrainConfig& cfg) : cfg_(cfg) {
  cfg_.Validate();
  for (std::size_t size : {params.w1.flat().size(), params.b1.size(), params.w2.flat().size(),
                           params.b2.size()}) {
    first_moment_.emplace_back(size, 0.0);
    second_moment_.emplace_back(size, 0.0);
  }
}

void AdamW::Update(std::span<float> param, std::span<const double> grad, std::vector<double>& m,
                   std::vector<double>& v) {
  const double t = static_cast<double>(step_);
  const double m_correction = 1.0 - std::pow(cfg_.beta1, t);
  const double v_correction = 1.0 - std::pow(cfg_.beta2, t);
  const double decay = 1.0 - cfg_.lr * cfg_.weight_decay;
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
    v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
    const double m_hat = m[i] / m_correction;
    const double v_hat = v[i] / v_correction;
    const double p = static_cast<double>(param[i]) * decay;
    param[i] = static_cast<float>(p - cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps));
  }
}

void AdamW::Step(AdapterParams& params, const AdapterGrads& grads) {
  ++step_;
  Update(params.w1.flat(), grads.w1.flat(), first_moment_[0], second_moment_[0]);
  Update(params.b1, grads.b1, first_moment_[1], second_moment_[1]);
  Update(params.w2.flat(), grads.w2.flat(), first_moment_[2], second_moment_[2]);
  Update(params.b2, grads.b2, first_moment_[3], second_moment_[3]);
}

TrainResult TrainAdapter(const SupportSet& support, const ClassWeights& weights,
                         const PredictorConfig& predictor_cfg, const TrainConfig& train_cfg,
                         AdapterParams init) {
  predictor_cfg.Validate();
  train_cfg.Validate();
  if (!UsesAdapter(predictor_cfg.variant)) {
    Fail(ErrorCode::kInvalidArgument,
         std::string(VariantName(predictor_cfg.variant)) + " has no trainable adapter");
  }
  init.Validate();
  if (init.dim != support.dim() || support.dim() != weights.dim) {
    Fail(ErrorCode::kDimMismatch, "adapter, support set and class weights disagree in width");
  }
  if (support.size() == 0) Fail(ErrorCode::kInvalidArgument, "support set is empty");

  TrainResult result{std::move(init), {}};
  AdamW optimizer(result.params, train_cfg);
  std::vector<std::size_t> order(support.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<TrainingQuery> batch;

  for (std::uint32_t epoch = 0; epoch < train_cfg.epochs; ++epoch) {
    Rng rng(MixSeed(train_cfg.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.Index(i)]);

    double epoch_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + train_cfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t row = order[k];
        batch.push_back({support.keys.row(row), support.labels[row], static_cast<std::ptrdiff_t>(row)});
      }
      const LossAndGrads step = AdapterBackward(result.params, batch, predictor_cfg, &support, weights);
      optimizer.Step(result.params, step.grads);
      epoch_total += step.loss * static_cast<double>(batch.size());
    }
    result.epoch_loss.push_back(epoch_total / static_cast<double>(order.size()));
  }
  return result;
}

}  // namespace fsadapt

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

#include "fsadapt/predictor.hpp"

#include <algorithm>
#include <string>

#include "fsadapt/error.hpp"

namespace fsadapt {
namespace {

void CheckInputs(const PredictorConfig& cfg, const AdapterParams* adapter,
                 const SupportSet* support, const ClassWeights& weights) {
  cfg.Validate();
  if (UsesAdapter(cfg.variant)) {
    if (adapter == nullptr) {
      Fail(ErrorCode::kMissingAdapter, std::string(VariantName(cfg.variant)) + " needs an adapter");
    }
    if (adapter->dim != weights.dim) Fail(ErrorCode::kDimMismatch, "adapter width vs class weights");
  }
  if (cfg.NeedsSupport()) {
    if (support == nullptr) {
      Fail(ErrorCode::kMissingSupport, std::string(VariantName(cfg.variant)) + " needs a support set");
    }
    if (support->dim() != weights.dim || support->num_classes != weights.num_classes) {
      Fail(ErrorCode::kDimMismatch, "support set vs class weights");
    }
  }
}

std::vector<double> SortedUnique(std::span<const double> grid) {
  std::vector<double> out(grid.begin(), grid.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

void CombineHeads(const HeadWeights& w, std::span<const double> clap_raw,
                  std::span<const double> clap_adapted, std::span<const double> support,
                  std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (w.clap_raw != 0.0) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w.clap_raw * clap_raw[j];
  }
  if (w.clap_adapted != 0.0) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w.clap_adapted * clap_adapted[j];
  }
  if (w.support != 0.0) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += w.support * support[j];
  }
}

Predictor::Predictor(const PredictorConfig& cfg, const AdapterParams* adapter,
                     const SupportSet* support, const ClassWeights& weights)
    : cfg_(cfg),
      head_weights_(WeightsFor(cfg.variant, cfg.alpha)),
      adapter_(adapter),
      support_(support),
      weights_(weights) {
  CheckInputs(cfg_, adapter_, support_, weights_);
  if (head_weights_.support != 0.0 && SupportUsesAdaptedEmbeddings(cfg_.variant)) {
    adapted_keys_ = AdaptRows(*adapter_, support_->keys);
  }
}

LogitVector Predictor::Logits(std::span<const double> u0) const {
  const HeadWeights& w = head_weights_;
  const bool needs_uf =
      w.clap_adapted != 0.0 ||
      (w.support != 0.0 && SupportUsesAdaptedEmbeddings(cfg_.variant));
  std::vector<double> uf;
  if (needs_uf) uf = AdapterForward(*adapter_, u0);

  std::vector<double> clap_raw, clap_adapted, support;
  if (w.clap_raw != 0.0) clap_raw = ClapLogits(u0, weights_, cfg_.scale).scores;
  if (w.clap_adapted != 0.0) clap_adapted = ClapLogits(uf, weights_, cfg_.scale).scores;
  if (w.support != 0.0) {
    support = SupportUsesAdaptedEmbeddings(cfg_.variant)
                  ? SupportLogitsWithKeys(uf, adapted_keys_, *support_, cfg_.beta).scores
                  : SupportLogits(u0, *support_, cfg_.beta).scores;
  }
  LogitVector out;
  out.scale = cfg_.scale;
  out.scores.resize(weights_.num_classes);
  CombineHeads(w, clap_raw, clap_adapted, support, out.scores);
  return out;
}

std::size_t Predictor::Predict(std::span<const double> u0) const {
  return Argmax(Logits(u0).scores);
}

double Predictor::Accuracy(const EmbeddingDataset& ds) const {
  CheckLabelSpace(ds, weights_);
  if (ds.records.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& r : ds.records) {
    if (Predict(ToDouble(r.vector)) == r.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.records.size());
}

LogitVector FinalLogits(const PredictorConfig& cfg, std::span<const double> u0,
                        const AdapterParams* adapter, const SupportSet* support,
                        const ClassWeights& weights) {
  return Predictor(cfg, adapter, support, weights).Logits(u0);
}

std::vector<double> DefaultAlphaGrid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(i / 10.0);
  return grid;
}

std::vector<double> DefaultBetaGrid() { return {1.0, 2.5, 5.5, 7.0, 10.0}; }

GridResult GridSearch(const PredictorConfig& cfg_template, const EmbeddingDataset& val,
                      const AdapterParams* adapter, const SupportSet* support,
                      const ClassWeights& weights, std::span<const double> alpha_grid,
                      std::span<const double> beta_grid) {
  if (alpha_grid.empty() || beta_grid.empty()) Fail(ErrorCode::kEmptyGrid, "grids must be non-empty");
  const Variant variant = cfg_template.variant;
  std::vector<double> alphas = SortedUnique(alpha_grid);
  std::vector<double> betas = SortedUnique(beta_grid);
  if (const auto forced = ForcedAlpha(variant)) alphas = {*forced};
  if (!UsesSupportHead(variant)) betas = {betas.front()};

  // Validate every configuration up front so errors surface before work.
  for (double a : alphas) {
    for (double b : betas) {
      PredictorConfig cfg = cfg_template;
      cfg.alpha = a;
      cfg.beta = b;
      CheckInputs(cfg, adapter, support, weights);
    }
  }
  CheckLabelSpace(val, weights);

  const std::size_t n = weights.num_classes;
  const std::size_t m = val.records.size();
  const bool adapted_support = SupportUsesAdaptedEmbeddings(variant);
  const bool any_support = UsesSupportHead(variant) && alphas.back() > 0.0;

  std::vector<std::vector<double>> queries(m), adapted(m), clap_raw(m), clap_adapted(m);
  const double scale = cfg_template.scale;
  for (std::size_t r = 0; r < m; ++r) {
    queries[r] = ToDouble(val.records[r].vector);
    clap_raw[r] = ClapLogits(queries[r], weights, scale).scores;
    if (UsesAdapter(variant)) {
      adapted[r] = AdapterForward(*adapter, queries[r]);
      clap_adapted[r] = ClapLogits(adapted[r], weights, scale).scores;
    }
  }
  Matrix<double> adapted_keys;
  if (any_support && adapted_support) adapted_keys = AdaptRows(*adapter, support->keys);

  GridResult best;
  bool have_best = false;
  std::vector<std::vector<std::vector<double>>> support_scores(betas.size());
  if (any_support) {
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
      support_scores[bi].resize(m);
      for (std::size_t r = 0; r < m; ++r) {
        support_scores[bi][r] =
            adapted_support
                ? SupportLogitsWithKeys(adapted[r], adapted_keys, *support, betas[bi]).scores
                : SupportLogits(queries[r], *support, betas[bi]).scores;
      }
    }
  }

  std::vector<double> z(n);
  const std::vector<double> none;
  for (double a : alphas) {
    const HeadWeights w = WeightsFor(variant, a);
    for (std::size_t bi = 0; bi < betas.size(); ++bi) {
      std::size_t correct = 0;
      for (std::size_t r = 0; r < m; ++r) {
        const std::vector<double>& s = w.support != 0.0 ? support_scores[bi][r] : none;
        CombineHeads(w, clap_raw[r], clap_adapted[r], s, z);
        if (Argmax(z) == val.records[r].label) ++correct;
      }
      const double acc = m == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(m);
      if (!have_best || acc > best.val_accuracy) {
        best = {a, betas[bi], acc};
        have_best = true;
      }
    }
  }
  return best;
}

}  // namespace fsadapt

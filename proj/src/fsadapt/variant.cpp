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

#include "fsadapt/variant.hpp"

#include <cmath>

#include "fsadapt/error.hpp"

namespace fsadapt {

const char* VariantName(Variant v) {
  switch (v) {
    case Variant::kZsClap: return "zs-clap";
    case Variant::kClapS: return "clap-s";
    case Variant::kTipAdapter: return "tip-adapter";
    case Variant::kTipAdapterF: return "tip-adapter-f";
    case Variant::kAdapterOnly: return "adapter";
    case Variant::kAdapterPlusZs: return "adapter-zs";
    case Variant::kAdapterPlusSupport: return "adapter-support";
    case Variant::kClapSPlus: return "clap-s-plus";
  }
  return "?";
}

Variant ParseVariant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (name == VariantName(v)) return v;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown variant '" + std::string(name) + "'");
}

bool UsesAdapter(Variant v) {
  switch (v) {
    case Variant::kZsClap:
    case Variant::kClapS:
    case Variant::kTipAdapter:
      return false;
    default:
      return true;
  }
}

bool UsesSupportHead(Variant v) {
  switch (v) {
    case Variant::kClapS:
    case Variant::kTipAdapter:
    case Variant::kTipAdapterF:
    case Variant::kAdapterPlusSupport:
    case Variant::kClapSPlus:
      return true;
    default:
      return false;
  }
}

bool SupportUsesAdaptedEmbeddings(Variant v) {
  return v == Variant::kTipAdapterF || v == Variant::kClapSPlus;
}

std::optional<double> ForcedAlpha(Variant v) {
  switch (v) {
    case Variant::kZsClap:
    case Variant::kAdapterOnly:
      return 0.0;
    case Variant::kClapS:
      return 1.0;
    default:
      return std::nullopt;
  }
}

double DefaultAlpha(Variant v) { return ForcedAlpha(v).value_or(0.5); }

HeadWeights WeightsFor(Variant v, double alpha) {
  HeadWeights w;
  switch (v) {
    case Variant::kZsClap:
      w.clap_raw = 1.0;
      break;
    case Variant::kClapS:
      w.support = 1.0;
      break;
    case Variant::kTipAdapter:
    case Variant::kTipAdapterF:
      w.clap_raw = 1.0 - alpha;
      w.support = alpha;
      break;
    case Variant::kAdapterOnly:
      w.clap_adapted = 1.0;
      break;
    case Variant::kAdapterPlusZs:
      w.clap_adapted = 1.0 - alpha;
      w.clap_raw = alpha;
      break;
    case Variant::kAdapterPlusSupport:
    case Variant::kClapSPlus:
      w.clap_adapted = 1.0 - alpha;
      w.support = alpha;
      break;
  }
  return w;
}

PredictorConfig PredictorConfig::For(Variant v) {
  PredictorConfig cfg;
  cfg.variant = v;
  cfg.alpha = DefaultAlpha(v);
  return cfg;
}

void PredictorConfig::Validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1], got " + std::to_string(alpha));
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) {
    Fail(ErrorCode::kInvalidArgument, "beta must be positive, got " + std::to_string(beta));
  }
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    Fail(ErrorCode::kInvalidArgument, "scale must be positive, got " + std::to_string(scale));
  }
  if (const auto forced = ForcedAlpha(variant); forced && alpha != *forced) {
    Fail(ErrorCode::kVariantConstraintViolated,
         std::string(VariantName(variant)) + " forces alpha=" +
             (*forced == 0.0 ? "0" : "1") + ", got " + std::to_string(alpha));
  }
}

}  // namespace fsadapt

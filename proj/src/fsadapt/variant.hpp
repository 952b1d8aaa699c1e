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

#ifndef FSADAPT_VARIANT_HPP_
#define FSADAPT_VARIANT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fsadapt/clap_head.hpp"
#include "fsadapt/support_set.hpp"

namespace fsadapt {

// Which embedding (text-aligned u0 or adapter output u_f) feeds each head.
//
//   variant               clap head      support head
//   kZsClap               u0             -             alpha = 0
//   kClapS                -              u0            alpha = 1
//   kTipAdapter           u0             u0
//   kTipAdapterF          u0             u_f
//   kAdapterOnly          u_f            -             alpha = 0
//   kAdapterPlusZs        u_f and u0     -
//   kAdapterPlusSupport   u_f            u0
//   kClapSPlus            u_f            u_f
//
// A u_f support head compares the adapted query against adapted keys.
enum class Variant {
  kZsClap,
  kClapS,
  kTipAdapter,
  kTipAdapterF,
  kAdapterOnly,
  kAdapterPlusZs,
  kAdapterPlusSupport,
  kClapSPlus,
};

inline constexpr Variant kAllVariants[] = {
    Variant::kZsClap,      Variant::kClapS,         Variant::kTipAdapter,
    Variant::kTipAdapterF, Variant::kAdapterOnly,   Variant::kAdapterPlusZs,
    Variant::kAdapterPlusSupport, Variant::kClapSPlus,
};

// Canonical CLI spelling: zs-clap, clap-s, tip-adapter, tip-adapter-f,
// adapter, adapter-zs, adapter-support, clap-s-plus.
const char* VariantName(Variant v);
Variant ParseVariant(std::string_view name);

bool UsesAdapter(Variant v);
bool UsesSupportHead(Variant v);
bool SupportUsesAdaptedEmbeddings(Variant v);
std::optional<double> ForcedAlpha(Variant v);
double DefaultAlpha(Variant v);

// Per-head weights of the final logits:
//   z = clap_raw * clap(u0) + clap_adapted * clap(u_f) + support * p_support
struct HeadWeights {
  double clap_raw = 0.0;
  double clap_adapted = 0.0;
  double support = 0.0;
};

HeadWeights WeightsFor(Variant v, double alpha);

struct PredictorConfig {
  Variant variant = Variant::kClapSPlus;
  double alpha = 0.5;
  double beta = kDefaultBeta;
  double scale = kDefaultLogitScale;

  // Defaults for `v`, with alpha pinned where the variant forces it.
  static PredictorConfig For(Variant v);

  // Throws kVariantConstraintViolated or kInvalidArgument.
  void Validate() const;

  bool NeedsSupport() const { return UsesSupportHead(variant) && alpha > 0.0; }
};

}  // namespace fsadapt

#endif  // FSADAPT_VARIANT_HPP_

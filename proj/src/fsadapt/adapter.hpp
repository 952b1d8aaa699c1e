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

#ifndef FSADAPT_ADAPTER_HPP_
#define FSADAPT_ADAPTER_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fsadapt/linalg.hpp"

namespace fsadapt {

inline constexpr double kDefaultResidualRatio = 0.2;

// Hidden width used when none is given: C / 4, at least 1.
std::uint32_t DefaultHidden(std::uint32_t dim);

// Two-layer residual MLP mapping u0 to u_f:
//
//   h     = relu(w1 u0 + b1)
//   mixed = r (w2 h + b2) + (1 - r) u0
//   u_f   = mixed / |mixed|
//
// Weights are stored in single precision, the same as the checkpoint.
struct AdapterParams {
  std::uint32_t dim = 0;
  std::uint32_t hidden = 0;
  double residual_ratio = kDefaultResidualRatio;
  Matrix<float> w1;  // hidden x dim
  std::vector<float> b1;
  Matrix<float> w2;  // dim x hidden
  std::vector<float> b2;

  // 2 C H + H + C.
  std::size_t ParameterCount() const;

  void Validate() const;

  bool operator==(const AdapterParams&) const = default;
};

// Weights uniform in +-1/sqrt(fan_in), biases zero.
AdapterParams InitAdapter(std::uint32_t dim, std::uint32_t hidden, double residual_ratio,
                          std::uint64_t seed);

// Same shapes as AdapterParams, double precision.
struct AdapterGrads {
  Matrix<double> w1;
  std::vector<double> b1;
  Matrix<double> w2;
  std::vector<double> b2;

  static AdapterGrads ZerosLike(const AdapterParams& p);
};

// Intermediates of one forward pass, kept for the backward pass.
struct AdapterTrace {
  std::vector<double> pre_activation;  // w1 u0 + b1
  std::vector<double> hidden;          // relu(pre_activation)
  std::vector<double> output;          // u_f
  double mixed_norm = 1.0;
  bool pass_through = false;
};

// Throws kDimMismatch, or kDegenerateOutput when |mixed| < 1e-12.
std::vector<double> AdapterForward(const AdapterParams& p, std::span<const double> u0);
AdapterTrace AdapterForwardTrace(const AdapterParams& p, std::span<const double> u0);

// Accumulates dL/dparams into `grads` given dL/du_f for the traced input.
void AdapterBackwardInto(const AdapterParams& p, std::span<const double> u0,
                         const AdapterTrace& trace, std::span<const double> grad_output,
                         AdapterGrads& grads);

// Every row passed through the adapter.
Matrix<double> AdaptRows(const AdapterParams& p, const Matrix<double>& rows);

// Checkpoint in the EMB1 container: header (C, H, 4), JSON with shapes and
// residual_ratio, then w1, b1, w2, b2 as f32 blocks.
std::string EncodeAdapter(const AdapterParams& p);
AdapterParams DecodeAdapter(std::string_view bytes);
void SaveAdapter(const AdapterParams& p, const std::filesystem::path& path);
AdapterParams LoadAdapter(const std::filesystem::path& path);

}  // namespace fsadapt

#endif  // FSADAPT_ADAPTER_HPP_

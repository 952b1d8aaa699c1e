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

#include "fsadapt/adapter.hpp"

#include <algorithm>
#include <cmath>

#include "fsadapt/embedding_store.hpp"
#include "fsadapt/error.hpp"
#include "fsadapt/random.hpp"

namespace fsadapt {
namespace {

constexpr double kDegenerateNorm = 1e-12;

void CheckFiniteBlock(std::span<const float> v, const char* name) {
  for (float x : v) {
    if (!std::isfinite(x)) {
      Fail(ErrorCode::kNonFiniteValue, std::string("adapter block ") + name + " is non-finite");
    }
  }
}

}  // namespace

std::uint32_t DefaultHidden(std::uint32_t dim) { return std::max<std::uint32_t>(1, dim / 4); }

std::size_t AdapterParams::ParameterCount() const {
  return 2 * static_cast<std::size_t>(dim) * hidden + hidden + dim;
}

void AdapterParams::Validate() const {
  if (dim == 0 || hidden == 0) Fail(ErrorCode::kBadDimension, "adapter shape must be positive");
  if (!(residual_ratio >= 0.0 && residual_ratio <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "residual_ratio must lie in [0, 1]");
  }
  if (w1.rows() != hidden || w1.cols() != dim || b1.size() != hidden || w2.rows() != dim ||
      w2.cols() != hidden || b2.size() != dim) {
    Fail(ErrorCode::kDimMismatch, "adapter blocks disagree with (dim, hidden)");
  }
  CheckFiniteBlock(w1.flat(), "w1");
  CheckFiniteBlock(b1, "b1");
  CheckFiniteBlock(w2.flat(), "w2");
  CheckFiniteBlock(b2, "b2");
}

AdapterParams InitAdapter(std::uint32_t dim, std::uint32_t hidden, double residual_ratio,
                          std::uint64_t seed) {
  AdapterParams p;
  p.dim = dim;
  p.hidden = hidden;
  p.residual_ratio = residual_ratio;
  p.w1 = Matrix<float>(hidden, dim);
  p.b1.assign(hidden, 0.0f);
  p.w2 = Matrix<float>(dim, hidden);
  p.b2.assign(dim, 0.0f);
  Rng rng(seed);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(dim));
  for (float& w : p.w1.flat()) w = static_cast<float>(rng.Uniform(-bound1, bound1));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (float& w : p.w2.flat()) w = static_cast<float>(rng.Uniform(-bound2, bound2));
  p.Validate();
  return p;
}

AdapterGrads AdapterGrads::ZerosLike(const AdapterParams& p) {
  AdapterGrads g;
  g.w1 = Matrix<double>(p.hidden, p.dim, 0.0);
  g.b1.assign(p.hidden, 0.0);
  g.w2 = Matrix<double>(p.dim, p.hidden, 0.0);
  g.b2.assign(p.dim, 0.0);
  return g;
}

AdapterTrace AdapterForwardTrace(const AdapterParams& p, std::span<const double> u0) {
  if (u0.size() != p.dim) {
    Fail(ErrorCode::kDimMismatch, "adapter expects width " + std::to_string(p.dim) + ", got " +
                                      std::to_string(u0.size()));
  }
  AdapterTrace t;
  // A zero residual ratio is the pass-through configuration.
  if (p.residual_ratio == 0.0) {
    t.pass_through = true;
    t.output.assign(u0.begin(), u0.end());
    return t;
  }
  t.pre_activation.resize(p.hidden);
  t.hidden.resize(p.hidden);
  for (std::size_t k = 0; k < p.hidden; ++k) {
    t.pre_activation[k] = p.b1[k] + Dot(p.w1.row(k), u0);
    t.hidden[k] = std::max(0.0, t.pre_activation[k]);
  }
  const double r = p.residual_ratio;
  t.output.resize(p.dim);
  for (std::size_t c = 0; c < p.dim; ++c) {
    const double raw = p.b2[c] + Dot(p.w2.row(c), std::span<const double>(t.hidden));
    t.output[c] = r * raw + (1.0 - r) * u0[c];
  }
  t.mixed_norm = Norm(std::span<const double>(t.output));
  if (!(t.mixed_norm >= kDegenerateNorm)) {
    Fail(ErrorCode::kDegenerateOutput, "adapter output has norm " + std::to_string(t.mixed_norm));
  }
  for (double& x : t.output) x /= t.mixed_norm;
  return t;
}

std::vector<double> AdapterForward(const AdapterParams& p, std::span<const double> u0) {
  return AdapterForwardTrace(p, u0).output;
}

void AdapterBackwardInto(const AdapterParams& p, std::span<const double> u0,
                         const AdapterTrace& trace, std::span<const double> grad_output,
                         AdapterGrads& grads) {
  if (trace.pass_through) return;
  // d(m/|m|)/dm = (I - f f^T) / |m|
  const std::span<const double> f(trace.output);
  const double radial = Dot(f, grad_output);
  std::vector<double> grad_raw(p.dim);
  for (std::size_t c = 0; c < p.dim; ++c) {
    grad_raw[c] = p.residual_ratio * (grad_output[c] - f[c] * radial) / trace.mixed_norm;
  }
  std::vector<double> grad_hidden(p.hidden, 0.0);
  for (std::size_t c = 0; c < p.dim; ++c) {
    const double g = grad_raw[c];
    if (g == 0.0) continue;
    grads.b2[c] += g;
    auto gw2 = grads.w2.row(c);
    const auto w2 = p.w2.row(c);
    for (std::size_t k = 0; k < p.hidden; ++k) {
      gw2[k] += g * trace.hidden[k];
      grad_hidden[k] += g * w2[k];
    }
  }
  for (std::size_t k = 0; k < p.hidden; ++k) {
    if (trace.pre_activation[k] <= 0.0) continue;
    const double g = grad_hidden[k];
    grads.b1[k] += g;
    auto gw1 = grads.w1.row(k);
    for (std::size_t c = 0; c < p.dim; ++c) gw1[c] += g * u0[c];
  }
}

Matrix<double> AdaptRows(const AdapterParams& p, const Matrix<double>& rows) {
  Matrix<double> out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const auto f = AdapterForward(p, rows.row(i));
    std::copy(f.begin(), f.end(), out.row(i).begin());
  }
  return out;
}

std::string EncodeAdapter(const AdapterParams& p) {
  p.Validate();
  Emb1Container c;
  c.a = p.dim;
  c.b = p.hidden;
  c.count = 4;
  c.meta = {{"format", "adapter"},
            {"dim", p.dim},
            {"hidden", p.hidden},
            {"residual_ratio", p.residual_ratio},
            {"blocks",
             {{{"name", "w1"}, {"rows", p.hidden}, {"cols", p.dim}},
              {{"name", "b1"}, {"rows", p.hidden}, {"cols", 1}},
              {{"name", "w2"}, {"rows", p.dim}, {"cols", p.hidden}},
              {{"name", "b2"}, {"rows", p.dim}, {"cols", 1}}}}};
  auto append = [&](std::span<const float> block) {
    c.payload.insert(c.payload.end(), block.begin(), block.end());
  };
  append(p.w1.flat());
  append(p.b1);
  append(p.w2.flat());
  append(p.b2);
  return EncodeContainer(c);
}

AdapterParams DecodeAdapter(std::string_view bytes) {
  Emb1Container c = DecodeContainer(bytes, [](const Emb1Container& h) {
    if (h.meta.value("format", "") != "adapter") {
      Fail(ErrorCode::kBadFormat, "container does not hold an adapter checkpoint");
    }
    const std::size_t dim = h.a;
    const std::size_t hidden = h.b;
    return 2 * dim * hidden + dim + hidden;
  });
  AdapterParams p;
  try {
    p.dim = c.meta.at("dim").get<std::uint32_t>();
    p.hidden = c.meta.at("hidden").get<std::uint32_t>();
    p.residual_ratio = c.meta.at("residual_ratio").get<double>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kBadFormat, std::string("adapter metadata: ") + e.what());
  }
  if (p.dim != c.a || p.hidden != c.b || c.count != 4) {
    Fail(ErrorCode::kDimMismatch, "adapter metadata disagrees with header");
  }
  p.w1 = Matrix<float>(p.hidden, p.dim);
  p.w2 = Matrix<float>(p.dim, p.hidden);
  auto it = c.payload.begin();
  auto take = [&it](std::span<float> dst) {
    std::copy(it, it + static_cast<std::ptrdiff_t>(dst.size()), dst.begin());
    it += static_cast<std::ptrdiff_t>(dst.size());
  };
  p.b1.resize(p.hidden);
  p.b2.resize(p.dim);
  take(p.w1.flat());
  take(p.b1);
  take(p.w2.flat());
  take(p.b2);
  p.Validate();
  return p;
}

void SaveAdapter(const AdapterParams& p, const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeAdapter(p));
}

AdapterParams LoadAdapter(const std::filesystem::path& path) {
  return DecodeAdapter(ReadFileBytes(path));
}

}  // namespace fsadapt

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

#include <gtest/gtest.h>

#include <cmath>

#include "fsadapt/adapter_train.hpp"
#include "fsadapt/harness.hpp"
#include "test_util.hpp"

namespace fsadapt {
namespace {

using testing::RandomAdapter;
using testing::RandomSupport;
using testing::RandomUnit;
using testing::RandomWeights;
using testing::TempDir;

AdapterParams FixedAdapter(double r) {
  AdapterParams p;
  p.dim = 3;
  p.hidden = 2;
  p.residual_ratio = r;
  p.w1 = Matrix<float>(2, 3);
  const float w1[] = {0.5f, -0.25f, 1.0f, -1.0f, 0.75f, 0.5f};
  std::copy(std::begin(w1), std::end(w1), p.w1.flat().begin());
  p.b1 = {0.125f, -0.5f};
  p.w2 = Matrix<float>(3, 2);
  const float w2[] = {1.0f, 0.5f, -0.5f, 0.25f, 0.0f, -1.0f};
  std::copy(std::begin(w2), std::end(w2), p.w2.flat().begin());
  p.b2 = {0.25f, 0.0f, -0.125f};
  return p;
}

TEST(AdapterForward, FrozenFixedInstance) {
  const std::vector<double> u0 = {0.48, 0.6, 0.64};
  const AdapterTrace t = AdapterForwardTrace(FixedAdapter(0.3), u0);
  // Second hidden unit is switched off by the ReLU.
  EXPECT_NEAR(t.hidden[0], 0.855, 1e-12);
  EXPECT_EQ(t.hidden[1], 0.0);
  const std::vector<double> expected = {0.7982801947955669, 0.3489112312083994, 0.49092737073195536};
  EXPECT_LE(testing::MaxAbsDiff(t.output, expected), 1e-12);
}

// Plain nested loops over the same definition.
std::vector<double> ForwardOracle(const AdapterParams& p, const std::vector<double>& u0) {
  std::vector<double> h(p.hidden);
  for (std::size_t k = 0; k < p.hidden; ++k) {
    double acc = p.b1[k];
    for (std::size_t c = 0; c < p.dim; ++c) acc += p.w1(k, c) * u0[c];
    h[k] = acc > 0 ? acc : 0;
  }
  std::vector<double> m(p.dim);
  double n2 = 0;
  for (std::size_t c = 0; c < p.dim; ++c) {
    double acc = p.b2[c];
    for (std::size_t k = 0; k < p.hidden; ++k) acc += p.w2(c, k) * h[k];
    m[c] = p.residual_ratio * acc + (1 - p.residual_ratio) * u0[c];
    n2 += m[c] * m[c];
  }
  for (double& x : m) x /= std::sqrt(n2);
  return m;
}

TEST(AdapterForward, MatchesLoopOracleAndIsUnitNorm) {
  Rng rng(31);
  for (int t = 0; t < 100; ++t) {
    const AdapterParams p = RandomAdapter(rng, 6, 2, rng.Uniform(0.05, 1.0));
    const auto u0 = RandomUnit(rng, 6);
    const auto f = AdapterForward(p, u0);
    EXPECT_LE(testing::MaxAbsDiff(f, ForwardOracle(p, u0)), 1e-6);
    EXPECT_NEAR(Norm(std::span<const double>(f)), 1.0, 1e-6);
  }
}

TEST(AdapterForward, ZeroResidualIsExactIdentity) {
  Rng rng(32);
  const AdapterParams p = RandomAdapter(rng, 9, 3, 0.0);
  for (int t = 0; t < 20; ++t) {
    const auto u0 = RandomUnit(rng, 9);
    EXPECT_EQ(AdapterForward(p, u0), u0);
  }
}

TEST(AdapterForward, Errors) {
  AdapterParams zero = InitAdapter(4, 2, 1.0, 0);
  for (float& w : zero.w1.flat()) w = 0.0f;
  for (float& w : zero.w2.flat()) w = 0.0f;
  EXPECT_ERROR(AdapterForward(zero, std::vector<double>{1, 0, 0, 0}), ErrorCode::kDegenerateOutput);
  EXPECT_ERROR(AdapterForward(zero, std::vector<double>{1, 0, 0}), ErrorCode::kDimMismatch);
  EXPECT_ERROR(InitAdapter(0, 2, 0.2, 0), ErrorCode::kBadDimension);
  EXPECT_ERROR(InitAdapter(4, 2, 1.5, 0), ErrorCode::kInvalidArgument);
}

TEST(AdapterInit, SeededUniformWithZeroBias) {
  const AdapterParams a = InitAdapter(16, 4, 0.2, 7);
  EXPECT_EQ(a, InitAdapter(16, 4, 0.2, 7));
  EXPECT_NE(a, InitAdapter(16, 4, 0.2, 8));
  for (float w : a.w1.flat()) EXPECT_LE(std::abs(w), 0.25f);
  for (float w : a.w2.flat()) EXPECT_LE(std::abs(w), 0.5f);
  for (float b : a.b1) EXPECT_EQ(b, 0.0f);
  for (float b : a.b2) EXPECT_EQ(b, 0.0f);
  EXPECT_EQ(a.ParameterCount(), 2u * 16 * 4 + 4 + 16);
  EXPECT_EQ(DefaultHidden(64), 16u);
  EXPECT_EQ(DefaultHidden(3), 1u);
}

TEST(AdapterCheckpoint, BitExactRoundTrip) {
  TempDir dir("adapter");
  Rng rng(33);
  AdapterParams p = RandomAdapter(rng, 10, 3, 0.35);
  p.w1(0, 0) = -0.0f;
  p.w2(1, 2) = 1e-40f;  // subnormal
  SaveAdapter(p, dir / "a.emb");
  const AdapterParams back = LoadAdapter(dir / "a.emb");
  EXPECT_EQ(back, p);
  EXPECT_TRUE(std::signbit(back.w1(0, 0)));
  EXPECT_EQ(EncodeAdapter(back), ReadFileBytes(dir / "a.emb"));

  const auto meta = DecodeContainer(ReadFileBytes(dir / "a.emb"),
                                    [](const Emb1Container& h) { return 2 * h.a * h.b + h.a + h.b; }).meta;
  EXPECT_EQ(meta["format"], "adapter");
  EXPECT_EQ(meta["residual_ratio"], 0.35);
  EXPECT_EQ(meta["blocks"].size(), 4u);
}

TEST(AdapterCheckpoint, RejectsOtherContainersAndDamage) {
  TempDir dir("adapter-bad");
  Rng rng(34);
  const std::string good = EncodeAdapter(RandomAdapter(rng, 6, 2, 0.2));
  EXPECT_ERROR(DecodeAdapter(good.substr(0, good.size() - 1)), ErrorCode::kTruncatedFile);
  EXPECT_ERROR(DecodeAdapter(good + "xxxx"), ErrorCode::kDimMismatch);

  const ClassWeights w = RandomWeights(rng, 3, 6);
  SaveClassWeights(w, dir / "w.emb");
  EXPECT_ERROR(LoadAdapter(dir / "w.emb"), ErrorCode::kBadFormat);
  EXPECT_ERROR(DecodeDataset(good), ErrorCode::kBadFormat);
}

// ---- training objective -------------------------------------------------

std::vector<TrainingQuery> SupportQueries(const SupportSet& s) {
  std::vector<TrainingQuery> batch;
  for (std::size_t r = 0; r < s.size(); ++r) {
    batch.push_back({s.keys.row(r), s.labels[r], static_cast<std::ptrdiff_t>(r)});
  }
  return batch;
}

double RelError(std::span<const double> a, const std::vector<double>& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(d) / std::max(std::sqrt(std::max(na, nb)), 1e-12);
}

std::vector<double> CentralDifference(AdapterParams& p, std::span<float> block,
                                      const std::function<double()>& loss) {
  std::vector<double> g(block.size());
  for (std::size_t i = 0; i < block.size(); ++i) {
    const float saved = block[i];
    const float up = static_cast<float>(saved + 1e-4), down = static_cast<float>(saved - 1e-4);
    block[i] = up;
    const double lu = loss();
    block[i] = down;
    const double ld = loss();
    block[i] = saved;
    g[i] = (lu - ld) / (static_cast<double>(up) - static_cast<double>(down));
  }
  return g;
}

void ExpectGradientMatches(AdapterParams& p, const std::vector<TrainingQuery>& batch,
                           const PredictorConfig& cfg, const SupportSet& s, const ClassWeights& w) {
  const auto loss = [&] { return TrainingLoss(p, batch, cfg, &s, w); };
  const LossAndGrads g = AdapterBackward(p, batch, cfg, &s, w);
  EXPECT_NEAR(g.loss, loss(), 1e-12);
  EXPECT_LE(RelError(g.grads.w1.flat(), CentralDifference(p, p.w1.flat(), loss)), 1e-3);
  EXPECT_LE(RelError(g.grads.b1, CentralDifference(p, p.b1, loss)), 1e-3);
  EXPECT_LE(RelError(g.grads.w2.flat(), CentralDifference(p, p.w2.flat(), loss)), 1e-3);
  EXPECT_LE(RelError(g.grads.b2, CentralDifference(p, p.b2, loss)), 1e-3);
}

TEST(AdapterBackward, FiniteDifferencesSmallInstance) {
  Rng rng(35);
  const ClassWeights w = RandomWeights(rng, 2, 6);
  const SupportSet s = RandomSupport(rng, 2, 1, 6);
  AdapterParams p = RandomAdapter(rng, 6, 3, 0.5);
  std::vector<std::vector<double>> extra = {RandomUnit(rng, 6), RandomUnit(rng, 6)};
  std::vector<TrainingQuery> batch = SupportQueries(s);
  batch.push_back({extra[0], 0, -1});
  batch.push_back({extra[1], 1, -1});
  PredictorConfig cfg = PredictorConfig::For(Variant::kClapSPlus);
  cfg.scale = 5.0;
  ExpectGradientMatches(p, batch, cfg, s, w);
}

TEST(AdapterBackward, FiniteDifferencesEveryTrainableVariant) {
  Rng rng(36);
  for (Variant v : kAllVariants) {
    if (!UsesAdapter(v)) continue;
    for (int t = 0; t < 3; ++t) {
      const ClassWeights w = RandomWeights(rng, 3, 7);
      const SupportSet s = RandomSupport(rng, 3, 2, 7);
      AdapterParams p = RandomAdapter(rng, 7, 3, rng.Uniform(0.2, 1.0));
      PredictorConfig cfg = PredictorConfig::For(v);
      if (!ForcedAlpha(v)) cfg.alpha = rng.Uniform(0.1, 0.9);
      cfg.beta = rng.Uniform(1.0, 8.0);
      cfg.scale = 4.0;
      SCOPED_TRACE(VariantName(v));
      ExpectGradientMatches(p, SupportQueries(s), cfg, s, w);
    }
  }
}

TEST(AdapterBackward, UniformLogitsGiveLogN) {
  // Queries orthogonal to every class row and equidistant from every key.
  const std::uint32_t n = 3, c = 6;
  ClassWeights w;
  w.dim = c;
  w.num_classes = n;
  w.class_names = {"a", "b", "c"};
  w.rows = Matrix<float>(n, c);
  SupportSet s;
  s.shots = 1;
  s.num_classes = n;
  s.keys = Matrix<double>(n, c);
  s.values = Matrix<double>(n, n);
  for (std::uint32_t j = 0; j < n; ++j) {
    w.rows(j, j) = 1.0f;
    s.keys(j, j) = 1.0;
    s.values(j, j) = 1.0;
    s.labels.push_back(j);
    s.ids.push_back(std::to_string(j));
  }
  AdapterParams zero = InitAdapter(c, 2, 0.0, 0);
  for (float& x : zero.w1.flat()) x = 0.0f;
  for (float& x : zero.w2.flat()) x = 0.0f;
  const std::vector<double> q1 = {0, 0, 0, 1, 0, 0}, q2 = {0, 0, 0, 0, 0.6, 0.8};
  const std::vector<TrainingQuery> batch = {{q1, 0, -1}, {q2, 2, -1}};
  const PredictorConfig cfg = PredictorConfig::For(Variant::kClapSPlus);
  EXPECT_NEAR(TrainingLoss(zero, batch, cfg, &s, w), std::log(3.0), 1e-6);
}

TEST(AdapterBackward, DuplicatedBatchKeepsMeanGradient) {
  Rng rng(37);
  const ClassWeights w = RandomWeights(rng, 3, 8);
  const SupportSet s = RandomSupport(rng, 3, 2, 8);
  const AdapterParams p = RandomAdapter(rng, 8, 2, 0.4);
  const PredictorConfig cfg = PredictorConfig::For(Variant::kClapSPlus);
  const auto once = SupportQueries(s);
  auto twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  const auto a = AdapterBackward(p, once, cfg, &s, w);
  const auto b = AdapterBackward(p, twice, cfg, &s, w);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  EXPECT_LE(testing::MaxAbsDiff({a.grads.w1.flat().begin(), a.grads.w1.flat().end()},
                                {b.grads.w1.flat().begin(), b.grads.w1.flat().end()}), 1e-7);
  EXPECT_LE(testing::MaxAbsDiff(a.grads.b1, b.grads.b1), 1e-7);
  EXPECT_LE(testing::MaxAbsDiff({a.grads.w2.flat().begin(), a.grads.w2.flat().end()},
                                {b.grads.w2.flat().begin(), b.grads.w2.flat().end()}), 1e-7);
  EXPECT_LE(testing::MaxAbsDiff(a.grads.b2, b.grads.b2), 1e-7);
}

TEST(AdapterBackward, Errors) {
  Rng rng(38);
  const ClassWeights w = RandomWeights(rng, 3, 8);
  const SupportSet s = RandomSupport(rng, 3, 2, 8);
  const AdapterParams p = RandomAdapter(rng, 8, 2, 0.4);
  const PredictorConfig cfg = PredictorConfig::For(Variant::kClapSPlus);
  EXPECT_ERROR(TrainingLoss(p, {}, cfg, &s, w), ErrorCode::kInvalidArgument);
  const std::vector<double> narrow(5, 0.2);
  const std::vector<TrainingQuery> bad = {{narrow, 0, -1}};
  EXPECT_ERROR(TrainingLoss(p, bad, cfg, &s, w), ErrorCode::kDimMismatch);
  EXPECT_ERROR(TrainingLoss(p, SupportQueries(s), cfg, nullptr, w), ErrorCode::kMissingSupport);
  // No support head, no support needed.
  EXPECT_NO_THROW(TrainingLoss(p, SupportQueries(s), PredictorConfig::For(Variant::kAdapterOnly), nullptr, w));
}

// ---- optimizer ----------------------------------------------------------

TEST(AdamW, ZeroGradientZeroDecayIsIdentity) {
  Rng rng(39);
  AdapterParams p = RandomAdapter(rng, 6, 2, 0.2);
  const AdapterParams before = p;
  TrainConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.0;
  AdamW opt(p, cfg);
  for (int i = 0; i < 5; ++i) opt.Step(p, AdapterGrads::ZerosLike(p));
  EXPECT_EQ(p, before);
  EXPECT_EQ(opt.steps(), 5u);
}

TEST(AdamW, MatchesScalarReference) {
  Rng rng(40);
  AdapterParams p = RandomAdapter(rng, 4, 2, 0.2);
  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.1;
  AdamW opt(p, cfg);

  // Reference state for b2 only, one scalar at a time.
  std::vector<double> ref(p.b2.begin(), p.b2.end()), m(4, 0), v(4, 0);
  for (int step = 1; step <= 4; ++step) {
    AdapterGrads g = AdapterGrads::ZerosLike(p);
    for (auto& x : g.b2) x = rng.Normal();
    for (std::size_t i = 0; i < 4; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g.b2[i];
      v[i] = 0.999 * v[i] + 0.001 * g.b2[i] * g.b2[i];
      const double mh = m[i] / (1 - std::pow(0.9, step)), vh = v[i] / (1 - std::pow(0.999, step));
      ref[i] = static_cast<float>(ref[i] * (1 - 0.01 * 0.1) - 0.01 * mh / (std::sqrt(vh) + 1e-8));
    }
    if (step == 1) {
      // First step moves each entry by about lr against its gradient.
      for (std::size_t i = 0; i < 4; ++i) {
        const double expected = p.b2[i] * (1 - 1e-3) - 0.01 * g.b2[i] / (std::abs(g.b2[i]) + 1e-8);
        AdapterParams q = p;
        AdamW fresh(q, cfg);
        fresh.Step(q, g);
        EXPECT_NEAR(q.b2[i], expected, 1e-7);
      }
    }
    opt.Step(p, g);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(p.b2[i], static_cast<float>(ref[i]));
  }
}

TEST(AdamW, InvalidConfig) {
  Rng rng(41);
  const AdapterParams p = RandomAdapter(rng, 4, 2, 0.2);
  TrainConfig cfg;
  cfg.lr = -1;
  EXPECT_ERROR(AdamW(p, cfg), ErrorCode::kInvalidArgument);
  cfg = {};
  cfg.batch_size = 0;
  EXPECT_ERROR(AdamW(p, cfg), ErrorCode::kInvalidArgument);
  cfg = {};
  cfg.beta2 = 1.0;
  EXPECT_ERROR(AdamW(p, cfg), ErrorCode::kInvalidArgument);
}

// ---- training loop ------------------------------------------------------

struct ShiftFixture {
  ClassWeights weights;
  SupportSet support;
};

ShiftFixture MakeFixture(std::uint64_t seed) {
  ShiftBenchmarkOptions o;
  o.seed = seed;
  auto [ds, w] = MakeShiftBenchmark(o);
  return {w, BuildSupport(SelectSplit(Normalize(ds), Split::kTrain), 8, seed)};
}

TEST(TrainAdapter, LossDoesNotIncreaseOnShiftFixture) {
  for (std::uint64_t seed : {0, 1, 2}) {
    const ShiftFixture f = MakeFixture(seed);
    TrainConfig cfg;
    cfg.seed = seed;
    const TrainResult r = TrainAdapter(f.support, f.weights, PredictorConfig::For(Variant::kClapSPlus),
                                       cfg, InitAdapter(64, 16, 0.2, seed));
    ASSERT_EQ(r.epoch_loss.size(), 20u);
    EXPECT_LE(r.epoch_loss.back(), r.epoch_loss.front());
  }
}

TEST(TrainAdapter, LargerRateLearnsTheShift) {
  const ShiftFixture f = MakeFixture(3);
  TrainConfig cfg;
  cfg.lr = 3e-2;
  const TrainResult r = TrainAdapter(f.support, f.weights, PredictorConfig::For(Variant::kAdapterOnly),
                                     cfg, InitAdapter(64, 16, 0.2, 3));
  EXPECT_LT(r.epoch_loss.back(), 0.5 * r.epoch_loss.front());
}

TEST(TrainAdapter, ZeroRateLeavesParamsBitIdentical) {
  const ShiftFixture f = MakeFixture(4);
  const AdapterParams init = InitAdapter(64, 16, 0.2, 4);
  for (double wd : {0.0, 0.01}) {
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.weight_decay = wd;
    cfg.epochs = 3;
    const TrainResult r = TrainAdapter(f.support, f.weights, PredictorConfig::For(Variant::kClapSPlus), cfg, init);
    EXPECT_EQ(r.params, init);
  }
}

TEST(TrainAdapter, SameSeedSameResult) {
  const ShiftFixture f = MakeFixture(5);
  TrainConfig cfg;
  cfg.lr = 1e-3;
  cfg.batch_size = 10;
  cfg.epochs = 4;
  cfg.seed = 9;
  const auto run = [&] {
    return TrainAdapter(f.support, f.weights, PredictorConfig::For(Variant::kClapSPlus), cfg,
                        InitAdapter(64, 16, 0.2, 1));
  };
  const TrainResult a = run(), b = run();
  EXPECT_EQ(a.params, b.params);
  EXPECT_EQ(a.epoch_loss, b.epoch_loss);
  cfg.seed = 10;
  EXPECT_NE(run().params, a.params);
}

TEST(TrainAdapter, RejectsVariantsWithoutAdapter) {
  const ShiftFixture f = MakeFixture(6);
  EXPECT_ERROR(TrainAdapter(f.support, f.weights, PredictorConfig::For(Variant::kClapS), TrainConfig{},
                            InitAdapter(64, 16, 0.2, 0)),
               ErrorCode::kInvalidArgument);
  EXPECT_ERROR(TrainAdapter(f.support, f.weights, PredictorConfig::For(Variant::kClapSPlus), TrainConfig{},
                            InitAdapter(32, 8, 0.2, 0)),
               ErrorCode::kDimMismatch);
}

}  // namespace
}  // namespace fsadapt

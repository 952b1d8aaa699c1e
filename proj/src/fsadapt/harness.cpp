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

#include "fsadapt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <set>

#include "fsadapt/clap_head.hpp"
#include "fsadapt/error.hpp"
#include "fsadapt/random.hpp"
#include "fsadapt/support_set.hpp"

namespace fsadapt {
namespace {

constexpr std::uint64_t kAdapterInitTag = 0xada;
constexpr std::uint64_t kPrototypeTag = 0x9e0;
constexpr std::uint64_t kSampleTag = 0x5a3;

using Clock = std::chrono::steady_clock;

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct LoadedDataset {
  std::string name;
  EmbeddingDataset train;
  EmbeddingDataset val;
  EmbeddingDataset test;
  ClassWeights weights;
};

LoadedDataset Prepare(std::string name, const EmbeddingDataset& raw, ClassWeights weights) {
  CheckLabelSpace(raw, weights);
  if (raw.class_names != weights.class_names) {
    Fail(ErrorCode::kLabelSpaceMismatch, "dataset '" + name + "' and its class weights name classes differently");
  }
  const EmbeddingDataset ds = Normalize(raw);
  return {std::move(name), SelectSplit(ds, Split::kTrain), SelectSplit(ds, Split::kVal),
          SelectSplit(ds, Split::kTest), std::move(weights)};
}

LoadedDataset Load(const DatasetRef& ref) {
  std::string name = ref.name.empty() ? ref.data.stem().string() : ref.name;
  return Prepare(std::move(name), LoadDataset(ref.data), LoadClassWeights(ref.weights));
}

bool NeedsSupportSet(Variant v) { return UsesSupportHead(v) || UsesAdapter(v); }

SupportSet MakeSupport(const EmbeddingDataset& train, Shots shots, std::uint64_t seed) {
  return shots.full ? BuildFullSupport(train) : BuildSupport(train, shots.k, seed);
}

PredictorConfig TrainingConfig(Variant v, const ExperimentSpec& spec) {
  PredictorConfig cfg = PredictorConfig::For(v);
  if (spec.train_alpha && !ForcedAlpha(v)) cfg.alpha = *spec.train_alpha;
  cfg.beta = spec.train_beta;
  cfg.scale = spec.scale;
  return cfg;
}

struct Trained {
  std::optional<AdapterParams> adapter;
  double seconds = 0.0;
};

Trained Train(Variant v, const SupportSet& support, const ClassWeights& weights,
              const ExperimentSpec& spec, std::uint64_t seed) {
  Trained out;
  if (!UsesAdapter(v)) return out;
  const std::uint32_t dim = weights.dim;
  const std::uint32_t hidden = spec.adapter.hidden == 0 ? DefaultHidden(dim) : spec.adapter.hidden;
  TrainConfig train_cfg = spec.train;
  train_cfg.seed = seed;
  const auto start = Clock::now();
  AdapterParams init = InitAdapter(dim, hidden, spec.adapter.residual_ratio, MixSeed(seed, kAdapterInitTag));
  out.adapter = TrainAdapter(support, weights, TrainingConfig(v, spec), train_cfg, std::move(init)).params;
  out.seconds = SecondsSince(start);
  return out;
}

RunRecord Evaluate(Variant v, const LoadedDataset& ds, const SupportSet* support,
                   const AdapterParams* adapter, const ExperimentSpec& spec) {
  PredictorConfig cfg = PredictorConfig::For(v);
  cfg.scale = spec.scale;
  const GridResult best =
      GridSearch(cfg, ds.val, adapter, support, ds.weights, spec.alpha_grid, spec.beta_grid);
  cfg.alpha = best.alpha;
  cfg.beta = best.beta;

  RunRecord r;
  r.dataset = ds.name;
  r.variant = VariantName(v);
  r.alpha = best.alpha;
  r.beta = best.beta;
  r.val_acc = best.val_accuracy;
  const auto start = Clock::now();
  const Predictor predictor(cfg, adapter, support, ds.weights);
  r.test_acc = predictor.Accuracy(ds.test);
  const double elapsed = SecondsSince(start);
  r.infer_ms = ds.test.records.empty() ? 0.0 : 1e3 * elapsed / static_cast<double>(ds.test.size());
  r.params = adapter != nullptr ? adapter->ParameterCount() : 0;
  return r;
}

double Median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::string Format(const char* fmt, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, value);
  return buf;
}

// Orthonormalizes `v` against `basis` in place; false if nothing is left.
bool OrthonormalizeAgainst(std::vector<double>& v, const std::vector<std::vector<double>>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) {
      const double proj = Dot(std::span<const double>(v), std::span<const double>(b));
      for (std::size_t c = 0; c < v.size(); ++c) v[c] -= proj * b[c];
    }
  }
  const double norm = Norm(std::span<const double>(v));
  if (norm < 1e-8) return false;
  for (double& x : v) x /= norm;
  return true;
}

std::vector<double> GaussianVector(Rng& rng, std::size_t dim) {
  std::vector<double> v(dim);
  for (double& x : v) x = rng.Normal();
  return v;
}

}  // namespace

Shots ParseShots(const std::string& text) {
  if (text == "full") return Shots::Full();
  std::size_t used = 0;
  unsigned long k = 0;
  try {
    k = std::stoul(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || k == 0 || k > 0xffffffffUL) {
    Fail(ErrorCode::kInvalidArgument, "shots must be a positive integer or 'full', got '" + text + "'");
  }
  return {static_cast<std::uint32_t>(k), false};
}

void ExperimentSpec::Validate() const {
  if (datasets.empty()) Fail(ErrorCode::kInvalidArgument, "experiment lists no datasets");
  if (variants.empty()) Fail(ErrorCode::kInvalidArgument, "experiment lists no variants");
  if (shots.empty()) Fail(ErrorCode::kInvalidArgument, "experiment lists no shot counts");
  if (seeds.empty()) Fail(ErrorCode::kInvalidArgument, "experiment lists no seeds");
  for (const Shots& s : shots) {
    if (!s.full && s.k == 0) Fail(ErrorCode::kInvalidArgument, "shot counts must be positive");
  }
  if (alpha_grid.empty() || beta_grid.empty()) Fail(ErrorCode::kEmptyGrid, "grids must be non-empty");
  for (double a : alpha_grid) {
    if (!(a >= 0.0 && a <= 1.0)) Fail(ErrorCode::kInvalidArgument, "alpha grid values must lie in [0, 1]");
  }
  for (double b : beta_grid) {
    if (!(b > 0.0)) Fail(ErrorCode::kInvalidArgument, "beta grid values must be positive");
  }
  if (!(scale > 0.0)) Fail(ErrorCode::kInvalidArgument, "scale must be positive");
  if (train_alpha && !(*train_alpha >= 0.0 && *train_alpha <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "alpha must lie in [0, 1]");
  }
  if (!(train_beta > 0.0)) Fail(ErrorCode::kInvalidArgument, "beta must be positive");
  if (!(adapter.residual_ratio >= 0.0 && adapter.residual_ratio <= 1.0)) {
    Fail(ErrorCode::kInvalidArgument, "residual ratio must lie in [0, 1]");
  }
  train.Validate();
}

std::vector<SummaryRow> Summarize(const std::vector<RunRecord>& runs) {
  std::vector<SummaryRow> rows;
  std::map<std::tuple<std::string, std::string, std::string>, std::vector<const RunRecord*>> groups;
  std::vector<std::tuple<std::string, std::string, std::string>> order;
  for (const RunRecord& r : runs) {
    auto key = std::make_tuple(r.dataset, r.variant, r.shots);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&r);
  }
  for (const auto& key : order) {
    const auto& members = groups.at(key);
    SummaryRow row;
    std::tie(row.dataset, row.variant, row.shots) = key;
    row.seeds = members.size();
    const double n = static_cast<double>(members.size());
    for (const RunRecord* r : members) {
      row.mean_acc += r->test_acc;
      row.train_s += r->train_s;
      row.infer_ms += r->infer_ms;
    }
    row.mean_acc /= n;
    row.train_s /= n;
    row.infer_ms /= n;
    double sq = 0.0;
    for (const RunRecord* r : members) sq += (r->test_acc - row.mean_acc) * (r->test_acc - row.mean_acc);
    row.std_acc = std::sqrt(sq / n);
    row.params = members.front()->params;
    rows.push_back(row);
  }
  return rows;
}

ResultTable RunExperiment(const ExperimentSpec& spec) {
  spec.Validate();
  std::vector<LoadedDataset> datasets;
  for (const DatasetRef& ref : spec.datasets) datasets.push_back(Load(ref));

  ResultTable table;
  for (const LoadedDataset& ds : datasets) {
    for (Variant v : spec.variants) {
      const std::vector<Shots> shot_list =
          NeedsSupportSet(v) ? spec.shots : std::vector<Shots>{Shots{0, false}};
      for (const Shots& shots : shot_list) {
        for (std::uint64_t seed : spec.seeds) {
          std::optional<SupportSet> support;
          if (NeedsSupportSet(v)) support = MakeSupport(ds.train, shots, seed);
          const Trained trained = support ? Train(v, *support, ds.weights, spec, seed) : Trained{};
          RunRecord r = Evaluate(v, ds, support ? &*support : nullptr,
                                 trained.adapter ? &*trained.adapter : nullptr, spec);
          r.shots = shots.Label();
          r.seed = seed;
          r.train_s = trained.seconds;
          table.runs.push_back(std::move(r));
        }
      }
    }
  }
  table.rows = Summarize(table.runs);
  return table;
}

ResultTable RunJointVsIndependent(const ExperimentSpec& spec) {
  spec.Validate();
  std::vector<LoadedDataset> datasets;
  for (const DatasetRef& ref : spec.datasets) datasets.push_back(Load(ref));
  for (const LoadedDataset& ds : datasets) {
    if (ds.weights.class_names != datasets.front().weights.class_names ||
        ds.weights.dim != datasets.front().weights.dim) {
      Fail(ErrorCode::kLabelSpaceMismatch,
           "dataset '" + ds.name + "' does not share the label space of '" + datasets.front().name + "'");
    }
  }

  std::vector<RunRecord> independent, joint;
  for (Variant v : spec.variants) {
    if (!UsesAdapter(v)) {
      Fail(ErrorCode::kInvalidArgument,
           std::string(VariantName(v)) + " has no adapter to train jointly");
    }
    for (const Shots& shots : spec.shots) {
      for (std::uint64_t seed : spec.seeds) {
        std::vector<SupportSet> supports;
        for (const LoadedDataset& ds : datasets) supports.push_back(MakeSupport(ds.train, shots, seed));

        for (std::size_t d = 0; d < datasets.size(); ++d) {
          const Trained trained = Train(v, supports[d], datasets[d].weights, spec, seed);
          RunRecord r = Evaluate(v, datasets[d], &supports[d], &*trained.adapter, spec);
          r.variant += "/independent";
          r.shots = shots.Label();
          r.seed = seed;
          r.train_s = trained.seconds;
          independent.push_back(std::move(r));
        }

        SupportSet pooled = supports.front();
        for (std::size_t d = 1; d < supports.size(); ++d) pooled = ConcatSupport(pooled, supports[d]);
        const Trained trained = Train(v, pooled, datasets.front().weights, spec, seed);
        for (std::size_t d = 0; d < datasets.size(); ++d) {
          RunRecord r = Evaluate(v, datasets[d], &supports[d], &*trained.adapter, spec);
          r.variant += "/joint";
          r.shots = shots.Label();
          r.seed = seed;
          r.train_s = trained.seconds;
          joint.push_back(std::move(r));
        }
      }
    }
  }
  ResultTable table;
  table.runs = std::move(independent);
  table.runs.insert(table.runs.end(), joint.begin(), joint.end());
  table.rows = Summarize(table.runs);
  return table;
}

std::size_t TrainableParameters(Variant variant, std::uint32_t dim, std::uint32_t hidden) {
  if (!UsesAdapter(variant)) return 0;
  return 2 * static_cast<std::size_t>(dim) * hidden + hidden + dim;
}

Timing TimeVariant(Variant variant, const EmbeddingDataset& ds, const ClassWeights& weights,
                   Shots shots, const ExperimentSpec& settings, int repetitions) {
  if (repetitions <= 0) Fail(ErrorCode::kInvalidArgument, "repetitions must be positive");
  const LoadedDataset loaded = Prepare("timing", ds, weights);
  const EmbeddingDataset& queries = loaded.test.records.empty() ? loaded.train : loaded.test;
  const std::uint64_t seed = settings.seeds.empty() ? 0 : settings.seeds.front();

  std::vector<double> train_times, infer_times;
  std::size_t params = 0;
  for (int rep = 0; rep < repetitions; ++rep) {
    std::optional<SupportSet> support;
    if (NeedsSupportSet(variant)) support = MakeSupport(loaded.train, shots, seed);
    const Trained trained = support ? Train(variant, *support, loaded.weights, settings, seed) : Trained{};
    train_times.push_back(trained.seconds);
    params = trained.adapter ? trained.adapter->ParameterCount() : 0;

    PredictorConfig cfg = TrainingConfig(variant, settings);
    const auto start = Clock::now();
    const Predictor predictor(cfg, trained.adapter ? &*trained.adapter : nullptr,
                              support ? &*support : nullptr, loaded.weights);
    volatile std::size_t sink = 0;
    for (const Record& r : queries.records) sink = sink + predictor.Predict(ToDouble(r.vector));
    const double elapsed = SecondsSince(start);
    infer_times.push_back(queries.records.empty()
                              ? 0.0
                              : 1e3 * elapsed / static_cast<double>(queries.size()));
  }
  return {Median(train_times), Median(infer_times), params};
}

std::pair<EmbeddingDataset, ClassWeights> MakeShiftBenchmark(const ShiftBenchmarkOptions& o) {
  if (o.num_classes == 0 || o.dim < o.num_classes) {
    Fail(ErrorCode::kBadDimension, "need dim >= n_classes > 0, got dim " + std::to_string(o.dim) +
                                       " and " + std::to_string(o.num_classes) + " classes");
  }
  if (o.shots_available == 0) Fail(ErrorCode::kInvalidArgument, "shots_available must be positive");
  if (!(o.shift >= 0.0 && o.shift <= 1.0)) Fail(ErrorCode::kInvalidArgument, "shift must lie in [0, 1]");
  if (!(o.noise >= 0.0)) Fail(ErrorCode::kInvalidArgument, "noise must be non-negative");

  const std::size_t n = o.num_classes;
  const std::size_t dim = o.dim;
  Rng structure(MixSeed(o.seed, kPrototypeTag));

  std::vector<std::vector<double>> prototypes;
  while (prototypes.size() < n) {
    auto v = GaussianVector(structure, dim);
    if (OrthonormalizeAgainst(v, prototypes)) prototypes.push_back(std::move(v));
  }
  std::vector<std::vector<double>> targets;
  auto basis = prototypes;
  while (targets.size() < n) {
    auto v = GaussianVector(structure, dim);
    if (dim >= 2 * n) {
      if (!OrthonormalizeAgainst(v, basis)) continue;
      basis.push_back(v);
    } else if (!OrthonormalizeAgainst(v, {})) {
      continue;
    }
    targets.push_back(std::move(v));
  }

  EmbeddingDataset ds;
  ds.dim = o.dim;
  ds.num_classes = o.num_classes;
  for (std::size_t j = 0; j < n; ++j) {
    char name[32];
    std::snprintf(name, sizeof(name), "class_%02zu", j);
    ds.class_names.emplace_back(name);
  }

  ClassWeights weights;
  weights.dim = o.dim;
  weights.num_classes = o.num_classes;
  weights.class_names = ds.class_names;
  weights.prompt_template = "synthetic prototype";
  weights.rows = Matrix<float>(n, dim);
  for (std::size_t j = 0; j < n; ++j) {
    const double norm = Norm(std::span<const double>(prototypes[j]));
    for (std::size_t c = 0; c < dim; ++c) weights.rows(j, c) = static_cast<float>(prototypes[j][c] / norm);
  }

  const double angle = o.shift * std::numbers::pi / 2.0;
  const std::uint32_t counts[3] = {
      o.shots_available,
      std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(o.shots_available / 7.0))),
      std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::lround(2.0 * o.shots_available / 7.0)))};
  Rng samples(MixSeed(o.domain_seed.value_or(o.seed), kSampleTag));
  std::vector<double> v(dim);
  for (std::size_t j = 0; j < n; ++j) {
    for (Split split : {Split::kTrain, Split::kVal, Split::kTest}) {
      for (std::uint32_t i = 0; i < counts[static_cast<int>(split)]; ++i) {
        double norm = 0.0;
        do {
          for (std::size_t c = 0; c < dim; ++c) {
            v[c] = std::cos(angle) * prototypes[j][c] + std::sin(angle) * targets[j][c] +
                   o.noise * samples.Normal();
          }
          norm = Norm(std::span<const double>(v));
        } while (norm < 1e-12);
        Record r;
        r.id = ds.class_names[j] + "-" + SplitName(split) + "-" + std::to_string(i);
        r.split = split;
        r.label = static_cast<std::uint32_t>(j);
        r.vector.resize(dim);
        for (std::size_t c = 0; c < dim; ++c) r.vector[c] = static_cast<float>(v[c] / norm);
        ds.records.push_back(std::move(r));
      }
    }
  }
  ds.Validate();
  weights.Validate();
  return {std::move(ds), std::move(weights)};
}

void WriteCsv(const ResultTable& table, std::ostream& out, bool include_timing) {
  out << "dataset,variant,shots,seed,alpha,beta,val_acc,test_acc,train_s,infer_ms,params\n";
  for (const RunRecord& r : table.runs) {
    out << r.dataset << ',' << r.variant << ',' << r.shots << ',' << r.seed << ','
        << Format("%.6g", r.alpha) << ',' << Format("%.6g", r.beta) << ','
        << Format("%.6f", r.val_acc) << ',' << Format("%.6f", r.test_acc) << ',';
    if (include_timing) out << Format("%.6f", r.train_s) << ',' << Format("%.6f", r.infer_ms);
    else out << ',';
    out << ',' << r.params << '\n';
  }
}

void WriteMarkdown(const ResultTable& table, std::ostream& out) {
  const std::vector<std::string> header = {"dataset", "variant", "shots", "acc (mean ± std)",
                                           "train s", "infer ms/query", "params"};
  std::vector<std::vector<std::string>> cells;
  for (const SummaryRow& row : table.rows) {
    cells.push_back({row.dataset, row.variant, row.shots,
                     Format("%.1f", 100.0 * row.mean_acc) + " ± " + Format("%.1f", 100.0 * row.std_acc),
                     Format("%.3f", row.train_s), Format("%.4f", row.infer_ms),
                     std::to_string(row.params)});
  }
  // "±" is two bytes but one column.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = width(header[c]);
    for (const auto& line : cells) widths[c] = std::max(widths[c], width(line[c]));
  }
  auto emit = [&](const std::vector<std::string>& line) {
    out << '|';
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << ' ' << line[c] << std::string(widths[c] - width(line[c]), ' ') << " |";
    }
    out << '\n';
  };
  emit(header);
  out << '|';
  for (std::size_t w : widths) out << std::string(w + 2, '-') << '|';
  out << '\n';
  for (const auto& line : cells) emit(line);
  out << "\nstd is the population standard deviation over seeds.\n";
}

}  // namespace fsadapt

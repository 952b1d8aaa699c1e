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

#include "fsadapt.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <sstream>
#include <string>

#include "fsadapt/adapter.hpp"
#include "fsadapt/adapter_train.hpp"
#include "fsadapt/clap_head.hpp"
#include "fsadapt/embedding_store.hpp"
#include "fsadapt/error.hpp"
#include "fsadapt/harness.hpp"
#include "fsadapt/predictor.hpp"
#include "fsadapt/support_set.hpp"
#include "fsadapt/variant.hpp"

struct fsa_dataset {
  fsadapt::EmbeddingDataset ds;
};
struct fsa_weights {
  fsadapt::ClassWeights w;
};
struct fsa_support {
  fsadapt::SupportSet s;
};
struct fsa_adapter {
  fsadapt::AdapterParams p;
};
struct fsa_result {
  fsadapt::ResultTable table;
};

namespace {

using fsadapt::ErrorCode;
using fsadapt::Fail;

thread_local std::string g_last_error;

template <typename F>
fsa_status Guard(F&& body) {
  try {
    body();
    return FSA_OK;
  } catch (const fsadapt::Error& e) {
    g_last_error = e.what();
    return static_cast<fsa_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FSA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FSA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return FSA_ERR_INTERNAL;
  }
}

template <typename T>
void Require(const T* p, const char* what) {
  if (p == nullptr) Fail(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

char* CopyString(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fsadapt::Variant ToVariant(fsa_variant v) {
  const int i = static_cast<int>(v);
  if (i < 0 || i > static_cast<int>(fsadapt::Variant::kClapSPlus)) {
    Fail(ErrorCode::kInvalidArgument, "unknown variant id " + std::to_string(i));
  }
  return static_cast<fsadapt::Variant>(i);
}

fsadapt::PredictorConfig ToConfig(const fsa_predictor_config* cfg) {
  Require(cfg, "predictor config");
  fsadapt::PredictorConfig out;
  out.variant = ToVariant(cfg->variant);
  out.alpha = cfg->alpha;
  out.beta = cfg->beta;
  out.scale = cfg->scale;
  return out;
}

fsadapt::Split ToSplit(fsa_split split) {
  switch (split) {
    case FSA_SPLIT_TRAIN: return fsadapt::Split::kTrain;
    case FSA_SPLIT_VAL: return fsadapt::Split::kVal;
    case FSA_SPLIT_TEST: return fsadapt::Split::kTest;
  }
  Fail(ErrorCode::kInvalidArgument, "unknown split");
}

void CheckWidth(size_t given, size_t expected, const char* what) {
  if (given != expected) {
    Fail(ErrorCode::kDimMismatch, std::string(what) + " width " + std::to_string(given) +
                                      ", expected " + std::to_string(expected));
  }
}

void CopyScores(const fsadapt::LogitVector& logits, double* scores, size_t n) {
  Require(scores, "scores");
  CheckWidth(n, logits.scores.size(), "score buffer");
  std::copy(logits.scores.begin(), logits.scores.end(), scores);
}

fsadapt::ExperimentSpec ParseSpec(const char* spec_json) {
  Require(spec_json, "experiment spec");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(spec_json);
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kBadFormat, std::string("experiment spec is not valid JSON: ") + e.what());
  }
  return fsadapt::ExperimentSpecFromJson(j);
}

}  // namespace

extern "C" {

const char* fsa_version(void) { return "0.1.0"; }

const char* fsa_status_name(fsa_status status) {
  if (status == FSA_ERR_INTERNAL) return "Internal";
  return fsadapt::ErrorCodeName(static_cast<ErrorCode>(status));
}

const char* fsa_last_error_message(void) { return g_last_error.c_str(); }

void fsa_string_free(char* s) { std::free(s); }

fsa_status fsa_variant_parse(const char* name, fsa_variant* out) {
  return Guard([&] {
    Require(name, "variant name");
    Require(out, "out");
    *out = static_cast<fsa_variant>(fsadapt::ParseVariant(name));
  });
}

const char* fsa_variant_name(fsa_variant variant) {
  const int i = static_cast<int>(variant);
  if (i < 0 || i > static_cast<int>(fsadapt::Variant::kClapSPlus)) return "?";
  return fsadapt::VariantName(static_cast<fsadapt::Variant>(i));
}

int fsa_variant_uses_adapter(fsa_variant variant) {
  return fsadapt::UsesAdapter(static_cast<fsadapt::Variant>(variant)) ? 1 : 0;
}

int fsa_variant_uses_support(fsa_variant variant) {
  return fsadapt::UsesSupportHead(static_cast<fsadapt::Variant>(variant)) ? 1 : 0;
}

int fsa_variant_forced_alpha(fsa_variant variant, double* alpha) {
  const auto forced = fsadapt::ForcedAlpha(static_cast<fsadapt::Variant>(variant));
  if (!forced) return 0;
  if (alpha != nullptr) *alpha = *forced;
  return 1;
}

void fsa_predictor_config_default(fsa_variant variant, fsa_predictor_config* out) {
  if (out == nullptr) return;
  const auto cfg = fsadapt::PredictorConfig::For(static_cast<fsadapt::Variant>(variant));
  *out = {variant, cfg.alpha, cfg.beta, cfg.scale};
}

fsa_status fsa_predictor_config_validate(const fsa_predictor_config* cfg) {
  return Guard([&] { ToConfig(cfg).Validate(); });
}

void fsa_train_config_default(fsa_train_config* out) {
  if (out == nullptr) return;
  const fsadapt::TrainConfig cfg;
  *out = {cfg.lr, cfg.batch_size, cfg.epochs, cfg.weight_decay, cfg.seed};
}

void fsa_adapter_shape_default(fsa_adapter_shape* out) {
  if (out == nullptr) return;
  const fsadapt::AdapterShape shape;
  *out = {shape.hidden, shape.residual_ratio};
}

void fsa_shift_options_default(fsa_shift_options* out) {
  if (out == nullptr) return;
  const fsadapt::ShiftBenchmarkOptions o;
  *out = {o.num_classes, o.dim, o.shots_available, o.shift, o.noise, o.seed, 0, 0};
}

size_t fsa_default_alpha_grid(double* out, size_t capacity) {
  const auto grid = fsadapt::DefaultAlphaGrid();
  for (size_t i = 0; out != nullptr && i < grid.size() && i < capacity; ++i) out[i] = grid[i];
  return grid.size();
}

size_t fsa_default_beta_grid(double* out, size_t capacity) {
  const auto grid = fsadapt::DefaultBetaGrid();
  for (size_t i = 0; out != nullptr && i < grid.size() && i < capacity; ++i) out[i] = grid[i];
  return grid.size();
}

fsa_status fsa_dataset_load(const char* path, fsa_dataset** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new fsa_dataset{fsadapt::LoadDataset(path)};
  });
}

fsa_status fsa_dataset_save(const fsa_dataset* ds, const char* path) {
  return Guard([&] {
    Require(ds, "dataset");
    Require(path, "path");
    fsadapt::SaveDataset(ds->ds, path);
  });
}

void fsa_dataset_free(fsa_dataset* ds) { delete ds; }

uint32_t fsa_dataset_dim(const fsa_dataset* ds) { return ds ? ds->ds.dim : 0; }
uint32_t fsa_dataset_num_classes(const fsa_dataset* ds) { return ds ? ds->ds.num_classes : 0; }
size_t fsa_dataset_size(const fsa_dataset* ds) { return ds ? ds->ds.size() : 0; }

size_t fsa_dataset_split_count(const fsa_dataset* ds, fsa_split split) {
  if (ds == nullptr) return 0;
  size_t n = 0;
  for (const auto& r : ds->ds.records) n += static_cast<int>(r.split) == static_cast<int>(split);
  return n;
}

const char* fsa_dataset_class_name(const fsa_dataset* ds, uint32_t index) {
  if (ds == nullptr || index >= ds->ds.class_names.size()) return nullptr;
  return ds->ds.class_names[index].c_str();
}

fsa_status fsa_dataset_record(const fsa_dataset* ds, size_t index, float* vector, uint32_t* label,
                              fsa_split* split) {
  return Guard([&] {
    Require(ds, "dataset");
    if (index >= ds->ds.size()) Fail(ErrorCode::kInvalidArgument, "record index out of range");
    const auto& r = ds->ds.records[index];
    if (vector != nullptr) std::copy(r.vector.begin(), r.vector.end(), vector);
    if (label != nullptr) *label = r.label;
    if (split != nullptr) *split = static_cast<fsa_split>(r.split);
  });
}

fsa_status fsa_dataset_normalize(const fsa_dataset* ds, fsa_dataset** out) {
  return Guard([&] {
    Require(ds, "dataset");
    Require(out, "out");
    *out = new fsa_dataset{fsadapt::Normalize(ds->ds)};
  });
}

fsa_status fsa_dataset_select_split(const fsa_dataset* ds, fsa_split split, fsa_dataset** out) {
  return Guard([&] {
    Require(ds, "dataset");
    Require(out, "out");
    *out = new fsa_dataset{fsadapt::SelectSplit(ds->ds, ToSplit(split))};
  });
}

fsa_status fsa_weights_load(const char* path, fsa_weights** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new fsa_weights{fsadapt::LoadClassWeights(path)};
  });
}

fsa_status fsa_weights_save(const fsa_weights* w, const char* path) {
  return Guard([&] {
    Require(w, "class weights");
    Require(path, "path");
    fsadapt::SaveClassWeights(w->w, path);
  });
}

void fsa_weights_free(fsa_weights* w) { delete w; }
uint32_t fsa_weights_dim(const fsa_weights* w) { return w ? w->w.dim : 0; }
uint32_t fsa_weights_num_classes(const fsa_weights* w) { return w ? w->w.num_classes : 0; }
const char* fsa_weights_prompt_template(const fsa_weights* w) {
  return w ? w->w.prompt_template.c_str() : nullptr;
}

const char* fsa_weights_class_name(const fsa_weights* w, uint32_t index) {
  if (w == nullptr || index >= w->w.class_names.size()) return nullptr;
  return w->w.class_names[index].c_str();
}

fsa_status fsa_clap_logits(const fsa_weights* w, const double* u, size_t dim, double scale,
                           double* scores, size_t num_classes) {
  return Guard([&] {
    Require(w, "class weights");
    Require(u, "u");
    CopyScores(fsadapt::ClapLogits({u, dim}, w->w, scale), scores, num_classes);
  });
}

fsa_status fsa_zero_shot_accuracy(const fsa_dataset* test, const fsa_weights* w, double scale,
                                  double* accuracy) {
  return Guard([&] {
    Require(test, "dataset");
    Require(w, "class weights");
    Require(accuracy, "accuracy");
    *accuracy = fsadapt::ZeroShotAccuracy(test->ds, w->w, scale);
  });
}

fsa_status fsa_support_build(const fsa_dataset* train, uint32_t shots, uint64_t seed,
                             fsa_support** out) {
  return Guard([&] {
    Require(train, "dataset");
    Require(out, "out");
    *out = new fsa_support{shots == 0 ? fsadapt::BuildFullSupport(train->ds)
                                      : fsadapt::BuildSupport(train->ds, shots, seed)};
  });
}

void fsa_support_free(fsa_support* s) { delete s; }
size_t fsa_support_rows(const fsa_support* s) { return s ? s->s.size() : 0; }

fsa_status fsa_support_logits(const fsa_support* s, const double* u, size_t dim, double beta,
                              double* scores, size_t num_classes) {
  return Guard([&] {
    Require(s, "support set");
    Require(u, "u");
    CopyScores(fsadapt::SupportLogits({u, dim}, s->s, beta), scores, num_classes);
  });
}

fsa_status fsa_support_accuracy(const fsa_dataset* test, const fsa_support* s, double beta,
                                double* accuracy) {
  return Guard([&] {
    Require(test, "dataset");
    Require(s, "support set");
    Require(accuracy, "accuracy");
    *accuracy = fsadapt::SupportAccuracy(test->ds, s->s, beta);
  });
}

fsa_status fsa_adapter_init(uint32_t dim, const fsa_adapter_shape* shape, uint64_t seed,
                            fsa_adapter** out) {
  return Guard([&] {
    Require(out, "out");
    fsadapt::AdapterShape s;
    if (shape != nullptr) s = {shape->hidden, shape->residual_ratio};
    const uint32_t hidden = s.hidden == 0 ? fsadapt::DefaultHidden(dim) : s.hidden;
    *out = new fsa_adapter{fsadapt::InitAdapter(dim, hidden, s.residual_ratio, seed)};
  });
}

fsa_status fsa_adapter_load(const char* path, fsa_adapter** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new fsa_adapter{fsadapt::LoadAdapter(path)};
  });
}

fsa_status fsa_adapter_save(const fsa_adapter* a, const char* path) {
  return Guard([&] {
    Require(a, "adapter");
    Require(path, "path");
    fsadapt::SaveAdapter(a->p, path);
  });
}

void fsa_adapter_free(fsa_adapter* a) { delete a; }
uint32_t fsa_adapter_dim(const fsa_adapter* a) { return a ? a->p.dim : 0; }
uint32_t fsa_adapter_hidden(const fsa_adapter* a) { return a ? a->p.hidden : 0; }
double fsa_adapter_residual_ratio(const fsa_adapter* a) { return a ? a->p.residual_ratio : 0.0; }
uint64_t fsa_adapter_parameter_count(const fsa_adapter* a) { return a ? a->p.ParameterCount() : 0; }

fsa_status fsa_adapter_forward(const fsa_adapter* a, const double* u0, size_t dim, double* out) {
  return Guard([&] {
    Require(a, "adapter");
    Require(u0, "u0");
    Require(out, "out");
    const auto f = fsadapt::AdapterForward(a->p, {u0, dim});
    std::copy(f.begin(), f.end(), out);
  });
}

fsa_status fsa_adapter_train(fsa_adapter* adapter, const fsa_support* support, const fsa_weights* w,
                             const fsa_predictor_config* cfg, const fsa_train_config* train,
                             double* epoch_loss) {
  return Guard([&] {
    Require(adapter, "adapter");
    Require(support, "support set");
    Require(w, "class weights");
    Require(train, "train config");
    fsadapt::TrainConfig tc;
    tc.lr = train->lr;
    tc.batch_size = train->batch_size;
    tc.epochs = train->epochs;
    tc.weight_decay = train->weight_decay;
    tc.seed = train->seed;
    auto result = fsadapt::TrainAdapter(support->s, w->w, ToConfig(cfg), tc, adapter->p);
    adapter->p = std::move(result.params);
    if (epoch_loss != nullptr) std::copy(result.epoch_loss.begin(), result.epoch_loss.end(), epoch_loss);
  });
}

fsa_status fsa_final_logits(const fsa_predictor_config* cfg, const double* u0, size_t dim,
                            const fsa_adapter* adapter, const fsa_support* support,
                            const fsa_weights* w, double* scores, size_t num_classes) {
  return Guard([&] {
    Require(u0, "u0");
    Require(w, "class weights");
    CopyScores(fsadapt::FinalLogits(ToConfig(cfg), {u0, dim}, adapter ? &adapter->p : nullptr,
                                    support ? &support->s : nullptr, w->w),
               scores, num_classes);
  });
}

fsa_status fsa_evaluate(const fsa_predictor_config* cfg, const fsa_dataset* ds,
                        const fsa_adapter* adapter, const fsa_support* support,
                        const fsa_weights* w, double* accuracy) {
  return Guard([&] {
    Require(ds, "dataset");
    Require(w, "class weights");
    Require(accuracy, "accuracy");
    const fsadapt::Predictor predictor(ToConfig(cfg), adapter ? &adapter->p : nullptr,
                                       support ? &support->s : nullptr, w->w);
    *accuracy = predictor.Accuracy(ds->ds);
  });
}

fsa_status fsa_grid_search(const fsa_predictor_config* cfg_template, const fsa_dataset* val,
                           const fsa_adapter* adapter, const fsa_support* support,
                           const fsa_weights* w, const double* alphas, size_t num_alphas,
                           const double* betas, size_t num_betas, fsa_grid_result* out) {
  return Guard([&] {
    Require(val, "dataset");
    Require(w, "class weights");
    Require(out, "out");
    if ((alphas == nullptr && num_alphas > 0) || (betas == nullptr && num_betas > 0)) {
      Fail(ErrorCode::kInvalidArgument, "grid pointer is NULL");
    }
    const auto best = fsadapt::GridSearch(
        ToConfig(cfg_template), val->ds, adapter ? &adapter->p : nullptr,
        support ? &support->s : nullptr, w->w, std::span<const double>(alphas, num_alphas),
        std::span<const double>(betas, num_betas));
    *out = {best.alpha, best.beta, best.val_accuracy};
  });
}

fsa_status fsa_make_shift_benchmark(const fsa_shift_options* options, fsa_dataset** ds,
                                    fsa_weights** w) {
  return Guard([&] {
    Require(options, "options");
    Require(ds, "dataset out");
    Require(w, "weights out");
    fsadapt::ShiftBenchmarkOptions o;
    o.num_classes = options->num_classes;
    o.dim = options->dim;
    o.shots_available = options->shots_available;
    o.shift = options->shift;
    o.noise = options->noise;
    o.seed = options->seed;
    if (options->has_domain_seed) o.domain_seed = options->domain_seed;
    auto [data, weights] = fsadapt::MakeShiftBenchmark(o);
    auto* data_handle = new fsa_dataset{std::move(data)};
    try {
      *w = new fsa_weights{std::move(weights)};
    } catch (...) {
      delete data_handle;
      throw;
    }
    *ds = data_handle;
  });
}

fsa_status fsa_experiment_spec_resolve(const char* spec_json, char** out_json) {
  return Guard([&] {
    Require(out_json, "out");
    *out_json = CopyString(fsadapt::ExperimentSpecToJson(ParseSpec(spec_json)).dump(2));
  });
}

fsa_status fsa_experiment_run(const char* spec_json, fsa_result** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new fsa_result{fsadapt::RunExperiment(ParseSpec(spec_json))};
  });
}

fsa_status fsa_joint_run(const char* spec_json, fsa_result** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new fsa_result{fsadapt::RunJointVsIndependent(ParseSpec(spec_json))};
  });
}

void fsa_result_free(fsa_result* r) { delete r; }
size_t fsa_result_run_count(const fsa_result* r) { return r ? r->table.runs.size() : 0; }

fsa_status fsa_result_csv(const fsa_result* r, int include_timing, char** out) {
  return Guard([&] {
    Require(r, "result");
    Require(out, "out");
    std::ostringstream csv;
    fsadapt::WriteCsv(r->table, csv, include_timing != 0);
    *out = CopyString(csv.str());
  });
}

fsa_status fsa_result_markdown(const fsa_result* r, char** out) {
  return Guard([&] {
    Require(r, "result");
    Require(out, "out");
    std::ostringstream md;
    fsadapt::WriteMarkdown(r->table, md);
    *out = CopyString(md.str());
  });
}

fsa_status fsa_result_summary_json(const fsa_result* r, char** out) {
  return Guard([&] {
    Require(r, "result");
    Require(out, "out");
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r->table.rows) {
      rows.push_back({{"dataset", row.dataset},
                      {"variant", row.variant},
                      {"shots", row.shots},
                      {"seeds", row.seeds},
                      {"mean_acc", row.mean_acc},
                      {"std_acc", row.std_acc},
                      {"train_s", row.train_s},
                      {"infer_ms", row.infer_ms},
                      {"params", row.params}});
    }
    *out = CopyString(rows.dump());
  });
}

fsa_status fsa_time_variant(fsa_variant variant, const fsa_dataset* ds, const fsa_weights* w,
                            uint32_t shots, const char* settings_json, int repetitions,
                            fsa_timing* out) {
  return Guard([&] {
    Require(ds, "dataset");
    Require(w, "class weights");
    Require(out, "out");
    const fsadapt::ExperimentSpec settings =
        settings_json != nullptr ? ParseSpec(settings_json) : fsadapt::ExperimentSpec{};
    const fsadapt::Shots s = shots == 0 ? fsadapt::Shots::Full() : fsadapt::Shots{shots, false};
    const auto t = fsadapt::TimeVariant(ToVariant(variant), ds->ds, w->w, s, settings, repetitions);
    *out = {t.train_seconds, t.infer_ms_per_query, t.params};
  });
}

}  // extern "C"

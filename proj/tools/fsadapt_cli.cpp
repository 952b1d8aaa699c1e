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

// fsadapt command-line front end. Links only the C interface.
//
// Exit status: 0 on success, 1 on a usage error (bad flags, a value a variant
// does not allow), 2 when input data fails to load or validate.

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsadapt.h"
#include "json.hpp"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Failure reported by a library call or by the CLI itself.
struct CliError {
  int exit_code;
  std::string message;
};

int ExitCodeFor(fsa_status status) {
  switch (status) {
    case FSA_ERR_VARIANT_CONSTRAINT:
    case FSA_ERR_INVALID_ARGUMENT:
    case FSA_ERR_EMPTY_GRID:
      return kExitUsage;
    default:
      return kExitData;
  }
}

void Check(fsa_status status) {
  if (status != FSA_OK) throw CliError{ExitCodeFor(status), fsa_last_error_message()};
}

[[noreturn]] void UsageError(const std::string& message) { throw CliError{kExitUsage, message}; }

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Dataset = std::unique_ptr<fsa_dataset, Deleter<fsa_dataset, fsa_dataset_free>>;
using Weights = std::unique_ptr<fsa_weights, Deleter<fsa_weights, fsa_weights_free>>;
using Support = std::unique_ptr<fsa_support, Deleter<fsa_support, fsa_support_free>>;
using Adapter = std::unique_ptr<fsa_adapter, Deleter<fsa_adapter, fsa_adapter_free>>;
using Result = std::unique_ptr<fsa_result, Deleter<fsa_result, fsa_result_free>>;

std::string TakeString(char* s) {
  std::string out(s);
  fsa_string_free(s);
  return out;
}

// Built-in defaults, read from the library so help text cannot drift.
struct Defaults {
  fsa_train_config train_cfg{};
  fsa_adapter_shape adapter{};
  fsa_shift_options shift{};
  json spec;

  Defaults() {
    fsa_train_config_default(&train_cfg);
    fsa_adapter_shape_default(&adapter);
    fsa_shift_options_default(&shift);
    char* resolved = nullptr;
    Check(fsa_experiment_spec_resolve("{}", &resolved));
    spec = json::parse(TakeString(resolved));
  }
};

const Defaults& GetDefaults() {
  static const Defaults d;
  return d;
}

std::string ShotsText(const json& shots) {
  std::string out;
  for (const json& s : shots) {
    if (!out.empty()) out += ",";
    out += s.is_string() ? s.get<std::string>() : std::to_string(s.get<int>());
  }
  return out;
}

std::string JoinNumbers(const json& values) {
  std::string out;
  for (const json& v : values) {
    if (!out.empty()) out += ",";
    std::ostringstream s;
    s << v.get<double>();
    out += s.str();
  }
  return out;
}

// Flags shared by the model subcommands. Optional members are only applied
// over the config file when the flag was given.
struct ModelFlags {
  std::string config;
  std::vector<std::string> data;
  std::vector<std::string> weights;
  std::vector<std::string> variants;
  std::vector<std::string> shots;
  std::vector<std::uint64_t> seeds;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> scale;
  std::optional<std::uint32_t> hidden;
  std::optional<double> residual;
  std::optional<double> lr;
  std::optional<std::uint32_t> epochs;
  std::optional<std::uint32_t> batch_size;
  std::optional<double> weight_decay;
  std::string out;
};

// `multi` selects list-valued --variant/--shots/--seed for whole experiments.
void AddModelFlags(CLI::App* cmd, ModelFlags& f, bool multi) {
  const Defaults& d = GetDefaults();
  cmd->add_option("--config", f.config, "JSON experiment spec; flags override its fields")
      ->check(CLI::ExistingFile);
  auto* data = cmd->add_option("--data", f.data, "EMB1 embedding dataset")->check(CLI::ExistingFile);
  auto* weights =
      cmd->add_option("--weights", f.weights, "EMB1 class-weights file")->check(CLI::ExistingFile);
  if (!multi) {
    data->expected(1);
    weights->expected(1);
  }
  auto* variant = cmd->add_option("--variant", f.variants,
                                  "zs-clap, clap-s, tip-adapter, tip-adapter-f, adapter, "
                                  "adapter-zs, adapter-support or clap-s-plus");
  auto* shots = cmd->add_option("--shots", f.shots, "shots per class, or 'full'");
  auto* seed = cmd->add_option("--seed", f.seeds, "seed for sampling, init and shuffling");
  if (multi) {
    variant->delimiter(',')->default_str(ShotsText(json::array()));
    shots->delimiter(',')->default_str(ShotsText(d.spec["shots"]));
    std::string seeds;
    for (const json& s : d.spec["seeds"]) seeds += (seeds.empty() ? "" : ",") + std::to_string(s.get<std::uint64_t>());
    seed->delimiter(',')->default_str(seeds);
  } else {
    variant->expected(1)->default_str("clap-s-plus");
    shots->expected(1)->default_str("full");
    seed->expected(1)->default_str("0");
  }
  cmd->add_option("--alpha", f.alpha,
                  multi ? "interpolation weight of the training loss (reported alpha is grid-searched)"
                        : "interpolation weight; defaults to the variant's default")
      ->default_str(multi ? "variant default" : "0.5, or the value the variant forces");
  cmd->add_option("--beta", f.beta, "support-head sharpness")->default_str(d.spec["beta"].dump());
  cmd->add_option("--scale", f.scale, "clap logit scale")->default_str(d.spec["scale"].dump());
  cmd->add_option("--hidden", f.hidden, "adapter hidden width, 0 for dim/4")
      ->default_str(std::to_string(d.adapter.hidden));
  cmd->add_option("--residual", f.residual, "adapter residual ratio")
      ->default_str(d.spec["adapter"]["residual_ratio"].dump());
  cmd->add_option("--lr", f.lr, "AdamW learning rate")->default_str(d.spec["train"]["lr"].dump());
  cmd->add_option("--epochs", f.epochs, "training epochs")
      ->default_str(d.spec["train"]["epochs"].dump());
  cmd->add_option("--batch-size", f.batch_size, "training batch size")
      ->default_str(d.spec["train"]["batch_size"].dump());
  cmd->add_option("--weight-decay", f.weight_decay, "AdamW decoupled weight decay")
      ->default_str(d.spec["train"]["weight_decay"].dump());
}

json ReadConfig(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CliError{kExitData, "cannot read config " + path};
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw CliError{kExitData, "config " + path + " is not valid JSON: " + e.what()};
  }
}

// Built-in default < config file < flag.
json EffectiveSpec(const ModelFlags& f) {
  json j = ReadConfig(f.config);
  if (!j.is_object()) throw CliError{kExitData, "config must be a JSON object"};
  if (!f.data.empty() || !f.weights.empty()) {
    if (f.data.size() != f.weights.size()) UsageError("give one --weights per --data");
    j["datasets"] = json::array();
    for (std::size_t i = 0; i < f.data.size(); ++i) {
      j["datasets"].push_back({{"data", f.data[i]}, {"weights", f.weights[i]}});
    }
  }
  if (!f.variants.empty()) j["variants"] = f.variants;
  if (!f.shots.empty()) {
    j["shots"] = json::array();
    for (const std::string& s : f.shots) {
      if (s == "full") {
        j["shots"].push_back(s);
        continue;
      }
      try {
        std::size_t used = 0;
        const long k = std::stol(s, &used);
        if (used != s.size() || k <= 0) throw std::invalid_argument(s);
        j["shots"].push_back(k);
      } catch (const std::exception&) {
        UsageError("--shots takes positive integers or 'full', got '" + s + "'");
      }
    }
  }
  if (!f.seeds.empty()) j["seeds"] = f.seeds;
  if (f.alpha) j["alpha"] = *f.alpha;
  if (f.beta) j["beta"] = *f.beta;
  if (f.scale) j["scale"] = *f.scale;
  if (f.hidden) j["adapter"]["hidden"] = *f.hidden;
  if (f.residual) j["adapter"]["residual_ratio"] = *f.residual;
  if (f.lr) j["train"]["lr"] = *f.lr;
  if (f.epochs) j["train"]["epochs"] = *f.epochs;
  if (f.batch_size) j["train"]["batch_size"] = *f.batch_size;
  if (f.weight_decay) j["train"]["weight_decay"] = *f.weight_decay;
  if (!f.out.empty()) j["output"] = f.out;
  char* resolved = nullptr;
  Check(fsa_experiment_spec_resolve(j.dump().c_str(), &resolved));
  return json::parse(TakeString(resolved));
}

// One dataset, one variant, one shot count and one seed, taken from the
// effective spec.
struct SingleRun {
  Dataset train, val, test;
  Weights weights;
  fsa_variant variant = FSA_VARIANT_CLAP_S_PLUS;
  std::optional<double> alpha;
  double beta = 0.0;
  double scale = 0.0;
  uint32_t shots = 0;  // 0 = full
  std::string shots_label = "full";
  uint64_t seed = 0;
  fsa_train_config train_cfg{};
  fsa_adapter_shape shape{};
};

Dataset LoadDataset(const std::string& path) {
  fsa_dataset* raw = nullptr;
  Check(fsa_dataset_load(path.c_str(), &raw));
  return Dataset(raw);
}

Weights LoadWeights(const std::string& path) {
  fsa_weights* raw = nullptr;
  Check(fsa_weights_load(path.c_str(), &raw));
  return Weights(raw);
}

void CheckLabelSpace(const fsa_dataset* ds, const fsa_weights* w) {
  if (fsa_dataset_dim(ds) != fsa_weights_dim(w) ||
      fsa_dataset_num_classes(ds) != fsa_weights_num_classes(w)) {
    throw CliError{kExitData, "dataset and class weights disagree in width or class count"};
  }
  for (uint32_t j = 0; j < fsa_dataset_num_classes(ds); ++j) {
    if (std::string(fsa_dataset_class_name(ds, j)) != fsa_weights_class_name(w, j)) {
      throw CliError{kExitData, "dataset and class weights name class " + std::to_string(j) +
                                    " differently"};
    }
  }
}

Dataset Split(const fsa_dataset* ds, fsa_split split) {
  fsa_dataset* raw = nullptr;
  Check(fsa_dataset_select_split(ds, split, &raw));
  return Dataset(raw);
}

fsa_variant ParseVariant(const std::string& name) {
  fsa_variant v{};
  Check(fsa_variant_parse(name.c_str(), &v));
  return v;
}

SingleRun ResolveSingle(const ModelFlags& f) {
  const json spec = EffectiveSpec(f);
  if (spec["datasets"].size() != 1) UsageError("give exactly one --data and --weights");
  const json config = ReadConfig(f.config);
  const bool seed_given = !f.seeds.empty() || config.contains("seeds");
  if (spec["variants"].size() > 1 || (seed_given && spec["seeds"].size() > 1)) {
    UsageError("this command runs a single variant and seed");
  }
  SingleRun run;
  const json& ref = spec["datasets"][0];
  const Dataset raw = LoadDataset(ref["data"].get<std::string>());
  run.weights = LoadWeights(ref["weights"].get<std::string>());
  CheckLabelSpace(raw.get(), run.weights.get());
  fsa_dataset* normalized = nullptr;
  Check(fsa_dataset_normalize(raw.get(), &normalized));
  const Dataset ds(normalized);
  run.train = Split(ds.get(), FSA_SPLIT_TRAIN);
  run.val = Split(ds.get(), FSA_SPLIT_VAL);
  run.test = Split(ds.get(), FSA_SPLIT_TEST);

  run.variant = ParseVariant(spec["variants"].empty() ? std::string("clap-s-plus")
                                                      : spec["variants"][0].get<std::string>());
  if (!spec["alpha"].is_null()) run.alpha = spec["alpha"].get<double>();
  run.beta = spec["beta"].get<double>();
  run.scale = spec["scale"].get<double>();
  // A config shot list applies its first entry; without one, use everything.
  const bool shots_given = !f.shots.empty() || config.contains("shots");
  if (shots_given && spec["shots"][0].is_number()) {
    run.shots = spec["shots"][0].get<uint32_t>();
    run.shots_label = std::to_string(run.shots);
  }
  run.seed = seed_given ? spec["seeds"][0].get<uint64_t>() : 0;
  fsa_train_config_default(&run.train_cfg);
  run.train_cfg.lr = spec["train"]["lr"].get<double>();
  run.train_cfg.epochs = spec["train"]["epochs"].get<uint32_t>();
  run.train_cfg.batch_size = spec["train"]["batch_size"].get<uint32_t>();
  run.train_cfg.weight_decay = spec["train"]["weight_decay"].get<double>();
  run.train_cfg.seed = run.seed;
  run.shape.hidden = spec["adapter"]["hidden"].get<uint32_t>();
  run.shape.residual_ratio = spec["adapter"]["residual_ratio"].get<double>();
  return run;
}

fsa_predictor_config PredictorConfig(const SingleRun& run) {
  fsa_predictor_config cfg{};
  fsa_predictor_config_default(run.variant, &cfg);
  if (run.alpha) cfg.alpha = *run.alpha;
  cfg.beta = run.beta;
  cfg.scale = run.scale;
  Check(fsa_predictor_config_validate(&cfg));
  return cfg;
}

Support BuildSupport(const SingleRun& run) {
  fsa_support* raw = nullptr;
  Check(fsa_support_build(run.train.get(), run.shots, run.seed, &raw));
  return Support(raw);
}

Adapter TrainAdapter(const SingleRun& run, const fsa_support* support,
                     const fsa_predictor_config& cfg, bool verbose) {
  fsa_adapter* raw = nullptr;
  Check(fsa_adapter_init(fsa_dataset_dim(run.train.get()), &run.shape, run.seed, &raw));
  Adapter adapter(raw);
  std::vector<double> losses(run.train_cfg.epochs);
  Check(fsa_adapter_train(adapter.get(), support, run.weights.get(), &cfg, &run.train_cfg, losses.data()));
  if (verbose) {
    for (std::size_t e = 0; e < losses.size(); ++e) {
      std::printf("epoch %zu loss %.6f\n", e + 1, losses[e]);
    }
  }
  return adapter;
}

int RunValidate(const std::string& path, const std::string& weights_path) {
  const Dataset ds = LoadDataset(path);
  std::printf("%s: %zu records, dim %u, %u classes\n", path.c_str(), fsa_dataset_size(ds.get()),
              fsa_dataset_dim(ds.get()), fsa_dataset_num_classes(ds.get()));
  std::printf("train %zu\nval %zu\ntest %zu\n", fsa_dataset_split_count(ds.get(), FSA_SPLIT_TRAIN),
              fsa_dataset_split_count(ds.get(), FSA_SPLIT_VAL),
              fsa_dataset_split_count(ds.get(), FSA_SPLIT_TEST));
  if (!weights_path.empty()) {
    const Weights w = LoadWeights(weights_path);
    CheckLabelSpace(ds.get(), w.get());
    std::printf("%s: %u class weights, template \"%s\"\n", weights_path.c_str(),
                fsa_weights_num_classes(w.get()), fsa_weights_prompt_template(w.get()));
  }
  return 0;
}

int RunZeroShot(const ModelFlags& f) {
  SingleRun run = ResolveSingle(f);
  double acc = 0.0;
  Check(fsa_zero_shot_accuracy(run.test.get(), run.weights.get(), run.scale, &acc));
  std::printf("zero-shot test accuracy %.4f\n", acc);
  return 0;
}

int RunTrain(const ModelFlags& f) {
  if (f.out.empty()) UsageError("train needs --out for the adapter checkpoint");
  const SingleRun run = ResolveSingle(f);
  if (!fsa_variant_uses_adapter(run.variant)) {
    UsageError(std::string(fsa_variant_name(run.variant)) + " has no adapter to train");
  }
  const fsa_predictor_config cfg = PredictorConfig(run);
  const Support support = BuildSupport(run);
  const Adapter adapter = TrainAdapter(run, support.get(), cfg, true);
  Check(fsa_adapter_save(adapter.get(), f.out.c_str()));
  std::printf("saved %s (%llu parameters)\n", f.out.c_str(),
              static_cast<unsigned long long>(fsa_adapter_parameter_count(adapter.get())));
  return 0;
}

int RunEval(const ModelFlags& f, const std::string& adapter_path) {
  const SingleRun run = ResolveSingle(f);
  const fsa_predictor_config cfg = PredictorConfig(run);
  Support support;
  if (fsa_variant_uses_support(run.variant) || fsa_variant_uses_adapter(run.variant)) {
    support = BuildSupport(run);
  }
  Adapter adapter;
  if (fsa_variant_uses_adapter(run.variant)) {
    if (!adapter_path.empty()) {
      fsa_adapter* raw = nullptr;
      Check(fsa_adapter_load(adapter_path.c_str(), &raw));
      adapter.reset(raw);
    } else {
      adapter = TrainAdapter(run, support.get(), cfg, false);
    }
  }
  double acc = 0.0;
  Check(fsa_evaluate(&cfg, run.test.get(), adapter.get(), support.get(), run.weights.get(), &acc));
  std::printf("%s alpha %g beta %g shots %s seed %llu: test accuracy %.4f\n",
              fsa_variant_name(run.variant), cfg.alpha, cfg.beta, run.shots_label.c_str(),
              static_cast<unsigned long long>(run.seed), acc);
  return 0;
}

int RunSweep(const ModelFlags& f) {
  const SingleRun run = ResolveSingle(f);
  const json spec = EffectiveSpec(f);
  const fsa_predictor_config cfg = PredictorConfig(run);
  Support support;
  if (fsa_variant_uses_support(run.variant) || fsa_variant_uses_adapter(run.variant)) {
    support = BuildSupport(run);
  }
  Adapter adapter;
  if (fsa_variant_uses_adapter(run.variant)) adapter = TrainAdapter(run, support.get(), cfg, false);
  const auto alphas = spec["alpha_grid"].get<std::vector<double>>();
  const auto betas = spec["beta_grid"].get<std::vector<double>>();
  fsa_grid_result best{};
  Check(fsa_grid_search(&cfg, run.val.get(), adapter.get(), support.get(), run.weights.get(),
                        alphas.data(), alphas.size(), betas.data(), betas.size(), &best));
  fsa_predictor_config chosen = cfg;
  chosen.alpha = best.alpha;
  chosen.beta = best.beta;
  double acc = 0.0;
  Check(fsa_evaluate(&chosen, run.test.get(), adapter.get(), support.get(), run.weights.get(), &acc));
  std::printf("%s best alpha %g beta %g: val accuracy %.4f, test accuracy %.4f\n",
              fsa_variant_name(run.variant), best.alpha, best.beta, best.val_accuracy, acc);
  return 0;
}

int RunExperiment(const ModelFlags& f, bool joint, bool timing) {
  const json spec = EffectiveSpec(f);
  fsa_result* raw = nullptr;
  Check((joint ? fsa_joint_run : fsa_experiment_run)(spec.dump().c_str(), &raw));
  const Result result(raw);
  char* text = nullptr;
  Check(fsa_result_markdown(result.get(), &text));
  std::fputs(TakeString(text).c_str(), stdout);
  const std::string out = spec["output"].get<std::string>();
  if (!out.empty()) {
    Check(fsa_result_csv(result.get(), timing ? 1 : 0, &text));
    const std::string csv = TakeString(text);
    std::ofstream file(out, std::ios::binary);
    if (!(file << csv)) throw CliError{kExitData, "cannot write " + out};
    std::printf("wrote %zu runs to %s\n", fsa_result_run_count(result.get()), out.c_str());
  }
  return 0;
}

int RunBench(const ModelFlags& f, int repetitions) {
  const json spec = EffectiveSpec(f);
  if (spec["datasets"].size() != 1) UsageError("give exactly one --data and --weights");
  const Dataset ds = LoadDataset(spec["datasets"][0]["data"].get<std::string>());
  const Weights w = LoadWeights(spec["datasets"][0]["weights"].get<std::string>());
  std::vector<std::string> variants = spec["variants"].get<std::vector<std::string>>();
  if (variants.empty()) {
    for (int v = FSA_VARIANT_ZS_CLAP; v <= FSA_VARIANT_CLAP_S_PLUS; ++v) {
      variants.push_back(fsa_variant_name(static_cast<fsa_variant>(v)));
    }
  }
  const json& first = spec["shots"][0];
  const uint32_t shots = first.is_number() && !f.shots.empty() ? first.get<uint32_t>() : 0;
  std::ostringstream table;
  table << "| variant | train s | infer ms/query | params |\n|---|---:|---:|---:|\n";
  for (const std::string& name : variants) {
    fsa_timing t{};
    Check(fsa_time_variant(ParseVariant(name), ds.get(), w.get(), shots, spec.dump().c_str(),
                           repetitions, &t));
    char line[256];
    std::snprintf(line, sizeof line, "| %s | %.4f | %.5f | %llu |\n", name.c_str(), t.train_seconds,
                  t.infer_ms_per_query, static_cast<unsigned long long>(t.params));
    table << line;
  }
  std::fputs(table.str().c_str(), stdout);
  const std::string out = spec["output"].get<std::string>();
  if (!out.empty()) {
    std::ofstream file(out, std::ios::binary);
    if (!(file << table.str())) throw CliError{kExitData, "cannot write " + out};
  }
  return 0;
}

struct SyntheticFlags {
  fsa_shift_options options{};
  std::optional<uint64_t> domain_seed;
  std::string out;
};

int RunMakeSynthetic(SyntheticFlags& f) {
  if (f.domain_seed) {
    f.options.has_domain_seed = 1;
    f.options.domain_seed = *f.domain_seed;
  }
  fsa_dataset* ds = nullptr;
  fsa_weights* w = nullptr;
  Check(fsa_make_shift_benchmark(&f.options, &ds, &w));
  const Dataset data(ds);
  const Weights weights(w);
  const std::string data_path = f.out + ".emb";
  const std::string weights_path = f.out + ".weights.emb";
  Check(fsa_dataset_save(data.get(), data_path.c_str()));
  Check(fsa_weights_save(weights.get(), weights_path.c_str()));
  std::printf("wrote %s (%zu records) and %s\n", data_path.c_str(), fsa_dataset_size(data.get()),
              weights_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot classification over frozen audio-text embeddings", "fsadapt"};
  app.set_version_flag("--version", fsa_version());
  app.require_subcommand(1);

  std::string validate_path, validate_weights;
  auto* validate = app.add_subcommand("validate", "check an EMB1 dataset and print split counts");
  validate->add_option("file", validate_path, "EMB1 dataset")->required()->check(CLI::ExistingFile);
  validate->add_option("--weights", validate_weights, "also check a class-weights file against it")
      ->check(CLI::ExistingFile);

  ModelFlags zs_flags, train_flags, eval_flags, sweep_flags, fewshot_flags, joint_flags, bench_flags;
  auto* zero_shot = app.add_subcommand("zero-shot", "zero-shot test accuracy of the class weights");
  AddModelFlags(zero_shot, zs_flags, false);

  auto* train = app.add_subcommand("train", "train an adapter on a support set and save it");
  AddModelFlags(train, train_flags, false);
  train->add_option("--out", train_flags.out, "adapter checkpoint to write");

  std::string adapter_path;
  auto* eval = app.add_subcommand("eval", "test accuracy at a fixed alpha and beta");
  AddModelFlags(eval, eval_flags, false);
  eval->add_option("--adapter", adapter_path, "trained adapter; trained on the fly when absent")
      ->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "grid-search alpha and beta on val, report test accuracy");
  AddModelFlags(sweep, sweep_flags, false);

  bool no_timing = false;
  auto* fewshot = app.add_subcommand("fewshot", "shots x seeds x variants experiment");
  AddModelFlags(fewshot, fewshot_flags, true);
  fewshot->add_option("--out", fewshot_flags.out, "CSV of every run");
  fewshot->add_flag("--no-timing", no_timing, "leave timing columns empty in the CSV");

  auto* joint = app.add_subcommand("joint", "joint vs independent adapter training across datasets");
  AddModelFlags(joint, joint_flags, true);
  joint->add_option("--out", joint_flags.out, "CSV of every run");
  joint->add_flag("--no-timing", no_timing, "leave timing columns empty in the CSV");

  int repetitions = 3;
  auto* bench = app.add_subcommand("bench", "training time, inference time and parameter counts");
  AddModelFlags(bench, bench_flags, true);
  bench->add_option("--reps", repetitions, "repetitions per variant (medians reported)")
      ->capture_default_str();
  bench->add_option("--out", bench_flags.out, "write the table here as well");

  SyntheticFlags synth;
  fsa_shift_options_default(&synth.options);
  auto* make_synthetic = app.add_subcommand("make-synthetic", "write a synthetic domain-shift benchmark");
  make_synthetic->add_option("--classes", synth.options.num_classes, "number of classes")
      ->capture_default_str();
  make_synthetic->add_option("--dim", synth.options.dim, "embedding width")->capture_default_str();
  make_synthetic->add_option("--shots-available", synth.options.shots_available,
                             "train records per class")
      ->capture_default_str();
  make_synthetic->add_option("--shift", synth.options.shift, "0 aligned with the class weights, 1 orthogonal")
      ->capture_default_str();
  make_synthetic->add_option("--noise", synth.options.noise, "per-coordinate noise std")
      ->capture_default_str();
  make_synthetic->add_option("--seed", synth.options.seed, "seed for class structure")
      ->capture_default_str();
  make_synthetic->add_option("--domain-seed", synth.domain_seed, "seed for samples (defaults to --seed)");
  make_synthetic->add_option("--out", synth.out, "output prefix: PREFIX.emb and PREFIX.weights.emb")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return RunValidate(validate_path, validate_weights);
    if (*zero_shot) return RunZeroShot(zs_flags);
    if (*train) return RunTrain(train_flags);
    if (*eval) return RunEval(eval_flags, adapter_path);
    if (*sweep) return RunSweep(sweep_flags);
    if (*fewshot) return RunExperiment(fewshot_flags, false, !no_timing);
    if (*joint) return RunExperiment(joint_flags, true, !no_timing);
    if (*bench) return RunBench(bench_flags, repetitions);
    if (*make_synthetic) return RunMakeSynthetic(synth);
  } catch (const CliError& e) {
    std::fprintf(stderr, "fsadapt: %s\n", e.message.c_str());
    return e.exit_code;
  }
  return kExitUsage;
}

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

#include <set>
#include <string>

#include "fsadapt/error.hpp"
#include "fsadapt/harness.hpp"

namespace fsadapt {
namespace {

using nlohmann::json;

void RejectUnknownKeys(const json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) Fail(ErrorCode::kBadFormat, "unknown key '" + key + "' in " + where);
  }
}

Shots ShotsFromJson(const json& j) {
  if (j.is_string()) return ParseShots(j.get<std::string>());
  if (j.is_number_integer() && j.get<std::int64_t>() > 0) {
    return {static_cast<std::uint32_t>(j.get<std::int64_t>()), false};
  }
  Fail(ErrorCode::kBadFormat, "shots entries must be positive integers or \"full\"");
}

}  // namespace

ExperimentSpec ExperimentSpecFromJson(const json& j) {
  if (!j.is_object()) Fail(ErrorCode::kBadFormat, "experiment spec must be a JSON object");
  RejectUnknownKeys(j,
                    {"datasets", "variants", "shots", "seeds", "alpha_grid", "beta_grid", "train",
                     "adapter", "scale", "alpha", "beta", "output"},
                    "experiment spec");
  ExperimentSpec spec;
  try {
    if (j.contains("datasets")) {
      for (const json& d : j.at("datasets")) {
        RejectUnknownKeys(d, {"name", "data", "weights"}, "dataset entry");
        spec.datasets.push_back({d.value("name", std::string()), d.at("data").get<std::string>(),
                                 d.at("weights").get<std::string>()});
      }
    }
    if (j.contains("variants")) {
      for (const json& v : j.at("variants")) spec.variants.push_back(ParseVariant(v.get<std::string>()));
    }
    if (j.contains("shots")) {
      spec.shots.clear();
      for (const json& s : j.at("shots")) spec.shots.push_back(ShotsFromJson(s));
    }
    if (j.contains("seeds")) spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("alpha_grid")) spec.alpha_grid = j.at("alpha_grid").get<std::vector<double>>();
    if (j.contains("beta_grid")) spec.beta_grid = j.at("beta_grid").get<std::vector<double>>();
    if (j.contains("train")) {
      const json& t = j.at("train");
      RejectUnknownKeys(t, {"lr", "batch_size", "epochs", "weight_decay"}, "train");
      spec.train.lr = t.value("lr", spec.train.lr);
      spec.train.batch_size = t.value("batch_size", spec.train.batch_size);
      spec.train.epochs = t.value("epochs", spec.train.epochs);
      spec.train.weight_decay = t.value("weight_decay", spec.train.weight_decay);
    }
    if (j.contains("adapter")) {
      const json& a = j.at("adapter");
      RejectUnknownKeys(a, {"hidden", "residual_ratio"}, "adapter");
      spec.adapter.hidden = a.value("hidden", spec.adapter.hidden);
      spec.adapter.residual_ratio = a.value("residual_ratio", spec.adapter.residual_ratio);
    }
    spec.scale = j.value("scale", spec.scale);
    if (j.contains("alpha") && !j.at("alpha").is_null()) spec.train_alpha = j.at("alpha").get<double>();
    spec.train_beta = j.value("beta", spec.train_beta);
    if (j.contains("output")) spec.output = j.at("output").get<std::string>();
  } catch (const json::exception& e) {
    Fail(ErrorCode::kBadFormat, std::string("experiment spec: ") + e.what());
  }
  return spec;
}

json ExperimentSpecToJson(const ExperimentSpec& spec) {
  json j;
  j["datasets"] = json::array();
  for (const DatasetRef& d : spec.datasets) {
    j["datasets"].push_back({{"name", d.name}, {"data", d.data.string()}, {"weights", d.weights.string()}});
  }
  j["variants"] = json::array();
  for (Variant v : spec.variants) j["variants"].push_back(VariantName(v));
  j["shots"] = json::array();
  for (const Shots& s : spec.shots) {
    if (s.full) j["shots"].push_back("full");
    else j["shots"].push_back(s.k);
  }
  j["seeds"] = spec.seeds;
  j["alpha_grid"] = spec.alpha_grid;
  j["beta_grid"] = spec.beta_grid;
  j["train"] = {{"lr", spec.train.lr},
                {"batch_size", spec.train.batch_size},
                {"epochs", spec.train.epochs},
                {"weight_decay", spec.train.weight_decay}};
  j["adapter"] = {{"hidden", spec.adapter.hidden}, {"residual_ratio", spec.adapter.residual_ratio}};
  j["scale"] = spec.scale;
  j["alpha"] = spec.train_alpha ? json(*spec.train_alpha) : json(nullptr);
  j["beta"] = spec.train_beta;
  j["output"] = spec.output.string();
  return j;
}

}  // namespace fsadapt

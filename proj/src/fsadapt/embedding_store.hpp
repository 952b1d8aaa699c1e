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

#ifndef FSADAPT_EMBEDDING_STORE_HPP_
#define FSADAPT_EMBEDDING_STORE_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "fsadapt/linalg.hpp"
#include "json.hpp"

namespace fsadapt {

enum class Split : std::uint8_t { kTrain = 0, kVal = 1, kTest = 2 };

const char* SplitName(Split split);
// Throws kBadFormat for anything but "train", "val" or "test".
Split ParseSplit(std::string_view name);

struct Record {
  std::string id;
  Split split = Split::kTrain;
  std::uint32_t label = 0;
  std::vector<float> vector;

  bool operator==(const Record&) const = default;
};

// Labeled, split-tagged embeddings. Loaded datasets are immutable by
// convention and safe to share between threads.
struct EmbeddingDataset {
  std::uint32_t dim = 0;
  std::uint32_t num_classes = 0;
  std::vector<std::string> class_names;
  std::vector<Record> records;

  std::size_t size() const { return records.size(); }

  // Strict check of every invariant; throws on the first violation.
  void Validate() const;

  bool operator==(const EmbeddingDataset&) const = default;
};

// Frozen text-derived class weights W_c, one unit-norm row per class.
struct ClassWeights {
  std::uint32_t dim = 0;
  std::uint32_t num_classes = 0;
  std::vector<std::string> class_names;
  Matrix<float> rows;
  std::string prompt_template;

  void Validate() const;

  bool operator==(const ClassWeights&) const = default;
};

// The on-disk EMB1 container shared by datasets, class weights and adapter
// checkpoints:
//
//   "EMB1" | u32 a | u32 b | u32 count | u32 json_len | json | f32 payload
//
// All integers and floats are little-endian. For datasets a = C, b = N and
// the payload holds count * C floats in record order.
struct Emb1Container {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  std::uint32_t count = 0;
  nlohmann::json meta;
  std::vector<float> payload;
};

std::string EncodeContainer(const Emb1Container& container);
// Checks framing only (magic, lengths, JSON syntax). `payload_floats` is the
// exact number of floats the caller expects after the JSON block.
Emb1Container DecodeContainer(std::string_view bytes,
                              const std::function<std::size_t(
                                  const Emb1Container&)>& payload_floats);

std::string ReadFileBytes(const std::filesystem::path& path);
void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes);

std::string EncodeDataset(const EmbeddingDataset& ds);
EmbeddingDataset DecodeDataset(std::string_view bytes);

EmbeddingDataset LoadDataset(const std::filesystem::path& path);
void SaveDataset(const EmbeddingDataset& ds, const std::filesystem::path& path);

ClassWeights LoadClassWeights(const std::filesystem::path& path);
void SaveClassWeights(const ClassWeights& weights,
                      const std::filesystem::path& path);
ClassWeights ClassWeightsFromDataset(const EmbeddingDataset& ds,
                                     std::string prompt_template);
EmbeddingDataset ClassWeightsToDataset(const ClassWeights& weights);

// Scales every vector to unit Euclidean norm. Throws kZeroVector.
EmbeddingDataset Normalize(const EmbeddingDataset& ds);

// Records whose split tag matches, in original order.
EmbeddingDataset SelectSplit(const EmbeddingDataset& ds, Split which);

}  // namespace fsadapt

#endif  // FSADAPT_EMBEDDING_STORE_HPP_

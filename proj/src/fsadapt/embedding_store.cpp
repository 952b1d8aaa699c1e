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

#include "fsadapt/embedding_store.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>

#include "fsadapt/error.hpp"

namespace fsadapt {
namespace {

constexpr char kMagic[4] = {'E', 'M', 'B', '1'};
constexpr std::size_t kHeaderBytes = 20;
constexpr double kUnitTolerance = 1e-5;

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t GetU32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i]))
         << (8 * i);
  }
  return v;
}

void PutF32(std::string& out, float f) { PutU32(out, std::bit_cast<std::uint32_t>(f)); }

float GetF32(std::string_view bytes, std::size_t offset) {
  return std::bit_cast<float>(GetU32(bytes, offset));
}

std::string DescribeRecord(const std::vector<Record>& records, std::size_t i) {
  return "record " + std::to_string(i) + " ('" + records[i].id + "')";
}

void CheckClassNames(const std::vector<std::string>& names, std::uint32_t n) {
  if (names.size() != n) {
    Fail(ErrorCode::kBadFormat, "expected " + std::to_string(n) +
                                    " class names, found " +
                                    std::to_string(names.size()));
  }
  std::set<std::string> seen;
  for (const auto& name : names) {
    if (name.empty()) Fail(ErrorCode::kBadFormat, "empty class name");
    if (!seen.insert(name).second) {
      Fail(ErrorCode::kBadFormat, "duplicate class name '" + name + "'");
    }
  }
}

void CheckFinite(std::span<const float> v, const std::string& where) {
  for (float x : v) {
    if (!std::isfinite(x)) Fail(ErrorCode::kNonFiniteValue, where + " has a non-finite entry");
  }
}

nlohmann::json DatasetMeta(const EmbeddingDataset& ds, const char* format) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : ds.records) {
    records.push_back({{"id", r.id}, {"split", SplitName(r.split)}, {"label", r.label}});
  }
  return {{"format", format}, {"class_names", ds.class_names}, {"records", std::move(records)}};
}

template <typename T>
T MetaField(const nlohmann::json& meta, const char* key) {
  try {
    return meta.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kBadFormat, std::string("metadata field '") + key + "': " + e.what());
  }
}

}  // namespace

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "?";
}

Split ParseSplit(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  Fail(ErrorCode::kBadFormat, "unknown split '" + std::string(name) + "'");
}

void EmbeddingDataset::Validate() const {
  if (dim == 0) Fail(ErrorCode::kBadFormat, "embedding width must be positive");
  if (num_classes == 0) Fail(ErrorCode::kBadFormat, "class count must be positive");
  CheckClassNames(class_names, num_classes);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const Record& r = records[i];
    if (r.vector.size() != dim) {
      Fail(ErrorCode::kDimMismatch, DescribeRecord(records, i) + " has width " +
                                        std::to_string(r.vector.size()) + ", expected " +
                                        std::to_string(dim));
    }
    if (r.label >= num_classes) {
      Fail(ErrorCode::kLabelOutOfRange, DescribeRecord(records, i) + " has label " +
                                            std::to_string(r.label) + " but N=" +
                                            std::to_string(num_classes));
    }
    CheckFinite(r.vector, DescribeRecord(records, i));
  }
}

void ClassWeights::Validate() const {
  if (dim == 0 || num_classes == 0) Fail(ErrorCode::kBadFormat, "empty class weights");
  CheckClassNames(class_names, num_classes);
  if (rows.rows() != num_classes || rows.cols() != dim) {
    Fail(ErrorCode::kDimMismatch, "class weight matrix shape disagrees with header");
  }
  for (std::size_t j = 0; j < rows.rows(); ++j) {
    CheckFinite(rows.row(j), "class weight row " + std::to_string(j));
    const double norm = Norm(rows.row(j));
    if (std::abs(norm - 1.0) > kUnitTolerance) {
      Fail(ErrorCode::kBadFormat, "class weight row " + std::to_string(j) +
                                      " is not unit-norm (norm " + std::to_string(norm) + ")");
    }
  }
}

std::string EncodeContainer(const Emb1Container& container) {
  const std::string json = container.meta.dump();
  std::string out;
  out.reserve(kHeaderBytes + json.size() + 4 * container.payload.size());
  out.append(kMagic, 4);
  PutU32(out, container.a);
  PutU32(out, container.b);
  PutU32(out, container.count);
  PutU32(out, static_cast<std::uint32_t>(json.size()));
  out += json;
  for (float f : container.payload) PutF32(out, f);
  return out;
}

Emb1Container DecodeContainer(
    std::string_view bytes,
    const std::function<std::size_t(const Emb1Container&)>& payload_floats) {
  const std::size_t magic_len = std::min<std::size_t>(bytes.size(), 4);
  if (std::memcmp(bytes.data(), kMagic, magic_len) != 0) {
    Fail(ErrorCode::kBadMagic, "file does not start with EMB1");
  }
  if (bytes.size() < kHeaderBytes) Fail(ErrorCode::kTruncatedFile, "header is incomplete");

  Emb1Container c;
  c.a = GetU32(bytes, 4);
  c.b = GetU32(bytes, 8);
  c.count = GetU32(bytes, 12);
  const std::size_t json_len = GetU32(bytes, 16);
  if (bytes.size() < kHeaderBytes + json_len) {
    Fail(ErrorCode::kTruncatedFile, "metadata block is incomplete");
  }
  try {
    c.meta = nlohmann::json::parse(bytes.substr(kHeaderBytes, json_len));
  } catch (const nlohmann::json::parse_error& e) {
    Fail(ErrorCode::kBadFormat, std::string("metadata is not valid JSON: ") + e.what());
  }
  if (!c.meta.is_object()) Fail(ErrorCode::kBadFormat, "metadata must be a JSON object");

  std::size_t expected = 0;
  try {
    expected = payload_floats(c);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kBadFormat, std::string("metadata: ") + e.what());
  }
  const std::size_t offset = kHeaderBytes + json_len;
  const std::size_t available = bytes.size() - offset;
  if (available < 4 * expected) {
    Fail(ErrorCode::kTruncatedFile, "payload holds " + std::to_string(available) +
                                        " bytes, expected " + std::to_string(4 * expected));
  }
  if (available > 4 * expected) {
    Fail(ErrorCode::kDimMismatch, "payload holds " + std::to_string(available) +
                                      " bytes, more than the header's " +
                                      std::to_string(4 * expected));
  }
  c.payload.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) c.payload[i] = GetF32(bytes, offset + 4 * i);
  return c;
}

std::string ReadFileBytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIoError, "cannot open '" + path.string() + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) Fail(ErrorCode::kIoError, "read failed on '" + path.string() + "'");
  return bytes;
}

void WriteFileBytes(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorCode::kIoError, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) Fail(ErrorCode::kIoError, "write failed on '" + path.string() + "'");
}

std::string EncodeDataset(const EmbeddingDataset& ds) {
  ds.Validate();
  Emb1Container c;
  c.a = ds.dim;
  c.b = ds.num_classes;
  c.count = static_cast<std::uint32_t>(ds.records.size());
  c.meta = DatasetMeta(ds, "dataset");
  c.payload.reserve(ds.records.size() * ds.dim);
  for (const auto& r : ds.records) c.payload.insert(c.payload.end(), r.vector.begin(), r.vector.end());
  return EncodeContainer(c);
}

namespace {

Emb1Container DecodeEmbeddingContainer(std::string_view bytes) {
  return DecodeContainer(bytes, [](const Emb1Container& h) {
    const auto format = h.meta.value("format", std::string("dataset"));
    if (format != "dataset" && format != "class_weights") {
      Fail(ErrorCode::kBadFormat, "container holds '" + format + "', not embeddings");
    }
    return static_cast<std::size_t>(h.count) * h.a;
  });
}

EmbeddingDataset DatasetFromContainer(const Emb1Container& c) {
  EmbeddingDataset ds;
  ds.dim = c.a;
  ds.num_classes = c.b;
  ds.class_names = MetaField<std::vector<std::string>>(c.meta, "class_names");
  const auto& records = c.meta.contains("records") ? c.meta.at("records") : nlohmann::json();
  if (!records.is_array() || records.size() != c.count) {
    Fail(ErrorCode::kBadFormat, "metadata must list exactly " + std::to_string(c.count) + " records");
  }
  ds.records.resize(c.count);
  for (std::size_t i = 0; i < c.count; ++i) {
    const auto& entry = records[i];
    Record& r = ds.records[i];
    r.id = MetaField<std::string>(entry, "id");
    r.split = ParseSplit(MetaField<std::string>(entry, "split"));
    const auto label = MetaField<std::int64_t>(entry, "label");
    if (label < 0 || label >= static_cast<std::int64_t>(ds.num_classes)) {
      Fail(ErrorCode::kLabelOutOfRange, "record " + std::to_string(i) + " has label " +
                                            std::to_string(label) + " but N=" +
                                            std::to_string(ds.num_classes));
    }
    r.label = static_cast<std::uint32_t>(label);
    const auto begin = c.payload.begin() + static_cast<std::ptrdiff_t>(i * ds.dim);
    r.vector.assign(begin, begin + ds.dim);
  }
  ds.Validate();
  return ds;
}

}  // namespace

EmbeddingDataset DecodeDataset(std::string_view bytes) {
  return DatasetFromContainer(DecodeEmbeddingContainer(bytes));
}

EmbeddingDataset LoadDataset(const std::filesystem::path& path) {
  return DecodeDataset(ReadFileBytes(path));
}

void SaveDataset(const EmbeddingDataset& ds, const std::filesystem::path& path) {
  WriteFileBytes(path, EncodeDataset(ds));
}

ClassWeights ClassWeightsFromDataset(const EmbeddingDataset& ds, std::string prompt_template) {
  ds.Validate();
  if (ds.records.size() != ds.num_classes) {
    Fail(ErrorCode::kBadFormat, "class weights need one record per class, found " +
                                    std::to_string(ds.records.size()));
  }
  ClassWeights w;
  w.dim = ds.dim;
  w.num_classes = ds.num_classes;
  w.class_names = ds.class_names;
  w.prompt_template = std::move(prompt_template);
  w.rows = Matrix<float>(ds.num_classes, ds.dim);
  for (std::size_t j = 0; j < ds.records.size(); ++j) {
    const Record& r = ds.records[j];
    if (r.label != j || r.split != Split::kTrain || r.id != ds.class_names[j]) {
      Fail(ErrorCode::kBadFormat, "class weight record " + std::to_string(j) +
                                      " must be the train record of class '" +
                                      ds.class_names[j] + "'");
    }
    std::copy(r.vector.begin(), r.vector.end(), w.rows.row(j).begin());
  }
  w.Validate();
  return w;
}

EmbeddingDataset ClassWeightsToDataset(const ClassWeights& weights) {
  EmbeddingDataset ds;
  ds.dim = weights.dim;
  ds.num_classes = weights.num_classes;
  ds.class_names = weights.class_names;
  for (std::uint32_t j = 0; j < weights.num_classes; ++j) {
    const auto row = weights.rows.row(j);
    ds.records.push_back({weights.class_names[j], Split::kTrain, j, {row.begin(), row.end()}});
  }
  return ds;
}

ClassWeights LoadClassWeights(const std::filesystem::path& path) {
  const Emb1Container c = DecodeEmbeddingContainer(ReadFileBytes(path));
  EmbeddingDataset ds = DatasetFromContainer(c);
  std::string prompt;
  if (c.meta.contains("prompt_template")) prompt = MetaField<std::string>(c.meta, "prompt_template");
  return ClassWeightsFromDataset(ds, std::move(prompt));
}

void SaveClassWeights(const ClassWeights& weights, const std::filesystem::path& path) {
  weights.Validate();
  const EmbeddingDataset ds = ClassWeightsToDataset(weights);
  Emb1Container c;
  c.a = ds.dim;
  c.b = ds.num_classes;
  c.count = static_cast<std::uint32_t>(ds.records.size());
  c.meta = DatasetMeta(ds, "class_weights");
  c.meta["prompt_template"] = weights.prompt_template;
  c.payload.assign(weights.rows.flat().begin(), weights.rows.flat().end());
  WriteFileBytes(path, EncodeContainer(c));
}

EmbeddingDataset Normalize(const EmbeddingDataset& ds) {
  EmbeddingDataset out = ds;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& v = out.records[i].vector;
    const double norm = Norm(std::span<const float>(v));
    if (!(norm > 0.0)) Fail(ErrorCode::kZeroVector, DescribeRecord(out.records, i) + " is all zeros");
    for (float& x : v) x = static_cast<float>(static_cast<double>(x) / norm);
  }
  return out;
}

EmbeddingDataset SelectSplit(const EmbeddingDataset& ds, Split which) {
  EmbeddingDataset out;
  out.dim = ds.dim;
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  for (const auto& r : ds.records) {
    if (r.split == which) out.records.push_back(r);
  }
  return out;
}

}  // namespace fsadapt

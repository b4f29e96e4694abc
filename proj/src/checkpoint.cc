// Copyright 2026 The Metacodec Authors. All Rights Reserved.
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

#include "metacodec/checkpoint.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <utility>

#include <json.hpp>

#include "metacodec/error.h"

namespace metacodec {

namespace {

using nlohmann::json;

constexpr char kArchiveMagic[4] = {'M', 'C', 'K', 'P'};

struct Archive {
  json header;
  std::vector<std::pair<std::string, torch::Tensor>> tensors;
};

void PutU32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint32_t GetU32(std::span<const uint8_t> in, size_t pos) {
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(in[pos + i]) << (8 * i);
  return v;
}

std::vector<uint8_t> SerializeArchive(Archive archive) {
  json entries = json::array();
  std::vector<uint8_t> data;
  for (auto& [name, tensor] : archive.tensors) {
    auto t = tensor.detach().to(torch::kCPU, torch::kFloat).contiguous();
    const size_t offset = data.size();
    const size_t length = static_cast<size_t>(t.numel()) * sizeof(float);
    data.resize(offset + length);
    const float* src = t.data_ptr<float>();
    for (int64_t i = 0; i < t.numel(); ++i) {
      uint32_t bits;
      std::memcpy(&bits, src + i, 4);
      for (int b = 0; b < 4; ++b) {
        data[offset + static_cast<size_t>(i) * 4 + b] = static_cast<uint8_t>(bits >> (8 * b));
      }
    }
    entries.push_back({{"name", name}, {"dtype", "f32le"}, {"shape", t.sizes().vec()},
                       {"offset", offset}, {"length", length}});
  }
  archive.header["tensors"] = entries;
  const std::string text = archive.header.dump();
  std::vector<uint8_t> out(kArchiveMagic, kArchiveMagic + 4);
  PutU32(out, kArchiveVersion);
  PutU32(out, static_cast<uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.insert(out.end(), data.begin(), data.end());
  return out;
}

Archive ParseArchive(std::span<const uint8_t> bytes) {
  METACODEC_CHECK(bytes.size() >= 12, ErrorCode::kTruncated, "archive is truncated");
  METACODEC_CHECK(std::memcmp(bytes.data(), kArchiveMagic, 4) == 0, ErrorCode::kBadMagic,
                  "not a metacodec archive");
  METACODEC_CHECK(GetU32(bytes, 4) == kArchiveVersion, ErrorCode::kUnsupportedVersion,
                  "unsupported archive version");
  const size_t header_len = GetU32(bytes, 8);
  METACODEC_CHECK(bytes.size() >= 12 + header_len, ErrorCode::kTruncated,
                  "archive header is truncated");
  Archive archive;
  try {
    archive.header = json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("archive header: ") + e.what());
  }
  const auto data = bytes.subspan(12 + header_len);
  size_t expected = 0;
  try {
    for (const auto& entry : archive.header.at("tensors")) {
      const auto shape = entry.at("shape").get<std::vector<int64_t>>();
      const size_t offset = entry.at("offset").get<size_t>();
      const size_t length = entry.at("length").get<size_t>();
      int64_t numel = 1;
      for (auto d : shape) numel *= d;
      METACODEC_CHECK(entry.at("dtype") == "f32le" && length == static_cast<size_t>(numel) * 4,
                      ErrorCode::kLengthMismatch, "archive tensor entry is inconsistent");
      METACODEC_CHECK(offset + length <= data.size(), ErrorCode::kTruncated,
                      "archive tensor data is truncated");
      auto t = torch::empty(shape, torch::kFloat);
      float* dst = t.data_ptr<float>();
      for (int64_t i = 0; i < numel; ++i) {
        const uint32_t bits = GetU32(data, offset + static_cast<size_t>(i) * 4);
        std::memcpy(dst + i, &bits, 4);
      }
      archive.tensors.emplace_back(entry.at("name").get<std::string>(), t);
      expected = std::max(expected, offset + length);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("archive header: ") + e.what());
  }
  METACODEC_CHECK(expected == data.size(), ErrorCode::kLengthMismatch,
                  "archive has trailing bytes");
  return archive;
}

json ConfigToJson(const ModelConfig& c) {
  return {
      {"codec_id", c.codec_id},
      {"codec",
       {{"channels", c.codec.channels},
        {"bits", c.codec.bits},
        {"downsample", c.codec.downsample},
        {"hidden", c.codec.hidden},
        {"zeta", c.codec.zeta}}},
      {"prob",
       {{"num_scales", c.prob.num_scales},
        {"mixtures", c.prob.mixtures},
        {"context_channels", c.prob.context_channels}}},
      {"weights",
       {{"ms_ssim", c.weights.ms_ssim},
        {"mse", c.weights.mse},
        {"perceptual", c.weights.perceptual},
        {"rate", c.weights.rate},
        {"importance", c.weights.importance}}},
      {"target_bpp", c.target_bpp},
      {"provenance", c.provenance},
  };
}

ModelConfig ConfigFromJson(const json& j) {
  ModelConfig c;
  try {
    c.codec_id = j.at("codec_id");
    const auto& codec = j.at("codec");
    c.codec.channels = codec.at("channels");
    c.codec.bits = codec.at("bits");
    c.codec.downsample = codec.at("downsample");
    c.codec.hidden = codec.at("hidden");
    c.codec.zeta = codec.at("zeta");
    const auto& prob = j.at("prob");
    c.prob.latent_channels = c.codec.channels;
    c.prob.num_scales = prob.at("num_scales");
    c.prob.mixtures = prob.at("mixtures");
    c.prob.context_channels = prob.at("context_channels");
    const auto& w = j.at("weights");
    c.weights.ms_ssim = w.at("ms_ssim");
    c.weights.mse = w.at("mse");
    c.weights.perceptual = w.at("perceptual");
    c.weights.rate = w.at("rate");
    c.weights.importance = w.at("importance");
    c.target_bpp = j.at("target_bpp");
    c.provenance = j.at("provenance");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("checkpoint config: ") + e.what());
  }
  c.Validate();
  return c;
}

}  // namespace

std::vector<uint8_t> SerializeCheckpoint(const CodecModel& model) {
  Archive archive;
  archive.header["kind"] = "checkpoint";
  archive.header["config"] = ConfigToJson(model->config());
  for (const auto& item : model->named_parameters()) {
    archive.tensors.emplace_back(item.key(), item.value());
  }
  return SerializeArchive(std::move(archive));
}

CodecModel ParseCheckpoint(std::span<const uint8_t> bytes) {
  auto archive = ParseArchive(bytes);
  METACODEC_CHECK(archive.header.value("kind", "") == "checkpoint", ErrorCode::kInvalidArgument,
                  "archive is not a checkpoint");
  CodecModel model(ConfigFromJson(archive.header.at("config")));
  auto params = model->named_parameters();
  METACODEC_CHECK(archive.tensors.size() == params.size(), ErrorCode::kShapeMismatch,
                  "checkpoint parameter count does not match the architecture");
  torch::NoGradGuard no_grad;
  for (const auto& [name, tensor] : archive.tensors) {
    auto* p = params.find(name);
    METACODEC_CHECK(p != nullptr, ErrorCode::kShapeMismatch,
                    "checkpoint has unknown parameter " + name);
    METACODEC_CHECK(p->sizes() == tensor.sizes(), ErrorCode::kShapeMismatch,
                    "checkpoint parameter " + name + " has the wrong shape");
    p->copy_(tensor);
  }
  model->eval();
  return model;
}

void SaveCheckpoint(const CodecModel& model, const std::string& path) {
  WriteFileAtomic(path, SerializeCheckpoint(model));
}

CodecModel LoadCheckpoint(const std::string& path) { return ParseCheckpoint(ReadFileBytes(path)); }

std::vector<uint8_t> SerializeCodebooks(const CodebookSet& books) {
  Archive archive;
  archive.header["kind"] = "codebooks";
  json meta = json::array();
  for (const auto& [id, book] : books) {
    meta.push_back({{"codec_id", id}, {"seed", book.seed}, {"iterations", book.iterations},
                    {"size", book.size()}});
    archive.tensors.emplace_back("codec" + std::to_string(id),
                                 book.size() > 0 ? book.centroids : torch::zeros({0, 0}));
  }
  archive.header["codebooks"] = meta;
  return SerializeArchive(std::move(archive));
}

CodebookSet ParseCodebooks(std::span<const uint8_t> bytes) {
  auto archive = ParseArchive(bytes);
  METACODEC_CHECK(archive.header.value("kind", "") == "codebooks", ErrorCode::kInvalidArgument,
                  "archive is not a codebook file");
  CodebookSet books;
  const auto& meta = archive.header.at("codebooks");
  METACODEC_CHECK(meta.size() == archive.tensors.size(), ErrorCode::kLengthMismatch,
                  "codebook metadata does not match tensor count");
  for (size_t i = 0; i < meta.size(); ++i) {
    BiasCodebook book;
    book.seed = meta[i].at("seed");
    book.iterations = meta[i].at("iterations");
    if (archive.tensors[i].second.numel() > 0) book.centroids = archive.tensors[i].second;
    METACODEC_CHECK(book.size() == meta[i].at("size").get<int64_t>() &&
                        book.size() <= kMaxBiasClusters,
                    ErrorCode::kCodebookMismatch, "codebook size is inconsistent");
    books[meta[i].at("codec_id").get<int>()] = book;
  }
  return books;
}

void SaveCodebooks(const CodebookSet& books, const std::string& path) {
  WriteFileAtomic(path, SerializeCodebooks(books));
}

CodebookSet LoadCodebooks(const std::string& path) { return ParseCodebooks(ReadFileBytes(path)); }

void WriteFileAtomic(const std::string& path, std::span<const uint8_t> bytes) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    METACODEC_CHECK(out.good(), ErrorCode::kIo, "cannot open " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    out.flush();
    METACODEC_CHECK(out.good(), ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  METACODEC_CHECK(!ec, ErrorCode::kIo, "cannot rename onto " + path + ": " + ec.message());
}

void WriteTextAtomic(const std::string& path, const std::string& text) {
  WriteFileAtomic(path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()),
                                                 text.size()));
}

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  METACODEC_CHECK(in.good(), ErrorCode::kIo, "cannot open " + path);
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), {});
}

}  // namespace metacodec

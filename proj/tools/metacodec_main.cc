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

// Command-line front end. Every failure is reported on stderr as a single
// JSON object {"error": <kind>, "message": <text>} with a nonzero exit code.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "metacodec/bias.h"
#include "metacodec/checkpoint.h"
#include "metacodec/config.h"
#include "metacodec/error.h"
#include "metacodec/image_io.h"
#include "metacodec/meta.h"
#include "metacodec/metrics.h"
#include "metacodec/pipeline.h"
#include "metacodec/synth.h"
#include "metacodec/trainer.h"

namespace fs = std::filesystem;
using namespace metacodec;

namespace {

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;

void ReportError(const std::string& kind, const std::string& message) {
  nlohmann::json j = {{"error", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
}

struct DataArgs {
  std::string dir;
  int64_t count = 240;
  int64_t size = 64;
  uint64_t seed = 1;
};

void AddDataOptions(CLI::App* cmd, DataArgs& d) {
  cmd->add_option("--data", d.dir, "directory of PNG files to crop patches from (default: synthetic)");
  cmd->add_option("--patches", d.count, "number of training patches")->check(CLI::PositiveNumber);
  cmd->add_option("--patch-size", d.size, "patch side length")->check(CLI::PositiveNumber);
  cmd->add_option("--data-seed", d.seed, "seed for patch generation or cropping");
}

torch::Tensor LoadPatches(const DataArgs& d) {
  if (d.dir.empty()) return SynthBatch(d.count, d.size, d.seed);
  return CropsFromDirectory(d.dir, d.count, d.size, d.seed);
}

TrainingConfig LoadTrainingConfig(const std::string& path, const ModelConfig& model) {
  TrainingConfig cfg;
  cfg.weights = model.weights;
  cfg.zeta = model.codec.zeta;
  if (!path.empty()) ApplyKeyValues(LoadKeyValues(path), cfg);
  return cfg;
}

std::string MetricsCsv(const std::vector<EpochMetrics>& history) {
  std::ostringstream out;
  WriteMetricsCsvHeader(out);
  for (const auto& m : history) WriteMetricsCsvRow(out, m);
  return out.str();
}

CodebookSet MaybeLoadCodebooks(const std::string& path) {
  return path.empty() ? CodebookSet{} : LoadCodebooks(path);
}

MetricsRecord CompressAndMeasure(const torch::Tensor& image, const std::string& id,
                                 double target_bpp, double margin, CodecBank& bank,
                                 const CodebookSet& books, const CompressOptions& options) {
  const auto result = Compress(image, {target_bpp, margin}, bank, books, options);
  const auto recon = Decompress(result.bytes, bank, books);
  auto r = Evaluate(image, recon, 8 * result.bytes.size());
  r.image_id = id;
  r.target_bpp = target_bpp;
  r.codec_id = result.bitstream.header.codec_id;
  r.bits = result.bitstream.header.bits;
  r.bits_payload = 8 * result.bitstream.payload.size();
  r.bits_overhead = r.bits_total - r.bits_payload;
  r.best_effort = result.best_effort;
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metacodec: learned image codec with latent and bias overfitting"};
  app.require_subcommand(1);
  torch::set_num_threads(1);

  // train
  auto* train = app.add_subcommand("train", "stage-1 training of one codec variant");
  int train_codec = 0;
  std::string train_out, train_config, train_metrics;
  DataArgs train_data;
  int train_epochs = 30;
  uint64_t train_seed = 0;
  train->add_option("--codec", train_codec, "ladder entry 0..3")->check(CLI::Range(0, 3));
  train->add_option("--out", train_out, "output checkpoint")->required();
  train->add_option("--config", train_config, "key = value training config");
  train->add_option("--metrics", train_metrics, "per-epoch CSV log");
  train->add_option("--epochs", train_epochs, "epochs (overrides config)");
  train->add_option("--seed", train_seed, "initialization and shuffling seed");
  AddDataOptions(train, train_data);

  // meta-finetune
  auto* meta = app.add_subcommand("meta-finetune", "meta-learning fine-tuning of a checkpoint");
  std::string meta_in, meta_out, meta_config, meta_metrics;
  DataArgs meta_data;
  bool first_order = false;
  int meta_epochs = -1;
  meta->add_option("--in", meta_in, "stage-1 checkpoint")->required()->check(CLI::ExistingFile);
  meta->add_option("--out", meta_out, "output checkpoint")->required();
  meta->add_option("--config", meta_config, "key = value training config");
  meta->add_option("--metrics", meta_metrics, "per-epoch CSV log");
  meta->add_option("--epochs", meta_epochs, "meta epochs (overrides config)");
  meta->add_flag("--first-order", first_order, "treat inner gradients as constants");
  AddDataOptions(meta, meta_data);

  // build-bias-clusters
  auto* clusters = app.add_subcommand("build-bias-clusters", "k-means codebooks of decoder biases");
  std::string clusters_models, clusters_out;
  DataArgs clusters_data;
  int clusters_k = kMaxBiasClusters;
  uint64_t clusters_seed = 0;
  BiasOverfitOptions bias_options;
  clusters->add_option("--models", clusters_models, "codec bank directory")->required()->check(CLI::ExistingDirectory);
  clusters->add_option("--out", clusters_out, "output codebook file")->required();
  clusters->add_option("--k", clusters_k, "clusters per codec")->check(CLI::Range(1, kMaxBiasClusters));
  clusters->add_option("--seed", clusters_seed, "k-means seed");
  clusters->add_option("--iters", bias_options.iterations, "bias overfitting iterations");
  clusters->add_option("--lr", bias_options.learning_rate, "bias overfitting learning rate");
  AddDataOptions(clusters, clusters_data);

  // compress
  auto* compress = app.add_subcommand("compress", "rate-controlled compression of a PNG");
  double target_bpp = 0.0, margin = 0.15;
  std::string models, codebook, input, output, trial_log;
  CompressOptions compress_options;
  compress->add_option("--target-bpp", target_bpp, "target bits per pixel")->required()->check(CLI::PositiveNumber);
  compress->add_option("--margin", margin, "accepted relative deviation");
  compress->add_option("--models", models, "codec bank directory")->required()->check(CLI::ExistingDirectory);
  compress->add_option("--codebook", codebook, "bias codebook file")->check(CLI::ExistingFile);
  compress->add_option("--budget", compress_options.overfit_budget, "overfitting rounds");
  compress->add_option("--trial-log", trial_log, "JSON log of search trials");
  compress->add_option("IN", input, "input PNG")->required()->check(CLI::ExistingFile);
  compress->add_option("OUT", output, "output bitstream")->required();

  // decompress
  auto* decompress = app.add_subcommand("decompress", "decode a bitstream to PNG");
  decompress->add_option("--models", models, "codec bank directory")->required()->check(CLI::ExistingDirectory);
  decompress->add_option("--codebook", codebook, "bias codebook file")->check(CLI::ExistingFile);
  decompress->add_option("IN", input, "input bitstream")->required()->check(CLI::ExistingFile);
  decompress->add_option("OUT", output, "output PNG")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "metrics of a reconstruction against its original");
  std::string eval_original, eval_recon, eval_bitstream;
  uint64_t eval_bits = 0;
  eval->add_option("ORIGINAL", eval_original, "original PNG")->required()->check(CLI::ExistingFile);
  eval->add_option("RECON", eval_recon, "reconstructed PNG")->required()->check(CLI::ExistingFile);
  auto* bits_opt = eval->add_option("--bits", eval_bits, "total coded bits");
  eval->add_option("--bitstream", eval_bitstream, "bitstream whose size gives the bit count")
      ->check(CLI::ExistingFile)
      ->excludes(bits_opt);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "compress a directory at every target rate");
  std::string sweep_images, sweep_out;
  sweep->add_option("--models", models, "codec bank directory")->required()->check(CLI::ExistingDirectory);
  sweep->add_option("--codebook", codebook, "bias codebook file")->check(CLI::ExistingFile);
  sweep->add_option("--images", sweep_images, "directory of PNG files")->required()->check(CLI::ExistingDirectory);
  sweep->add_option("--out", sweep_out, "CSV output")->required();
  sweep->add_option("--budget", compress_options.overfit_budget, "overfitting rounds");

  // synth
  auto* synth = app.add_subcommand("synth", "write procedural test images");
  std::string synth_out;
  int64_t synth_count = 20, synth_height = 128, synth_width = 128;
  uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--count", synth_count, "number of images")->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_height, "image height")->check(CLI::PositiveNumber);
  synth->add_option("--width", synth_width, "image width")->check(CLI::PositiveNumber);
  synth->add_option("--seed", synth_seed, "base seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    ReportError("usage", e.what());
    return kExitUsage;
  }

  try {
    if (*train) {
      auto cfg = DeskModelConfig(train_codec);
      const auto tc = LoadTrainingConfig(train_config, cfg);
      cfg.weights = tc.weights;
      cfg.codec.zeta = tc.zeta;
      auto options = tc.train;
      if (train->count("--epochs")) options.epochs = train_epochs;
      if (train->count("--seed")) options.seed = train_seed;
      const auto patches = LoadPatches(train_data);
      std::ostringstream prov;
      prov << "stage1 epochs=" << options.epochs << " patches=" << patches.size(0) << "x"
           << train_data.size << " data=" << (train_data.dir.empty() ? "synthetic" : train_data.dir)
           << " seed=" << options.seed;
      cfg.provenance = prov.str();
      auto model = CreateModel(cfg, options.seed);
      const auto history = TrainStage1(model, patches, options, [](const EpochMetrics& m) {
        std::cerr << "epoch " << m.epoch << " loss " << m.loss << " bpp " << m.bpp << '\n';
      });
      SaveCheckpoint(model, train_out);
      if (!train_metrics.empty()) WriteTextAtomic(train_metrics, MetricsCsv(history));
    } else if (*meta) {
      auto model = LoadCheckpoint(meta_in);
      const auto tc = LoadTrainingConfig(meta_config, model->config());
      auto mc = tc.meta;
      if (meta_epochs >= 0) mc.epochs = meta_epochs;
      if (first_order) mc.second_order = false;
      model->mutable_config().weights = tc.weights;
      const auto patches = LoadPatches(meta_data);
      std::ostringstream log;
      log << "epoch,outer_loss\n";
      MetaFinetune(model, patches, mc, [&](const MetaEpoch& e) {
        std::cerr << "meta epoch " << e.epoch << " outer loss " << e.outer_loss << '\n';
        log << e.epoch << ',' << e.outer_loss << '\n';
      });
      model->mutable_config().provenance +=
          "; meta n=" + std::to_string(mc.inner_iterations) + " epochs=" + std::to_string(mc.epochs) +
          (mc.second_order ? " second-order" : " first-order");
      SaveCheckpoint(model, meta_out);
      if (!meta_metrics.empty()) WriteTextAtomic(meta_metrics, log.str());
    } else if (*clusters) {
      auto bank = CodecBank::Load(clusters_models);
      const auto patches = LoadPatches(clusters_data);
      CodebookSet books;
      for (int id = 0; id < static_cast<int>(bank.size()); ++id) {
        auto& model = bank.at(id);
        books[id] = BuildBiasClusters(model, patches, clusters_k, bias_options,
                                      model.config().weights, clusters_seed);
        std::cerr << "codec " << id << ": " << books[id].size() << " centroids\n";
      }
      SaveCodebooks(books, clusters_out);
    } else if (*compress) {
      auto bank = CodecBank::Load(models);
      const auto books = MaybeLoadCodebooks(codebook);
      const auto result =
          Compress(ReadPng(input), {target_bpp, margin}, bank, books, compress_options);
      WriteFileAtomic(output, result.bytes);
      nlohmann::json summary = {{"bpp", result.bpp},
                                {"codec_id", result.bitstream.header.codec_id},
                                {"bits", result.bitstream.header.bits},
                                {"best_effort", result.best_effort},
                                {"trials", result.trials},
                                {"trial_bound", result.trial_bound}};
      std::cout << summary.dump() << std::endl;
      if (!trial_log.empty()) {
        nlohmann::json log = nlohmann::json::array();
        for (const auto& t : result.log) {
          log.push_back({{"stage", t.stage}, {"codec_id", t.codec_id}, {"bits", t.bits},
                         {"bpp", t.bpp}});
        }
        WriteTextAtomic(trial_log, log.dump(2));
      }
      if (result.best_effort) {
        std::cerr << "warning: target " << target_bpp << " bpp not reached; achieved "
                  << result.bpp << " bpp\n";
      }
    } else if (*decompress) {
      auto bank = CodecBank::Load(models);
      const auto books = MaybeLoadCodebooks(codebook);
      WritePng(output, Decompress(ReadFileBytes(input), bank, books));
    } else if (*eval) {
      const auto x = ReadPng(eval_original);
      const auto y = ReadPng(eval_recon);
      Bitstream bs;
      if (!eval_bitstream.empty()) {
        const auto bytes = ReadFileBytes(eval_bitstream);
        bs = ParseContainer(bytes);
        eval_bits = 8 * bytes.size();
      }
      auto r = Evaluate(x, y, eval_bits);
      r.image_id = fs::path(eval_original).stem().string();
      if (!eval_bitstream.empty()) {
        r.codec_id = bs.header.codec_id;
        r.bits = bs.header.bits;
        r.bits_payload = 8 * bs.payload.size();
        r.bits_overhead = r.bits_total - r.bits_payload;
        r.best_effort = (bs.header.flags & kFlagBestEffort) != 0;
      }
      WriteMetricsHeader(std::cout);
      WriteMetricsRow(std::cout, r);
    } else if (*sweep) {
      auto bank = CodecBank::Load(models);
      const auto books = MaybeLoadCodebooks(codebook);
      std::ostringstream csv;
      WriteMetricsHeader(csv);
      for (const auto& path : ListPngFiles(sweep_images)) {
        const auto image = ReadPng(path);
        const auto id = fs::path(path).stem().string();
        for (double t : kTargetBitrates) {
          const auto r = CompressAndMeasure(image, id, t, 0.15, bank, books, compress_options);
          WriteMetricsRow(csv, r);
          std::cerr << id << " target " << t << " bpp " << r.bpp << '\n';
        }
      }
      WriteTextAtomic(sweep_out, csv.str());
    } else if (*synth) {
      fs::create_directories(synth_out);
      for (int64_t i = 0; i < synth_count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img%03lld.png", static_cast<long long>(i));
        WritePng((fs::path(synth_out) / name).string(),
                 SynthImage(synth_height, synth_width, synth_seed * 7919 + static_cast<uint64_t>(i)));
      }
    }
  } catch (const Error& e) {
    ReportError(ErrorCodeName(e.code()), e.what());
    return kExitError;
  } catch (const c10::Error& e) {
    ReportError("tensor", e.what_without_backtrace());
    return kExitError;
  } catch (const std::exception& e) {
    ReportError("internal", e.what());
    return kExitError;
  }
  return 0;
}

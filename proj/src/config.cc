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

#include "metacodec/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>

#include "metacodec/error.h"

namespace metacodec {

namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

double ParseDouble(const std::string& key, const std::string& value) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  METACODEC_CHECK(ec == std::errc() && ptr == value.data() + value.size(),
                  ErrorCode::kInvalidArgument, "config key " + key + " expects a number");
  return v;
}

int64_t ParseInt(const std::string& key, const std::string& value) {
  int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  METACODEC_CHECK(ec == std::errc() && ptr == value.data() + value.size(),
                  ErrorCode::kInvalidArgument, "config key " + key + " expects an integer");
  return v;
}

bool ParseBool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::kInvalidArgument, "config key " + key + " expects true or false");
}

}  // namespace

KeyValues ParseKeyValues(const std::string& text) {
  KeyValues values;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    METACODEC_CHECK(eq != std::string::npos, ErrorCode::kInvalidArgument,
                    "config line " + std::to_string(number) + " has no '='");
    const auto key = Trim(line.substr(0, eq));
    METACODEC_CHECK(!key.empty(), ErrorCode::kInvalidArgument,
                    "config line " + std::to_string(number) + " has an empty key");
    values[key] = Trim(line.substr(eq + 1));
  }
  return values;
}

KeyValues LoadKeyValues(const std::string& path) {
  std::ifstream in(path);
  METACODEC_CHECK(in.good(), ErrorCode::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseKeyValues(buffer.str());
}

void ApplyKeyValues(const KeyValues& values, TrainingConfig& config) {
  using Setter = std::function<void(const std::string&, const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"lambda_d1", [&](auto& k, auto& v) { config.weights.ms_ssim = ParseDouble(k, v); }},
      {"lambda_d2", [&](auto& k, auto& v) { config.weights.mse = ParseDouble(k, v); }},
      {"lambda_d3", [&](auto& k, auto& v) { config.weights.perceptual = ParseDouble(k, v); }},
      {"lambda_r", [&](auto& k, auto& v) { config.weights.rate = ParseDouble(k, v); }},
      {"lambda_m", [&](auto& k, auto& v) { config.weights.importance = ParseDouble(k, v); }},
      {"zeta", [&](auto& k, auto& v) { config.zeta = ParseDouble(k, v); }},
      {"epochs", [&](auto& k, auto& v) { config.train.epochs = static_cast<int>(ParseInt(k, v)); }},
      {"batch_size",
       [&](auto& k, auto& v) {
         config.train.batch_size = static_cast<int>(ParseInt(k, v));
         config.meta.batch_size = config.train.batch_size;
       }},
      {"learning_rate", [&](auto& k, auto& v) { config.train.learning_rate = ParseDouble(k, v); }},
      {"seed",
       [&](auto& k, auto& v) {
         config.train.seed = static_cast<uint64_t>(ParseInt(k, v));
         config.meta.seed = config.train.seed;
       }},
      {"inner_iters",
       [&](auto& k, auto& v) { config.meta.inner_iterations = static_cast<int>(ParseInt(k, v)); }},
      {"inner_lr", [&](auto& k, auto& v) { config.meta.inner_lr = ParseDouble(k, v); }},
      {"outer_lr", [&](auto& k, auto& v) { config.meta.outer_lr = ParseDouble(k, v); }},
      {"second_order", [&](auto& k, auto& v) { config.meta.second_order = ParseBool(k, v); }},
      {"meta_epochs",
       [&](auto& k, auto& v) { config.meta.epochs = static_cast<int>(ParseInt(k, v)); }},
  };
  for (const auto& [key, value] : values) {
    const auto it = setters.find(key);
    METACODEC_CHECK(it != setters.end(), ErrorCode::kInvalidArgument,
                    "unknown config key " + key);
    it->second(key, value);
  }
  config.weights.Validate();
  config.train.Validate();
  config.meta.Validate();
}

}  // namespace metacodec

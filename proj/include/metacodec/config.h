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

#ifndef METACODEC_CONFIG_H_
#define METACODEC_CONFIG_H_

// Human-readable training configuration: one `key = value` per line, `#`
// starts a comment. Recognized keys:
//   lambda_d1 lambda_d2 lambda_d3 lambda_r lambda_m zeta
//   epochs batch_size learning_rate seed
//   inner_iters inner_lr outer_lr second_order meta_epochs

#include <map>
#include <string>

#include "metacodec/meta.h"
#include "metacodec/model.h"
#include "metacodec/trainer.h"

namespace metacodec {

using KeyValues = std::map<std::string, std::string>;

KeyValues ParseKeyValues(const std::string& text);
KeyValues LoadKeyValues(const std::string& path);

struct TrainingConfig {
  LossWeights weights;
  double zeta = 0.5;
  TrainOptions train;
  MetaConfig meta;
};

// Overlays `values` on `config`; unknown keys and malformed values throw.
void ApplyKeyValues(const KeyValues& values, TrainingConfig& config);

}  // namespace metacodec

#endif  // METACODEC_CONFIG_H_

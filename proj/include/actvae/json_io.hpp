// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <json.hpp>

#include "actvae/model.hpp"
#include "actvae/training.hpp"

namespace actvae {

void to_json(nlohmann::ordered_json& j, const ModelConfig& c);
void to_json(nlohmann::ordered_json& j, const TrainHyper& h);

/// Overlays the keys present in `j` onto `c`; unknown keys are rejected.
void merge_json(const nlohmann::json& j, ModelConfig& c);
void merge_json(const nlohmann::json& j, TrainHyper& h);

}  // namespace actvae

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/json_io.hpp"

#include <set>
#include <stdexcept>

namespace actvae {
namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known,
                    const char* what) {
  if (!j.is_object()) throw std::invalid_argument(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) {
      throw std::invalid_argument(std::string("unknown ") + what + " key '" + key + "'");
    }
  }
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void to_json(nlohmann::ordered_json& j, const ModelConfig& c) {
  j = nlohmann::ordered_json{{"joints", c.joints},
                             {"categories", c.categories},
                             {"latent_dim", c.latent_dim},
                             {"enc_hidden", c.enc_hidden},
                             {"dec_hidden", c.dec_hidden},
                             {"rollout_steps", c.rollout_steps},
                             {"use_action_label", c.use_action_label},
                             {"condition_on_past_latents", c.condition_on_past_latents},
                             {"temporal_coherence", c.temporal_coherence},
                             {"residual_decoding", c.residual_decoding}};
}

void to_json(nlohmann::ordered_json& j, const TrainHyper& h) {
  j = nlohmann::ordered_json{{"lambda_dis", h.lambda_dis},
                             {"lambda_div", h.lambda_div},
                             {"lr", h.adam.lr},
                             {"beta1", h.adam.beta1},
                             {"beta2", h.adam.beta2},
                             {"eps", h.adam.eps},
                             {"batch", h.batch},
                             {"epochs", h.epochs},
                             {"max_steps", h.max_steps},
                             {"seed", h.seed},
                             {"clip_norm", h.clip_norm}};
}

void merge_json(const nlohmann::json& j, ModelConfig& c) {
  reject_unknown(j,
                 {"joints", "categories", "latent_dim", "enc_hidden", "dec_hidden",
                  "rollout_steps", "use_action_label", "condition_on_past_latents",
                  "temporal_coherence", "residual_decoding"},
                 "model config");
  take(j, "joints", c.joints);
  take(j, "categories", c.categories);
  take(j, "latent_dim", c.latent_dim);
  take(j, "enc_hidden", c.enc_hidden);
  take(j, "dec_hidden", c.dec_hidden);
  take(j, "rollout_steps", c.rollout_steps);
  take(j, "use_action_label", c.use_action_label);
  take(j, "condition_on_past_latents", c.condition_on_past_latents);
  take(j, "temporal_coherence", c.temporal_coherence);
  take(j, "residual_decoding", c.residual_decoding);
}

void merge_json(const nlohmann::json& j, TrainHyper& h) {
  reject_unknown(j,
                 {"lambda_dis", "lambda_div", "lr", "beta1", "beta2", "eps", "batch", "epochs",
                  "max_steps", "seed", "clip_norm"},
                 "training");
  take(j, "lambda_dis", h.lambda_dis);
  take(j, "lambda_div", h.lambda_div);
  take(j, "lr", h.adam.lr);
  take(j, "beta1", h.adam.beta1);
  take(j, "beta2", h.adam.beta2);
  take(j, "eps", h.adam.eps);
  take(j, "batch", h.batch);
  take(j, "epochs", h.epochs);
  take(j, "max_steps", h.max_steps);
  take(j, "seed", h.seed);
  take(j, "clip_norm", h.clip_norm);
}

}  // namespace actvae

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "actvae/gaussian.hpp"
#include "actvae/pose.hpp"
#include "actvae/recurrent.hpp"

namespace actvae {

/// Architecture sizes and ablation switches.
///
/// Encoder and decoder both read [pose (2J) ; label (C) ; latent (d_z)].
/// use_action_label=false zeroes the label slot of both networks.
/// condition_on_past_latents=false zeroes the encoder's latent slot.
/// temporal_coherence=false additionally restarts the encoder from a zero
/// state every step, so each latent is an independent Gaussian given the
/// previous pose.
struct ModelConfig {
  int joints = 13;
  int categories = 9;
  int latent_dim = 512;
  int enc_hidden = 1024;
  int dec_hidden = 26;
  int rollout_steps = 8;
  bool use_action_label = true;
  bool condition_on_past_latents = true;
  bool temporal_coherence = true;
  /// Decoder output is added to the previous pose; false emits the pose directly.
  bool residual_decoding = true;

  /// Published network sizes: d_z 512, encoder hidden 1024, decoder hidden 2J.
  static ModelConfig reference(int joints, int categories);
  /// Small sizes for CPU-scale synthetic experiments.
  static ModelConfig desk(int joints, int categories);

  /// Applies one of "full", "wo_a", "wo_az", "wo_ac".
  void apply_ablation(const std::string& name);
  std::string ablation_name() const;

  int pose_dim() const { return 2 * joints; }
  int encoder_input_dim() const { return pose_dim() + categories + latent_dim; }
  int decoder_input_dim() const { return pose_dim() + categories + latent_dim; }

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

template <typename S>
struct Model {
  ModelConfig config;
  CellParams<S> encoder;
  LinearHead<S> mean_head;
  LinearHead<S> logvar_head;
  CellParams<S> decoder;
  LinearHead<S> pose_head;

  static Model zeros(const ModelConfig& config);
  static Model init(const ModelConfig& config, Rng& rng);

  Eigen::Index parameter_count() const;

  /// Visits every parameter array as (name, array&) in a fixed order.
  template <typename F>
  void for_each_param(F&& f) {
    zip_params(f, *this);
  }
  template <typename F>
  void for_each_param(F&& f) const {
    zip_params(f, *this);
  }

  template <typename T>
  Model<T> cast() const {
    return {config, encoder.template cast<T>(), mean_head.template cast<T>(),
            logvar_head.template cast<T>(), decoder.template cast<T>(),
            pose_head.template cast<T>()};
  }
};

/// Calls f(name, a.x, b.x, ...) for each parameter array x of the given
/// same-configuration models, in checkpoint order.
template <typename F, typename... Models>
void zip_params(F&& f, Models&... m) {
  f("encoder.weight", m.encoder.weight...);
  f("encoder.bias", m.encoder.bias...);
  f("mean_head.weight", m.mean_head.weight...);
  f("mean_head.bias", m.mean_head.bias...);
  f("logvar_head.weight", m.logvar_head.weight...);
  f("logvar_head.bias", m.logvar_head.bias...);
  f("decoder.weight", m.decoder.weight...);
  f("decoder.bias", m.decoder.bias...);
  f("pose_head.weight", m.pose_head.weight...);
  f("pose_head.bias", m.pose_head.bias...);
}

/// Encoder output for a batch: Gaussian parameters and the next state.
template <typename S>
struct EncoderOutput {
  Mat<S> mean;
  Mat<S> logvar;
  CellState<S> state;
};

/// Batched encoder step; every argument has one column per sequence.
template <typename S>
EncoderOutput<S> encoder_forward(const Model<S>& model, const Mat<S>& prev_pose,
                                 const Mat<S>& prev_latent, const CellState<S>& state,
                                 const Mat<S>& labels, CellCache<S>* cache = nullptr);

/// Batched decoder step; returns the predicted pose and the next state.
template <typename S>
std::pair<Mat<S>, CellState<S>> decoder_forward(const Model<S>& model, const Mat<S>& prev_pose,
                                                const Mat<S>& latent, const CellState<S>& state,
                                                const Mat<S>& labels,
                                                CellCache<S>* cache = nullptr);

template <typename S>
std::pair<DiagonalGaussian<S>, CellState<S>> encoder_step(const Model<S>& model,
                                                          const Pose& prev_pose,
                                                          const Latent<S>& prev_latent,
                                                          const CellState<S>& state,
                                                          const ActionLabel& label);

template <typename S>
std::pair<Pose, CellState<S>> decoder_step(const Model<S>& model, const Pose& prev_pose,
                                           const Latent<S>& latent, const CellState<S>& state,
                                           const ActionLabel& label);

/// Everything produced by an N-step rollout over a batch of B sequences.
/// Vectors are indexed by step; matrices have one column per sequence.
template <typename S>
struct RolloutTrace {
  Mat<S> seed_pose;
  Mat<S> labels;
  Mat<S> initial_latent;
  std::vector<Mat<S>> poses;
  std::vector<Mat<S>> latents;
  std::vector<Mat<S>> means;
  std::vector<Mat<S>> logvars;
  /// Standard-normal draws behind each latent (zero for mean rollouts).
  std::vector<Mat<S>> noise;
  std::vector<CellState<S>> encoder_states;
  std::vector<CellState<S>> decoder_states;
  std::vector<CellCache<S>> encoder_cache;
  std::vector<CellCache<S>> decoder_cache;
  bool sampled = false;

  Eigen::Index steps() const { return static_cast<Eigen::Index>(poses.size()); }
  Eigen::Index batch() const { return seed_pose.cols(); }
  DiagonalGaussian<S> gaussian(Eigen::Index step, Eigen::Index seq = 0) const;
  Pose pose(Eigen::Index step, Eigen::Index seq = 0) const;
};

/// The recurrence shared by training and inference: zero initial states,
/// initial latent from N(0, I), then encoder -> latent -> decoder per step
/// with the model's own predictions fed forward. With sample=false every
/// latent (including the initial one) is the distribution mean and `rng`
/// is not touched. Backward caches are kept when record_cache is set.
template <typename S>
RolloutTrace<S> rollout(const Model<S>& model, const Mat<S>& seed_poses, const Mat<S>& labels,
                        int n_steps, Rng& rng, bool sample, bool record_cache = false);

template <typename S>
RolloutTrace<S> rollout(const Model<S>& model, const Pose& seed_pose, const ActionLabel& label,
                        int n_steps, Rng& rng, bool sample);

template <typename S>
struct LossTerms {
  S total = 0;
  S dis = 0;
  S div = 0;
};

/// lambda_dis * sum |p_hat - p| + lambda_div * sum KL, each summed over the
/// sequence and averaged over the batch. targets[i] is 2J x B.
template <typename S>
LossTerms<S> vae_loss(const RolloutTrace<S>& trace, const std::vector<Mat<S>>& targets,
                      S lambda_dis, S lambda_div);

/// Loss plus its gradient with respect to every model parameter, obtained by
/// backpropagation through the recorded rollout. `grads` is overwritten.
/// Requires a trace recorded with record_cache=true.
template <typename S>
LossTerms<S> vae_loss_and_grad(const Model<S>& model, const RolloutTrace<S>& trace,
                               const std::vector<Mat<S>>& targets, S lambda_dis, S lambda_div,
                               Model<S>& grads);

/// Evidence lower bound estimate with a Laplace(p_hat, scale) likelihood,
/// averaged over the batch. Diagnostic only.
template <typename S>
double elbo_report(const RolloutTrace<S>& trace, const std::vector<Mat<S>>& targets,
                   double laplace_scale);

}  // namespace actvae

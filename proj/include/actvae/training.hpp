// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "actvae/data.hpp"
#include "actvae/model.hpp"

namespace actvae {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

/// First/second moment accumulators shaped like the model.
template <typename S>
struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  Model<S> first_moment;
  Model<S> second_moment;

  static AdamState zeros(const ModelConfig& model, const AdamConfig& config);
};

/// Bias-corrected Adam update of a single array; `step` is the 1-based
/// index of this update. Throws on shape mismatch or a non-finite gradient.
template <typename S>
void adam_update(Mat<S>& param, const Mat<S>& grad, Mat<S>& m, Mat<S>& v, std::int64_t step,
                 const AdamConfig& config, const std::string& name);
template <typename S>
void adam_update(Vec<S>& param, const Vec<S>& grad, Vec<S>& m, Vec<S>& v, std::int64_t step,
                 const AdamConfig& config, const std::string& name);

/// One Adam step over every model parameter; increments state.step.
template <typename S>
void adam_step(Model<S>& params, const Model<S>& grads, AdamState<S>& state);

struct TrainHyper {
  double lambda_dis = 200.0;
  double lambda_div = 0.002;
  AdamConfig adam;
  int batch = 24;
  int epochs = 1;
  /// Stop after this many optimizer steps in total; 0 means no cap.
  std::int64_t max_steps = 0;
  std::uint64_t seed = 0;
  /// Global gradient-norm clip; 0 disables it.
  double clip_norm = 0.0;
  bool operator==(const TrainHyper&) const = default;
};

struct TrainProgress {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  /// Batches already consumed within the current epoch.
  std::int64_t cursor = 0;
  bool operator==(const TrainProgress&) const = default;
};

struct StepRecord {
  std::int64_t step = 0;
  double dis = 0.0;
  double div = 0.0;
  double total = 0.0;
  double wall_ms = 0.0;
};

struct LossHistory {
  std::vector<float> dis;
  std::vector<float> div;
  std::vector<float> total;
  bool operator==(const LossHistory&) const = default;
};

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  int version = kCheckpointVersion;
  Model<float> model;
  AdamState<float> optimizer;
  Rng::State rng;
  TrainProgress progress;
  TrainHyper hyper;
  LossHistory history;

  const ModelConfig& config() const { return model.config; }
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Text manifest (version, configuration, counters, array table) followed
/// by the arrays as raw little-endian float32.
std::string serialize_checkpoint(const Checkpoint& c);
Checkpoint parse_checkpoint(const std::string& bytes);
/// Writes to a temporary sibling and renames it into place.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Fresh model and optimizer state for a dataset; validates the pairing.
Checkpoint init_training(const Dataset& data, const ModelConfig& config, const TrainHyper& hyper);

using StepCallback = std::function<void(const StepRecord&)>;

/// Runs optimizer steps until `c.hyper.epochs` epochs are complete or
/// `c.hyper.max_steps` steps have been taken. Every random draw derives from
/// (seed, epoch) for shuffling and (seed, step) for windows and latents, so
/// continuing a saved checkpoint matches an uninterrupted run exactly.
void train_continue(Checkpoint& c, const Dataset& data, const StepCallback& on_step = {});

/// init_training followed by train_continue.
Checkpoint train(const Dataset& data, const ModelConfig& config, const TrainHyper& hyper,
                 const StepCallback& on_step = {});

}  // namespace actvae

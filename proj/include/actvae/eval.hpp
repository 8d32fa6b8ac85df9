// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actvae/data.hpp"
#include "actvae/model.hpp"

namespace actvae {

/// Frames of one predicted or ground-truth sequence, in pixel coordinates.
using PoseSequence = std::vector<Pose>;

/// Mean over (frame, joint) of the Euclidean joint distance.
double mean_joint_distance(const PoseSequence& a, const PoseSequence& b);

/// Best-of-K accuracy: mean of the n_keep smallest per-sample distances.
double l2_best_of_k(const std::vector<PoseSequence>& samples, const PoseSequence& truth,
                    int n_keep);

/// Population standard deviation across samples of every (frame, joint,
/// axis) coordinate, averaged over all coordinates. Requires K >= 2.
double diversity_std(const std::vector<PoseSequence>& samples);

/// Repeats the seed pose n_steps times.
PoseSequence baseline_copy_last(const Pose& seed_pose, int n_steps);

struct SequenceMetrics {
  std::string id;
  int action_index = 0;
  double l2_best_of_k = 0.0;
  double diversity_std = 0.0;
  double baseline_l2 = 0.0;
};

struct MetricReport {
  double l2_best_of_k = 0.0;  // pixels, canonical 128 x 128 frame
  double diversity_std = 0.0;
  double baseline_l2 = 0.0;
  int k = 0;
  int n_keep = 0;
  int n_steps = 0;
  std::vector<SequenceMetrics> sequences;

  /// One JSON record per sequence, then a summary record.
  std::string to_jsonl() const;
  std::string summary_table() const;
};

struct EvalOptions {
  int k = 100;
  int n_keep = 10;
  int n_steps = 8;
  std::uint64_t seed = 0;
  bool sample = true;
  /// Overrides each record's own label when >= 0.
  int label_override = -1;
};

/// For every record: seed = frame 0, truth = frames 1..n_steps; K rollouts
/// from one Rng stream forked per record index.
MetricReport evaluate(const Model<float>& model, const Dataset& data, const EvalOptions& options);

/// K rollouts from one seed pose, denormalized (clamped) to the record's
/// frame. Sequence k is rollout column k.
std::vector<PoseSequence> sample_sequences(const Model<float>& model, const Pose& pixel_seed,
                                           FrameSize frame, const ActionLabel& label, int k,
                                           int n_steps, Rng& rng, bool sample);

}  // namespace actvae

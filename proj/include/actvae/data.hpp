// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "actvae/pose.hpp"
#include "actvae/rng.hpp"

namespace actvae {

/// Canonical metric frame: coordinates in [0, 127] on both axes.
inline constexpr int kCanonicalFrame = 128;

/// Malformed or out-of-contract data; `line` is 1-based, 0 when not applicable.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct FrameSize {
  int width = kCanonicalFrame;
  int height = kCanonicalFrame;
  bool operator==(const FrameSize&) const = default;
};

struct PoseSequenceRecord {
  std::string id;
  std::string action_name;
  int action_index = 0;
  FrameSize frame_size;
  std::vector<Pose> frames;  // pixel coordinates

  Eigen::Index joints() const { return frames.empty() ? 0 : frames.front().joints(); }
  /// Throws SchemaError on T < 2, inconsistent J, or out-of-frame coordinates.
  void validate() const;
  bool operator==(const PoseSequenceRecord&) const = default;
};

/// Contents of one interchange file: a header naming the categories and the
/// joint count, followed by one record per line.
struct Dataset {
  std::vector<std::string> categories;
  int joints = 0;
  std::vector<PoseSequenceRecord> records;

  void validate() const;
  bool operator==(const Dataset&) const = default;
};

inline constexpr const char* kSequenceFormat = "actvae-pose-sequences";
inline constexpr int kSequenceFormatVersion = 1;

Dataset load_sequences(const std::filesystem::path& path);
void save_sequences(const std::filesystem::path& path, const Dataset& data);
Dataset parse_sequences(const std::string& text);
std::string serialize_sequences(const Dataset& data);

/// Maps [0, W-1] x [0, H-1] linearly onto [-1, 1]^2.
Pose normalize(const Pose& pixel_pose, FrameSize frame);
/// Inverse of normalize.
Pose denormalize(const Pose& normalized_pose, FrameSize frame);
/// Like denormalize but clamps into the frame; for model outputs.
Pose denormalize_clamped(const Pose& normalized_pose, FrameSize frame);
/// Rescales a pixel pose into the canonical 128 x 128 frame.
Pose to_canonical(const Pose& pixel_pose, FrameSize frame);

struct SyntheticJoint {
  std::array<double, 2> base{};
  std::array<double, 2> amplitude{};
  double phase = 0.0;
};

struct SyntheticCategory {
  std::string name;
  double omega = 0.0;  // radians per frame
  std::vector<SyntheticJoint> joints;
};

/// Parametric motion: joint j of category c at frame t is
///   base + amplitude * (1 + a) * sin(omega * t + phase + delta) + noise
/// with a ~ U(-amplitude_jitter, amplitude_jitter) and
/// delta ~ U(-phase_jitter, phase_jitter) drawn once per sequence and
/// noise ~ N(0, observation_noise^2) per coordinate.
struct SyntheticSpec {
  FrameSize frame_size;
  std::vector<SyntheticCategory> categories;
  double phase_jitter = 0.0;
  double amplitude_jitter = 0.0;
  double observation_noise = 0.0;

  int joints() const;
  /// Distinct frequencies, consistent joint counts, and every noise-free
  /// position (with jitter) at least 4 noise deviations inside the frame.
  void validate() const;

  /// Two categories (omega 0.2 and 0.8) sharing one four-joint layout.
  static SyntheticSpec desk_default();
  static SyntheticSpec from_json(const std::string& text);
  static SyntheticSpec load(const std::filesystem::path& path);
  std::string to_json() const;
};

/// Hidden per-sequence parameters behind a generated record.
struct SyntheticTruth {
  int category = 0;
  double phase_offset = 0.0;
  double amplitude_scale = 1.0;
};

struct SyntheticData {
  Dataset dataset;
  std::vector<SyntheticTruth> truth;
};

/// Sequence k has category k mod C. Deterministic in (spec, n, T, rng state).
SyntheticData generate_synthetic(const SyntheticSpec& spec, int n_sequences, int frames,
                                 Rng& rng);

/// Noise-free pixel pose of a generated sequence at frame t.
Pose synthetic_mean_pose(const SyntheticSpec& spec, const SyntheticTruth& truth, double t);

/// Zero-crossing frequency estimate: for each joint, counts sign changes of
/// the displacement from its base projected onto the amplitude direction,
/// converts the joint-averaged count to radians per frame, and returns the
/// category with the nearest omega. Uses category `reference` for bases.
int classify_by_frequency(const SyntheticSpec& spec, const std::vector<Pose>& pixel_frames,
                          int reference = 0);
double estimate_frequency(const SyntheticSpec& spec, const std::vector<Pose>& pixel_frames,
                          int reference = 0);

struct SplitRatios {
  double train = 1.0;
  double val = 0.0;
  double test = 0.0;
};

struct DatasetSplit {
  Dataset train;
  Dataset val;
  Dataset test;
};

/// Stratified by action index; within a category the record order is
/// shuffled with a seed-derived stream, then cut by the ratios.
DatasetSplit split(const Dataset& data, SplitRatios ratios, std::uint64_t seed);

}  // namespace actvae

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <Eigen/Dense>
#include <vector>

namespace actvae {

/// J two-dimensional keypoints stored interleaved as x0, y0, x1, y1, ...
/// Pixel poses live in a W x H frame; normalized poses map each axis of
/// that frame onto [-1, 1].
struct Pose {
  Eigen::VectorXd coords;
  bool normalized = false;

  Pose() = default;
  Pose(Eigen::VectorXd c, bool is_normalized) : coords(std::move(c)), normalized(is_normalized) {}
  static Pose zeros(Eigen::Index joints, bool is_normalized = true) {
    return {Eigen::VectorXd::Zero(2 * joints), is_normalized};
  }

  Eigen::Index joints() const { return coords.size() / 2; }
  double x(Eigen::Index j) const { return coords[2 * j]; }
  double y(Eigen::Index j) const { return coords[2 * j + 1]; }
  double& x(Eigen::Index j) { return coords[2 * j]; }
  double& y(Eigen::Index j) { return coords[2 * j + 1]; }

  /// Throws std::invalid_argument on wrong joint count, non-finite entries,
  /// or (when normalized) coordinates outside [-1, 1].
  void validate(Eigen::Index expected_joints) const;

  bool operator==(const Pose&) const = default;
};

/// One-hot action category.
class ActionLabel {
 public:
  static ActionLabel from_index(int index, int categories);
  /// Validates entries in {0, 1} with exactly one 1.
  static ActionLabel from_onehot(const std::vector<double>& onehot);

  int index() const { return index_; }
  int categories() const { return categories_; }
  Eigen::VectorXd onehot() const;

  bool operator==(const ActionLabel&) const = default;

 private:
  ActionLabel(int index, int categories) : index_(index), categories_(categories) {}
  int index_;
  int categories_;
};

}  // namespace actvae

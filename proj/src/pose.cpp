// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/pose.hpp"

#include <stdexcept>
#include <string>

namespace actvae {

void Pose::validate(Eigen::Index expected_joints) const {
  if (coords.size() % 2 != 0 || joints() != expected_joints) {
    throw std::invalid_argument("Pose: expected " + std::to_string(expected_joints) +
                                " joints, got " + std::to_string(coords.size()) +
                                " coordinates");
  }
  if (!coords.allFinite()) throw std::invalid_argument("Pose: non-finite coordinate");
  if (normalized && coords.size() > 0 && coords.cwiseAbs().maxCoeff() > 1.0) {
    throw std::invalid_argument("Pose: normalized coordinate outside [-1, 1]");
  }
}

ActionLabel ActionLabel::from_index(int index, int categories) {
  if (categories <= 0) throw std::invalid_argument("ActionLabel: category count must be positive");
  if (index < 0 || index >= categories) {
    throw std::invalid_argument("ActionLabel: index " + std::to_string(index) +
                                " outside [0, " + std::to_string(categories) + ")");
  }
  return {index, categories};
}

ActionLabel ActionLabel::from_onehot(const std::vector<double>& onehot) {
  int hot = -1;
  for (std::size_t k = 0; k < onehot.size(); ++k) {
    if (onehot[k] == 1.0) {
      if (hot >= 0) throw std::invalid_argument("ActionLabel: more than one hot entry");
      hot = static_cast<int>(k);
    } else if (onehot[k] != 0.0) {
      throw std::invalid_argument("ActionLabel: entries must be 0 or 1");
    }
  }
  if (hot < 0) throw std::invalid_argument("ActionLabel: no hot entry");
  return {hot, static_cast<int>(onehot.size())};
}

Eigen::VectorXd ActionLabel::onehot() const {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(categories_);
  v[index_] = 1.0;
  return v;
}

}  // namespace actvae

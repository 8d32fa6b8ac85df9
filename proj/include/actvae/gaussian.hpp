// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include <Eigen/Dense>

#include "actvae/rng.hpp"

namespace actvae {

template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// Diagonal normal distribution over the latent space.
template <typename S>
struct DiagonalGaussian {
  Vec<S> mean;
  Vec<S> stddev;

  /// Builds from a log-variance vector: stddev = exp(logvar / 2).
  static DiagonalGaussian from_logvar(const Vec<S>& mean, const Vec<S>& logvar);

  Eigen::Index dim() const { return mean.size(); }
  /// Throws std::invalid_argument unless sizes match and stddev > 0.
  void validate() const;
};

template <typename S>
struct Latent {
  Vec<S> value;
};

/// mean + stddev * eps with eps drawn from `rng`.
template <typename S>
Latent<S> sample_gaussian(const DiagonalGaussian<S>& g, Rng& rng);

/// Reparameterized form with an explicit standard-normal draw.
template <typename S>
Latent<S> reparameterize(const DiagonalGaussian<S>& g, const Vec<S>& eps);

/// KL(N(mean, stddev^2) || N(0, I)), summed over dimensions.
template <typename S>
S kl_to_standard_normal(const DiagonalGaussian<S>& g);

/// Gradient of the KL above with respect to mean and stddev.
template <typename S>
void kl_to_standard_normal_grad(const DiagonalGaussian<S>& g, Vec<S>& d_mean,
                                Vec<S>& d_stddev);

/// Column of standard normals drawn from `rng`, in draw order.
template <typename S>
Vec<S> standard_normal(Eigen::Index n, Rng& rng);

}  // namespace actvae

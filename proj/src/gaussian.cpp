// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace actvae {

template <typename S>
DiagonalGaussian<S> DiagonalGaussian<S>::from_logvar(const Vec<S>& mean, const Vec<S>& logvar) {
  if (mean.size() != logvar.size()) {
    throw std::invalid_argument("DiagonalGaussian: mean/logvar size mismatch");
  }
  return {mean, (logvar.array() * S(0.5)).exp().matrix()};
}

template <typename S>
void DiagonalGaussian<S>::validate() const {
  if (mean.size() != stddev.size()) {
    throw std::invalid_argument("DiagonalGaussian: mean and stddev lengths differ");
  }
  for (Eigen::Index k = 0; k < stddev.size(); ++k) {
    if (!(stddev[k] > S(0))) {
      throw std::invalid_argument("DiagonalGaussian: stddev must be strictly positive");
    }
  }
}

template <typename S>
Vec<S> standard_normal(Eigen::Index n, Rng& rng) {
  Vec<S> eps(n);
  for (Eigen::Index k = 0; k < n; ++k) eps[k] = static_cast<S>(rng.normal());
  return eps;
}

template <typename S>
Latent<S> reparameterize(const DiagonalGaussian<S>& g, const Vec<S>& eps) {
  g.validate();
  if (eps.size() != g.dim()) throw std::invalid_argument("reparameterize: noise size mismatch");
  return {g.mean + g.stddev.cwiseProduct(eps)};
}

template <typename S>
Latent<S> sample_gaussian(const DiagonalGaussian<S>& g, Rng& rng) {
  g.validate();
  return reparameterize(g, standard_normal<S>(g.dim(), rng));
}

template <typename S>
S kl_to_standard_normal(const DiagonalGaussian<S>& g) {
  g.validate();
  const auto var = g.stddev.array().square();
  return S(0.5) * (g.mean.array().square() + var - S(1) - var.log()).sum();
}

template <typename S>
void kl_to_standard_normal_grad(const DiagonalGaussian<S>& g, Vec<S>& d_mean, Vec<S>& d_stddev) {
  g.validate();
  d_mean = g.mean;
  d_stddev = (g.stddev.array() - g.stddev.array().inverse()).matrix();
}

#define ACTVAE_INSTANTIATE(S)                                                          \
  template struct DiagonalGaussian<S>;                                                 \
  template Vec<S> standard_normal<S>(Eigen::Index, Rng&);                              \
  template Latent<S> reparameterize<S>(const DiagonalGaussian<S>&, const Vec<S>&);     \
  template Latent<S> sample_gaussian<S>(const DiagonalGaussian<S>&, Rng&);             \
  template S kl_to_standard_normal<S>(const DiagonalGaussian<S>&);                     \
  template void kl_to_standard_normal_grad<S>(const DiagonalGaussian<S>&, Vec<S>&, Vec<S>&);

ACTVAE_INSTANTIATE(float)
ACTVAE_INSTANTIATE(double)
// Extended precision serves as a finite-difference reference in gradient checks.
ACTVAE_INSTANTIATE(long double)

#undef ACTVAE_INSTANTIATE

}  // namespace actvae

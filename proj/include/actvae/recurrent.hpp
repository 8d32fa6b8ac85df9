// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#pragma once

#include "actvae/gaussian.hpp"
#include "actvae/rng.hpp"

namespace actvae {

/// Parameters of one LSTM layer. Gate rows are stacked in the order
/// input, forget, candidate, output; columns are [input ; previous hidden].
template <typename S>
struct CellParams {
  Eigen::Index input_dim = 0;
  Eigen::Index hidden_dim = 0;
  Mat<S> weight;  // (4 * hidden_dim) x (input_dim + hidden_dim)
  Vec<S> bias;    // 4 * hidden_dim

  static CellParams zeros(Eigen::Index input_dim, Eigen::Index hidden_dim);
  void validate() const;
  Eigen::Index parameter_count() const { return weight.size() + bias.size(); }
  template <typename T>
  CellParams<T> cast() const {
    return {input_dim, hidden_dim, weight.template cast<T>(), bias.template cast<T>()};
  }
};

/// Recurrent state. Each column is one sequence of a batch.
template <typename S>
struct CellState {
  Mat<S> hidden;
  Mat<S> memory;

  static CellState zeros(Eigen::Index hidden_dim, Eigen::Index batch = 1) {
    return {Mat<S>::Zero(hidden_dim, batch), Mat<S>::Zero(hidden_dim, batch)};
  }
};

template <typename S>
struct LinearHead {
  Mat<S> weight;  // out x in
  Vec<S> bias;    // out

  static LinearHead zeros(Eigen::Index in_dim, Eigen::Index out_dim);
  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
  void validate() const;
  Eigen::Index parameter_count() const { return weight.size() + bias.size(); }
  template <typename T>
  LinearHead<T> cast() const {
    return {weight.template cast<T>(), bias.template cast<T>()};
  }
};

/// Activations kept from a forward step for the backward pass.
template <typename S>
struct CellCache {
  Mat<S> joint;  // [input ; previous hidden]
  Mat<S> prev_memory;
  Mat<S> in_gate, forget_gate, candidate, out_gate;
  Mat<S> memory_tanh;
};

template <typename S>
CellState<S> cell_step(const CellParams<S>& params, const CellState<S>& state,
                       const Mat<S>& input, CellCache<S>* cache = nullptr);

/// Gradients flowing out of one cell step.
template <typename S>
struct CellInputGrads {
  Mat<S> input;
  Mat<S> hidden;
  Mat<S> memory;
};

/// Backpropagates d_hidden/d_memory (gradients w.r.t. the step's output
/// state) through one step; parameter gradients are accumulated into `grads`.
template <typename S>
CellInputGrads<S> cell_backward(const CellParams<S>& params, const CellCache<S>& cache,
                                const Mat<S>& d_hidden, const Mat<S>& d_memory,
                                CellParams<S>& grads);

template <typename S>
Mat<S> head_apply(const LinearHead<S>& head, const Mat<S>& x);

/// Accumulates parameter gradients and returns the gradient w.r.t. x.
template <typename S>
Mat<S> head_backward(const LinearHead<S>& head, const Mat<S>& x, const Mat<S>& d_out,
                     LinearHead<S>& grads);

/// Weights uniform in +-1/sqrt(input_dim + hidden_dim), drawn in column-major
/// order; forget-gate biases 1, other biases 0.
template <typename S>
CellParams<S> init_cell(Eigen::Index input_dim, Eigen::Index hidden_dim, Rng& rng);

/// Weights uniform in +-1/sqrt(in_dim), column-major draw order; zero bias.
template <typename S>
LinearHead<S> init_head(Eigen::Index in_dim, Eigen::Index out_dim, Rng& rng);

}  // namespace actvae

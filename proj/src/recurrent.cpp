// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/recurrent.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace actvae {
namespace {

template <typename S>
Mat<S> sigmoid(const Mat<S>& x) {
  return (S(1) / (S(1) + (-x.array()).exp())).matrix();
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

template <typename S>
void fill_uniform(Mat<S>& m, S bound, Rng& rng) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      m(r, c) = static_cast<S>(rng.uniform(-double(bound), double(bound)));
}

}  // namespace

template <typename S>
CellParams<S> CellParams<S>::zeros(Eigen::Index input_dim, Eigen::Index hidden_dim) {
  require(input_dim > 0 && hidden_dim > 0, "CellParams: dimensions must be positive");
  return {input_dim, hidden_dim, Mat<S>::Zero(4 * hidden_dim, input_dim + hidden_dim),
          Vec<S>::Zero(4 * hidden_dim)};
}

template <typename S>
void CellParams<S>::validate() const {
  require(input_dim > 0 && hidden_dim > 0, "CellParams: dimensions must be positive");
  require(weight.rows() == 4 * hidden_dim && weight.cols() == input_dim + hidden_dim,
          "CellParams: weight shape inconsistent with dimensions");
  require(bias.size() == 4 * hidden_dim, "CellParams: bias length must be 4 * hidden_dim");
  require(all_finite(weight) && all_finite(bias), "CellParams: non-finite entry");
}

template <typename S>
LinearHead<S> LinearHead<S>::zeros(Eigen::Index in_dim, Eigen::Index out_dim) {
  require(in_dim > 0 && out_dim > 0, "LinearHead: dimensions must be positive");
  return {Mat<S>::Zero(out_dim, in_dim), Vec<S>::Zero(out_dim)};
}

template <typename S>
void LinearHead<S>::validate() const {
  require(weight.rows() > 0 && weight.cols() > 0, "LinearHead: empty weight");
  require(bias.size() == weight.rows(), "LinearHead: bias length must equal out_dim");
  require(all_finite(weight) && all_finite(bias), "LinearHead: non-finite entry");
}

template <typename S>
CellState<S> cell_step(const CellParams<S>& params, const CellState<S>& state,
                       const Mat<S>& input, CellCache<S>* cache) {
  const Eigen::Index hd = params.hidden_dim;
  if (input.rows() != params.input_dim) {
    throw std::invalid_argument("cell_step: input length " + std::to_string(input.rows()) +
                                " != input_dim " + std::to_string(params.input_dim));
  }
  require(state.hidden.rows() == hd && state.memory.rows() == hd,
          "cell_step: state size != hidden_dim");
  require(state.hidden.cols() == input.cols() && state.memory.cols() == input.cols(),
          "cell_step: batch size mismatch between state and input");

  Mat<S> joint(params.input_dim + hd, input.cols());
  joint.topRows(params.input_dim) = input;
  joint.bottomRows(hd) = state.hidden;

  Mat<S> pre = params.weight * joint;
  pre.colwise() += params.bias;

  Mat<S> i = sigmoid<S>(pre.middleRows(0, hd));
  Mat<S> f = sigmoid<S>(pre.middleRows(hd, hd));
  Mat<S> g = pre.middleRows(2 * hd, hd).array().tanh().matrix();
  Mat<S> o = sigmoid<S>(pre.middleRows(3 * hd, hd));

  CellState<S> next;
  next.memory = f.cwiseProduct(state.memory) + i.cwiseProduct(g);
  Mat<S> tc = next.memory.array().tanh().matrix();
  next.hidden = o.cwiseProduct(tc);

  if (cache != nullptr) {
    cache->joint = std::move(joint);
    cache->prev_memory = state.memory;
    cache->in_gate = std::move(i);
    cache->forget_gate = std::move(f);
    cache->candidate = std::move(g);
    cache->out_gate = std::move(o);
    cache->memory_tanh = std::move(tc);
  }
  return next;
}

template <typename S>
CellInputGrads<S> cell_backward(const CellParams<S>& params, const CellCache<S>& cache,
                                const Mat<S>& d_hidden, const Mat<S>& d_memory,
                                CellParams<S>& grads) {
  const Eigen::Index hd = params.hidden_dim;
  const auto& i = cache.in_gate.array();
  const auto& f = cache.forget_gate.array();
  const auto& g = cache.candidate.array();
  const auto& o = cache.out_gate.array();
  const auto& tc = cache.memory_tanh.array();

  const auto d_mem_total =
      (d_memory.array() + d_hidden.array() * o * (S(1) - tc.square())).eval();

  Mat<S> d_pre(4 * hd, d_hidden.cols());
  d_pre.middleRows(0, hd) = (d_mem_total * g * i * (S(1) - i)).matrix();
  d_pre.middleRows(hd, hd) = (d_mem_total * cache.prev_memory.array() * f * (S(1) - f)).matrix();
  d_pre.middleRows(2 * hd, hd) = (d_mem_total * i * (S(1) - g.square())).matrix();
  d_pre.middleRows(3 * hd, hd) = (d_hidden.array() * tc * o * (S(1) - o)).matrix();

  grads.weight.noalias() += d_pre * cache.joint.transpose();
  grads.bias += d_pre.rowwise().sum();

  Mat<S> d_joint = params.weight.transpose() * d_pre;
  return {d_joint.topRows(params.input_dim), d_joint.bottomRows(hd),
          (d_mem_total * f).matrix()};
}

template <typename S>
Mat<S> head_apply(const LinearHead<S>& head, const Mat<S>& x) {
  if (x.rows() != head.in_dim()) {
    throw std::invalid_argument("head_apply: input length " + std::to_string(x.rows()) +
                                " != in_dim " + std::to_string(head.in_dim()));
  }
  require(head.bias.size() == head.out_dim(), "head_apply: bias length != out_dim");
  Mat<S> y = head.weight * x;
  y.colwise() += head.bias;
  return y;
}

template <typename S>
Mat<S> head_backward(const LinearHead<S>& head, const Mat<S>& x, const Mat<S>& d_out,
                     LinearHead<S>& grads) {
  grads.weight.noalias() += d_out * x.transpose();
  grads.bias += d_out.rowwise().sum();
  return head.weight.transpose() * d_out;
}

template <typename S>
CellParams<S> init_cell(Eigen::Index input_dim, Eigen::Index hidden_dim, Rng& rng) {
  auto p = CellParams<S>::zeros(input_dim, hidden_dim);
  fill_uniform<S>(p.weight, S(1) / std::sqrt(S(input_dim + hidden_dim)), rng);
  p.bias.segment(hidden_dim, hidden_dim).setOnes();
  return p;
}

template <typename S>
LinearHead<S> init_head(Eigen::Index in_dim, Eigen::Index out_dim, Rng& rng) {
  auto h = LinearHead<S>::zeros(in_dim, out_dim);
  fill_uniform<S>(h.weight, S(1) / std::sqrt(S(in_dim)), rng);
  return h;
}

#define ACTVAE_INSTANTIATE(S)                                                              \
  template struct CellParams<S>;                                                           \
  template struct LinearHead<S>;                                                           \
  template CellState<S> cell_step<S>(const CellParams<S>&, const CellState<S>&,            \
                                     const Mat<S>&, CellCache<S>*);                        \
  template CellInputGrads<S> cell_backward<S>(const CellParams<S>&, const CellCache<S>&,   \
                                              const Mat<S>&, const Mat<S>&, CellParams<S>&); \
  template Mat<S> head_apply<S>(const LinearHead<S>&, const Mat<S>&);                      \
  template Mat<S> head_backward<S>(const LinearHead<S>&, const Mat<S>&, const Mat<S>&,     \
                                   LinearHead<S>&);                                        \
  template CellParams<S> init_cell<S>(Eigen::Index, Eigen::Index, Rng&);                   \
  template LinearHead<S> init_head<S>(Eigen::Index, Eigen::Index, Rng&);

ACTVAE_INSTANTIATE(float)
ACTVAE_INSTANTIATE(double)
// Extended precision serves as a finite-difference reference in gradient checks.
ACTVAE_INSTANTIATE(long double)

#undef ACTVAE_INSTANTIATE

}  // namespace actvae

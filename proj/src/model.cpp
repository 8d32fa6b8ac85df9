// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/model.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace actvae {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename S>
Mat<S> column(const Eigen::VectorXd& v) {
  return v.cast<S>();
}

template <typename S>
Mat<S> network_input(const ModelConfig& cfg, const Mat<S>& pose, const Mat<S>& labels,
                     const Mat<S>& latent, bool latent_enabled) {
  const Eigen::Index b = pose.cols();
  require(pose.rows() == cfg.pose_dim(), "network input: pose has " +
                                             std::to_string(pose.rows()) + " rows, expected " +
                                             std::to_string(cfg.pose_dim()));
  require(labels.rows() == cfg.categories, "network input: label width != categories");
  require(latent.rows() == cfg.latent_dim, "network input: latent width != latent_dim");
  require(labels.cols() == b && latent.cols() == b, "network input: batch size mismatch");

  Mat<S> x = Mat<S>::Zero(cfg.pose_dim() + cfg.categories + cfg.latent_dim, b);
  x.topRows(cfg.pose_dim()) = pose;
  if (cfg.use_action_label) x.middleRows(cfg.pose_dim(), cfg.categories) = labels;
  if (latent_enabled) x.bottomRows(cfg.latent_dim) = latent;
  return x;
}

template <typename S>
bool encoder_reads_latent(const ModelConfig& cfg) {
  return cfg.condition_on_past_latents && cfg.temporal_coherence;
}

template <typename S>
void check_label(const ModelConfig& cfg, const ActionLabel& label) {
  require(label.categories() == cfg.categories, "action label has " +
                                                    std::to_string(label.categories()) +
                                                    " categories, model expects " +
                                                    std::to_string(cfg.categories));
}

void check_pose(const ModelConfig& cfg, const Pose& pose) {
  require(pose.normalized, "model input pose must be normalized");
  pose.validate(cfg.joints);
}

}  // namespace

ModelConfig ModelConfig::reference(int joints, int categories) {
  ModelConfig c;
  c.joints = joints;
  c.categories = categories;
  c.latent_dim = 512;
  c.enc_hidden = 1024;
  c.dec_hidden = 2 * joints;
  return c;
}

ModelConfig ModelConfig::desk(int joints, int categories) {
  ModelConfig c;
  c.joints = joints;
  c.categories = categories;
  c.latent_dim = 16;
  c.enc_hidden = 64;
  c.dec_hidden = 64;
  return c;
}

void ModelConfig::apply_ablation(const std::string& name) {
  use_action_label = true;
  condition_on_past_latents = true;
  temporal_coherence = true;
  if (name == "full") return;
  use_action_label = false;
  if (name == "wo_a") return;
  condition_on_past_latents = false;
  if (name == "wo_az") return;
  temporal_coherence = false;
  if (name == "wo_ac") return;
  throw std::invalid_argument("unknown ablation '" + name +
                              "' (expected full, wo_a, wo_az or wo_ac)");
}

std::string ModelConfig::ablation_name() const {
  if (use_action_label && condition_on_past_latents && temporal_coherence) return "full";
  if (!use_action_label && condition_on_past_latents && temporal_coherence) return "wo_a";
  if (!use_action_label && !condition_on_past_latents && temporal_coherence) return "wo_az";
  if (!use_action_label && !condition_on_past_latents && !temporal_coherence) return "wo_ac";
  return "custom";
}

void ModelConfig::validate() const {
  require(joints > 0, "ModelConfig: joints must be positive");
  require(categories > 0, "ModelConfig: categories must be positive");
  require(latent_dim > 0, "ModelConfig: latent_dim must be positive");
  require(enc_hidden > 0, "ModelConfig: enc_hidden must be positive");
  require(dec_hidden > 0, "ModelConfig: dec_hidden must be positive");
  require(rollout_steps > 0, "ModelConfig: rollout_steps must be positive");
}

template <typename S>
Model<S> Model<S>::zeros(const ModelConfig& config) {
  config.validate();
  return {config,
          CellParams<S>::zeros(config.encoder_input_dim(), config.enc_hidden),
          LinearHead<S>::zeros(config.enc_hidden, config.latent_dim),
          LinearHead<S>::zeros(config.enc_hidden, config.latent_dim),
          CellParams<S>::zeros(config.decoder_input_dim(), config.dec_hidden),
          LinearHead<S>::zeros(config.dec_hidden, config.pose_dim())};
}

template <typename S>
Model<S> Model<S>::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  Model<S> m;
  m.config = config;
  m.encoder = init_cell<S>(config.encoder_input_dim(), config.enc_hidden, rng);
  m.mean_head = init_head<S>(config.enc_hidden, config.latent_dim, rng);
  m.logvar_head = init_head<S>(config.enc_hidden, config.latent_dim, rng);
  m.decoder = init_cell<S>(config.decoder_input_dim(), config.dec_hidden, rng);
  m.pose_head = init_head<S>(config.dec_hidden, config.pose_dim(), rng);
  return m;
}

template <typename S>
Eigen::Index Model<S>::parameter_count() const {
  Eigen::Index n = 0;
  for_each_param([&](const char*, const auto& p) { n += p.size(); });
  return n;
}

template <typename S>
EncoderOutput<S> encoder_forward(const Model<S>& model, const Mat<S>& prev_pose,
                                 const Mat<S>& prev_latent, const CellState<S>& state,
                                 const Mat<S>& labels, CellCache<S>* cache) {
  const auto& cfg = model.config;
  const Mat<S> x =
      network_input<S>(cfg, prev_pose, labels, prev_latent, encoder_reads_latent<S>(cfg));
  CellState<S> next =
      cfg.temporal_coherence
          ? cell_step(model.encoder, state, x, cache)
          : cell_step(model.encoder, CellState<S>::zeros(cfg.enc_hidden, x.cols()), x, cache);
  EncoderOutput<S> out;
  out.mean = head_apply(model.mean_head, next.hidden);
  out.logvar = head_apply(model.logvar_head, next.hidden);
  out.state = std::move(next);
  return out;
}

template <typename S>
std::pair<Mat<S>, CellState<S>> decoder_forward(const Model<S>& model, const Mat<S>& prev_pose,
                                                const Mat<S>& latent, const CellState<S>& state,
                                                const Mat<S>& labels, CellCache<S>* cache) {
  const auto& cfg = model.config;
  const Mat<S> x = network_input<S>(cfg, prev_pose, labels, latent, true);
  CellState<S> next = cell_step(model.decoder, state, x, cache);
  Mat<S> pose = head_apply(model.pose_head, next.hidden);
  if (cfg.residual_decoding) pose += prev_pose;
  return {std::move(pose), std::move(next)};
}

template <typename S>
std::pair<DiagonalGaussian<S>, CellState<S>> encoder_step(const Model<S>& model,
                                                          const Pose& prev_pose,
                                                          const Latent<S>& prev_latent,
                                                          const CellState<S>& state,
                                                          const ActionLabel& label) {
  check_pose(model.config, prev_pose);
  check_label<S>(model.config, label);
  auto out = encoder_forward<S>(model, column<S>(prev_pose.coords), prev_latent.value, state,
                                column<S>(label.onehot()));
  auto g = DiagonalGaussian<S>::from_logvar(out.mean.col(0), out.logvar.col(0));
  return {std::move(g), std::move(out.state)};
}

template <typename S>
std::pair<Pose, CellState<S>> decoder_step(const Model<S>& model, const Pose& prev_pose,
                                           const Latent<S>& latent, const CellState<S>& state,
                                           const ActionLabel& label) {
  check_pose(model.config, prev_pose);
  check_label<S>(model.config, label);
  auto [pose, next] = decoder_forward<S>(model, column<S>(prev_pose.coords), latent.value, state,
                                         column<S>(label.onehot()));
  return {Pose(pose.col(0).template cast<double>(), true), std::move(next)};
}

template <typename S>
DiagonalGaussian<S> RolloutTrace<S>::gaussian(Eigen::Index step, Eigen::Index seq) const {
  return DiagonalGaussian<S>::from_logvar(means.at(step).col(seq), logvars.at(step).col(seq));
}

template <typename S>
Pose RolloutTrace<S>::pose(Eigen::Index step, Eigen::Index seq) const {
  return {poses.at(step).col(seq).template cast<double>(), true};
}

template <typename S>
RolloutTrace<S> rollout(const Model<S>& model, const Mat<S>& seed_poses, const Mat<S>& labels,
                        int n_steps, Rng& rng, bool sample, bool record_cache) {
  const auto& cfg = model.config;
  require(n_steps >= 1, "rollout: n_steps must be at least 1");
  require(seed_poses.rows() == cfg.pose_dim(), "rollout: seed pose width != 2J");
  require(labels.rows() == cfg.categories && labels.cols() == seed_poses.cols(),
          "rollout: labels must be C x B");
  const Eigen::Index batch = seed_poses.cols();

  auto draw = [&]() {
    Mat<S> eps(cfg.latent_dim, batch);
    for (Eigen::Index b = 0; b < batch; ++b)
      for (Eigen::Index k = 0; k < cfg.latent_dim; ++k) eps(k, b) = static_cast<S>(rng.normal());
    return eps;
  };

  RolloutTrace<S> tr;
  tr.seed_pose = seed_poses;
  tr.labels = labels;
  tr.sampled = sample;
  tr.initial_latent = sample ? draw() : Mat<S>::Zero(cfg.latent_dim, batch);
  if (record_cache) {
    tr.encoder_cache.resize(n_steps);
    tr.decoder_cache.resize(n_steps);
  }

  auto enc_state = CellState<S>::zeros(cfg.enc_hidden, batch);
  auto dec_state = CellState<S>::zeros(cfg.dec_hidden, batch);
  const Mat<S>* prev_pose = &tr.seed_pose;
  const Mat<S>* prev_latent = &tr.initial_latent;

  for (int i = 0; i < n_steps; ++i) {
    auto enc = encoder_forward<S>(model, *prev_pose, *prev_latent, enc_state, labels,
                                  record_cache ? &tr.encoder_cache[i] : nullptr);
    Mat<S> eps = sample ? draw() : Mat<S>::Zero(cfg.latent_dim, batch);
    Mat<S> sigma = (enc.logvar.array() * S(0.5)).exp().matrix();
    Mat<S> z = enc.mean + sigma.cwiseProduct(eps);

    auto [pose, next_dec] = decoder_forward<S>(model, *prev_pose, z, dec_state, labels,
                                               record_cache ? &tr.decoder_cache[i] : nullptr);
    enc_state = enc.state;
    dec_state = next_dec;

    tr.means.push_back(std::move(enc.mean));
    tr.logvars.push_back(std::move(enc.logvar));
    tr.noise.push_back(std::move(eps));
    tr.latents.push_back(std::move(z));
    tr.poses.push_back(std::move(pose));
    tr.encoder_states.push_back(std::move(enc.state));
    tr.decoder_states.push_back(std::move(next_dec));
    prev_pose = &tr.poses.back();
    prev_latent = &tr.latents.back();
  }
  return tr;
}

template <typename S>
RolloutTrace<S> rollout(const Model<S>& model, const Pose& seed_pose, const ActionLabel& label,
                        int n_steps, Rng& rng, bool sample) {
  check_pose(model.config, seed_pose);
  check_label<S>(model.config, label);
  return rollout<S>(model, column<S>(seed_pose.coords), column<S>(label.onehot()), n_steps, rng,
                    sample);
}

namespace {

template <typename S>
void check_targets(const RolloutTrace<S>& trace, const std::vector<Mat<S>>& targets) {
  require(static_cast<Eigen::Index>(targets.size()) == trace.steps(),
          "loss: " + std::to_string(targets.size()) + " targets for a rollout of " +
              std::to_string(trace.steps()) + " steps");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    require(targets[i].rows() == trace.poses[i].rows() &&
                targets[i].cols() == trace.poses[i].cols(),
            "loss: target shape mismatch at step " + std::to_string(i));
  }
}

template <typename S>
S step_kl(const Mat<S>& mean, const Mat<S>& logvar) {
  return S(0.5) * (mean.array().square() + logvar.array().exp() - S(1) - logvar.array()).sum();
}

}  // namespace

template <typename S>
LossTerms<S> vae_loss(const RolloutTrace<S>& trace, const std::vector<Mat<S>>& targets,
                      S lambda_dis, S lambda_div) {
  check_targets(trace, targets);
  const S inv_batch = S(1) / static_cast<S>(trace.batch());
  LossTerms<S> out;
  for (Eigen::Index i = 0; i < trace.steps(); ++i) {
    out.dis += (trace.poses[i] - targets[i]).cwiseAbs().sum();
    out.div += step_kl<S>(trace.means[i], trace.logvars[i]);
  }
  out.dis *= inv_batch;
  out.div *= inv_batch;
  out.total = lambda_dis * out.dis + lambda_div * out.div;
  return out;
}

template <typename S>
LossTerms<S> vae_loss_and_grad(const Model<S>& model, const RolloutTrace<S>& trace,
                               const std::vector<Mat<S>>& targets, S lambda_dis, S lambda_div,
                               Model<S>& grads) {
  require(static_cast<Eigen::Index>(trace.encoder_cache.size()) == trace.steps(),
          "vae_loss_and_grad: trace was recorded without backward caches");
  const LossTerms<S> loss = vae_loss(trace, targets, lambda_dis, lambda_div);

  const auto& cfg = model.config;
  const Eigen::Index batch = trace.batch();
  const S inv_batch = S(1) / static_cast<S>(batch);
  const S w_dis = lambda_dis * inv_batch;
  const S w_div = lambda_div * inv_batch;
  const bool latent_fed = encoder_reads_latent<S>(cfg);
  const int pd = cfg.pose_dim();
  const int dz = cfg.latent_dim;

  grads = Model<S>::zeros(cfg);

  Mat<S> d_pose_next = Mat<S>::Zero(pd, batch);
  Mat<S> d_latent_next = Mat<S>::Zero(dz, batch);
  Mat<S> d_enc_h = Mat<S>::Zero(cfg.enc_hidden, batch);
  Mat<S> d_enc_c = Mat<S>::Zero(cfg.enc_hidden, batch);
  Mat<S> d_dec_h = Mat<S>::Zero(cfg.dec_hidden, batch);
  Mat<S> d_dec_c = Mat<S>::Zero(cfg.dec_hidden, batch);

  for (Eigen::Index i = trace.steps() - 1; i >= 0; --i) {
    const Mat<S> d_pose =
        d_pose_next +
        (w_dis * (trace.poses[i] - targets[i]).array().sign()).matrix();

    // Decoder: pose = [prev_pose +] head(h_dec).
    Mat<S> d_prev_pose = cfg.residual_decoding ? d_pose : Mat<S>::Zero(pd, batch);
    d_dec_h += head_backward(model.pose_head, trace.decoder_states[i].hidden, d_pose,
                             grads.pose_head);
    auto dec = cell_backward(model.decoder, trace.decoder_cache[i], d_dec_h, d_dec_c,
                             grads.decoder);
    d_dec_h = std::move(dec.hidden);
    d_dec_c = std::move(dec.memory);
    d_prev_pose += dec.input.topRows(pd);
    const Mat<S> d_latent = d_latent_next + dec.input.bottomRows(dz);

    // Latent: z = mean + exp(logvar / 2) * eps, plus the KL term.
    const auto sigma = (trace.logvars[i].array() * S(0.5)).exp();
    const Mat<S> d_mean = d_latent + w_div * trace.means[i];
    const Mat<S> d_logvar =
        (d_latent.array() * trace.noise[i].array() * sigma * S(0.5) +
         w_div * S(0.5) * (sigma.square() - S(1)))
            .matrix();
    const Mat<S>& h_enc = trace.encoder_states[i].hidden;
    d_enc_h += head_backward(model.mean_head, h_enc, d_mean, grads.mean_head);
    d_enc_h += head_backward(model.logvar_head, h_enc, d_logvar, grads.logvar_head);

    auto enc = cell_backward(model.encoder, trace.encoder_cache[i], d_enc_h, d_enc_c,
                             grads.encoder);
    if (cfg.temporal_coherence) {
      d_enc_h = std::move(enc.hidden);
      d_enc_c = std::move(enc.memory);
    } else {
      d_enc_h.setZero();
      d_enc_c.setZero();
    }
    d_prev_pose += enc.input.topRows(pd);
    if (latent_fed) {
      d_latent_next = enc.input.bottomRows(dz);
    } else {
      d_latent_next.setZero();
    }
    d_pose_next = std::move(d_prev_pose);
  }
  return loss;
}

template <typename S>
double elbo_report(const RolloutTrace<S>& trace, const std::vector<Mat<S>>& targets,
                   double laplace_scale) {
  check_targets(trace, targets);
  require(laplace_scale > 0.0, "elbo_report: Laplace scale must be positive");
  double total = 0.0;
  const double log_norm = std::log(2.0 * laplace_scale);
  for (Eigen::Index i = 0; i < trace.steps(); ++i) {
    const Mat<double> err = (trace.poses[i] - targets[i]).template cast<double>();
    total += -err.cwiseAbs().sum() / laplace_scale - log_norm * static_cast<double>(err.size());
    total -= static_cast<double>(step_kl<S>(trace.means[i], trace.logvars[i]));
  }
  return total / static_cast<double>(trace.batch());
}

#define ACTVAE_INSTANTIATE(S)                                                                  \
  template struct Model<S>;                                                                    \
  template struct RolloutTrace<S>;                                                             \
  template EncoderOutput<S> encoder_forward<S>(const Model<S>&, const Mat<S>&, const Mat<S>&,  \
                                               const CellState<S>&, const Mat<S>&,             \
                                               CellCache<S>*);                                 \
  template std::pair<Mat<S>, CellState<S>> decoder_forward<S>(                                 \
      const Model<S>&, const Mat<S>&, const Mat<S>&, const CellState<S>&, const Mat<S>&,       \
      CellCache<S>*);                                                                          \
  template std::pair<DiagonalGaussian<S>, CellState<S>> encoder_step<S>(                       \
      const Model<S>&, const Pose&, const Latent<S>&, const CellState<S>&,                     \
      const ActionLabel&);                                                                     \
  template std::pair<Pose, CellState<S>> decoder_step<S>(const Model<S>&, const Pose&,         \
                                                         const Latent<S>&,                     \
                                                         const CellState<S>&,                  \
                                                         const ActionLabel&);                  \
  template RolloutTrace<S> rollout<S>(const Model<S>&, const Mat<S>&, const Mat<S>&, int,      \
                                      Rng&, bool, bool);                                       \
  template RolloutTrace<S> rollout<S>(const Model<S>&, const Pose&, const ActionLabel&, int,   \
                                      Rng&, bool);                                             \
  template LossTerms<S> vae_loss<S>(const RolloutTrace<S>&, const std::vector<Mat<S>>&, S, S); \
  template LossTerms<S> vae_loss_and_grad<S>(const Model<S>&, const RolloutTrace<S>&,          \
                                             const std::vector<Mat<S>>&, S, S, Model<S>&);     \
  template double elbo_report<S>(const RolloutTrace<S>&, const std::vector<Mat<S>>&, double);

ACTVAE_INSTANTIATE(float)
ACTVAE_INSTANTIATE(double)
// Extended precision serves as a finite-difference reference in gradient checks.
ACTVAE_INSTANTIATE(long double)

#undef ACTVAE_INSTANTIATE

}  // namespace actvae

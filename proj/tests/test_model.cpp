// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include <doctest.h>

#include <cmath>

#include "actvae/model.hpp"
#include "grad_check.hpp"
#include "oracles.hpp"

using namespace actvae;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.joints = 2;
  c.categories = 2;
  c.latent_dim = 3;
  c.enc_hidden = 4;
  c.dec_hidden = 4;
  c.rollout_steps = 3;
  return c;
}

Model<double> tiny_model(std::uint64_t seed, const ModelConfig& cfg = tiny_config()) {
  Rng rng(seed);
  auto m = Model<double>::init(cfg, rng);
  // Non-trivial biases so every path carries signal.
  Rng brng(seed + 1);
  m.for_each_param([&](const char*, auto& p) {
    if (p.cols() == 1)
      for (Eigen::Index k = 0; k < p.size(); ++k) p(k) += 0.3 * brng.uniform(-1, 1);
  });
  return m;
}

Pose pose_of(std::initializer_list<double> v) {
  Eigen::VectorXd c(v.size());
  Eigen::Index i = 0;
  for (double x : v) c[i++] = x;
  return Pose(c, true);
}

oracle::Vector vec(const Eigen::VectorXd& v) { return oracle::to_vec(v); }

}  // namespace

TEST_CASE("reference dimensioning gives 547-wide encoder and decoder inputs") {
  const auto cfg = ModelConfig::reference(13, 9);
  CHECK(cfg.encoder_input_dim() == 547);
  CHECK(cfg.decoder_input_dim() == 547);
  CHECK(cfg.dec_hidden == 26);
  CHECK(cfg.latent_dim == 512);
  CHECK(cfg.enc_hidden == 1024);
  const auto m = Model<float>::zeros(cfg);
  CHECK(m.encoder.weight.rows() == 4 * 1024);
  CHECK(m.encoder.weight.cols() == 547 + 1024);
  CHECK(m.pose_head.out_dim() == 26);
  CHECK(m.parameter_count() == 7548910);
}

TEST_CASE("ablation presets") {
  ModelConfig c = tiny_config();
  for (const char* name : {"full", "wo_a", "wo_az", "wo_ac"}) {
    c.apply_ablation(name);
    CHECK(c.ablation_name() == name);
  }
  CHECK_THROWS_AS(c.apply_ablation("wo_x"), std::invalid_argument);
}

TEST_CASE("encoder_step with zero parameters gives the standard normal") {
  const auto m = Model<double>::zeros(tiny_config());
  const auto label = ActionLabel::from_index(1, 2);
  Latent<double> z{Vec<double>::Constant(3, 0.7)};
  auto [g, s] = encoder_step(m, pose_of({0.1, -0.2, 0.3, 0.9}), z, CellState<double>::zeros(4),
                             label);
  CHECK(g.mean.isZero(0.0));
  CHECK(g.stddev.isOnes(0.0));
}

TEST_CASE("decoder_step with zero parameters returns the previous pose") {
  const auto m = Model<double>::zeros(tiny_config());
  const Pose prev = pose_of({0.1, -0.2, 0.3, 0.9});
  auto [p, s] = decoder_step(m, prev, Latent<double>{Vec<double>::Constant(3, -1.0)},
                             CellState<double>::zeros(4), ActionLabel::from_index(0, 2));
  CHECK(p.coords == prev.coords);
  CHECK(p.normalized);
}

TEST_CASE("encoder and decoder steps match the scripted oracle") {
  for (const char* ablation : {"full", "wo_a", "wo_az", "wo_ac"}) {
    ModelConfig cfg = tiny_config();
    cfg.apply_ablation(ablation);
    const auto m = tiny_model(31, cfg);
    const oracle::ScriptedModel ref(m);
    const Pose p = pose_of({0.1, -0.2, 0.3, 0.9});
    const auto label = ActionLabel::from_index(1, 2);
    Latent<double> z{Vec<double>(3)};
    z.value << 0.4, -1.1, 0.25;
    Rng rng(4);
    CellState<double> se{Mat<double>::Random(4, 1) * 0.5, Mat<double>::Random(4, 1) * 0.5};
    CellState<double> sd{Mat<double>::Random(4, 1) * 0.5, Mat<double>::Random(4, 1) * 0.5};

    auto [g, se2] = encoder_step(m, p, z, se, label);
    auto [mu, lv, ref_se] = ref.encode(vec(p.coords), vec(z.value),
                                       {vec(se.hidden.col(0)), vec(se.memory.col(0))},
                                       vec(label.onehot()));
    for (int k = 0; k < 3; ++k) {
      CHECK(std::abs(g.mean[k] - mu[k]) < 1e-10);
      CHECK(std::abs(g.stddev[k] - std::exp(0.5 * lv[k])) < 1e-10);
    }
    for (int k = 0; k < 4; ++k) CHECK(std::abs(se2.hidden(k) - ref_se.h[k]) < 1e-10);

    auto [pose, sd2] = decoder_step(m, p, z, sd, label);
    auto [ref_pose, ref_sd] = ref.decode(vec(p.coords), vec(z.value),
                                         {vec(sd.hidden.col(0)), vec(sd.memory.col(0))},
                                         vec(label.onehot()));
    for (int k = 0; k < 4; ++k) {
      CHECK(std::abs(pose.coords[k] - ref_pose[k]) < 1e-10);
      CHECK(std::abs(sd2.memory(k) - ref_sd.c[k]) < 1e-10);
    }

    // Repeating the call gives identical results.
    auto [g_again, se_again] = encoder_step(m, p, z, se, label);
    CHECK(g_again.mean == g.mean);
    CHECK(se_again.hidden == se2.hidden);
  }
}

TEST_CASE("steps validate their inputs") {
  const auto m = Model<double>::zeros(tiny_config());
  Latent<double> z{Vec<double>::Zero(3)};
  const auto s = CellState<double>::zeros(4);
  CHECK_THROWS_AS(encoder_step(m, pose_of({0.1, 0.2}), z, s, ActionLabel::from_index(0, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(encoder_step(m, pose_of({0.1, 0.2, 0.3, 0.4}), z, s,
                               ActionLabel::from_index(0, 3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(encoder_step(m, pose_of({0.1, 0.2, 0.3, 0.4}), Latent<double>{Vec<double>::Zero(2)},
                               s, ActionLabel::from_index(0, 2)),
                  std::invalid_argument);
  Pose pixel = pose_of({10, 20, 30, 40});
  pixel.normalized = false;
  CHECK_THROWS_AS(decoder_step(m, pixel, z, s, ActionLabel::from_index(0, 2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(ActionLabel::from_onehot({0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(ActionLabel::from_onehot({1.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(ActionLabel::from_onehot({0.0, 0.0}), std::invalid_argument);
  CHECK(ActionLabel::from_onehot({0.0, 1.0, 0.0}).index() == 1);
}

TEST_CASE("mean rollout ignores the generator") {
  const auto m = tiny_model(3);
  const Pose seed = pose_of({0.1, -0.2, 0.3, 0.9});
  const auto label = ActionLabel::from_index(0, 2);
  Rng a(1), b(999);
  const auto ta = rollout(m, seed, label, 5, a, false);
  const auto tb = rollout(m, seed, label, 5, b, false);
  CHECK(a.state() == Rng(1).state());
  for (int i = 0; i < 5; ++i) {
    CHECK(ta.poses[i] == tb.poses[i]);
    CHECK(ta.latents[i] == ta.means[i]);
  }
}

TEST_CASE("sampled rollouts are seed-determined") {
  const auto m = tiny_model(3);
  const Pose seed = pose_of({0.1, -0.2, 0.3, 0.9});
  const auto label = ActionLabel::from_index(1, 2);
  Rng a(5), b(5), c(6);
  const auto ta = rollout(m, seed, label, 4, a, true);
  const auto tb = rollout(m, seed, label, 4, b, true);
  const auto tc = rollout(m, seed, label, 4, c, true);
  bool latents_differ = false;
  for (int i = 0; i < 4; ++i) {
    CHECK(ta.poses[i] == tb.poses[i]);
    CHECK(ta.latents[i] == tb.latents[i]);
    latents_differ |= ta.latents[i] != tc.latents[i];
  }
  CHECK(latents_differ);
  CHECK(ta.steps() == 4);
  CHECK(ta.means.size() == 4);
  CHECK(ta.encoder_states.size() == 4);
}

TEST_CASE("one-step rollout equals a manual encoder/decoder composition") {
  const auto m = tiny_model(12);
  const Pose seed = pose_of({0.1, -0.2, 0.3, 0.9});
  const auto label = ActionLabel::from_index(1, 2);
  Rng rng(42);
  const auto trace = rollout(m, seed, label, 1, rng, true);

  Rng manual(42);
  const Latent<double> z0{standard_normal<double>(3, manual)};
  auto [g, se] = encoder_step(m, seed, z0, CellState<double>::zeros(4), label);
  const auto z1 = sample_gaussian(g, manual);
  auto [p1, sd] = decoder_step(m, seed, z1, CellState<double>::zeros(4), label);

  CHECK(trace.initial_latent.col(0) == z0.value);
  CHECK((trace.latents[0].col(0) - z1.value).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((trace.pose(0).coords - p1.coords).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((trace.gaussian(0).stddev - g.stddev).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("multi-step rollout matches the scripted oracle for every ablation") {
  for (const char* ablation : {"full", "wo_a", "wo_az", "wo_ac"}) {
    for (bool residual : {true, false}) {
      ModelConfig cfg = tiny_config();
      cfg.apply_ablation(ablation);
      cfg.residual_decoding = residual;
      const auto m = tiny_model(77, cfg);
      const Pose seed = pose_of({0.4, -0.1, -0.3, 0.2});
      const auto label = ActionLabel::from_index(0, 2);
      Rng rng(8);
      const auto trace = rollout(m, seed, label, 5, rng, true);

      std::vector<oracle::Vector> eps{vec(trace.initial_latent.col(0))};
      for (const auto& n : trace.noise) eps.push_back(vec(n.col(0)));
      const auto ref = oracle::ScriptedModel(m).rollout(vec(seed.coords), vec(label.onehot()), eps);
      for (int i = 0; i < 5; ++i)
        for (int k = 0; k < 4; ++k) CHECK(std::abs(trace.poses[i](k, 0) - ref.poses[i][k]) < 1e-10);
    }
  }
}

TEST_CASE("disabling the action label makes rollouts label-invariant") {
  ModelConfig cfg = tiny_config();
  cfg.use_action_label = false;
  const auto m = tiny_model(21, cfg);
  const Pose seed = pose_of({0.4, -0.1, -0.3, 0.2});
  Rng a(3), b(3);
  const auto ta = rollout(m, seed, ActionLabel::from_index(0, 2), 6, a, true);
  const auto tb = rollout(m, seed, ActionLabel::from_index(1, 2), 6, b, true);
  for (int i = 0; i < 6; ++i) CHECK(ta.poses[i] == tb.poses[i]);

  const auto full = tiny_model(21);
  Rng c(3), d(3);
  const auto tc = rollout(full, seed, ActionLabel::from_index(0, 2), 6, c, true);
  const auto td = rollout(full, seed, ActionLabel::from_index(1, 2), 6, d, true);
  CHECK(tc.poses.back() != td.poses.back());
}

namespace {

RolloutTrace<double> single_step_trace(const Eigen::VectorXd& pose, int dz) {
  RolloutTrace<double> t;
  t.seed_pose = Mat<double>::Zero(pose.size(), 1);
  t.labels = Mat<double>::Zero(1, 1);
  t.poses = {pose};
  t.means = {Mat<double>::Zero(dz, 1)};
  t.logvars = {Mat<double>::Zero(dz, 1)};
  t.latents = t.means;
  t.noise = t.means;
  return t;
}

}  // namespace

TEST_CASE("vae_loss hand cases") {
  const auto perfect = single_step_trace(Eigen::Vector2d(0.3, -0.1), 4);
  const auto zero = vae_loss<double>(perfect, {Eigen::Vector2d(0.3, -0.1)}, 200.0, 0.002);
  CHECK(zero.total == 0.0);
  CHECK(zero.dis == 0.0);
  CHECK(zero.div == 0.0);

  const auto off = single_step_trace(Eigen::Vector2d(0.5, 0.0), 4);
  const auto l = vae_loss<double>(off, {Eigen::Vector2d(0.0, 0.0)}, 200.0, 0.002);
  CHECK(l.dis == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(l.div == 0.0);
  CHECK(l.total == doctest::Approx(100.0).epsilon(1e-15));

  CHECK_THROWS_AS(vae_loss<double>(off, {}, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("vae_loss and elbo_report match scripted evaluation") {
  const auto m = tiny_model(5);
  const Pose seed = pose_of({0.4, -0.1, -0.3, 0.2});
  const auto label = ActionLabel::from_index(1, 2);
  Rng rng(17);
  const auto trace = rollout(m, seed, label, 4, rng, true);
  Rng trng(18);
  std::vector<Mat<double>> targets;
  std::vector<oracle::Vector> t_ref;
  for (int i = 0; i < 4; ++i) {
    Mat<double> t(4, 1);
    for (int k = 0; k < 4; ++k) t(k, 0) = trng.uniform(-1, 1);
    targets.push_back(t);
    t_ref.push_back(vec(t.col(0)));
  }
  std::vector<oracle::Vector> eps{vec(trace.initial_latent.col(0))};
  for (const auto& n : trace.noise) eps.push_back(vec(n.col(0)));
  const auto ref = oracle::ScriptedModel(m).rollout(vec(seed.coords), vec(label.onehot()), eps);
  double dis = 0, div = 0;
  const double total = oracle::scripted_loss(ref, t_ref, 200.0, 0.002, &dis, &div);
  const auto loss = vae_loss<double>(trace, targets, 200.0, 0.002);
  CHECK(std::abs(loss.total - total) < 1e-10);
  CHECK(std::abs(loss.dis - dis) < 1e-10);
  CHECK(std::abs(loss.div - div) < 1e-10);

  const double b = 0.05;
  const double elbo_ref = -dis / b - 4 * 4 * std::log(2 * b) - div;
  CHECK(std::abs(elbo_report<double>(trace, targets, b) - elbo_ref) < 1e-10);
}

TEST_CASE("elbo_report maximum and monotonicity") {
  const int n = 3, j = 2;
  const double b = 0.1;
  RolloutTrace<double> t;
  t.seed_pose = Mat<double>::Zero(2 * j, 1);
  std::vector<Mat<double>> targets;
  for (int i = 0; i < n; ++i) {
    t.poses.push_back(Mat<double>::Constant(2 * j, 1, 0.1 * i));
    t.means.push_back(Mat<double>::Zero(3, 1));
    t.logvars.push_back(Mat<double>::Zero(3, 1));
    targets.push_back(t.poses.back());
  }
  const double best = elbo_report<double>(t, targets, b);
  CHECK(best == doctest::Approx(n * j * 2 * std::log(1.0 / (2 * b))).epsilon(1e-14));
  double prev = best;
  for (int step = 1; step <= 5; ++step) {
    t.poses[1](2, 0) += 0.05;
    const double now = elbo_report<double>(t, targets, b);
    CHECK(now < prev);
    prev = now;
  }
}

TEST_CASE("vae_loss is non-negative and zero only at perfect prior-matching fits") {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    auto t = single_step_trace(Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1)), 3);
    for (int k = 0; k < 3; ++k) {
      t.means[0](k, 0) = rng.uniform(-1, 1);
      t.logvars[0](k, 0) = rng.uniform(-2, 2);
    }
    const auto l = vae_loss<double>(t, {Eigen::Vector2d(rng.uniform(-1, 1), rng.uniform(-1, 1))},
                                    200.0, 0.002);
    CHECK(l.total > 0.0);
  }
}

TEST_CASE("end-to-end loss gradient matches central differences") {
  for (const char* ablation : {"full", "wo_a", "wo_az", "wo_ac"}) {
    for (bool residual : {true, false}) {
      ModelConfig cfg = tiny_config();
      cfg.apply_ablation(ablation);
      cfg.residual_decoding = residual;
      auto m = tiny_model(101, cfg);
      const Eigen::Index batch = 2;
      Rng drng(9);
      Mat<double> seeds(4, batch), labels = Mat<double>::Zero(2, batch);
      std::vector<Mat<double>> targets(3, Mat<double>(4, batch));
      for (Eigen::Index b = 0; b < batch; ++b) {
        for (int k = 0; k < 4; ++k) seeds(k, b) = drng.uniform(-0.8, 0.8);
        for (auto& t : targets)
          for (int k = 0; k < 4; ++k) t(k, b) = drng.uniform(-0.8, 0.8);
        labels(b % 2, b) = 1.0;
      }
      const Rng noise(123);
      auto loss = [&]() {
        Rng r = noise;
        const auto tr = rollout<double>(m, seeds, labels, 3, r, true);
        return vae_loss<double>(tr, targets, 200.0, 0.002).total;
      };
      Rng r = noise;
      const auto trace = rollout<double>(m, seeds, labels, 3, r, true, true);
      Model<double> grads;
      const auto l = vae_loss_and_grad<double>(m, trace, targets, 200.0, 0.002, grads);
      CHECK(l.total == doctest::Approx(loss()).epsilon(1e-14));

      gradcheck::Worst worst;
      zip_params(
          [&](const char* name, auto& p, const auto& g) {
            gradcheck::compare(p, g, loss, 1e-5, name, worst);
          },
          m, grads);
      INFO(ablation << (residual ? " residual" : " direct") << " worst " << worst.where);
      CHECK(worst.error < 1e-3);
    }
  }
}

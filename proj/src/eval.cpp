// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <stdexcept>

namespace actvae {
namespace {

void check_same_shape(const PoseSequence& a, const PoseSequence& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("metrics: sequences have " + std::to_string(a.size()) + " and " +
                                std::to_string(b.size()) + " frames");
  }
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (a[t].coords.size() != b[t].coords.size()) {
      throw std::invalid_argument("metrics: joint count mismatch at frame " + std::to_string(t));
    }
  }
}

}  // namespace

double mean_joint_distance(const PoseSequence& a, const PoseSequence& b) {
  check_same_shape(a, b);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < a.size(); ++t) {
    for (Eigen::Index j = 0; j < a[t].joints(); ++j) {
      sum += std::hypot(a[t].x(j) - b[t].x(j), a[t].y(j) - b[t].y(j));
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("metrics: empty sequence");
  return sum / static_cast<double>(n);
}

double l2_best_of_k(const std::vector<PoseSequence>& samples, const PoseSequence& truth,
                    int n_keep) {
  if (samples.empty()) throw std::invalid_argument("l2_best_of_k: no samples");
  if (n_keep < 1 || n_keep > static_cast<int>(samples.size())) {
    throw std::invalid_argument("l2_best_of_k: n_keep must be in [1, K]");
  }
  std::vector<double> d;
  d.reserve(samples.size());
  for (const auto& s : samples) d.push_back(mean_joint_distance(s, truth));
  std::partial_sort(d.begin(), d.begin() + n_keep, d.end());
  double sum = 0.0;
  for (int i = 0; i < n_keep; ++i) sum += d[i];
  return sum / n_keep;
}

double diversity_std(const std::vector<PoseSequence>& samples) {
  if (samples.size() < 2) throw std::invalid_argument("diversity_std: need K >= 2 samples");
  for (const auto& s : samples) check_same_shape(s, samples.front());
  const auto k = static_cast<double>(samples.size());
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < samples.front().size(); ++t) {
    const Eigen::Index dims = samples.front()[t].coords.size();
    for (Eigen::Index c = 0; c < dims; ++c) {
      // Offsets from the first sample keep identical samples at exactly 0.
      const double ref = samples.front()[t].coords[c];
      double mean = 0.0;
      for (const auto& s : samples) mean += s[t].coords[c] - ref;
      mean /= k;
      double var = 0.0;
      for (const auto& s : samples) {
        const double d = s[t].coords[c] - ref - mean;
        var += d * d;
      }
      total += std::sqrt(var / k);
      ++n;
    }
  }
  if (n == 0) throw std::invalid_argument("diversity_std: empty sequences");
  return total / static_cast<double>(n);
}

PoseSequence baseline_copy_last(const Pose& seed_pose, int n_steps) {
  return PoseSequence(static_cast<std::size_t>(std::max(n_steps, 0)), seed_pose);
}

std::vector<PoseSequence> sample_sequences(const Model<float>& model, const Pose& pixel_seed,
                                           FrameSize frame, const ActionLabel& label, int k,
                                           int n_steps, Rng& rng, bool sample) {
  if (k < 1) throw std::invalid_argument("sample_sequences: k must be positive");
  const Pose seed = normalize(pixel_seed, frame);
  seed.validate(model.config.joints);
  if (label.categories() != model.config.categories) {
    throw std::invalid_argument("sample_sequences: label category count != model categories");
  }
  const Mat<float> seeds = seed.coords.cast<float>().replicate(1, k);
  const Mat<float> labels = label.onehot().cast<float>().replicate(1, k);
  const auto trace = rollout<float>(model, seeds, labels, n_steps, rng, sample);

  std::vector<PoseSequence> out(static_cast<std::size_t>(k));
  for (int s = 0; s < k; ++s) {
    for (int i = 0; i < n_steps; ++i) {
      out[s].push_back(denormalize_clamped(trace.pose(i, s), frame));
    }
  }
  return out;
}

MetricReport evaluate(const Model<float>& model, const Dataset& data, const EvalOptions& options) {
  if (data.records.empty()) throw std::invalid_argument("evaluate: empty test set");
  if (options.n_keep > options.k) throw std::invalid_argument("evaluate: keep > k");
  if (options.n_steps < 1) throw std::invalid_argument("evaluate: n_steps must be positive");
  if (data.joints != model.config.joints) {
    throw std::invalid_argument("evaluate: dataset has " + std::to_string(data.joints) +
                                " joints, model expects " + std::to_string(model.config.joints));
  }
  MetricReport report;
  report.k = options.k;
  report.n_keep = options.n_keep;
  report.n_steps = options.n_steps;
  const Rng base(options.seed);

  for (std::size_t r = 0; r < data.records.size(); ++r) {
    const auto& rec = data.records[r];
    if (static_cast<int>(rec.frames.size()) < options.n_steps + 1) {
      throw std::invalid_argument("evaluate: record '" + rec.id + "' shorter than n_steps + 1");
    }
    const int label_index = options.label_override >= 0 ? options.label_override
                                                        : rec.action_index;
    const auto label = ActionLabel::from_index(label_index, model.config.categories);
    Rng rng = base.fork(r);
    auto samples = sample_sequences(model, rec.frames[0], rec.frame_size, label, options.k,
                                    options.n_steps, rng, options.sample);

    PoseSequence truth;
    for (int i = 1; i <= options.n_steps; ++i) {
      truth.push_back(to_canonical(rec.frames[i], rec.frame_size));
    }
    for (auto& s : samples)
      for (auto& p : s) p = to_canonical(p, rec.frame_size);

    SequenceMetrics m;
    m.id = rec.id;
    m.action_index = rec.action_index;
    m.l2_best_of_k = l2_best_of_k(samples, truth, options.n_keep);
    m.diversity_std = options.k >= 2 ? diversity_std(samples) : 0.0;
    m.baseline_l2 = mean_joint_distance(
        baseline_copy_last(to_canonical(rec.frames[0], rec.frame_size), options.n_steps), truth);
    report.sequences.push_back(m);
  }
  for (const auto& m : report.sequences) {
    report.l2_best_of_k += m.l2_best_of_k;
    report.diversity_std += m.diversity_std;
    report.baseline_l2 += m.baseline_l2;
  }
  const auto n = static_cast<double>(report.sequences.size());
  report.l2_best_of_k /= n;
  report.diversity_std /= n;
  report.baseline_l2 /= n;
  return report;
}

std::string MetricReport::to_jsonl() const {
  std::string out;
  for (const auto& m : sequences) {
    nlohmann::ordered_json j;
    j["record"] = "sequence";
    j["id"] = m.id;
    j["action_index"] = m.action_index;
    j["l2_best_of_k"] = m.l2_best_of_k;
    j["diversity_std"] = m.diversity_std;
    j["baseline_l2"] = m.baseline_l2;
    out += j.dump() + "\n";
  }
  nlohmann::ordered_json s;
  s["record"] = "summary";
  s["sequences"] = sequences.size();
  s["k"] = k;
  s["n_keep"] = n_keep;
  s["n_steps"] = n_steps;
  s["l2_best_of_k"] = l2_best_of_k;
  s["diversity_std"] = diversity_std;
  s["baseline_l2"] = baseline_l2;
  out += s.dump() + "\n";
  return out;
}

std::string MetricReport::summary_table() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "sequences      %zu\n"
                "K / keep       %d / %d\n"
                "steps          %d\n"
                "method         L2 (px)    Std (px)\n"
                "model          %-10.4f %-10.4f\n"
                "copy-last      %-10.4f %-10.4f\n",
                sequences.size(), k, n_keep, n_steps, l2_best_of_k, diversity_std, baseline_l2,
                0.0);
  return buf;
}

}  // namespace actvae

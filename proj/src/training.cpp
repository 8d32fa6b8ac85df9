// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/training.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "actvae/json_io.hpp"

namespace actvae {

// ---------------------------------------------------------------------------
// Adam

template <typename S>
AdamState<S> AdamState<S>::zeros(const ModelConfig& model, const AdamConfig& config) {
  return {config, 0, Model<S>::zeros(model), Model<S>::zeros(model)};
}

namespace {

template <typename Array>
void adam_update_impl(Array& param, const Array& grad, Array& m, Array& v, std::int64_t step,
                      const AdamConfig& config, const std::string& name) {
  using S = typename Array::Scalar;
  if (grad.rows() != param.rows() || grad.cols() != param.cols() || m.rows() != param.rows() ||
      m.cols() != param.cols() || v.rows() != param.rows() || v.cols() != param.cols()) {
    throw std::invalid_argument("adam: shape mismatch for parameter '" + name + "'");
  }
  if (!grad.allFinite()) {
    throw std::invalid_argument("adam: non-finite gradient for parameter '" + name + "'");
  }
  if (step < 1) throw std::invalid_argument("adam: step index must be >= 1");
  const S b1 = static_cast<S>(config.beta1);
  const S b2 = static_cast<S>(config.beta2);
  const S c1 = static_cast<S>(1.0 - std::pow(config.beta1, static_cast<double>(step)));
  const S c2 = static_cast<S>(1.0 - std::pow(config.beta2, static_cast<double>(step)));
  const S lr = static_cast<S>(config.lr);
  const S eps = static_cast<S>(config.eps);
  m = b1 * m + (S(1) - b1) * grad;
  v = b2 * v + (S(1) - b2) * grad.cwiseProduct(grad);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
}

}  // namespace

template <typename S>
void adam_update(Mat<S>& param, const Mat<S>& grad, Mat<S>& m, Mat<S>& v, std::int64_t step,
                 const AdamConfig& config, const std::string& name) {
  adam_update_impl(param, grad, m, v, step, config, name);
}

template <typename S>
void adam_update(Vec<S>& param, const Vec<S>& grad, Vec<S>& m, Vec<S>& v, std::int64_t step,
                 const AdamConfig& config, const std::string& name) {
  adam_update_impl(param, grad, m, v, step, config, name);
}

template <typename S>
void adam_step(Model<S>& params, const Model<S>& grads, AdamState<S>& state) {
  if (!(grads.config == params.config) || !(state.first_moment.config == params.config) ||
      !(state.second_moment.config == params.config)) {
    throw std::invalid_argument("adam_step: parameter, gradient and moment shapes differ");
  }
  const std::int64_t step = state.step + 1;
  zip_params([&](const char* name, auto& p, const auto& g, auto& m,
                 auto& v) { adam_update(p, g, m, v, step, state.config, name); },
             params, grads, state.first_moment, state.second_moment);
  state.step = step;
}

// ---------------------------------------------------------------------------
// Checkpoint

namespace {

constexpr const char* kMagic = "actvae-checkpoint";

struct ArrayEntry {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
};

template <typename F>
void for_each_checkpoint_array(Checkpoint& c, F&& f) {
  c.model.for_each_param([&](const char* n, auto& a) { f(std::string("model.") + n, a); });
  c.optimizer.first_moment.for_each_param(
      [&](const char* n, auto& a) { f(std::string("adam.m.") + n, a); });
  c.optimizer.second_moment.for_each_param(
      [&](const char* n, auto& a) { f(std::string("adam.v.") + n, a); });
}

void append_floats(std::string& out, const float* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(data[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    char b[4];
    std::memcpy(b, &bits, 4);
    out.append(b, 4);
  }
}

void read_floats(const std::string& in, std::size_t offset, float* data, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, in.data() + offset + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    data[i] = std::bit_cast<float>(bits);
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c_in) {
  Checkpoint c = c_in;
  nlohmann::ordered_json m;
  m["model_config"] = c.config();
  m["train_hyper"] = c.hyper;
  m["progress"] = {{"step", c.progress.step},
                   {"epoch", c.progress.epoch},
                   {"cursor", c.progress.cursor}};
  m["optimizer_step"] = c.optimizer.step;
  m["rng"] = {{"seed", c.rng.seed}, {"stream", c.rng.stream}, {"counter", c.rng.counter}};
  m["arrays"] = nlohmann::ordered_json::array();

  std::string payload;
  std::size_t offset = 0;
  auto add = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols,
                 const float* data) {
    const auto count = static_cast<std::size_t>(rows * cols);
    m["arrays"].push_back(
        {{"name", name}, {"rows", rows}, {"cols", cols}, {"offset", offset}, {"count", count}});
    append_floats(payload, data, count);
    offset += 4 * count;
  };
  for_each_checkpoint_array(c, [&](const std::string& name, auto& a) {
    add(name, a.rows(), a.cols(), a.data());
  });
  add("history.dis", 1, static_cast<Eigen::Index>(c.history.dis.size()), c.history.dis.data());
  add("history.div", 1, static_cast<Eigen::Index>(c.history.div.size()), c.history.div.data());
  add("history.total", 1, static_cast<Eigen::Index>(c.history.total.size()),
      c.history.total.data());
  m["payload_bytes"] = payload.size();

  const std::string manifest = m.dump(2) + "\n";
  std::string out = std::string(kMagic) + " " + std::to_string(c.version) + "\n";
  out += "manifest-bytes " + std::to_string(manifest.size()) + "\n";
  out += manifest;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(const std::string& bytes) {
  std::size_t pos = 0;
  auto read_line = [&]() {
    const std::size_t nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw CheckpointError("checkpoint: truncated header");
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  std::istringstream first(read_line());
  std::string magic;
  int version = 0;
  if (!(first >> magic >> version) || magic != kMagic) {
    throw CheckpointError("checkpoint: not an actvae checkpoint");
  }
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version) +
                          " (this build reads version " + std::to_string(kCheckpointVersion) +
                          ")");
  }
  std::istringstream second(read_line());
  std::string key;
  std::size_t manifest_bytes = 0;
  if (!(second >> key >> manifest_bytes) || key != "manifest-bytes") {
    throw CheckpointError("checkpoint: missing manifest size");
  }
  if (bytes.size() - pos < manifest_bytes) throw CheckpointError("checkpoint: truncated manifest");

  nlohmann::json m;
  try {
    m = nlohmann::json::parse(bytes.substr(pos, manifest_bytes));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupted manifest: ") + e.what());
  }
  pos += manifest_bytes;

  Checkpoint c;
  try {
    ModelConfig cfg;
    merge_json(m.at("model_config"), cfg);
    cfg.validate();
    merge_json(m.at("train_hyper"), c.hyper);
    c.model = Model<float>::zeros(cfg);
    c.optimizer = AdamState<float>::zeros(cfg, c.hyper.adam);
    c.optimizer.step = m.at("optimizer_step").get<std::int64_t>();
    const auto& p = m.at("progress");
    c.progress = {p.at("step").get<std::int64_t>(), p.at("epoch").get<std::int64_t>(),
                  p.at("cursor").get<std::int64_t>()};
    const auto& r = m.at("rng");
    c.rng = {r.at("seed").get<std::uint64_t>(), r.at("stream").get<std::uint64_t>(),
             r.at("counter").get<std::uint64_t>()};

    const auto payload_bytes = m.at("payload_bytes").get<std::size_t>();
    if (bytes.size() - pos != payload_bytes) {
      throw CheckpointError("checkpoint: payload is " + std::to_string(bytes.size() - pos) +
                            " bytes, manifest declares " + std::to_string(payload_bytes));
    }

    std::map<std::string, nlohmann::json> table;
    for (const auto& a : m.at("arrays")) table[a.at("name").get<std::string>()] = a;
    auto load = [&](const std::string& name, Eigen::Index rows, Eigen::Index cols, float* dst) {
      const auto it = table.find(name);
      if (it == table.end()) throw CheckpointError("checkpoint: missing array '" + name + "'");
      const auto& a = it->second;
      const auto count = a.at("count").get<std::size_t>();
      const auto offset = a.at("offset").get<std::size_t>();
      if (a.at("rows").get<Eigen::Index>() != rows || a.at("cols").get<Eigen::Index>() != cols ||
          count != static_cast<std::size_t>(rows * cols)) {
        throw CheckpointError("checkpoint: array '" + name + "' has a corrupted shape");
      }
      if (offset > payload_bytes || 4 * count > payload_bytes - offset) {
        throw CheckpointError("checkpoint: array '" + name + "' extends past the payload");
      }
      read_floats(bytes, pos + offset, dst, count);
    };
    for_each_checkpoint_array(c, [&](const std::string& name, auto& a) {
      load(name, a.rows(), a.cols(), a.data());
    });
    for (auto [name, vec] : {std::pair{"history.dis", &c.history.dis},
                             std::pair{"history.div", &c.history.div},
                             std::pair{"history.total", &c.history.total}}) {
      const auto it = table.find(name);
      if (it == table.end()) throw CheckpointError(std::string("checkpoint: missing ") + name);
      vec->resize(it->second.at("count").get<std::size_t>());
      load(name, 1, static_cast<Eigen::Index>(vec->size()), vec->data());
    }
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint: corrupted manifest: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw CheckpointError(std::string("checkpoint: invalid configuration: ") + e.what());
  }
  c.version = version;
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(c);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

// ---------------------------------------------------------------------------
// Training loop

namespace {

// Stream ids forked off the training seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kShuffleStream = 2;
constexpr std::uint64_t kStepStream = 3;

struct PreparedData {
  std::vector<Mat<float>> sequences;  // 2J x T, normalized
  std::vector<int> labels;
};

PreparedData prepare(const Dataset& data, const ModelConfig& cfg) {
  if (data.records.empty()) throw std::invalid_argument("train: dataset is empty");
  if (data.joints != cfg.joints) {
    throw std::invalid_argument("train: dataset has " + std::to_string(data.joints) +
                                " joints, model config expects " + std::to_string(cfg.joints));
  }
  if (static_cast<int>(data.categories.size()) != cfg.categories) {
    throw std::invalid_argument("train: dataset has " + std::to_string(data.categories.size()) +
                                " categories, model config expects " +
                                std::to_string(cfg.categories));
  }
  PreparedData out;
  for (const auto& r : data.records) {
    if (static_cast<int>(r.frames.size()) < cfg.rollout_steps + 1) {
      throw std::invalid_argument("train: sequence '" + r.id + "' has " +
                                  std::to_string(r.frames.size()) + " frames, needs at least " +
                                  std::to_string(cfg.rollout_steps + 1));
    }
    ActionLabel::from_index(r.action_index, cfg.categories);
    Mat<float> seq(cfg.pose_dim(), static_cast<Eigen::Index>(r.frames.size()));
    for (std::size_t t = 0; t < r.frames.size(); ++t) {
      seq.col(static_cast<Eigen::Index>(t)) = normalize(r.frames[t], r.frame_size).coords.cast<float>();
    }
    out.sequences.push_back(std::move(seq));
    out.labels.push_back(r.action_index);
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::uint64_t seed, std::int64_t epoch, std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).fork(kShuffleStream).fork(static_cast<std::uint64_t>(epoch));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

double clip_gradients(Model<float>& grads, double max_norm) {
  double sq = 0.0;
  grads.for_each_param([&](const char*, auto& g) { sq += g.template cast<double>().squaredNorm(); });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const auto scale = static_cast<float>(max_norm / norm);
    grads.for_each_param([&](const char*, auto& g) { g *= scale; });
  }
  return norm;
}

}  // namespace

Checkpoint init_training(const Dataset& data, const ModelConfig& config, const TrainHyper& hyper) {
  config.validate();
  prepare(data, config);
  if (hyper.batch < 1) throw std::invalid_argument("train: batch must be positive");
  if (hyper.epochs < 0 || hyper.max_steps < 0) {
    throw std::invalid_argument("train: epochs and max_steps must be non-negative");
  }
  Checkpoint c;
  Rng init_rng = Rng(hyper.seed).fork(kInitStream);
  c.model = Model<float>::init(config, init_rng);
  c.optimizer = AdamState<float>::zeros(config, hyper.adam);
  c.rng = Rng(hyper.seed).state();
  c.hyper = hyper;
  return c;
}

void train_continue(Checkpoint& c, const Dataset& data, const StepCallback& on_step) {
  const ModelConfig& cfg = c.config();
  const PreparedData prepared = prepare(data, cfg);
  const std::size_t n = prepared.sequences.size();
  const auto batch = static_cast<std::size_t>(c.hyper.batch);
  const auto steps_per_epoch = static_cast<std::int64_t>((n + batch - 1) / batch);
  const int n_steps = cfg.rollout_steps;
  const Rng base(c.rng);
  c.optimizer.config = c.hyper.adam;

  Model<float> grads = Model<float>::zeros(cfg);
  std::vector<std::size_t> order = epoch_order(c.rng.seed, c.progress.epoch, n);

  while (c.progress.epoch < c.hyper.epochs &&
         (c.hyper.max_steps == 0 || c.progress.step < c.hyper.max_steps)) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t begin = static_cast<std::size_t>(c.progress.cursor) * batch;
    const std::size_t end = std::min(begin + batch, n);
    const auto b = static_cast<Eigen::Index>(end - begin);

    Rng step_rng = base.fork(kStepStream).fork(static_cast<std::uint64_t>(c.progress.step));
    Mat<float> seeds(cfg.pose_dim(), b);
    Mat<float> labels = Mat<float>::Zero(cfg.categories, b);
    std::vector<Mat<float>> targets(n_steps, Mat<float>(cfg.pose_dim(), b));
    for (Eigen::Index k = 0; k < b; ++k) {
      const std::size_t idx = order[begin + static_cast<std::size_t>(k)];
      const Mat<float>& seq = prepared.sequences[idx];
      const auto start = static_cast<Eigen::Index>(
          step_rng.below(static_cast<std::uint64_t>(seq.cols() - n_steps)));
      seeds.col(k) = seq.col(start);
      for (int i = 0; i < n_steps; ++i) targets[i].col(k) = seq.col(start + 1 + i);
      labels(prepared.labels[idx], k) = 1.0f;
    }

    const auto trace = rollout<float>(c.model, seeds, labels, n_steps, step_rng, true, true);
    const auto loss =
        vae_loss_and_grad<float>(c.model, trace, targets, static_cast<float>(c.hyper.lambda_dis),
                                 static_cast<float>(c.hyper.lambda_div), grads);
    if (!std::isfinite(loss.total)) {
      std::string ids;
      for (std::size_t k = begin; k < end; ++k) {
        ids += (ids.empty() ? "" : ",") + data.records[order[k]].id;
      }
      throw TrainingAborted("non-finite loss at step " + std::to_string(c.progress.step) +
                            " (epoch " + std::to_string(c.progress.epoch) + ", batch " +
                            std::to_string(c.progress.cursor) + ", records " + ids + ")");
    }
    clip_gradients(grads, c.hyper.clip_norm);
    try {
      adam_step(c.model, grads, c.optimizer);
    } catch (const std::invalid_argument& e) {
      throw TrainingAborted(std::string(e.what()) + " at step " +
                            std::to_string(c.progress.step));
    }

    c.history.dis.push_back(loss.dis);
    c.history.div.push_back(loss.div);
    c.history.total.push_back(loss.total);
    ++c.progress.step;
    if (++c.progress.cursor == steps_per_epoch) {
      c.progress.cursor = 0;
      ++c.progress.epoch;
      order = epoch_order(c.rng.seed, c.progress.epoch, n);
    }
    if (on_step) {
      const double ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - t0)
                            .count();
      on_step({c.progress.step, loss.dis, loss.div, loss.total, ms});
    }
  }
}

Checkpoint train(const Dataset& data, const ModelConfig& config, const TrainHyper& hyper,
                 const StepCallback& on_step) {
  Checkpoint c = init_training(data, config, hyper);
  train_continue(c, data, on_step);
  return c;
}

#define ACTVAE_INSTANTIATE(S)                                                                  \
  template struct AdamState<S>;                                                                \
  template void adam_update<S>(Mat<S>&, const Mat<S>&, Mat<S>&, Mat<S>&, std::int64_t,         \
                               const AdamConfig&, const std::string&);                         \
  template void adam_update<S>(Vec<S>&, const Vec<S>&, Vec<S>&, Vec<S>&, std::int64_t,         \
                               const AdamConfig&, const std::string&);                         \
  template void adam_step<S>(Model<S>&, const Model<S>&, AdamState<S>&);

ACTVAE_INSTANTIATE(float)
ACTVAE_INSTANTIATE(double)

#undef ACTVAE_INSTANTIATE

}  // namespace actvae

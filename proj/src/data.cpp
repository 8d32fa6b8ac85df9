// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "actvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <json.hpp>
#include <sstream>

namespace actvae {

using nlohmann::json;
using nlohmann::ordered_json;

SchemaError::SchemaError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
      line_(line) {}

void PoseSequenceRecord::validate() const {
  if (frame_size.width < 2 || frame_size.height < 2) {
    throw SchemaError("record '" + id + "': frame size must be at least 2 x 2");
  }
  if (frames.size() < 2) {
    throw SchemaError("record '" + id + "': needs at least 2 frames, has " +
                      std::to_string(frames.size()));
  }
  const Eigen::Index j = frames.front().joints();
  if (j < 1) throw SchemaError("record '" + id + "': frame 0 has no joints");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Pose& p = frames[t];
    if (p.coords.size() != 2 * j) {
      throw SchemaError("record '" + id + "': frame " + std::to_string(t) + " has " +
                        std::to_string(p.joints()) + " joints, frame 0 has " +
                        std::to_string(j));
    }
    for (Eigen::Index k = 0; k < j; ++k) {
      const double x = p.x(k), y = p.y(k);
      if (!std::isfinite(x) || !std::isfinite(y) || x < 0.0 || y < 0.0 ||
          x > frame_size.width - 1 || y > frame_size.height - 1) {
        throw SchemaError("record '" + id + "': frame " + std::to_string(t) + " joint " +
                          std::to_string(k) + " outside the " +
                          std::to_string(frame_size.width) + "x" +
                          std::to_string(frame_size.height) + " frame");
      }
    }
  }
}

void Dataset::validate() const {
  if (joints < 1) throw SchemaError("dataset: joint count must be positive");
  if (categories.empty()) throw SchemaError("dataset: no categories");
  for (const auto& r : records) {
    r.validate();
    if (r.joints() != joints) {
      throw SchemaError("record '" + r.id + "': " + std::to_string(r.joints()) +
                        " joints, dataset declares " + std::to_string(joints));
    }
    if (r.action_index < 0 || r.action_index >= static_cast<int>(categories.size())) {
      throw SchemaError("record '" + r.id + "': action index " +
                        std::to_string(r.action_index) + " outside category list");
    }
  }
}

namespace {

ordered_json record_to_json(const PoseSequenceRecord& r) {
  ordered_json frames = ordered_json::array();
  for (const auto& p : r.frames) {
    ordered_json joints = ordered_json::array();
    for (Eigen::Index k = 0; k < p.joints(); ++k) joints.push_back({p.x(k), p.y(k)});
    frames.push_back(std::move(joints));
  }
  ordered_json j;
  j["id"] = r.id;
  j["action"] = {{"name", r.action_name}, {"index", r.action_index}};
  j["frame_size"] = {r.frame_size.width, r.frame_size.height};
  j["frames"] = std::move(frames);
  return j;
}

template <typename T>
T field(const json& obj, const char* key, std::size_t line) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw SchemaError(std::string("missing field '") + key + "'", line);
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("field '") + key + "' has the wrong type", line);
  }
}

PoseSequenceRecord record_from_json(const json& j, std::size_t line) {
  PoseSequenceRecord r;
  r.id = field<std::string>(j, "id", line);
  const json action = field<json>(j, "action", line);
  r.action_name = field<std::string>(action, "name", line);
  r.action_index = field<int>(action, "index", line);
  const auto size = field<std::vector<int>>(j, "frame_size", line);
  if (size.size() != 2) throw SchemaError("frame_size must be [width, height]", line);
  r.frame_size = {size[0], size[1]};

  const json frames = field<json>(j, "frames", line);
  if (!frames.is_array()) throw SchemaError("frames must be an array", line);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const json& f = frames[t];
    if (!f.is_array()) throw SchemaError("frame " + std::to_string(t) + " is not an array", line);
    Pose p(Eigen::VectorXd(2 * f.size()), false);
    for (std::size_t k = 0; k < f.size(); ++k) {
      const json& pt = f[k];
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
        throw SchemaError("frame " + std::to_string(t) + " joint " + std::to_string(k) +
                              " is not an [x, y] pair",
                          line);
      }
      p.x(k) = pt[0].get<double>();
      p.y(k) = pt[1].get<double>();
    }
    r.frames.push_back(std::move(p));
  }
  try {
    r.validate();
  } catch (const SchemaError& e) {
    throw SchemaError(e.what(), line);
  }
  return r;
}

}  // namespace

std::string serialize_sequences(const Dataset& data) {
  data.validate();
  std::string out;
  ordered_json header;
  header["format"] = kSequenceFormat;
  header["version"] = kSequenceFormatVersion;
  header["units"] = "pixels";
  header["joints"] = data.joints;
  header["categories"] = data.categories;
  out += header.dump() + "\n";
  for (const auto& r : data.records) out += record_to_json(r).dump() + "\n";
  return out;
}

Dataset parse_sequences(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  Dataset data;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    if (!have_header) {
      if (field<std::string>(j, "format", lineno) != kSequenceFormat) {
        throw SchemaError("not an actvae pose-sequence file", lineno);
      }
      const int version = field<int>(j, "version", lineno);
      if (version != kSequenceFormatVersion) {
        throw SchemaError("unsupported format version " + std::to_string(version), lineno);
      }
      data.joints = field<int>(j, "joints", lineno);
      data.categories = field<std::vector<std::string>>(j, "categories", lineno);
      if (data.joints < 1 || data.categories.empty()) {
        throw SchemaError("header needs positive joints and a category list", lineno);
      }
      have_header = true;
      continue;
    }
    auto r = record_from_json(j, lineno);
    if (r.joints() != data.joints) {
      throw SchemaError("record has " + std::to_string(r.joints()) +
                            " joints, header declares " + std::to_string(data.joints),
                        lineno);
    }
    if (r.action_index < 0 || r.action_index >= static_cast<int>(data.categories.size())) {
      throw SchemaError("action index " + std::to_string(r.action_index) +
                            " outside the header's category list",
                        lineno);
    }
    data.records.push_back(std::move(r));
  }
  if (!have_header) throw SchemaError("missing header line");
  return data;
}

Dataset load_sequences(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_sequences(buf.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what(), e.line());
  }
}

void save_sequences(const std::filesystem::path& path, const Dataset& data) {
  const std::string text = serialize_sequences(data);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

void check_in_frame(const Pose& p, FrameSize frame) {
  for (Eigen::Index k = 0; k < p.joints(); ++k) {
    if (!(p.x(k) >= 0.0 && p.x(k) <= frame.width - 1 && p.y(k) >= 0.0 &&
          p.y(k) <= frame.height - 1)) {
      throw std::invalid_argument("normalize: joint " + std::to_string(k) +
                                  " outside the frame");
    }
  }
}

}  // namespace

Pose normalize(const Pose& pixel_pose, FrameSize frame) {
  if (pixel_pose.normalized) throw std::invalid_argument("normalize: pose already normalized");
  check_in_frame(pixel_pose, frame);
  Pose out = pixel_pose;
  out.normalized = true;
  for (Eigen::Index k = 0; k < out.joints(); ++k) {
    out.x(k) = 2.0 * pixel_pose.x(k) / (frame.width - 1) - 1.0;
    out.y(k) = 2.0 * pixel_pose.y(k) / (frame.height - 1) - 1.0;
  }
  return out;
}

Pose denormalize(const Pose& normalized_pose, FrameSize frame) {
  if (!normalized_pose.normalized) {
    throw std::invalid_argument("denormalize: pose is not normalized");
  }
  normalized_pose.validate(normalized_pose.joints());
  Pose out = normalized_pose;
  out.normalized = false;
  for (Eigen::Index k = 0; k < out.joints(); ++k) {
    out.x(k) = (normalized_pose.x(k) + 1.0) * 0.5 * (frame.width - 1);
    out.y(k) = (normalized_pose.y(k) + 1.0) * 0.5 * (frame.height - 1);
  }
  return out;
}

Pose denormalize_clamped(const Pose& normalized_pose, FrameSize frame) {
  Pose clamped = normalized_pose;
  clamped.coords = clamped.coords.cwiseMax(-1.0).cwiseMin(1.0);
  return denormalize(clamped, frame);
}

Pose to_canonical(const Pose& pixel_pose, FrameSize frame) {
  if (frame == FrameSize{}) return pixel_pose;
  return denormalize(normalize(pixel_pose, frame), FrameSize{});
}

// ---------------------------------------------------------------------------
// Synthetic motion

int SyntheticSpec::joints() const {
  return categories.empty() ? 0 : static_cast<int>(categories.front().joints.size());
}

void SyntheticSpec::validate() const {
  if (categories.empty()) throw SchemaError("synthetic spec: no categories");
  if (phase_jitter < 0 || amplitude_jitter < 0 || amplitude_jitter >= 1 ||
      observation_noise < 0) {
    throw SchemaError("synthetic spec: jitter and noise must be non-negative, amplitude "
                      "jitter below 1");
  }
  const int j = joints();
  if (j < 1) throw SchemaError("synthetic spec: category '" + categories[0].name +
                               "' has no joints");
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const auto& cat = categories[c];
    if (static_cast<int>(cat.joints.size()) != j) {
      throw SchemaError("synthetic spec: category '" + cat.name + "' has " +
                        std::to_string(cat.joints.size()) + " joints, expected " +
                        std::to_string(j));
    }
    for (std::size_t d = 0; d < c; ++d) {
      if (categories[d].omega == cat.omega) {
        throw SchemaError("synthetic spec: categories '" + categories[d].name + "' and '" +
                          cat.name + "' share a frequency");
      }
    }
    const double margin = 4.0 * observation_noise;
    const double limit[2] = {frame_size.width - 1.0, frame_size.height - 1.0};
    for (std::size_t k = 0; k < cat.joints.size(); ++k) {
      for (int a = 0; a < 2; ++a) {
        const double reach = std::abs(cat.joints[k].amplitude[a]) * (1.0 + amplitude_jitter);
        const double lo = cat.joints[k].base[a] - reach - margin;
        const double hi = cat.joints[k].base[a] + reach + margin;
        if (lo < 0.0 || hi > limit[a]) {
          throw SchemaError("synthetic spec: category '" + cat.name + "' joint " +
                            std::to_string(k) + " leaves the frame");
        }
      }
    }
  }
}

SyntheticSpec SyntheticSpec::desk_default() {
  const double pi = std::numbers::pi;
  const std::vector<SyntheticJoint> layout = {
      {{64.0, 32.0}, {10.0, 6.0}, 0.0},
      {{64.0, 60.0}, {6.0, 10.0}, 0.5 * pi},
      {{40.0, 84.0}, {16.0, 8.0}, pi},
      {{88.0, 84.0}, {16.0, 8.0}, 1.5 * pi},
  };
  SyntheticSpec spec;
  spec.categories = {{"slow", 0.2, layout}, {"fast", 0.8, layout}};
  spec.phase_jitter = pi;
  spec.amplitude_jitter = 0.1;
  spec.observation_noise = 0.5;
  return spec;
}

SyntheticSpec SyntheticSpec::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("synthetic spec: invalid JSON: ") + e.what());
  }
  try {
    SyntheticSpec spec;
    const auto size = j.value("frame_size", std::vector<int>{kCanonicalFrame, kCanonicalFrame});
    if (size.size() != 2) throw SchemaError("synthetic spec: frame_size must be [w, h]");
    spec.frame_size = {size[0], size[1]};
    spec.phase_jitter = j.value("phase_jitter", 0.0);
    spec.amplitude_jitter = j.value("amplitude_jitter", 0.0);
    spec.observation_noise = j.value("observation_noise", 0.0);
    for (const auto& c : j.at("categories")) {
      SyntheticCategory cat;
      cat.name = c.at("name").get<std::string>();
      cat.omega = c.at("omega").get<double>();
      for (const auto& jt : c.at("joints")) {
        SyntheticJoint joint;
        joint.base = jt.at("base").get<std::array<double, 2>>();
        joint.amplitude = jt.at("amplitude").get<std::array<double, 2>>();
        joint.phase = jt.value("phase", 0.0);
        cat.joints.push_back(joint);
      }
      spec.categories.push_back(std::move(cat));
    }
    spec.validate();
    return spec;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("synthetic spec: ") + e.what());
  }
}

SyntheticSpec SyntheticSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

std::string SyntheticSpec::to_json() const {
  ordered_json j;
  j["frame_size"] = {frame_size.width, frame_size.height};
  j["phase_jitter"] = phase_jitter;
  j["amplitude_jitter"] = amplitude_jitter;
  j["observation_noise"] = observation_noise;
  j["categories"] = ordered_json::array();
  for (const auto& c : categories) {
    ordered_json cat;
    cat["name"] = c.name;
    cat["omega"] = c.omega;
    cat["joints"] = ordered_json::array();
    for (const auto& jt : c.joints) {
      cat["joints"].push_back(
          {{"base", jt.base}, {"amplitude", jt.amplitude}, {"phase", jt.phase}});
    }
    j["categories"].push_back(std::move(cat));
  }
  return j.dump(2);
}

Pose synthetic_mean_pose(const SyntheticSpec& spec, const SyntheticTruth& truth, double t) {
  const auto& cat = spec.categories.at(truth.category);
  Pose p = Pose::zeros(static_cast<Eigen::Index>(cat.joints.size()), false);
  for (std::size_t k = 0; k < cat.joints.size(); ++k) {
    const auto& jt = cat.joints[k];
    const double s = truth.amplitude_scale * std::sin(cat.omega * t + jt.phase + truth.phase_offset);
    p.x(k) = jt.base[0] + jt.amplitude[0] * s;
    p.y(k) = jt.base[1] + jt.amplitude[1] * s;
  }
  return p;
}

SyntheticData generate_synthetic(const SyntheticSpec& spec, int n_sequences, int frames,
                                 Rng& rng) {
  spec.validate();
  if (n_sequences < 0) throw std::invalid_argument("generate_synthetic: negative count");
  if (frames < 2) throw std::invalid_argument("generate_synthetic: need at least 2 frames");

  SyntheticData out;
  out.dataset.joints = spec.joints();
  for (const auto& c : spec.categories) out.dataset.categories.push_back(c.name);

  const int n_cat = static_cast<int>(spec.categories.size());
  const double max_x = spec.frame_size.width - 1.0;
  const double max_y = spec.frame_size.height - 1.0;
  for (int s = 0; s < n_sequences; ++s) {
    Rng seq_rng = rng.fork(static_cast<std::uint64_t>(s));
    SyntheticTruth truth;
    truth.category = s % n_cat;
    truth.phase_offset = spec.phase_jitter > 0
                             ? seq_rng.uniform(-spec.phase_jitter, spec.phase_jitter)
                             : 0.0;
    truth.amplitude_scale =
        1.0 + (spec.amplitude_jitter > 0
                   ? seq_rng.uniform(-spec.amplitude_jitter, spec.amplitude_jitter)
                   : 0.0);

    PoseSequenceRecord rec;
    rec.id = "syn-" + std::to_string(s);
    rec.action_name = spec.categories[truth.category].name;
    rec.action_index = truth.category;
    rec.frame_size = spec.frame_size;
    for (int t = 0; t < frames; ++t) {
      Pose p = synthetic_mean_pose(spec, truth, t);
      if (spec.observation_noise > 0) {
        for (Eigen::Index k = 0; k < p.coords.size(); ++k) {
          p.coords[k] += spec.observation_noise * seq_rng.normal();
        }
      }
      // Noise beyond the validated 4-sigma margin is clipped to the frame.
      for (Eigen::Index k = 0; k < p.joints(); ++k) {
        p.x(k) = std::clamp(p.x(k), 0.0, max_x);
        p.y(k) = std::clamp(p.y(k), 0.0, max_y);
      }
      rec.frames.push_back(std::move(p));
    }
    out.dataset.records.push_back(std::move(rec));
    out.truth.push_back(truth);
  }
  return out;
}

double estimate_frequency(const SyntheticSpec& spec, const std::vector<Pose>& pixel_frames,
                          int reference) {
  if (pixel_frames.size() < 2) {
    throw std::invalid_argument("estimate_frequency: need at least 2 frames");
  }
  const auto& joints = spec.categories.at(reference).joints;
  double crossings = 0.0;
  for (std::size_t k = 0; k < joints.size(); ++k) {
    const auto& jt = joints[k];
    const double norm = std::hypot(jt.amplitude[0], jt.amplitude[1]);
    if (norm == 0.0) throw std::invalid_argument("estimate_frequency: joint without motion");
    int prev_sign = 0;
    int count = 0;
    for (const auto& p : pixel_frames) {
      const double d = ((p.x(k) - jt.base[0]) * jt.amplitude[0] +
                        (p.y(k) - jt.base[1]) * jt.amplitude[1]) /
                       norm;
      const int sign = (d > 0) - (d < 0);
      if (sign == 0) continue;
      if (prev_sign != 0 && sign != prev_sign) ++count;
      prev_sign = sign;
    }
    crossings += count;
  }
  crossings /= static_cast<double>(joints.size());
  return std::numbers::pi * crossings / static_cast<double>(pixel_frames.size() - 1);
}

int classify_by_frequency(const SyntheticSpec& spec, const std::vector<Pose>& pixel_frames,
                          int reference) {
  const double omega = estimate_frequency(spec, pixel_frames, reference);
  int best = 0;
  for (std::size_t c = 1; c < spec.categories.size(); ++c) {
    if (std::abs(spec.categories[c].omega - omega) <
        std::abs(spec.categories[best].omega - omega)) {
      best = static_cast<int>(c);
    }
  }
  return best;
}

DatasetSplit split(const Dataset& data, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.val < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw std::invalid_argument("split: ratios must be non-negative and sum to 1");
  }
  DatasetSplit out;
  for (Dataset* d : {&out.train, &out.val, &out.test}) {
    d->categories = data.categories;
    d->joints = data.joints;
  }
  std::map<int, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    by_category[data.records[i].action_index].push_back(i);
  }
  const Rng base(seed);
  for (auto& [category, idx] : by_category) {
    Rng rng = base.fork(static_cast<std::uint64_t>(category));
    for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train));
    const auto n_val = std::min(idx.size() - n_train,
                                static_cast<std::size_t>(std::llround(n * ratios.val)));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      Dataset& dst = i < n_train ? out.train : (i < n_train + n_val ? out.val : out.test);
      dst.records.push_back(data.records[idx[i]]);
    }
  }
  return out;
}

}  // namespace actvae

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "actvae/data.hpp"
#include "actvae/eval.hpp"
#include "actvae/json_io.hpp"
#include "actvae/training.hpp"
#include "render.hpp"
#include "run_manifest.hpp"

#ifndef ACTVAE_DEFAULT_SKELETON_DIR
#define ACTVAE_DEFAULT_SKELETON_DIR "skeletons"
#endif

namespace actvae::cli {

using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || env[0] == '-') {
    throw std::invalid_argument(std::string(kSeedEnv) + " is not an unsigned integer: " + env);
  }
  return v;
}

namespace {

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------------------
// gen

struct GenArgs {
  std::string spec;
  std::string out;
  std::uint64_t seed = 0;
  int n = 2000;
  int frames = 16;
};

void cmd_gen(const GenArgs& a, RunManifest& m, std::ostream& out) {
  const SyntheticSpec spec = a.spec.empty() ? SyntheticSpec::desk_default()
                                            : SyntheticSpec::load(a.spec);
  if (!a.spec.empty()) m.inputs.push_back(a.spec);
  Rng rng(a.seed);
  const auto syn = generate_synthetic(spec, a.n, a.frames, rng);
  write_atomic(a.out, serialize_sequences(syn.dataset));
  m.outputs.push_back(a.out);
  m.config = {{"spec", ojson::parse(spec.to_json())}, {"n", a.n}, {"frames", a.frames}};
  out << "wrote " << a.n << " sequences of " << a.frames << " frames to " << a.out << "\n";
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string data;
  std::string out;
  std::string config;
  std::string resume;
  std::string metrics;
  std::string preset = "desk";
  std::optional<std::string> ablation;
  std::optional<int> epochs;
  std::optional<std::int64_t> steps;
  std::optional<double> lr;
  std::optional<int> batch;
  std::optional<double> lambda_dis;
  std::optional<double> lambda_div;
  std::optional<double> clip_norm;
  std::optional<int> n_steps;
  bool clip = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

/// Defaults, then the config file, then flags.
std::pair<ModelConfig, TrainHyper> resolve_train_config(const TrainArgs& a, const Dataset& data) {
  nlohmann::json file = nlohmann::json::object();
  if (!a.config.empty()) {
    file = nlohmann::json::parse(read_file(a.config));
    for (const auto& [key, v] : file.items()) {
      if (key != "preset" && key != "ablation" && key != "model" && key != "train") {
        throw std::invalid_argument("config: unknown top-level key '" + key + "'");
      }
    }
  }
  const int j = data.joints;
  const int c = static_cast<int>(data.categories.size());
  std::string preset = file.value("preset", std::string("desk"));
  if (a.preset != "desk") preset = a.preset;
  ModelConfig cfg;
  if (preset == "desk") {
    cfg = ModelConfig::desk(j, c);
  } else if (preset == "reference") {
    cfg = ModelConfig::reference(j, c);
  } else {
    throw std::invalid_argument("unknown preset '" + preset + "' (expected desk or reference)");
  }
  if (file.contains("ablation")) cfg.apply_ablation(file.at("ablation").get<std::string>());
  if (file.contains("model")) merge_json(file.at("model"), cfg);

  TrainHyper h;
  h.epochs = 60;
  h.max_steps = 5000;
  if (file.contains("train")) merge_json(file.at("train"), h);

  if (a.ablation) cfg.apply_ablation(*a.ablation);
  if (a.n_steps) cfg.rollout_steps = *a.n_steps;
  if (a.epochs) h.epochs = *a.epochs;
  if (a.steps) h.max_steps = *a.steps;
  if (a.lr) h.adam.lr = *a.lr;
  if (a.batch) h.batch = *a.batch;
  if (a.lambda_dis) h.lambda_dis = *a.lambda_dis;
  if (a.lambda_div) h.lambda_div = *a.lambda_div;
  if (a.clip) h.clip_norm = 5.0;
  if (a.clip_norm) h.clip_norm = *a.clip_norm;
  if (a.seed_given || !(file.contains("train") && file.at("train").contains("seed"))) {
    h.seed = a.seed;
  }

  if (cfg.joints != j || cfg.categories != c) {
    throw std::invalid_argument("config/data mismatch: config has J=" + std::to_string(cfg.joints) +
                                ", C=" + std::to_string(cfg.categories) + "; data has J=" +
                                std::to_string(j) + ", C=" + std::to_string(c));
  }
  cfg.validate();
  return {cfg, h};
}

ojson effective_config(const ModelConfig& cfg, const TrainHyper& h) {
  ojson model, hyper;
  to_json(model, cfg);
  to_json(hyper, h);
  return {{"ablation", cfg.ablation_name()}, {"model", model}, {"train", hyper}};
}

int cmd_train(const TrainArgs& a, RunManifest& m, std::ostream& out) {
  const Dataset data = load_sequences(a.data);
  m.inputs.push_back(a.data);
  Checkpoint c;
  if (!a.resume.empty()) {
    if (!a.config.empty() || a.ablation || a.n_steps || a.lr || a.batch || a.lambda_dis ||
        a.lambda_div || a.clip || a.clip_norm || a.seed_given || a.preset != "desk") {
      throw std::invalid_argument(
          "--resume continues a saved run; only --epochs and --steps may change");
    }
    c = load_checkpoint(a.resume);
    m.inputs.push_back(a.resume);
    if (c.config().joints != data.joints ||
        c.config().categories != static_cast<int>(data.categories.size())) {
      throw std::invalid_argument("config/data mismatch: checkpoint and data disagree on J or C");
    }
    if (a.epochs) c.hyper.epochs = *a.epochs;
    if (a.steps) c.hyper.max_steps = *a.steps;
  } else {
    auto [cfg, h] = resolve_train_config(a, data);
    c = init_training(data, cfg, h);
  }
  m.seed = c.hyper.seed;
  m.config = effective_config(c.config(), c.hyper);

  const fs::path metrics = a.metrics.empty() ? fs::path(a.out + ".metrics.jsonl") : fs::path(a.metrics);
  std::string log;
  const auto start_step = c.progress.step;
  const auto report = [&](const StepRecord& r) {
    ojson j{{"step", r.step}, {"dis", r.dis}, {"div", r.div}, {"total", r.total},
            {"wall_ms", r.wall_ms}};
    log += j.dump() + "\n";
    if (r.step % 500 == 0) {
      out << "step " << r.step << "  dis " << r.dis << "  div " << r.div << "  total " << r.total
          << "\n";
    }
  };
  try {
    train_continue(c, data, report);
  } catch (const TrainingAborted& e) {
    write_atomic(metrics, log);
    m.outputs.push_back(metrics);
    m.complete = false;
    m.error = e.what();
    return kExitAborted;
  }
  save_checkpoint(c, a.out);
  write_atomic(metrics, log);
  m.outputs.push_back(a.out);
  m.outputs.push_back(metrics);
  out << "trained " << (c.progress.step - start_step) << " steps (total " << c.progress.step
      << ", epoch " << c.progress.epoch << "); checkpoint " << a.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string ckpt;
  std::string pose;
  std::string out;
  int record = 0;
  int frame = 0;
  std::optional<int> label;
  std::optional<int> n_steps;
  int k = 1;
  bool deterministic = false;
  std::uint64_t seed = 0;
};

const PoseSequenceRecord& pick_record(const Dataset& d, int index) {
  if (index < 0 || index >= static_cast<int>(d.records.size())) {
    throw std::invalid_argument("record index " + std::to_string(index) + " out of range (" +
                                std::to_string(d.records.size()) + " records)");
  }
  return d.records[static_cast<std::size_t>(index)];
}

void cmd_sample(const SampleArgs& a, RunManifest& m, std::ostream& out) {
  const Checkpoint c = load_checkpoint(a.ckpt);
  const Dataset source = load_sequences(a.pose);
  m.inputs = {a.ckpt, a.pose};
  const auto& cfg = c.config();
  if (source.joints != cfg.joints ||
      static_cast<int>(source.categories.size()) != cfg.categories) {
    throw std::invalid_argument("checkpoint/config mismatch: pose file has J=" +
                                std::to_string(source.joints) + ", C=" +
                                std::to_string(source.categories.size()));
  }
  const auto& rec = pick_record(source, a.record);
  if (a.frame < 0 || a.frame >= static_cast<int>(rec.frames.size())) {
    throw std::invalid_argument("frame index " + std::to_string(a.frame) + " out of range");
  }
  const int label = a.label.value_or(rec.action_index);
  if (label < 0 || label >= cfg.categories) {
    throw std::invalid_argument("label " + std::to_string(label) + " outside [0, " +
                                std::to_string(cfg.categories) + ")");
  }
  if (a.k < 1) throw std::invalid_argument("--k must be positive");
  const int n_steps = a.n_steps.value_or(cfg.rollout_steps);
  if (n_steps < 1) throw std::invalid_argument("--n-steps must be positive");

  Rng rng(a.seed);
  const Pose& seed_pose = rec.frames[static_cast<std::size_t>(a.frame)];
  const auto samples = sample_sequences(c.model, seed_pose, rec.frame_size,
                                        ActionLabel::from_index(label, cfg.categories), a.k,
                                        n_steps, rng, !a.deterministic);
  Dataset result;
  result.categories = source.categories;
  result.joints = source.joints;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    PoseSequenceRecord r;
    r.id = rec.id + "/sample-" + std::to_string(k);
    r.action_index = label;
    r.action_name = source.categories[static_cast<std::size_t>(label)];
    r.frame_size = rec.frame_size;
    r.frames.push_back(seed_pose);
    r.frames.insert(r.frames.end(), samples[k].begin(), samples[k].end());
    result.records.push_back(std::move(r));
  }
  write_atomic(a.out, serialize_sequences(result));
  m.outputs.push_back(a.out);
  m.config = {{"record", a.record},   {"frame", a.frame},
              {"label", label},       {"n_steps", n_steps},
              {"k", a.k},             {"sample", !a.deterministic},
              {"model", effective_config(cfg, c.hyper)["model"]}};
  out << "wrote " << a.k << " sequences (label " << label << ", " << n_steps << " steps) to "
      << a.out << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string ckpt;
  std::string data;
  std::string out;
  int k = 100;
  int keep = 10;
  std::optional<int> n_steps;
  bool deterministic = false;
  std::uint64_t seed = 0;
};

void cmd_eval(const EvalArgs& a, RunManifest& m, std::ostream& out) {
  const Checkpoint c = load_checkpoint(a.ckpt);
  const Dataset data = load_sequences(a.data);
  m.inputs = {a.ckpt, a.data};
  EvalOptions opts;
  opts.k = a.k;
  opts.n_keep = a.keep;
  opts.n_steps = a.n_steps.value_or(c.config().rollout_steps);
  opts.seed = a.seed;
  opts.sample = !a.deterministic;
  const MetricReport report = evaluate(c.model, data, opts);
  write_atomic(a.out, report.to_jsonl());
  m.outputs.push_back(a.out);
  m.config = {{"k", opts.k},
              {"n_keep", opts.n_keep},
              {"n_steps", opts.n_steps},
              {"sample", opts.sample},
              {"model", effective_config(c.config(), c.hyper)["model"]}};
  out << report.summary_table();
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  std::string sequences;
  std::string out;
  std::string skeleton;
  int record = 0;
  std::optional<int> frame;
  int scale = 4;
};

void cmd_plot(const PlotArgs& a, RunManifest& m, std::ostream& out) {
  const Dataset data = load_sequences(a.sequences);
  m.inputs.push_back(a.sequences);
  const auto& rec = pick_record(data, a.record);

  Skeleton skeleton;
  if (!a.skeleton.empty()) {
    skeleton = Skeleton::load(a.skeleton);
    m.inputs.push_back(a.skeleton);
  } else {
    const char* env = std::getenv(kSkeletonEnv);
    const fs::path dir = env != nullptr && *env != '\0' ? fs::path(env)
                                                        : fs::path(ACTVAE_DEFAULT_SKELETON_DIR);
    auto found = find_skeleton(dir, data.joints);
    if (!found) {
      throw std::invalid_argument("no skeleton with " + std::to_string(data.joints) +
                                  " joints in " + dir.string() +
                                  "; pass --skeleton with a connectivity file");
    }
    skeleton = *found;
  }

  fs::create_directories(a.out);
  std::size_t first = 0, last = rec.frames.size();
  if (a.frame) {
    if (*a.frame < 0 || *a.frame >= static_cast<int>(rec.frames.size())) {
      throw std::invalid_argument("frame index " + std::to_string(*a.frame) + " out of range");
    }
    first = static_cast<std::size_t>(*a.frame);
    last = first + 1;
  }
  std::vector<Image> frames;
  for (std::size_t t = first; t < last; ++t) {
    frames.push_back(render_pose(rec.frames[t], rec.frame_size, skeleton, a.scale));
    std::ostringstream name;
    name << "frame_" << std::setw(4) << std::setfill('0') << t << ".ppm";
    const fs::path p = fs::path(a.out) / name.str();
    write_atomic(p, encode_ppm(frames.back()));
    m.outputs.push_back(p);
  }
  const fs::path strip = fs::path(a.out) / "filmstrip.ppm";
  write_atomic(strip, encode_ppm(filmstrip(frames, a.scale)));
  m.outputs.push_back(strip);
  m.config = {{"record", a.record}, {"id", rec.id}, {"scale", a.scale},
              {"skeleton", skeleton.name}};
  out << "rendered " << frames.size() << " frames of '" << rec.id << "' to " << a.out << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ACT-VAE: action-conditioned pose sequence generation"};
  app.require_subcommand(1);
  std::uint64_t env_seed = 0;
  try {
    env_seed = default_seed();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  GenArgs gen;
  gen.seed = env_seed;
  auto* g = app.add_subcommand("gen", "Generate a synthetic pose-sequence dataset");
  g->add_option("--spec", gen.spec, "Synthetic spec JSON (default: built-in desk spec)")
      ->check(CLI::ExistingFile);
  g->add_option("--out,-o", gen.out, "Output sequence file")->required();
  g->add_option("--seed", gen.seed, "Random seed (default: $ACTVAE_SEED or 0)");
  g->add_option("--n", gen.n, "Number of sequences")->capture_default_str()->check(CLI::NonNegativeNumber);
  g->add_option("--frames", gen.frames, "Frames per sequence")->capture_default_str();

  TrainArgs tr;
  tr.seed = env_seed;
  auto* t = app.add_subcommand("train", "Train a model on a sequence file");
  t->add_option("data", tr.data, "Training sequence file")->required()->check(CLI::ExistingFile);
  t->add_option("--out,-o", tr.out, "Output checkpoint")->required();
  t->add_option("--config", tr.config, "Config JSON (flags override it)")->check(CLI::ExistingFile);
  t->add_option("--resume", tr.resume, "Continue from a checkpoint")->check(CLI::ExistingFile);
  t->add_option("--metrics", tr.metrics, "Metrics log (default: <out>.metrics.jsonl)");
  t->add_option("--preset", tr.preset, "Network sizes: desk or reference")->capture_default_str();
  t->add_option("--ablation", tr.ablation, "full, wo_a, wo_az or wo_ac");
  t->add_option("--epochs", tr.epochs, "Epoch limit");
  t->add_option("--steps", tr.steps, "Optimizer step limit (0: none)");
  t->add_option("--lr", tr.lr, "Adam learning rate");
  t->add_option("--batch", tr.batch, "Sequences per step");
  t->add_option("--lambda-dis", tr.lambda_dis, "Weight of the L1 distance term");
  t->add_option("--lambda-div", tr.lambda_div, "Weight of the KL term");
  t->add_flag("--clip", tr.clip, "Clip the global gradient norm at 5");
  t->add_option("--clip-norm", tr.clip_norm, "Clip the global gradient norm at this value");
  t->add_option("--n-steps", tr.n_steps, "Rollout length N");
  auto* train_seed = t->add_option("--seed", tr.seed, "Random seed (default: $ACTVAE_SEED or 0)");

  SampleArgs sa;
  sa.seed = env_seed;
  auto* s = app.add_subcommand("sample", "Sample pose sequences from a checkpoint");
  s->add_option("ckpt", sa.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  s->add_option("--pose", sa.pose, "Sequence file holding the seed pose")->required()->check(CLI::ExistingFile);
  s->add_option("--record", sa.record, "Record index in the pose file")->capture_default_str();
  s->add_option("--frame", sa.frame, "Frame index of the seed pose")->capture_default_str();
  s->add_option("--label", sa.label, "Action label index (default: the record's)");
  s->add_option("--n-steps", sa.n_steps, "Frames to generate (default: model N)");
  s->add_option("--k", sa.k, "Number of samples")->capture_default_str();
  s->add_flag("--deterministic", sa.deterministic, "Use latent means instead of sampling");
  s->add_option("--seed", sa.seed, "Random seed (default: $ACTVAE_SEED or 0)");
  s->add_option("--out,-o", sa.out, "Output sequence file")->required();

  EvalArgs ev;
  ev.seed = env_seed;
  auto* e = app.add_subcommand("eval", "Best-of-K accuracy and diversity on a test set");
  e->add_option("ckpt", ev.ckpt, "Checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("data", ev.data, "Test sequence file")->required()->check(CLI::ExistingFile);
  e->add_option("--k", ev.k, "Samples per sequence")->capture_default_str();
  e->add_option("--keep", ev.keep, "Closest samples averaged")->capture_default_str();
  e->add_option("--n-steps", ev.n_steps, "Frames to predict (default: model N)");
  e->add_flag("--deterministic", ev.deterministic, "Use latent means instead of sampling");
  e->add_option("--seed", ev.seed, "Random seed (default: $ACTVAE_SEED or 0)");
  e->add_option("--out,-o", ev.out, "Metric report (JSON lines)")->required();

  PlotArgs pl;
  auto* p = app.add_subcommand("plot", "Render stick figures as PPM images");
  p->add_option("sequences", pl.sequences, "Sequence file")->required()->check(CLI::ExistingFile);
  p->add_option("--out,-o", pl.out, "Output directory")->required();
  p->add_option("--record", pl.record, "Record index")->capture_default_str();
  p->add_option("--frame", pl.frame, "Render only this frame");
  p->add_option("--skeleton", pl.skeleton, "Skeleton connectivity JSON")->check(CLI::ExistingFile);
  p->add_option("--scale", pl.scale, "Pixels per frame pixel")->capture_default_str()->check(CLI::PositiveNumber);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& pe) {
    if (pe.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << pe.what() << "\n";
    return kExitUsage;
  }

  RunManifest m;
  m.argv = args;
  const Clock clock;
  fs::path artifact;
  int code = kExitOk;
  try {
    if (g->parsed()) {
      m.command = "gen";
      m.seed = gen.seed;
      artifact = gen.out;
      cmd_gen(gen, m, out);
    } else if (t->parsed()) {
      m.command = "train";
      tr.seed_given = train_seed->count() > 0;
      artifact = tr.out;
      code = cmd_train(tr, m, out);
      if (code == kExitAborted) err << "error: training aborted: " << m.error << "\n";
    } else if (s->parsed()) {
      m.command = "sample";
      m.seed = sa.seed;
      artifact = sa.out;
      cmd_sample(sa, m, out);
    } else if (e->parsed()) {
      m.command = "eval";
      m.seed = ev.seed;
      artifact = ev.out;
      cmd_eval(ev, m, out);
    } else {
      m.command = "plot";
      artifact = pl.out;
      cmd_plot(pl, m, out);
    }
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitError;
  }
  m.wall_seconds = clock.seconds();
  try {
    m.write(manifest_path_for(artifact));
  } catch (const std::exception& ex) {
    err << "error: writing manifest: " << ex.what() << "\n";
    return kExitError;
  }
  return code;
}

}  // namespace actvae::cli

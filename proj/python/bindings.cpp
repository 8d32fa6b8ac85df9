// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ACT-VAE Authors.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "actvae/data.hpp"
#include "actvae/eval.hpp"
#include "actvae/gaussian.hpp"
#include "actvae/model.hpp"
#include "actvae/training.hpp"
#include "commands.hpp"

namespace py = pybind11;
using namespace actvae;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (T, J, 2) array <-> pixel frames.
std::vector<Pose> frames_from_array(const Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 2) throw std::invalid_argument("expected shape (T, J, 2)");
  const auto t = a.shape(0), j = a.shape(1);
  std::vector<Pose> out;
  const double* p = a.data();
  for (py::ssize_t i = 0; i < t; ++i) {
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(p + i * j * 2, j * 2);
    out.emplace_back(c, false);
  }
  return out;
}

Array frames_to_array(const std::vector<std::vector<Pose>>& seqs) {
  const auto k = static_cast<py::ssize_t>(seqs.size());
  const auto t = k ? static_cast<py::ssize_t>(seqs[0].size()) : 0;
  const auto j = t ? static_cast<py::ssize_t>(seqs[0][0].joints()) : 0;
  Array out({k, t, j, py::ssize_t{2}});
  double* dst = out.mutable_data();
  for (const auto& s : seqs) {
    if (static_cast<py::ssize_t>(s.size()) != t) throw std::invalid_argument("ragged sequences");
    for (const auto& p : s) {
      std::copy(p.coords.data(), p.coords.data() + p.coords.size(), dst);
      dst += p.coords.size();
    }
  }
  return out;
}

Array sequence_to_array(const std::vector<Pose>& frames) {
  const auto t = static_cast<py::ssize_t>(frames.size());
  const auto j = t ? static_cast<py::ssize_t>(frames[0].joints()) : 0;
  Array out({t, j, py::ssize_t{2}});
  double* dst = out.mutable_data();
  for (const auto& p : frames) dst = std::copy(p.coords.data(), p.coords.data() + p.coords.size(), dst);
  return out;
}

std::vector<PoseSequence> samples_from_array(const Array& a) {
  if (a.ndim() != 4 || a.shape(3) != 2) throw std::invalid_argument("expected shape (K, T, J, 2)");
  std::vector<PoseSequence> out;
  const auto stride = a.shape(1) * a.shape(2) * 2;
  for (py::ssize_t k = 0; k < a.shape(0); ++k) {
    Array one({a.shape(1), a.shape(2), py::ssize_t{2}}, a.data() + k * stride);
    out.push_back(frames_from_array(one));
  }
  return out;
}

py::dict report_dict(const MetricReport& r) {
  py::dict d;
  d["l2_best_of_k"] = r.l2_best_of_k;
  d["diversity_std"] = r.diversity_std;
  d["baseline_l2"] = r.baseline_l2;
  d["k"] = r.k;
  d["n_keep"] = r.n_keep;
  d["n_steps"] = r.n_steps;
  d["sequences"] = r.sequences.size();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ACT-VAE core bindings";

  py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
  py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
  py::register_exception<TrainingAborted>(m, "TrainingAborted", PyExc_RuntimeError);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init<>())
      .def_static("reference", &ModelConfig::reference, py::arg("joints"), py::arg("categories"))
      .def_static("desk", &ModelConfig::desk, py::arg("joints"), py::arg("categories"))
      .def_readwrite("joints", &ModelConfig::joints)
      .def_readwrite("categories", &ModelConfig::categories)
      .def_readwrite("latent_dim", &ModelConfig::latent_dim)
      .def_readwrite("enc_hidden", &ModelConfig::enc_hidden)
      .def_readwrite("dec_hidden", &ModelConfig::dec_hidden)
      .def_readwrite("rollout_steps", &ModelConfig::rollout_steps)
      .def_readwrite("use_action_label", &ModelConfig::use_action_label)
      .def_readwrite("condition_on_past_latents", &ModelConfig::condition_on_past_latents)
      .def_readwrite("temporal_coherence", &ModelConfig::temporal_coherence)
      .def_readwrite("residual_decoding", &ModelConfig::residual_decoding)
      .def("apply_ablation", &ModelConfig::apply_ablation)
      .def_property_readonly("ablation", &ModelConfig::ablation_name)
      .def_property_readonly("encoder_input_dim", &ModelConfig::encoder_input_dim)
      .def_property_readonly("decoder_input_dim", &ModelConfig::decoder_input_dim)
      .def_property_readonly("parameter_count",
                             [](const ModelConfig& c) { return Model<float>::zeros(c).parameter_count(); })
      .def("__eq__", [](const ModelConfig& a, const ModelConfig& b) { return a == b; })
      .def("__repr__", [](const ModelConfig& c) {
        std::ostringstream s;
        s << "ModelConfig(J=" << c.joints << ", C=" << c.categories << ", d_z=" << c.latent_dim
          << ", enc_hidden=" << c.enc_hidden << ", dec_hidden=" << c.dec_hidden
          << ", N=" << c.rollout_steps << ", ablation=" << c.ablation_name() << ")";
        return s.str();
      });

  py::class_<Dataset>(m, "Dataset")
      .def_static("load", &load_sequences, py::arg("path"))
      .def_static("parse", &parse_sequences, py::arg("text"))
      .def_static(
          "synthetic",
          [](int n, int frames, std::uint64_t seed, std::optional<std::string> spec_json) {
            const auto spec = spec_json ? SyntheticSpec::from_json(*spec_json)
                                        : SyntheticSpec::desk_default();
            Rng rng(seed);
            return generate_synthetic(spec, n, frames, rng).dataset;
          },
          py::arg("n"), py::arg("frames") = 16, py::arg("seed") = 0, py::arg("spec_json") = py::none())
      .def("save", [](const Dataset& d, const std::filesystem::path& p) { save_sequences(p, d); })
      .def("serialize", &serialize_sequences)
      .def_readonly("categories", &Dataset::categories)
      .def_readonly("joints", &Dataset::joints)
      .def("__len__", [](const Dataset& d) { return d.records.size(); })
      .def_property_readonly("ids", [](const Dataset& d) {
        std::vector<std::string> ids;
        for (const auto& r : d.records) ids.push_back(r.id);
        return ids;
      })
      .def_property_readonly("labels", [](const Dataset& d) {
        std::vector<int> l;
        for (const auto& r : d.records) l.push_back(r.action_index);
        return l;
      })
      .def(
          "frames", [](const Dataset& d, std::size_t i) { return sequence_to_array(d.records.at(i).frames); },
          py::arg("index"), "Pixel coordinates of one record, shape (T, J, 2).")
      .def(
          "poses",
          [](const Dataset& d) {
            std::vector<std::vector<Pose>> all;
            for (const auto& r : d.records) all.push_back(r.frames);
            return frames_to_array(all);
          },
          "All records as one (N, T, J, 2) array; records must share T.");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_static("load", &load_checkpoint, py::arg("path"))
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); })
      .def_property_readonly("config", &Checkpoint::config)
      .def_property_readonly("step", [](const Checkpoint& c) { return c.progress.step; })
      .def_property_readonly("epoch", [](const Checkpoint& c) { return c.progress.epoch; })
      .def_property_readonly("parameter_count", [](const Checkpoint& c) { return c.model.parameter_count(); })
      .def_property_readonly("history", [](const Checkpoint& c) {
        py::dict d;
        d["dis"] = c.history.dis;
        d["div"] = c.history.div;
        d["total"] = c.history.total;
        return d;
      })
      .def(
          "sample",
          [](const Checkpoint& c, const Array& seed_pose, int label, int k, int n_steps,
             std::uint64_t seed, bool sample, std::pair<int, int> frame) {
            if (seed_pose.ndim() != 2 || seed_pose.shape(1) != 2) {
              throw std::invalid_argument("seed_pose must have shape (J, 2)");
            }
            const auto j = seed_pose.shape(0);
            Eigen::VectorXd coords = Eigen::Map<const Eigen::VectorXd>(seed_pose.data(), j * 2);
            Rng rng(seed);
            const auto seqs = sample_sequences(
                c.model, Pose(coords, false), FrameSize{frame.first, frame.second},
                ActionLabel::from_index(label, c.config().categories), k,
                n_steps > 0 ? n_steps : c.config().rollout_steps, rng, sample);
            return frames_to_array(seqs);
          },
          py::arg("seed_pose"), py::arg("label"), py::arg("k") = 1, py::arg("n_steps") = 0,
          py::arg("seed") = 0, py::arg("sample") = true,
          py::arg("frame_size") = std::make_pair(kCanonicalFrame, kCanonicalFrame),
          "K rollouts from a pixel seed pose; returns (K, N, J, 2) pixel coordinates.")
      .def(
          "evaluate",
          [](const Checkpoint& c, const Dataset& d, int k, int keep, int n_steps, std::uint64_t seed,
             bool sample) {
            EvalOptions o;
            o.k = k;
            o.n_keep = keep;
            o.n_steps = n_steps > 0 ? n_steps : c.config().rollout_steps;
            o.seed = seed;
            o.sample = sample;
            return report_dict(evaluate(c.model, d, o));
          },
          py::arg("dataset"), py::arg("k") = 100, py::arg("keep") = 10, py::arg("n_steps") = 0,
          py::arg("seed") = 0, py::arg("sample") = true);

  m.def(
      "train",
      [](const Dataset& data, const ModelConfig& config, std::int64_t steps, int epochs,
         std::uint64_t seed, double lr, int batch, double lambda_dis, double lambda_div,
         double clip_norm, const std::optional<std::function<void(py::dict)>>& on_step) {
        TrainHyper h;
        h.max_steps = steps;
        h.epochs = epochs;
        h.seed = seed;
        h.adam.lr = lr;
        h.batch = batch;
        h.lambda_dis = lambda_dis;
        h.lambda_div = lambda_div;
        h.clip_norm = clip_norm;
        StepCallback cb;
        if (on_step) {
          cb = [&](const StepRecord& r) {
            py::dict d;
            d["step"] = r.step;
            d["dis"] = r.dis;
            d["div"] = r.div;
            d["total"] = r.total;
            d["wall_ms"] = r.wall_ms;
            (*on_step)(d);
          };
        }
        return train(data, config, h, cb);
      },
      py::arg("dataset"), py::arg("config"), py::arg("steps") = 0, py::arg("epochs") = 1,
      py::arg("seed") = 0, py::arg("lr") = 1e-4, py::arg("batch") = 24,
      py::arg("lambda_dis") = 200.0, py::arg("lambda_div") = 0.002, py::arg("clip_norm") = 0.0,
      py::arg("on_step") = py::none());

  m.def(
      "resume",
      [](Checkpoint c, const Dataset& data, std::int64_t steps, std::optional<int> epochs) {
        c.hyper.max_steps = steps;
        if (epochs) c.hyper.epochs = *epochs;
        train_continue(c, data);
        return c;
      },
      py::arg("checkpoint"), py::arg("dataset"), py::arg("steps"), py::arg("epochs") = py::none(),
      "Continues training a copy of `checkpoint` until `steps` total steps.");

  m.def(
      "kl_to_standard_normal",
      [](const Eigen::VectorXd& mean, const Eigen::VectorXd& stddev) {
        return kl_to_standard_normal(DiagonalGaussian<double>{mean, stddev});
      },
      py::arg("mean"), py::arg("stddev"));

  m.def(
      "l2_best_of_k",
      [](const Array& samples, const Array& truth, int keep) {
        return l2_best_of_k(samples_from_array(samples), frames_from_array(truth), keep);
      },
      py::arg("samples"), py::arg("truth"), py::arg("keep"));
  m.def(
      "diversity_std", [](const Array& samples) { return diversity_std(samples_from_array(samples)); },
      py::arg("samples"));

  m.def(
      "cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "actvae");
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one CLI command in-process; returns (exit_code, stdout, stderr).");
}

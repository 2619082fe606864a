// Copyright 2026 The pllab Authors
// SPDX-License-Identifier: Apache-2.0

#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pllab/diagnostics/diagnostics.hpp"
#include "pllab/errors.hpp"
#include "pllab/harness/cli.hpp"
#include "pllab/harness/experiments.hpp"
#include "pllab/lm/lora.hpp"
#include "pllab/lm/tokenizer.hpp"
#include "pllab/pooling/pooling.hpp"
#include "pllab/postopt/postopt.hpp"
#include "pllab/trainer/loss.hpp"
#include "pllab/trainer/trainer.hpp"
#include "pllab/video_io/plck.hpp"
#include "pllab/video_io/sampling.hpp"
#include "pllab/video_io/synth.hpp"

namespace py = pybind11;
using namespace pllab;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
  if (a.ndim() == 0) throw DimensionError("expected an array of rank >= 1");
  Shape shape(a.shape(), a.shape() + a.ndim());
  return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array a(shape);
  std::copy(t.values().begin(), t.values().end(), a.mutable_data());
  return a;
}

LoraLinear make_layer(const Array& w0, const Array& a, const Array& b, double alpha) {
  LoraLinear l;
  l.w0 = to_tensor(w0);
  l.a = to_tensor(a);
  l.b = to_tensor(b);
  l.rank = l.a.dim(0);
  l.alpha = alpha;
  l.validate();
  return l;
}

py::dict norm_dict(const NormStats& s) {
  py::dict d;
  d["norms"] = s.norms;
  d["edges"] = s.histogram.edges;
  d["counts"] = s.histogram.counts;
  d["median"] = s.median;
  d["max_over_median"] = s.max_over_median;
  d["dominant_count"] = s.dominant_count;
  d["dominant_indices"] = s.dominant_indices;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pllab, m) {
  m.doc() = "Python bindings for the pllab core library";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<ArgumentError>(m, "ArgumentError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("uniform_sample_indices", &uniform_sample_indices, py::arg("total_frames"), py::arg("n"));

  m.def("pool_bins", [](std::size_t in_len, std::size_t out_len) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (const Bin& b : pool_bins(in_len, out_len)) out.emplace_back(b.start, b.end);
    return out;
  }, py::arg("in_len"), py::arg("out_len"));
  m.def("adaptive_pool", [](const Array& grid, std::size_t t, std::size_t w, std::size_t h) {
    return to_array(adaptive_pool(FeatureGrid(to_tensor(grid)), {t, w, h}).tensor());
  }, py::arg("grid"), py::arg("t_out"), py::arg("w_out"), py::arg("h_out"));
  m.def("vcg_pool", [](const Array& grid) { return to_array(vcg_pool(FeatureGrid(to_tensor(grid)))); });
  m.def("n_frame_flatten", [](const Array& grid) { return to_array(n_frame_flatten(FeatureGrid(to_tensor(grid)))); });
  m.def("downsample_rate", &downsample_rate, py::arg("t_in"), py::arg("t_out"));

  m.def("tokenize", &tokenize);
  m.def("detokenize", [](const TokenSeq& ids) { return py::bytes(detokenize(ids)); });
  m.attr("BOS") = kBos;
  m.attr("EOS") = kEos;
  m.attr("PAD") = kPad;
  m.attr("VID") = kVid;

  m.def("lora_forward", [](const Array& w0, const Array& a, const Array& b, double alpha, const Array& x) {
    return to_array(lora_forward(make_layer(w0, a, b, alpha), to_tensor(x)));
  }, py::arg("w0"), py::arg("a"), py::arg("b"), py::arg("alpha"), py::arg("x"));
  m.def("merge_lora", [](const Array& w0, const Array& a, const Array& b, double alpha) {
    return to_array(merge_lora(make_layer(w0, a, b, alpha), alpha));
  }, py::arg("w0"), py::arg("a"), py::arg("b"), py::arg("alpha"));

  m.def("token_norms", [](const Array& tokens, std::size_t bins, double k) {
    return norm_dict(token_norms(to_tensor(tokens), bins, k));
  }, py::arg("tokens"), py::arg("bins") = kNormBins, py::arg("k") = kDominantK);
  m.def("neighbor_similarity", [](const Array& grid) {
    const SimilarityStats s = neighbor_similarity(FeatureGrid(to_tensor(grid)));
    py::dict d;
    d["mean_spatial"] = s.mean_spatial;
    d["mean_temporal"] = s.mean_temporal;
    d["spatial"] = s.spatial;
    d["temporal"] = s.temporal;
    return d;
  });
  m.def("text_length_stats", [](const std::vector<TokenSeq>& gens) {
    const LengthStats s = text_length_stats(gens);
    py::dict d;
    d["lengths"] = s.lengths;
    d["mean"] = s.mean;
    d["median"] = s.median;
    return d;
  });

  m.def("cross_entropy", [](const Array& logits, const std::vector<int>& targets, const std::vector<bool>& mask) {
    return cross_entropy(to_tensor(logits), targets, mask);
  }, py::arg("logits"), py::arg("targets"), py::arg("mask"));
  m.def("lr_at", [](std::size_t step, std::size_t total_steps, double peak_lr, double warmup_ratio) {
    TrainConfig c;
    c.total_steps = total_steps;
    c.peak_lr = peak_lr;
    c.warmup_ratio = warmup_ratio;
    return lr_at(step, c);
  }, py::arg("step"), py::arg("total_steps"), py::arg("peak_lr") = 2e-4, py::arg("warmup_ratio") = 0.03);

  py::class_<Rng>(m, "Rng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("next", &Rng::next)
      .def("uniform", py::overload_cast<>(&Rng::uniform))
      .def("normal", &Rng::normal);

  m.def("synth_sample", [](std::uint64_t seed, std::size_t grid_px) {
    Rng rng(seed);
    const SynthSample s = gen_synth_sample(rng, grid_px);
    py::dict d;
    d["frames"] = to_array(s.video.frames);
    d["caption"] = s.caption;
    py::list qs;
    for (const auto& q : s.questions) qs.append(py::make_tuple(q.prompt_text(), q.answer()));
    d["questions"] = qs;
    return d;
  }, py::arg("seed"), py::arg("grid_px") = 16);

  m.def("save_tensors", [](const std::string& path, const std::map<std::string, Array>& entries) {
    TensorMap t;
    for (const auto& [k, v] : entries) t.emplace(k, to_tensor(v));
    save_tensors(path, t);
  });
  m.def("load_tensors", [](const std::string& path) {
    std::map<std::string, Array> out;
    for (const auto& [k, v] : load_tensors(path)) out.emplace(k, to_array(v));
    return out;
  });

  m.def("infer", [](const std::string& checkpoint, std::uint64_t synth_seed, const std::string& question, bool ood) {
    const Model model = load_model(checkpoint);
    Rng rng(synth_seed);
    const SynthSample s = gen_synth_sample(rng, model.config.frame_px);
    return infer(model, s.video, question, ood ? PromptStyle::ood : PromptStyle::ind).text;
  }, py::arg("checkpoint"), py::arg("synth_seed"), py::arg("question"), py::arg("ood") = false);

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::vector<const char*> argv{"pllab"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}

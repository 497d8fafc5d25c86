// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include <memory>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "msvsr/flow.hpp"
#include "msvsr/trainer.hpp"

namespace py = pybind11;
using namespace msvsr;
using json = nlohmann::json;

namespace {

using Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
  MSVSR_CHECK(a.ndim() == 3, ShapeMismatch, "expected a (C, H, W) array");
  Image img(static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)));
  std::copy(a.data(), a.data() + a.size(), img.pixels.begin());
  return img;
}

Array from_image(const Image& img) {
  Array out({img.channels, img.height, img.width});
  std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
  return out;
}

FrameSequence to_sequence(const Array& a) {
  MSVSR_CHECK(a.ndim() == 4, ShapeMismatch, "expected an (N, C, H, W) array");
  FrameSequence seq;
  const py::ssize_t plane = a.shape(1) * a.shape(2) * a.shape(3);
  for (py::ssize_t n = 0; n < a.shape(0); ++n) {
    Image img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)), static_cast<int>(a.shape(3)));
    std::copy(a.data() + n * plane, a.data() + (n + 1) * plane, img.pixels.begin());
    seq.frames.push_back(std::move(img));
  }
  return seq;
}

Array from_sequence(const FrameSequence& seq) {
  Array out({static_cast<int>(seq.size()), seq.channels(), seq.height(), seq.width()});
  float* dst = out.mutable_data();
  for (const Image& f : seq.frames) dst = std::copy(f.pixels.begin(), f.pixels.end(), dst);
  return out;
}

Tensor to_tensor(const Array& a) {
  MSVSR_CHECK(a.ndim() == 4, ShapeMismatch, "expected an (N, C, H, W) array");
  Tensor t(Shape{static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2)),
                 static_cast<int>(a.shape(3))});
  std::copy(a.data(), a.data() + a.size(), t.data());
  return t;
}

Array from_tensor(const Tensor& t) {
  const Shape& s = t.shape();
  Array out({s.n, s.c, s.h, s.w});
  std::copy(t.data(), t.data() + t.numel(), out.mutable_data());
  return out;
}

ChannelMode mode_of(const std::string& m) { return parse_channel_mode(m); }

class Model {
 public:
  Model(const std::string& cfg_json, std::uint64_t seed)
      : net_(std::make_unique<MsvsrNet>(json::parse(cfg_json).get<ModelConfig>())) {
    net_->initialize(seed);
  }
  explicit Model(std::unique_ptr<MsvsrNet> net) : net_(std::move(net)) {}

  static Model load(const std::string& path) { return Model(build_model(load_checkpoint(path))); }

  std::string config() const { return json(net_->config()).dump(); }
  std::size_t param_count() const { return net_->params().count(); }

  py::tuple forward(const Array& lr) const {
    ForwardOutput out;
    {
      py::gil_scoped_release release;
      out = msvsr::forward(*net_, to_sequence(lr));
    }
    py::object aux = out.aux_frames ? py::object(from_sequence(*out.aux_frames)) : py::none();
    return py::make_tuple(from_sequence(out.sr_frames), aux);
  }

  const MsvsrNet& net() const { return *net_; }

 private:
  std::shared_ptr<MsvsrNet> net_;
};

py::dict record_dict(const LossRecord& r) {
  py::dict d;
  d["iter"] = r.iter;
  d["lr_main"] = r.lr_main;
  d["lr_flow"] = r.lr_flow;
  d["loss_main"] = r.loss_main;
  d["loss_aux"] = r.loss_aux;
  d["loss_total"] = r.loss_total;
  return d;
}

}  // namespace

PYBIND11_MODULE(_msvsr, m) {
  m.doc() = "Multi-stage video super-resolution core";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      error(fmt::format("{}: {}", to_string(e.kind()), e.what()).c_str());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("named_config", [](const std::string& id) { return json(named_config(id)).dump(); });
  m.def("named_config_ids", &named_config_ids);
  m.def("model_stats", [](const std::string& cfg) {
    const ModelStats s = model_stats(json::parse(cfg).get<ModelConfig>());
    return py::make_tuple(s.param_count, s.per_module);
  });
  m.def("desk_train_config", [] { return json(desk_train_config()).dump(); });
  m.def("full_scale_train_config", [] { return json(full_scale_train_config()).dump(); });
  m.def("lr_at", [](int iter, const std::string& cfg, const std::string& group) {
    MSVSR_CHECK(group == "main" || group == "flow", ConfigError, "group must be 'main' or 'flow'");
    return lr_at(iter, json::parse(cfg).get<TrainConfig>(), group == "main" ? LrGroup::Main : LrGroup::Flow);
  });

  m.def("degrade", [](const Array& hr, int scale, double sigma, int kernel_size) {
    return from_sequence(bd_degrade(to_sequence(hr), DegradationSpec{scale, sigma, kernel_size}));
  }, py::arg("hr"), py::arg("scale") = 4, py::arg("sigma") = 1.6, py::arg("kernel_size") = 13);
  m.def("resize_bicubic", [](const Array& lr, int factor) {
    return from_sequence(resize_bicubic(to_sequence(lr), factor));
  }, py::arg("lr"), py::arg("factor") = 4);

  m.def("psnr", [](const Array& a, const Array& b, const std::string& mode, int crop) {
    return psnr(to_image(a), to_image(b), mode_of(mode), crop);
  }, py::arg("a"), py::arg("b"), py::arg("mode") = "y", py::arg("crop_border") = 0);
  m.def("ssim", [](const Array& a, const Array& b, const std::string& mode, int crop) {
    return ssim(to_image(a), to_image(b), mode_of(mode), crop);
  }, py::arg("a"), py::arg("b"), py::arg("mode") = "y", py::arg("crop_border") = 0);
  m.def("rgb_to_y", [](const Array& a) { return from_image(rgb_to_y(to_image(a))); });

  m.def("warp", [](const Array& src, const Array& flow) {
    NoGradGuard guard;
    return from_tensor(warp(Var(to_tensor(src)), Var(to_tensor(flow))).value());
  });

  py::class_<Dataset>(m, "Dataset")
      .def_static("synthetic", [](int clips, int frames, int hr_size, int motion, std::uint64_t seed) {
        return make_synthetic_dataset(clips, frames, hr_size, motion, seed);
      }, py::arg("clips") = 2, py::arg("frames") = 10,
                  py::arg("hr_size") = 64, py::arg("motion") = 4, py::arg("seed") = 0)
      .def_static("load", [](const std::string& root) { return load_dataset(root); })
      .def("write", [](const Dataset& d, const std::string& root) { write_dataset(d, root); })
      .def("__len__", [](const Dataset& d) { return d.clips.size(); })
      .def("clip", [](const Dataset& d, std::size_t i) {
        MSVSR_CHECK(i < d.clips.size(), InvalidArgument, fmt::format("clip index {} out of range", i));
        const ClipPair& c = d.clips[i];
        return py::make_tuple(c.clip_id, from_sequence(c.hr), from_sequence(c.lr));
      });

  py::class_<Model>(m, "Model")
      .def(py::init<const std::string&, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
      .def_static("load", &Model::load)
      .def_property_readonly("config", &Model::config)
      .def_property_readonly("param_count", &Model::param_count)
      .def("forward", &Model::forward);

  m.def("train", [](const std::string& model_cfg, const std::string& train_cfg, const Dataset& data,
                    std::optional<std::string> out_dir) {
    TrainOptions opts;
    if (out_dir) opts.out_dir = *out_dir;
    TrainResult r;
    {
      py::gil_scoped_release release;
      r = train(json::parse(model_cfg).get<ModelConfig>(), json::parse(train_cfg).get<TrainConfig>(), data, opts);
    }
    py::list history;
    for (const LossRecord& rec : r.history) history.append(record_dict(rec));
    return py::make_tuple(history, Model(build_model(r.checkpoint)));
  }, py::arg("model_config"), py::arg("train_config"), py::arg("data"), py::arg("out_dir") = py::none());

  m.def("evaluate", [](const Model& model, const Dataset& data, const std::string& mode, int crop) {
    return evaluate(model.net(), data, mode_of(mode), crop).to_json().dump();
  }, py::arg("model"), py::arg("data"), py::arg("mode") = "y", py::arg("crop_border") = 0);
}

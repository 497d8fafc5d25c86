// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/model.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "msvsr/ops.hpp"

MSVSR_NAMESPACE_BEGIN

void ModelConfig::validate() const {
  MSVSR_CHECK(scale == 4, ConfigError, fmt::format("scale must be 4, got {}", scale));
  MSVSR_CHECK(channels >= 1 && n_extract_blocks >= 1 && n_fusion_blocks >= 1 &&
                  n_blocks_per_branch >= 1 && n_recon_blocks >= 1,
              ConfigError, "channel and block counts must be >= 1");
  MSVSR_CHECK(n_propagation_branches >= 2 && n_propagation_branches % 2 == 0, ConfigError,
              fmt::format("n_propagation_branches must be even and >= 2, got {}", n_propagation_branches));
  MSVSR_CHECK(deform_kernel_size >= 1 && deform_kernel_size % 2 == 1, ConfigError,
              "deform_kernel_size must be odd");
  const int g = resolved_deformable_groups();
  MSVSR_CHECK(g >= 1 && channels % g == 0, ConfigError,
              fmt::format("deformable groups {} do not divide {} channels", g, channels));
  try {
    flow.validate();
  } catch (const Error& e) {
    raise(ErrorKind::ConfigError, e.what());
  }
}

int ModelConfig::resolved_deformable_groups() const {
  return deformable_groups > 0 ? deformable_groups : default_deformable_groups(channels);
}

int ModelConfig::aux_channels() const { return std::max(4, channels / 4); }

ModelConfig named_config(const std::string& id) {
  ModelConfig c;
  c.name = id;
  if (id == "tiny") return c;
  if (id == "pp-msvsr") {
    c.channels = 32;
    c.n_extract_blocks = 2;
    c.n_fusion_blocks = 2;
    c.n_propagation_branches = 4;
    c.n_blocks_per_branch = 2;
    c.n_recon_blocks = 3;
    c.flow = {5, 8, 7};
    return c;
  }
  if (id == "pp-msvsr-l") {
    c.channels = 64;
    c.n_extract_blocks = 5;
    c.n_fusion_blocks = 5;
    c.n_propagation_branches = 4;
    c.n_blocks_per_branch = 7;
    c.n_recon_blocks = 5;
    c.flow = {5, 16, 7};
    return c;
  }
  raise(ErrorKind::ConfigError, "unknown model '" + id + "' (expected tiny, pp-msvsr or pp-msvsr-l)");
}

std::vector<std::string> named_config_ids() { return {"tiny", "pp-msvsr", "pp-msvsr-l"}; }

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"name", c.name},
                     {"channels", c.channels},
                     {"n_extract_blocks", c.n_extract_blocks},
                     {"n_fusion_blocks", c.n_fusion_blocks},
                     {"n_propagation_branches", c.n_propagation_branches},
                     {"n_blocks_per_branch", c.n_blocks_per_branch},
                     {"n_recon_blocks", c.n_recon_blocks},
                     {"scale", c.scale},
                     {"deformable_groups", c.deformable_groups},
                     {"deform_kernel_size", c.deform_kernel_size},
                     {"use_lfm", c.use_lfm},
                     {"use_ram", c.use_ram},
                     {"use_aux_loss", c.use_aux_loss},
                     {"flow_levels", c.flow.n_levels},
                     {"flow_base_channels", c.flow.base_channels},
                     {"flow_kernel_size", c.flow.kernel_size}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  c = ModelConfig{};
  c.name = j.value("name", c.name);
  c.channels = j.value("channels", c.channels);
  c.n_extract_blocks = j.value("n_extract_blocks", c.n_extract_blocks);
  c.n_fusion_blocks = j.value("n_fusion_blocks", c.n_fusion_blocks);
  c.n_propagation_branches = j.value("n_propagation_branches", c.n_propagation_branches);
  c.n_blocks_per_branch = j.value("n_blocks_per_branch", c.n_blocks_per_branch);
  c.n_recon_blocks = j.value("n_recon_blocks", c.n_recon_blocks);
  c.scale = j.value("scale", c.scale);
  c.deformable_groups = j.value("deformable_groups", c.deformable_groups);
  c.deform_kernel_size = j.value("deform_kernel_size", c.deform_kernel_size);
  c.use_lfm = j.value("use_lfm", c.use_lfm);
  c.use_ram = j.value("use_ram", c.use_ram);
  c.use_aux_loss = j.value("use_aux_loss", c.use_aux_loss);
  c.flow.n_levels = j.value("flow_levels", c.flow.n_levels);
  c.flow.base_channels = j.value("flow_base_channels", c.flow.base_channels);
  c.flow.kernel_size = j.value("flow_kernel_size", c.flow.kernel_size);
}

MsvsrNet::MsvsrNet(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const int c = cfg_.channels;
  const int g = cfg_.resolved_deformable_groups();
  const int k = cfg_.deform_kernel_size;
  flow_ = FlowNet(store_, "flow", cfg_.flow);
  extract_ = ResidualStack(store_, "extract", 3, c, cfg_.n_extract_blocks);
  if (cfg_.use_lfm) {
    lfm_align_ = FlowGuidedAlign(store_, "lfm.align", c, g, k);
    lfm_fuse_ = ResidualStack(store_, "lfm.fuse", 3 * c, c, cfg_.n_fusion_blocks);
  }
  for (int b = 0; b < cfg_.n_propagation_branches; ++b) {
    Branch br;
    br.backward = b % 2 == 0;
    const std::string name = fmt::format("propagation.{}{}", br.backward ? "backward" : "forward", b);
    br.align = FlowGuidedAlign(store_, name + ".align", c, g, k);
    br.backbone = ResidualStack(store_, name + ".backbone", 2 * c, c, cfg_.n_blocks_per_branch);
    branches_.push_back(std::move(br));
  }
  if (cfg_.use_aux_loss) {
    aux_expand_ = Conv2d(store_, "aux.expand", c, 16 * cfg_.aux_channels(), 3);
    aux_project_ = Conv2d(store_, "aux.project", cfg_.aux_channels(), 3, 3);
  }
  if (cfg_.use_ram) ram_ = ReAlign(store_, "ram", c, g, k);
  stage3_fuse_ = ResidualStack(store_, "stage3.fuse", 3 * c, c, cfg_.n_fusion_blocks);
  for (int b = 0; b < cfg_.n_recon_blocks; ++b)
    recon_blocks_.emplace_back(store_, fmt::format("recon.blocks.{}", b), c);
  up1_ = Conv2d(store_, "recon.up1", c, 4 * c, 3);
  up2_ = Conv2d(store_, "recon.up2", c, 4 * c, 3);
  conv_hr_ = Conv2d(store_, "recon.conv_hr", c, c, 3);
  conv_last_ = Conv2d(store_, "recon.conv_last", c, 3, 3);
}

namespace {

// Runs `fn` once on the time-major concatenation of `xs` and splits the result
// back per time step.
template <typename Fn>
std::vector<Var> over_time(const std::vector<Var>& xs, Fn fn) {
  if (xs.empty()) return {};
  const int b = xs.front().shape().n;
  const Var y = fn(xs.size() == 1 ? xs.front() : concat_batch(xs));
  std::vector<Var> out;
  if (xs.size() == 1) {
    out.push_back(y);
    return out;
  }
  for (std::size_t t = 0; t < xs.size(); ++t)
    out.push_back(slice_batch(y, static_cast<int>(t) * b, static_cast<int>(t + 1) * b));
  return out;
}

Var cat(const std::vector<Var>& xs) { return xs.size() == 1 ? xs.front() : concat_batch(xs); }

std::vector<Var> split(const Var& y, int parts) {
  if (parts == 1) return {y};
  const int b = y.shape().n / parts;
  std::vector<Var> out;
  for (int i = 0; i < parts; ++i) out.push_back(slice_batch(y, i * b, (i + 1) * b));
  return out;
}

AlignmentParams cat_params(const std::vector<AlignmentParams>& ps) {
  std::vector<Var> o, m;
  for (const AlignmentParams& p : ps) {
    o.push_back(p.offsets);
    m.push_back(p.masks);
  }
  return {cat(o), cat(m)};
}

}  // namespace

std::vector<Var> MsvsrNet::extract_features(const std::vector<Var>& lr) const {
  MSVSR_CHECK(!lr.empty(), EmptyDataset, "extract_features: empty sequence");
  return over_time(lr, [&](const Var& x) { return extract_(x); });
}

ClipFlows MsvsrNet::compute_flows(const std::vector<Var>& lr) const {
  const int n = static_cast<int>(lr.size());
  ClipFlows flows;
  flows.to_next.resize(n);
  flows.to_prev.resize(n);
  if (n < 2) return flows;
  // Both directions of every adjacent pair in one call.
  std::vector<Var> refs, sups;
  for (int t = 0; t + 1 < n; ++t) {
    refs.push_back(lr[t]);
    sups.push_back(lr[t + 1]);
  }
  for (int t = 1; t < n; ++t) {
    refs.push_back(lr[t]);
    sups.push_back(lr[t - 1]);
  }
  const std::vector<Var> all = split(flow_(cat(refs), cat(sups)), 2 * (n - 1));
  for (int t = 0; t + 1 < n; ++t) flows.to_next[t] = all[t];
  for (int t = 1; t < n; ++t) flows.to_prev[t] = all[n - 1 + t - 1];
  return flows;
}

Var MsvsrNet::local_fusion(const Var& g_prev, const Var& g_cur, const Var& g_next,
                           const FlowField& flow_to_prev, const FlowField& flow_to_next) const {
  MSVSR_CHECK(cfg_.use_lfm, InvalidState, "local_fusion: LFM disabled in this config");
  const int b = g_cur.shape().n;
  const AlignResult aligned = lfm_align_(concat_batch({g_prev, g_next}), concat_batch({g_cur, g_cur}),
                                         concat_batch({flow_to_prev, flow_to_next}));
  return lfm_fuse_(concat_channels(
      {slice_batch(aligned.aligned, 0, b), g_cur, slice_batch(aligned.aligned, b, 2 * b)}));
}

std::vector<Var> MsvsrNet::local_fusion(const std::vector<Var>& g, const ClipFlows& flows) const {
  if (!cfg_.use_lfm) return g;
  const int n = static_cast<int>(g.size());
  MSVSR_CHECK(static_cast<int>(flows.to_next.size()) == n && static_cast<int>(flows.to_prev.size()) == n,
              ShapeMismatch, "local_fusion: flow count does not match clip length");
  const Shape s = g.front().shape();
  const Var zero_flow = zeros(Shape{s.n, 2, s.h, s.w});
  std::vector<Var> prev, next, fprev, fnext;
  for (int t = 0; t < n; ++t) {
    // A missing neighbor is replaced by the one that exists.
    const bool has_prev = t > 0;
    const bool has_next = t + 1 < n;
    if (!has_prev && !has_next) {
      prev.push_back(g[t]);
      fprev.push_back(zero_flow);
    } else if (has_prev) {
      prev.push_back(g[t - 1]);
      fprev.push_back(flows.to_prev[t]);
    } else {
      prev.push_back(g[t + 1]);
      fprev.push_back(flows.to_next[t]);
    }
    if (has_next) {
      next.push_back(g[t + 1]);
      fnext.push_back(flows.to_next[t]);
    } else {
      next.push_back(prev.back());
      fnext.push_back(fprev.back());
    }
  }
  return split(local_fusion(cat(prev), cat(g), cat(next), cat(fprev), cat(fnext)), n);
}

Propagation MsvsrNet::propagate(const std::vector<Var>& fused, const ClipFlows& flows) const {
  const int n = static_cast<int>(fused.size());
  MSVSR_CHECK(n >= 1, EmptyDataset, "propagate: empty sequence");
  MSVSR_CHECK(static_cast<int>(flows.to_next.size()) == n && static_cast<int>(flows.to_prev.size()) == n,
              ShapeMismatch, "propagate: flow count does not match clip length");
  const int last_backward = cfg_.n_propagation_branches - 2;
  const int last_forward = cfg_.n_propagation_branches - 1;
  Propagation out;
  out.from_next.resize(n);
  out.from_prev.resize(n);
  std::vector<Var> x = fused;
  for (int b = 0; b < cfg_.n_propagation_branches; ++b) {
    const Branch& br = branches_[b];
    std::vector<Var> y(n);
    Var carried;
    for (int i = 0; i < n; ++i) {
      const int t = br.backward ? n - 1 - i : i;
      Var aligned;
      if (i == 0) {
        aligned = zeros(x[t].shape());
      } else {
        const FlowField& flow = br.backward ? flows.to_next[t] : flows.to_prev[t];
        AlignResult r = br.align(carried, x[t], flow);
        aligned = r.aligned;
        if (b == last_backward) out.from_next[t] = r.params;
        if (b == last_forward) out.from_prev[t] = r.params;
      }
      carried = aligned + br.backbone(concat_channels({x[t], aligned}));
      y[t] = carried;
    }
    x = std::move(y);
  }
  out.features = std::move(x);
  return out;
}

Var MsvsrNet::aux_head(const Var& f2, const Var& lr_frame) const {
  MSVSR_CHECK(cfg_.use_aux_loss, InvalidState, "aux_head: auxiliary head disabled in this config");
  const Shape& s = f2.shape();
  MSVSR_CHECK(lr_frame.shape() == (Shape{s.n, 3, s.h, s.w}), ShapeMismatch,
              "aux_head: feature " + s.str() + " vs frame " + lr_frame.shape().str());
  // same bilinear base as the main output
  return aux_project_(leaky_relu(pixel_shuffle(aux_expand_(f2), 4))) + upsample_bilinear(lr_frame, 4);
}

const MsvsrNet::Branch& MsvsrNet::last_branch(bool backward) const {
  return branches_[cfg_.n_propagation_branches - (backward ? 2 : 1)];
}

std::vector<Var> MsvsrNet::stage3_fuse(const Propagation& stage2, const ClipFlows& flows) const {
  const std::vector<Var>& f2 = stage2.features;
  const int n = static_cast<int>(f2.size());
  MSVSR_CHECK(static_cast<int>(stage2.from_next.size()) == n && static_cast<int>(stage2.from_prev.size()) == n,
              ShapeMismatch, "stage3_fuse: alignment parameter count does not match clip length");
  std::vector<Var> from_next(n), from_prev(n);
  if (n > 1) {
    // Neighbor t+1 onto t for t < n-1, then neighbor t-1 onto t for t > 0.
    std::vector<Var> cur, nbr, flow;
    std::vector<AlignmentParams> params;
    for (int t = 0; t + 1 < n; ++t) {
      cur.push_back(f2[t]);
      nbr.push_back(f2[t + 1]);
      flow.push_back(flows.to_next[t]);
      params.push_back(*stage2.from_next[t]);
    }
    for (int t = 1; t < n; ++t) {
      cur.push_back(f2[t]);
      nbr.push_back(f2[t - 1]);
      flow.push_back(flows.to_prev[t]);
      params.push_back(*stage2.from_prev[t]);
    }
    std::vector<Var> aligned;
    if (cfg_.use_ram) {
      aligned = split(ram_(cat(cur), cat(nbr), cat_params(params)).aligned, 2 * (n - 1));
    } else {
      const std::vector<Var> c(cur.begin(), cur.begin() + (n - 1)), c2(cur.begin() + (n - 1), cur.end());
      const std::vector<Var> m(nbr.begin(), nbr.begin() + (n - 1)), m2(nbr.begin() + (n - 1), nbr.end());
      const std::vector<Var> f(flow.begin(), flow.begin() + (n - 1)), f2b(flow.begin() + (n - 1), flow.end());
      aligned = split(last_branch(true).align(cat(m), cat(c), cat(f)).aligned, n - 1);
      const std::vector<Var> back = split(last_branch(false).align(cat(m2), cat(c2), cat(f2b)).aligned, n - 1);
      aligned.insert(aligned.end(), back.begin(), back.end());
    }
    for (int t = 0; t + 1 < n; ++t) from_next[t] = aligned[t];
    for (int t = 1; t < n; ++t) from_prev[t] = aligned[n - 1 + t - 1];
  }
  std::vector<Var> prev(n), next(n);
  for (int t = 0; t < n; ++t) {
    if (n == 1) {
      prev[t] = next[t] = f2[t];
      continue;
    }
    next[t] = from_next[t].defined() ? from_next[t] : from_prev[t];
    prev[t] = from_prev[t].defined() ? from_prev[t] : from_next[t];
  }
  const Var f = cat(f2);
  return split(f + stage3_fuse_(concat_channels({cat(prev), f, cat(next)})), n);
}

Var MsvsrNet::reconstruct_upsample(const Var& f_aligned, const Var& lr_frame) const {
  const Shape& s = f_aligned.shape();
  MSVSR_CHECK(lr_frame.shape() == (Shape{s.n, 3, s.h, s.w}), ShapeMismatch,
              "reconstruct_upsample: feature " + s.str() + " vs frame " + lr_frame.shape().str());
  Var h = f_aligned;
  for (const ResidualBlock& blk : recon_blocks_) h = blk(h);
  h = leaky_relu(pixel_shuffle(up1_(h), 2));
  h = leaky_relu(pixel_shuffle(up2_(h), 2));
  h = conv_last_(leaky_relu(conv_hr_(h)));
  return h + upsample_bilinear(lr_frame, 4);
}

NetOutput MsvsrNet::forward(const std::vector<Var>& lr) const {
  MSVSR_CHECK(!lr.empty(), EmptyDataset, "forward: empty sequence");
  const Shape s = lr.front().shape();
  for (const Var& x : lr)
    MSVSR_CHECK(x.shape() == s && s.c == 3, ShapeMismatch, "forward: frames must be (B, 3, H, W) and equal");
  const int n = static_cast<int>(lr.size());
  const ClipFlows flows = compute_flows(lr);
  const std::vector<Var> g = extract_features(lr);
  const std::vector<Var> fused = local_fusion(g, flows);
  NetOutput out;
  out.stage2 = propagate(fused, flows);
  if (cfg_.use_aux_loss) out.aux = split(aux_head(cat(out.stage2.features), cat(lr)), n);
  const std::vector<Var> aligned = stage3_fuse(out.stage2, flows);
  out.sr = split(reconstruct_upsample(cat(aligned), cat(lr)), n);
  return out;
}

Tensor image_to_tensor(const Image& image) { return stack_images({&image}); }

Tensor stack_images(const std::vector<const Image*>& images) {
  MSVSR_CHECK(!images.empty(), EmptyDataset, "stack_images: no images");
  const Image& f = *images.front();
  Tensor t(Shape{static_cast<int>(images.size()), f.channels, f.height, f.width});
  Real* dst = t.data();
  for (const Image* img : images) {
    MSVSR_CHECK(img->same_shape(f), ShapeMismatch, "stack_images: images differ in shape");
    for (float v : img->pixels) *dst++ = static_cast<Real>(v);
  }
  return t;
}

Image tensor_to_image(const Tensor& t, int n, bool clamp01) {
  const Shape& s = t.shape();
  MSVSR_CHECK(n >= 0 && n < s.n, InvalidArgument, "tensor_to_image: batch index out of range");
  Image img(s.c, s.h, s.w);
  const Real* src = t.plane(n, 0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const Real v = src[i];
    img.pixels[i] = static_cast<float>(clamp01 ? std::clamp<Real>(v, 0, 1) : v);
  }
  return img;
}

ForwardOutput forward(const MsvsrNet& net, const FrameSequence& lr) {
  lr.validate();
  NoGradGuard no_grad;
  std::vector<Var> frames;
  for (const Image& f : lr.frames) frames.emplace_back(image_to_tensor(f));
  const NetOutput out = net.forward(frames);
  ForwardOutput fo;
  fo.sr_frames.clip_id = lr.clip_id;
  fo.sr_frames.frame_rate = lr.frame_rate;
  for (const Var& v : out.sr) fo.sr_frames.frames.push_back(tensor_to_image(v.value()));
  if (!out.aux.empty()) {
    FrameSequence aux;
    aux.clip_id = lr.clip_id;
    aux.frame_rate = lr.frame_rate;
    for (const Var& v : out.aux) aux.frames.push_back(tensor_to_image(v.value()));
    fo.aux_frames = std::move(aux);
  }
  fo.stage2_from_next = out.stage2.from_next;
  fo.stage2_from_prev = out.stage2.from_prev;
  return fo;
}

ModelStats model_stats(const ModelConfig& cfg) {
  const MsvsrNet net(cfg);
  return {net.params().count(), net.params().count_by_module()};
}

MSVSR_NAMESPACE_END

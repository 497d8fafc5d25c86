// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include "msvsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "msvsr/ops.hpp"

MSVSR_NAMESPACE_BEGIN

namespace fs = std::filesystem;

void TrainConfig::validate() const {
  MSVSR_CHECK(total_iters >= 0, ConfigError, "total_iters must be >= 0");
  MSVSR_CHECK(flow_freeze_iters >= 0 && flow_freeze_iters <= total_iters, ConfigError,
              fmt::format("flow_freeze_iters {} outside [0, {}]", flow_freeze_iters, total_iters));
  MSVSR_CHECK(lr_main_init > 0 && lr_flow_init > 0 && lr_final > 0, ConfigError,
              "learning rates must be > 0");
  MSVSR_CHECK(lr_final <= lr_main_init, ConfigError, "lr_final must not exceed lr_main_init");
  MSVSR_CHECK(batch_size >= 1 && patch_size >= 1 && n_frames >= 1, ConfigError,
              "batch_size, patch_size and n_frames must be >= 1");
  MSVSR_CHECK(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1 && adam_eps > 0,
              ConfigError, "invalid Adam hyperparameters");
  loss.validate();
}

TrainConfig full_scale_train_config() {
  TrainConfig c;
  c.total_iters = 300000;
  c.flow_freeze_iters = 2500;
  c.batch_size = 16;
  c.patch_size = 64;
  c.n_frames = 5;
  return c;
}

TrainConfig desk_train_config() { return TrainConfig{}; }

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"total_iters", c.total_iters},
                     {"lr_main_init", c.lr_main_init},
                     {"lr_flow_init", c.lr_flow_init},
                     {"lr_final", c.lr_final},
                     {"flow_freeze_iters", c.flow_freeze_iters},
                     {"batch_size", c.batch_size},
                     {"patch_size", c.patch_size},
                     {"n_frames", c.n_frames},
                     {"adam_beta1", c.adam_beta1},
                     {"adam_beta2", c.adam_beta2},
                     {"adam_eps", c.adam_eps},
                     {"grad_clip", c.grad_clip},
                     {"seed", c.seed},
                     {"loss", c.loss}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.total_iters = j.value("total_iters", c.total_iters);
  c.lr_main_init = j.value("lr_main_init", c.lr_main_init);
  c.lr_flow_init = j.value("lr_flow_init", c.lr_flow_init);
  c.lr_final = j.value("lr_final", c.lr_final);
  c.flow_freeze_iters = j.value("flow_freeze_iters", c.flow_freeze_iters);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.patch_size = j.value("patch_size", c.patch_size);
  c.n_frames = j.value("n_frames", c.n_frames);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_eps = j.value("adam_eps", c.adam_eps);
  c.grad_clip = j.value("grad_clip", c.grad_clip);
  c.seed = j.value("seed", c.seed);
  if (j.contains("loss")) c.loss = j.at("loss").get<LossConfig>();
}

double lr_at(int iter, const TrainConfig& cfg, LrGroup group) {
  MSVSR_CHECK(iter >= 0 && iter <= cfg.total_iters, InvalidArgument,
              fmt::format("lr_at: iteration {} outside [0, {}]", iter, cfg.total_iters));
  if (group == LrGroup::Flow && iter < cfg.flow_freeze_iters) return 0.0;
  const double init = group == LrGroup::Main ? cfg.lr_main_init : cfg.lr_flow_init;
  if (cfg.total_iters == 0) return init;
  if (iter == 0) return init;
  if (iter == cfg.total_iters) return cfg.lr_final;
  const double c = std::cos(std::numbers::pi * iter / cfg.total_iters);
  return cfg.lr_final + (init - cfg.lr_final) * (1.0 + c) / 2.0;
}

std::vector<NamedTensor> snapshot_weights(const MsvsrNet& net) {
  std::vector<NamedTensor> out;
  for (const Parameter& p : net.params().params()) out.push_back({p.name, p.var.value()});
  return out;
}

namespace {

void load_weights(MsvsrNet& net, const std::vector<NamedTensor>& weights) {
  std::map<std::string, const Tensor*> by_name;
  for (const NamedTensor& w : weights) by_name[w.name] = &w.value;
  MSVSR_CHECK(by_name.size() == net.params().params().size(), ShapeMismatch,
              fmt::format("checkpoint has {} weight arrays, model expects {}", by_name.size(),
                          net.params().params().size()));
  for (Parameter& p : net.params().params()) {
    auto it = by_name.find(p.name);
    MSVSR_CHECK(it != by_name.end(), ShapeMismatch, "checkpoint lacks weight '" + p.name + "'");
    MSVSR_CHECK(it->second->shape() == p.var.shape(), ShapeMismatch,
                "checkpoint weight '" + p.name + "' has shape " + it->second->shape().str() + ", model expects " +
                    p.var.shape().str());
    p.var.mutable_value() = *it->second;
  }
}

AdamState fresh_adam(const MsvsrNet& net) {
  AdamState s;
  for (const Parameter& p : net.params().params()) {
    s.m.emplace(p.name, Tensor(p.var.shape()));
    s.v.emplace(p.name, Tensor(p.var.shape()));
  }
  return s;
}

// The data stream is decorrelated from the initialization stream.
constexpr std::uint64_t kDataStream = 0x9E3779B97F4A7C15ULL;

}  // namespace

std::unique_ptr<MsvsrNet> build_model(const Checkpoint& ckpt) {
  auto net = std::make_unique<MsvsrNet>(ckpt.model_cfg);
  load_weights(*net, ckpt.weights);
  return net;
}

Trainer::Trainer(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const Dataset& data)
    : model_cfg_(model_cfg), train_cfg_(train_cfg), data_(data), rng_(train_cfg.seed ^ kDataStream) {
  train_cfg_.validate();
  train_cfg_.loss.aux_enabled = train_cfg_.loss.aux_enabled && model_cfg_.use_aux_loss;
  net_ = std::make_unique<MsvsrNet>(model_cfg_);
  net_->initialize(train_cfg_.seed);
  adam_ = fresh_adam(*net_);
  check_data();
}

Trainer::Trainer(const Checkpoint& ckpt, const Dataset& data)
    : model_cfg_(ckpt.model_cfg), train_cfg_(ckpt.train_cfg), data_(data) {
  train_cfg_.validate();
  net_ = build_model(ckpt);
  adam_ = fresh_adam(*net_);
  for (auto& [name, t] : adam_.m) {
    auto m = ckpt.adam.m.find(name);
    auto v = ckpt.adam.v.find(name);
    MSVSR_CHECK(m != ckpt.adam.m.end() && v != ckpt.adam.v.end(), ShapeMismatch,
                "checkpoint lacks optimizer state for '" + name + "'");
    t = m->second;
    adam_.v[name] = v->second;
  }
  adam_.steps_main = ckpt.adam.steps_main;
  adam_.steps_flow = ckpt.adam.steps_flow;
  rng_.set_state(ckpt.rng_state);
  iteration_ = ckpt.iteration;
  check_data();
}

void Trainer::check_data() const {
  MSVSR_CHECK(!data_.clips.empty(), EmptyDataset, "training dataset has no clips");
  for (const ClipPair& c : data_.clips) {
    MSVSR_CHECK(c.lr.size() >= static_cast<std::size_t>(train_cfg_.n_frames), ShapeMismatch,
                fmt::format("clip '{}' has {} frames, training needs {}", c.clip_id, c.lr.size(),
                            train_cfg_.n_frames));
    MSVSR_CHECK(c.lr.height() >= train_cfg_.patch_size && c.lr.width() >= train_cfg_.patch_size, ShapeMismatch,
                fmt::format("clip '{}' LR frames are {}x{}, smaller than patch {}", c.clip_id, c.lr.height(),
                            c.lr.width(), train_cfg_.patch_size));
  }
}

LossRecord Trainer::step() {
  MSVSR_CHECK(!done(), InvalidState, "training already reached total_iters");
  const int t = iteration_;
  const TrainConfig& tc = train_cfg_;
  LossRecord rec;
  rec.iter = t;
  rec.lr_main = lr_at(t, tc, LrGroup::Main);
  rec.lr_flow = lr_at(t, tc, LrGroup::Flow);
  const bool flow_frozen = t < tc.flow_freeze_iters;

  std::vector<TrainingSample> samples;
  for (int b = 0; b < tc.batch_size; ++b) {
    const ClipPair& clip = data_.clips[rng_.below(data_.clips.size())];
    const std::uint64_t seed = rng_.next();
    samples.push_back(sample_patch(clip.hr, clip.lr, tc.patch_size, tc.n_frames, seed));
  }
  std::vector<Var> lr, gt;
  for (int f = 0; f < tc.n_frames; ++f) {
    std::vector<const Image*> l, h;
    for (const TrainingSample& s : samples) {
      l.push_back(&s.lr.frames[f]);
      h.push_back(&s.hr.frames[f]);
    }
    lr.emplace_back(stack_images(l));
    gt.emplace_back(stack_images(h));
  }

  ParamStore& store = net_->params();
  store.zero_grad();
  const LossTerms terms = total_loss(net_->forward(lr), gt, tc.loss);
  rec.loss_main = terms.main;
  rec.loss_aux = terms.aux;
  rec.loss_total = terms.total.value().item();
  MSVSR_CHECK(std::isfinite(rec.loss_total), NumericalDivergence,
              fmt::format("non-finite loss at iteration {}", t));
  terms.total.backward();

  auto active = [&](const Parameter& p) { return !(flow_frozen && p.group == ParamGroup::Flow); };
  double sq = 0;
  for (const Parameter& p : store.params()) {
    if (!active(p) || !p.var.has_grad()) continue;
    const Tensor g = p.var.grad();
    for (Real v : g.values()) sq += static_cast<double>(v) * v;
  }
  MSVSR_CHECK(std::isfinite(sq), NumericalDivergence, fmt::format("non-finite gradient at iteration {}", t));
  const double norm = std::sqrt(sq);
  const double clip = tc.grad_clip > 0 && norm > tc.grad_clip ? tc.grad_clip / (norm + 1e-6) : 1.0;

  ++adam_.steps_main;
  if (!flow_frozen) ++adam_.steps_flow;
  const double b1 = tc.adam_beta1;
  const double b2 = tc.adam_beta2;
  for (Parameter& p : store.params()) {
    if (!active(p)) continue;
    const bool flow = p.group == ParamGroup::Flow;
    const double steps = static_cast<double>(flow ? adam_.steps_flow : adam_.steps_main);
    const double lr = flow ? rec.lr_flow : rec.lr_main;
    const double c1 = 1.0 - std::pow(b1, steps);
    const double c2 = 1.0 - std::pow(b2, steps);
    const Tensor g = p.var.grad();
    Tensor& w = p.var.mutable_value();
    Tensor& m = adam_.m.at(p.name);
    Tensor& v = adam_.v.at(p.name);
    for (std::size_t i = 0; i < w.numel(); ++i) {
      const double gi = clip * g.data()[i];
      const double mi = b1 * m.data()[i] + (1 - b1) * gi;
      const double vi = b2 * v.data()[i] + (1 - b2) * gi * gi;
      m.data()[i] = static_cast<Real>(mi);
      v.data()[i] = static_cast<Real>(vi);
      w.data()[i] = static_cast<Real>(w.data()[i] - lr * (mi / c1) / (std::sqrt(vi / c2) + tc.adam_eps));
    }
  }
  store.zero_grad();
  ++iteration_;
  history_.push_back(rec);
  return rec;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.iteration = iteration_;
  c.model_cfg = model_cfg_;
  c.train_cfg = train_cfg_;
  c.weights = snapshot_weights(*net_);
  c.adam = adam_;
  c.rng_state = rng_.state();
  return c;
}

std::string loss_csv_header() { return "iter,lr_main,lr_flow,loss_main,loss_aux,loss_total"; }

std::string loss_csv_row(const LossRecord& r) {
  return fmt::format("{},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}", r.iter, r.lr_main, r.lr_flow, r.loss_main,
                     r.loss_aux, r.loss_total);
}

void write_loss_csv(const std::vector<LossRecord>& history, const fs::path& path) {
  std::ofstream out(path);
  MSVSR_CHECK(out.good(), IOError, "cannot write " + path.string());
  out << loss_csv_header() << '\n';
  for (const LossRecord& r : history) out << loss_csv_row(r) << '\n';
}

TrainResult train(const ModelConfig& model_cfg, const TrainConfig& train_cfg, const Dataset& data,
                  const TrainOptions& options) {
  Trainer trainer = options.resume ? Trainer(*options.resume, data) : Trainer(model_cfg, train_cfg, data);
  std::ofstream csv;
  if (options.out_dir) {
    std::error_code ec;
    fs::create_directories(*options.out_dir, ec);
    MSVSR_CHECK(!ec, IOError, "cannot create " + options.out_dir->string());
    const fs::path csv_path = *options.out_dir / "loss.csv";
    const bool append = options.resume && fs::exists(csv_path);
    csv.open(csv_path, append ? std::ios::app : std::ios::trunc);
    MSVSR_CHECK(csv.good(), IOError, "cannot write " + csv_path.string());
    if (!append) csv << loss_csv_header() << '\n';
  }
  while (!trainer.done()) {
    const LossRecord rec = trainer.step();
    if (csv.is_open()) csv << loss_csv_row(rec) << '\n' << std::flush;
    if (options.on_step) options.on_step(rec);
    if (options.out_dir && options.checkpoint_every > 0 && trainer.iteration() % options.checkpoint_every == 0 &&
        !trainer.done())
      save_checkpoint(trainer.checkpoint(),
                      *options.out_dir / fmt::format("checkpoint_{:08d}.ckpt", trainer.iteration()));
  }
  TrainResult result{trainer.checkpoint(), trainer.history()};
  if (options.out_dir) save_checkpoint(result.checkpoint, *options.out_dir / "final.ckpt");
  return result;
}

MetricReport evaluate(const MsvsrNet& net, const Dataset& data, ChannelMode mode, int crop_border) {
  MSVSR_CHECK(!data.clips.empty(), EmptyDataset, "evaluation dataset has no clips");
  MetricReport report;
  report.channel_mode = mode;
  for (const ClipPair& clip : data.clips) {
    MSVSR_CHECK(!clip.hr.frames.empty(), InvalidDataset, "clip '" + clip.clip_id + "' has no HR reference");
    const ForwardOutput out = forward(net, clip.lr);
    report.clips.push_back(measure_clip(out.sr_frames, clip.hr, mode, crop_border));
    report.baseline.push_back(measure_clip(resize_bicubic(clip.lr, 4), clip.hr, mode, crop_border));
  }
  report.mean = mean_metrics(report.clips);
  report.baseline_mean = mean_metrics(report.baseline);
  return report;
}

MetricReport evaluate(const Checkpoint& ckpt, const Dataset& data, ChannelMode mode, int crop_border) {
  return evaluate(*build_model(ckpt), data, mode, crop_border);
}

double dataset_loss(const MsvsrNet& net, const Dataset& data, double eps) {
  MSVSR_CHECK(!data.clips.empty(), EmptyDataset, "dataset has no clips");
  NoGradGuard no_grad;
  double sum = 0;
  for (const ClipPair& clip : data.clips) {
    std::vector<Var> lr, hr;
    for (const Image& f : clip.lr.frames) lr.emplace_back(image_to_tensor(f));
    for (const Image& f : clip.hr.frames) hr.emplace_back(image_to_tensor(f));
    const NetOutput out = net.forward(lr);
    sum += charbonnier(concat_batch(out.sr), concat_batch(hr), eps).value().item();
  }
  return sum / static_cast<double>(data.clips.size());
}

std::vector<AblationVariant> ablation_variants() {
  return {{"A", false, false, false}, {"B", true, false, false}, {"C", true, true, false}, {"full", true, true, true}};
}

std::vector<AblationVariant> select_variants(const std::string& ids) {
  const std::vector<AblationVariant> all = ablation_variants();
  std::vector<AblationVariant> out;
  std::stringstream ss(ids);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (id.empty()) continue;
    auto it = std::find_if(all.begin(), all.end(), [&](const AblationVariant& v) { return v.id == id; });
    MSVSR_CHECK(it != all.end(), ConfigError, "unknown ablation variant '" + id + "' (expected A, B, C, full)");
    out.push_back(*it);
  }
  MSVSR_CHECK(!out.empty(), ConfigError, "no ablation variants selected");
  return out;
}

AblationTable ablate(const ModelConfig& base, const TrainConfig& train_cfg, const Dataset& data,
                     const std::vector<AblationVariant>& variants, ChannelMode mode) {
  AblationTable table;
  table.channel_mode = mode;
  for (const AblationVariant& v : variants) {
    ModelConfig mc = base;
    mc.use_ram = v.use_ram;
    mc.use_lfm = v.use_lfm;
    mc.use_aux_loss = v.use_aux;
    TrainConfig tc = train_cfg;
    tc.loss.aux_enabled = v.use_aux;
    Trainer trainer(mc, tc, data);
    AblationRow row;
    row.variant = v;
    row.params = trainer.model().params().count();
    row.initial_loss = dataset_loss(trainer.model(), data, tc.loss.charbonnier_eps);
    while (!trainer.done()) trainer.step();
    row.final_loss = dataset_loss(trainer.model(), data, tc.loss.charbonnier_eps);
    const MetricReport report = evaluate(trainer.model(), data, mode);
    row.psnr_db = report.mean.psnr_db;
    row.ssim = report.mean.ssim;
    table.bicubic_psnr_db = report.baseline_mean.psnr_db;
    table.rows.push_back(row);
  }
  return table;
}

std::string AblationTable::to_markdown() const {
  std::ostringstream out;
  auto mark = [](bool b) { return b ? "✓" : " "; };
  out << "| Variant | RAM | LFM | Aux-Loss | PSNR (" << to_string(channel_mode) << ", dB) | SSIM | Params | Initial loss | Final loss |\n";
  out << "|---|---|---|---|---|---|---|---|---|\n";
  for (const AblationRow& r : rows)
    out << "| " << r.variant.id << " | " << mark(r.variant.use_ram) << " | " << mark(r.variant.use_lfm) << " | "
        << mark(r.variant.use_aux) << " | " << format_psnr(r.psnr_db) << " | " << fmt::format("{:.4f}", r.ssim)
        << " | " << r.params << " | " << fmt::format("{:.6g}", r.initial_loss) << " | "
        << fmt::format("{:.6g}", r.final_loss) << " |\n";
  out << "\nBicubic baseline PSNR: " << format_psnr(bicubic_psnr_db) << " dB\n";
  return out.str();
}

std::string AblationTable::to_tsv() const {
  std::ostringstream out;
  out << "variant\tram\tlfm\taux_loss\tpsnr_db\tssim\tparams\tinitial_loss\tfinal_loss\tchannel_mode\n";
  for (const AblationRow& r : rows)
    out << r.variant.id << '\t' << r.variant.use_ram << '\t' << r.variant.use_lfm << '\t' << r.variant.use_aux << '\t'
        << format_psnr(r.psnr_db) << '\t' << fmt::format("{:.6f}", r.ssim) << '\t' << r.params << '\t'
        << fmt::format("{:.9g}", r.initial_loss) << '\t' << fmt::format("{:.9g}", r.final_loss) << '\t'
        << to_string(channel_mode) << '\n';
  return out.str();
}

MSVSR_NAMESPACE_END

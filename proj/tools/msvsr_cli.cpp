// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

// msvsr command-line tool: synthetic data, training, evaluation, inference,
// ablation and parameter statistics.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "msvsr/data.hpp"
#include "msvsr/metrics.hpp"
#include "msvsr/model.hpp"
#include "msvsr/png_io.hpp"
#include "msvsr/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace msvsr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitDivergence = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
    case ErrorKind::InvalidState:
      return kExitConfig;
    case ErrorKind::NotFound:
    case ErrorKind::EmptyDataset:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::InvalidDataset:
    case ErrorKind::IOError:
    case ErrorKind::ChecksumMismatch:
    case ErrorKind::VersionError:
      return kExitData;
    case ErrorKind::NumericalDivergence:
      return kExitDivergence;
    default:
      return 1;
  }
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

// Settings of one subcommand: defaults < --config file < explicit flags.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "Flat JSON object of settings; flags take precedence");
  }

  template <typename T>
  CLI::Option* option(const std::string& flag, const std::string& key, T def, const std::string& help) {
    defaults_[key] = def;
    auto holder = std::make_shared<T>(def);
    CLI::Option* opt = app_->add_option(flag, *holder, help)->capture_default_str();
    apply_.push_back([opt, holder, key](json& j, std::set<std::string>& given) {
      if (opt->count() == 0) return;
      j[key] = *holder;
      given.insert(key);
    });
    return opt;
  }

  // Presence flag that stores `when_set` into `key`.
  void flag(const std::string& flag, const std::string& key, bool def, bool when_set, const std::string& help) {
    defaults_[key] = def;
    CLI::Option* opt = app_->add_flag(flag, help);
    apply_.push_back([opt, key, when_set](json& j, std::set<std::string>& given) {
      if (opt->count() == 0) return;
      j[key] = when_set;
      given.insert(key);
    });
  }

  json resolve() {
    json j = defaults_;
    given_.clear();
    if (!config_path_.empty()) {
      std::ifstream in(config_path_);
      MSVSR_CHECK(in.good(), ConfigError, "cannot read config file " + config_path_);
      const json file = json::parse(in, nullptr, false);
      MSVSR_CHECK(file.is_object(), ConfigError, "config file " + config_path_ + " is not a JSON object");
      for (const auto& [key, value] : file.items()) {
        MSVSR_CHECK(defaults_.contains(key), ConfigError,
                    "unknown key '" + key + "' in " + config_path_ + " for '" + app_->get_name() + "'");
        MSVSR_CHECK(!value.is_structured() || defaults_[key].is_array(), ConfigError,
                    "config key '" + key + "' must be a scalar");
        j[key] = value;
        given_.insert(key);
      }
    }
    for (const auto& apply : apply_) apply(j, given_);
    return j;
  }

  bool given(const std::string& key) const { return given_.count(key) > 0; }
  const std::string& config_path() const { return config_path_; }

 private:
  CLI::App* app_;
  std::string config_path_;
  json defaults_ = json::object();
  std::vector<std::function<void(json&, std::set<std::string>&)>> apply_;
  std::set<std::string> given_;
};

class RunManifest {
 public:
  RunManifest(std::string command, int argc, char** argv) {
    j_["command"] = std::move(command);
    j_["argv"] = std::vector<std::string>(argv, argv + argc);
    j_["start_time"] = utc_now();
    j_["artifacts"] = json::array();
  }

  void set_config(const json& cfg) {
    j_["resolved_config"] = cfg;
    if (cfg.contains("seed")) j_["seed"] = cfg["seed"];
  }
  void set_dir(const fs::path& dir) { dir_ = dir; }
  void add_artifact(const fs::path& p) { j_["artifacts"].push_back(p.string()); }
  void set(const std::string& key, json value) { j_[key] = std::move(value); }

  void finish(int status, const std::string& error) {
    j_["end_time"] = utc_now();
    j_["exit_status"] = status;
    j_["error"] = error.empty() ? json(nullptr) : json(error);
    std::error_code ec;
    fs::create_directories(dir_, ec);
    const fs::path path = dir_ / "run_manifest.json";
    std::ofstream out(path);
    if (!out.good()) {
      std::cerr << "warning: cannot write run manifest to " << path << "\n";
      return;
    }
    out << j_.dump(2) << "\n";
  }

 private:
  json j_;
  fs::path dir_ = ".";
};

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  std::unique_ptr<Settings> settings;
  std::string default_out;
  std::function<void(const json&, const Settings&, RunManifest&)> run;
};

DegradationSpec degradation_from(const json& c) {
  DegradationSpec spec;
  spec.blur_sigma = c.at("blur_sigma").get<double>();
  spec.kernel_size = c.at("kernel_size").get<int>();
  spec.validate();
  return spec;
}

void add_degradation(Settings& s) {
  s.option("--blur-sigma", "blur_sigma", 1.6, "Gaussian blur sigma of the degradation (HR pixels)");
  s.option("--kernel-size", "kernel_size", 13, "Blur kernel size (odd)");
}

fs::path data_root_from(const json& c) {
  const std::string root = c.at("data").get<std::string>();
  MSVSR_CHECK(!root.empty(), ConfigError, "no dataset given (use --data or set MSVSR_DATA_ROOT)");
  return root;
}

ModelConfig model_from(const json& c) {
  ModelConfig mc = named_config(c.at("model").get<std::string>());
  mc.use_lfm = c.at("use_lfm").get<bool>();
  mc.use_ram = c.at("use_ram").get<bool>();
  mc.use_aux_loss = c.at("use_aux_loss").get<bool>();
  mc.validate();
  return mc;
}

void add_model(Settings& s) {
  s.option("--model", "model", std::string("tiny"), "Named model: tiny, pp-msvsr, pp-msvsr-l");
  s.flag("--no-lfm", "use_lfm", true, false, "Disable the local fusion module");
  s.flag("--no-ram", "use_ram", true, false, "Disable the re-align module");
  s.flag("--no-aux", "use_aux_loss", true, false, "Disable the auxiliary head and loss");
}

void add_training(Settings& s, int default_iters) {
  const TrainConfig d = desk_train_config();
  s.option("--preset", "preset", std::string("desk"), "Schedule preset: desk or full");
  s.option("--iters", "iters", default_iters, "Total training iterations");
  s.option("--batch", "batch", d.batch_size, "Batch size");
  s.option("--patch", "patch", d.patch_size, "LR patch size (capped to the frame size unless given)");
  s.option("--frames", "frames", d.n_frames, "Frames per training window");
  s.option("--seed", "seed", 0, "Random seed");
  s.option("--aux-weight", "aux_weight", d.loss.aux_weight, "Weight of the auxiliary loss");
  s.option("--lr-main", "lr_main", d.lr_main_init, "Initial learning rate of the main network");
  s.option("--lr-flow", "lr_flow", d.lr_flow_init, "Initial learning rate of the flow network");
  s.option("--lr-final", "lr_final", d.lr_final, "Final learning rate of the cosine schedule");
  s.option("--flow-freeze", "flow_freeze", d.flow_freeze_iters,
           "Iterations with the flow network frozen (capped to --iters unless given)");
  s.option("--grad-clip", "grad_clip", d.grad_clip, "Global gradient-norm clip (0 disables)");
  s.option("--workers", "workers", 1, "Worker threads (work runs in one deterministic thread)");
}

TrainConfig training_from(const json& c, const Settings& s, const Dataset& data) {
  const std::string preset = c.at("preset").get<std::string>();
  MSVSR_CHECK(preset == "desk" || preset == "full", ConfigError, "unknown preset '" + preset + "'");
  TrainConfig tc = preset == "full" ? full_scale_train_config() : desk_train_config();
  auto pick = [&](const std::string& key, auto preset_value) {
    using T = decltype(preset_value);
    return s.given(key) || preset == "desk" ? c.at(key).get<T>() : preset_value;
  };
  tc.total_iters = pick("iters", tc.total_iters);
  tc.batch_size = pick("batch", tc.batch_size);
  tc.patch_size = pick("patch", tc.patch_size);
  tc.n_frames = pick("frames", tc.n_frames);
  tc.flow_freeze_iters = pick("flow_freeze", tc.flow_freeze_iters);
  tc.seed = c.at("seed").get<std::uint64_t>();
  tc.loss.aux_weight = c.at("aux_weight").get<double>();
  tc.lr_main_init = c.at("lr_main").get<double>();
  tc.lr_flow_init = c.at("lr_flow").get<double>();
  tc.lr_final = c.at("lr_final").get<double>();
  tc.grad_clip = c.at("grad_clip").get<double>();
  MSVSR_CHECK(c.at("workers").get<int>() >= 1, ConfigError, "--workers must be >= 1");
  if (!s.given("flow_freeze")) tc.flow_freeze_iters = std::min(tc.flow_freeze_iters, tc.total_iters);
  if (!s.given("patch") && !data.clips.empty()) {
    int smallest = tc.patch_size;
    for (const ClipPair& clip : data.clips) smallest = std::min({smallest, clip.lr.height(), clip.lr.width()});
    if (smallest < tc.patch_size) {
      std::cerr << "note: patch size capped to " << smallest << " (LR frame size)\n";
      tc.patch_size = smallest;
    }
  }
  if (!s.given("frames") && !data.clips.empty()) {
    std::size_t shortest = static_cast<std::size_t>(tc.n_frames);
    for (const ClipPair& clip : data.clips) shortest = std::min(shortest, clip.lr.size());
    tc.n_frames = static_cast<int>(shortest);
  }
  tc.validate();
  return tc;
}

void write_text(const fs::path& path, const std::string& text, RunManifest& m) {
  std::ofstream out(path);
  MSVSR_CHECK(out.good(), IOError, "cannot write " + path.string());
  out << text;
  m.add_artifact(path);
}

fs::path out_dir(const json& c) { return c.at("out").get<std::string>(); }

// ---- make-data -------------------------------------------------------------

void setup_make_data(Command& cmd) {
  Settings& s = *cmd.settings;
  s.option("--clips", "clips", 2, "Number of clips");
  s.option("--frames", "frames", 10, "Frames per clip");
  s.option("--hr-size", "hr_size", 64, "HR frame size (divisible by 4)");
  s.option("--motion", "motion", 4, "Translation per frame in HR pixels");
  s.option("--seed", "seed", 0, "Random seed");
  s.option("--out", "out", env_or("MSVSR_DATA_ROOT", ""), "Dataset root to write (default $MSVSR_DATA_ROOT)");
  add_degradation(s);
  cmd.run = [](const json& c, const Settings&, RunManifest& m) {
    const fs::path out = out_dir(c);
    MSVSR_CHECK(!out.empty(), ConfigError, "make-data needs --out (or MSVSR_DATA_ROOT)");
    const Dataset ds = make_synthetic_dataset(c.at("clips").get<int>(), c.at("frames").get<int>(),
                                              c.at("hr_size").get<int>(), c.at("motion").get<int>(),
                                              c.at("seed").get<std::uint64_t>(), degradation_from(c));
    write_dataset(ds, out);
    for (const ClipPair& clip : ds.clips) m.add_artifact(out / clip.clip_id);
    m.add_artifact(out / "manifest.json");
    std::cout << fmt::format("wrote {} clips x {} frames to {}\n", ds.clips.size(), c.at("frames").get<int>(),
                             out.string());
  };
}

// ---- train -----------------------------------------------------------------

void setup_train(Command& cmd) {
  Settings& s = *cmd.settings;
  s.option("--data", "data", env_or("MSVSR_DATA_ROOT", ""), "Dataset root (default $MSVSR_DATA_ROOT)");
  add_model(s);
  add_training(s, desk_train_config().total_iters);
  add_degradation(s);
  s.option("--resume", "resume", std::string(), "Checkpoint to resume from");
  s.option("--checkpoint-every", "checkpoint_every", 0, "Save a checkpoint every N iterations (0: final only)");
  s.option("--log-every", "log_every", 50, "Print progress every N iterations (0: silent)");
  s.option("--out", "out", std::string("runs/train"), "Output directory");
  cmd.run = [](const json& c, const Settings& s, RunManifest& m) {
    const Dataset data = load_dataset(data_root_from(c), degradation_from(c));
    ModelConfig mc;
    TrainConfig tc;
    TrainOptions opts;
    const std::string resume = c.at("resume").get<std::string>();
    if (!resume.empty()) {
      Checkpoint ckpt = load_checkpoint(resume);
      const auto conflict = [&](const std::string& key, const json& value) {
        MSVSR_CHECK(!s.given(key) || c.at(key) == value, ConfigError,
                    fmt::format("--resume: {}={} conflicts with the checkpoint ({})", key, c.at(key).dump(),
                                value.dump()));
      };
      conflict("model", ckpt.model_cfg.name);
      conflict("use_lfm", ckpt.model_cfg.use_lfm);
      conflict("use_ram", ckpt.model_cfg.use_ram);
      conflict("use_aux_loss", ckpt.model_cfg.use_aux_loss);
      if (s.given("iters")) {
        const int iters = c.at("iters").get<int>();
        MSVSR_CHECK(iters >= ckpt.iteration, ConfigError,
                    fmt::format("--iters {} is below the checkpoint iteration {}", iters, ckpt.iteration));
        ckpt.train_cfg.total_iters = iters;
      }
      mc = ckpt.model_cfg;
      tc = ckpt.train_cfg;
      opts.resume = std::move(ckpt);
    } else {
      mc = model_from(c);
      tc = training_from(c, s, data);
      tc.loss.aux_enabled = mc.use_aux_loss;
    }
    const fs::path out = out_dir(c);
    opts.out_dir = out;
    opts.checkpoint_every = c.at("checkpoint_every").get<int>();
    const int log_every = c.at("log_every").get<int>();
    const int total = tc.total_iters;
    opts.on_step = [log_every, total](const LossRecord& r) {
      if (log_every > 0 && ((r.iter + 1) % log_every == 0 || r.iter + 1 == total))
        std::cerr << fmt::format("iter {}/{}  loss {:.6f}  main {:.6f}  aux {:.6f}  lr {:.3g}\n", r.iter + 1,
                                 total, r.loss_total, r.loss_main, r.loss_aux, r.lr_main);
    };
    m.set("model_config", mc);
    m.set("train_config", tc);
    m.set("param_count", model_stats(mc).param_count);
    const TrainResult result = train(mc, tc, data, opts);
    m.add_artifact(out / "final.ckpt");
    m.add_artifact(out / "loss.csv");
    if (!result.history.empty())
      std::cout << fmt::format("final loss {:.9g} at iteration {}\n", result.history.back().loss_total,
                               result.checkpoint.iteration);
    else
      std::cout << "no training steps run\n";
  };
}

// ---- eval ------------------------------------------------------------------

// A directory of frames is one clip; otherwise each subdirectory is a clip.
std::vector<FrameSequence> load_clips(const fs::path& dir) {
  MSVSR_CHECK(fs::is_directory(dir), NotFound, "no such directory: " + dir.string());
  bool has_png = false;
  std::vector<std::string> subdirs;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".png") has_png = true;
    if (e.is_directory()) subdirs.push_back(e.path().filename().string());
  }
  std::vector<FrameSequence> clips;
  if (has_png) {
    clips.push_back(load_sequence(dir));
    return clips;
  }
  std::sort(subdirs.begin(), subdirs.end(), natural_less);
  for (const std::string& d : subdirs) {
    FrameSequence seq = load_sequence(dir / d);
    seq.clip_id = d;
    clips.push_back(std::move(seq));
  }
  MSVSR_CHECK(!clips.empty(), EmptyDataset, "no frames or clip directories in " + dir.string());
  return clips;
}

void setup_eval(Command& cmd) {
  Settings& s = *cmd.settings;
  s.option("--ckpt", "ckpt", std::string(), "Checkpoint to evaluate");
  s.option("--data", "data", env_or("MSVSR_DATA_ROOT", ""), "Dataset root (default $MSVSR_DATA_ROOT)");
  s.option("--channel-mode", "channel_mode", std::string("y"), "Metric channels: y or rgb");
  s.option("--crop-border", "crop_border", 0, "Pixels dropped at every border before metrics");
  s.option("--compare-dirs", "compare_dirs", std::vector<std::string>{},
           "Compare two frame directories (output, reference) without a model")
      ->expected(2);
  s.option("--workers", "workers", 1, "Worker threads (work runs in one deterministic thread)");
  add_degradation(s);
  s.option("--out", "out", std::string("runs/eval"), "Output directory for report.tsv / report.json");
  cmd.run = [](const json& c, const Settings&, RunManifest& m) {
    const ChannelMode mode = parse_channel_mode(c.at("channel_mode").get<std::string>());
    const int crop = c.at("crop_border").get<int>();
    MSVSR_CHECK(crop >= 0, ConfigError, "--crop-border must be >= 0");
    const auto dirs = c.at("compare_dirs").get<std::vector<std::string>>();
    MetricReport report;
    report.channel_mode = mode;
    if (!dirs.empty()) {
      MSVSR_CHECK(dirs.size() == 2, ConfigError, "--compare-dirs takes two directories");
      const std::vector<FrameSequence> outs = load_clips(dirs[0]);
      const std::vector<FrameSequence> refs = load_clips(dirs[1]);
      MSVSR_CHECK(outs.size() == refs.size(), ShapeMismatch,
                  fmt::format("{} clips vs {} reference clips", outs.size(), refs.size()));
      for (std::size_t i = 0; i < outs.size(); ++i) report.clips.push_back(measure_clip(outs[i], refs[i], mode, crop));
      report.mean = mean_metrics(report.clips);
    } else {
      const std::string ckpt_path = c.at("ckpt").get<std::string>();
      MSVSR_CHECK(!ckpt_path.empty(), ConfigError, "eval needs --ckpt or --compare-dirs");
      const Checkpoint ckpt = load_checkpoint(ckpt_path);
      const Dataset data = load_dataset(data_root_from(c), degradation_from(c));
      report = evaluate(ckpt, data, mode, crop);
    }
    const fs::path out = out_dir(c);
    std::error_code ec;
    fs::create_directories(out, ec);
    MSVSR_CHECK(!ec, IOError, "cannot create " + out.string());
    write_text(out / "report.tsv", report.to_tsv(), m);
    write_text(out / "report.json", report.to_json().dump(2) + "\n", m);
    m.set("report", report.to_json());
    std::cout << report.to_tsv();
  };
}

// ---- infer -----------------------------------------------------------------

void setup_infer(Command& cmd) {
  Settings& s = *cmd.settings;
  s.option("--ckpt", "ckpt", std::string(), "Checkpoint");
  s.option("--input", "input", std::string(), "Directory of LR frames (*.png)");
  s.option("--out", "out", std::string("runs/infer"), "Directory for the upscaled frames");
  s.option("--aux-out", "aux_out", std::string(), "Also write auxiliary-head frames here");
  s.option("--workers", "workers", 1, "Worker threads (work runs in one deterministic thread)");
  cmd.run = [](const json& c, const Settings&, RunManifest& m) {
    const std::string ckpt_path = c.at("ckpt").get<std::string>();
    const std::string input = c.at("input").get<std::string>();
    MSVSR_CHECK(!ckpt_path.empty() && !input.empty(), ConfigError, "infer needs --ckpt and --input");
    const Checkpoint ckpt = load_checkpoint(ckpt_path);
    const std::string aux_out = c.at("aux_out").get<std::string>();
    MSVSR_CHECK(aux_out.empty() || ckpt.model_cfg.use_aux_loss, InvalidState,
                "--aux-out: the checkpoint's model has no auxiliary head");
    const auto net = build_model(ckpt);
    const std::vector<fs::path> names = list_frames(input, "*.png");
    const FrameSequence lr = load_sequence(input, "*.png");
    const ForwardOutput out = forward(*net, lr);
    const fs::path dir = out_dir(c);
    std::error_code ec;
    fs::create_directories(dir, ec);
    MSVSR_CHECK(!ec, IOError, "cannot create " + dir.string());
    for (std::size_t i = 0; i < names.size(); ++i) write_png(dir / names[i].filename(), out.sr_frames.frames[i]);
    m.add_artifact(dir);
    if (!aux_out.empty()) {
      fs::create_directories(aux_out, ec);
      MSVSR_CHECK(!ec, IOError, "cannot create " + aux_out);
      for (std::size_t i = 0; i < names.size(); ++i)
        write_png(fs::path(aux_out) / names[i].filename(), out.aux_frames->frames[i]);
      m.add_artifact(aux_out);
    }
    std::cout << fmt::format("wrote {} frames of {}x{} to {}\n", names.size(), out.sr_frames.height(),
                             out.sr_frames.width(), dir.string());
  };
}

// ---- ablate ----------------------------------------------------------------

void setup_ablate(Command& cmd) {
  Settings& s = *cmd.settings;
  s.option("--data", "data", env_or("MSVSR_DATA_ROOT", ""), "Dataset root (default $MSVSR_DATA_ROOT)");
  s.option("--model", "model", std::string("tiny"), "Base named model");
  s.option("--variants", "variants", std::string("A,B,C,full"), "Comma-separated subset of A,B,C,full");
  s.option("--channel-mode", "channel_mode", std::string("rgb"), "Metric channels: y or rgb");
  add_training(s, desk_train_config().total_iters);
  add_degradation(s);
  s.option("--out", "out", std::string("runs/ablate"), "Output directory for ablation.md / ablation.tsv");
  cmd.run = [](const json& c, const Settings& s, RunManifest& m) {
    const Dataset data = load_dataset(data_root_from(c), degradation_from(c));
    const ModelConfig base = named_config(c.at("model").get<std::string>());
    const TrainConfig tc = training_from(c, s, data);
    const auto variants = select_variants(c.at("variants").get<std::string>());
    const AblationTable table =
        ablate(base, tc, data, variants, parse_channel_mode(c.at("channel_mode").get<std::string>()));
    const fs::path out = out_dir(c);
    std::error_code ec;
    fs::create_directories(out, ec);
    MSVSR_CHECK(!ec, IOError, "cannot create " + out.string());
    write_text(out / "ablation.md", table.to_markdown(), m);
    write_text(out / "ablation.tsv", table.to_tsv(), m);
    m.set("train_config", tc);
    std::cout << table.to_markdown();
  };
}

// ---- stats -----------------------------------------------------------------

void setup_stats(Command& cmd) {
  Settings& s = *cmd.settings;
  add_model(s);
  s.flag("--json", "json", false, true, "Print JSON instead of a table");
  s.option("--out", "out", std::string("runs/stats"), "Directory for the run manifest");
  cmd.run = [](const json& c, const Settings&, RunManifest& m) {
    const ModelConfig mc = model_from(c);
    const ModelStats st = model_stats(mc);
    json j{{"model", mc.name}, {"param_count", st.param_count}, {"per_module", st.per_module}};
    m.set("stats", j);
    if (c.at("json").get<bool>()) {
      std::cout << j.dump(2) << "\n";
      return;
    }
    std::cout << fmt::format("model\t{}\n", mc.name);
    for (const auto& [module, count] : st.per_module) std::cout << fmt::format("{}\t{}\n", module, count);
    std::cout << fmt::format("total\t{}\n", st.param_count);
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-stage video super-resolution: data, training, evaluation and inference"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  std::vector<Command> commands;
  const auto add = [&](const std::string& name, const std::string& help, void (*setup)(Command&),
                       const std::string& default_out) {
    Command cmd;
    cmd.name = name;
    cmd.app = app.add_subcommand(name, help);
    cmd.settings = std::make_unique<Settings>(cmd.app);
    cmd.default_out = default_out;
    setup(cmd);
    commands.push_back(std::move(cmd));
  };
  add("make-data", "Write a synthetic dataset of translating textures", setup_make_data, ".");
  add("train", "Train a model", setup_train, "runs/train");
  add("eval", "Compute PSNR / SSIM reports", setup_eval, "runs/eval");
  add("infer", "Upscale a directory of LR frames", setup_infer, "runs/infer");
  add("ablate", "Train and compare the component ablation variants", setup_ablate, "runs/ablate");
  add("stats", "Print parameter counts", setup_stats, "runs/stats");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  for (Command& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    RunManifest manifest(cmd.name, argc, argv);
    manifest.set_dir(cmd.default_out);
    // an explicit --out still applies when the config cannot be resolved
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (a == "--out" && i + 1 < argc) manifest.set_dir(argv[i + 1]);
      if (a.rfind("--out=", 0) == 0) manifest.set_dir(a.substr(6));
    }
    int status = 0;
    std::string error;
    try {
      const json cfg = cmd.settings->resolve();
      manifest.set_config(cfg);
      if (cfg.contains("out") && !cfg["out"].get<std::string>().empty()) manifest.set_dir(cfg["out"].get<std::string>());
      cmd.run(cfg, *cmd.settings, manifest);
    } catch (const Error& e) {
      error = e.what();
      status = exit_code_for(e.kind());
    } catch (const json::exception& e) {
      error = std::string("ConfigError: ") + e.what();
      status = kExitConfig;
    } catch (const std::exception& e) {
      error = e.what();
      status = 1;
    }
    if (status != 0) std::cerr << "error: " << error << "\n";
    manifest.finish(status, error);
    return status;
  }
  return kExitConfig;
}

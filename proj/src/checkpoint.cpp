// Copyright 2026 The msvsr Authors
// SPDX-License-Identifier: Apache-2.0

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "msvsr/trainer.hpp"

MSVSR_NAMESPACE_BEGIN

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[8] = {'M', 'S', 'V', 'S', 'R', 'C', 'K', 'P'};
constexpr const char* kParamPrefix = "param/";
constexpr const char* kAdamMPrefix = "adam.m/";
constexpr const char* kAdamVPrefix = "adam.v/";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_array(std::string& out, const std::string& name, const Tensor& t) {
  put_u32(out, static_cast<std::uint32_t>(name.size()));
  out += name;
  const Shape& s = t.shape();
  for (int d : {s.n, s.c, s.h, s.w}) put_u32(out, static_cast<std::uint32_t>(d));
  put_u64(out, t.numel());
  for (std::size_t i = 0; i < t.numel(); ++i) {
    const float f = static_cast<float>(t.data()[i]);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(out, bits);
  }
}

class Reader {
 public:
  Reader(const std::string& buf, std::size_t end) : buf_(buf), end_(end) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    const std::uint64_t hi = u32();
    return lo | (hi << 32);
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == end_; }

 private:
  void need(std::size_t n) const {
    MSVSR_CHECK(n <= end_ - pos_, ChecksumMismatch, "checkpoint record runs past the end of the file");
  }

  const std::string& buf_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::string& data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(data.data()), static_cast<uInt>(n)));
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const fs::path& path) {
  std::string out(kMagic, sizeof kMagic);
  put_u32(out, kCheckpointVersion);
  const nlohmann::json meta{{"iteration", ckpt.iteration},
                            {"model_config", ckpt.model_cfg},
                            {"train_config", ckpt.train_cfg},
                            {"rng_state", ckpt.rng_state},
                            {"adam_steps_main", ckpt.adam.steps_main},
                            {"adam_steps_flow", ckpt.adam.steps_flow}};
  const std::string text = meta.dump();
  put_u64(out, text.size());
  out += text;
  put_u32(out, static_cast<std::uint32_t>(ckpt.weights.size() + ckpt.adam.m.size() + ckpt.adam.v.size()));
  for (const NamedTensor& w : ckpt.weights) put_array(out, kParamPrefix + w.name, w.value);
  for (const auto& [name, t] : ckpt.adam.m) put_array(out, kAdamMPrefix + name, t);
  for (const auto& [name, t] : ckpt.adam.v) put_array(out, kAdamVPrefix + name, t);
  put_u32(out, crc_of(out, out.size()));

  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    MSVSR_CHECK(f.good(), IOError, "cannot write checkpoint " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    MSVSR_CHECK(f.good(), IOError, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  MSVSR_CHECK(!ec, IOError, "cannot move checkpoint into place at " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  MSVSR_CHECK(fs::is_regular_file(path), NotFound, "checkpoint not found: " + path.string());
  std::ifstream f(path, std::ios::binary);
  MSVSR_CHECK(f.good(), IOError, "cannot read checkpoint " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  MSVSR_CHECK(buf.size() >= sizeof kMagic + 4 + 8 + 4 + 4, ChecksumMismatch,
              "checkpoint truncated: " + path.string());
  const std::size_t body = buf.size() - 4;
  const std::string trailer = buf.substr(body);
  Reader tail(trailer, 4);
  MSVSR_CHECK(tail.u32() == crc_of(buf, body), ChecksumMismatch,
              "checkpoint checksum mismatch (corrupt or truncated): " + path.string());
  MSVSR_CHECK(std::memcmp(buf.data(), kMagic, sizeof kMagic) == 0, ChecksumMismatch,
              "not a checkpoint file: " + path.string());

  Reader r(buf, body);
  r.bytes(sizeof kMagic);
  const std::uint32_t version = r.u32();
  MSVSR_CHECK(version == kCheckpointVersion, VersionError,
              fmt::format("checkpoint version {} is not supported (expected {})", version, kCheckpointVersion));
  const nlohmann::json meta = nlohmann::json::parse(r.bytes(r.u64()));
  Checkpoint ckpt;
  ckpt.iteration = meta.at("iteration").get<int>();
  ckpt.model_cfg = meta.at("model_config").get<ModelConfig>();
  ckpt.train_cfg = meta.at("train_config").get<TrainConfig>();
  ckpt.rng_state = meta.at("rng_state").get<std::string>();
  ckpt.adam.steps_main = meta.at("adam_steps_main").get<std::int64_t>();
  ckpt.adam.steps_flow = meta.at("adam_steps_flow").get<std::int64_t>();

  const std::uint32_t n_arrays = r.u32();
  for (std::uint32_t a = 0; a < n_arrays; ++a) {
    const std::string name = r.bytes(r.u32());
    Shape s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    const std::uint64_t count = r.u64();
    MSVSR_CHECK(count == s.numel(), ChecksumMismatch, "checkpoint array '" + name + "' has inconsistent size");
    Tensor t(s);
    for (std::uint64_t i = 0; i < count; ++i) {
      const std::uint32_t bits = r.u32();
      float v;
      std::memcpy(&v, &bits, 4);
      t.data()[i] = static_cast<Real>(v);
    }
    if (name.rfind(kParamPrefix, 0) == 0)
      ckpt.weights.push_back({name.substr(std::strlen(kParamPrefix)), std::move(t)});
    else if (name.rfind(kAdamMPrefix, 0) == 0)
      ckpt.adam.m.emplace(name.substr(std::strlen(kAdamMPrefix)), std::move(t));
    else if (name.rfind(kAdamVPrefix, 0) == 0)
      ckpt.adam.v.emplace(name.substr(std::strlen(kAdamVPrefix)), std::move(t));
    else
      raise(ErrorKind::VersionError, "unknown checkpoint array '" + name + "'");
  }
  MSVSR_CHECK(r.at_end(), ChecksumMismatch, "trailing bytes in checkpoint " + path.string());
  return ckpt;
}

MSVSR_NAMESPACE_END

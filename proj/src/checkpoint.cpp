// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

// Binary layout (little-endian):
//   "WINTRCKP"  u32 version  u32 n  <n bytes of model-config JSON>
//   u64 count, then per parameter:
//   u32 name_len  name  u32 rank  u64 dims[rank]  f64 data[prod(dims)]

#include <bit>
#include <cstring>
#include <fstream>

#include "wintr/config.hpp"
#include "wintr/errors.hpp"
#include "wintr/transformer.hpp"

namespace wintr {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'W', 'I', 'N', 'T', 'R', 'C', 'K', 'P'};

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

class Reader {
 public:
  Reader(std::istream& is, const std::filesystem::path& path) : is_(is), path_(path) {}

  template <class T>
  T get() {
    T v{};
    read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }

  void read(char* dst, std::size_t n) {
    if (!is_.read(dst, static_cast<std::streamsize>(n))) fail("unexpected end of file");
  }

  [[noreturn]] void fail(const std::string& why) const {
    throw LoadError("checkpoint " + path_.string() + ": " + why);
  }

 private:
  std::istream& is_;
  const std::filesystem::path& path_;
};

}  // namespace

void save_checkpoint(const WinTrModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw LoadError("cannot open " + path.string() + " for writing");
  os.write(kMagic, sizeof(kMagic));
  put(os, kCheckpointVersion);
  const std::string cfg = model_config_to_json(model.config()).dump();
  put(os, static_cast<std::uint32_t>(cfg.size()));
  os.write(cfg.data(), static_cast<std::streamsize>(cfg.size()));
  const auto params = model.parameters();
  put(os, static_cast<std::uint64_t>(params.size()));
  for (const auto& p : params) {
    put(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put(os, static_cast<std::uint32_t>(p.tensor.rank()));
    for (auto d : p.tensor.shape()) put(os, static_cast<std::uint64_t>(d));
    os.write(reinterpret_cast<const char*>(p.tensor.values().data()),
             static_cast<std::streamsize>(p.tensor.size() * sizeof(double)));
  }
  if (!os) throw LoadError("failed writing " + path.string());
}

WinTrModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw LoadError("cannot open checkpoint " + path.string());
  Reader in(is, path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) in.fail("bad magic");
  const auto version = in.get<std::uint32_t>();
  if (version != kCheckpointVersion) in.fail("unsupported version " + std::to_string(version));
  const auto cfg_len = in.get<std::uint32_t>();
  std::string cfg_text(cfg_len, '\0');
  in.read(cfg_text.data(), cfg_len);
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(nlohmann::json::parse(cfg_text));
  } catch (const std::exception& e) {
    in.fail(std::string("bad model config: ") + e.what());
  }

  WinTrModel model(cfg, std::uint64_t{0});
  auto params = model.parameters();
  const auto count = in.get<std::uint64_t>();
  if (count != params.size()) {
    in.fail("expected " + std::to_string(params.size()) + " parameters, found " + std::to_string(count));
  }
  for (auto& p : params) {
    const auto name_len = in.get<std::uint32_t>();
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (name != p.name) in.fail("expected parameter '" + p.name + "', found '" + name + "'");
    const auto rank = in.get<std::uint32_t>();
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(in.get<std::uint64_t>());
    if (shape != p.tensor.shape()) {
      in.fail("parameter '" + name + "' has shape " + shape_string(shape) + ", model expects " +
              shape_string(p.tensor.shape()));
    }
    in.read(reinterpret_cast<char*>(p.tensor.values().data()), p.tensor.size() * sizeof(double));
  }
  if (is.peek() != std::char_traits<char>::eof()) in.fail("trailing bytes after last parameter");
  return model;
}

WinTrModel load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  WinTrModel model = load_checkpoint(path);
  if (!(model.config() == expected)) {
    throw LoadError("checkpoint " + path.string() + " was saved for a different model configuration");
  }
  return model;
}

}  // namespace wintr

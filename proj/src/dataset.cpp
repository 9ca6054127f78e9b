// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "wintr/errors.hpp"

namespace wintr {

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

std::string to_string(Domain d) { return d == Domain::source ? "source" : "target"; }

std::string to_string(PatternType p) {
  switch (p) {
    case PatternType::bars:
      return "bars";
    case PatternType::blobs:
      return "blobs";
    case PatternType::checker:
      return "checker";
  }
  return "bars";
}

PatternType pattern_from_string(const std::string& name) {
  if (name == "bars") return PatternType::bars;
  if (name == "blobs") return PatternType::blobs;
  if (name == "checker") return PatternType::checker;
  throw ConfigError("dataset.pattern: unknown value '" + name + "'");
}

Tensor DomainSet::images(std::span<const std::size_t> indices) const {
  const std::size_t per = static_cast<std::size_t>(channels * height * width);
  Tensor out({indices.size(), static_cast<std::size_t>(channels), static_cast<std::size_t>(height),
              static_cast<std::size_t>(width)});
  double* dst = out.values().data();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& img = samples.at(indices[i]).image;
    std::copy(img.begin(), img.end(), dst + i * per);
  }
  return out;
}

std::vector<int> DomainSet::labels(std::span<const std::size_t> indices) const {
  std::vector<int> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(samples.at(i).label);
  return out;
}

std::vector<int> DomainSet::all_labels() const {
  std::vector<int> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

void SyntheticTaskSpec::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("dataset." + field + ": " + why);
  };
  if (num_classes < 2) fail("num_classes", "must be at least 2");
  if (samples_per_domain < num_classes) fail("samples_per_domain", "must be at least num_classes");
  if (image_side < 4) fail("image_side", "must be at least 4");
  if (channels < 1) fail("channels", "must be positive");
  if (shift.inversion < 0 || shift.inversion > 1) fail("shift.inversion", "must lie in [0, 1]");
  if (shift.texture < 0 || shift.texture > 1) fail("shift.texture", "must lie in [0, 1]");
  if (shift.brightness < -1 || shift.brightness > 1) fail("shift.brightness", "must lie in [-1, 1]");
  if (shift.contrast < 0 || shift.contrast >= 1) fail("shift.contrast", "must lie in [0, 1)");
  if (std::abs(shift.rotation_deg) > 45) fail("shift.rotation_deg", "must lie in [-45, 45]");
}

ShiftSpec default_shift() {
  ShiftSpec s;
  s.inversion = 0.0;
  s.texture = 0.5;
  s.brightness = 0.15;
  s.contrast = 0.4;
  s.rotation_deg = 12.0;
  return s;
}

SyntheticTaskSpec default_task() {
  SyntheticTaskSpec spec;
  spec.shift = default_shift();
  return spec;
}

namespace {

using Rng = std::mt19937_64;

constexpr double kDistractorLow = 0.3;
constexpr double kDistractorHigh = 0.7;
constexpr double kAngleJitter = std::numbers::pi / 36;

double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

// Renders the clean class pattern into img (H x W, single plane).
void render(PatternType pattern, int label, int classes, int side, double rotation_rad, Rng& rng,
            std::vector<double>& plane) {
  const double mid = 0.5 * (side - 1);
  const double background = uniform(rng, 0.0, 0.2);
  const double amplitude = uniform(rng, 0.6, 1.0);
  std::fill(plane.begin(), plane.end(), background);
  switch (pattern) {
    case PatternType::bars: {
      const double theta =
          std::numbers::pi * label / classes + rotation_rad + uniform(rng, -1.0, 1.0) * kAngleJitter;
      const double cx = mid + uniform(rng, -2.0, 2.0), cy = mid + uniform(rng, -2.0, 2.0);
      const double width = uniform(rng, 0.8, 1.4);
      const double s = std::sin(theta), c = std::cos(theta);
      // Weaker distractor bar at a uniformly random angle.
      const double phi = uniform(rng, 0.0, std::numbers::pi);
      const double dx = mid + uniform(rng, -3.0, 3.0), dy = mid + uniform(rng, -3.0, 3.0);
      const double distractor = amplitude * uniform(rng, kDistractorLow, kDistractorHigh);
      const double ds = std::sin(phi), dc = std::cos(phi);
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          const double d = -(x - cx) * s + (y - cy) * c;
          const double e = -(x - dx) * ds + (y - dy) * dc;
          plane[static_cast<std::size_t>(y * side + x)] += amplitude * std::exp(-d * d / (2 * width * width)) +
                                                           distractor * std::exp(-e * e / (2 * width * width));
        }
      }
      break;
    }
    case PatternType::blobs: {
      const double angle = 2 * std::numbers::pi * label / classes + rotation_rad + uniform(rng, -0.15, 0.15);
      const double radius = side / 4.0;
      const double cx = mid + radius * std::cos(angle) + uniform(rng, -1.0, 1.0);
      const double cy = mid + radius * std::sin(angle) + uniform(rng, -1.0, 1.0);
      const double sigma = uniform(rng, 1.2, 2.0);
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
          plane[static_cast<std::size_t>(y * side + x)] += amplitude * std::exp(-d2 / (2 * sigma * sigma));
        }
      }
      break;
    }
    case PatternType::checker: {
      const int cell = label + 1;
      const int ox = static_cast<int>(uniform(rng, 0.0, cell)), oy = static_cast<int>(uniform(rng, 0.0, cell));
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          if (((x + ox) / cell + (y + oy) / cell) % 2 == 0) plane[static_cast<std::size_t>(y * side + x)] += amplitude;
        }
      }
      break;
    }
  }
}

DomainSet make_domain(const SyntheticTaskSpec& spec, Domain domain) {
  const bool shifted = domain == Domain::target;
  const ShiftSpec shift = shifted ? spec.shift : ShiftSpec{};
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(shifted ? 0x7467u : 0x7372u)};
  Rng rng(seq);

  DomainSet set;
  set.num_classes = spec.num_classes;
  set.channels = spec.channels;
  set.height = set.width = spec.image_side;
  set.domain = domain;

  const auto n = static_cast<std::size_t>(spec.samples_per_domain);
  std::vector<int> labels(n);
  if (spec.balanced) {
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % static_cast<std::size_t>(spec.num_classes));
    std::shuffle(labels.begin(), labels.end(), rng);
  } else {
    std::uniform_int_distribution<int> pick(0, spec.num_classes - 1);
    for (auto& y : labels) y = pick(rng);
  }

  const int side = spec.image_side;
  const std::size_t plane_size = static_cast<std::size_t>(side * side);
  std::normal_distribution<double> noise(0.0, 0.03);
  std::vector<double> plane(plane_size);
  const double rotation = shift.rotation_deg * std::numbers::pi / 180.0;
  for (std::size_t i = 0; i < n; ++i) {
    DomainSample s;
    s.label = labels[i];
    s.domain = domain;
    s.id = static_cast<int>(i);
    s.image.resize(plane_size * static_cast<std::size_t>(spec.channels));
    for (int c = 0; c < spec.channels; ++c) {
      render(spec.pattern, s.label, spec.num_classes, side, rotation, rng, plane);
      for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
          double v = plane[static_cast<std::size_t>(y * side + x)] + noise(rng);
          v = (1.0 - shift.inversion) * v + shift.inversion * (1.0 - v);
          v = 0.5 + (1.0 - shift.contrast) * (v - 0.5) + shift.brightness;
          v += ((x + y) % 2 == 0 ? 0.5 : -0.5) * shift.texture;
          v = std::clamp(v, 0.0, 1.0);
          s.image[static_cast<std::size_t>(c) * plane_size + static_cast<std::size_t>(y * side + x)] =
              static_cast<double>(static_cast<float>(v));
        }
      }
    }
    set.samples.push_back(std::move(s));
  }
  return set;
}

}  // namespace

std::pair<DomainSet, DomainSet> generate(const SyntheticTaskSpec& spec) {
  spec.validate();
  return {make_domain(spec, Domain::source), make_domain(spec, Domain::target)};
}

// ---------------------------------------------------------------------------

namespace {

std::string image_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "images/%06zu.f32", index);
  return buf;
}

}  // namespace

void save_dataset(const DomainSet& set, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "images");
  nlohmann::json manifest;
  manifest["format"] = "wintr-dataset";
  manifest["version"] = 1;
  manifest["domain"] = to_string(set.domain);
  manifest["num_classes"] = set.num_classes;
  manifest["channels"] = set.channels;
  manifest["height"] = set.height;
  manifest["width"] = set.width;
  nlohmann::json list = nlohmann::json::array();
  std::vector<float> buffer;
  for (std::size_t i = 0; i < set.samples.size(); ++i) {
    const auto& s = set.samples[i];
    const std::string file = image_file_name(i);
    list.push_back({{"id", s.id}, {"label", s.label}, {"file", file}});
    buffer.assign(s.image.begin(), s.image.end());
    std::ofstream os(dir / file, std::ios::binary | std::ios::trunc);
    os.write(reinterpret_cast<const char*>(buffer.data()), static_cast<std::streamsize>(buffer.size() * sizeof(float)));
    if (!os) throw IngestionError("failed writing " + (dir / file).string());
  }
  manifest["samples"] = std::move(list);
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  os << manifest.dump(1) << '\n';
  if (!os) throw IngestionError("failed writing " + (dir / "manifest.json").string());
}

DomainSet load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw IngestionError("cannot open " + manifest_path.string());
  nlohmann::json manifest;
  DomainSet set;
  try {
    manifest = nlohmann::json::parse(is);
    set.num_classes = manifest.at("num_classes").get<int>();
    set.channels = manifest.at("channels").get<int>();
    set.height = manifest.at("height").get<int>();
    set.width = manifest.at("width").get<int>();
    const std::string domain = manifest.value("domain", "source");
    if (domain != "source" && domain != "target") throw IngestionError("unknown domain '" + domain + "'");
    set.domain = domain == "source" ? Domain::source : Domain::target;
    if (!manifest.at("samples").is_array()) throw IngestionError("'samples' is not an array");
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(manifest_path.string() + ": malformed manifest (" + e.what() + ")");
  } catch (const IngestionError& e) {
    throw IngestionError(manifest_path.string() + ": " + e.what());
  }
  if (set.num_classes < 1 || set.channels < 1 || set.height < 1 || set.width < 1) {
    throw IngestionError(manifest_path.string() + ": dimensions and num_classes must be positive");
  }

  const std::size_t per = static_cast<std::size_t>(set.channels * set.height * set.width);
  std::vector<float> buffer(per);
  int index = 0;
  for (const auto& entry : manifest["samples"]) {
    DomainSample s;
    std::string file;
    try {
      s.label = entry.at("label").get<int>();
      file = entry.at("file").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw IngestionError(manifest_path.string() + ": malformed sample entry " + std::to_string(index) + " (" +
                           e.what() + ")");
    }
    if (s.label < 0 || s.label >= set.num_classes) {
      throw IngestionError(manifest_path.string() + ": label " + std::to_string(s.label) + " of sample " +
                           std::to_string(index) + " is inconsistent with num_classes " +
                           std::to_string(set.num_classes));
    }
    const auto path = dir / file;
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(path, ec);
    if (ec) throw IngestionError(path.string() + ": cannot read image file");
    if (bytes != per * sizeof(float)) {
      throw IngestionError(path.string() + ": expected " + std::to_string(per * sizeof(float)) + " bytes, found " +
                           std::to_string(bytes));
    }
    std::ifstream img(path, std::ios::binary);
    if (!img.read(reinterpret_cast<char*>(buffer.data()), static_cast<std::streamsize>(per * sizeof(float)))) {
      throw IngestionError(path.string() + ": short read");
    }
    s.image.assign(buffer.begin(), buffer.end());
    for (double v : s.image) {
      if (!(v >= 0.0 && v <= 1.0)) throw IngestionError(path.string() + ": pixel value outside [0, 1]");
    }
    s.domain = set.domain;
    s.id = index++;
    set.samples.push_back(std::move(s));
  }
  return set;
}

}  // namespace wintr

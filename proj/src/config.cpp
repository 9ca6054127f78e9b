// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/config.hpp"

#include <fstream>
#include <set>

#include "wintr/errors.hpp"

namespace wintr {

using nlohmann::json;

namespace {

// Reads optional typed fields out of one JSON object, tracking the path for
// error messages and rejecting keys nobody asked for.
class Fields {
 public:
  Fields(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(label("") + "expected an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(label(key) + "has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string label(const std::string& key) const {
    const std::string full = path_.empty() ? key : (key.empty() ? path_ : path_ + "." + key);
    return full.empty() ? "" : full + ": ";
  }

  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) throw ConfigError(label(key) + "unknown key");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Enum, class Parse>
void get_enum(Fields& f, const char* key, Enum& out, Parse parse) {
  std::string name;
  f.get(key, name);
  if (!name.empty()) {
    try {
      out = parse(name);
    } catch (const ConfigError&) {
      throw ConfigError(f.label(key) + "unknown value '" + name + "'");
    }
  }
}

RefinementMethod refinement_method_from_string(const std::string& s) {
  if (s == "kmeans") return RefinementMethod::kmeans;
  if (s == "knn") return RefinementMethod::knn;
  throw ConfigError(s);
}

TransferMethod transfer_from_string(const std::string& s) {
  if (s == "contrastive") return TransferMethod::contrastive;
  if (s == "mmd") return TransferMethod::mmd;
  if (s == "mstn") return TransferMethod::mstn;
  if (s == "none") return TransferMethod::none;
  throw ConfigError(s);
}

ClassifierMode classifier_mode_from_string(const std::string& s) {
  if (s == "domain_specific") return ClassifierMode::domain_specific;
  if (s == "shared_classifier") return ClassifierMode::shared_classifier;
  if (s == "shared_objective") return ClassifierMode::shared_objective;
  throw ConfigError(s);
}

LrSchedule schedule_from_string(const std::string& s) {
  if (s == "constant") return LrSchedule::constant;
  if (s == "inverse_decay") return LrSchedule::inverse_decay;
  throw ConfigError(s);
}

void read_model(const json& j, const std::string& path, ModelConfig& m, bool with_variant_switches) {
  Fields f(j, path);
  f.get("image_side", m.image_side);
  f.get("patch_side", m.patch_side);
  f.get("channels", m.channels);
  f.get("embed_dim", m.embed_dim);
  f.get("num_heads", m.num_heads);
  f.get("depth", m.depth);
  f.get("mlp_ratio", m.mlp_ratio);
  f.get("num_classes", m.num_classes);
  f.get("mask_enabled", m.mask_enabled);
  if (with_variant_switches) f.get("shared_head", m.shared_head);
  f.finish();
}

json write_model(const ModelConfig& m, bool with_variant_switches) {
  json j = {{"image_side", m.image_side}, {"patch_side", m.patch_side}, {"channels", m.channels},
            {"embed_dim", m.embed_dim},   {"num_heads", m.num_heads},   {"depth", m.depth},
            {"mlp_ratio", m.mlp_ratio},   {"num_classes", m.num_classes}, {"mask_enabled", m.mask_enabled}};
  if (with_variant_switches) j["shared_head"] = m.shared_head;
  return j;
}

}  // namespace

std::string to_string(RefinementMethod m) { return m == RefinementMethod::kmeans ? "kmeans" : "knn"; }

std::string to_string(TransferMethod m) {
  switch (m) {
    case TransferMethod::contrastive:
      return "contrastive";
    case TransferMethod::mmd:
      return "mmd";
    case TransferMethod::mstn:
      return "mstn";
    case TransferMethod::none:
      return "none";
  }
  return "contrastive";
}

std::string to_string(ClassifierMode m) {
  switch (m) {
    case ClassifierMode::domain_specific:
      return "domain_specific";
    case ClassifierMode::shared_classifier:
      return "shared_classifier";
    case ClassifierMode::shared_objective:
      return "shared_objective";
  }
  return "domain_specific";
}

std::string to_string(LrSchedule s) { return s == LrSchedule::constant ? "constant" : "inverse_decay"; }

json model_config_to_json(const ModelConfig& config) { return write_model(config, true); }

ModelConfig model_config_from_json(const json& j) {
  ModelConfig m;
  read_model(j, "model", m, true);
  return m;
}

void RunConfig::validate() const {
  model.validate();
  if (!dataset_path) {
    dataset.validate();
    if (dataset.image_side != model.image_side) throw ConfigError("model.image_side: must equal dataset.image_side");
    if (dataset.channels != model.channels) throw ConfigError("model.channels: must equal dataset.channels");
    if (dataset.num_classes != model.num_classes) throw ConfigError("model.num_classes: must equal dataset.num_classes");
  }
  if (!(lambda >= 0)) throw ConfigError("lambda: must be >= 0");
  if (!(tau > 0)) throw ConfigError("tau: must be > 0");
  if (!(optimizer.base_lr > 0)) throw ConfigError("optimizer.base_lr: must be > 0");
  if (!(optimizer.classifier_lr_multiplier > 0)) throw ConfigError("optimizer.classifier_lr_multiplier: must be > 0");
  if (optimizer.momentum < 0 || optimizer.momentum >= 1) throw ConfigError("optimizer.momentum: must lie in [0, 1)");
  if (optimizer.weight_decay < 0) throw ConfigError("optimizer.weight_decay: must be >= 0");
  if (refinement.kmeans_rounds < 1) throw ConfigError("refinement.kmeans_rounds: must be >= 1");
  if (refinement.knn_k < 1) throw ConfigError("refinement.knn_k: must be >= 1");
  if (stage1_epochs < 1) throw ConfigError("stage1_epochs: must be >= 1");
  if (stage2_epochs < 1) throw ConfigError("stage2_epochs: must be >= 1");
  if (batch_size < 2) throw ConfigError("batch_size: must be >= 2");
}

ModelConfig RunConfig::effective_model() const {
  ModelConfig m = model;
  m.shared_head = classifier_mode == ClassifierMode::shared_classifier;
  return m;
}

json run_config_to_json(const RunConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["output_dir"] = c.output_dir;
  if (c.dataset_path) j["dataset_path"] = *c.dataset_path;
  const auto& d = c.dataset;
  j["dataset"] = {{"num_classes", d.num_classes},
                  {"samples_per_domain", d.samples_per_domain},
                  {"image_side", d.image_side},
                  {"channels", d.channels},
                  {"pattern", to_string(d.pattern)},
                  {"seed", d.seed},
                  {"balanced", d.balanced},
                  {"shift",
                   {{"inversion", d.shift.inversion},
                    {"texture", d.shift.texture},
                    {"brightness", d.shift.brightness},
                    {"contrast", d.shift.contrast},
                    {"rotation_deg", d.shift.rotation_deg}}}};
  j["model"] = write_model(c.model, false);
  const auto& o = c.optimizer;
  j["optimizer"] = {{"base_lr", o.base_lr},
                    {"classifier_lr_multiplier", o.classifier_lr_multiplier},
                    {"momentum", o.momentum},
                    {"weight_decay", o.weight_decay},
                    {"schedule", to_string(o.schedule)},
                    {"decay_gamma", o.decay_gamma},
                    {"decay_power", o.decay_power}};
  j["lambda"] = c.lambda;
  j["tau"] = c.tau;
  j["refinement"] = {{"method", to_string(c.refinement.method)},
                     {"representation", to_string(c.refinement.representation)},
                     {"kmeans_rounds", c.refinement.kmeans_rounds},
                     {"knn_k", c.refinement.knn_k}};
  j["transfer"] = to_string(c.transfer);
  j["use_ls_con"] = c.use_ls_con;
  j["use_lt_con"] = c.use_lt_con;
  j["classifier_mode"] = to_string(c.classifier_mode);
  j["stage1_epochs"] = c.stage1_epochs;
  j["stage2_epochs"] = c.stage2_epochs;
  j["batch_size"] = c.batch_size;
  return j;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  Fields f(j, "");
  f.get("seed", c.seed);
  f.get("output_dir", c.output_dir);
  if (const json* p = f.child("dataset_path"); p && !p->is_null()) {
    if (!p->is_string()) throw ConfigError("dataset_path: has the wrong type");
    c.dataset_path = p->get<std::string>();
  }
  if (const json* dj = f.child("dataset")) {
    Fields df(*dj, "dataset");
    auto& d = c.dataset;
    df.get("num_classes", d.num_classes);
    df.get("samples_per_domain", d.samples_per_domain);
    df.get("image_side", d.image_side);
    df.get("channels", d.channels);
    get_enum(df, "pattern", d.pattern, pattern_from_string);
    df.get("seed", d.seed);
    df.get("balanced", d.balanced);
    if (const json* sj = df.child("shift")) {
      Fields sf(*sj, "dataset.shift");
      sf.get("inversion", d.shift.inversion);
      sf.get("texture", d.shift.texture);
      sf.get("brightness", d.shift.brightness);
      sf.get("contrast", d.shift.contrast);
      sf.get("rotation_deg", d.shift.rotation_deg);
      sf.finish();
    }
    df.finish();
  }
  if (const json* mj = f.child("model")) read_model(*mj, "model", c.model, false);
  if (const json* oj = f.child("optimizer")) {
    Fields of(*oj, "optimizer");
    auto& o = c.optimizer;
    of.get("base_lr", o.base_lr);
    of.get("classifier_lr_multiplier", o.classifier_lr_multiplier);
    of.get("momentum", o.momentum);
    of.get("weight_decay", o.weight_decay);
    get_enum(of, "schedule", o.schedule, schedule_from_string);
    of.get("decay_gamma", o.decay_gamma);
    of.get("decay_power", o.decay_power);
    of.finish();
  }
  f.get("lambda", c.lambda);
  f.get("tau", c.tau);
  if (const json* rj = f.child("refinement")) {
    Fields rf(*rj, "refinement");
    get_enum(rf, "method", c.refinement.method, refinement_method_from_string);
    get_enum(rf, "representation", c.refinement.representation, representation_from_string);
    rf.get("kmeans_rounds", c.refinement.kmeans_rounds);
    rf.get("knn_k", c.refinement.knn_k);
    rf.finish();
  }
  get_enum(f, "transfer", c.transfer, transfer_from_string);
  f.get("use_ls_con", c.use_ls_con);
  f.get("use_lt_con", c.use_lt_con);
  get_enum(f, "classifier_mode", c.classifier_mode, classifier_mode_from_string);
  f.get("stage1_epochs", c.stage1_epochs);
  f.get("stage2_epochs", c.stage2_epochs);
  f.get("batch_size", c.batch_size);
  f.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace wintr

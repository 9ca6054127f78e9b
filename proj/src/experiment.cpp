// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>

#include "wintr/errors.hpp"
#include "wintr/logging.hpp"

namespace wintr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json epoch_json(const EpochRecord& r) {
  return {{"stage", r.stage},
          {"epoch", r.epoch},
          {"l_s", r.l_s},
          {"l_t", r.l_t},
          {"l_s_con", r.l_s_con},
          {"l_t_con", r.l_t_con},
          {"total", r.total},
          {"source_acc", r.source_acc},
          {"target_acc", r.target_acc},
          {"gs_on_target", r.gs_on_target},
          {"gt_on_source", r.gt_on_source},
          {"pseudo_label_acc", r.pseudo_label_acc},
          {"token_cos_mean", r.token_cos_mean}};
}

}  // namespace

DomainPair load_or_generate(const RunConfig& config) {
  if (config.dataset_path) {
    const fs::path root(*config.dataset_path);
    DomainPair data{load_dataset(root / "source"), load_dataset(root / "target")};
    const auto& m = config.model;
    for (const DomainSet* set : {&data.source, &data.target}) {
      if (set->num_classes != m.num_classes || set->channels != m.channels || set->height != m.image_side ||
          set->width != m.image_side) {
        throw ConfigError("dataset_path: data dimensions do not match the model section");
      }
    }
    return data;
  }
  auto [source, target] = generate(config.dataset);
  return {std::move(source), std::move(target)};
}

void save_domain_pair(const DomainPair& data, const fs::path& dir) {
  save_dataset(data.source, dir / "source");
  save_dataset(data.target, dir / "target");
}

json RunSummary::to_json() const {
  return {{"stage1_source_acc", stage1_source_acc},
          {"source_only_target_acc", source_only_target_acc},
          {"initial_pseudo_label_acc", initial_pseudo_label_acc},
          {"final", epoch_json(final_epoch)}};
}

RunSummary summarize(const Stage1Result& stage1, const Stage2Result& stage2) {
  RunSummary s;
  s.stage1_source_acc = stage1.source_acc;
  s.source_only_target_acc = stage1.source_only_target_acc;
  s.initial_pseudo_label_acc = stage1.pseudo_label_acc;
  if (!stage2.report.epochs.empty()) s.final_epoch = stage2.report.epochs.back();
  return s;
}

RunArtifacts run_from_stage1(const RunConfig& config, const DomainPair& data, const Stage1Result& stage1,
                             const fs::path& out_dir) {
  Stage2Result stage2 = stage2_train(config, data.source, data.target, stage1.pseudo.labels);
  RunArtifacts art{summarize(stage1, stage2), stage1.report};
  art.report.append(stage2.report);

  fs::create_directories(out_dir);
  art.report.write_csv(out_dir / "report.csv");
  json summary = art.summary.to_json();
  summary["seed"] = config.seed;
  summary["config"] = run_config_to_json(config);
  write_json(out_dir / "summary.json", summary);
  write_json(out_dir / "config.json", run_config_to_json(config));
  write_json(out_dir / "timing.json", {{"stage1_seconds", stage1.report.wall_seconds},
                                       {"stage2_seconds", stage2.report.wall_seconds}});
  save_checkpoint(stage1.model, out_dir / "stage1.ckpt");
  save_checkpoint(stage2.model, out_dir / "final.ckpt");

  json rounds = json::array();
  rounds.push_back({{"epoch", 0}, {"state", stage1.pseudo.to_json()}});
  for (std::size_t i = 0; i < stage2.refinements.size(); ++i) {
    rounds.push_back({{"epoch", i + 1}, {"state", stage2.refinements[i].to_json()}});
  }
  write_json(out_dir / "pseudo_labels.json",
             {{"method", to_string(config.refinement.method)}, {"final_labels", stage2.pseudo_labels},
              {"rounds", rounds}});
  logging::info("run finished: target acc (g^t) " + std::to_string(art.summary.final_epoch.target_acc) +
            ", source-only target acc " + std::to_string(art.summary.source_only_target_acc));
  return art;
}

RunArtifacts run_experiment(const RunConfig& config, const fs::path& out_dir) {
  config.validate();
  const DomainPair data = load_or_generate(config);
  const Stage1Result stage1 = stage1_pretrain(config, data.source, data.target);
  return run_from_stage1(config, data, stage1, out_dir);
}

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names = {
      "no_mask", "no_ls_con", "no_lt_con",           "no_both_con",      "knn_refine",
      "mmd",     "mstn",      "target_oriented_refine", "shared_classifier", "shared_objective"};
  return names;
}

RunConfig apply_variant(const RunConfig& base, const std::string& variant) {
  RunConfig c = base;
  if (variant == "no_mask") {
    c.model.mask_enabled = false;
  } else if (variant == "no_ls_con") {
    c.use_ls_con = false;
  } else if (variant == "no_lt_con") {
    c.use_lt_con = false;
  } else if (variant == "no_both_con") {
    c.lambda = 0.0;
  } else if (variant == "knn_refine") {
    c.refinement.method = RefinementMethod::knn;
  } else if (variant == "mmd") {
    c.transfer = TransferMethod::mmd;
  } else if (variant == "mstn") {
    c.transfer = TransferMethod::mstn;
  } else if (variant == "target_oriented_refine") {
    c.refinement.representation = Representation::target_oriented;
  } else if (variant == "shared_classifier") {
    c.classifier_mode = ClassifierMode::shared_classifier;
  } else if (variant == "shared_objective") {
    c.classifier_mode = ClassifierMode::shared_objective;
  } else {
    std::string valid;
    for (const auto& n : variant_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("variant: unknown name '" + variant + "'; valid names are " + valid);
  }
  return c;
}

std::vector<std::pair<std::string, RunSummary>> run_ablation(const RunConfig& base,
                                                             const std::vector<std::string>& variants,
                                                             const fs::path& out_dir) {
  base.validate();
  std::vector<std::pair<std::string, RunConfig>> runs = {{"full", base}};
  for (const auto& v : variants) {
    if (v == "full") continue;
    runs.emplace_back(v, apply_variant(base, v));
  }
  const DomainPair data = load_or_generate(base);

  // Stage 1 depends only on the model architecture among the variant knobs.
  std::map<bool, Stage1Result> stage1_cache;
  std::vector<std::pair<std::string, RunSummary>> results;
  for (const auto& [name, config] : runs) {
    const bool key = config.model.mask_enabled;
    auto it = stage1_cache.find(key);
    if (it == stage1_cache.end()) {
      it = stage1_cache.emplace(key, stage1_pretrain(config, data.source, data.target)).first;
    }
    logging::info("ablation: running " + name);
    results.emplace_back(name, run_from_stage1(config, data, it->second, out_dir / name).summary);
  }

  std::ostringstream csv;
  csv << "variant,target_acc,source_acc,gs_on_target,gt_on_source,pseudo_label_acc,token_cos_mean,"
         "target_acc_minus_full\n"
      << std::setprecision(17);
  const double full = results.front().second.final_epoch.target_acc;
  for (const auto& [name, s] : results) {
    const auto& f = s.final_epoch;
    csv << name << ',' << f.target_acc << ',' << f.source_acc << ',' << f.gs_on_target << ',' << f.gt_on_source
        << ',' << f.pseudo_label_acc << ',' << f.token_cos_mean << ',' << f.target_acc - full << '\n';
  }
  fs::create_directories(out_dir);
  write_text(out_dir / "comparison.csv", csv.str());
  return results;
}

json Diagnostics::to_json() const {
  return {{"num_target_samples", token_cosine.size()},
          {"mean_token_cosine", mean_token_cosine},
          {"histogram", {{"range", {-1.0, 1.0}}, {"bins", histogram.size()}, {"counts", histogram}}},
          {"accuracy",
           {{"gs_on_source", accuracy[0][0]},
            {"gs_on_target", accuracy[0][1]},
            {"gt_on_source", accuracy[1][0]},
            {"gt_on_target", accuracy[1][1]}}},
          {"token_cosine", token_cosine}};
}

Diagnostics diagnose(const WinTrModel& model, const DomainPair& data) {
  Diagnostics d;
  const ForwardOutput src = infer(model, data.source);
  const ForwardOutput tgt = infer(model, data.target);
  d.token_cosine = token_cosine_similarity(tgt.feat_src_view, tgt.feat_tgt_view);
  const int bins = static_cast<int>(d.histogram.size());
  for (double c : d.token_cosine) {
    const int b = std::clamp(static_cast<int>(std::floor((c + 1.0) / 2.0 * bins)), 0, bins - 1);
    ++d.histogram[static_cast<std::size_t>(b)];
  }
  if (!d.token_cosine.empty()) {
    d.mean_token_cosine = std::accumulate(d.token_cosine.begin(), d.token_cosine.end(), 0.0) /
                          static_cast<double>(d.token_cosine.size());
  }
  const auto ys = data.source.all_labels();
  const auto yt = data.target.all_labels();
  d.accuracy[0] = {wintr::accuracy(src.logits_src, ys), wintr::accuracy(tgt.logits_src, yt)};
  d.accuracy[1] = {wintr::accuracy(src.logits_tgt, ys), wintr::accuracy(tgt.logits_tgt, yt)};
  return d;
}

void write_diagnostics(const Diagnostics& d, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_json(out_dir / "diagnostics.json", d.to_json());

  std::ostringstream sim;
  sim << "sample_id,token_cosine\n" << std::setprecision(17);
  for (std::size_t i = 0; i < d.token_cosine.size(); ++i) sim << i << ',' << d.token_cosine[i] << '\n';
  write_text(out_dir / "token_similarity.csv", sim.str());

  std::ostringstream hist;
  hist << "bin_low,bin_high,count\n" << std::setprecision(17);
  const double width = 2.0 / static_cast<double>(d.histogram.size());
  for (std::size_t b = 0; b < d.histogram.size(); ++b) {
    hist << -1.0 + width * static_cast<double>(b) << ',' << -1.0 + width * static_cast<double>(b + 1) << ','
         << d.histogram[b] << '\n';
  }
  write_text(out_dir / "token_histogram.csv", hist.str());

  std::ostringstream acc;
  acc << "head,source_acc,target_acc\n" << std::setprecision(17);
  acc << "g_s," << d.accuracy[0][0] << ',' << d.accuracy[0][1] << '\n';
  acc << "g_t," << d.accuracy[1][0] << ',' << d.accuracy[1][1] << '\n';
  write_text(out_dir / "cross_accuracy.csv", acc.str());
}

}  // namespace wintr

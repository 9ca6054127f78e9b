// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

// wintr: run, ablate, diagnose, gen-data.
// Exit codes: 0 success, 1 configuration error, 2 runtime error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wintr/config.hpp"
#include "wintr/errors.hpp"
#include "wintr/experiment.hpp"
#include "wintr/logging.hpp"

namespace {

using namespace wintr;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::string> variants;
  std::string checkpoint;
  std::optional<std::string> data;
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  c.validate();
  return c;
}

bool same_architecture(const ModelConfig& a, const ModelConfig& b) {
  return a.image_side == b.image_side && a.patch_side == b.patch_side && a.channels == b.channels &&
         a.embed_dim == b.embed_dim && a.num_heads == b.num_heads && a.depth == b.depth &&
         a.mlp_ratio == b.mlp_ratio && a.num_classes == b.num_classes;
}

int cmd_run(const Options& o) {
  const RunConfig c = resolve(o);
  const auto art = run_experiment(c, c.output_dir);
  std::cout << art.summary.to_json().dump(2) << '\n';
  return 0;
}

int cmd_ablate(const Options& o) {
  const RunConfig c = resolve(o);
  std::vector<std::string> variants = o.variants.empty() ? variant_names() : o.variants;
  for (const auto& v : variants) apply_variant(c, v);  // reject unknown names before any training
  const auto results = run_ablation(c, variants, c.output_dir);
  for (const auto& [name, s] : results) {
    std::cout << name << " target_acc=" << s.final_epoch.target_acc << '\n';
  }
  return 0;
}

int cmd_diagnose(const Options& o) {
  const RunConfig c = resolve(o);
  WinTrModel model = load_checkpoint(o.checkpoint);
  if (!o.config_path.empty() && !same_architecture(model.config(), c.model)) {
    throw LoadError("checkpoint " + o.checkpoint + " does not match the model section of " + o.config_path);
  }
  RunConfig data_config = c;
  if (o.data) data_config.dataset_path = *o.data;
  const DomainPair data = load_or_generate(data_config);
  const Diagnostics d = diagnose(model, data);
  write_diagnostics(d, c.output_dir);
  std::cout << "mean token cosine " << d.mean_token_cosine << ", g^t target acc " << d.accuracy[1][1] << '\n';
  return 0;
}

int cmd_gen_data(const Options& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
  if (o.seed) c.dataset.seed = *o.seed;
  if (o.out) c.output_dir = *o.out;
  c.dataset.validate();
  auto [source, target] = generate(c.dataset);
  save_domain_pair({std::move(source), std::move(target)}, c.output_dir);
  std::cout << "wrote " << c.output_dir << "/source and " << c.output_dir << "/target\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  wintr::logging::init_from_env();
  CLI::App app{"Two-token vision transformer for unsupervised domain adaptation"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the run seed");
    sub->add_option("--out", o.out, "output directory");
  };
  CLI::App* run = app.add_subcommand("run", "stage 1 + stage 2 training");
  common(run);
  CLI::App* ablate = app.add_subcommand("ablate", "full method plus ablation variants");
  common(ablate);
  ablate->add_option("--variant", o.variants, "variant name (repeatable); default all");
  CLI::App* diag = app.add_subcommand("diagnose", "token similarity and cross-head accuracy of a checkpoint");
  common(diag);
  diag->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  diag->add_option("--data", o.data, "dataset directory with source/ and target/");
  CLI::App* gen = app.add_subcommand("gen-data", "write the synthetic task to disk");
  common(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(o);
    if (ablate->parsed()) return cmd_ablate(o);
    if (diag->parsed()) return cmd_diagnose(o);
    return cmd_gen_data(o);
  } catch (const wintr::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}

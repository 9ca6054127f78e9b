// Copyright 2026 The WinTR Desk Authors
// SPDX-License-Identifier: Apache-2.0

#include "wintr/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "wintr/errors.hpp"
#include "wintr/logging.hpp"
#include "wintr/objectives.hpp"
#include "wintr/optimizer.hpp"

namespace wintr {

namespace {

std::uint64_t derive(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  std::mt19937_64 rng(seq);
  return rng();
}

// Reshuffled pass over [0, n); wraps around with a fresh permutation.
class BatchCycler {
 public:
  BatchCycler(std::size_t n, std::uint64_t seed) : order_(n), rng_(seed) {
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<std::size_t> next(std::size_t batch) {
    std::vector<std::size_t> out;
    out.reserve(batch);
    while (out.size() < batch) {
      if (pos_ == order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
  std::mt19937_64 rng_;
};

std::vector<std::size_t> iota_rows(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> rows(end - begin);
  std::iota(rows.begin(), rows.end(), begin);
  return rows;
}

Tensor rows_of(const Tensor& x, std::size_t begin, std::size_t end) {
  const auto rows = iota_rows(begin, end);
  return gather_rows(x, rows);
}

Tensor concat_images(const Tensor& a, const Tensor& b) {
  Shape shape = a.shape();
  shape[0] += b.dim(0);
  Vector values(static_cast<Eigen::Index>(a.size() + b.size()));
  values << a.values(), b.values();
  return Tensor(shape, values);
}

void check_finite(double total, int stage, long step) {
  if (!std::isfinite(total)) {
    throw TrainingError("non-finite loss at stage " + std::to_string(stage) + " step " + std::to_string(step));
  }
}

int steps_per_epoch(std::size_t larger, int batch) {
  return static_cast<int>((larger + static_cast<std::size_t>(batch) - 1) / static_cast<std::size_t>(batch));
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double label_agreement(std::span<const int> a, std::span<const int> b) {
  std::size_t hits = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hits += a[i] == b[i] ? 1 : 0;
  return a.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(a.size());
}

// Accuracy columns plus the token similarity from fresh full-set passes.
void fill_metrics(EpochRecord& rec, const ForwardOutput& src_out, const ForwardOutput& tgt_out,
                  const DomainSet& source, const DomainSet& target) {
  const auto ys = source.all_labels();
  const auto yt = target.all_labels();
  rec.source_acc = accuracy(src_out.logits_src, ys);
  rec.gt_on_source = accuracy(src_out.logits_tgt, ys);
  rec.target_acc = accuracy(tgt_out.logits_tgt, yt);
  rec.gs_on_target = accuracy(tgt_out.logits_src, yt);
  rec.token_cos_mean = mean_of(token_cosine_similarity(tgt_out.feat_src_view, tgt_out.feat_tgt_view));
}

std::vector<NamedParameter> trainable(const WinTrModel& model) {
  auto params = model.parameters();
  // A shared head leaves head_tgt out of the graph; do not let weight decay
  // shrink it silently.
  if (model.config().shared_head) {
    std::erase_if(params, [](const NamedParameter& p) { return p.name.starts_with("head_tgt"); });
  }
  return params;
}

}  // namespace

ForwardOutput infer(const WinTrModel& model, const DomainSet& set, std::size_t chunk) {
  if (Tape::active() != nullptr) throw TrainingError("infer: called while a tape is recording");
  std::vector<Tensor> fs, ft, gs, gt;
  for (std::size_t begin = 0; begin < set.size(); begin += chunk) {
    const auto idx = iota_rows(begin, std::min(set.size(), begin + chunk));
    ForwardOutput out = forward(model, set.images(idx));
    fs.push_back(out.feat_src_view);
    ft.push_back(out.feat_tgt_view);
    gs.push_back(out.logits_src);
    gt.push_back(out.logits_tgt);
  }
  ForwardOutput all;
  all.feat_src_view = concat(fs);
  all.feat_tgt_view = concat(ft);
  all.logits_src = concat(gs);
  all.logits_tgt = concat(gt);
  return all;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const auto m = logits.matrix();
  std::vector<int> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best = 0;
    m.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.dim(0) != labels.size()) {
    throw DimensionError("accuracy: logits " + shape_string(logits.shape()) + " vs " +
                         std::to_string(labels.size()) + " labels");
  }
  const auto pred = argmax_rows(logits);
  return label_agreement(pred, labels);
}

double evaluate(const WinTrModel& model, const DomainSet& set, Head head) {
  const ForwardOutput out = infer(model, set);
  return accuracy(head == Head::src ? out.logits_src : out.logits_tgt, set.all_labels());
}

const std::vector<std::string>& TrainReport::csv_columns() {
  static const std::vector<std::string> columns = {
      "stage",        "epoch",        "l_s",          "l_t",          "l_s_con",          "l_t_con",       "total",
      "source_acc",   "target_acc",   "gs_on_target", "gt_on_source", "pseudo_label_acc", "token_cos_mean"};
  return columns;
}

std::string TrainReport::to_csv() const {
  std::ostringstream os;
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n' << std::setprecision(17);
  for (const auto& r : epochs) {
    os << r.stage << ',' << r.epoch << ',' << r.l_s << ',' << r.l_t << ',' << r.l_s_con << ',' << r.l_t_con << ','
       << r.total << ',' << r.source_acc << ',' << r.target_acc << ',' << r.gs_on_target << ',' << r.gt_on_source
       << ',' << r.pseudo_label_acc << ',' << r.token_cos_mean << '\n';
  }
  return os.str();
}

void TrainReport::write_csv(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  os << to_csv();
}

void TrainReport::append(const TrainReport& other) {
  epochs.insert(epochs.end(), other.epochs.begin(), other.epochs.end());
  step_totals.insert(step_totals.end(), other.step_totals.begin(), other.step_totals.end());
  wall_seconds += other.wall_seconds;
}

RunSeeds derive_seeds(std::uint64_t run_seed) {
  return {derive(run_seed, 1), derive(run_seed, 2), derive(run_seed, 3), derive(run_seed, 4)};
}

Stage1Result stage1_pretrain(const RunConfig& config, const DomainSet& source, const DomainSet& target) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const RunSeeds seeds = derive_seeds(config.seed);
  // Stage 1 trains g^s only; the head layout does not matter here.
  ModelConfig mc = config.model;
  mc.shared_head = false;
  WinTrModel model(mc, seeds.stage1_init);
  SgdOptimizer opt(model.parameters(), config.optimizer);
  BatchCycler batches(source.size(), seeds.stage1_batches);

  const auto batch = static_cast<std::size_t>(config.batch_size);
  const int steps = steps_per_epoch(source.size(), config.batch_size);
  const long total_steps = static_cast<long>(steps) * config.stage1_epochs;
  TrainReport report;
  long step = 0;
  for (int epoch = 1; epoch <= config.stage1_epochs; ++epoch) {
    std::vector<double> losses;
    for (int s = 0; s < steps; ++s, ++step) {
      const auto idx = batches.next(batch);
      const auto labels = source.labels(idx);
      Tape tape;
      double value = 0;
      {
        TapeScope scope(tape);
        const ForwardOutput out = forward(model, source.images(idx));
        const Tensor loss = cross_entropy(out.logits_src, labels);
        value = loss.item();
        check_finite(value, 1, step);
        tape.backward(loss);
      }
      opt.step(static_cast<double>(step) / static_cast<double>(total_steps));
      opt.zero_grad();
      losses.push_back(value);
      report.step_totals.push_back(value);
    }
    EpochRecord rec;
    rec.stage = 1;
    rec.epoch = epoch;
    rec.l_s = rec.total = mean_of(losses);
    report.epochs.push_back(rec);
    logging::debug("stage 1 epoch " + std::to_string(epoch) + " l_s " + std::to_string(rec.l_s));
  }

  const ForwardOutput src_out = infer(model, source);
  const ForwardOutput tgt_out = infer(model, target);
  PseudoLabelState pseudo =
      weighted_kmeans_refine(tgt_out.feat_src_view, tgt_out.logits_src, config.refinement.kmeans_rounds);
  EpochRecord& last = report.epochs.back();
  fill_metrics(last, src_out, tgt_out, source, target);
  last.pseudo_label_acc = label_agreement(pseudo.labels, target.all_labels());
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  Stage1Result result{std::move(model), std::move(pseudo), last.source_acc, last.gs_on_target,
                      last.pseudo_label_acc, std::move(report)};
  logging::info("stage 1 done: source acc " + std::to_string(result.source_acc) + ", target acc (g^s) " +
            std::to_string(result.source_only_target_acc) + ", pseudo-label acc " +
            std::to_string(result.pseudo_label_acc));
  return result;
}

namespace {

struct StepBatch {
  std::vector<int> source_labels;
  std::vector<int> target_labels;
};

// The four loss terms of one stage-2 step for a concatenated [source; target]
// forward pass.
LossTerms stage2_terms(const RunConfig& config, const ForwardOutput& out, const StepBatch& b) {
  const std::size_t ns = b.source_labels.size();
  const std::size_t n = ns + b.target_labels.size();
  LossTerms terms;
  if (config.classifier_mode == ClassifierMode::shared_objective) {
    std::vector<int> both(b.source_labels);
    both.insert(both.end(), b.target_labels.begin(), b.target_labels.end());
    terms.l_s = cross_entropy(out.logits_src, both);
    terms.l_t = cross_entropy(out.logits_tgt, both);
  } else {
    terms.l_s = cross_entropy(rows_of(out.logits_src, 0, ns), b.source_labels);
    terms.l_t = cross_entropy(rows_of(out.logits_tgt, ns, n), b.target_labels);
  }
  if (config.lambda == 0 || config.transfer == TransferMethod::none) return terms;

  const Tensor fs_s = rows_of(out.feat_src_view, 0, ns);
  const Tensor fs_t = rows_of(out.feat_src_view, ns, n);
  const Tensor ft_s = rows_of(out.feat_tgt_view, 0, ns);
  const Tensor ft_t = rows_of(out.feat_tgt_view, ns, n);
  switch (config.transfer) {
    case TransferMethod::contrastive:
      if (config.use_ls_con) terms.l_s_con = loss_s_con(fs_s, fs_t, b.source_labels, b.target_labels, config.tau);
      if (config.use_lt_con) terms.l_t_con = loss_t_con(ft_s, ft_t, b.source_labels, b.target_labels, config.tau);
      break;
    case TransferMethod::mmd: {
      // Anchors are the live side; the frozen side matches the contrastive terms.
      if (config.use_ls_con) {
        const Tensor a = l2_normalize_lastdim(fs_t), c = l2_normalize_lastdim(fs_s);
        const auto bw = median_heuristic_bandwidths(a, c);
        terms.l_s_con = mmd_transfer(a, c, bw, StopGradSide::candidates);
      }
      if (config.use_lt_con) {
        const Tensor a = l2_normalize_lastdim(ft_s), c = l2_normalize_lastdim(ft_t);
        const auto bw = median_heuristic_bandwidths(a, c);
        terms.l_t_con = mmd_transfer(a, c, bw, StopGradSide::candidates);
      }
      break;
    }
    case TransferMethod::mstn:
      if (config.use_ls_con) {
        terms.l_s_con = mstn_center_transfer(l2_normalize_lastdim(fs_t), b.target_labels, l2_normalize_lastdim(fs_s),
                                             b.source_labels, StopGradSide::candidates);
      }
      if (config.use_lt_con) {
        terms.l_t_con = mstn_center_transfer(l2_normalize_lastdim(ft_s), b.source_labels, l2_normalize_lastdim(ft_t),
                                             b.target_labels, StopGradSide::candidates);
      }
      break;
    case TransferMethod::none:
      break;
  }
  return terms;
}

}  // namespace

Stage2Result stage2_train(const RunConfig& config, const DomainSet& source, const DomainSet& target,
                          std::span<const int> initial_pseudo_labels) {
  config.validate();
  if (initial_pseudo_labels.size() != target.size()) {
    throw DimensionError("stage2_train: " + std::to_string(initial_pseudo_labels.size()) +
                         " pseudo-labels for " + std::to_string(target.size()) + " target samples");
  }
  const auto start = std::chrono::steady_clock::now();
  const RunSeeds seeds = derive_seeds(config.seed);
  WinTrModel model(config.effective_model(), seeds.stage2_init);
  SgdOptimizer opt(trainable(model), config.optimizer);
  std::mt19937_64 stream(seeds.stage2_batches);
  BatchCycler src_batches(source.size(), stream());
  BatchCycler tgt_batches(target.size(), stream());

  std::vector<int> pseudo(initial_pseudo_labels.begin(), initial_pseudo_labels.end());
  const auto batch = static_cast<std::size_t>(config.batch_size);
  const int steps = steps_per_epoch(std::max(source.size(), target.size()), config.batch_size);
  const long total_steps = static_cast<long>(steps) * config.stage2_epochs;
  const auto truth = target.all_labels();

  TrainReport report;
  std::vector<PseudoLabelState> refinements;
  long step = 0;
  for (int epoch = 1; epoch <= config.stage2_epochs; ++epoch) {
    std::vector<double> l_s, l_t, l_s_con, l_t_con, total;
    for (int s = 0; s < steps; ++s, ++step) {
      const auto si = src_batches.next(batch);
      const auto ti = tgt_batches.next(batch);
      StepBatch b{source.labels(si), {}};
      b.target_labels.reserve(ti.size());
      for (auto i : ti) b.target_labels.push_back(pseudo[i]);

      Tape tape;
      LossBundle bundle;
      {
        TapeScope scope(tape);
        const ForwardOutput out = forward(model, concat_images(source.images(si), target.images(ti)));
        bundle = total_loss(stage2_terms(config, out, b), config.lambda, config.tau);
        check_finite(bundle.total, 2, step);
        tape.backward(bundle.total_tensor);
      }
      opt.step(static_cast<double>(step) / static_cast<double>(total_steps));
      opt.zero_grad();
      l_s.push_back(bundle.l_s);
      l_t.push_back(bundle.l_t);
      l_s_con.push_back(bundle.l_s_con);
      l_t_con.push_back(bundle.l_t_con);
      total.push_back(bundle.total);
      report.step_totals.push_back(bundle.total);
    }

    const ForwardOutput src_out = infer(model, source);
    const ForwardOutput tgt_out = infer(model, target);
    const Representation rep = config.refinement.representation;
    const Tensor feats = select_refinement_features(tgt_out, rep);
    const Tensor& logits = rep == Representation::source_oriented ? tgt_out.logits_src : tgt_out.logits_tgt;
    if (config.refinement.method == RefinementMethod::kmeans) {
      PseudoLabelState state = weighted_kmeans_refine(feats, logits, config.refinement.kmeans_rounds);
      state.representation = rep;
      pseudo = state.labels;
      refinements.push_back(std::move(state));
    } else {
      pseudo = knn_refine(feats, argmax_rows(logits), config.refinement.knn_k, config.model.num_classes);
    }

    EpochRecord rec;
    rec.stage = 2;
    rec.epoch = epoch;
    rec.l_s = mean_of(l_s);
    rec.l_t = mean_of(l_t);
    rec.l_s_con = mean_of(l_s_con);
    rec.l_t_con = mean_of(l_t_con);
    rec.total = mean_of(total);
    fill_metrics(rec, src_out, tgt_out, source, target);
    rec.pseudo_label_acc = label_agreement(pseudo, truth);
    report.epochs.push_back(rec);
    logging::debug("stage 2 epoch " + std::to_string(epoch) + " total " + std::to_string(rec.total) + " target acc " +
               std::to_string(rec.target_acc) + " pseudo acc " + std::to_string(rec.pseudo_label_acc));
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return Stage2Result{std::move(model), std::move(report), std::move(pseudo), std::move(refinements)};
}

}  // namespace wintr

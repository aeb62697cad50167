#include "soe/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

#include "soe/binio.hpp"
#include "soe/optim.hpp"

namespace soe {

namespace {

constexpr uint64_t kTrunkStream = 0x54525e4bull;
constexpr uint64_t kHeadStream = 0x4845414Dull;
constexpr uint64_t kOrderStream = 0x4f524452ull;
constexpr uint64_t kRotStream = 0x524f5441ull;

double deg2rad(double d) { return d * M_PI / 180.0; }

std::string csv_cell(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<EpochRow>& rows,
                       bool downstream, TaskKind task) {
  std::string s = "epoch,l_so3,l_inv,l_comb,task_loss,rob_reg";
  if (downstream)
    s += task == TaskKind::kClassify ? ",bacc,f1" : ",r2,mae";
  else
    s += ",val_l_comb";
  s += "\n";
  for (const EpochRow& r : rows) {
    s += std::to_string(r.epoch) + "," + csv_cell(r.l_so3) + "," + csv_cell(r.l_inv) + "," +
         csv_cell(r.l_comb) + "," + csv_cell(r.task_loss) + "," + csv_cell(r.rob_reg);
    if (downstream)
      s += "," + csv_cell(r.metric_a) + "," + csv_cell(r.metric_b);
    else
      s += "," + csv_cell(r.val_objective);
    s += "\n";
  }
  atomic_write_text(path, s);
}

std::vector<std::vector<size_t>> make_batches(const std::vector<size_t>& idx, int batch_size) {
  std::vector<std::vector<size_t>> out;
  for (size_t b = 0; b < idx.size(); b += batch_size) {
    const size_t e = std::min(idx.size(), b + batch_size);
    out.emplace_back(idx.begin() + b, idx.begin() + e);
  }
  return out;
}

void shuffle_indices(std::vector<size_t>& idx, Rng& rng) {
  for (size_t i = idx.size(); i > 1; --i)
    std::swap(idx[i - 1], idx[static_cast<size_t>(rng.uniform_int(0, static_cast<int>(i) - 1))]);
}

RotationMatrix sample_condition(RotationCondition c, Rng& rng, double lo_rad, double hi_rad) {
  switch (c) {
    case RotationCondition::kNone: return RotationMatrix::identity();
    case RotationCondition::kMild: return sample_uniform(rng, lo_rad, hi_rad).first;
    default: return sample_right_angle(rng);
  }
}

// Per-item rotation for validation/evaluation: keyed by (eval_seed, id) so
// draws are independent of batch composition and order.
RotationMatrix item_rotation(RotationCondition c, uint64_t eval_seed, uint64_t id, double lo_rad,
                             double hi_rad) {
  Rng rng(hash_mix(eval_seed, id));
  return sample_condition(c, rng, lo_rad, hi_rad);
}

struct TrunkOut {
  int f; // [B,d]
  int z; // [B,d_out,3]
};

TrunkOut trunk_forward(const SoeModel& model, Tape& tape, int x, Mode mode, uint64_t seed,
                       uint64_t step) {
  TrunkOut out;
  out.f = model.encoder->forward(tape, x, mode, seed, step);
  out.z = model.vn->forward(tape, out.f);
  return out;
}

void check_dims(const Config& cfg, const Dataset& data) {
  if (data.dim != cfg.encoder_input_dim)
    throw ConfigError("encoder.input_dim (" + std::to_string(cfg.encoder_input_dim) +
                      ") does not match the dataset volume dim (" + std::to_string(data.dim) +
                      ")");
}

Tensor gather_batch(const Dataset& data, const std::vector<size_t>& batch) {
  std::vector<const Volume*> vols;
  vols.reserve(batch.size());
  for (size_t i : batch) vols.push_back(&data.phantoms[i].volume);
  return volumes_to_batch(vols);
}

Tensor gather_rotated(const Dataset& data, const std::vector<size_t>& batch,
                      const std::vector<RotationMatrix>& rs) {
  std::vector<Volume> rotated;
  rotated.reserve(batch.size());
  for (size_t i = 0; i < batch.size(); ++i)
    rotated.push_back(rotate(data.phantoms[batch[i]].volume, rs[i]));
  std::vector<const Volume*> ptrs;
  ptrs.reserve(rotated.size());
  for (const Volume& v : rotated) ptrs.push_back(&v);
  return volumes_to_batch(ptrs);
}

} // namespace

std::vector<Parameter*> SoeModel::trunk_parameters() const {
  std::vector<Parameter*> out = encoder->parameters();
  for (Parameter* p : vn->parameters()) out.push_back(p);
  return out;
}

std::vector<Parameter*> SoeModel::all_parameters() const {
  std::vector<Parameter*> out = trunk_parameters();
  if (head_w) {
    out.push_back(head_w);
    out.push_back(head_b);
  }
  return out;
}

SoeModel build_model(const Config& in, bool with_head) {
  Config cfg = in;
  cfg.resolve();
  SoeModel m;
  Rng trunk_rng(hash_mix(cfg.train_seed, kTrunkStream));
  EncoderConfig ec;
  ec.channels = cfg.encoder_channels;
  ec.input_dim = cfg.encoder_input_dim;
  ec.dropout_p = cfg.encoder_dropout_p;
  ec.slope = cfg.encoder_slope;
  m.encoder = std::make_unique<Encoder>(ec, m.store, trunk_rng);

  VNConfig vc;
  vc.d_in = m.encoder->feature_dim();
  vc.d_lift = cfg.vn_d_lift;
  vc.n_layers = cfg.vn_n_layers;
  vc.d_out = cfg.vn_d_out;
  m.vn = std::make_unique<VnStack>(vc, m.store, trunk_rng);

  if (with_head) {
    Rng head_rng(hash_mix(cfg.train_seed, kHeadStream));
    const int d = m.encoder->feature_dim();
    const int classes = cfg.train_task == TaskKind::kClassify ? 2 : 1;
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor w({classes, d});
    for (size_t i = 0; i < w.numel(); ++i)
      w[i] = static_cast<float>(head_rng.uniform(-bound, bound));
    Tensor b({classes});
    for (size_t i = 0; i < b.numel(); ++i)
      b[i] = static_cast<float>(head_rng.uniform(-bound, bound));
    m.head_w = m.store.add("head.weight", std::move(w));
    m.head_b = m.store.add("head.bias", std::move(b));
    if (cfg.train_task == TaskKind::kRegress) {
      m.target_mean = m.store.add_buffer("head.target_mean", {0.0});
      m.target_std = m.store.add_buffer("head.target_std", {1.0});
    }
  }
  return m;
}

PretrainResult pretrain(const Config& in, const Dataset& data, const std::string& outdir) {
  Config cfg = in;
  cfg.resolve();
  check_dims(cfg, data);
  std::filesystem::create_directories(outdir);
  write_resolved(cfg, outdir + "/config.resolved");

  PretrainResult res;
  res.best_ckpt = outdir + "/best.ckpt";
  res.final_ckpt = outdir + "/final.ckpt";
  res.metrics_csv = outdir + "/metrics.csv";

  const double lo = deg2rad(cfg.train_angle_lo_deg), hi = deg2rad(cfg.train_angle_hi_deg);
  if (hi == 0.0) {
    res.warnings.push_back(
        "degenerate configuration: rotation angle range is [0, 0], the equivariance term "
        "vanishes and training is driven by the inverse regularizer alone");
    for (const std::string& w : res.warnings) std::cerr << "warning: " << w << "\n";
  }

  SoeModel model = build_model(cfg, /*with_head=*/false);
  std::vector<Parameter*> params = model.trunk_parameters();
  Sgd opt(cfg.train_momentum);

  std::vector<size_t> train_idx = data.indices_of(Split::kTrain);
  const std::vector<size_t> val_idx = data.indices_of(Split::kVal);
  if (train_idx.empty()) throw ValidationError("pretrain: empty training split");

  Rng order_rng(hash_mix(cfg.train_seed, kOrderStream));
  Rng rot_rng(hash_mix(cfg.train_seed, kRotStream));

  // Validation objective: eval-mode combined loss with per-item fixed
  // rotations. Falls back to the train epoch mean when the val split is
  // empty.
  auto val_objective = [&](double train_l_comb) -> double {
    if (val_idx.empty()) return train_l_comb;
    double total = 0.0;
    for (const auto& batch : make_batches(val_idx, cfg.train_batch_size)) {
      std::vector<RotationMatrix> rs;
      rs.reserve(batch.size());
      for (size_t i : batch)
        rs.push_back(item_rotation(RotationCondition::kMild, cfg.train_eval_seed,
                                   data.items[i].id, lo, hi));
      Tape tape;
      const int x1 = tape.constant(gather_batch(data, batch));
      const int x2 = tape.constant(gather_rotated(data, batch, rs));
      const TrunkOut o1 = trunk_forward(model, tape, x1, Mode::kEval, cfg.train_seed, 0);
      const TrunkOut o2 = trunk_forward(model, tape, x2, Mode::kEval, cfg.train_seed, 0);
      const CombinedLossNodes cl =
          combined_loss_node(tape, o1.z, o2.z, o1.f, o2.f, rs, cfg.loss_lambda, cfg.loss_eps);
      total += cl.values.l_comb * static_cast<double>(batch.size());
    }
    return total / static_cast<double>(val_idx.size());
  };

  write_checkpoint(res.best_ckpt, model.store); // covers epochs = 0
  res.best_val = cfg.train_epochs > 0 ? val_objective(0.0) : 0.0;

  uint64_t step = 0;
  for (int epoch = 0; epoch < cfg.train_epochs; ++epoch) {
    const double lr = lr_schedule(cfg.train_lr_init, epoch, cfg.train_lr_decade_epochs);
    shuffle_indices(train_idx, order_rng);
    double sum_so3 = 0.0, sum_inv = 0.0, sum_comb = 0.0;
    for (const auto& batch : make_batches(train_idx, cfg.train_batch_size)) {
      std::vector<RotationMatrix> rs;
      rs.reserve(batch.size());
      for (size_t i = 0; i < batch.size(); ++i)
        rs.push_back(sample_uniform(rot_rng, lo, hi).first);

      Tape tape;
      const int x1 = tape.constant(gather_batch(data, batch));
      const int x2 = tape.constant(gather_rotated(data, batch, rs));
      const TrunkOut o1 = trunk_forward(model, tape, x1, Mode::kTrain, cfg.train_seed, step);
      const TrunkOut o2 = trunk_forward(model, tape, x2, Mode::kTrain, cfg.train_seed, step);
      const CombinedLossNodes cl =
          combined_loss_node(tape, o1.z, o2.z, o1.f, o2.f, rs, cfg.loss_lambda, cfg.loss_eps);
      if (!std::isfinite(cl.values.l_comb))
        throw NumericError("pretrain: non-finite loss at epoch " + std::to_string(epoch));

      opt.zero_grad(params);
      tape.backward(cl.l_comb);
      opt.step(params, lr);

      const double w = static_cast<double>(batch.size());
      sum_so3 += cl.values.l_so3 * w;
      sum_inv += cl.values.l_inv * w;
      sum_comb += cl.values.l_comb * w;
      ++step;
    }
    const double n = static_cast<double>(train_idx.size());

    EpochRow row;
    row.epoch = epoch;
    row.l_so3 = sum_so3 / n;
    row.l_inv = sum_inv / n;
    row.l_comb = sum_comb / n;
    row.val_objective = val_objective(row.l_comb);
    res.log.push_back(row);
    std::cerr << "pretrain epoch " << epoch << " l_so3 " << row.l_so3 << " l_inv " << row.l_inv
              << " l_comb " << row.l_comb << " val " << row.val_objective << "\n";

    if (row.val_objective < res.best_val) {
      res.best_val = row.val_objective;
      write_checkpoint(res.best_ckpt, model.store);
    }
  }
  write_checkpoint(res.final_ckpt, model.store);
  write_metrics_csv(res.metrics_csv, res.log, /*downstream=*/false, cfg.train_task);
  return res;
}

namespace {

struct TargetScaler {
  double mean = 0.0;
  double stddev = 1.0;

  float standardize(double age) const { return static_cast<float>((age - mean) / stddev); }
  double restore(double y) const { return y * stddev + mean; }
};

TargetScaler fit_scaler(const Dataset& data, const std::vector<size_t>& idx) {
  TargetScaler s;
  if (idx.empty()) return s;
  double sum = 0.0, sumsq = 0.0;
  for (size_t i : idx) {
    sum += data.phantoms[i].age_value;
    sumsq += data.phantoms[i].age_value * data.phantoms[i].age_value;
  }
  s.mean = sum / static_cast<double>(idx.size());
  const double var = std::max(0.0, sumsq / static_cast<double>(idx.size()) - s.mean * s.mean);
  s.stddev = var > 1e-12 ? std::sqrt(var) : 1.0;
  return s;
}

// Eval-mode predictions for a set of items under per-item rotations.
struct Predictions {
  std::vector<int> cls;
  std::vector<double> reg;
  std::vector<int> cls_targets;
  std::vector<double> reg_targets;
};

Predictions predict(const Config& cfg, SoeModel& model, const Dataset& data,
                    const std::vector<size_t>& idx, RotationCondition cond,
                    std::vector<RotationMatrix>* rotations_out) {
  const double lo = deg2rad(cfg.train_angle_lo_deg), hi = deg2rad(cfg.train_angle_hi_deg);
  TargetScaler scaler;
  if (model.target_mean) {
    scaler.mean = model.target_mean->value[0];
    scaler.stddev = model.target_std->value[0];
  }
  Predictions out;
  for (const auto& batch : make_batches(idx, cfg.train_batch_size)) {
    std::vector<RotationMatrix> rs;
    rs.reserve(batch.size());
    for (size_t i : batch) {
      rs.push_back(item_rotation(cond, cfg.train_eval_seed, data.items[i].id, lo, hi));
      if (rotations_out) rotations_out->push_back(rs.back());
    }
    Tape tape;
    const int x = tape.constant(gather_rotated(data, batch, rs));
    const int f = model.encoder->forward(tape, x, Mode::kEval, cfg.train_seed, 0);
    const int logits = tape.linear(f, tape.param(*model.head_w), tape.param(*model.head_b));
    const Tensor& lv = tape.value(logits);
    for (size_t bi = 0; bi < batch.size(); ++bi) {
      if (cfg.train_task == TaskKind::kClassify) {
        out.cls.push_back(lv[bi * 2 + 1] > lv[bi * 2 + 0] ? 1 : 0);
        out.cls_targets.push_back(data.phantoms[batch[bi]].class_label);
      } else {
        out.reg.push_back(scaler.restore(lv[bi]));
        out.reg_targets.push_back(data.phantoms[batch[bi]].age_value);
      }
    }
  }
  return out;
}

EvalResult metrics_of(const Config& cfg, const Predictions& p) {
  EvalResult r;
  r.task = cfg.train_task;
  if (cfg.train_task == TaskKind::kClassify)
    r.cls = classification_metrics(p.cls, p.cls_targets);
  else
    r.reg = regression_metrics(p.reg, p.reg_targets);
  return r;
}

} // namespace

FinetuneResult finetune(const Config& in, const Dataset& data, const std::string& trunk_ckpt,
                        const std::string& outdir) {
  Config cfg = in;
  cfg.resolve();
  check_dims(cfg, data);
  std::filesystem::create_directories(outdir);
  write_resolved(cfg, outdir + "/config.resolved");

  FinetuneResult res;
  res.best_ckpt = outdir + "/best.ckpt";
  res.final_ckpt = outdir + "/final.ckpt";
  res.metrics_csv = outdir + "/metrics.csv";

  SoeModel model = build_model(cfg, /*with_head=*/true);
  if (!trunk_ckpt.empty())
    read_checkpoint(trunk_ckpt, model.store, /*allow_missing=*/true);
  if (cfg.train_freeze_encoder)
    for (Parameter* p : model.trunk_parameters()) p->trainable = false;

  std::vector<Parameter*> params = model.all_parameters();
  Sgd opt(cfg.train_momentum);

  std::vector<size_t> train_idx = data.indices_of(Split::kTrain);
  const std::vector<size_t> val_idx = data.indices_of(Split::kVal);
  if (train_idx.empty()) throw ValidationError("finetune: empty training split");

  const TargetScaler scaler = fit_scaler(data, train_idx);
  if (model.target_mean) {
    model.target_mean->value[0] = scaler.mean;
    model.target_std->value[0] = scaler.stddev;
  }

  const double lo = deg2rad(cfg.train_angle_lo_deg), hi = deg2rad(cfg.train_angle_hi_deg);
  Rng order_rng(hash_mix(cfg.train_seed, kOrderStream));
  Rng rot_rng(hash_mix(cfg.train_seed, kRotStream));

  const bool classify = cfg.train_task == TaskKind::kClassify;
  // classify: maximize val bacc; regress: minimize val mae
  res.best_val_metric = classify ? -1.0 : std::numeric_limits<double>::infinity();

  auto val_metric = [&](double train_task_loss) -> std::pair<double, EvalResult> {
    EvalResult r;
    r.task = cfg.train_task;
    if (val_idx.empty()) return {classify ? -train_task_loss : train_task_loss, r};
    Predictions p = predict(cfg, model, data, val_idx, cfg.train_augment, nullptr);
    r = metrics_of(cfg, p);
    return {classify ? r.cls.bacc : r.reg.mae, r};
  };

  write_checkpoint(res.best_ckpt, model.store);
  const Mode trunk_mode = cfg.train_freeze_encoder ? Mode::kEval : Mode::kTrain;

  uint64_t step = 0;
  for (int epoch = 0; epoch < cfg.train_epochs; ++epoch) {
    const double lr = lr_schedule(cfg.train_lr_init, epoch, cfg.train_lr_decade_epochs);
    shuffle_indices(train_idx, order_rng);
    double sum_task = 0.0, sum_rob = 0.0;
    for (const auto& batch : make_batches(train_idx, cfg.train_batch_size)) {
      std::vector<RotationMatrix> rs;
      std::vector<int> cls_targets;
      std::vector<float> reg_targets;
      rs.reserve(batch.size());
      for (size_t i : batch) {
        rs.push_back(sample_condition(cfg.train_augment, rot_rng, lo, hi));
        if (classify)
          cls_targets.push_back(data.phantoms[i].class_label);
        else
          reg_targets.push_back(scaler.standardize(data.phantoms[i].age_value));
      }

      Tape tape;
      const int x1 = tape.constant(gather_batch(data, batch));
      const int x2 = tape.constant(gather_rotated(data, batch, rs));
      const TrunkOut o1 = trunk_forward(model, tape, x1, trunk_mode, cfg.train_seed, step);
      const TrunkOut o2 = trunk_forward(model, tape, x2, trunk_mode, cfg.train_seed, step);
      // Task loss on the augmented view; with condition "none" the rotated
      // view is bitwise the clean one and this reduces to plain supervised
      // training.
      const int logits = tape.linear(o2.f, tape.param(*model.head_w), tape.param(*model.head_b));
      const DownstreamLossNodes dl = downstream_loss_node(
          tape, logits, o1.z, o2.z, rs, cls_targets, reg_targets, cfg.loss_mu,
          classify ? Task::kClassify : Task::kRegress);
      if (!std::isfinite(dl.values.total))
        throw NumericError("finetune: non-finite loss at epoch " + std::to_string(epoch));

      opt.zero_grad(params);
      tape.backward(dl.total);
      opt.step(params, lr);

      const double w = static_cast<double>(batch.size());
      sum_task += dl.values.task_loss * w;
      sum_rob += dl.values.rob_reg * w;
      ++step;
    }
    const double n = static_cast<double>(train_idx.size());

    EpochRow row;
    row.epoch = epoch;
    row.task_loss = sum_task / n;
    row.rob_reg = sum_rob / n;
    const auto [metric, vr] = val_metric(row.task_loss);
    if (!val_idx.empty()) {
      row.metric_a = classify ? vr.cls.bacc : vr.reg.r2;
      row.metric_b = classify ? vr.cls.f1 : vr.reg.mae;
    }
    res.log.push_back(row);
    std::cerr << "finetune epoch " << epoch << " task " << row.task_loss << " rob " << row.rob_reg
              << " val " << metric << "\n";

    const bool improved = classify ? metric > res.best_val_metric : metric < res.best_val_metric;
    if (improved) {
      res.best_val_metric = metric;
      write_checkpoint(res.best_ckpt, model.store);
    }
  }
  write_checkpoint(res.final_ckpt, model.store);
  write_metrics_csv(res.metrics_csv, res.log, /*downstream=*/true, cfg.train_task);
  return res;
}

EvalResult evaluate_model(const Config& in, SoeModel& model, const Dataset& data,
                          RotationCondition eval_condition, const std::vector<size_t>& idx) {
  Config cfg = in;
  cfg.resolve();
  if (idx.empty()) throw ValidationError("evaluate: empty split");
  Predictions p = predict(cfg, model, data, idx, eval_condition, nullptr);
  return metrics_of(cfg, p);
}

EvalResult evaluate(const Config& in, const Dataset& data, const std::string& ckpt,
                    RotationCondition eval_condition, Split split, const std::string& outdir) {
  Config cfg = in;
  cfg.resolve();
  check_dims(cfg, data);
  const std::vector<size_t> idx = data.indices_of(split);
  if (idx.empty()) throw ValidationError("evaluate: empty split");

  SoeModel model = build_model(cfg, /*with_head=*/true);
  read_checkpoint(ckpt, model.store);

  std::vector<RotationMatrix> rotations;
  Predictions p = predict(cfg, model, data, idx, eval_condition, &rotations);
  const EvalResult r = metrics_of(cfg, p);

  if (!outdir.empty()) {
    std::filesystem::create_directories(outdir);
    write_resolved(cfg, outdir + "/config.resolved");
    AtomicFileWriter w(outdir + "/rotations.bin");
    write_le<uint32_t>(w.stream(), static_cast<uint32_t>(idx.size()));
    for (size_t i = 0; i < idx.size(); ++i) {
      write_le<uint64_t>(w.stream(), data.items[idx[i]].id);
      write_rotation(w.stream(), rotations[i]);
    }
    w.commit();

    std::string s = cfg.train_task == TaskKind::kClassify ? "metric,value\nbacc," : "metric,value\nr2,";
    s += csv_cell(r.primary()) + "\n";
    s += cfg.train_task == TaskKind::kClassify ? "f1," : "mae,";
    s += csv_cell(r.secondary()) + "\n";
    atomic_write_text(outdir + "/metrics.csv", s);
  }
  return r;
}

double equivariance_error(const Config& in, SoeModel& model, const Dataset& data,
                          const std::vector<size_t>& idx) {
  Config cfg = in;
  cfg.resolve();
  if (idx.empty()) throw ValidationError("equivariance_error: empty item set");
  const double lo = deg2rad(cfg.train_angle_lo_deg), hi = deg2rad(cfg.train_angle_hi_deg);

  double num = 0.0, den = 0.0;
  for (const auto& batch : make_batches(idx, cfg.train_batch_size)) {
    std::vector<RotationMatrix> rs;
    rs.reserve(batch.size());
    for (size_t i : batch)
      rs.push_back(item_rotation(RotationCondition::kMild, cfg.train_eval_seed,
                                 data.items[i].id, lo, hi));
    Tape tape;
    const int x1 = tape.constant(gather_batch(data, batch));
    const int x2 = tape.constant(gather_rotated(data, batch, rs));
    const TrunkOut clean = trunk_forward(model, tape, x1, Mode::kEval, cfg.train_seed, 0);
    const TrunkOut rot = trunk_forward(model, tape, x2, Mode::kEval, cfg.train_seed, 0);
    for (size_t bi = 0; bi < batch.size(); ++bi) {
      const VectorFeature z_clean = feature_at(tape.value(clean.z), static_cast<int>(bi));
      const VectorFeature z_rot = feature_at(tape.value(rot.z), static_cast<int>(bi));
      const VectorFeature target = apply_rotation(z_clean, rs[bi]);
      for (size_t k = 0; k < target.v.size(); ++k) {
        const double d = static_cast<double>(z_rot.v[k]) - target.v[k];
        num += d * d;
        den += static_cast<double>(target.v[k]) * target.v[k];
      }
    }
  }
  if (den == 0.0) throw NumericError("equivariance_error: zero-norm reference features");
  return num / den;
}

GridResult robustness_grid(const Config& in, const Dataset& data, const std::string& outdir,
                           const std::string& pretext_ckpt) {
  Config cfg = in;
  cfg.resolve();
  std::filesystem::create_directories(outdir);

  const std::string trunk =
      pretext_ckpt.empty() ? pretrain(cfg, data, outdir + "/pretext").best_ckpt : pretext_ckpt;

  const RotationCondition train_conds[] = {RotationCondition::kMild,
                                           RotationCondition::kRightAngle};
  const RotationCondition eval_conds[] = {RotationCondition::kNone, RotationCondition::kMild,
                                          RotationCondition::kRightAngle};
  const std::vector<size_t> test_idx = data.indices_of(Split::kTest);

  GridResult grid;
  for (RotationCondition tc : train_conds) {
    Config ft_cfg = cfg;
    ft_cfg.train_augment = tc;
    const std::string cname = condition_name(tc);
    const FinetuneResult soe_arm =
        finetune(ft_cfg, data, trunk, outdir + "/ft_" + cname + "_soe");
    const FinetuneResult scratch_arm =
        finetune(ft_cfg, data, "", outdir + "/ft_" + cname + "_scratch");
    for (RotationCondition ec : eval_conds) {
      const EvalResult m_soe = evaluate(ft_cfg, data, soe_arm.best_ckpt, ec, Split::kTest, "");
      const EvalResult m_scr =
          evaluate(ft_cfg, data, scratch_arm.best_ckpt, ec, Split::kTest, "");
      for (int mi = 0; mi < 2; ++mi) {
        GridCell cell;
        cell.train_condition = tc;
        cell.eval_condition = ec;
        cell.metric = mi == 0 ? "bacc" : "f1";
        cell.scratch = mi == 0 ? m_scr.cls.bacc : m_scr.cls.f1;
        cell.soe = mi == 0 ? m_soe.cls.bacc : m_soe.cls.f1;
        cell.pct_increase = 100.0 * (cell.soe - cell.scratch) / cell.scratch;
        grid.cells.push_back(cell);
      }
    }
  }
  write_grid_csv(outdir + "/grid.csv", grid.cells);
  return grid;
}

void write_grid_csv(const std::string& path, const std::vector<GridCell>& cells) {
  std::string s = "train_condition,eval_condition,metric,scratch,soe,pct_increase\n";
  for (const GridCell& c : cells) {
    s += std::string(condition_name(c.train_condition)) + "," + condition_name(c.eval_condition) +
         "," + c.metric + "," + csv_cell(c.scratch) + "," + csv_cell(c.soe) + "," +
         csv_cell(c.pct_increase) + "\n";
  }
  atomic_write_text(path, s);
}

} // namespace soe

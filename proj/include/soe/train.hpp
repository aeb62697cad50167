#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "soe/config.hpp"
#include "soe/encoder.hpp"
#include "soe/losses.hpp"
#include "soe/metrics.hpp"
#include "soe/phantom.hpp"
#include "soe/vector_neuron.hpp"

namespace soe {

// Encoder + VN trunk, optionally a linear prediction head on the encoder's
// scalar feature. Initialization streams are decoupled (trunk / head) so a
// scratch arm and a checkpoint-loaded arm share identical head draws.
struct SoeModel {
  ParamStore store;
  std::unique_ptr<Encoder> encoder;
  std::unique_ptr<VnStack> vn;
  Parameter* head_w = nullptr;
  Parameter* head_b = nullptr;
  Buffer* target_mean = nullptr; // regression target standardization
  Buffer* target_std = nullptr;

  std::vector<Parameter*> trunk_parameters() const;
  std::vector<Parameter*> all_parameters() const;
};

SoeModel build_model(const Config& cfg, bool with_head);

struct EpochRow {
  int epoch = 0;
  double l_so3 = NAN;
  double l_inv = NAN;
  double l_comb = NAN;
  double task_loss = NAN;
  double rob_reg = NAN;
  double metric_a = NAN; // bacc or r2 (validation)
  double metric_b = NAN; // f1 or mae (validation)
  double val_objective = NAN;
};

struct PretrainResult {
  std::string best_ckpt;  // lowest validation objective
  std::string final_ckpt; // state after the last epoch
  std::string metrics_csv;
  std::vector<EpochRow> log;
  std::vector<std::string> warnings;
  double best_val = 0.0;
};

// Eq.-driven pretext training: per item sample a rotation, build the rotated
// view through the volume operator, minimize the combined equivariance +
// inverse-distance objective. Keeps the best-validation checkpoint.
PretrainResult pretrain(const Config& cfg, const Dataset& data, const std::string& outdir);

struct FinetuneResult {
  std::string best_ckpt;
  std::string final_ckpt;
  std::string metrics_csv;
  std::vector<EpochRow> log;
  double best_val_metric = 0.0;
};

// Supervised fine-tuning with the equivariance terms as a robustness
// regularizer. `trunk_ckpt` empty = train from scratch. The augmentation
// condition comes from cfg.train_augment.
FinetuneResult finetune(const Config& cfg, const Dataset& data, const std::string& trunk_ckpt,
                        const std::string& outdir);

struct EvalResult {
  TaskKind task = TaskKind::kClassify;
  ClassificationMetrics cls;
  RegressionMetrics reg;

  double primary() const { return task == TaskKind::kClassify ? cls.bacc : reg.r2; }
  double secondary() const { return task == TaskKind::kClassify ? cls.f1 : reg.mae; }
};

// Eval-mode metrics on a split under a rotation condition; rotations are
// fresh draws keyed by (eval_seed, item id). Writes the sampled rotations to
// outdir/rotations.bin when outdir is non-empty.
EvalResult evaluate(const Config& cfg, const Dataset& data, const std::string& ckpt,
                    RotationCondition eval_condition, Split split, const std::string& outdir);

// Same, on an already-loaded model (used inside training loops).
EvalResult evaluate_model(const Config& cfg, SoeModel& model, const Dataset& data,
                          RotationCondition eval_condition, const std::vector<size_t>& idx);

// Relative equivariance error on the given items (eval mode):
//   E = sum ||VN(f(rot(x,R))) - VN(f(x)).R||_F^2 / sum ||VN(f(x)).R||_F^2
// with per-item rotations keyed by (eval_seed, item id) in the config's
// angle range.
double equivariance_error(const Config& cfg, SoeModel& model, const Dataset& data,
                          const std::vector<size_t>& idx);

struct GridCell {
  RotationCondition train_condition;
  RotationCondition eval_condition;
  std::string metric; // "bacc" or "f1"
  double scratch = 0.0;
  double soe = 0.0;
  double pct_increase = 0.0;
};

struct GridResult {
  std::vector<GridCell> cells; // complete 2 x 3 grid, both metrics
};

// Fig.-style robustness grid: train conditions {mild, right_angle}, eval
// conditions {none, mild, right_angle}; per cell fine-tune one pretrained
// and one scratch arm (shared data order and augmentation streams) and
// report the percentage metric increase. Pass a pretext checkpoint to reuse
// an existing pretraining run; empty pretrains in place.
GridResult robustness_grid(const Config& cfg, const Dataset& data, const std::string& outdir,
                           const std::string& pretext_ckpt = "");

void write_grid_csv(const std::string& path, const std::vector<GridCell>& cells);

} // namespace soe

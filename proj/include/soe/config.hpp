#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace soe {

enum class TaskKind { kClassify, kRegress };
enum class RotationCondition { kNone, kMild, kRightAngle };

const char* task_name(TaskKind t);
TaskKind task_from_name(const std::string& s);
const char* condition_name(RotationCondition c);
RotationCondition condition_from_name(const std::string& s);

// Flat key=value configuration. Unknown keys are rejected; every value is
// range-checked at parse time with the offending line in the diagnostic.
struct Config {
  // data.*
  int data_n_samples = 500;
  int data_dim = 64;
  uint64_t data_seed = 1;

  // encoder.*
  std::array<int, 4> encoder_channels{16, 32, 64, 16};
  int encoder_input_dim = 64;
  double encoder_dropout_p = 0.1;
  double encoder_slope = 0.2;

  // vn.*
  int vn_d_lift = 128;
  int vn_n_layers = 2;
  int vn_d_out = 128;

  // loss.*
  double loss_lambda = 0.01;
  double loss_mu = 0.1;
  double loss_eps = 1e-6;

  // train.*
  int train_epochs = 50;
  int train_batch_size = 32;
  double train_lr_init = 1e-3;
  double train_momentum = 0.9;
  int train_lr_decade_epochs = -1; // -1: resolved to train_epochs
  TaskKind train_task = TaskKind::kClassify;
  RotationCondition train_augment = RotationCondition::kNone;
  double train_angle_lo_deg = 15.0;
  double train_angle_hi_deg = 45.0;
  bool train_freeze_encoder = false;
  uint64_t train_seed = 1;
  uint64_t train_eval_seed = 1234;

  // Materialize derived defaults and run cross-field checks.
  void resolve();
};

// Parse `key = value` lines; '#' starts a comment. Empty text yields all
// defaults. Throws ConfigError with the line number on any problem.
Config parse_config(const std::string& text);

Config read_config(const std::string& path);

// Fully-resolved text form; parsing it back reproduces the same config.
std::string format_resolved(const Config& cfg);

void write_resolved(const Config& cfg, const std::string& path);

} // namespace soe

#include "soe/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "soe/binio.hpp"
#include "soe/error.hpp"
#include "soe/version.hpp"

namespace soe {

const char* task_name(TaskKind t) { return t == TaskKind::kClassify ? "classify" : "regress"; }

TaskKind task_from_name(const std::string& s) {
  if (s == "classify") return TaskKind::kClassify;
  if (s == "regress") return TaskKind::kRegress;
  throw ConfigError("invalid task '" + s + "' (expected classify|regress)");
}

const char* condition_name(RotationCondition c) {
  switch (c) {
    case RotationCondition::kNone: return "none";
    case RotationCondition::kMild: return "mild";
    default: return "right_angle";
  }
}

RotationCondition condition_from_name(const std::string& s) {
  if (s == "none") return RotationCondition::kNone;
  if (s == "mild") return RotationCondition::kMild;
  if (s == "right_angle") return RotationCondition::kRightAngle;
  throw ConfigError("invalid rotation condition '" + s + "' (expected none|mild|right_angle)");
}

void Config::resolve() {
  if (train_lr_decade_epochs < 0) train_lr_decade_epochs = std::max(1, train_epochs);
  if (train_angle_lo_deg > train_angle_hi_deg)
    throw ConfigError("train.angle_lo_deg must be <= train.angle_hi_deg");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(int line_no, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line_no) + ": " + msg);
}

long long parse_int(const std::string& v, int line_no, const std::string& key) {
  try {
    size_t pos = 0;
    const long long x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    fail(line_no, key + ": not an integer: '" + v + "'");
  }
}

uint64_t parse_u64(const std::string& v, int line_no, const std::string& key) {
  try {
    size_t pos = 0;
    const uint64_t x = std::stoull(v, &pos);
    if (pos != v.size() || v[0] == '-') throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    fail(line_no, key + ": not an unsigned integer: '" + v + "'");
  }
}

double parse_real(const std::string& v, int line_no, const std::string& key) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size() || !std::isfinite(x)) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    fail(line_no, key + ": not a number: '" + v + "'");
  }
}

bool parse_bool(const std::string& v, int line_no, const std::string& key) {
  if (v == "true") return true;
  if (v == "false") return false;
  fail(line_no, key + ": expected true|false, got '" + v + "'");
}

void apply_key(Config& cfg, const std::string& key, const std::string& value, int line_no) {
  auto range = [&](bool ok, const std::string& what) {
    if (!ok) fail(line_no, key + ": " + what + " (got '" + value + "')");
  };

  if (key == "data.n_samples") {
    const long long v = parse_int(value, line_no, key);
    range(v >= 0 && v <= 1000000, "must be in [0, 1000000]");
    cfg.data_n_samples = static_cast<int>(v);
  } else if (key == "data.dim") {
    const long long v = parse_int(value, line_no, key);
    range(v == 16 || v == 32 || v == 64, "must be 16, 32 or 64");
    cfg.data_dim = static_cast<int>(v);
  } else if (key == "data.seed") {
    cfg.data_seed = parse_u64(value, line_no, key);
  } else if (key == "encoder.channels") {
    std::stringstream ss(value);
    std::string part;
    std::array<int, 4> ch{};
    int i = 0;
    while (std::getline(ss, part, ',')) {
      if (i >= 4) fail(line_no, key + ": expected exactly 4 widths");
      const long long v = parse_int(trim(part), line_no, key);
      range(v >= 1 && v <= 4096, "widths must be in [1, 4096]");
      ch[i++] = static_cast<int>(v);
    }
    if (i != 4) fail(line_no, key + ": expected exactly 4 widths");
    cfg.encoder_channels = ch;
  } else if (key == "encoder.input_dim") {
    const long long v = parse_int(value, line_no, key);
    range(v == 8 || v == 16 || v == 32 || v == 64, "must be 8, 16, 32 or 64");
    cfg.encoder_input_dim = static_cast<int>(v);
  } else if (key == "encoder.dropout_p") {
    const double v = parse_real(value, line_no, key);
    range(v >= 0.0 && v < 1.0, "must be in [0, 1)");
    cfg.encoder_dropout_p = v;
  } else if (key == "encoder.slope") {
    const double v = parse_real(value, line_no, key);
    range(v > 0.0 && v < 1.0, "must be in (0, 1)");
    cfg.encoder_slope = v;
  } else if (key == "vn.d_lift") {
    const long long v = parse_int(value, line_no, key);
    range(v >= 1 && v <= 4096, "must be in [1, 4096]");
    cfg.vn_d_lift = static_cast<int>(v);
  } else if (key == "vn.n_layers") {
    const long long v = parse_int(value, line_no, key);
    range(v >= 0 && v <= 16, "must be in [0, 16]");
    cfg.vn_n_layers = static_cast<int>(v);
  } else if (key == "vn.d_out") {
    const long long v = parse_int(value, line_no, key);
    range(v >= 1 && v <= 4096, "must be in [1, 4096]");
    cfg.vn_d_out = static_cast<int>(v);
  } else if (key == "loss.lambda") {
    const double v = parse_real(value, line_no, key);
    range(v >= 0.0, "must be >= 0");
    cfg.loss_lambda = v;
  } else if (key == "loss.mu") {
    const double v = parse_real(value, line_no, key);
    range(v >= 0.0, "must be >= 0");
    cfg.loss_mu = v;
  } else if (key == "loss.eps") {
    const double v = parse_real(value, line_no, key);
    range(v > 0.0, "must be > 0");
    cfg.loss_eps = v;
  } else if (key == "train.epochs") {
    const long long v = parse_int(value, line_no, key);
    range(v >= 0 && v <= 50, "must be in [0, 50]");
    cfg.train_epochs = static_cast<int>(v);
  } else if (key == "train.batch_size") {
    const long long v = parse_int(value, line_no, key);
    range(v == 32 || v == 64, "must be 32 or 64");
    cfg.train_batch_size = static_cast<int>(v);
  } else if (key == "train.lr_init") {
    const double v = parse_real(value, line_no, key);
    range(v >= 1e-4 && v <= 1e-2, "must be in [1e-4, 1e-2]");
    cfg.train_lr_init = v;
  } else if (key == "train.momentum") {
    const double v = parse_real(value, line_no, key);
    range(v >= 0.0 && v < 1.0, "must be in [0, 1)");
    cfg.train_momentum = v;
  } else if (key == "train.lr_decade_epochs") {
    const long long v = parse_int(value, line_no, key);
    range(v >= 1 && v <= 1000, "must be in [1, 1000]");
    cfg.train_lr_decade_epochs = static_cast<int>(v);
  } else if (key == "train.task") {
    try {
      cfg.train_task = task_from_name(value);
    } catch (const ConfigError& e) {
      fail(line_no, e.what());
    }
  } else if (key == "train.augment") {
    try {
      cfg.train_augment = condition_from_name(value);
    } catch (const ConfigError& e) {
      fail(line_no, e.what());
    }
  } else if (key == "train.angle_lo_deg") {
    const double v = parse_real(value, line_no, key);
    range(v >= 0.0 && v <= 180.0, "must be in [0, 180]");
    cfg.train_angle_lo_deg = v;
  } else if (key == "train.angle_hi_deg") {
    const double v = parse_real(value, line_no, key);
    range(v >= 0.0 && v <= 180.0, "must be in [0, 180]");
    cfg.train_angle_hi_deg = v;
  } else if (key == "train.freeze_encoder") {
    cfg.train_freeze_encoder = parse_bool(value, line_no, key);
  } else if (key == "train.seed") {
    cfg.train_seed = parse_u64(value, line_no, key);
  } else if (key == "train.eval_seed") {
    cfg.train_eval_seed = parse_u64(value, line_no, key);
  } else {
    fail(line_no, "unknown key '" + key + "'");
  }
}

} // namespace

Config parse_config(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    apply_key(cfg, key, value, line_no);
  }
  cfg.resolve();
  return cfg;
}

Config read_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

namespace {

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

} // namespace

std::string format_resolved(const Config& in) {
  Config cfg = in;
  cfg.resolve();
  std::string s;
  s += std::string("# ") + kVersion + " resolved configuration\n";
  s += "data.n_samples = " + std::to_string(cfg.data_n_samples) + "\n";
  s += "data.dim = " + std::to_string(cfg.data_dim) + "\n";
  s += "data.seed = " + std::to_string(cfg.data_seed) + "\n";
  s += "encoder.channels = " + std::to_string(cfg.encoder_channels[0]) + "," +
       std::to_string(cfg.encoder_channels[1]) + "," + std::to_string(cfg.encoder_channels[2]) +
       "," + std::to_string(cfg.encoder_channels[3]) + "\n";
  s += "encoder.input_dim = " + std::to_string(cfg.encoder_input_dim) + "\n";
  s += "encoder.dropout_p = " + fmt_real(cfg.encoder_dropout_p) + "\n";
  s += "encoder.slope = " + fmt_real(cfg.encoder_slope) + "\n";
  s += "vn.d_lift = " + std::to_string(cfg.vn_d_lift) + "\n";
  s += "vn.n_layers = " + std::to_string(cfg.vn_n_layers) + "\n";
  s += "vn.d_out = " + std::to_string(cfg.vn_d_out) + "\n";
  s += "loss.lambda = " + fmt_real(cfg.loss_lambda) + "\n";
  s += "loss.mu = " + fmt_real(cfg.loss_mu) + "\n";
  s += "loss.eps = " + fmt_real(cfg.loss_eps) + "\n";
  s += "train.epochs = " + std::to_string(cfg.train_epochs) + "\n";
  s += "train.batch_size = " + std::to_string(cfg.train_batch_size) + "\n";
  s += "train.lr_init = " + fmt_real(cfg.train_lr_init) + "\n";
  s += "train.momentum = " + fmt_real(cfg.train_momentum) + "\n";
  s += "train.lr_decade_epochs = " + std::to_string(cfg.train_lr_decade_epochs) + "\n";
  s += std::string("train.task = ") + task_name(cfg.train_task) + "\n";
  s += std::string("train.augment = ") + condition_name(cfg.train_augment) + "\n";
  s += "train.angle_lo_deg = " + fmt_real(cfg.train_angle_lo_deg) + "\n";
  s += "train.angle_hi_deg = " + fmt_real(cfg.train_angle_hi_deg) + "\n";
  s += std::string("train.freeze_encoder = ") + (cfg.train_freeze_encoder ? "true" : "false") +
       "\n";
  s += "train.seed = " + std::to_string(cfg.train_seed) + "\n";
  s += "train.eval_seed = " + std::to_string(cfg.train_eval_seed) + "\n";
  return s;
}

void write_resolved(const Config& cfg, const std::string& path) {
  atomic_write_text(path, format_resolved(cfg));
}

} // namespace soe

#include "soe/vector_neuron.hpp"

#include <cmath>

#include "soe/error.hpp"

namespace soe {

VectorFeature feature_at(const Tensor& t, int b) {
  if (t.rank() != 3 || t.dim(2) != 3) throw ShapeError("feature_at: expected [B,d,3] tensor");
  if (b < 0 || b >= t.dim(0)) throw ShapeError("feature_at: batch index out of range");
  VectorFeature f;
  f.rows = t.dim(1);
  const size_t per = static_cast<size_t>(f.rows) * 3;
  f.v.assign(t.data() + b * per, t.data() + (b + 1) * per);
  return f;
}

void VNConfig::validate() const {
  if (d_in < 1 || d_lift < 1 || d_out < 1)
    throw ValidationError("vn: d_in, d_lift and d_out must be >= 1");
  if (n_layers < 0) throw ValidationError("vn: n_layers must be >= 0");
}

namespace {

Tensor uniform_init(const std::vector<int>& shape, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(shape);
  for (size_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

} // namespace

VnStack::VnStack(const VNConfig& cfg, ParamStore& store, Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  lift_w_ = store.add(prefix + ".lift.weight", uniform_init({3 * cfg_.d_lift, cfg_.d_in}, cfg_.d_in, rng));
  lift_b_ = store.add(prefix + ".lift.bias", uniform_init({3 * cfg_.d_lift}, cfg_.d_in, rng));
  layers_.reserve(cfg_.n_layers);
  for (int i = 0; i < cfg_.n_layers; ++i) {
    const std::string base = prefix + ".layer" + std::to_string(i + 1);
    Layer l;
    l.w = store.add(base + ".W", uniform_init({cfg_.d_lift, cfg_.d_lift}, cfg_.d_lift, rng));
    l.u = store.add(base + ".U", uniform_init({cfg_.d_lift, cfg_.d_lift}, cfg_.d_lift, rng));
    l.k = store.add(base + ".K", uniform_init({cfg_.d_lift, cfg_.d_lift}, cfg_.d_lift, rng));
    layers_.push_back(l);
  }
  out_w_ = store.add(prefix + ".out.W", uniform_init({cfg_.d_out, cfg_.d_lift}, cfg_.d_lift, rng));
}

int VnStack::forward(Tape& tape, int s) const {
  const auto& shape = tape.value(s).shape();
  if (shape.size() != 2 || shape[1] != cfg_.d_in)
    throw ShapeError("vn: expected scalar features [B," + std::to_string(cfg_.d_in) + "], got " +
                     shape_str(shape));
  const int B = shape[0];
  int lifted = tape.linear(s, tape.param(*lift_w_), tape.param(*lift_b_));
  lifted = tape.reshape(lifted, {B, cfg_.d_lift, 3});
  return forward_from_lifted(tape, lifted);
}

int VnStack::forward_from_lifted(Tape& tape, int v) const {
  const auto& shape = tape.value(v).shape();
  if (shape.size() != 3 || shape[1] != cfg_.d_lift || shape[2] != 3)
    throw ShapeError("vn: expected lifted features [B," + std::to_string(cfg_.d_lift) +
                     ",3], got " + shape_str(shape));
  int h = v;
  for (const Layer& l : layers_) {
    h = tape.mix_rows(h, tape.param(*l.w));
    const int q = tape.mix_rows(h, tape.param(*l.u));
    const int k = tape.mix_rows(h, tape.param(*l.k));
    h = tape.vn_gate(q, k);
  }
  return tape.mix_rows(h, tape.param(*out_w_));
}

std::vector<Parameter*> VnStack::parameters() const {
  std::vector<Parameter*> out{lift_w_, lift_b_};
  for (const Layer& l : layers_) {
    out.push_back(l.w);
    out.push_back(l.u);
    out.push_back(l.k);
  }
  out.push_back(out_w_);
  return out;
}

} // namespace soe

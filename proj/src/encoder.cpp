#include "soe/encoder.hpp"

#include <cmath>

#include "soe/error.hpp"

namespace soe {

namespace {

bool is_pow2(int n) { return n > 0 && (n & (n - 1)) == 0; }

Tensor kaiming_uniform(const std::vector<int>& shape, int fan_in, double slope, Rng& rng) {
  const double gain = std::sqrt(2.0 / (1.0 + slope * slope));
  const double bound = gain * std::sqrt(3.0 / fan_in);
  Tensor t(shape);
  for (size_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

Tensor bias_uniform(int n, int fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t({n});
  for (size_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<float>(rng.uniform(-bound, bound));
  return t;
}

} // namespace

void EncoderConfig::validate() const {
  for (int c : channels)
    if (c < 1) throw ValidationError("encoder: channel widths must be >= 1");
  if (!is_pow2(input_dim) || input_dim < 8)
    throw ValidationError("encoder: input_dim must be a power of two >= 8, got " +
                          std::to_string(input_dim));
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    throw ValidationError("encoder: dropout_p must be in [0, 1)");
  if (slope <= 0.0) throw ValidationError("encoder: slope must be positive");
}

int EncoderConfig::feature_dim() const {
  int n = input_dim;
  for (int b = 0; b < 4; ++b)
    if (n >= 2) n /= 2;
  return channels[3] * n * n * n;
}

size_t encoder_param_count_formula(const std::array<int, 4>& channels) {
  size_t total = 0;
  int cin = 1;
  for (int cout : channels) {
    total += static_cast<size_t>(cin) * cout * 27 + 3 * static_cast<size_t>(cout);
    cin = cout;
  }
  return total;
}

Encoder::Encoder(const EncoderConfig& cfg, ParamStore& store, Rng& rng, const std::string& prefix)
    : cfg_(cfg) {
  cfg_.validate();
  int cin = 1;
  for (int b = 0; b < 4; ++b) {
    const int cout = cfg_.channels[b];
    const std::string base = prefix + ".block" + std::to_string(b + 1);
    const int fan_in = cin * 27;
    Block& blk = blocks_[b];
    blk.conv_w = store.add(base + ".conv.weight",
                           kaiming_uniform({cout, cin, 3, 3, 3}, fan_in, cfg_.slope, rng));
    blk.conv_b = store.add(base + ".conv.bias", bias_uniform(cout, fan_in, rng));
    blk.bn_w = store.add(base + ".bn.weight", Tensor::full({cout}, 1.0f));
    blk.bn_b = store.add(base + ".bn.bias", Tensor::zeros({cout}));
    blk.running_mean = store.add_buffer(base + ".bn.running_mean", std::vector<double>(cout, 0.0));
    blk.running_var = store.add_buffer(base + ".bn.running_var", std::vector<double>(cout, 1.0));
    cin = cout;
  }
}

int Encoder::forward(Tape& tape, int x, Mode mode, uint64_t dropout_seed, uint64_t step) const {
  const auto& shape = tape.value(x).shape();
  if (shape.size() != 5 || shape[1] != 1 || shape[2] != cfg_.input_dim ||
      shape[3] != cfg_.input_dim || shape[4] != cfg_.input_dim)
    throw ShapeError("encoder: expected input [B,1," + std::to_string(cfg_.input_dim) +
                     "^3], got " + shape_str(shape));
  const bool train = mode == Mode::kTrain;

  int h = x;
  for (int b = 0; b < 4; ++b) {
    const Block& blk = blocks_[b];
    h = tape.conv3d(h, tape.param(*blk.conv_w), tape.param(*blk.conv_b));
    h = tape.batchnorm3d(h, tape.param(*blk.bn_w), tape.param(*blk.bn_b), blk.running_mean,
                         blk.running_var, train);
    h = tape.leaky_relu(h, cfg_.slope);
    h = tape.dropout(h, cfg_.dropout_p, dropout_seed, static_cast<uint64_t>(b + 1), step, train);
    if (tape.value(h).dim(2) >= 2) h = tape.maxpool3d(h);
  }
  const int B = tape.value(h).dim(0);
  return tape.reshape(h, {B, feature_dim()});
}

size_t Encoder::parameter_count() const {
  size_t n = 0;
  for (const Block& blk : blocks_)
    n += blk.conv_w->value.numel() + blk.conv_b->value.numel() + blk.bn_w->value.numel() +
         blk.bn_b->value.numel();
  return n;
}

std::vector<Parameter*> Encoder::parameters() const {
  std::vector<Parameter*> out;
  for (const Block& blk : blocks_) {
    out.push_back(blk.conv_w);
    out.push_back(blk.conv_b);
    out.push_back(blk.bn_w);
    out.push_back(blk.bn_b);
  }
  return out;
}

Tensor volumes_to_batch(const std::vector<const Volume*>& vols) {
  if (vols.empty()) throw ShapeError("volumes_to_batch: empty batch");
  const int n = vols[0]->n();
  Tensor out({static_cast<int>(vols.size()), 1, n, n, n});
  const size_t per = static_cast<size_t>(n) * n * n;
  for (size_t b = 0; b < vols.size(); ++b) {
    if (vols[b]->n() != n) throw ShapeError("volumes_to_batch: mixed volume dims");
    std::copy(vols[b]->data().begin(), vols[b]->data().end(), out.data() + b * per);
  }
  return out;
}

} // namespace soe

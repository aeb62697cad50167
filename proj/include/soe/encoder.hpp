#pragma once

#include <array>
#include <string>
#include <vector>

#include "soe/params.hpp"
#include "soe/tape.hpp"
#include "soe/volume.hpp"

namespace soe {

enum class Mode { kTrain, kEval };

struct EncoderConfig {
  std::array<int, 4> channels{16, 32, 64, 16};
  int input_dim = 64;
  double dropout_p = 0.1;
  double slope = 0.2;

  void validate() const;
  // Flattened feature length: channels[3] * (spatial after four blocks)^3.
  int feature_dim() const;
};

// Closed-form trainable count: sum over blocks of cin*cout*27 + 3*cout
// (conv weight + conv bias + batchnorm scale/shift).
size_t encoder_param_count_formula(const std::array<int, 4>& channels);

// Four blocks of Conv3d(k=3, pad=1, bias) -> BatchNorm3d -> LeakyReLU ->
// Dropout -> MaxPool3d(2). A block skips its pool once the spatial dim has
// reached 1 (the 8^3 case); dims 16+ pool in every block.
class Encoder {
public:
  Encoder(const EncoderConfig& cfg, ParamStore& store, Rng& rng,
          const std::string& prefix = "encoder");

  // x [B,1,n,n,n] -> [B,d]. `step` keys the dropout streams.
  int forward(Tape& tape, int x, Mode mode, uint64_t dropout_seed, uint64_t step) const;

  const EncoderConfig& config() const { return cfg_; }
  int feature_dim() const { return cfg_.feature_dim(); }
  size_t parameter_count() const; // by direct enumeration

  std::vector<Parameter*> parameters() const;

private:
  struct Block {
    Parameter* conv_w;
    Parameter* conv_b;
    Parameter* bn_w;
    Parameter* bn_b;
    Buffer* running_mean;
    Buffer* running_var;
  };

  EncoderConfig cfg_;
  std::array<Block, 4> blocks_;
};

// Stack volumes into a [B,1,n,n,n] input tensor.
Tensor volumes_to_batch(const std::vector<const Volume*>& vols);

} // namespace soe

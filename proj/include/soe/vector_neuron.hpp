#pragma once

#include <string>
#include <vector>

#include "soe/params.hpp"
#include "soe/tape.hpp"

namespace soe {

// d' x 3 matrix of 3D feature vectors, row-major.
struct VectorFeature {
  int rows = 0;
  std::vector<float> v; // rows * 3

  float at(int r, int c) const { return v[static_cast<size_t>(r) * 3 + c]; }
  float& at(int r, int c) { return v[static_cast<size_t>(r) * 3 + c]; }
};

// Slice item `b` out of a [B,d,3] tensor.
VectorFeature feature_at(const Tensor& t, int b);

struct VNConfig {
  int d_in = 1024;  // scalar feature length from the encoder
  int d_lift = 128; // lifted vector count
  int n_layers = 2; // (linear -> gated nonlinearity) pairs
  int d_out = 128;  // output rows d'

  void validate() const;
};

// Lift d scalar features to d_lift 3-vectors with a learnable linear map,
// then run row-mixing vector-neuron layers. Everything after the lift
// commutes with right-multiplication by a rotation, exactly; the layers
// carry no bias for that reason.
class VnStack {
public:
  VnStack(const VNConfig& cfg, ParamStore& store, Rng& rng, const std::string& prefix = "vn");

  // s [B,d_in] -> [B,d_out,3]
  int forward(Tape& tape, int s) const;

  // Runs the post-lift stack on an already-lifted [B,d_lift,3] input; this
  // is the architecturally equivariant part.
  int forward_from_lifted(Tape& tape, int v) const;

  const VNConfig& config() const { return cfg_; }
  std::vector<Parameter*> parameters() const;

private:
  struct Layer {
    Parameter* w; // row mixer before the nonlinearity
    Parameter* u; // feature map of the gate
    Parameter* k; // direction map of the gate
  };

  VNConfig cfg_;
  Parameter* lift_w_;
  Parameter* lift_b_;
  std::vector<Layer> layers_;
  Parameter* out_w_;
};

} // namespace soe

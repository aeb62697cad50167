#pragma once

#include <vector>

#include "soe/so3.hpp"
#include "soe/tape.hpp"
#include "soe/vector_neuron.hpp"

namespace soe {

struct PretextBatchLoss {
  double l_so3 = 0.0;
  double l_inv = 0.0;
  double l_comb = 0.0;
  double lambda = 0.0;
};

struct DownstreamLoss {
  double task_loss = 0.0;
  double rob_reg = 0.0;
  double mu = 0.0;
  double total = 0.0;
};

enum class Task { kClassify, kRegress };

// ---- plain (non-tape) reference path; used for evaluation and as the
// ---- independent oracle against the tape implementation ----

// Row convention: rows of Z transform as z -> z.R, the same R handed to
// volume rotate. Sum of the two squared Frobenius distances
// ||Z1.R - Z2||^2 + ||Z1 - Z2.R^T||^2.
double so3_loss(const VectorFeature& z1, const VectorFeature& z2, const RotationMatrix& r);

VectorFeature apply_rotation(const VectorFeature& z, const RotationMatrix& r);

PretextBatchLoss combined_loss(const VectorFeature& z1, const VectorFeature& z2,
                               const RotationMatrix& r, const std::vector<float>& f1,
                               const std::vector<float>& f2, double lambda, double eps = 1e-6);

// ---- tape builders (batch means) ----

// z1, z2: [B,d',3] nodes; one rotation per item. Mean over the batch.
int so3_loss_node(Tape& tape, int z1, int z2, const std::vector<RotationMatrix>& rs);

// mean_i 1/(||f1_i - f2_i||^2 + eps); f1, f2: [B,d] nodes.
int inv_reg_node(Tape& tape, int f1, int f2, double eps);

struct CombinedLossNodes {
  int l_so3;
  int l_inv;
  int l_comb;
  PretextBatchLoss values;
};

CombinedLossNodes combined_loss_node(Tape& tape, int z1, int z2, int f1, int f2,
                                     const std::vector<RotationMatrix>& rs, double lambda,
                                     double eps = 1e-6);

struct DownstreamLossNodes {
  int task_loss;
  int rob_reg;
  int total;
  DownstreamLoss values;
};

// Classification: logits [B,C] + integer targets. Regression: pred [B,1]
// + real targets. rob_reg is the Eq.-style equivariance distance between the
// clean and rotated views' VN features.
DownstreamLossNodes downstream_loss_node(Tape& tape, int output, int z1, int z2,
                                         const std::vector<RotationMatrix>& rs,
                                         const std::vector<int>& class_targets,
                                         const std::vector<float>& regress_targets, double mu,
                                         Task task);

} // namespace soe

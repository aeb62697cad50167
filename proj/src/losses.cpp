#include "soe/losses.hpp"

#include "soe/error.hpp"

namespace soe {

VectorFeature apply_rotation(const VectorFeature& z, const RotationMatrix& r) {
  const auto& m = r.entries();
  VectorFeature out;
  out.rows = z.rows;
  out.v.resize(z.v.size());
  for (int i = 0; i < z.rows; ++i) {
    const double a = z.at(i, 0), b = z.at(i, 1), c = z.at(i, 2);
    out.at(i, 0) = static_cast<float>(a * m[0] + b * m[3] + c * m[6]);
    out.at(i, 1) = static_cast<float>(a * m[1] + b * m[4] + c * m[7]);
    out.at(i, 2) = static_cast<float>(a * m[2] + b * m[5] + c * m[8]);
  }
  return out;
}

double so3_loss(const VectorFeature& z1, const VectorFeature& z2, const RotationMatrix& r) {
  if (z1.rows != z2.rows) throw ShapeError("so3_loss: feature row mismatch");
  const VectorFeature z1r = apply_rotation(z1, r);
  const VectorFeature z2rt = apply_rotation(z2, transpose(r));
  double term1 = 0.0, term2 = 0.0;
  for (size_t i = 0; i < z1.v.size(); ++i) {
    const double d1 = static_cast<double>(z1r.v[i]) - z2.v[i];
    const double d2 = static_cast<double>(z1.v[i]) - z2rt.v[i];
    term1 += d1 * d1;
    term2 += d2 * d2;
  }
  return term1 + term2;
}

PretextBatchLoss combined_loss(const VectorFeature& z1, const VectorFeature& z2,
                               const RotationMatrix& r, const std::vector<float>& f1,
                               const std::vector<float>& f2, double lambda, double eps) {
  if (f1.size() != f2.size()) throw ShapeError("combined_loss: scalar feature length mismatch");
  PretextBatchLoss out;
  out.lambda = lambda;
  out.l_so3 = so3_loss(z1, z2, r);
  double d2 = 0.0;
  for (size_t i = 0; i < f1.size(); ++i) {
    const double d = static_cast<double>(f1[i]) - f2[i];
    d2 += d * d;
  }
  out.l_inv = 1.0 / (d2 + eps);
  out.l_comb = out.l_so3 + lambda * out.l_inv;
  return out;
}

int so3_loss_node(Tape& tape, int z1, int z2, const std::vector<RotationMatrix>& rs) {
  const auto& s1 = tape.value(z1).shape();
  const auto& s2 = tape.value(z2).shape();
  if (s1 != s2) throw ShapeError("so3_loss: feature shape mismatch");
  const int B = s1[0];
  const int term1 = tape.frobenius_sq(tape.sub(tape.rotate_vecs(z1, rs, false), z2));
  const int term2 = tape.frobenius_sq(tape.sub(z1, tape.rotate_vecs(z2, rs, true)));
  return tape.mul_scalar(tape.add(term1, term2), 1.0 / B);
}

int inv_reg_node(Tape& tape, int f1, int f2, double eps) {
  const int d2 = tape.row_sumsq(tape.sub(f1, f2)); // [B]
  return tape.mean(tape.reciprocal(tape.add_scalar(d2, eps)));
}

CombinedLossNodes combined_loss_node(Tape& tape, int z1, int z2, int f1, int f2,
                                     const std::vector<RotationMatrix>& rs, double lambda,
                                     double eps) {
  CombinedLossNodes out;
  out.l_so3 = so3_loss_node(tape, z1, z2, rs);
  out.l_inv = inv_reg_node(tape, f1, f2, eps);
  out.l_comb = tape.add(out.l_so3, tape.mul_scalar(out.l_inv, lambda));
  out.values.lambda = lambda;
  out.values.l_so3 = tape.value(out.l_so3).item();
  out.values.l_inv = tape.value(out.l_inv).item();
  out.values.l_comb = tape.value(out.l_comb).item();
  return out;
}

DownstreamLossNodes downstream_loss_node(Tape& tape, int output, int z1, int z2,
                                         const std::vector<RotationMatrix>& rs,
                                         const std::vector<int>& class_targets,
                                         const std::vector<float>& regress_targets, double mu,
                                         Task task) {
  DownstreamLossNodes out;
  if (task == Task::kClassify) {
    out.task_loss = tape.softmax_cross_entropy(output, class_targets);
  } else {
    const auto& shape = tape.value(output).shape();
    if (shape.size() != 2 || shape[1] != 1)
      throw ShapeError("downstream_loss: regression output must be [B,1]");
    if (static_cast<size_t>(shape[0]) != regress_targets.size())
      throw ShapeError("downstream_loss: regression target count mismatch");
    Tensor tgt({shape[0], 1});
    std::copy(regress_targets.begin(), regress_targets.end(), tgt.data());
    out.task_loss = tape.mse(output, std::move(tgt));
  }
  out.rob_reg = so3_loss_node(tape, z1, z2, rs);
  out.total = tape.add(out.task_loss, tape.mul_scalar(out.rob_reg, mu));
  out.values.mu = mu;
  out.values.task_loss = tape.value(out.task_loss).item();
  out.values.rob_reg = tape.value(out.rob_reg).item();
  out.values.total = tape.value(out.total).item();
  return out;
}

} // namespace soe

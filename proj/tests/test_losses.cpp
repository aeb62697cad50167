#include <doctest.h>

#include <cmath>

#include "soe/error.hpp"
#include "soe/losses.hpp"
#include "soe/metrics.hpp"
#include "soe/optim.hpp"

using namespace soe;

namespace {

VectorFeature random_feature(int rows, Rng& rng) {
  VectorFeature f;
  f.rows = rows;
  f.v.resize(static_cast<size_t>(rows) * 3);
  for (auto& x : f.v) x = static_cast<float>(rng.uniform(-1, 1));
  return f;
}

} // namespace

TEST_CASE("so3 loss golden values") {
  SUBCASE("identical features under the identity vanish") {
    Rng rng(1);
    const VectorFeature z = random_feature(4, rng);
    CHECK(so3_loss(z, z, RotationMatrix::identity()) == 0.0);
  }

  SUBCASE("hand-computed quarter-turn pair gives 8") {
    VectorFeature z1{1, {1, 0, 0}};
    VectorFeature z2{1, {0, 1, 0}};
    const RotationMatrix r = RotationMatrix::from_entries_checked({0, -1, 0, 1, 0, 0, 0, 0, 1});
    CHECK(so3_loss(z1, z2, r) == 8.0);
  }

  SUBCASE("exactly equivariant features vanish") {
    Rng rng(2);
    const VectorFeature z1 = random_feature(8, rng);
    const RotationMatrix r = sample_uniform(rng, 0.2, 2.0).first;
    const VectorFeature z2 = apply_rotation(z1, r);
    CHECK(so3_loss(z1, z2, r) < 1e-10);
  }
}

TEST_CASE("so3 loss properties") {
  Rng rng(3);
  SUBCASE("non-negative") {
    for (int i = 0; i < 20; ++i) {
      const VectorFeature z1 = random_feature(6, rng);
      const VectorFeature z2 = random_feature(6, rng);
      const RotationMatrix r = sample_uniform(rng, 0.0, M_PI).first;
      CHECK(so3_loss(z1, z2, r) >= 0.0);
    }
  }
  SUBCASE("swap-and-invert symmetry is exact") {
    for (int i = 0; i < 20; ++i) {
      const VectorFeature z1 = random_feature(6, rng);
      const VectorFeature z2 = random_feature(6, rng);
      const RotationMatrix r = sample_uniform(rng, 0.0, M_PI).first;
      CHECK(so3_loss(z1, z2, r) == so3_loss(z2, z1, transpose(r)));
    }
  }
  SUBCASE("shape mismatch rejected") {
    Rng r2(4);
    const VectorFeature a = random_feature(3, r2);
    const VectorFeature b = random_feature(4, r2);
    CHECK_THROWS_AS(so3_loss(a, b, RotationMatrix::identity()), ShapeError);
  }
}

TEST_CASE("combined loss") {
  Rng rng(5);
  const VectorFeature z1 = random_feature(4, rng);
  const VectorFeature z2 = random_feature(4, rng);
  const RotationMatrix r = sample_uniform(rng, 0.1, 1.0).first;
  std::vector<float> f1{1.0f, 2.0f, 3.0f};
  std::vector<float> f2{1.0f, 2.0f, 3.0f};

  SUBCASE("lambda zero leaves only the equivariance term") {
    const PretextBatchLoss l = combined_loss(z1, z2, r, f1, f2, 0.0);
    CHECK(l.l_comb == l.l_so3);
  }
  SUBCASE("identical scalar features hit the eps floor") {
    const PretextBatchLoss l = combined_loss(z1, z2, r, f1, f2, 0.5);
    CHECK(l.l_inv == doctest::Approx(1e6));
    CHECK(l.l_comb == doctest::Approx(l.l_so3 + 0.5 * 1e6));
  }
  SUBCASE("unit distance gives 1/(1+eps)") {
    f2[0] = 2.0f; // ||f1-f2||^2 = 1
    const PretextBatchLoss l = combined_loss(z1, z2, r, f1, f2, 1.0);
    CHECK(l.l_inv == doctest::Approx(1.0 / (1.0 + 1e-6)));
  }
  SUBCASE("regularizer strictly decreases with distance") {
    double prev = 1e18;
    for (double d : {0.1, 0.5, 1.0, 2.0, 5.0}) {
      f2 = f1;
      f2[0] += static_cast<float>(d);
      const PretextBatchLoss l = combined_loss(z1, z2, r, f1, f2, 1.0);
      CHECK(l.l_inv < prev);
      prev = l.l_inv;
    }
  }
}

TEST_CASE("tape losses match the plain oracle on random batches") {
  Rng rng(6);
  const int B = 3, d = 5;
  Tensor z1({B, d, 3}), z2({B, d, 3}), f1({B, 4}), f2({B, 4});
  for (size_t i = 0; i < z1.numel(); ++i) z1[i] = static_cast<float>(rng.uniform(-1, 1));
  for (size_t i = 0; i < z2.numel(); ++i) z2[i] = static_cast<float>(rng.uniform(-1, 1));
  for (size_t i = 0; i < f1.numel(); ++i) f1[i] = static_cast<float>(rng.uniform(-1, 1));
  for (size_t i = 0; i < f2.numel(); ++i) f2[i] = static_cast<float>(rng.uniform(-1, 1));
  std::vector<RotationMatrix> rs;
  for (int b = 0; b < B; ++b) rs.push_back(sample_uniform(rng, 0.1, 2.5).first);

  Tape tape;
  const CombinedLossNodes cl = combined_loss_node(
      tape, tape.constant(z1), tape.constant(z2), tape.constant(f1), tape.constant(f2), rs, 0.01);

  double so3_sum = 0.0, inv_sum = 0.0;
  for (int b = 0; b < B; ++b) {
    so3_sum += so3_loss(feature_at(z1, b), feature_at(z2, b), rs[b]);
    std::vector<float> f1b(f1.data() + b * 4, f1.data() + (b + 1) * 4);
    std::vector<float> f2b(f2.data() + b * 4, f2.data() + (b + 1) * 4);
    double d2 = 0;
    for (int i = 0; i < 4; ++i)
      d2 += (static_cast<double>(f1b[i]) - f2b[i]) * (static_cast<double>(f1b[i]) - f2b[i]);
    inv_sum += 1.0 / (d2 + 1e-6);
  }
  CHECK(cl.values.l_so3 == doctest::Approx(so3_sum / B).epsilon(1e-4));
  CHECK(cl.values.l_inv == doctest::Approx(inv_sum / B).epsilon(1e-4));
  CHECK(cl.values.l_comb ==
        doctest::Approx(cl.values.l_so3 + 0.01 * cl.values.l_inv).epsilon(1e-6));
}

TEST_CASE("combined loss gradient against finite differences") {
  Rng rng(7);
  const int B = 2, d = 4, fdim = 3;
  BasicParameter<double> z1("z1", BasicTensor<double>({B, d, 3}));
  BasicParameter<double> f1("f1", BasicTensor<double>({B, fdim}));
  BasicTensor<double> z2({B, d, 3}), f2({B, fdim});
  for (size_t i = 0; i < z1.value.numel(); ++i) z1.value[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < z2.numel(); ++i) z2[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < f1.value.numel(); ++i) f1.value[i] = rng.uniform(-1, 1);
  for (size_t i = 0; i < f2.numel(); ++i) f2[i] = rng.uniform(-1, 1);
  std::vector<RotationMatrix> rs;
  for (int b = 0; b < B; ++b) rs.push_back(sample_uniform(rng, 0.1, 2.0).first);

  const double err = grad_check<double>(
      [&](BasicTape<double>& t) {
        const int term1 = t.frobenius_sq(
            t.sub(t.rotate_vecs(t.param(z1), rs, false), t.constant(z2)));
        const int term2 =
            t.frobenius_sq(t.sub(t.param(z1), t.rotate_vecs(t.constant(z2), rs, true)));
        const int so3 = t.mul_scalar(t.add(term1, term2), 1.0 / B);
        const int inv = t.mean(
            t.reciprocal(t.add_scalar(t.row_sumsq(t.sub(t.param(f1), t.constant(f2))), 1e-6)));
        return t.add(so3, t.mul_scalar(inv, 0.01));
      },
      {&z1, &f1});
  CHECK(err < 1e-3);
}

TEST_CASE("downstream loss") {
  Rng rng(8);
  const int B = 4;
  Tensor z1({B, 3, 3}), z2({B, 3, 3});
  for (size_t i = 0; i < z1.numel(); ++i) z1[i] = static_cast<float>(rng.uniform(-1, 1));
  for (size_t i = 0; i < z2.numel(); ++i) z2[i] = static_cast<float>(rng.uniform(-1, 1));
  std::vector<RotationMatrix> rs(B, RotationMatrix::identity());

  SUBCASE("mu zero reduces the total to the task loss") {
    Tensor logits({B, 2});
    for (size_t i = 0; i < logits.numel(); ++i) logits[i] = static_cast<float>(rng.uniform(-1, 1));
    Tape tape;
    const DownstreamLossNodes dl =
        downstream_loss_node(tape, tape.constant(logits), tape.constant(z1), tape.constant(z2),
                             rs, {0, 1, 0, 1}, {}, 0.0, Task::kClassify);
    CHECK(dl.values.total == dl.values.task_loss);
    CHECK(dl.values.rob_reg >= 0.0);
  }

  SUBCASE("wide logit margins drive cross entropy to zero") {
    Tensor logits({B, 2});
    const std::vector<int> targets{0, 1, 1, 0};
    for (int b = 0; b < B; ++b) {
      logits[b * 2 + targets[b]] = 10.0f;
      logits[b * 2 + (1 - targets[b])] = 0.0f;
    }
    Tape tape;
    const DownstreamLossNodes dl =
        downstream_loss_node(tape, tape.constant(logits), tape.constant(z1), tape.constant(z2),
                             rs, targets, {}, 0.1, Task::kClassify);
    CHECK(dl.values.task_loss < 1e-4);
  }

  SUBCASE("perfect regression prediction has zero task loss") {
    Tensor pred({B, 1}, {0.5f, -1.0f, 2.0f, 0.0f});
    Tape tape;
    const DownstreamLossNodes dl =
        downstream_loss_node(tape, tape.constant(pred), tape.constant(z1), tape.constant(z2), rs,
                             {}, {0.5f, -1.0f, 2.0f, 0.0f}, 0.3, Task::kRegress);
    CHECK(dl.values.task_loss == 0.0);
    CHECK(dl.values.total == doctest::Approx(0.3 * dl.values.rob_reg));
  }
}

TEST_CASE("classification metrics") {
  SUBCASE("perfect predictions") {
    const auto m = classification_metrics({1, 0, 1, 0}, {1, 0, 1, 0});
    CHECK(m.bacc == 1.0);
    CHECK(m.f1 == 1.0);
  }
  SUBCASE("hand-counted confusion") {
    // preds [1,0,1,0] vs targets [1,0,0,0]: recall+ = 1, recall- = 2/3
    const auto m = classification_metrics({1, 0, 1, 0}, {1, 0, 0, 0});
    CHECK(m.bacc == doctest::Approx(5.0 / 6.0));
    CHECK(m.f1 == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("degenerate inputs") {
    CHECK_THROWS_AS(classification_metrics({}, {}), MetricError);
    CHECK_THROWS_AS(classification_metrics({1, 1}, {1, 1}), MetricError); // class 0 absent
    CHECK_THROWS_AS(classification_metrics({2, 0}, {1, 0}), MetricError);
  }
  SUBCASE("no positive predictions give F1 = 0") {
    const auto m = classification_metrics({0, 0, 0, 0}, {1, 0, 1, 0});
    CHECK(m.f1 == 0.0);
    CHECK(m.bacc == 0.5);
  }
}

TEST_CASE("regression metrics") {
  SUBCASE("constant mean prediction has R2 = 0") {
    const std::vector<double> targets{1.0, 2.0, 3.0, 4.0};
    const std::vector<double> preds(4, 2.5);
    const auto m = regression_metrics(preds, targets);
    CHECK(m.r2 == doctest::Approx(0.0));
  }
  SUBCASE("perfect prediction") {
    const std::vector<double> t{1.0, 2.0, 3.0};
    const auto m = regression_metrics(t, t);
    CHECK(m.r2 == 1.0);
    CHECK(m.mae == 0.0);
  }
  SUBCASE("constant targets are undefined") {
    CHECK_THROWS_AS(regression_metrics({1.0, 2.0}, {3.0, 3.0}), MetricError);
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(regression_metrics({}, {}), MetricError); }
}

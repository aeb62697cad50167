#include <doctest.h>

#include "soe/encoder.hpp"
#include "soe/error.hpp"

using namespace soe;

TEST_CASE("default encoder hits the published parameter count") {
  EncoderConfig cfg;
  ParamStore store;
  Rng rng(1);
  Encoder enc(cfg, store, rng);
  CHECK(enc.parameter_count() == 97584);
  CHECK(store.trainable_count() == 97584);
  CHECK(encoder_param_count_formula(cfg.channels) == 97584);
  // per-block contributions
  CHECK(encoder_param_count_formula({16, 32, 64, 16}) == 480 + 13920 + 55488 + 27696);
}

TEST_CASE("closed-form count matches enumeration for other plans") {
  SUBCASE("unit widths") {
    EncoderConfig cfg;
    cfg.channels = {1, 1, 1, 1};
    ParamStore store;
    Rng rng(2);
    Encoder enc(cfg, store, rng);
    CHECK(enc.parameter_count() == 120);
    CHECK(encoder_param_count_formula(cfg.channels) == 120);
  }
  SUBCASE("random plans") {
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      EncoderConfig cfg;
      for (auto& c : cfg.channels) c = rng.uniform_int(1, 24);
      ParamStore store;
      Rng init(4);
      Encoder enc(cfg, store, init);
      CHECK(enc.parameter_count() == encoder_param_count_formula(cfg.channels));
    }
  }
}

TEST_CASE("feature dimension follows the halvings") {
  EncoderConfig cfg;
  cfg.input_dim = 64;
  CHECK(cfg.feature_dim() == 16 * 4 * 4 * 4); // 1024
  cfg.input_dim = 16;
  CHECK(cfg.feature_dim() == 16);
  cfg.input_dim = 8; // final pool skipped at spatial dim 1
  CHECK(cfg.feature_dim() == 16);
}

TEST_CASE("config validation") {
  EncoderConfig cfg;
  cfg.input_dim = 24;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.input_dim = 4;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.input_dim = 16;
  cfg.channels[2] = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("forward pass shapes and determinism") {
  EncoderConfig cfg;
  cfg.input_dim = 16;
  ParamStore store;
  Rng rng(5);
  Encoder enc(cfg, store, rng);

  Volume v = Volume::zeros(16);
  Rng data_rng(6);
  for (float& x : v.data()) x = static_cast<float>(data_rng.uniform(0, 1));

  auto forward_once = [&]() {
    Tape tape;
    const int x = tape.constant(volumes_to_batch({&v}));
    const int f = enc.forward(tape, x, Mode::kEval, 1, 0);
    return tape.value(f).vec();
  };
  const auto f1 = forward_once();
  CHECK(f1.size() == 16);
  CHECK(f1 == forward_once()); // eval mode is bitwise repeatable

  SUBCASE("zero input depends on biases only") {
    Volume z1 = Volume::zeros(16);
    Tape tape;
    const int a = tape.constant(volumes_to_batch({&z1}));
    const int b = tape.constant(volumes_to_batch({&z1}));
    const auto fa = tape.value(enc.forward(tape, a, Mode::kEval, 1, 0)).vec();
    const auto fb = tape.value(enc.forward(tape, b, Mode::kEval, 99, 7)).vec();
    CHECK(fa == fb);
  }

  SUBCASE("dim mismatch rejected") {
    Volume small = Volume::zeros(8);
    Tape tape;
    const int x = tape.constant(volumes_to_batch({&small}));
    CHECK_THROWS_AS(enc.forward(tape, x, Mode::kEval, 1, 0), ShapeError);
  }
}

TEST_CASE("spatial dims halve per block") {
  // watch intermediate shapes via a stepwise forward at 64^3
  EncoderConfig cfg;
  ParamStore store;
  Rng rng(7);
  Encoder enc(cfg, store, rng);
  Volume v = Volume::zeros(64);
  Tape tape;
  const int x = tape.constant(volumes_to_batch({&v}));
  const int f = enc.forward(tape, x, Mode::kEval, 1, 0);
  CHECK(tape.value(f).shape() == std::vector<int>{1, 1024});
}

TEST_CASE("parameter names follow the checkpoint contract") {
  EncoderConfig cfg;
  ParamStore store;
  Rng rng(8);
  Encoder enc(cfg, store, rng);
  CHECK(store.find("encoder.block1.conv.weight") != nullptr);
  CHECK(store.find("encoder.block4.bn.bias") != nullptr);
  CHECK(store.find_buffer("encoder.block2.bn.running_mean") != nullptr);
  CHECK(store.find_buffer("encoder.block3.bn.running_var") != nullptr);
}

#include <doctest.h>

#include <filesystem>

#include "soe/config.hpp"
#include "soe/error.hpp"

using namespace soe;

TEST_CASE("empty config yields all defaults") {
  const Config cfg = parse_config("");
  CHECK(cfg.data_n_samples == 500);
  CHECK(cfg.data_dim == 64);
  CHECK(cfg.encoder_channels == std::array<int, 4>{16, 32, 64, 16});
  CHECK(cfg.loss_lambda == 0.01);
  CHECK(cfg.loss_mu == 0.1);
  CHECK(cfg.train_epochs == 50);
  CHECK(cfg.train_batch_size == 32);
  CHECK(cfg.train_lr_decade_epochs == 50); // materialized from epochs
  CHECK(cfg.train_task == TaskKind::kClassify);
}

TEST_CASE("comments, blank lines and whitespace") {
  const Config cfg = parse_config(
      "# a comment\n"
      "\n"
      "  train.epochs = 10   # trailing comment\n"
      "loss.lambda=0.5\n");
  CHECK(cfg.train_epochs == 10);
  CHECK(cfg.loss_lambda == 0.5);
  CHECK(cfg.train_lr_decade_epochs == 10);
}

TEST_CASE("diagnostics name the line and key") {
  SUBCASE("unknown key") {
    try {
      parse_config("\nnot.a.key = 3\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line 2") != std::string::npos);
      CHECK(msg.find("not.a.key") != std::string::npos);
    }
  }
  SUBCASE("range error names the key") {
    try {
      parse_config("loss.lambda = -1\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("loss.lambda") != std::string::npos);
    }
  }
  SUBCASE("type error") {
    CHECK_THROWS_AS(parse_config("train.epochs = abc\n"), ConfigError);
  }
  SUBCASE("missing equals") { CHECK_THROWS_AS(parse_config("train.epochs 5\n"), ConfigError); }
  SUBCASE("batch size restricted to the published pair") {
    CHECK_THROWS_AS(parse_config("train.batch_size = 16\n"), ConfigError);
    CHECK_NOTHROW(parse_config("train.batch_size = 64\n"));
  }
  SUBCASE("lr range per the published sweep") {
    CHECK_THROWS_AS(parse_config("train.lr_init = 0.5\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("train.lr_init = 1e-5\n"), ConfigError);
  }
  SUBCASE("epochs capped at 50") {
    CHECK_THROWS_AS(parse_config("train.epochs = 51\n"), ConfigError);
  }
  SUBCASE("angle ordering enforced") {
    CHECK_THROWS_AS(parse_config("train.angle_lo_deg = 90\ntrain.angle_hi_deg = 45\n"),
                    ConfigError);
  }
  SUBCASE("enums validated") {
    CHECK_THROWS_AS(parse_config("train.task = cluster\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("train.augment = heavy\n"), ConfigError);
  }
  SUBCASE("channels need exactly four entries") {
    CHECK_THROWS_AS(parse_config("encoder.channels = 1,2,3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("encoder.channels = 1,2,3,4,5\n"), ConfigError);
  }
}

TEST_CASE("resolved round trip is lossless") {
  const Config cfg = parse_config(
      "data.dim = 16\n"
      "encoder.input_dim = 16\n"
      "train.epochs = 12\n"
      "train.lr_init = 0.00317\n"
      "loss.lambda = 0.037\n"
      "train.task = regress\n"
      "train.augment = right_angle\n"
      "train.freeze_encoder = true\n");
  const std::string text = format_resolved(cfg);
  const Config back = parse_config(text);
  CHECK(format_resolved(back) == text);
  CHECK(back.train_task == TaskKind::kRegress);
  CHECK(back.train_augment == RotationCondition::kRightAngle);
  CHECK(back.train_freeze_encoder);
  CHECK(back.train_lr_init == cfg.train_lr_init);

  const std::string path =
      (std::filesystem::temp_directory_path() / "soe_cfg_test.cfg").string();
  write_resolved(cfg, path);
  const Config from_file = read_config(path);
  CHECK(format_resolved(from_file) == text);
  std::filesystem::remove(path);
}

// End-to-end CLI checks: exit codes, the rotate oracle, and a tiny
// gen-data -> pretrain -> finetune -> evaluate pipeline through real files.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "soe/binio.hpp"
#include "soe/volume.hpp"

using namespace soe;

namespace {

const std::string kCli = SOE_CLI_PATH;

int run(const std::string& args) {
  const std::string cmd = kCli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string temp_dir(const std::string& name) {
  const std::string dir = (std::filesystem::temp_directory_path() / name).string();
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

} // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(run("") == 1);
  CHECK(run("no-such-subcommand") == 1);
  CHECK(run("rotate --bogus-flag x") == 1);
  CHECK(run("--version") == 0);
  CHECK(run("--help") == 0);
}

TEST_CASE("runtime errors exit 2") {
  CHECK(run("inspect-ckpt --ckpt /nonexistent.ckpt") == 2);
  CHECK(run("rotate --in /nonexistent.vol --out /tmp/x.vol") == 2);
}

TEST_CASE("rotate subcommand matches the permutation oracle") {
  const std::string dir = temp_dir("soe_cli_rotate");
  const int n = 9, c = 4;
  Volume v = Volume::zeros(n);
  v.at(0, c, c) = 1.0f;
  write_volume(dir + "/in.vol", v);

  CHECK(run("rotate --in " + dir + "/in.vol --out " + dir + "/out.vol --axis 0,0,1 --degrees 90") ==
        0);
  const Volume out = read_volume(dir + "/out.vol");

  // integer oracle: src = R^T(out - c) + c for R = Rz(90)
  Volume expect = Volume::zeros(n);
  expect.at(c, 0, c) = 1.0f;
  CHECK(out == expect);
  std::filesystem::remove_all(dir);
}

TEST_CASE("gradcheck subcommand passes at dim 8") {
  CHECK(run("gradcheck --dim 8 --samples 25 --seed 3") == 0);
}

TEST_CASE("tiny pipeline through the filesystem") {
  const std::string dir = temp_dir("soe_cli_pipeline");
  {
    std::ofstream cfg(dir + "/run.cfg");
    cfg << "data.dim = 16\nencoder.input_dim = 16\n"
        << "vn.d_lift = 8\nvn.d_out = 8\nvn.n_layers = 1\n"
        << "train.epochs = 1\ntrain.batch_size = 32\n";
  }
  CHECK(run("gen-data --config " + dir + "/run.cfg --out " + dir + "/data --n 14 --dim 16") == 0);
  CHECK(std::filesystem::exists(dir + "/data/manifest.csv"));
  CHECK(std::filesystem::exists(dir + "/data/000000.vol"));
  CHECK(std::filesystem::exists(dir + "/data/config.resolved"));

  CHECK(run("pretrain --config " + dir + "/run.cfg --data " + dir + "/data --out " + dir +
            "/pre --seed 3") == 0);
  CHECK(std::filesystem::exists(dir + "/pre/best.ckpt"));
  CHECK(std::filesystem::exists(dir + "/pre/metrics.csv"));
  CHECK(std::filesystem::exists(dir + "/pre/config.resolved"));

  CHECK(run("inspect-ckpt --ckpt " + dir + "/pre/best.ckpt") == 0);

  CHECK(run("finetune --config " + dir + "/run.cfg --data " + dir + "/data --ckpt " + dir +
            "/pre/best.ckpt --out " + dir + "/ft --seed 3 --task classify --augment mild") == 0);
  CHECK(std::filesystem::exists(dir + "/ft/best.ckpt"));

  CHECK(run("evaluate --config " + dir + "/run.cfg --data " + dir + "/data --ckpt " + dir +
            "/ft/best.ckpt --out " + dir + "/eval --condition none --split test") == 0);
  CHECK(std::filesystem::exists(dir + "/eval/metrics.csv"));
  CHECK(std::filesystem::exists(dir + "/eval/rotations.bin"));

  // config errors are runtime failures, not usage failures
  {
    std::ofstream bad(dir + "/bad.cfg");
    bad << "unknown.key = 1\n";
  }
  CHECK(run("gen-data --config " + dir + "/bad.cfg --out " + dir + "/d2") == 2);
  std::filesystem::remove_all(dir);
}

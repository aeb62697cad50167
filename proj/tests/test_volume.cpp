#include <doctest.h>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "soe/error.hpp"
#include "soe/rng.hpp"
#include "soe/volume.hpp"

using namespace soe;

namespace {

// Independent integer-exact oracle: for a signed permutation rotation P
// (det +1), the backward warp src = P^T (out - c) + c lands on exact voxels.
// Doubled coordinates keep everything integral for even n too.
Volume permutation_rotate(const Volume& v, const std::array<int, 9>& p) {
  const int n = v.n();
  Volume out = Volume::zeros(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const int u0 = 2 * i - (n - 1), u1 = 2 * j - (n - 1), u2 = 2 * k - (n - 1);
        const int s0 = p[0] * u0 + p[3] * u1 + p[6] * u2;
        const int s1 = p[1] * u0 + p[4] * u1 + p[7] * u2;
        const int s2 = p[2] * u0 + p[5] * u1 + p[8] * u2;
        out.at(i, j, k) = v.at((s0 + n - 1) / 2, (s1 + n - 1) / 2, (s2 + n - 1) / 2);
      }
  return out;
}

// All 24 proper signed permutation matrices.
std::vector<std::array<int, 9>> all_right_angle_orientations() {
  std::vector<std::array<int, 9>> out;
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (const auto& perm : perms)
    for (int sx = -1; sx <= 1; sx += 2)
      for (int sy = -1; sy <= 1; sy += 2)
        for (int sz = -1; sz <= 1; sz += 2) {
          std::array<int, 9> m{};
          const int signs[3] = {sx, sy, sz};
          for (int r = 0; r < 3; ++r) m[r * 3 + perm[r]] = signs[r];
          const int det = m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
                          m[2] * (m[3] * m[7] - m[4] * m[6]);
          if (det == 1) out.push_back(m);
        }
  return out;
}

Volume random_volume(int n, uint64_t seed) {
  Rng rng(seed);
  Volume v = Volume::zeros(n);
  for (float& x : v.data()) x = static_cast<float>(rng.uniform(-1.0, 2.0));
  return v;
}

Volume gaussian_blobs(int n, uint64_t seed, int blobs = 3) {
  Rng rng(seed);
  Volume v = Volume::zeros(n);
  const double c = (n - 1) / 2.0;
  std::vector<std::array<double, 4>> params;
  for (int b = 0; b < blobs; ++b)
    params.push_back({rng.uniform(-0.3, 0.3) * n, rng.uniform(-0.3, 0.3) * n,
                      rng.uniform(-0.3, 0.3) * n, rng.uniform(0.1, 0.25) * n});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double val = 0.0;
        for (const auto& p : params) {
          const double dx = i - c - p[0], dy = j - c - p[1], dz = k - c - p[2];
          val += std::exp(-(dx * dx + dy * dy + dz * dz) / (2 * p[3] * p[3]));
        }
        v.at(i, j, k) = static_cast<float>(val);
      }
  return v;
}

} // namespace

TEST_CASE("coordinate grid centering") {
  SUBCASE("odd n") {
    const CoordGrid g = to_coords(Volume::zeros(3));
    CHECK(g.at(1, 1, 1)[0] == 0.0);
    CHECK(g.at(1, 1, 1)[1] == 0.0);
    CHECK(g.at(1, 1, 1)[2] == 0.0);
    CHECK(g.at(0, 0, 0)[0] == -1.0);
    CHECK(g.at(0, 0, 0)[1] == -1.0);
    CHECK(g.at(0, 0, 0)[2] == -1.0);
  }
  SUBCASE("even n") {
    const CoordGrid g = to_coords(Volume::zeros(4));
    CHECK(g.at(0, 0, 0)[0] == -1.5);
    CHECK(g.at(3, 3, 3)[0] == 1.5);
  }
  SUBCASE("negation symmetry") {
    const CoordGrid g = to_coords(Volume::zeros(5));
    const int n = 5;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int c = 0; c < 3; ++c)
            CHECK(g.at(i, j, k)[c] == -g.at(n - 1 - i, n - 1 - j, n - 1 - k)[c]);
  }
}

TEST_CASE("identity rotation is a bitwise no-op") {
  for (int n : {8, 9}) {
    const Volume v = random_volume(n, 100 + n);
    CHECK(rotate(v, RotationMatrix::identity()) == v);
    CHECK(rotate(v, from_axis_angle({{0, 1, 0}, 0.0})) == v);
  }
}

TEST_CASE("quarter turn moves a delta voxel to the permuted index") {
  const int n = 9;
  const int c = (n - 1) / 2;
  Volume v = Volume::zeros(n);
  v.at(0, c, c) = 1.0f;
  const Volume out = rotate(v, from_axis_angle({{0, 0, 1}, M_PI / 2}));
  // column convention: source = R^T out, so the spike at x=-c lands at y=-c
  const Volume expect = permutation_rotate(v, {0, -1, 0, 1, 0, 0, 0, 0, 1});
  CHECK(out == expect);
  double total = 0.0;
  for (float x : out.data()) total += x;
  CHECK(total == 1.0);
}

TEST_CASE("all 24 right-angle orientations match the permutation oracle bitwise") {
  const auto orientations = all_right_angle_orientations();
  REQUIRE(orientations.size() == 24);
  for (int n : {8, 9}) {
    const Volume v = random_volume(n, 200 + n);
    for (const auto& p : orientations) {
      std::array<double, 9> m;
      for (int i = 0; i < 9; ++i) m[i] = p[i];
      const RotationMatrix r = RotationMatrix::from_entries_checked(m);
      CHECK(rotate(v, r) == permutation_rotate(v, p));
    }
  }
}

TEST_CASE("Rodrigues right angles also hit the oracle bitwise") {
  // the matrix entries carry ~1e-16 residue; the sampler must still resolve
  // exact voxel fetches
  const std::array<std::array<double, 3>, 3> axes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  const Volume v = random_volume(8, 33);
  for (int axis = 0; axis < 3; ++axis)
    for (int q = 1; q < 4; ++q) {
      const RotationMatrix rod = from_axis_angle({axes[axis], q * M_PI / 2});
      std::array<int, 9> p;
      for (int i = 0; i < 9; ++i) p[i] = static_cast<int>(std::lround(rod.entries()[i]));
      CHECK(rotate(v, rod) == permutation_rotate(v, p));
    }
}

TEST_CASE("oblique rotation loses corner mass to zero fill") {
  const int n = 16;
  const Volume ones(n, std::vector<float>(n * n * n, 1.0f));
  const RotationMatrix r = from_axis_angle({{0, 0, 1}, M_PI / 4});
  const Volume out = rotate(ones, r);

  double total = 0.0;
  for (float x : out.data()) total += x;
  CHECK(total < static_cast<double>(n) * n * n);

  // independent count of voxels whose source coordinate leaves the grid;
  // sources beyond one voxel outside cannot receive any corner contribution
  const RotationMatrix rt = transpose(r);
  const double c = (n - 1) / 2.0;
  int outside = 0, fully_gone = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const auto s = rt.apply({i - c, j - c, k - c});
        bool out = false, gone = false;
        for (double x : s) {
          if (x + c < 0 || x + c > n - 1) out = true;
          if (x + c <= -1 || x + c >= n) gone = true;
        }
        outside += out;
        fully_gone += gone;
      }
  CHECK(outside > 0);
  CHECK(fully_gone > 0);
  CHECK(total <= n * n * n - fully_gone + 1e-6);
}

TEST_CASE("round-trip rotation is accurate in the interior") {
  Rng rng(55);
  const int n = 16;
  const Volume v = gaussian_blobs(n, 404);
  float vmax = 0.0f;
  for (float x : v.data()) vmax = std::max(vmax, std::abs(x));

  for (int trial = 0; trial < 5; ++trial) {
    const RotationMatrix r = sample_uniform(rng, 0.1, M_PI).first;
    const Volume back = rotate(rotate(v, r), transpose(r));

    // interior = source stays >= 2 voxels from every boundary under both warps
    const RotationMatrix rt = transpose(r);
    const double c = (n - 1) / 2.0;
    double err_sum = 0.0;
    int count = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          const auto s1 = rt.apply({i - c, j - c, k - c});
          const auto s2 = r.apply({i - c, j - c, k - c});
          auto interior = [&](const std::array<double, 3>& s) {
            for (double x : s)
              if (x + c < 2.0 || x + c > n - 3.0) return false;
            return true;
          };
          if (interior(s1) && interior(s2)) {
            err_sum += std::abs(back.at(i, j, k) - v.at(i, j, k));
            ++count;
          }
        }
    REQUIRE(count > 0);
    CHECK(err_sum / count < 0.02 * vmax);
  }
}

TEST_CASE("trilinear output range is a convex hull with zero") {
  Rng rng(66);
  const Volume v = random_volume(9, 77);
  float lo = 0.0f, hi = 0.0f;
  for (float x : v.data()) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  for (int trial = 0; trial < 10; ++trial) {
    const Volume out = rotate(v, sample_uniform(rng, 0.0, M_PI).first);
    for (float x : out.data()) {
      CHECK(x >= lo - 1e-5f);
      CHECK(x <= hi + 1e-5f);
    }
  }
}

TEST_CASE("batch rotation") {
  SUBCASE("empty") { CHECK(rotate_batch({}, {}).empty()); }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(rotate_batch({Volume::zeros(4)}, {}), ValidationError);
  }
  SUBCASE("matches sequential rotates bitwise") {
    Rng rng(88);
    std::vector<Volume> vs;
    std::vector<RotationMatrix> rs;
    for (int i = 0; i < 8; ++i) {
      vs.push_back(random_volume(8, 300 + i));
      rs.push_back(sample_uniform(rng, 0.0, M_PI).first);
    }
    const auto batch = rotate_batch(vs, rs);
    REQUIRE(batch.size() == 8);
    for (int i = 0; i < 8; ++i) CHECK(batch[i] == rotate(vs[i], rs[i]));
  }
}

TEST_CASE("SOEV file format") {
  const std::string dir = std::filesystem::temp_directory_path() / "soe_vol_test";
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/a.vol";
  const Volume v = random_volume(8, 99);
  write_volume(path, v);
  CHECK(read_volume(path) == v);

  SUBCASE("rejects wrong magic") {
    std::ofstream os(dir + "/bad.vol", std::ios::binary);
    os.write("NOPE", 4);
    os.close();
    CHECK_THROWS_AS(read_volume(dir + "/bad.vol"), IoError);
  }
  SUBCASE("rejects truncation") {
    std::ifstream is(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(is)), {});
    std::ofstream os(dir + "/trunc.vol", std::ios::binary);
    os.write(content.data(), static_cast<std::streamsize>(content.size() - 10));
    os.close();
    CHECK_THROWS_AS(read_volume(dir + "/trunc.vol"), IoError);
  }
  SUBCASE("rejects trailing bytes") {
    std::ifstream is(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(is)), {});
    content += "xx";
    std::ofstream os(dir + "/trail.vol", std::ios::binary);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.close();
    CHECK_THROWS_AS(read_volume(dir + "/trail.vol"), IoError);
  }
  SUBCASE("rejects wrong version") {
    std::ifstream is(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(is)), {});
    content[4] = 2;
    std::ofstream os(dir + "/ver.vol", std::ios::binary);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    os.close();
    CHECK_THROWS_AS(read_volume(dir + "/ver.vol"), IoError);
  }
}

TEST_CASE("volume validation") {
  CHECK_THROWS_AS(Volume(1, std::vector<float>(1)), ValidationError);
  CHECK_THROWS_AS(Volume(3, std::vector<float>(5)), ValidationError);
  std::vector<float> bad(8, 0.0f);
  bad[3] = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(Volume(2, bad), ValidationError);
}

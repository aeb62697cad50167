#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "soe/error.hpp"
#include "soe/metrics.hpp"
#include "soe/phantom.hpp"

using namespace soe;

TEST_CASE("generation determinism and bounds") {
  SUBCASE("fixed seed reproduces volumes bitwise") {
    const auto a = generate_phantoms(5, 16, 42);
    const auto b = generate_phantoms(5, 16, 42);
    REQUIRE(a.size() == 5);
    for (int i = 0; i < 5; ++i) {
      CHECK(a[i].volume == b[i].volume);
      CHECK(a[i].class_label == b[i].class_label);
      CHECK(a[i].age_value == b[i].age_value);
    }
  }
  SUBCASE("empty request") { CHECK(generate_phantoms(0, 16, 1).empty()); }
  SUBCASE("invalid dim") { CHECK_THROWS_AS(generate_phantoms(1, 20, 1), ValidationError); }
  SUBCASE("intensities stay in [0,1] and ages in range") {
    for (const Phantom& p : generate_phantoms(20, 16, 7)) {
      for (float v : p.volume.data()) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
      }
      CHECK(p.age_value >= kAgeMin);
      CHECK(p.age_value <= kAgeMax);
    }
  }
}

TEST_CASE("labels are a deterministic function of the ventricle latent") {
  const auto phantoms = generate_phantoms(1000, 16, 99);
  std::vector<int> brute, labels;
  int positives = 0;
  for (const Phantom& p : phantoms) {
    brute.push_back(p.latent_ventricle > kVentricleThreshold ? 1 : 0);
    labels.push_back(p.class_label);
    positives += p.class_label;
  }
  const auto m = classification_metrics(brute, labels);
  CHECK(m.bacc == 1.0);

  // class balance under the uniform ventricle law
  const double frac = static_cast<double>(positives) / 1000.0;
  CHECK(frac >= 0.4);
  CHECK(frac <= 0.6);
}

TEST_CASE("intensity histogram is stable across seeds") {
  // two-sample KS statistic over pooled voxel intensities
  auto sample_intensities = [](uint64_t seed) {
    std::vector<float> out;
    for (const Phantom& p : generate_phantoms(1000, 16, seed))
      for (size_t i = 0; i < p.volume.data().size(); i += 7) out.push_back(p.volume.data()[i]);
    std::sort(out.begin(), out.end());
    return out;
  };
  const auto a = sample_intensities(1);
  const auto b = sample_intensities(2);
  // ties matter: clipping piles an atom at exactly 0, so advance both sides
  // through each distinct value before measuring
  double ks = 0.0;
  size_t ia = 0, ib = 0;
  while (ia < a.size() && ib < b.size()) {
    const float v = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] == v) ++ia;
    while (ib < b.size() && b[ib] == v) ++ib;
    ks = std::max(ks, std::abs(static_cast<double>(ia) / a.size() -
                               static_cast<double>(ib) / b.size()));
  }
  CHECK(ks < 0.05);
}

TEST_CASE("split assignment") {
  SUBCASE("ten items split 7/1/2") {
    std::vector<uint64_t> ids(10);
    for (size_t i = 0; i < 10; ++i) ids[i] = i;
    const auto splits = assign_splits(ids, SplitSpec{0.7, 0.1, 0.2, 5});
    int counts[3] = {0, 0, 0};
    for (Split s : splits) counts[static_cast<int>(s)]++;
    CHECK(counts[0] == 7);
    CHECK(counts[1] == 1);
    CHECK(counts[2] == 2);
  }

  SUBCASE("sizes stay within one of the fractions") {
    for (size_t n : {3u, 17u, 101u, 500u}) {
      std::vector<uint64_t> ids(n);
      for (size_t i = 0; i < n; ++i) ids[i] = i * 13 + 1;
      const auto splits = assign_splits(ids, SplitSpec{0.7, 0.1, 0.2, 9});
      size_t counts[3] = {0, 0, 0};
      for (Split s : splits) counts[static_cast<int>(s)]++;
      CHECK(counts[0] + counts[1] + counts[2] == n);
      CHECK(std::abs(static_cast<double>(counts[0]) - 0.7 * n) <= 1.0);
      CHECK(std::abs(static_cast<double>(counts[1]) - 0.1 * n) <= 1.0);
      CHECK(std::abs(static_cast<double>(counts[2]) - 0.2 * n) <= 1.0);
    }
  }

  SUBCASE("membership is keyed on ids, not positions") {
    std::vector<uint64_t> ids(50);
    for (size_t i = 0; i < 50; ++i) ids[i] = 1000 + i;
    const auto forward = assign_splits(ids, SplitSpec{0.7, 0.1, 0.2, 3});
    std::vector<uint64_t> shuffled = ids;
    std::reverse(shuffled.begin(), shuffled.end());
    const auto reversed = assign_splits(shuffled, SplitSpec{0.7, 0.1, 0.2, 3});
    for (size_t i = 0; i < 50; ++i) CHECK(forward[i] == reversed[50 - 1 - i]);
  }

  SUBCASE("empty input rejected") {
    CHECK_THROWS_AS(assign_splits({}, SplitSpec{}), ValidationError);
  }
  SUBCASE("fractions must sum to one") {
    CHECK_THROWS_AS(assign_splits({1}, SplitSpec{0.5, 0.1, 0.2, 0}), ValidationError);
  }
}

TEST_CASE("dataset write and load round trip") {
  const std::string dir =
      (std::filesystem::temp_directory_path() / "soe_dataset_test").string();
  std::filesystem::remove_all(dir);

  const auto phantoms = generate_phantoms(12, 16, 31);
  std::vector<uint64_t> ids(12);
  for (size_t i = 0; i < 12; ++i) ids[i] = i;
  const auto splits = assign_splits(ids, SplitSpec{0.7, 0.1, 0.2, 31});
  write_dataset(dir, phantoms, splits);

  const Dataset ds = load_dataset(dir);
  REQUIRE(ds.items.size() == 12);
  CHECK(ds.dim == 16);
  for (size_t i = 0; i < 12; ++i) {
    CHECK(ds.phantoms[i].volume == phantoms[i].volume);
    CHECK(ds.phantoms[i].class_label == phantoms[i].class_label);
    CHECK(ds.phantoms[i].age_value == doctest::Approx(phantoms[i].age_value));
    CHECK(ds.items[i].split == splits[i]);
  }

  const auto train = ds.indices_of(Split::kTrain);
  const auto val = ds.indices_of(Split::kVal);
  const auto test = ds.indices_of(Split::kTest);
  CHECK(train.size() + val.size() + test.size() == 12);

  std::filesystem::remove_all(dir);
}

TEST_CASE("in-memory dataset matches generation") {
  const Dataset ds = make_dataset(20, 16, 77, SplitSpec{0.7, 0.1, 0.2, 77});
  const auto direct = generate_phantoms(20, 16, 77);
  REQUIRE(ds.phantoms.size() == 20);
  for (size_t i = 0; i < 20; ++i) CHECK(ds.phantoms[i].volume == direct[i].volume);
}

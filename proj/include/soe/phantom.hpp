#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "soe/volume.hpp"

namespace soe {

// Synthetic stand-in for a structural brain scan: a smoothed ellipsoidal
// head with a bright cortical shell and a dark interior ventricle. The
// class label follows the ventricle size parameter, the age analogue the
// shell thickness, so both downstream tasks are functions of geometry only
// and survive any rotation of the volume.
struct Phantom {
  Volume volume;
  int class_label = 0;            // 0 = "NC-like", 1 = "AD-like"
  double age_value = 0.0;         // years-analogue in [54.4, 90.9]
  double latent_ventricle = 0.0;  // v, drives the class label
  double latent_thickness = 0.0;  // t, drives the age value
};

inline constexpr double kVentricleThreshold = 0.35; // class 1 iff v > threshold
inline constexpr double kAgeMin = 54.4;
inline constexpr double kAgeMax = 90.9;

// Deterministic given seed; items get independent derived seeds so the
// output is a pure function of (index, seed). dim must be 16, 32 or 64.
std::vector<Phantom> generate_phantoms(int n_samples, int dim, uint64_t seed);

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct SplitSpec {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
  uint64_t seed = 0;
};

// Membership is keyed on item ids (rank by hash, largest-remainder quotas),
// so reordering the input never changes an item's split. Sizes are within
// +-1 of the exact fractions. Throws on empty input.
std::vector<Split> assign_splits(const std::vector<uint64_t>& ids, const SplitSpec& spec);

struct DatasetItem {
  uint64_t id = 0;
  std::string path; // SOEV file, relative to the manifest directory
  int class_label = 0;
  double age_value = 0.0;
  Split split = Split::kTrain;
};

struct Dataset {
  int dim = 0;
  std::vector<Phantom> phantoms; // aligned with items
  std::vector<DatasetItem> items;

  std::vector<size_t> indices_of(Split s) const;
};

// Volumes as SOEV files plus manifest.csv (id, path, class_label,
// age_value, split).
void write_dataset(const std::string& dir, const std::vector<Phantom>& phantoms,
                   const std::vector<Split>& splits);

Dataset load_dataset(const std::string& dir);

// The write/load round trip without touching disk.
Dataset make_dataset(int n_samples, int dim, uint64_t seed, const SplitSpec& spec);

} // namespace soe

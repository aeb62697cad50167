#include "soe/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "soe/binio.hpp"
#include "soe/error.hpp"
#include "soe/rng.hpp"

namespace soe {

namespace {

double smoothstep(double x) {
  x = std::clamp(x, 0.0, 1.0);
  return x * x * (3.0 - 2.0 * x);
}

// 1 well inside the ellipsoid surface rho = edge, 0 well outside, smooth
// transition of width w.
double inside(double rho, double edge, double w) {
  return smoothstep((edge + 0.5 * w - rho) / w);
}

double ellipsoid_rho(double x, double y, double z, double ax, double ay, double az) {
  const double a = x / ax, b = y / ay, c = z / az;
  return std::sqrt(a * a + b * b + c * c);
}

Phantom generate_one(int dim, uint64_t item_seed) {
  Rng rng(item_seed);

  const double v = rng.uniform(0.15, 0.55);        // ventricle size parameter
  const double t = rng.uniform(0.08, 0.20);        // cortical shell thickness
  const double ax = 0.80 + rng.uniform(-0.03, 0.03);
  const double ay = 0.85 + rng.uniform(-0.03, 0.03);
  const double az = 0.75 + rng.uniform(-0.03, 0.03);
  const double ox = rng.uniform(-0.05, 0.05);      // ventricle offset
  const double oy = rng.uniform(-0.05, 0.05);
  const double oz = rng.uniform(-0.05, 0.05);
  const double vx = v, vy = 0.80 * v, vz = 0.65 * v;

  const double half = dim / 2.0;
  const double c = (dim - 1) / 2.0;
  const double w = 3.0 / dim; // ~1.5 voxel transition in normalized units

  Volume vol = Volume::zeros(dim);
  for (int i = 0; i < dim; ++i) {
    const double x = (i - c) / half;
    for (int j = 0; j < dim; ++j) {
      const double y = (j - c) / half;
      for (int k = 0; k < dim; ++k) {
        const double z = (k - c) / half;
        const double rho_head = ellipsoid_rho(x, y, z, ax, ay, az);
        const double rho_vent = ellipsoid_rho(x - ox, y - oy, z - oz, vx, vy, vz);
        const double head = inside(rho_head, 1.0, w);
        const double shell = head * (1.0 - inside(rho_head, 1.0 - t, w));
        const double vent = head * inside(rho_vent, 1.0, w);
        double val = head * 0.55 + shell * 0.30 - vent * 0.45;
        val += rng.normal(0.0, 0.02);
        vol.at(i, j, k) = static_cast<float>(std::clamp(val, 0.0, 1.0));
      }
    }
  }

  Phantom p;
  p.volume = std::move(vol);
  p.latent_ventricle = v;
  p.latent_thickness = t;
  p.class_label = v > kVentricleThreshold ? 1 : 0;
  const double age = kAgeMin + (kAgeMax - kAgeMin) * (0.20 - t) / 0.12 + rng.normal(0.0, 1.5);
  p.age_value = std::clamp(age, kAgeMin, kAgeMax);
  return p;
}

} // namespace

std::vector<Phantom> generate_phantoms(int n_samples, int dim, uint64_t seed) {
  if (dim != 16 && dim != 32 && dim != 64)
    throw ValidationError("generate_phantoms: dim must be 16, 32 or 64");
  if (n_samples < 0) throw ValidationError("generate_phantoms: negative sample count");
  std::vector<Phantom> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i)
    out.push_back(generate_one(dim, hash_mix(seed, static_cast<uint64_t>(i))));
  return out;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    default: return "test";
  }
}

Split split_from_name(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "val") return Split::kVal;
  if (name == "test") return Split::kTest;
  throw IoError("unknown split name: " + name);
}

std::vector<Split> assign_splits(const std::vector<uint64_t>& ids, const SplitSpec& spec) {
  if (ids.empty()) throw ValidationError("assign_splits: empty input");
  if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9)
    throw ValidationError("assign_splits: fractions must sum to 1");

  const size_t n = ids.size();
  // Quotas by largest remainder so sizes stay within +-1 of the fractions.
  const double exact[3] = {spec.train * n, spec.val * n, spec.test * n};
  size_t quota[3];
  size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    quota[i] = static_cast<size_t>(std::floor(exact[i]));
    assigned += quota[i];
  }
  std::vector<int> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return exact[a] - std::floor(exact[a]) > exact[b] - std::floor(exact[b]);
  });
  for (size_t r = 0; r < n - assigned; ++r) quota[order[r % 3]]++;

  // Rank items by (hash of id, id): membership depends on ids only.
  std::vector<size_t> rank(n);
  for (size_t i = 0; i < n; ++i) rank[i] = i;
  std::sort(rank.begin(), rank.end(), [&](size_t a, size_t b) {
    const uint64_t ha = hash_mix(spec.seed, ids[a]);
    const uint64_t hb = hash_mix(spec.seed, ids[b]);
    return ha != hb ? ha < hb : ids[a] < ids[b];
  });

  std::vector<Split> out(n);
  for (size_t r = 0; r < n; ++r) {
    Split s = r < quota[0]             ? Split::kTrain
              : r < quota[0] + quota[1] ? Split::kVal
                                        : Split::kTest;
    out[rank[r]] = s;
  }
  return out;
}

std::vector<size_t> Dataset::indices_of(Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < items.size(); ++i)
    if (items[i].split == s) out.push_back(i);
  return out;
}

void write_dataset(const std::string& dir, const std::vector<Phantom>& phantoms,
                   const std::vector<Split>& splits) {
  if (phantoms.size() != splits.size())
    throw ValidationError("write_dataset: phantom/split count mismatch");
  std::filesystem::create_directories(dir);
  std::string manifest = "id,path,class_label,age_value,split\n";
  char buf[256];
  for (size_t i = 0; i < phantoms.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%06zu.vol", i);
    const std::string fname = buf;
    write_volume(dir + "/" + fname, phantoms[i].volume);
    std::snprintf(buf, sizeof(buf), "%zu,%s,%d,%.17g,%s\n", i, fname.c_str(),
                  phantoms[i].class_label, phantoms[i].age_value, split_name(splits[i]));
    manifest += buf;
  }
  atomic_write_text(dir + "/manifest.csv", manifest);
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream is(dir + "/manifest.csv");
  if (!is) throw IoError("cannot open manifest: " + dir + "/manifest.csv");
  std::string line;
  if (!std::getline(is, line) || line != "id,path,class_label,age_value,split")
    throw IoError("bad manifest header: " + dir + "/manifest.csv");

  Dataset ds;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    DatasetItem item;
    std::getline(ss, field, ',');
    item.id = std::stoull(field);
    std::getline(ss, item.path, ',');
    std::getline(ss, field, ',');
    item.class_label = std::stoi(field);
    std::getline(ss, field, ',');
    item.age_value = std::stod(field);
    std::getline(ss, field, ',');
    item.split = split_from_name(field);

    Phantom p;
    p.volume = read_volume(dir + "/" + item.path);
    p.class_label = item.class_label;
    p.age_value = item.age_value;
    if (ds.dim == 0) ds.dim = p.volume.n();
    if (p.volume.n() != ds.dim) throw IoError("mixed volume dims in dataset: " + dir);
    ds.items.push_back(std::move(item));
    ds.phantoms.push_back(std::move(p));
  }
  if (ds.items.empty()) throw IoError("empty dataset: " + dir);
  return ds;
}

Dataset make_dataset(int n_samples, int dim, uint64_t seed, const SplitSpec& spec) {
  Dataset ds;
  ds.dim = dim;
  ds.phantoms = generate_phantoms(n_samples, dim, seed);
  std::vector<uint64_t> ids(ds.phantoms.size());
  for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  const std::vector<Split> splits = assign_splits(ids, spec);
  for (size_t i = 0; i < ds.phantoms.size(); ++i) {
    DatasetItem item;
    item.id = i;
    item.class_label = ds.phantoms[i].class_label;
    item.age_value = ds.phantoms[i].age_value;
    item.split = splits[i];
    ds.items.push_back(std::move(item));
  }
  return ds;
}

} // namespace soe

#include "soe/volume.hpp"

#include <cmath>

#include "soe/binio.hpp"
#include "soe/error.hpp"

namespace soe {

Volume::Volume(int n, std::vector<float> data) : n_(n), data_(std::move(data)) {
  if (n_ < 2) throw ValidationError("Volume: dims must be >= 2");
  if (data_.size() != size_t(n_) * n_ * n_)
    throw ValidationError("Volume: data length does not match dims");
  for (float v : data_)
    if (!std::isfinite(v)) throw ValidationError("Volume: non-finite voxel value");
}

CoordGrid to_coords(const Volume& v) {
  const int n = v.n();
  const double c = v.center();
  CoordGrid g;
  g.n = n;
  g.coords.resize(size_t(n) * n * n * 3);
  size_t p = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        g.coords[p++] = i - c;
        g.coords[p++] = j - c;
        g.coords[p++] = k - c;
      }
  return g;
}

namespace {

// Kill sub-1e-9 fractional residue; right-angle warp coordinates carry only
// ~1e-15 float noise and must resolve to exact grid indices.
inline double snap(double t) {
  const double r = std::nearbyint(t);
  return std::abs(t - r) < 1e-9 ? r : t;
}

} // namespace

float sample_trilinear(const Volume& v, double x, double y, double z) {
  const int n = v.n();
  x = snap(x);
  y = snap(y);
  z = snap(z);

  const double fx0 = std::floor(x), fy0 = std::floor(y), fz0 = std::floor(z);
  const int x0 = static_cast<int>(fx0), y0 = static_cast<int>(fy0), z0 = static_cast<int>(fz0);
  const double dx = x - fx0, dy = y - fy0, dz = z - fz0;

  if (dx == 0.0 && dy == 0.0 && dz == 0.0) {
    // Exact grid point: direct fetch keeps identity/right-angle warps bitwise.
    if (x0 < 0 || x0 >= n || y0 < 0 || y0 >= n || z0 < 0 || z0 >= n) return 0.0f;
    return v.at(x0, y0, z0);
  }

  auto fetch = [&](int i, int j, int k) -> double {
    if (i < 0 || i >= n || j < 0 || j >= n || k < 0 || k >= n) return 0.0;
    return v.at(i, j, k);
  };

  const double w000 = (1 - dx) * (1 - dy) * (1 - dz);
  const double w001 = (1 - dx) * (1 - dy) * dz;
  const double w010 = (1 - dx) * dy * (1 - dz);
  const double w011 = (1 - dx) * dy * dz;
  const double w100 = dx * (1 - dy) * (1 - dz);
  const double w101 = dx * (1 - dy) * dz;
  const double w110 = dx * dy * (1 - dz);
  const double w111 = dx * dy * dz;

  const double acc = w000 * fetch(x0, y0, z0) + w001 * fetch(x0, y0, z0 + 1) +
                     w010 * fetch(x0, y0 + 1, z0) + w011 * fetch(x0, y0 + 1, z0 + 1) +
                     w100 * fetch(x0 + 1, y0, z0) + w101 * fetch(x0 + 1, y0, z0 + 1) +
                     w110 * fetch(x0 + 1, y0 + 1, z0) + w111 * fetch(x0 + 1, y0 + 1, z0 + 1);
  return static_cast<float>(acc);
}

Volume rotate(const Volume& v, const RotationMatrix& r) {
  const int n = v.n();
  const double c = v.center();
  const RotationMatrix rt = transpose(r);
  const auto& m = rt.entries();

  Volume out = Volume::zeros(n);
  for (int i = 0; i < n; ++i) {
    const double ci = i - c;
    for (int j = 0; j < n; ++j) {
      const double cj = j - c;
      for (int k = 0; k < n; ++k) {
        const double ck = k - c;
        const double sx = m[0] * ci + m[1] * cj + m[2] * ck + c;
        const double sy = m[3] * ci + m[4] * cj + m[5] * ck + c;
        const double sz = m[6] * ci + m[7] * cj + m[8] * ck + c;
        out.at(i, j, k) = sample_trilinear(v, sx, sy, sz);
      }
    }
  }
  return out;
}

std::vector<Volume> rotate_batch(const std::vector<Volume>& vs,
                                 const std::vector<RotationMatrix>& rs) {
  if (vs.size() != rs.size()) throw ValidationError("rotate_batch: length mismatch");
  std::vector<Volume> out;
  out.reserve(vs.size());
  for (size_t i = 0; i < vs.size(); ++i) out.push_back(rotate(vs[i], rs[i]));
  return out;
}

namespace {
constexpr uint32_t kVolumeMagic = 0x56454f53u; // "SOEV" little-endian
constexpr uint32_t kVolumeVersion = 1;
} // namespace

void write_volume(const std::string& path, const Volume& v) {
  AtomicFileWriter w(path);
  auto& os = w.stream();
  write_le<uint32_t>(os, kVolumeMagic);
  write_le<uint32_t>(os, kVolumeVersion);
  const uint32_t n = static_cast<uint32_t>(v.n());
  write_le<uint32_t>(os, n);
  write_le<uint32_t>(os, n);
  write_le<uint32_t>(os, n);
  write_bytes(os, v.data().data(), v.data().size() * sizeof(float));
  w.commit();
}

Volume read_volume(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open volume file: " + path);
  if (read_le<uint32_t>(is, "magic") != kVolumeMagic)
    throw IoError("not a SOEV volume file: " + path);
  const uint32_t version = read_le<uint32_t>(is, "version");
  if (version != kVolumeVersion)
    throw IoError("unsupported SOEV version " + std::to_string(version) + ": " + path);
  const uint32_t d0 = read_le<uint32_t>(is, "dims");
  const uint32_t d1 = read_le<uint32_t>(is, "dims");
  const uint32_t d2 = read_le<uint32_t>(is, "dims");
  if (d0 != d1 || d1 != d2 || d0 < 2)
    throw IoError("SOEV dims must be equal and >= 2: " + path);
  std::vector<float> data(size_t(d0) * d1 * d2);
  read_bytes(is, data.data(), data.size() * sizeof(float), "voxel data");
  if (!at_eof(is)) throw IoError("trailing bytes after voxel data: " + path);
  return Volume(static_cast<int>(d0), std::move(data));
}

} // namespace soe

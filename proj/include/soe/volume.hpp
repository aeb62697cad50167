#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "soe/so3.hpp"

namespace soe {

// Dense cubic voxel grid, row-major with the last index fastest.
// Voxel (i, j, k) sits at coordinate (i - c, j - c, k - c), c = (n - 1) / 2,
// so the grid is centered on the origin for both odd and even n.
class Volume {
public:
  Volume() = default;
  Volume(int n, std::vector<float> data);
  static Volume zeros(int n) { return Volume(n, std::vector<float>(size_t(n) * n * n, 0.0f)); }

  int n() const { return n_; }
  size_t size() const { return data_.size(); }
  double center() const { return (n_ - 1) / 2.0; }

  float at(int i, int j, int k) const { return data_[(size_t(i) * n_ + j) * n_ + k]; }
  float& at(int i, int j, int k) { return data_[(size_t(i) * n_ + j) * n_ + k]; }
  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool operator==(const Volume& o) const { return n_ == o.n_ && data_ == o.data_; }

private:
  int n_ = 0;
  std::vector<float> data_;
};

// Materialized coordinate representation: per-voxel (x, y, z), voxel units,
// centered on the origin.
struct CoordGrid {
  int n = 0;
  std::vector<double> coords; // n*n*n*3, last axis the coordinate

  const double* at(int i, int j, int k) const {
    return coords.data() + ((size_t(i) * n + j) * n + k) * 3;
  }
};

CoordGrid to_coords(const Volume& v);

// Rotate the volume about the grid center: backward warp sampling the input
// trilinearly at R^T c_out per output voxel; samples outside the grid
// contribute 0. Identity and right-angle rotations are exact (see sampler).
Volume rotate(const Volume& v, const RotationMatrix& r);

std::vector<Volume> rotate_batch(const std::vector<Volume>& vs,
                                 const std::vector<RotationMatrix>& rs);

// Trilinear sample at a continuous grid-index coordinate, zero fill outside.
// Coordinates within 1e-9 of an integer are snapped so that rotations whose
// matrices carry only floating-point residue (e.g. Rodrigues at pi/2) still
// land on exact voxel fetches.
float sample_trilinear(const Volume& v, double x, double y, double z);

// SOEV file format: magic "SOEV", u32 LE version = 1, three u32 LE dims,
// n^3 f32 LE values row-major (last index fastest).
void write_volume(const std::string& path, const Volume& v);
Volume read_volume(const std::string& path);

} // namespace soe

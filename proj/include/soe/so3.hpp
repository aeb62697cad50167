#pragma once

#include <array>
#include <iosfwd>
#include <utility>

#include "soe/rng.hpp"

namespace soe {

struct AxisAngle {
  std::array<double, 3> axis; // unit vector, ||axis|| = 1 within 1e-9
  double angle;               // radians, right-hand rule about axis
};

// Proper rotation: 3x3 orthogonal, det +1. Entries row-major.
// Column convention for coordinates: c' = R c.
class RotationMatrix {
public:
  static constexpr double kOrthoTol = 1e-6;

  RotationMatrix() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}

  static RotationMatrix identity() { return RotationMatrix(); }

  // No validation; for entries known to be a rotation (tests, composition).
  static RotationMatrix from_entries(const std::array<double, 9>& m) {
    RotationMatrix r;
    r.m_ = m;
    return r;
  }

  // Validating constructor for raw/external entries.
  static RotationMatrix from_entries_checked(const std::array<double, 9>& m);

  // Exact right-angle rotation about a coordinate axis (0=x, 1=y, 2=z),
  // quarter_turns in [0, 3]. Entries are exactly -1, 0 or 1, so warps built
  // from these hit grid points exactly.
  static RotationMatrix right_angle(int axis, int quarter_turns);

  double operator()(int r, int c) const { return m_[r * 3 + c]; }
  const std::array<double, 9>& entries() const { return m_; }

  std::array<double, 3> apply(const std::array<double, 3>& v) const {
    return {m_[0] * v[0] + m_[1] * v[1] + m_[2] * v[2],
            m_[3] * v[0] + m_[4] * v[1] + m_[5] * v[2],
            m_[6] * v[0] + m_[7] * v[1] + m_[8] * v[2]};
  }

  bool is_valid(double tol = kOrthoTol) const;
  double max_orthogonality_error() const;
  double det() const;

private:
  std::array<double, 9> m_;
};

// Rodrigues construction. Throws ValidationError if the axis is not unit
// length within 1e-9. The result always satisfies the rotation invariants.
RotationMatrix from_axis_angle(const AxisAngle& aa);

// Matrix product ab (apply b first, then a).
RotationMatrix compose(const RotationMatrix& a, const RotationMatrix& b);

// Inverse rotation.
RotationMatrix transpose(const RotationMatrix& r);

// Axis uniform on the unit sphere (normalized Gaussian draw), angle uniform
// in [lo, hi] radians. Requires 0 <= lo <= hi <= pi.
std::pair<RotationMatrix, AxisAngle> sample_uniform(Rng& rng, double angle_lo, double angle_hi);

// Uniform draw over {x, y, z} axis and quarter turns {0, 90, 180, 270}.
// Always returns an exact signed-permutation matrix.
RotationMatrix sample_right_angle(Rng& rng);

// Serialization: 9 little-endian f64, row-major.
void write_rotation(std::ostream& os, const RotationMatrix& r);
RotationMatrix read_rotation(std::istream& is);

} // namespace soe

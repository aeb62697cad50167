#include "soe/so3.hpp"

#include <cmath>
#include <ostream>

#include "soe/binio.hpp"
#include "soe/error.hpp"

namespace soe {

double RotationMatrix::det() const {
  const auto& m = m_;
  return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
         m[2] * (m[3] * m[7] - m[4] * m[6]);
}

double RotationMatrix::max_orthogonality_error() const {
  // max |(R^T R - I)_{ij}|
  double worst = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) dot += m_[k * 3 + i] * m_[k * 3 + j];
      worst = std::max(worst, std::abs(dot - (i == j ? 1.0 : 0.0)));
    }
  }
  return worst;
}

bool RotationMatrix::is_valid(double tol) const {
  return max_orthogonality_error() < tol && std::abs(det() - 1.0) < tol;
}

RotationMatrix RotationMatrix::from_entries_checked(const std::array<double, 9>& m) {
  RotationMatrix r = from_entries(m);
  if (!r.is_valid())
    throw ValidationError("matrix is not a proper rotation (orthogonality/det check failed)");
  return r;
}

RotationMatrix RotationMatrix::right_angle(int axis, int quarter_turns) {
  if (axis < 0 || axis > 2) throw ValidationError("right_angle: axis must be 0, 1 or 2");
  if (quarter_turns < 0 || quarter_turns > 3)
    throw ValidationError("right_angle: quarter_turns must be in [0, 3]");
  static constexpr double kCos[4] = {1, 0, -1, 0};
  static constexpr double kSin[4] = {0, 1, 0, -1};
  const double c = kCos[quarter_turns];
  const double s = kSin[quarter_turns];
  switch (axis) {
    case 0:
      return from_entries({1, 0, 0, 0, c, -s, 0, s, c});
    case 1:
      return from_entries({c, 0, s, 0, 1, 0, -s, 0, c});
    default:
      return from_entries({c, -s, 0, s, c, 0, 0, 0, 1});
  }
}

RotationMatrix from_axis_angle(const AxisAngle& aa) {
  const auto& u = aa.axis;
  const double norm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
  if (std::abs(norm - 1.0) > 1e-9)
    throw ValidationError("from_axis_angle: axis is not unit length");

  // R = I + sin(t) K + (1 - cos(t)) K^2, K the cross-product matrix of u.
  const double s = std::sin(aa.angle);
  const double c1 = 1.0 - std::cos(aa.angle);
  const double x = u[0], y = u[1], z = u[2];
  std::array<double, 9> m;
  m[0] = 1.0 + c1 * (x * x - 1.0);
  m[1] = -s * z + c1 * x * y;
  m[2] = s * y + c1 * x * z;
  m[3] = s * z + c1 * x * y;
  m[4] = 1.0 + c1 * (y * y - 1.0);
  m[5] = -s * x + c1 * y * z;
  m[6] = -s * y + c1 * x * z;
  m[7] = s * x + c1 * y * z;
  m[8] = 1.0 + c1 * (z * z - 1.0);
  return RotationMatrix::from_entries_checked(m);
}

RotationMatrix compose(const RotationMatrix& a, const RotationMatrix& b) {
  const auto& ma = a.entries();
  const auto& mb = b.entries();
  std::array<double, 9> m;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      m[i * 3 + j] =
          ma[i * 3 + 0] * mb[0 * 3 + j] + ma[i * 3 + 1] * mb[1 * 3 + j] + ma[i * 3 + 2] * mb[2 * 3 + j];
  return RotationMatrix::from_entries(m);
}

RotationMatrix transpose(const RotationMatrix& r) {
  const auto& m = r.entries();
  return RotationMatrix::from_entries({m[0], m[3], m[6], m[1], m[4], m[7], m[2], m[5], m[8]});
}

std::pair<RotationMatrix, AxisAngle> sample_uniform(Rng& rng, double angle_lo, double angle_hi) {
  if (!(angle_lo >= 0.0 && angle_lo <= angle_hi && angle_hi <= M_PI + 1e-12))
    throw ValidationError("sample_uniform: require 0 <= lo <= hi <= pi");

  std::array<double, 3> axis;
  double norm;
  do {
    axis = {rng.normal(), rng.normal(), rng.normal()};
    norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]);
  } while (norm < 1e-12);
  for (auto& a : axis) a /= norm;

  const double angle = rng.uniform(angle_lo, angle_hi);
  AxisAngle aa{axis, angle};
  return {from_axis_angle(aa), aa};
}

RotationMatrix sample_right_angle(Rng& rng) {
  const int axis = rng.uniform_int(0, 2);
  const int quarter = rng.uniform_int(0, 3);
  return RotationMatrix::right_angle(axis, quarter);
}

void write_rotation(std::ostream& os, const RotationMatrix& r) {
  for (double v : r.entries()) write_le<double>(os, v);
}

RotationMatrix read_rotation(std::istream& is) {
  std::array<double, 9> m;
  for (double& v : m) v = read_le<double>(is, "rotation matrix");
  return RotationMatrix::from_entries_checked(m);
}

} // namespace soe

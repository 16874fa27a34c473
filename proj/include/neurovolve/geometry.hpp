#ifndef NEUROVOLVE_GEOMETRY_HPP
#define NEUROVOLVE_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <stdexcept>

namespace neurovolve {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// Row-major 4x4 homogeneous affine matrix (voxel-to-world and spatial maps).
struct Mat4 {
  std::array<double, 16> m{};

  static Mat4 identity() {
    Mat4 a;
    a.m[0] = a.m[5] = a.m[10] = a.m[15] = 1.0;
    return a;
  }

  static Mat4 diagonal(double sx, double sy, double sz) {
    Mat4 a = identity();
    a.m[0] = sx;
    a.m[5] = sy;
    a.m[10] = sz;
    return a;
  }

  static Mat4 translation(const Vec3& t) {
    Mat4 a = identity();
    a.m[3] = t.x;
    a.m[7] = t.y;
    a.m[11] = t.z;
    return a;
  }

  double& at(int r, int c) { return m[r * 4 + c]; }
  double at(int r, int c) const { return m[r * 4 + c]; }

  Mat4 operator*(const Mat4& b) const {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double s = 0.0;
        for (int k = 0; k < 4; ++k) s += at(i, k) * b.at(k, j);
        r.at(i, j) = s;
      }
    return r;
  }

  Vec3 apply(const Vec3& p) const {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3],
            m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7],
            m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11]};
  }

  /// Applies only the upper-left 3x3 block (no translation).
  Vec3 apply_linear(const Vec3& p) const {
    return {m[0] * p.x + m[1] * p.y + m[2] * p.z,
            m[4] * p.x + m[5] * p.y + m[6] * p.z,
            m[8] * p.x + m[9] * p.y + m[10] * p.z};
  }

  double det3() const {
    return m[0] * (m[5] * m[10] - m[6] * m[9]) -
           m[1] * (m[4] * m[10] - m[6] * m[8]) +
           m[2] * (m[4] * m[9] - m[5] * m[8]);
  }

  /// Inverse of an affine matrix (upper-left 3x3 must be nonsingular).
  Mat4 inverse_affine() const {
    const double d = det3();
    if (std::abs(d) < 1e-300)
      throw std::invalid_argument("affine matrix is singular");
    const double id = 1.0 / d;
    Mat4 r = identity();
    r.m[0] = (m[5] * m[10] - m[6] * m[9]) * id;
    r.m[1] = (m[2] * m[9] - m[1] * m[10]) * id;
    r.m[2] = (m[1] * m[6] - m[2] * m[5]) * id;
    r.m[4] = (m[6] * m[8] - m[4] * m[10]) * id;
    r.m[5] = (m[0] * m[10] - m[2] * m[8]) * id;
    r.m[6] = (m[2] * m[4] - m[0] * m[6]) * id;
    r.m[8] = (m[4] * m[9] - m[5] * m[8]) * id;
    r.m[9] = (m[1] * m[8] - m[0] * m[9]) * id;
    r.m[10] = (m[0] * m[5] - m[1] * m[4]) * id;
    const Vec3 t{m[3], m[7], m[11]};
    const Vec3 it = r.apply_linear(t);
    r.m[3] = -it.x;
    r.m[7] = -it.y;
    r.m[11] = -it.z;
    return r;
  }

  bool is_identity() const {
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        if (at(i, j) != (i == j ? 1.0 : 0.0)) return false;
    return true;
  }
};

/// Rotation about the x, y, z axes (radians), composed as Rz * Ry * Rx.
inline Mat4 rotation_xyz(double rx, double ry, double rz) {
  const double cx = std::cos(rx), sx = std::sin(rx);
  const double cy = std::cos(ry), sy = std::sin(ry);
  const double cz = std::cos(rz), sz = std::sin(rz);
  Mat4 X = Mat4::identity();
  X.m[5] = cx; X.m[6] = -sx; X.m[9] = sx; X.m[10] = cx;
  Mat4 Y = Mat4::identity();
  Y.m[0] = cy; Y.m[2] = sy; Y.m[8] = -sy; Y.m[10] = cy;
  Mat4 Z = Mat4::identity();
  Z.m[0] = cz; Z.m[1] = -sz; Z.m[4] = sz; Z.m[5] = cz;
  return Z * (Y * X);
}

}  // namespace neurovolve

#endif  // NEUROVOLVE_GEOMETRY_HPP

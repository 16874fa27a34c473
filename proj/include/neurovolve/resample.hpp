#ifndef NEUROVOLVE_RESAMPLE_HPP
#define NEUROVOLVE_RESAMPLE_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "neurovolve/geometry.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::resample {

enum class Interpolation { Trilinear, Nearest };

inline Interpolation interpolation_for(const Volume3D& v) {
  return v.kind == VolumeKind::Label ? Interpolation::Nearest
                                     : Interpolation::Trilinear;
}

/// Trilinear sample at continuous voxel coordinates; neighbours outside the
/// grid contribute the fill value. Accumulates in double.
inline double sample_trilinear(const Volume3D& v, double x, double y, double z,
                               double fill) {
  const int i0 = static_cast<int>(std::floor(x));
  const int j0 = static_cast<int>(std::floor(y));
  const int k0 = static_cast<int>(std::floor(z));
  const double tx = x - i0, ty = y - j0, tz = z - k0;

  double acc = 0.0;
  for (int dk = 0; dk <= 1; ++dk) {
    const double wz = dk ? tz : 1.0 - tz;
    if (wz == 0.0) continue;
    for (int dj = 0; dj <= 1; ++dj) {
      const double wy = dj ? ty : 1.0 - ty;
      if (wy == 0.0) continue;
      for (int di = 0; di <= 1; ++di) {
        const double wx = di ? tx : 1.0 - tx;
        if (wx == 0.0) continue;
        const int i = i0 + di, j = j0 + dj, k = k0 + dk;
        const double val =
            v.in_bounds(i, j, k) ? static_cast<double>(v.at(i, j, k)) : fill;
        acc += wx * wy * wz * val;
      }
    }
  }
  return acc;
}

/// Nearest-neighbour sample; out-of-grid positions yield the fill value.
inline float sample_nearest(const Volume3D& v, double x, double y, double z,
                            float fill) {
  const int i = static_cast<int>(std::lround(x));
  const int j = static_cast<int>(std::lround(y));
  const int k = static_cast<int>(std::lround(z));
  return v.in_bounds(i, j, k) ? v.at(i, j, k) : fill;
}

inline float sample(const Volume3D& v, double x, double y, double z,
                    Interpolation interp, float fill) {
  if (interp == Interpolation::Nearest) return sample_nearest(v, x, y, z, fill);
  return static_cast<float>(sample_trilinear(v, x, y, z, fill));
}

/// Dense 3D vector field of displacements in mm per voxel, stored as one
/// component array per axis. Used for backward warping:
/// out(x) = in(x - u(x)).
struct DisplacementField {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<float> ux, uy, uz;

  explicit DisplacementField(std::array<int, 3> d) : dims(d) {
    const std::size_t n = static_cast<std::size_t>(d[0]) * d[1] * d[2];
    ux.assign(n, 0.0f);
    uy.assign(n, 0.0f);
    uz.assign(n, 0.0f);
  }

  std::size_t voxel_count() const { return ux.size(); }

  void validate_finite() const {
    for (const auto* comp : {&ux, &uy, &uz})
      for (float f : *comp)
        if (!std::isfinite(f))
          throw std::runtime_error("displacement field has non-finite values");
  }
};

/// Backward warp of one volume through a spatial map given in voxel
/// coordinates: out(i,j,k) = in(map(i,j,k)). Out-of-grid samples fill with
/// background.
template <typename MapFn>
Volume3D warp_voxel_map(const Volume3D& in, MapFn&& map, Interpolation interp,
                        float fill = 0.0f) {
  Volume3D out = in;
  std::size_t idx = 0;
  for (int k = 0; k < in.dims[2]; ++k)
    for (int j = 0; j < in.dims[1]; ++j)
      for (int i = 0; i < in.dims[0]; ++i, ++idx) {
        const std::array<double, 3> p = map(i, j, k);
        out.data[idx] = sample(in, p[0], p[1], p[2], interp, fill);
      }
  return out;
}

/// Backward warp through a displacement field in mm along the grid axes.
/// Voxels whose displacement is exactly zero are copied bitwise.
inline Volume3D warp_displacement(const Volume3D& in,
                                  const DisplacementField& field,
                                  Interpolation interp, float fill = 0.0f) {
  if (field.dims != in.dims)
    throw std::invalid_argument("displacement field dims do not match volume");
  Volume3D out = in;
  const double isx = 1.0 / in.spacing[0];
  const double isy = 1.0 / in.spacing[1];
  const double isz = 1.0 / in.spacing[2];
  std::size_t idx = 0;
  for (int k = 0; k < in.dims[2]; ++k)
    for (int j = 0; j < in.dims[1]; ++j)
      for (int i = 0; i < in.dims[0]; ++i, ++idx) {
        const float dx = field.ux[idx], dy = field.uy[idx], dz = field.uz[idx];
        if (dx == 0.0f && dy == 0.0f && dz == 0.0f) continue;  // exact copy
        out.data[idx] = sample(in, i - dx * isx, j - dy * isy, k - dz * isz,
                               interp, fill);
      }
  return out;
}

/// Backward warp through a world-space affine map T (the transform applied
/// to the image content): out(x_world) = in(T^-1 x_world), expressed in
/// voxel coordinates through the volume affine.
inline Volume3D warp_world_affine(const Volume3D& in, const Mat4& transform,
                                  Interpolation interp, float fill = 0.0f) {
  const Mat4 vox_to_world = in.affine;
  const Mat4 world_to_vox = in.affine.inverse_affine();
  const Mat4 m = world_to_vox * (transform.inverse_affine() * vox_to_world);
  if (m.is_identity()) return in;
  return warp_voxel_map(
      in,
      [&m](int i, int j, int k) {
        const Vec3 p = m.apply({static_cast<double>(i), static_cast<double>(j),
                                static_cast<double>(k)});
        return std::array<double, 3>{p.x, p.y, p.z};
      },
      interp, fill);
}

/// Mirrors the volume along the selected axes. Exact (pure index
/// permutation, no interpolation).
inline Volume3D flip_volume(const Volume3D& in,
                            const std::array<bool, 3>& axes) {
  if (!axes[0] && !axes[1] && !axes[2]) return in;
  Volume3D out = in;
  const int nx = in.dims[0], ny = in.dims[1], nz = in.dims[2];
  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++idx) {
        const int si = axes[0] ? nx - 1 - i : i;
        const int sj = axes[1] ? ny - 1 - j : j;
        const int sk = axes[2] ? nz - 1 - k : k;
        out.data[idx] = in.at(si, sj, sk);
      }
  return out;
}

/// Trilinear upsampling of a coarse control-point lattice to a dense
/// per-voxel field. Control points span the full voxel extent; `get`
/// returns the value at control index (a,b,c).
template <typename GetFn>
std::vector<float> upsample_control_grid(const std::array<int, 3>& dims,
                                         const std::array<int, 3>& grid_shape,
                                         GetFn&& get) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const int gx = grid_shape[0], gy = grid_shape[1], gz = grid_shape[2];
  std::vector<float> out(static_cast<std::size_t>(nx) * ny * nz);

  auto axis_coord = [](int i, int n, int g) {
    if (n == 1) return 0.0;
    return static_cast<double>(i) / (n - 1) * (g - 1);
  };

  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k) {
    const double w = axis_coord(k, nz, gz);
    int c0 = std::min(static_cast<int>(w), gz - 2);
    if (c0 < 0) c0 = 0;
    const double tz = w - c0;
    for (int j = 0; j < ny; ++j) {
      const double v = axis_coord(j, ny, gy);
      int b0 = std::min(static_cast<int>(v), gy - 2);
      if (b0 < 0) b0 = 0;
      const double ty = v - b0;
      for (int i = 0; i < nx; ++i, ++idx) {
        const double u = axis_coord(i, nx, gx);
        int a0 = std::min(static_cast<int>(u), gx - 2);
        if (a0 < 0) a0 = 0;
        const double tx = u - a0;

        double acc = 0.0;
        for (int dc = 0; dc <= 1; ++dc) {
          const double wz = dc ? tz : 1.0 - tz;
          if (wz == 0.0) continue;
          for (int db = 0; db <= 1; ++db) {
            const double wy = db ? ty : 1.0 - ty;
            if (wy == 0.0) continue;
            for (int da = 0; da <= 1; ++da) {
              const double wx = da ? tx : 1.0 - tx;
              if (wx == 0.0) continue;
              acc += wx * wy * wz * get(a0 + da, b0 + db, c0 + dc);
            }
          }
        }
        out[idx] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace neurovolve::resample

#endif  // NEUROVOLVE_RESAMPLE_HPP

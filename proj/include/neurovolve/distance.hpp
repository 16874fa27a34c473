#ifndef NEUROVOLVE_DISTANCE_HPP
#define NEUROVOLVE_DISTANCE_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "neurovolve/morphology.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::distance {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// 1D squared-distance transform along one line of samples spaced `step`
/// apart (Felzenszwalb & Huttenlocher lower envelope of parabolas).
/// Entries with f = +inf carry no parabola. Writes the result back into f.
inline void dt1d(std::vector<double>& f, int len, double step,
                 std::vector<double>& d, std::vector<int>& v,
                 std::vector<double>& z) {
  int k = -1;
  for (int q = 0; q < len; ++q) {
    if (f[q] == kInf) continue;
    const double xq = q * step;
    double s = -kInf;
    while (k >= 0) {
      const double xv = v[k] * step;
      s = ((f[q] + xq * xq) - (f[v[k]] + xv * xv)) / (2.0 * xq - 2.0 * xv);
      if (s <= z[k])
        --k;
      else
        break;
    }
    ++k;
    v[k] = q;
    z[k] = (k == 0) ? -kInf : s;
    z[k + 1] = kInf;
  }
  if (k < 0) return;  // no parabolas: line stays all inf

  int j = 0;
  for (int q = 0; q < len; ++q) {
    const double xq = q * step;
    while (z[j + 1] < xq) ++j;
    const double dx = xq - v[j] * step;
    d[q] = dx * dx + f[v[j]];
  }
  std::copy(d.begin(), d.begin() + len, f.begin());
}

/// Exact squared Euclidean distance (mm^2) from every voxel centre to the
/// nearest set voxel of `seed`, honouring per-axis spacing. Seed voxels get
/// 0; an empty seed yields all +inf.
inline std::vector<double> squared_edt(const std::vector<std::uint8_t>& seed,
                                       const std::array<int, 3>& dims,
                                       const std::array<double, 3>& spacing) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) dist[i] = seed[i] ? 0.0 : kInf;

  const int maxdim = std::max({nx, ny, nz});
  std::vector<double> f(maxdim), d(maxdim), z(maxdim + 1);
  std::vector<int> v(maxdim);

  auto sweep = [&](int stride, int len, double step, std::size_t line_start) {
    bool any = false;
    for (int i = 0; i < len; ++i) {
      f[i] = dist[line_start + static_cast<std::size_t>(i) * stride];
      any |= (f[i] != kInf);
    }
    if (!any) return;
    dt1d(f, len, step, d, v, z);
    for (int i = 0; i < len; ++i)
      dist[line_start + static_cast<std::size_t>(i) * stride] = f[i];
  };

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      sweep(1, nx, spacing[0], static_cast<std::size_t>(k) * ny * nx +
                                   static_cast<std::size_t>(j) * nx);
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i)
      sweep(nx, ny, spacing[1], static_cast<std::size_t>(k) * ny * nx + i);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      sweep(nx * ny, nz, spacing[2], static_cast<std::size_t>(j) * nx + i);

  return dist;
}

/// Surface voxels of a binary mask: mask voxels with at least one
/// face-adjacent voxel outside the mask; the volume boundary counts as
/// outside.
inline std::vector<std::uint8_t> surface_voxels(
    const std::vector<std::uint8_t>& mask, const std::array<int, 3>& dims) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<std::uint8_t> surf(mask.size(), 0);
  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++idx) {
        if (!mask[idx]) continue;
        const bool boundary =
            i == 0 || i == nx - 1 || j == 0 || j == ny - 1 || k == 0 ||
            k == nz - 1 || !mask[idx - 1] || !mask[idx + 1] ||
            !mask[idx - nx] || !mask[idx + nx] ||
            !mask[idx - static_cast<std::size_t>(nx) * ny] ||
            !mask[idx + static_cast<std::size_t>(nx) * ny];
        surf[idx] = boundary;
      }
  return surf;
}

inline Volume3D surface_voxels(const Volume3D& mask) {
  Volume3D out = mask;
  out.kind = VolumeKind::Label;
  const auto bin = morphology::to_binary(mask);
  const auto surf = surface_voxels(bin, mask.dims);
  for (std::size_t i = 0; i < surf.size(); ++i)
    out.data[i] = static_cast<float>(surf[i]);
  return out;
}

}  // namespace neurovolve::distance

#endif  // NEUROVOLVE_DISTANCE_HPP

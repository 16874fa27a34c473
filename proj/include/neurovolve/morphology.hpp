#ifndef NEUROVOLVE_MORPHOLOGY_HPP
#define NEUROVOLVE_MORPHOLOGY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "neurovolve/volume.hpp"

namespace neurovolve::morphology {

/// Binary dilation by a 26-connectivity ball of the given radius.
/// The iterated 26-neighbourhood ball is the Chebyshev ball, i.e. a box,
/// so the dilation separates into three 1D sliding-window maxima.
inline std::vector<std::uint8_t> dilate_chebyshev(
    const std::vector<std::uint8_t>& mask, const std::array<int, 3>& dims,
    int radius) {
  if (radius <= 0) return mask;
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<std::uint8_t> a = mask, b(mask.size());

  auto pass = [&](const std::vector<std::uint8_t>& src,
                  std::vector<std::uint8_t>& dst, int stride, int len,
                  std::size_t line_start) {
    for (int i = 0; i < len; ++i) {
      std::uint8_t v = 0;
      const int lo = std::max(0, i - radius), hi = std::min(len - 1, i + radius);
      for (int j = lo; j <= hi && !v; ++j)
        v = src[line_start + static_cast<std::size_t>(j) * stride];
      dst[line_start + static_cast<std::size_t>(i) * stride] = v;
    }
  };

  // x lines
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      pass(a, b, 1, nx, static_cast<std::size_t>(k) * ny * nx +
                            static_cast<std::size_t>(j) * nx);
  // y lines
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i)
      pass(b, a, nx, ny, static_cast<std::size_t>(k) * ny * nx + i);
  // z lines
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      pass(a, b, nx * ny, nz, static_cast<std::size_t>(j) * nx + i);

  return b;
}

/// Separable Gaussian smoothing with a kernel truncated at 3 sigma.
/// Borders are zero-padded.
inline std::vector<float> gaussian_smooth(const std::vector<float>& field,
                                          const std::array<int, 3>& dims,
                                          double sigma) {
  if (sigma <= 0.0) return field;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& w : kernel) w /= sum;

  const int nx = dims[0], ny = dims[1], nz = dims[2];
  std::vector<float> a = field, b(field.size());

  auto pass = [&](const std::vector<float>& src, std::vector<float>& dst,
                  int stride, int len, std::size_t line_start) {
    for (int i = 0; i < len; ++i) {
      double acc = 0.0;
      const int lo = std::max(0, i - radius), hi = std::min(len - 1, i + radius);
      for (int j = lo; j <= hi; ++j)
        acc += kernel[j - i + radius] *
               src[line_start + static_cast<std::size_t>(j) * stride];
      dst[line_start + static_cast<std::size_t>(i) * stride] =
          static_cast<float>(acc);
    }
  };

  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      pass(a, b, 1, nx, static_cast<std::size_t>(k) * ny * nx +
                            static_cast<std::size_t>(j) * nx);
  for (int k = 0; k < nz; ++k)
    for (int i = 0; i < nx; ++i)
      pass(b, a, nx, ny, static_cast<std::size_t>(k) * ny * nx + i);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      pass(a, b, nx * ny, nz, static_cast<std::size_t>(j) * nx + i);

  return b;
}

inline std::vector<std::uint8_t> to_binary(const Volume3D& v) {
  std::vector<std::uint8_t> m(v.data.size());
  for (std::size_t i = 0; i < v.data.size(); ++i) m[i] = v.data[i] != 0.0f;
  return m;
}

}  // namespace neurovolve::morphology

#endif  // NEUROVOLVE_MORPHOLOGY_HPP

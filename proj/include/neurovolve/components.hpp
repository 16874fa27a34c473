#ifndef NEUROVOLVE_COMPONENTS_HPP
#define NEUROVOLVE_COMPONENTS_HPP

#include <array>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "neurovolve/morphology.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::components {

enum class Connectivity : int { Faces = 6, Edges = 18, Corners = 26 };

inline Connectivity connectivity_from_int(int c) {
  switch (c) {
    case 6: return Connectivity::Faces;
    case 18: return Connectivity::Edges;
    case 26: return Connectivity::Corners;
    default:
      throw std::invalid_argument("connectivity must be 6, 18 or 26, got " +
                                  std::to_string(c));
  }
}

/// Neighbour offsets in the backward half-space of the raster scan, so a
/// two-pass sweep sees every adjacency exactly once.
inline std::vector<std::array<int, 3>> backward_neighbors(Connectivity conn) {
  std::vector<std::array<int, 3>> offs;
  const int level = static_cast<int>(conn);
  for (int dz = -1; dz <= 0; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dz == 0 && (dy > 0 || (dy == 0 && dx >= 0))) continue;
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (level == 6 && manhattan > 1) continue;
        if (level == 18 && manhattan > 2) continue;
        offs.push_back({dx, dy, dz});
      }
  return offs;
}

/// Connected components of a binary mask. ids are 1..count in order of
/// each component's first voxel in x-fastest scan order.
struct ComponentLabeling {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<std::int32_t> labels;  // 0 = background
  int count = 0;
  std::vector<std::vector<std::size_t>> voxels;  // per component, flat indices

  std::size_t component_size(int id) const { return voxels[id - 1].size(); }

  double component_volume_mm3(int id) const {
    return static_cast<double>(component_size(id)) * spacing[0] * spacing[1] *
           spacing[2];
  }

  /// Binary mask of one component.
  std::vector<std::uint8_t> component_mask(int id) const {
    std::vector<std::uint8_t> m(labels.size(), 0);
    for (std::size_t idx : voxels[id - 1]) m[idx] = 1;
    return m;
  }
};

class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

inline ComponentLabeling connected_components(
    const std::vector<std::uint8_t>& mask, const std::array<int, 3>& dims,
    Connectivity conn = Connectivity::Corners,
    const std::array<double, 3>& spacing = {1.0, 1.0, 1.0}) {
  const int nx = dims[0], ny = dims[1], nz = dims[2];
  const std::size_t n = static_cast<std::size_t>(nx) * ny * nz;
  if (mask.size() != n)
    throw std::invalid_argument("connected_components: mask size mismatch");

  ComponentLabeling out;
  out.dims = dims;
  out.spacing = spacing;
  out.labels.assign(n, 0);

  const auto offs = backward_neighbors(conn);

  // First pass: provisional labels with union-find over equivalences.
  std::vector<std::int32_t> prov(n, 0);
  std::int32_t next = 0;
  DisjointSet ds(n / 2 + 2);
  std::vector<std::int32_t> neigh;
  neigh.reserve(offs.size());

  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++idx) {
        if (!mask[idx]) continue;
        neigh.clear();
        for (const auto& o : offs) {
          const int ii = i + o[0], jj = j + o[1], kk = k + o[2];
          if (ii < 0 || jj < 0 || kk < 0 || ii >= nx || jj >= ny || kk >= nz)
            continue;
          const std::size_t nidx = idx + o[0] +
                                   static_cast<std::size_t>(o[1]) * nx +
                                   static_cast<std::size_t>(o[2]) * nx * ny;
          if (mask[nidx]) neigh.push_back(prov[nidx]);
        }
        if (neigh.empty()) {
          prov[idx] = ++next;
        } else {
          std::int32_t m = neigh[0];
          for (std::int32_t v : neigh) m = std::min(m, v);
          prov[idx] = m;
          for (std::int32_t v : neigh) ds.unite(m, v);
        }
      }

  // Second pass: map roots to consecutive ids in scan order.
  std::vector<std::int32_t> root_to_id(static_cast<std::size_t>(next) + 1, 0);
  int count = 0;
  for (std::size_t p = 0; p < n; ++p) {
    if (!prov[p]) continue;
    const std::size_t root = ds.find(prov[p]);
    if (!root_to_id[root]) {
      root_to_id[root] = ++count;
      out.voxels.emplace_back();
    }
    const std::int32_t id = root_to_id[root];
    out.labels[p] = id;
    out.voxels[id - 1].push_back(p);
  }
  out.count = count;
  return out;
}

inline ComponentLabeling connected_components(const Volume3D& mask,
                                              int connectivity = 26) {
  return connected_components(morphology::to_binary(mask), mask.dims,
                              connectivity_from_int(connectivity),
                              mask.spacing);
}

}  // namespace neurovolve::components

#endif  // NEUROVOLVE_COMPONENTS_HPP

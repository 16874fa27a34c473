#ifndef NEUROVOLVE_VOLUME_HPP
#define NEUROVOLVE_VOLUME_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurovolve/geometry.hpp"

namespace neurovolve {

enum class VolumeKind { Intensity, Label };

/// Dense 3D scalar grid. Data is stored flat with x varying fastest.
/// Voxel (i,j,k) maps to world millimetres through `affine`.
struct Volume3D {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  Mat4 affine = Mat4::identity();
  VolumeKind kind = VolumeKind::Intensity;
  std::vector<float> data;

  Volume3D() = default;

  Volume3D(std::array<int, 3> d, std::array<double, 3> sp, VolumeKind k)
      : dims(d), spacing(sp), kind(k) {
    validate_geometry();
    affine = Mat4::diagonal(sp[0], sp[1], sp[2]);
    data.assign(voxel_count(), 0.0f);
  }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(k) * dims[1] * dims[0] +
           static_cast<std::size_t>(j) * dims[0] + i;
  }

  float at(int i, int j, int k) const { return data[index(i, j, k)]; }
  float& at(int i, int j, int k) { return data[index(i, j, k)]; }

  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && i < dims[0] && j >= 0 && j < dims[1] && k >= 0 &&
           k < dims[2];
  }

  Vec3 voxel_to_world(const Vec3& v) const { return affine.apply(v); }

  /// World-space centre of the voxel grid.
  Vec3 world_center() const {
    return affine.apply({(dims[0] - 1) / 2.0, (dims[1] - 1) / 2.0,
                         (dims[2] - 1) / 2.0});
  }

  void validate_geometry() const {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
      throw std::invalid_argument("volume dims must be positive");
    if (spacing[0] <= 0.0 || spacing[1] <= 0.0 || spacing[2] <= 0.0)
      throw std::invalid_argument("volume spacing must be positive");
  }

  void validate() const {
    validate_geometry();
    if (data.size() != voxel_count())
      throw std::invalid_argument("volume data length does not match dims");
    if (std::abs(affine.det3()) < 1e-12)
      throw std::invalid_argument("volume affine is singular");
  }
};

/// Geometry comparison tolerance, in mm, used wherever two volumes must
/// share one grid.
inline constexpr double kGeometryTolMm = 1e-3;

inline bool same_geometry(const Volume3D& a, const Volume3D& b,
                          double tol = kGeometryTolMm) {
  if (a.dims != b.dims) return false;
  for (int i = 0; i < 3; ++i)
    if (std::abs(a.spacing[i] - b.spacing[i]) > tol) return false;
  for (int i = 0; i < 16; ++i)
    if (std::abs(a.affine.m[i] - b.affine.m[i]) > tol) return false;
  return true;
}

enum class Region { ET, TC, WT };

inline const char* region_name(Region r) {
  switch (r) {
    case Region::ET: return "ET";
    case Region::TC: return "TC";
    case Region::WT: return "WT";
  }
  return "?";
}

inline constexpr std::array<Region, 3> kAllRegions{Region::ET, Region::TC,
                                                   Region::WT};

/// Integer label coding for the tumor subregions and their composites.
/// ET = {et}, TC = {ncr, et}, WT = {ncr, ed, et}; nesting holds by
/// construction.
struct LabelScheme {
  int background = 0;
  int ncr = 1;
  int ed = 2;
  int et = 3;

  void validate() const {
    const std::array<int, 4> v{background, ncr, ed, et};
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = i + 1; j < v.size(); ++j)
        if (v[i] == v[j])
          throw std::invalid_argument("label scheme values must be distinct");
  }

  std::array<int, 4> all_labels() const { return {background, ncr, ed, et}; }

  /// Label values sorted ascending; fixes the channel order of
  /// probability volumes.
  std::array<int, 4> sorted_labels() const {
    std::array<int, 4> v = all_labels();
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3 - i; ++j)
        if (v[j] > v[j + 1]) std::swap(v[j], v[j + 1]);
    return v;
  }

  bool contains(int label) const {
    return label == background || label == ncr || label == ed || label == et;
  }

  bool in_region(int label, Region r) const {
    switch (r) {
      case Region::ET: return label == et;
      case Region::TC: return label == ncr || label == et;
      case Region::WT: return label == ncr || label == ed || label == et;
    }
    return false;
  }
};

/// Reads a label voxel as an integer. Labels are stored in float voxels
/// but are always exact small integers.
inline int label_at(const Volume3D& v, std::size_t idx) {
  return static_cast<int>(std::lround(static_cast<double>(v.data[idx])));
}

struct RegionMask {
  Region region = Region::WT;
  Volume3D mask;  // Label volume restricted to {0,1}

  std::size_t count() const {
    std::size_t n = 0;
    for (float f : mask.data) n += (f != 0.0f);
    return n;
  }
};

/// Binary mask of one composite region of a label volume.
/// Throws if the segmentation contains a label outside the scheme.
inline RegionMask region_mask(const Volume3D& seg, Region region,
                              const LabelScheme& scheme) {
  if (seg.kind != VolumeKind::Label)
    throw std::invalid_argument("region_mask requires a Label volume");
  RegionMask out;
  out.region = region;
  out.mask = seg;
  for (std::size_t i = 0; i < seg.data.size(); ++i) {
    const int lab = label_at(seg, i);
    if (!scheme.contains(lab))
      throw std::runtime_error("segmentation contains label " +
                               std::to_string(lab) +
                               " outside the configured label scheme");
    out.mask.data[i] = scheme.in_region(lab, region) ? 1.0f : 0.0f;
  }
  return out;
}

enum class Modality { T1, T1CE, T2, FLAIR };

inline constexpr std::array<Modality, 4> kAllModalities{
    Modality::T1, Modality::T1CE, Modality::T2, Modality::FLAIR};

/// BraTS file suffix for a modality (t1n/t1c/t2w/t2f).
inline const char* modality_suffix(Modality m) {
  switch (m) {
    case Modality::T1: return "t1n";
    case Modality::T1CE: return "t1c";
    case Modality::T2: return "t2w";
    case Modality::FLAIR: return "t2f";
  }
  return "?";
}

inline const char* modality_name(Modality m) {
  switch (m) {
    case Modality::T1: return "T1";
    case Modality::T1CE: return "T1CE";
    case Modality::T2: return "T2";
    case Modality::FLAIR: return "FLAIR";
  }
  return "?";
}

/// One subject: four modality volumes plus optional segmentation, all on
/// one grid.
struct Case {
  std::string case_id;
  std::array<Volume3D, 4> modalities;  // indexed by Modality order
  std::optional<Volume3D> segmentation;

  Volume3D& modality(Modality m) { return modalities[static_cast<int>(m)]; }
  const Volume3D& modality(Modality m) const {
    return modalities[static_cast<int>(m)];
  }

  /// All volumes of the case, segmentation last when present.
  std::vector<Volume3D*> all_volumes() {
    std::vector<Volume3D*> v;
    for (auto& vol : modalities) v.push_back(&vol);
    if (segmentation) v.push_back(&*segmentation);
    return v;
  }
  std::vector<const Volume3D*> all_volumes() const {
    std::vector<const Volume3D*> v;
    for (const auto& vol : modalities) v.push_back(&vol);
    if (segmentation) v.push_back(&*segmentation);
    return v;
  }

  /// Throws unless every present volume shares one grid.
  void validate_geometry() const {
    const Volume3D& ref = modalities[0];
    for (const Volume3D* v : all_volumes()) {
      if (!same_geometry(ref, *v))
        throw std::runtime_error("case " + case_id +
                                 ": volumes do not share one grid");
    }
    if (segmentation && segmentation->kind != VolumeKind::Label)
      throw std::runtime_error("case " + case_id +
                               ": segmentation must be a Label volume");
  }
};

/// Verifies a segmentation only holds labels of the scheme.
inline void validate_labels(const Volume3D& seg, const LabelScheme& scheme) {
  for (std::size_t i = 0; i < seg.data.size(); ++i) {
    const int lab = label_at(seg, i);
    if (!scheme.contains(lab))
      throw std::runtime_error("segmentation contains label " +
                               std::to_string(lab) +
                               " outside the configured label scheme");
  }
}

}  // namespace neurovolve

#endif  // NEUROVOLVE_VOLUME_HPP

#ifndef NEUROVOLVE_PHANTOM_HPP
#define NEUROVOLVE_PHANTOM_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "neurovolve/brats.hpp"
#include "neurovolve/parallel.hpp"
#include "neurovolve/rng.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::phantom {

namespace fs = std::filesystem;

struct Ellipsoid {
  Vec3 center;  // mm
  Vec3 radii;   // mm; a non-positive radius makes the ellipsoid empty

  bool contains(const Vec3& p) const {
    if (radii.x <= 0.0 || radii.y <= 0.0 || radii.z <= 0.0) return false;
    const double dx = (p.x - center.x) / radii.x;
    const double dy = (p.y - center.y) / radii.y;
    const double dz = (p.z - center.z) / radii.z;
    return dx * dx + dy * dy + dz * dz <= 1.0;
  }

  double volume_mm3() const {
    if (radii.x <= 0.0 || radii.y <= 0.0 || radii.z <= 0.0) return 0.0;
    return 4.0 / 3.0 * 3.14159265358979323846 * radii.x * radii.y * radii.z;
  }
};

/// Mean intensity per tissue class for one modality; background is 0.
struct TissueMeans {
  double brain = 100.0;
  double ncr = 45.0;
  double et = 90.0;
  double ed = 70.0;
};

/// Synthetic case geometry: a brain ellipsoid holding three nested tumor
/// ellipsoids (NCR core, ET shell, ED rim) around one shared tumor centre.
/// Radii must increase strictly per axis so the labels nest by construction.
struct PhantomSpec {
  std::array<int, 3> dims{64, 64, 64};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  Ellipsoid brain{{31.5, 31.5, 31.5}, {26.0, 24.0, 22.0}};
  Vec3 tumor_center{38.0, 35.0, 32.0};
  Vec3 ncr_radii{5.0, 5.0, 5.0};
  Vec3 et_radii{8.0, 7.5, 7.0};
  Vec3 ed_radii{12.0, 11.0, 10.0};
  std::array<TissueMeans, 4> intensities{
      TissueMeans{100.0, 45.0, 90.0, 70.0},    // T1
      TissueMeans{100.0, 35.0, 170.0, 75.0},   // T1CE
      TissueMeans{85.0, 140.0, 105.0, 135.0},  // T2
      TissueMeans{90.0, 70.0, 115.0, 150.0},   // FLAIR
  };
  double noise_std = 2.0;
  std::uint64_t seed = 0;

  Ellipsoid ncr() const { return {tumor_center, ncr_radii}; }
  Ellipsoid et() const { return {tumor_center, et_radii}; }
  Ellipsoid ed() const { return {tumor_center, ed_radii}; }

  void validate() const {
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0)
      throw std::invalid_argument("phantom dims must be positive");
    if (spacing[0] <= 0.0 || spacing[1] <= 0.0 || spacing[2] <= 0.0)
      throw std::invalid_argument("phantom spacing must be positive");
    const bool has_tumor =
        ncr_radii.x > 0.0 || et_radii.x > 0.0 || ed_radii.x > 0.0;
    if (!has_tumor) return;
    const double rs[3][3] = {{ncr_radii.x, et_radii.x, ed_radii.x},
                             {ncr_radii.y, et_radii.y, ed_radii.y},
                             {ncr_radii.z, et_radii.z, ed_radii.z}};
    for (const auto& axis : rs)
      if (!(axis[0] < axis[1] && axis[1] < axis[2]))
        throw std::invalid_argument(
            "tumor radii must increase strictly (NCR < ET < ED) per axis");
    // Sufficient containment check: the tumor fits into the inscribed
    // sphere of the brain ellipsoid.
    const double dist = (tumor_center - brain.center).norm();
    const double max_ed = std::max({ed_radii.x, ed_radii.y, ed_radii.z});
    const double min_brain = std::min({brain.radii.x, brain.radii.y,
                                       brain.radii.z});
    if (dist + max_ed > min_brain)
      throw std::invalid_argument("tumor does not fit inside the brain");
  }
};

enum class Tissue { Background, Brain, NCR, ET, ED };

/// Deterministic synthetic case: labels by ellipsoid membership (innermost
/// wins), intensities from per-tissue means plus Gaussian noise.
inline Case generate_case(const PhantomSpec& spec,
                          const std::string& case_id = "BraTS-PHANTOM-00000-000",
                          const LabelScheme& scheme = {}) {
  spec.validate();
  scheme.validate();

  Case c;
  c.case_id = case_id;

  const int nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const Ellipsoid ncr = spec.ncr(), et = spec.et(), ed = spec.ed();

  Volume3D seg(spec.dims, spec.spacing, VolumeKind::Label);
  std::vector<Tissue> tissue(seg.voxel_count());
  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++idx) {
        const Vec3 p{i * spec.spacing[0], j * spec.spacing[1],
                     k * spec.spacing[2]};
        Tissue t = Tissue::Background;
        int label = scheme.background;
        if (ncr.contains(p)) {
          t = Tissue::NCR;
          label = scheme.ncr;
        } else if (et.contains(p)) {
          t = Tissue::ET;
          label = scheme.et;
        } else if (ed.contains(p)) {
          t = Tissue::ED;
          label = scheme.ed;
        } else if (spec.brain.contains(p)) {
          t = Tissue::Brain;
        }
        tissue[idx] = t;
        seg.data[idx] = static_cast<float>(label);
      }

  for (Modality m : kAllModalities) {
    const int mi = static_cast<int>(m);
    const TissueMeans& means = spec.intensities[mi];
    Volume3D vol(spec.dims, spec.spacing, VolumeKind::Intensity);
    // Noise depends only on (seed, modality), so equal specs give equal
    // cases regardless of the id.
    RngStream rng(spec.seed, "phantom", 0, static_cast<std::uint64_t>(mi));
    for (std::size_t v = 0; v < vol.data.size(); ++v) {
      double mean = 0.0;
      switch (tissue[v]) {
        case Tissue::Background: mean = 0.0; break;
        case Tissue::Brain: mean = means.brain; break;
        case Tissue::NCR: mean = means.ncr; break;
        case Tissue::ET: mean = means.et; break;
        case Tissue::ED: mean = means.ed; break;
      }
      double value = mean;
      if (spec.noise_std > 0.0 && tissue[v] != Tissue::Background)
        value += rng.normal(0.0, spec.noise_std);
      vol.data[v] = static_cast<float>(value);
    }
    c.modality(m) = std::move(vol);
  }
  c.segmentation = std::move(seg);
  return c;
}

struct PhantomJitter {
  double center_mm = 3.0;   // per-axis uniform tumor-centre shift
  double radii_frac = 0.15;  // shared multiplicative radius factor

  bool is_zero() const { return center_mm == 0.0 && radii_frac == 0.0; }
};

inline std::string phantom_case_id(int index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "BraTS-PHANTOM-%05d-000", index);
  return buf;
}

/// Writes n jittered cases in BraTS layout, ids BraTS-PHANTOM-000NN-000.
/// With zero jitter every case is identical up to its id.
inline std::vector<std::string> generate_dataset(
    int n, const PhantomSpec& base_spec, const PhantomJitter& jitter,
    const fs::path& output_dir, const LabelScheme& scheme = {},
    int workers = 0, int gzip_level = nifti::kDefaultGzipLevel) {
  if (n < 1) throw std::invalid_argument("case count must be >= 1");
  base_spec.validate();
  fs::create_directories(output_dir);

  std::vector<std::string> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = phantom_case_id(i + 1);

  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
    PhantomSpec spec = base_spec;
    if (!jitter.is_zero()) {
      RngStream rng(base_spec.seed, ids[i], i, 0);
      spec.seed = derive_stream_seed(base_spec.seed, ids[i], i, 1);
      for (double* c : {&spec.tumor_center.x, &spec.tumor_center.y,
                        &spec.tumor_center.z})
        *c += rng.uniform(-jitter.center_mm, jitter.center_mm);
      const double f = rng.uniform(1.0 - jitter.radii_frac,
                                   1.0 + jitter.radii_frac);
      for (Vec3* r : {&spec.ncr_radii, &spec.et_radii, &spec.ed_radii}) {
        r->x *= f;
        r->y *= f;
        r->z *= f;
      }
      // Pull the tumor back toward the brain centre if the jitter pushed
      // it out of the containment margin.
      const double max_ed =
          std::max({spec.ed_radii.x, spec.ed_radii.y, spec.ed_radii.z});
      const double min_brain = std::min({spec.brain.radii.x,
                                         spec.brain.radii.y,
                                         spec.brain.radii.z});
      const Vec3 offset = spec.tumor_center - spec.brain.center;
      const double dist = offset.norm();
      const double allowed = min_brain - max_ed;
      if (dist > allowed && dist > 0.0) {
        const double scale = (allowed > 0.0 ? allowed : 0.0) / dist;
        spec.tumor_center = spec.brain.center + offset * scale;
      }
    }
    const Case c = generate_case(spec, ids[i], scheme);
    brats::save_case(c, output_dir, gzip_level);
  });
  return ids;
}

// ---------------------------------------------------------------------------
// JSON spec parsing (strict).
// ---------------------------------------------------------------------------

inline Vec3 parse_vec3(const nlohmann::json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 3)
    throw std::runtime_error("config: " + context +
                             " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline PhantomSpec parse_phantom_spec(const nlohmann::json& j);

inline void check_phantom_keys(const nlohmann::json& obj,
                               std::initializer_list<const char*> allowed,
                               const std::string& context) {
  if (!obj.is_object())
    throw std::runtime_error("config: " + context + " must be an object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok |= (item.key() == a);
    if (!ok)
      throw std::runtime_error("config: unknown key \"" + item.key() +
                               "\" in " + context);
  }
}

inline PhantomSpec parse_phantom_spec(const nlohmann::json& j) {
  check_phantom_keys(j,
                     {"dims", "spacing", "brain_center", "brain_radii",
                      "tumor_center", "ncr_radii", "et_radii", "ed_radii",
                      "intensities", "noise_std", "seed"},
                     "phantom spec");
  PhantomSpec spec;
  if (j.contains("dims")) {
    const auto& d = j.at("dims");
    if (!d.is_array() || d.size() != 3)
      throw std::runtime_error("config: dims must be an array of 3 integers");
    spec.dims = {d[0].get<int>(), d[1].get<int>(), d[2].get<int>()};
  }
  if (j.contains("spacing")) {
    const auto v = parse_vec3(j.at("spacing"), "spacing");
    spec.spacing = {v.x, v.y, v.z};
  }
  if (j.contains("brain_center"))
    spec.brain.center = parse_vec3(j.at("brain_center"), "brain_center");
  if (j.contains("brain_radii"))
    spec.brain.radii = parse_vec3(j.at("brain_radii"), "brain_radii");
  if (j.contains("tumor_center"))
    spec.tumor_center = parse_vec3(j.at("tumor_center"), "tumor_center");
  if (j.contains("ncr_radii"))
    spec.ncr_radii = parse_vec3(j.at("ncr_radii"), "ncr_radii");
  if (j.contains("et_radii"))
    spec.et_radii = parse_vec3(j.at("et_radii"), "et_radii");
  if (j.contains("ed_radii"))
    spec.ed_radii = parse_vec3(j.at("ed_radii"), "ed_radii");
  if (j.contains("intensities")) {
    const auto& jm = j.at("intensities");
    check_phantom_keys(jm, {"T1", "T1CE", "T2", "FLAIR"}, "intensities");
    for (Modality m : kAllModalities) {
      const char* name = modality_name(m);
      if (!jm.contains(name)) continue;
      const auto& t = jm.at(name);
      check_phantom_keys(t, {"brain", "ncr", "et", "ed"},
                         std::string("intensities.") + name);
      TissueMeans& means = spec.intensities[static_cast<int>(m)];
      means.brain = t.value("brain", means.brain);
      means.ncr = t.value("ncr", means.ncr);
      means.et = t.value("et", means.et);
      means.ed = t.value("ed", means.ed);
    }
  }
  if (j.contains("noise_std")) spec.noise_std = j.at("noise_std").get<double>();
  if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
  spec.validate();
  return spec;
}

}  // namespace neurovolve::phantom

#endif  // NEUROVOLVE_PHANTOM_HPP

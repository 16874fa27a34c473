#ifndef NEUROVOLVE_TRANSFORMS_HPP
#define NEUROVOLVE_TRANSFORMS_HPP

#include <array>
#include <cmath>
#include <iostream>
#include <vector>

#include "neurovolve/geometry.hpp"
#include "neurovolve/morphology.hpp"
#include "neurovolve/resample.hpp"
#include "neurovolve/rng.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::augment {

struct AffineParams {
  double rotation_deg = 10.0;   // per-axis angle sampled in [-r, +r]
  double scale_min = 0.9;       // per-axis scale
  double scale_max = 1.1;
  double translation_mm = 5.0;  // per-axis shift sampled in [-t, +t]
};

struct FlipParams {
  // Mirror probability per axis; default flips only left-right (x).
  std::array<double, 3> axis_probabilities{0.5, 0.0, 0.0};
};

struct BiasFieldParams {
  int order = 3;
  double coeff_min = -0.3;
  double coeff_max = 0.3;
};

struct ElasticParams {
  std::array<int, 3> grid_shape{7, 7, 7};
  double max_disp_mm = 6.0;
};

struct LabelMaskedElasticParams {
  std::array<int, 3> grid_shape{7, 7, 7};
  double max_disp_mm = 10.0;
  int dilation_vox = 5;
  double sigma_vox = 2.0;
};

// ---------------------------------------------------------------------------
// Deterministic kernels. The random_* wrappers below only sample parameters
// and delegate here, so tests can drive exact inputs.
// ---------------------------------------------------------------------------

/// One spatial affine applied identically to every volume of the case:
/// rotation (Rz*Ry*Rx) and scaling about the world centre of the grid,
/// then translation. Trilinear for intensities, nearest for labels,
/// out-of-bounds fills with background 0.
inline Case apply_affine(const Case& in,
                         const std::array<double, 3>& rotation_rad,
                         const std::array<double, 3>& scales,
                         const std::array<double, 3>& translation_mm) {
  in.validate_geometry();
  const Vec3 center = in.modalities[0].world_center();
  const Mat4 rot =
      rotation_xyz(rotation_rad[0], rotation_rad[1], rotation_rad[2]);
  const Mat4 rs = rot * Mat4::diagonal(scales[0], scales[1], scales[2]);
  const Mat4 transform =
      Mat4::translation({center.x + translation_mm[0],
                         center.y + translation_mm[1],
                         center.z + translation_mm[2]}) *
      (rs * Mat4::translation({-center.x, -center.y, -center.z}));

  Case out = in;
  if (transform.is_identity()) return out;
  for (Modality m : kAllModalities)
    out.modality(m) = resample::warp_world_affine(
        in.modality(m), transform, resample::Interpolation::Trilinear);
  if (in.segmentation)
    out.segmentation = resample::warp_world_affine(
        *in.segmentation, transform, resample::Interpolation::Nearest);
  return out;
}

/// Mirrors the case along the selected axes; exact.
inline Case flip_axes(const Case& in, const std::array<bool, 3>& axes) {
  Case out = in;
  for (Modality m : kAllModalities)
    out.modality(m) = resample::flip_volume(in.modality(m), axes);
  if (in.segmentation)
    out.segmentation = resample::flip_volume(*in.segmentation, axes);
  return out;
}

/// Monomial exponents (a,b,c) with a+b+c <= order, enumerated by total
/// degree then descending powers of x, y. The coefficient vector of the
/// bias field follows this order.
inline std::vector<std::array<int, 3>> bias_monomials(int order) {
  std::vector<std::array<int, 3>> mono;
  for (int d = 0; d <= order; ++d)
    for (int a = d; a >= 0; --a)
      for (int b = d - a; b >= 0; --b) mono.push_back({a, b, d - a - b});
  return mono;
}

/// Multiplicative bias field B(x) = exp(P(x)) with P a polynomial in
/// coordinates normalized to [-1,1]^3. B > 0 everywhere.
inline Volume3D apply_bias_field(const Volume3D& in,
                                 const std::vector<double>& coeffs,
                                 int order) {
  const auto mono = bias_monomials(order);
  if (coeffs.size() != mono.size())
    throw std::invalid_argument(
        "bias field expects " + std::to_string(mono.size()) +
        " coefficients for order " + std::to_string(order));
  bool all_zero = true;
  for (double c : coeffs) all_zero &= (c == 0.0);
  if (all_zero) return in;

  const int nx = in.dims[0], ny = in.dims[1], nz = in.dims[2];
  auto powers = [order](int n) {
    std::vector<double> p(static_cast<std::size_t>(n) * (order + 1));
    for (int i = 0; i < n; ++i) {
      const double u = n == 1 ? 0.0 : 2.0 * i / (n - 1) - 1.0;
      double acc = 1.0;
      for (int e = 0; e <= order; ++e) {
        p[static_cast<std::size_t>(i) * (order + 1) + e] = acc;
        acc *= u;
      }
    }
    return p;
  };
  const auto px = powers(nx), py = powers(ny), pz = powers(nz);

  Volume3D out = in;
  std::size_t idx = 0;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i, ++idx) {
        double poly = 0.0;
        for (std::size_t m = 0; m < mono.size(); ++m) {
          poly += coeffs[m] *
                  px[static_cast<std::size_t>(i) * (order + 1) + mono[m][0]] *
                  py[static_cast<std::size_t>(j) * (order + 1) + mono[m][1]] *
                  pz[static_cast<std::size_t>(k) * (order + 1) + mono[m][2]];
        }
        out.data[idx] =
            static_cast<float>(static_cast<double>(in.data[idx]) *
                               std::exp(poly));
      }
  return out;
}

/// Samples a coarse lattice of uniform displacement vectors (components in
/// [-max_disp, +max_disp] mm) and upsamples it trilinearly to a dense
/// field. Boundary control points are held at zero so the field vanishes
/// at the volume faces.
inline resample::DisplacementField sample_elastic_field(
    const std::array<int, 3>& dims, const std::array<int, 3>& grid_shape,
    double max_disp_mm, RngStream& rng) {
  const int gx = grid_shape[0], gy = grid_shape[1], gz = grid_shape[2];
  if (gx < 2 || gy < 2 || gz < 2)
    throw std::invalid_argument("elastic control grid must be >= 2 per axis");
  if (max_disp_mm < 0.0)
    throw std::invalid_argument("max displacement must be >= 0");

  const std::size_t ncp = static_cast<std::size_t>(gx) * gy * gz;
  std::vector<std::array<float, 3>> control(ncp, {0.0f, 0.0f, 0.0f});
  std::size_t c = 0;
  for (int ck = 0; ck < gz; ++ck)
    for (int cj = 0; cj < gy; ++cj)
      for (int ci = 0; ci < gx; ++ci, ++c) {
        const bool boundary = ci == 0 || ci == gx - 1 || cj == 0 ||
                              cj == gy - 1 || ck == 0 || ck == gz - 1;
        if (boundary) continue;
        for (int axis = 0; axis < 3; ++axis)
          control[c][axis] = static_cast<float>(
              rng.uniform(-max_disp_mm, max_disp_mm));
      }

  resample::DisplacementField field(dims);
  auto cp = [&](int axis) {
    return [&control, gx, gy, axis](int a, int b, int cc) {
      return static_cast<double>(
          control[static_cast<std::size_t>(cc) * gy * gx +
                  static_cast<std::size_t>(b) * gx + a][axis]);
    };
  };
  field.ux = resample::upsample_control_grid(dims, grid_shape, cp(0));
  field.uy = resample::upsample_control_grid(dims, grid_shape, cp(1));
  field.uz = resample::upsample_control_grid(dims, grid_shape, cp(2));
  return field;
}

/// Warps every volume of the case through one shared displacement field.
inline Case warp_case(const Case& in, const resample::DisplacementField& f) {
  Case out = in;
  for (Modality m : kAllModalities)
    out.modality(m) = resample::warp_displacement(
        in.modality(m), f, resample::Interpolation::Trilinear);
  if (in.segmentation)
    out.segmentation = resample::warp_displacement(
        *in.segmentation, f, resample::Interpolation::Nearest);
  return out;
}

/// Soft weight in [0,1] for the label-masked elastic transform: the WT
/// mask dilated by a 26-connectivity ball, Gaussian-smoothed, renormalized
/// to 1 on the undilated WT support, and clamped to zero outside the
/// dilated support so untouched tissue stays bitwise identical.
inline std::vector<float> label_mask_weight(
    const std::vector<std::uint8_t>& wt_mask, const std::array<int, 3>& dims,
    int dilation_vox, double sigma_vox) {
  const auto dilated = morphology::dilate_chebyshev(wt_mask, dims,
                                                    dilation_vox);
  std::vector<float> field(dilated.size());
  for (std::size_t i = 0; i < dilated.size(); ++i)
    field[i] = dilated[i] ? 1.0f : 0.0f;
  auto smooth = morphology::gaussian_smooth(field, dims, sigma_vox);

  double ref = 1.0;
  bool have_ref = false;
  for (std::size_t i = 0; i < wt_mask.size(); ++i)
    if (wt_mask[i]) {
      const double s = smooth[i];
      if (!have_ref || s < ref) {
        ref = s;
        have_ref = true;
      }
    }
  if (!have_ref || ref <= 0.0) ref = 1.0;

  std::vector<float> w(smooth.size(), 0.0f);
  for (std::size_t i = 0; i < smooth.size(); ++i) {
    if (!dilated[i]) continue;  // w is exactly 0 outside the dilated support
    const double v = smooth[i] / ref;
    w[i] = static_cast<float>(v >= 1.0 ? 1.0 : v);
  }
  return w;
}

// ---------------------------------------------------------------------------
// Randomized transforms.
// ---------------------------------------------------------------------------

inline Case random_affine(const Case& in, const AffineParams& p,
                          RngStream& rng) {
  const double r = p.rotation_deg * 3.14159265358979323846 / 180.0;
  std::array<double, 3> rot{}, scales{}, trans{};
  for (int a = 0; a < 3; ++a) rot[a] = rng.uniform(-r, r);
  for (int a = 0; a < 3; ++a) {
    double s = rng.uniform(p.scale_min, p.scale_max);
    while (s <= 0.0) s = rng.uniform(p.scale_min, p.scale_max);
    scales[a] = s;
  }
  for (int a = 0; a < 3; ++a)
    trans[a] = rng.uniform(-p.translation_mm, p.translation_mm);
  return apply_affine(in, rot, scales, trans);
}

inline Case random_flip(const Case& in, const FlipParams& p, RngStream& rng) {
  std::array<bool, 3> axes{};
  for (int a = 0; a < 3; ++a) axes[a] = rng.bernoulli(p.axis_probabilities[a]);
  return flip_axes(in, axes);
}

/// Per-modality multiplicative bias field; coefficient sets are drawn
/// sequentially in modality order. The segmentation is untouched.
inline Case random_bias_field(const Case& in, const BiasFieldParams& p,
                              RngStream& rng) {
  if (p.order < 0) throw std::invalid_argument("bias field order must be >= 0");
  const std::size_t ncoef = bias_monomials(p.order).size();
  Case out = in;
  for (Modality m : kAllModalities) {
    std::vector<double> coeffs(ncoef);
    for (auto& c : coeffs) c = rng.uniform(p.coeff_min, p.coeff_max);
    out.modality(m) = apply_bias_field(in.modality(m), coeffs, p.order);
  }
  return out;
}

inline Case random_elastic(const Case& in, const ElasticParams& p,
                           RngStream& rng) {
  if (p.max_disp_mm == 0.0) return in;
  const auto field = sample_elastic_field(in.modalities[0].dims, p.grid_shape,
                                          p.max_disp_mm, rng);
  return warp_case(in, field);
}

/// Elastic deformation restricted to the tumor: the sampled dense field is
/// scaled voxelwise by the soft WT weight before warping, so brain tissue
/// outside the dilated tumor support is bitwise unchanged. One shared
/// field warps all four modalities and the segmentation.
inline Case label_masked_elastic(const Case& in, const LabelScheme& scheme,
                                 const LabelMaskedElasticParams& p,
                                 RngStream& rng) {
  if (!in.segmentation)
    throw std::runtime_error("label_masked_elastic: case " + in.case_id +
                             " has no segmentation");
  if (p.max_disp_mm == 0.0) return in;

  const RegionMask wt = region_mask(*in.segmentation, Region::WT, scheme);
  const auto wt_bin = morphology::to_binary(wt.mask);
  bool any = false;
  for (auto b : wt_bin) any |= (b != 0);
  if (!any) {
    std::cerr << "warning: case " << in.case_id
              << " has an empty WT mask; label-masked elastic is a no-op\n";
    return in;
  }

  const auto dims = in.modalities[0].dims;
  auto field = sample_elastic_field(dims, p.grid_shape, p.max_disp_mm, rng);
  const auto w = label_mask_weight(wt_bin, dims, p.dilation_vox, p.sigma_vox);
  for (std::size_t i = 0; i < w.size(); ++i) {
    field.ux[i] *= w[i];
    field.uy[i] *= w[i];
    field.uz[i] *= w[i];
  }
  return warp_case(in, field);
}

}  // namespace neurovolve::augment

#endif  // NEUROVOLVE_TRANSFORMS_HPP

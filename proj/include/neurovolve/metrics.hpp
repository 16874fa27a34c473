#ifndef NEUROVOLVE_METRICS_HPP
#define NEUROVOLVE_METRICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "neurovolve/components.hpp"
#include "neurovolve/distance.hpp"
#include "neurovolve/morphology.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::metrics {

/// Tolerance absorbing floating-point ties at exactly tau.
inline constexpr double kNsdEpsilon = 1e-9;

struct MetricParams {
  int connectivity = 26;
  int dilation_vox = 3;
  std::size_t min_lesion_vox = 0;
  double tau_mm = 1.0;
};

inline void require_same_dims(const std::array<int, 3>& a,
                              const std::array<int, 3>& b,
                              const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) +
                                ": mask dimensions differ");
}

/// Plain Dice overlap 2|a.b| / (|a|+|b|); 1 when both masks are empty.
inline double dice(const std::vector<std::uint8_t>& a,
                   const std::vector<std::uint8_t>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("dice: mask dimensions differ");
  std::size_t na = 0, nb = 0, inter = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] != 0;
    nb += b[i] != 0;
    inter += (a[i] != 0) && (b[i] != 0);
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

inline double dice(const Volume3D& a, const Volume3D& b) {
  require_same_dims(a.dims, b.dims, "dice");
  return dice(morphology::to_binary(a), morphology::to_binary(b));
}

/// Per-lesion matching outcome of lesion_wise_dice.
struct LesionMatchReport {
  struct GtLesion {
    int lesion_id = 0;  // component id in the GT labeling
    std::size_t voxels = 0;
    std::vector<int> matched_pred_components;
    double dice = 0.0;  // undilated lesion vs union of matched components
  };
  std::vector<GtLesion> lesions;           // scored GT lesions
  std::vector<int> false_positives;        // unmatched pred component ids
  std::vector<int> false_negatives;        // GT lesion ids with no match
  std::vector<int> excluded_gt_lesions;    // below min_lesion_vox
  std::vector<int> excluded_pred_components;
};

/// Lesion-wise Dice. GT components are dilated by a 26-connectivity ball of
/// `dilation_vox` to form matching zones; a prediction component is
/// assigned to the zone it overlaps most (ties to the lower lesion id).
/// Each scored GT lesion contributes the Dice between the undilated lesion
/// and the union of its assigned components; unmatched GT lesions and
/// unmatched prediction components contribute 0. The score is the mean over
/// scored GT lesions plus false-positive components. Lesions and components
/// below min_lesion_vox are removed before matching.
inline std::pair<double, LesionMatchReport> lesion_wise_dice(
    const Volume3D& gt, const Volume3D& pred,
    const MetricParams& params = {}) {
  require_same_dims(gt.dims, pred.dims, "lesion_wise_dice");
  const auto conn = components::connectivity_from_int(params.connectivity);
  const auto gt_bin = morphology::to_binary(gt);
  const auto pred_bin = morphology::to_binary(pred);

  const auto gt_cc =
      components::connected_components(gt_bin, gt.dims, conn, gt.spacing);
  const auto pred_cc =
      components::connected_components(pred_bin, pred.dims, conn,
                                       pred.spacing);

  LesionMatchReport report;
  std::vector<int> gt_ids, pred_ids;
  for (int id = 1; id <= gt_cc.count; ++id) {
    if (gt_cc.component_size(id) < params.min_lesion_vox)
      report.excluded_gt_lesions.push_back(id);
    else
      gt_ids.push_back(id);
  }
  for (int id = 1; id <= pred_cc.count; ++id) {
    if (pred_cc.component_size(id) < params.min_lesion_vox)
      report.excluded_pred_components.push_back(id);
    else
      pred_ids.push_back(id);
  }

  // Matching zone per scored GT lesion.
  std::vector<std::vector<std::uint8_t>> zones;
  zones.reserve(gt_ids.size());
  for (int id : gt_ids)
    zones.push_back(morphology::dilate_chebyshev(gt_cc.component_mask(id),
                                                 gt.dims,
                                                 params.dilation_vox));

  // Assign each prediction component to the zone of greatest overlap.
  std::vector<std::vector<int>> assigned(gt_ids.size());
  for (int pid : pred_ids) {
    std::size_t best_overlap = 0;
    int best_zone = -1;
    for (std::size_t z = 0; z < zones.size(); ++z) {
      std::size_t overlap = 0;
      for (std::size_t idx : pred_cc.voxels[pid - 1]) overlap += zones[z][idx];
      if (overlap > best_overlap) {
        best_overlap = overlap;
        best_zone = static_cast<int>(z);
      }
    }
    if (best_zone < 0)
      report.false_positives.push_back(pid);
    else
      assigned[best_zone].push_back(pid);
  }

  double sum = 0.0;
  for (std::size_t z = 0; z < gt_ids.size(); ++z) {
    const int gid = gt_ids[z];
    LesionMatchReport::GtLesion lesion;
    lesion.lesion_id = gid;
    lesion.voxels = gt_cc.component_size(gid);
    lesion.matched_pred_components = assigned[z];
    if (assigned[z].empty()) {
      lesion.dice = 0.0;
      report.false_negatives.push_back(gid);
    } else {
      std::size_t union_size = 0, inter = 0;
      for (int pid : assigned[z]) {
        union_size += pred_cc.component_size(pid);
        for (std::size_t idx : pred_cc.voxels[pid - 1])
          inter += (gt_cc.labels[idx] == gid);
      }
      lesion.dice = 2.0 * static_cast<double>(inter) /
                    static_cast<double>(lesion.voxels + union_size);
    }
    sum += lesion.dice;
    report.lesions.push_back(std::move(lesion));
  }

  const std::size_t denom = gt_ids.size() + report.false_positives.size();
  double score;
  if (denom == 0)
    score = 1.0;  // nothing to score on either side
  else if (gt_ids.empty())
    score = 0.0;  // no GT lesions but spurious predictions
  else
    score = sum / static_cast<double>(denom);
  return {score, std::move(report)};
}

/// Normalized Surface Distance at tolerance tau (mm): the fraction of
/// combined surface voxels lying within tau of the other mask's surface.
/// Distances are Euclidean between voxel centres with per-axis spacing.
/// Both masks empty -> 1; exactly one empty -> 0.
inline double nsd(const Volume3D& gt, const Volume3D& pred, double tau_mm,
                  double epsilon = kNsdEpsilon) {
  require_same_dims(gt.dims, pred.dims, "nsd");
  if (tau_mm < 0.0) throw std::invalid_argument("nsd: tau must be >= 0");
  const auto gt_bin = morphology::to_binary(gt);
  const auto pred_bin = morphology::to_binary(pred);
  const bool gt_empty =
      std::none_of(gt_bin.begin(), gt_bin.end(), [](auto v) { return v; });
  const bool pred_empty =
      std::none_of(pred_bin.begin(), pred_bin.end(), [](auto v) { return v; });
  if (gt_empty && pred_empty) return 1.0;
  if (gt_empty != pred_empty) return 0.0;

  const auto surf_g = distance::surface_voxels(gt_bin, gt.dims);
  const auto surf_p = distance::surface_voxels(pred_bin, pred.dims);
  const auto d2_from_g = distance::squared_edt(surf_g, gt.dims, gt.spacing);
  const auto d2_from_p = distance::squared_edt(surf_p, gt.dims, gt.spacing);

  const double limit = tau_mm + epsilon;
  std::size_t ng = 0, np = 0, within_g = 0, within_p = 0;
  for (std::size_t i = 0; i < surf_g.size(); ++i) {
    if (surf_p[i]) {
      ++np;
      within_p += (std::sqrt(d2_from_g[i]) <= limit);
    }
    if (surf_g[i]) {
      ++ng;
      within_g += (std::sqrt(d2_from_p[i]) <= limit);
    }
  }
  return static_cast<double>(within_p + within_g) /
         static_cast<double>(np + ng);
}

// ---------------------------------------------------------------------------
// Case scoring and aggregation.
// ---------------------------------------------------------------------------

struct RegionScores {
  double lsd = 0.0;
  double nsd = 0.0;
};

struct CaseScores {
  std::string case_id;
  std::array<RegionScores, 3> regions;  // indexed by Region enum order

  RegionScores& region(Region r) { return regions[static_cast<int>(r)]; }
  const RegionScores& region(Region r) const {
    return regions[static_cast<int>(r)];
  }
};

struct ScoreAggregates {
  std::array<RegionScores, 3> region_means;
  RegionScores avg;  // arithmetic mean over ET, TC, WT
};

struct ScoreReport {
  std::vector<CaseScores> cases;
  ScoreAggregates aggregates;
};

/// Scores one prediction against the ground truth: per region, builds the
/// composite masks and computes lesion-wise Dice and NSD.
inline CaseScores score_case(const Volume3D& gt_seg, const Volume3D& pred_seg,
                             const LabelScheme& scheme,
                             const MetricParams& params = {},
                             const std::string& case_id = {}) {
  if (!same_geometry(gt_seg, pred_seg))
    throw std::runtime_error("score_case: " + case_id +
                             ": prediction grid does not match ground truth");
  CaseScores row;
  row.case_id = case_id;
  for (Region r : kAllRegions) {
    const RegionMask gm = region_mask(gt_seg, r, scheme);
    const RegionMask pm = region_mask(pred_seg, r, scheme);
    auto [lsd, match] = lesion_wise_dice(gm.mask, pm.mask, params);
    (void)match;
    row.region(r).lsd = lsd;
    row.region(r).nsd = nsd(gm.mask, pm.mask, params.tau_mm);
  }
  return row;
}

/// Per-region arithmetic means across cases plus their overall average
/// (AVG = mean of the three per-region means).
inline ScoreAggregates aggregate(const std::vector<CaseScores>& rows) {
  if (rows.empty())
    throw std::invalid_argument("aggregate: no score rows");
  ScoreAggregates agg;
  for (Region r : kAllRegions) {
    double lsd = 0.0, nsd_sum = 0.0;
    for (const auto& row : rows) {
      lsd += row.region(r).lsd;
      nsd_sum += row.region(r).nsd;
    }
    agg.region_means[static_cast<int>(r)] = {lsd / rows.size(),
                                             nsd_sum / rows.size()};
  }
  agg.avg.lsd = (agg.region_means[0].lsd + agg.region_means[1].lsd +
                 agg.region_means[2].lsd) / 3.0;
  agg.avg.nsd = (agg.region_means[0].nsd + agg.region_means[1].nsd +
                 agg.region_means[2].nsd) / 3.0;
  return agg;
}

inline ScoreReport make_report(std::vector<CaseScores> rows) {
  ScoreReport report;
  report.aggregates = aggregate(rows);
  report.cases = std::move(rows);
  return report;
}

inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

/// CSV emission: one row per case per region, fixed columns.
inline std::string report_to_csv(const ScoreReport& report) {
  std::string out = "case_id,region,lsd,nsd\n";
  for (const auto& row : report.cases)
    for (Region r : kAllRegions) {
      out += row.case_id;
      out += ',';
      out += region_name(r);
      out += ',';
      out += format_score(row.region(r).lsd);
      out += ',';
      out += format_score(row.region(r).nsd);
      out += '\n';
    }
  return out;
}

inline nlohmann::json report_to_json(const ScoreReport& report) {
  nlohmann::json j;
  j["cases"] = nlohmann::json::array();
  for (const auto& row : report.cases) {
    nlohmann::json jc;
    jc["case_id"] = row.case_id;
    for (Region r : kAllRegions)
      jc["regions"][region_name(r)] = {{"lsd", row.region(r).lsd},
                                       {"nsd", row.region(r).nsd}};
    j["cases"].push_back(jc);
  }
  for (Region r : kAllRegions) {
    const auto& m = report.aggregates.region_means[static_cast<int>(r)];
    j["aggregates"][region_name(r)] = {{"lsd", m.lsd}, {"nsd", m.nsd}};
  }
  j["aggregates"]["AVG"] = {{"lsd", report.aggregates.avg.lsd},
                            {"nsd", report.aggregates.avg.nsd}};
  return j;
}

}  // namespace neurovolve::metrics

#endif  // NEUROVOLVE_METRICS_HPP

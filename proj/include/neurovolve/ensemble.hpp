#ifndef NEUROVOLVE_ENSEMBLE_HPP
#define NEUROVOLVE_ENSEMBLE_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "neurovolve/brats.hpp"
#include "neurovolve/nifti.hpp"
#include "neurovolve/parallel.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::ensemble {

namespace fs = std::filesystem;

/// Per-voxel probability vector over the label set. Channels follow the
/// scheme's labels in ascending order; each voxel's probabilities must be
/// non-negative and sum to 1 within 1e-5.
struct ProbabilityVolume {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  Mat4 affine = Mat4::identity();
  std::vector<int> labels;              // ascending
  std::vector<std::vector<float>> channels;  // one per label

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }

  void validate(double tol = 1e-5) const {
    if (channels.size() != labels.size())
      throw std::invalid_argument("probability volume channel/label mismatch");
    const std::size_t n = voxel_count();
    for (const auto& c : channels)
      if (c.size() != n)
        throw std::invalid_argument("probability channel size mismatch");
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (const auto& c : channels) {
        if (c[i] < -static_cast<float>(tol))
          throw std::runtime_error("probability volume has negative entries");
        sum += c[i];
      }
      if (std::abs(sum - 1.0) > tol)
        throw std::runtime_error(
            "probability vectors must sum to 1 (voxel " + std::to_string(i) +
            " sums to " + std::to_string(sum) + ")");
    }
  }
};

enum class FusionMode { ProbabilityMean, MajorityVote };

inline FusionMode fusion_mode_from_string(const std::string& s) {
  if (s == "probability_mean") return FusionMode::ProbabilityMean;
  if (s == "majority_vote") return FusionMode::MajorityVote;
  throw std::runtime_error("unknown ensemble mode \"" + s +
                           "\" (expected probability_mean or majority_vote)");
}

inline const char* fusion_mode_name(FusionMode m) {
  return m == FusionMode::ProbabilityMean ? "probability_mean"
                                          : "majority_vote";
}

struct EnsembleSpec {
  std::vector<std::string> members;  // e.g. {"S", "M", "R"}
  std::vector<double> weights;       // empty = uniform
  FusionMode mode = FusionMode::ProbabilityMean;

  /// Weights normalized to sum 1; defaults to uniform.
  std::vector<double> normalized_weights() const {
    const std::size_t n = members.empty() ? weights.size() : members.size();
    std::vector<double> w = weights;
    if (w.empty()) w.assign(std::max<std::size_t>(n, 1), 1.0);
    double sum = 0.0;
    for (double x : w) {
      if (x <= 0.0)
        throw std::invalid_argument("ensemble weights must be positive");
      sum += x;
    }
    for (double& x : w) x /= sum;
    return w;
  }
};

/// Voxelwise weighted mean of probability vectors followed by argmax;
/// ties break toward the lowest label integer.
inline Volume3D fuse_probabilities(
    const std::vector<ProbabilityVolume>& members,
    const std::vector<double>& weights = {}) {
  if (members.empty())
    throw std::invalid_argument("fuse_probabilities: no members");
  const ProbabilityVolume& ref = members.front();
  std::vector<double> w = weights;
  if (w.empty()) w.assign(members.size(), 1.0 / members.size());
  if (w.size() != members.size())
    throw std::invalid_argument("fuse_probabilities: weight count mismatch");
  double wsum = 0.0;
  for (double x : w) wsum += x;
  for (double& x : w) x /= wsum;

  for (const auto& m : members) {
    if (m.dims != ref.dims)
      throw std::invalid_argument("fuse_probabilities: grid mismatch");
    if (m.labels != ref.labels)
      throw std::invalid_argument("fuse_probabilities: label set mismatch");
  }

  Volume3D out;
  out.dims = ref.dims;
  out.spacing = ref.spacing;
  out.affine = ref.affine;
  out.kind = VolumeKind::Label;
  out.data.assign(ref.voxel_count(), 0.0f);

  const std::size_t nc = ref.labels.size();
  const std::size_t n = ref.voxel_count();
  for (std::size_t i = 0; i < n; ++i) {
    double best = -1.0;
    int best_label = ref.labels.empty() ? 0 : ref.labels[0];
    for (std::size_t c = 0; c < nc; ++c) {
      double mean = 0.0;
      for (std::size_t m = 0; m < members.size(); ++m)
        mean += w[m] * members[m].channels[c][i];
      if (mean > best) {  // strict: first (lowest) label wins ties
        best = mean;
        best_label = ref.labels[c];
      }
    }
    out.data[i] = static_cast<float>(best_label);
  }
  return out;
}

/// Voxelwise modal label. Ties prefer the lowest non-background label among
/// the tied set; background wins only as the strictly unique mode.
inline Volume3D fuse_labels_vote(const std::vector<Volume3D>& members,
                                 const LabelScheme& scheme) {
  if (members.empty())
    throw std::invalid_argument("fuse_labels_vote: no members");
  const Volume3D& ref = members.front();
  for (const auto& m : members)
    if (m.dims != ref.dims)
      throw std::invalid_argument("fuse_labels_vote: grid mismatch");

  const auto labels = scheme.sorted_labels();
  Volume3D out = ref;
  out.kind = VolumeKind::Label;

  const std::size_t n = ref.voxel_count();
  for (std::size_t i = 0; i < n; ++i) {
    std::array<int, 4> counts{};
    for (const auto& m : members) {
      const int lab = label_at(m, i);
      bool known = false;
      for (std::size_t c = 0; c < labels.size(); ++c)
        if (labels[c] == lab) {
          ++counts[c];
          known = true;
          break;
        }
      if (!known)
        throw std::runtime_error("fuse_labels_vote: label " +
                                 std::to_string(lab) +
                                 " outside the configured scheme");
    }
    int max_count = 0;
    for (int c : counts) max_count = std::max(max_count, c);
    int winner = scheme.background;
    bool found = false;
    // Lowest non-background label among the tied set first.
    for (std::size_t c = 0; c < labels.size(); ++c) {
      if (labels[c] == scheme.background) continue;
      if (counts[c] == max_count) {
        winner = labels[c];
        found = true;
        break;
      }
    }
    if (!found) winner = scheme.background;  // background is the unique mode
    out.data[i] = static_cast<float>(winner);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batch fusion over prediction directories.
// ---------------------------------------------------------------------------

struct FusionReport {
  std::string mode;
  std::vector<std::string> members;
  std::vector<std::string> fused_cases;
  struct SkippedEntry {
    std::string case_id;
    std::string reason;
  };
  std::vector<SkippedEntry> skipped;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["mode"] = mode;
    j["members"] = members;
    j["fused_cases"] = fused_cases;
    j["skipped"] = nlohmann::json::array();
    for (const auto& s : skipped)
      j["skipped"].push_back({{"case_id", s.case_id}, {"reason", s.reason}});
    return j;
  }
};

/// Probability files for one case: "<id>-prob.nii[.gz]" (4D channel-last)
/// or "<id>-prob-<k>.nii[.gz]" with one 3D file per ascending label.
inline std::optional<ProbabilityVolume> load_probability_volume(
    const fs::path& dir, const std::string& case_id,
    const LabelScheme& scheme) {
  const auto labels = scheme.sorted_labels();
  ProbabilityVolume pv;
  pv.labels.assign(labels.begin(), labels.end());

  if (auto p = brats::find_nifti(dir, case_id + "-prob")) {
    auto channels = nifti::read_nifti_4d(p->string());
    if (channels.size() != labels.size())
      throw std::runtime_error(p->string() + ": expected " +
                               std::to_string(labels.size()) + " channels, " +
                               "got " + std::to_string(channels.size()));
    pv.dims = channels[0].dims;
    pv.spacing = channels[0].spacing;
    pv.affine = channels[0].affine;
    for (auto& c : channels) pv.channels.push_back(std::move(c.data));
    pv.validate();
    return pv;
  }

  std::vector<fs::path> per_label;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto p = brats::find_nifti(dir, case_id + "-prob-" +
                                        std::to_string(labels[c]));
    if (!p) return std::nullopt;
    per_label.push_back(*p);
  }
  bool first = true;
  for (const auto& p : per_label) {
    Volume3D v = nifti::read_nifti(p.string(), VolumeKind::Intensity);
    if (first) {
      pv.dims = v.dims;
      pv.spacing = v.spacing;
      pv.affine = v.affine;
      first = false;
    } else if (v.dims != pv.dims) {
      throw std::runtime_error(p.string() + ": probability grid mismatch");
    }
    pv.channels.push_back(std::move(v.data));
  }
  pv.validate();
  return pv;
}

/// Case ids present in a member directory: flat "<id>[-seg|-prob*].nii[.gz]"
/// files or case subdirectories.
inline std::set<std::string> list_prediction_ids(const fs::path& dir) {
  std::set<std::string> ids;
  auto strip = [](std::string name) -> std::optional<std::string> {
    bool is_nifti = false;
    for (const char* ext : {".nii.gz", ".nii"})
      if (name.ends_with(ext)) {
        name.resize(name.size() - std::string(ext).size());
        is_nifti = true;
        break;
      }
    if (!is_nifti) return std::nullopt;
    if (const auto pos = name.rfind("-prob-"); pos != std::string::npos)
      return name.substr(0, pos);
    if (name.ends_with("-prob")) return name.substr(0, name.size() - 5);
    if (name.ends_with("-seg")) return name.substr(0, name.size() - 4);
    return name;
  };
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) {
      if (brats::find_prediction_seg(dir, e.path().filename().string()))
        ids.insert(e.path().filename().string());
      continue;
    }
    if (auto id = strip(e.path().filename().string())) ids.insert(*id);
  }
  return ids;
}

/// Fuses the predictions of all member directories case by case and writes
/// one "<id>-seg.nii.gz" per case into output_dir. Cases missing from any
/// member are skipped and reported.
inline FusionReport fuse_case_set(const std::vector<fs::path>& member_dirs,
                                  const fs::path& output_dir,
                                  const EnsembleSpec& spec,
                                  const LabelScheme& scheme, int workers = 0) {
  if (member_dirs.empty())
    throw std::invalid_argument("fuse_case_set: no member directories");
  for (const auto& d : member_dirs)
    if (!fs::is_directory(d))
      throw std::runtime_error("member directory not found: " + d.string());

  std::set<std::string> all_ids;
  std::vector<std::set<std::string>> per_member;
  for (const auto& d : member_dirs) {
    per_member.push_back(list_prediction_ids(d));
    all_ids.insert(per_member.back().begin(), per_member.back().end());
  }

  fs::create_directories(output_dir);
  const std::vector<std::string> ids(all_ids.begin(), all_ids.end());

  struct Slot {
    bool fused = false;
    std::string reason;
  };
  std::vector<Slot> slots(ids.size());

  parallel_for(ids.size(), workers, [&](std::size_t i) {
    const std::string& id = ids[i];
    Slot& slot = slots[i];
    for (std::size_t m = 0; m < member_dirs.size(); ++m) {
      if (!per_member[m].count(id)) {
        slot.reason = "missing from member " + member_dirs[m].string();
        return;
      }
    }
    try {
      Volume3D fused;
      if (spec.mode == FusionMode::ProbabilityMean) {
        std::vector<ProbabilityVolume> members;
        for (const auto& d : member_dirs) {
          auto pv = load_probability_volume(d, id, scheme);
          if (!pv)
            throw std::runtime_error("no probability volume for " + id +
                                     " in " + d.string());
          members.push_back(std::move(*pv));
        }
        std::vector<double> w;
        if (!spec.weights.empty()) w = spec.normalized_weights();
        fused = fuse_probabilities(members, w);
      } else {
        std::vector<Volume3D> members;
        for (const auto& d : member_dirs) {
          auto p = brats::find_prediction_seg(d, id);
          if (!p)
            throw std::runtime_error("no prediction segmentation for " + id +
                                     " in " + d.string());
          members.push_back(nifti::read_nifti(p->string(), VolumeKind::Label));
        }
        fused = fuse_labels_vote(members, scheme);
      }
      nifti::write_nifti(fused,
                         (output_dir / (id + "-seg.nii.gz")).string());
      slot.fused = true;
    } catch (const std::exception& e) {
      slot.reason = e.what();
    }
  });

  FusionReport report;
  report.mode = fusion_mode_name(spec.mode);
  report.members = spec.members;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (slots[i].fused)
      report.fused_cases.push_back(ids[i]);
    else
      report.skipped.push_back({ids[i], slots[i].reason});
  }
  return report;
}

}  // namespace neurovolve::ensemble

#endif  // NEUROVOLVE_ENSEMBLE_HPP

#ifndef NEUROVOLVE_BRATS_HPP
#define NEUROVOLVE_BRATS_HPP

#include <algorithm>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "neurovolve/nifti.hpp"
#include "neurovolve/volume.hpp"

namespace neurovolve::brats {

namespace fs = std::filesystem;

/// Finds "<stem>.nii" or "<stem>.nii.gz" inside `dir`.
inline std::optional<fs::path> find_nifti(const fs::path& dir,
                                          const std::string& stem) {
  for (const char* ext : {".nii.gz", ".nii"}) {
    fs::path p = dir / (stem + ext);
    if (fs::exists(p)) return p;
  }
  return std::nullopt;
}

/// Loads one case directory laid out as <id>/<id>-{t1n,t1c,t2w,t2f,seg}.nii[.gz].
/// The segmentation is optional; all volumes must share one grid and the
/// segmentation may only hold labels of the scheme.
inline Case load_case(const fs::path& dir, const LabelScheme& scheme) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("case directory not found: " + dir.string());
  Case c;
  c.case_id = dir.filename().string();

  for (Modality m : kAllModalities) {
    const std::string stem = c.case_id + "-" + modality_suffix(m);
    auto p = find_nifti(dir, stem);
    if (!p)
      throw std::runtime_error("case " + c.case_id + ": missing modality " +
                               modality_name(m) + " (expected " + stem +
                               ".nii[.gz])");
    c.modality(m) = nifti::read_nifti(p->string(), VolumeKind::Intensity);
  }
  if (auto p = find_nifti(dir, c.case_id + "-seg")) {
    c.segmentation = nifti::read_nifti(p->string(), VolumeKind::Label);
    validate_labels(*c.segmentation, scheme);
  }
  c.validate_geometry();
  return c;
}

/// Writes a case in BraTS layout under parent_dir/<case_id>/.
inline void save_case(const Case& c, const fs::path& parent_dir,
                      int gzip_level = nifti::kDefaultGzipLevel) {
  const fs::path dir = parent_dir / c.case_id;
  fs::create_directories(dir);
  for (Modality m : kAllModalities) {
    const std::string name =
        c.case_id + "-" + std::string(modality_suffix(m)) + ".nii.gz";
    nifti::write_nifti(c.modality(m), (dir / name).string(), gzip_level);
  }
  if (c.segmentation) {
    nifti::write_nifti(*c.segmentation,
                       (dir / (c.case_id + "-seg.nii.gz")).string(),
                       gzip_level);
  }
}

/// Case subdirectories of a dataset root, sorted by name. A directory
/// counts as a case when it holds a "<name>-t1n.nii[.gz]" file.
inline std::vector<fs::path> list_case_dirs(const fs::path& root) {
  if (!fs::is_directory(root))
    throw std::runtime_error("dataset directory not found: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (!e.is_directory()) continue;
    if (find_nifti(e.path(), e.path().filename().string() + "-t1n"))
      dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

/// Locates a prediction segmentation for `case_id` below `root`: either a
/// flat "<id>-seg.nii[.gz]" / "<id>.nii[.gz]" file or a BraTS-style case
/// subdirectory.
inline std::optional<fs::path> find_prediction_seg(const fs::path& root,
                                                   const std::string& case_id) {
  if (auto p = find_nifti(root, case_id + "-seg")) return p;
  if (auto p = find_nifti(root, case_id)) return p;
  if (fs::is_directory(root / case_id))
    if (auto p = find_nifti(root / case_id, case_id + "-seg")) return p;
  return std::nullopt;
}

}  // namespace neurovolve::brats

#endif  // NEUROVOLVE_BRATS_HPP

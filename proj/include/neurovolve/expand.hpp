#ifndef NEUROVOLVE_EXPAND_HPP
#define NEUROVOLVE_EXPAND_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "neurovolve/brats.hpp"
#include "neurovolve/parallel.hpp"
#include "neurovolve/pipeline.hpp"

namespace neurovolve::augment {

namespace fs = std::filesystem;

struct ExpansionOptions {
  int replicates = 5;
  int workers = 0;  // 0 = hardware concurrency
  bool include_originals = false;
  int gzip_level = nifti::kDefaultGzipLevel;
};

struct ExpansionReport {
  std::uint64_t global_seed = 0;
  int replicates = 0;
  int input_cases = 0;
  int outputs_written = 0;

  struct ReplicateEntry {
    std::string output_id;
    std::uint64_t seed;  // derived per-(case, replicate) stream seed
  };
  struct CaseEntry {
    std::string case_id;
    std::vector<ReplicateEntry> outputs;
  };
  struct SkippedEntry {
    std::string directory;
    std::string reason;
  };

  std::vector<CaseEntry> cases;
  std::vector<SkippedEntry> skipped;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["global_seed"] = global_seed;
    j["replicates"] = replicates;
    j["input_cases"] = input_cases;
    j["outputs_written"] = outputs_written;
    j["cases"] = nlohmann::json::array();
    for (const auto& c : cases) {
      nlohmann::json jc;
      jc["case_id"] = c.case_id;
      jc["outputs"] = nlohmann::json::array();
      for (const auto& r : c.outputs)
        jc["outputs"].push_back({{"output_id", r.output_id},
                                 {"seed", r.seed}});
      j["cases"].push_back(jc);
    }
    j["skipped"] = nlohmann::json::array();
    for (const auto& s : skipped)
      j["skipped"].push_back({{"directory", s.directory},
                              {"reason", s.reason}});
    return j;
  }
};

/// Offline dataset expansion: writes `replicates` augmented copies of every
/// case under input_dir into output_dir in BraTS layout. Cases are processed
/// in parallel; the report and the output tree are byte-reproducible for a
/// fixed spec, independent of scheduling. Unreadable cases are skipped and
/// listed. Originals are only copied when options.include_originals is set.
inline ExpansionReport expand_dataset(const fs::path& input_dir,
                                      const fs::path& output_dir,
                                      const PipelineSpec& spec,
                                      const LabelScheme& scheme,
                                      const ExpansionOptions& options) {
  if (options.replicates < 1)
    throw std::invalid_argument("replicates must be >= 1");
  spec.validate();

  const auto dirs = brats::list_case_dirs(input_dir);
  if (dirs.empty())
    throw std::runtime_error("no case directories found under " +
                             input_dir.string());
  fs::create_directories(output_dir);

  struct Slot {
    ExpansionReport::CaseEntry entry;
    std::string error;  // nonempty when the case was skipped
  };
  std::vector<Slot> slots(dirs.size());

  parallel_for(dirs.size(), options.workers, [&](std::size_t i) {
    Slot& slot = slots[i];
    slot.entry.case_id = dirs[i].filename().string();
    try {
      const Case original = brats::load_case(dirs[i], scheme);
      for (int r = 0; r < options.replicates; ++r) {
        Case augmented = apply_pipeline(original, spec, r, scheme);
        brats::save_case(augmented, output_dir, options.gzip_level);
        slot.entry.outputs.push_back(
            {augmented.case_id,
             derive_stream_seed(spec.global_seed, original.case_id,
                                static_cast<std::uint64_t>(r), 0)});
      }
      if (options.include_originals) {
        fs::create_directories(output_dir / original.case_id);
        for (const auto& f : fs::directory_iterator(dirs[i]))
          fs::copy_file(f.path(),
                        output_dir / original.case_id / f.path().filename(),
                        fs::copy_options::overwrite_existing);
      }
    } catch (const std::exception& e) {
      slot.entry.outputs.clear();
      slot.error = e.what();
    }
  });

  ExpansionReport report;
  report.global_seed = spec.global_seed;
  report.replicates = options.replicates;
  report.input_cases = static_cast<int>(dirs.size());
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i].error.empty()) {
      report.skipped.push_back({dirs[i].string(), slots[i].error});
    } else {
      report.outputs_written +=
          static_cast<int>(slots[i].entry.outputs.size());
      report.cases.push_back(std::move(slots[i].entry));
    }
  }
  return report;
}

}  // namespace neurovolve::augment

#endif  // NEUROVOLVE_EXPAND_HPP

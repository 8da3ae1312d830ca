#pragma once

// On-disk cohort layout:
//
//   <root>/manifest.txt                 key = value (seed, n_patients, patients, spec echo)
//   <root>/<patient>/mask.vgh           prostate mask (bool8)
//   <root>/<patient>/label_<source>.vgh rad | path | dpath_lesion | dpath_pixel (u8)
//   <root>/<patient>/prob_<model>.vgh   class probabilities (f32x3)
//   <root>/<patient>/img_<channel>.vgh  intensities (f32)

#include <filesystem>
#include <string>
#include <vector>

#include "lh/synth.hpp"

namespace lh {

namespace fs = std::filesystem;

[[nodiscard]] fs::path mask_path(const fs::path& root, const std::string& id);
[[nodiscard]] fs::path label_path(const fs::path& root, const std::string& id, LabelSource source);
[[nodiscard]] fs::path prob_path(const fs::path& root, const std::string& id, const std::string& model);
[[nodiscard]] fs::path intensity_path(const fs::path& root, const std::string& id, const std::string& channel);

struct CohortManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> patients;  // index in this list = patient index
  KeyValues extra;                    // spec echo, written verbatim

  [[nodiscard]] RngKey key(std::size_t i) const noexcept { return {seed, i}; }
};

void write_manifest(const fs::path& root, const CohortManifest& manifest);
[[nodiscard]] CohortManifest read_manifest(const fs::path& root);

/// Writes every volume the case holds.
void write_case(const fs::path& root, const PatientCase& patient);

/// Loads the mask plus whatever labels, predictions and channels exist.
[[nodiscard]] PatientCase read_case(const fs::path& root, const std::string& id);

/// Generates, derives DPathLesion for, and writes patients 0..n-1 on `jobs`
/// threads, then the manifest. Output bytes do not depend on `jobs`.
void write_phantom_cohort(const fs::path& root, const PhantomSpec& spec, const LesionParams& params, unsigned jobs);

}  // namespace lh

#include "lh/cohort.hpp"

#include <algorithm>

#include "lh/parallel.hpp"
#include "lh/vgrid.hpp"

namespace lh {

fs::path mask_path(const fs::path& root, const std::string& id) { return root / id / "mask.vgh"; }

fs::path label_path(const fs::path& root, const std::string& id, LabelSource source) {
  return root / id / ("label_" + std::string(to_string(source)) + ".vgh");
}

fs::path prob_path(const fs::path& root, const std::string& id, const std::string& model) {
  return root / id / ("prob_" + model + ".vgh");
}

fs::path intensity_path(const fs::path& root, const std::string& id, const std::string& channel) {
  return root / id / ("img_" + channel + ".vgh");
}

void write_manifest(const fs::path& root, const CohortManifest& manifest) {
  std::string text = "seed = " + std::to_string(manifest.seed) + "\n";
  text += "n_patients = " + std::to_string(manifest.patients.size()) + "\n";
  text += "patients =";
  for (const auto& id : manifest.patients) text += " " + id;
  text += "\n";
  for (const auto& [k, v] : manifest.extra) {
    if (k == "seed" || k == "n_patients" || k == "patients") continue;
    text += k + " = " + v + "\n";
  }
  write_text_file(root / "manifest.txt", text);
}

CohortManifest read_manifest(const fs::path& root) {
  CohortManifest m;
  bool have_seed = false, have_patients = false;
  std::optional<long long> declared;
  for (auto& [k, v] : read_key_value_file(root / "manifest.txt")) {
    if (k == "seed") {
      const auto s = parse_int(v);
      if (!s || *s < 0) throw Error(ErrorKind::MalformedHeader, "manifest seed is not a nonnegative integer");
      m.seed = static_cast<std::uint64_t>(*s);
      have_seed = true;
    } else if (k == "patients") {
      for (auto id : split_ws(v)) m.patients.emplace_back(id);
      have_patients = true;
    } else if (k == "n_patients") {
      declared = parse_int(v);
    } else {
      m.extra.emplace_back(std::move(k), std::move(v));
    }
  }
  if (!have_seed || !have_patients) throw Error(ErrorKind::MalformedHeader, "manifest lacks seed or patients");
  if (!declared || *declared != static_cast<long long>(m.patients.size())) {
    throw Error(ErrorKind::MalformedHeader, "manifest n_patients disagrees with the patient list");
  }
  return m;
}

void write_case(const fs::path& root, const PatientCase& patient) {
  const auto& id = patient.id();
  fs::create_directories(root / id);
  write_volume(patient.mask(), mask_path(root, id));
  for (const auto& [source, labels] : patient.labels()) write_volume(labels, label_path(root, id, source));
  for (const auto& [model, probs] : patient.all_probs()) write_volume(probs, prob_path(root, id, model));
  for (const auto& [channel, img] : patient.intensities()) write_volume(img, intensity_path(root, id, channel));
}

PatientCase read_case(const fs::path& root, const std::string& id) {
  PatientCase patient(id, read_volume_as<MaskVolume>(mask_path(root, id)));
  std::vector<fs::path> headers;
  for (const auto& entry : fs::directory_iterator(root / id)) {
    if (entry.path().extension() == ".vgh") headers.push_back(entry.path());
  }
  std::sort(headers.begin(), headers.end());
  for (const auto& h : headers) {
    const auto stem = h.stem().string();
    if (stem.starts_with("label_")) {
      const auto source = parse_label_source(std::string_view(stem).substr(6));
      if (!source) throw Error(ErrorKind::MalformedHeader, "unknown label source file " + h.string());
      patient.set_label(*source, read_volume_as<LabelVolume>(h));
    } else if (stem.starts_with("prob_")) {
      patient.set_probs(stem.substr(5), read_volume_as<ProbVolume>(h));
    } else if (stem.starts_with("img_")) {
      patient.set_intensity(stem.substr(4), read_volume_as<IntensityVolume>(h));
    }
  }
  return patient;
}

void write_phantom_cohort(const fs::path& root, const PhantomSpec& spec, const LesionParams& params, unsigned jobs) {
  validate(spec);
  fs::create_directories(root);
  const auto n = static_cast<std::size_t>(spec.n_patients);
  parallel_for(n, jobs, [&](std::size_t i) {
    auto patient = generate_phantom(spec, i);
    patient.set_label(LabelSource::DPathLesion, derive_dpath_lesion(patient, params));
    write_case(root, patient);
  });
  CohortManifest manifest;
  manifest.seed = spec.master_seed;
  for (std::size_t i = 0; i < n; ++i) manifest.patients.push_back(patient_id(i));
  manifest.extra = describe(spec);
  write_manifest(root, manifest);
}

}  // namespace lh

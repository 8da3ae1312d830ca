#include "lh/volume.hpp"

#include <algorithm>
#include <numeric>

namespace lh {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedHeader: return "MalformedHeader";
    case ErrorKind::SizeMismatch: return "SizeMismatch";
    case ErrorKind::InvalidClassValue: return "InvalidClassValue";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MetaMismatch: return "MetaMismatch";
    case ErrorKind::AnisotropicInPlaneSpacing: return "AnisotropicInPlaneSpacing";
    case ErrorKind::EmptyLesion: return "EmptyLesion";
    case ErrorKind::OverlappingLesions: return "OverlappingLesions";
    case ErrorKind::EmptyMask: return "EmptyMask";
    case ErrorKind::MissingLabelSource: return "MissingLabelSource";
    case ErrorKind::EmptyCohort: return "EmptyCohort";
    case ErrorKind::DegenerateIntensities: return "DegenerateIntensities";
    case ErrorKind::ModeMismatch: return "ModeMismatch";
    case ErrorKind::SpecInfeasible: return "SpecInfeasible";
  }
  return "Unknown";
}

void validate(const GridMeta& meta) {
  for (int a = 0; a < 3; ++a) {
    if (meta.dims[a] < 1) {
      throw Error(ErrorKind::InvalidArgument, "grid dims must be >= 1");
    }
    if (!std::isfinite(meta.spacing[a]) || meta.spacing[a] <= 0.0) {
      throw Error(ErrorKind::InvalidArgument, "grid spacing must be positive and finite");
    }
  }
}

double voxel_volume_mm3(const GridMeta& meta) noexcept {
  return meta.spacing[0] * meta.spacing[1] * meta.spacing[2];
}

void require_same_meta(const GridMeta& a, const GridMeta& b, std::string_view what) {
  if (!(a == b)) {
    throw Error(ErrorKind::MetaMismatch, std::string(what) + ": volumes are on different grids");
  }
}

std::string_view to_string(ClassGroup g) noexcept {
  switch (g) {
    case ClassGroup::CancerVsAll: return "cancer";
    case ClassGroup::AggressiveVsAll: return "aggressive";
    case ClassGroup::IndolentVsAll: return "indolent";
  }
  return "?";
}

std::optional<ClassGroup> parse_class_group(std::string_view s) noexcept {
  for (auto g : kAllGroups) {
    if (to_string(g) == s) return g;
  }
  return std::nullopt;
}

std::string_view to_string(LabelSource s) noexcept {
  switch (s) {
    case LabelSource::Rad: return "rad";
    case LabelSource::Path: return "path";
    case LabelSource::DPathLesion: return "dpath_lesion";
    case LabelSource::DPathPixel: return "dpath_pixel";
  }
  return "?";
}

std::optional<LabelSource> parse_label_source(std::string_view s) noexcept {
  for (auto src : kAllSources) {
    if (to_string(src) == s) return src;
  }
  return std::nullopt;
}

void validate(const ProbVolume& probs) {
  for (const auto& p : probs.voxels()) {
    double sum = 0.0;
    for (float v : p) {
      if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "probability is not finite");
      if (v < 0.0f || v > 1.0f) {
        throw Error(ErrorKind::InvalidArgument, "probability outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTolerance) {
      throw Error(ErrorKind::InvalidArgument, "class probabilities do not sum to 1");
    }
  }
}

void validate(const IntensityVolume& vol) {
  for (float v : vol.voxels()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "intensity is not finite");
  }
}

MaskVolume binarize(const LabelVolume& labels, ClassGroup group) {
  MaskVolume out(labels.meta());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out[i] = in_group(labels[i], group) ? 1 : 0;
  }
  return out;
}

ProbVolume one_hot(const LabelVolume& labels) {
  ProbVolume out(labels.meta());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    ClassProbs p{0.0f, 0.0f, 0.0f};
    p[static_cast<std::size_t>(labels[i])] = 1.0f;
    out[i] = p;
  }
  return out;
}

LabelVolume argmax_labels(const ProbVolume& probs) {
  LabelVolume out(probs.meta());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& p = probs[i];
    const auto best = std::max_element(p.begin(), p.end()) - p.begin();
    out[i] = static_cast<ClassId>(best);
  }
  return out;
}

std::size_t count_foreground(const MaskVolume& mask) noexcept {
  return static_cast<std::size_t>(
      std::count_if(mask.voxels().begin(), mask.voxels().end(), [](std::uint8_t v) { return v != 0; }));
}

PatientCase::PatientCase(std::string id, MaskVolume mask) : id_(std::move(id)), mask_(std::move(mask)) {
  if (id_.empty()) throw Error(ErrorKind::InvalidArgument, "patient id must be nonempty");
}

void PatientCase::set_label(LabelSource source, LabelVolume labels) {
  require_same_meta(mask_.meta(), labels.meta(), "PatientCase::set_label");
  labels_.insert_or_assign(source, std::move(labels));
}

bool PatientCase::has_label(LabelSource source) const noexcept { return labels_.contains(source); }

const LabelVolume& PatientCase::label(LabelSource source) const {
  const auto it = labels_.find(source);
  if (it == labels_.end()) {
    throw Error(ErrorKind::MissingLabelSource,
                "patient " + id_ + " has no " + std::string(to_string(source)) + " labels");
  }
  return it->second;
}

void PatientCase::set_probs(const std::string& model, ProbVolume probs) {
  require_same_meta(mask_.meta(), probs.meta(), "PatientCase::set_probs");
  probs_.insert_or_assign(model, std::move(probs));
}

const ProbVolume* PatientCase::probs(const std::string& model) const noexcept {
  const auto it = probs_.find(model);
  return it == probs_.end() ? nullptr : &it->second;
}

void PatientCase::set_intensity(const std::string& channel, IntensityVolume vol) {
  require_same_meta(mask_.meta(), vol.meta(), "PatientCase::set_intensity");
  intensities_.insert_or_assign(channel, std::move(vol));
}

const IntensityVolume* PatientCase::intensity(const std::string& channel) const noexcept {
  const auto it = intensities_.find(channel);
  return it == intensities_.end() ? nullptr : &it->second;
}

}  // namespace lh

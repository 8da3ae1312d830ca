#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lh/error.hpp"

namespace lh {

using Index3 = std::array<std::int64_t, 3>;

/// Voxel counts and mm-per-voxel spacing of a dense 3D grid.
struct GridMeta {
  std::array<std::int64_t, 3> dims{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};

  [[nodiscard]] std::int64_t nx() const noexcept { return dims[0]; }
  [[nodiscard]] std::int64_t ny() const noexcept { return dims[1]; }
  [[nodiscard]] std::int64_t nz() const noexcept { return dims[2]; }
  [[nodiscard]] std::size_t voxel_count() const noexcept {
    return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  }

  // x-fastest, z-slowest.
  [[nodiscard]] std::size_t linear(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return static_cast<std::size_t>(x + dims[0] * (y + dims[1] * z));
  }
  [[nodiscard]] Index3 coords(std::size_t id) const noexcept {
    const auto i = static_cast<std::int64_t>(id);
    return {i % dims[0], (i / dims[0]) % dims[1], i / (dims[0] * dims[1])};
  }
  [[nodiscard]] bool contains(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }

  bool operator==(const GridMeta&) const = default;
};

/// Throws InvalidArgument unless dims >= 1 and spacings are positive and finite.
void validate(const GridMeta& meta);

/// Physical volume of one voxel in mm^3.
[[nodiscard]] double voxel_volume_mm3(const GridMeta& meta) noexcept;

void require_same_meta(const GridMeta& a, const GridMeta& b, std::string_view what);

enum class ClassId : std::uint8_t { Normal = 0, Indolent = 1, Aggressive = 2 };
inline constexpr std::size_t kNumClasses = 3;

[[nodiscard]] constexpr bool is_valid_class(std::uint8_t raw) noexcept { return raw <= 2; }

enum class ClassGroup { CancerVsAll, AggressiveVsAll, IndolentVsAll };
inline constexpr std::array kAllGroups{ClassGroup::CancerVsAll, ClassGroup::AggressiveVsAll,
                                       ClassGroup::IndolentVsAll};

[[nodiscard]] constexpr bool in_group(ClassId c, ClassGroup g) noexcept {
  switch (g) {
    case ClassGroup::CancerVsAll:
      return c == ClassId::Indolent || c == ClassId::Aggressive;
    case ClassGroup::AggressiveVsAll:
      return c == ClassId::Aggressive;
    case ClassGroup::IndolentVsAll:
      return c == ClassId::Indolent;
  }
  return false;
}

[[nodiscard]] std::string_view to_string(ClassGroup g) noexcept;
[[nodiscard]] std::optional<ClassGroup> parse_class_group(std::string_view s) noexcept;

enum class LabelSource { Rad, Path, DPathLesion, DPathPixel };
inline constexpr std::array kAllSources{LabelSource::Rad, LabelSource::Path, LabelSource::DPathLesion,
                                        LabelSource::DPathPixel};

[[nodiscard]] std::string_view to_string(LabelSource s) noexcept;
[[nodiscard]] std::optional<LabelSource> parse_label_source(std::string_view s) noexcept;

/// Per-voxel (normal, indolent, aggressive) probabilities.
using ClassProbs = std::array<float, 3>;

/// Dense voxel array on a metric grid. T is the per-voxel value type.
template <typename T>
class Volume {
 public:
  using value_type = T;

  Volume() = default;
  explicit Volume(const GridMeta& meta, T fill = T{}) : meta_(meta) {
    validate(meta_);
    voxels_.assign(meta_.voxel_count(), fill);
  }
  Volume(const GridMeta& meta, std::vector<T> voxels) : meta_(meta), voxels_(std::move(voxels)) {
    validate(meta_);
    if (voxels_.size() != meta_.voxel_count()) {
      throw Error(ErrorKind::SizeMismatch, "voxel buffer has " + std::to_string(voxels_.size()) +
                                               " entries, grid needs " +
                                               std::to_string(meta_.voxel_count()));
    }
  }

  [[nodiscard]] const GridMeta& meta() const noexcept { return meta_; }
  [[nodiscard]] std::size_t size() const noexcept { return voxels_.size(); }

  [[nodiscard]] T& operator[](std::size_t i) noexcept { return voxels_[i]; }
  [[nodiscard]] const T& operator[](std::size_t i) const noexcept { return voxels_[i]; }
  [[nodiscard]] T& at(std::int64_t x, std::int64_t y, std::int64_t z) noexcept {
    return voxels_[meta_.linear(x, y, z)];
  }
  [[nodiscard]] const T& at(std::int64_t x, std::int64_t y, std::int64_t z) const noexcept {
    return voxels_[meta_.linear(x, y, z)];
  }

  [[nodiscard]] std::span<T> voxels() noexcept { return voxels_; }
  [[nodiscard]] std::span<const T> voxels() const noexcept { return voxels_; }

  bool operator==(const Volume&) const = default;

 private:
  GridMeta meta_;
  std::vector<T> voxels_;
};

using LabelVolume = Volume<ClassId>;
// Masks use one byte per voxel holding 0 or 1.
using MaskVolume = Volume<std::uint8_t>;
using ProbVolume = Volume<ClassProbs>;
using IntensityVolume = Volume<float>;

inline constexpr double kSimplexTolerance = 1e-5;

/// Throws unless every voxel is a finite probability triple summing to 1.
void validate(const ProbVolume& probs);
void validate(const IntensityVolume& vol);

[[nodiscard]] MaskVolume binarize(const LabelVolume& labels, ClassGroup group);
[[nodiscard]] ProbVolume one_hot(const LabelVolume& labels);
/// Argmax class per voxel; ties resolve to the lower class id.
[[nodiscard]] LabelVolume argmax_labels(const ProbVolume& probs);
[[nodiscard]] std::size_t count_foreground(const MaskVolume& mask) noexcept;

/// One patient: prostate mask plus any subset of label sources, model
/// predictions and image channels, all on one grid.
class PatientCase {
 public:
  PatientCase(std::string id, MaskVolume mask);

  [[nodiscard]] const std::string& id() const noexcept { return id_; }
  [[nodiscard]] const GridMeta& meta() const noexcept { return mask_.meta(); }
  [[nodiscard]] const MaskVolume& mask() const noexcept { return mask_; }

  void set_label(LabelSource source, LabelVolume labels);
  [[nodiscard]] bool has_label(LabelSource source) const noexcept;
  /// Throws MissingLabelSource when absent.
  [[nodiscard]] const LabelVolume& label(LabelSource source) const;

  void set_probs(const std::string& model, ProbVolume probs);
  [[nodiscard]] const ProbVolume* probs(const std::string& model) const noexcept;
  [[nodiscard]] const std::map<std::string, ProbVolume>& all_probs() const noexcept { return probs_; }

  void set_intensity(const std::string& channel, IntensityVolume vol);
  [[nodiscard]] const IntensityVolume* intensity(const std::string& channel) const noexcept;
  [[nodiscard]] const std::map<std::string, IntensityVolume>& intensities() const noexcept {
    return intensities_;
  }
  [[nodiscard]] const std::map<LabelSource, LabelVolume>& labels() const noexcept { return labels_; }

  bool operator==(const PatientCase&) const = default;

 private:
  std::string id_;
  MaskVolume mask_;
  std::map<LabelSource, LabelVolume> labels_;
  std::map<std::string, ProbVolume> probs_;
  std::map<std::string, IntensityVolume> intensities_;
};

}  // namespace lh

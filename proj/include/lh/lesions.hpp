#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "lh/volume.hpp"

namespace lh {

/// Integer voxel offsets of a 3-slice stacked-disk element.
struct StructuringElement {
  std::vector<Index3> offsets;
  std::array<double, 3> radii_mm{0.5, 1.5, 0.5};
  std::array<int, 3> radii_vox{0, 0, 0};

  /// Largest |offset| per axis.
  [[nodiscard]] Index3 reach() const noexcept;
};

inline constexpr std::array<double, 3> kDefaultDiskRadiiMm{0.5, 1.5, 0.5};

/// mm -> voxel radius, round half away from zero.
[[nodiscard]] int disk_radius_voxels(double radius_mm, double spacing_mm);

/// Disk offsets {(dx, dy): dx^2 + dy^2 <= r^2} for one slice.
[[nodiscard]] std::vector<std::array<std::int64_t, 2>> disk_offsets(int radius_vox);

/// Stacks disks for slices dz = -1, 0, +1 (radii_mm in that order).
/// Requires sx == sy within 1e-6 and matching outer radii after rounding, so
/// the element is symmetric under negation.
[[nodiscard]] StructuringElement build_structuring_element(
    const GridMeta& meta, std::array<double, 3> radii_mm = kDefaultDiskRadiiMm);

/// Everything outside the grid is background.
[[nodiscard]] MaskVolume binary_dilate(const MaskVolume& mask, const StructuringElement& se);
[[nodiscard]] MaskVolume binary_erode(const MaskVolume& mask, const StructuringElement& se);

/// Dilation followed by erosion. The mask is treated as embedded in an
/// unbounded background, so the intermediate dilation is not clipped at the
/// grid border; the result is extensive and idempotent.
[[nodiscard]] MaskVolume binary_close(const MaskVolume& mask, const StructuringElement& se);

enum class Connectivity { Six = 6, Eighteen = 18, TwentySix = 26 };

[[nodiscard]] std::span<const Index3> neighbor_offsets(Connectivity c) noexcept;
[[nodiscard]] std::optional<Connectivity> parse_connectivity(int n) noexcept;

struct Components {
  Volume<std::uint32_t> ids;  // 0 = background, 1..count in scan order
  std::uint32_t count = 0;
};

[[nodiscard]] Components connected_components(const MaskVolume& mask,
                                              Connectivity connectivity = Connectivity::TwentySix);

enum class LesionGrade { Benign, Indolent, Aggressive };
[[nodiscard]] std::string_view to_string(LesionGrade g) noexcept;
[[nodiscard]] bool in_group(LesionGrade g, ClassGroup group) noexcept;

struct GradeResult {
  LesionGrade grade = LesionGrade::Benign;
  double agg_fraction = 0.0;
  double ind_fraction = 0.0;
};

inline constexpr double kDefaultGradeThreshold = 0.01;

/// Aggressive if the aggressive fraction reaches agg_threshold, else
/// Indolent if the indolent fraction reaches ind_threshold, else Benign.
/// Both comparisons are inclusive.
[[nodiscard]] GradeResult grade_lesion(std::span<const std::size_t> voxels, const LabelVolume& grade_map,
                                       double agg_threshold = kDefaultGradeThreshold,
                                       double ind_threshold = kDefaultGradeThreshold);

struct Lesion {
  std::vector<std::size_t> voxel_ids;  // sorted linear indices
  double volume_mm3 = 0.0;
  LesionGrade grade = LesionGrade::Benign;
  double agg_fraction = 0.0;
  double ind_fraction = 0.0;
};

struct LesionSet {
  std::vector<Lesion> lesions;
  GridMeta meta;
  double min_volume_mm3 = 0.0;
};

/// Pipeline knobs shared by lesion extraction, evaluation and the simulators.
struct LesionParams {
  std::array<double, 3> radii_mm = kDefaultDiskRadiiMm;
  Connectivity connectivity = Connectivity::TwentySix;
  double min_volume_mm3 = 250.0;
  double agg_threshold = kDefaultGradeThreshold;
  double ind_threshold = kDefaultGradeThreshold;
};

/// Binarize by group, close, label components, drop components below
/// min_volume_mm3 (kept when equal), grade survivors against the
/// pre-closing labels.
[[nodiscard]] LesionSet extract_lesions(const LabelVolume& labels, ClassGroup group,
                                        const StructuringElement& se, const LesionParams& params = {});
/// Convenience overload that builds the element from params.radii_mm.
[[nodiscard]] LesionSet extract_lesions(const LabelVolume& labels, ClassGroup group,
                                        const LesionParams& params = {});

/// Paints each lesion uniformly with its grade; Benign lesions stay Normal.
[[nodiscard]] LabelVolume lesionset_to_labelvolume(const LesionSet& lesions);

/// CSV header and rows: patient_id,lesion_id,grade,n_voxels,volume_mm3,agg_fraction,ind_fraction
void write_lesion_csv_header(std::ostream& out);
void write_lesion_csv_rows(std::ostream& out, std::string_view patient_id, const LesionSet& lesions);

}  // namespace lh

#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "lh/volume.hpp"

namespace lh {

/// Percentile landmarks and their positions on the standard [0, 100] scale.
struct LandmarkTable {
  std::vector<double> percentiles;
  std::vector<double> standard_values;

  bool operator==(const LandmarkTable&) const = default;
};

/// {1, 10, 20, ..., 90, 99}
[[nodiscard]] std::vector<double> default_percentiles();

/// Throws InvalidArgument unless both lists match in length and increase
/// strictly, with percentiles inside (0, 100).
void validate(const LandmarkTable& lm);

/// Nearest-rank percentiles of the scoped voxels: the order statistic at
/// round((n - 1) * p / 100). Order statistics commute with any increasing
/// intensity map, which keeps standardization idempotent.
[[nodiscard]] std::vector<double> intensity_percentiles(const IntensityVolume& vol, const MaskVolume* mask,
                                                        const std::vector<double>& percentiles);

/// Averages each volume's percentile vector after sending its first
/// landmark to 0 and last to 100.
[[nodiscard]] LandmarkTable fit_landmarks(std::span<const IntensityVolume> cohort,
                                          std::span<const MaskVolume* const> masks = {},
                                          const std::vector<double>& percentiles = default_percentiles());

inline constexpr double kStandardClampLow = -10.0;
inline constexpr double kStandardClampHigh = 110.0;

/// Piecewise-linear map from the volume's own landmarks to the table's
/// standard values; the end segments extrapolate, then the result is
/// clamped to [-10, 110].
[[nodiscard]] IntensityVolume standardize(const IntensityVolume& vol, const LandmarkTable& lm,
                                          const MaskVolume* mask = nullptr);

/// (v - mean) / std with population statistics over the mask (or the whole
/// volume); voxels outside the mask go through the same affine map.
[[nodiscard]] IntensityVolume zscore(const IntensityVolume& vol, const MaskVolume* mask = nullptr);

void write_landmarks(const LandmarkTable& lm, const std::filesystem::path& path);
[[nodiscard]] LandmarkTable read_landmarks(const std::filesystem::path& path);

enum class InterpMode { Nearest, Linear };

struct ResampleParams {
  double spacing_x = 0.29;
  double spacing_y = 0.29;
  std::int64_t size_x = 224;
  std::int64_t size_y = 224;
  /// Crop centre in input voxel coordinates (x, y).
  std::array<double, 2> center{0.0, 0.0};
  InterpMode mode = InterpMode::Linear;
};

/// Mean (x, y) voxel coordinate of the mask; EmptyMask when empty.
[[nodiscard]] std::array<double, 2> mask_centroid_xy(const MaskVolume& mask);

/// In-plane resample about params.center onto a size_x * size_y grid at the
/// target spacing. Output sample i sits at input x = cx + (i - (size_x-1)/2) * tsx / sx.
/// Samples beyond the input extent get the background value; z is untouched.
[[nodiscard]] IntensityVolume resample_crop(const IntensityVolume& vol, const ResampleParams& params);
[[nodiscard]] ProbVolume resample_crop(const ProbVolume& vol, const ResampleParams& params);
/// Labels and masks only support nearest-neighbour (ModeMismatch otherwise).
[[nodiscard]] LabelVolume resample_crop(const LabelVolume& vol, const ResampleParams& params);
[[nodiscard]] MaskVolume resample_crop(const MaskVolume& vol, const ResampleParams& params);

}  // namespace lh

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "lh/lesions.hpp"
#include "lh/text.hpp"
#include "lh/volume.hpp"

namespace lh {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Mean intensity of tissue classes plus Gaussian noise, one per channel.
struct ChannelSpec {
  double background = 0.0;
  double prostate = 0.0;
  double indolent_shift = 0.0;
  double aggressive_shift = 0.0;
  double noise_sigma = 0.0;
};

struct PhantomSpec {
  std::uint64_t master_seed = 42;
  int n_patients = 40;
  GridMeta grid{{96, 96, 16}, {0.5, 0.5, 3.0}};
  Range prostate_semi_x_mm{16.0, 22.0};
  Range prostate_semi_y_mm{13.0, 18.0};
  Range prostate_semi_z_mm{14.0, 21.0};
  int lesions_min = 1;
  int lesions_max = 3;
  Range lesion_radius_mm{4.0, 9.0};  // in-plane; each axis jittered by 0.8..1.2
  Range lesion_half_height_mm{2.5, 5.5};
  Range aggressive_fraction{0.0, 1.0};
  ChannelSpec t2w{100.0, 300.0, -60.0, -120.0, 20.0};
  ChannelSpec adc{400.0, 1400.0, -300.0, -600.0, 100.0};
};

/// Throws InvalidArgument on empty/negative ranges or n_patients < 1.
void validate(const PhantomSpec& spec);
[[nodiscard]] KeyValues describe(const PhantomSpec& spec);

struct DegradationSpec {
  double miss_prob = 0.15;
  double erosion_mm = 1.0;
  double slice_keep_prob = 0.6;
  double fp_rate = 0.5;
  double blur_mm = 1.0;
  double noise_sigma = 0.05;

  /// Every simulator reduces to the identity at these settings.
  [[nodiscard]] static DegradationSpec identity() { return {0.0, 0.0, 1.0, 0.0, 0.0, 0.0}; }
};

void validate(const DegradationSpec& spec);
[[nodiscard]] KeyValues describe(const DegradationSpec& spec);

/// Independent random stream per (master seed, patient, operation), so a
/// patient's data never depends on cohort size or scheduling.
[[nodiscard]] std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t patient_index,
                                          std::string_view op);

[[nodiscard]] std::string patient_id(std::size_t patient_index);

/// Ellipsoidal prostate, 1..3 elliptic-slab lesions with a planar
/// aggressive/indolent split, DPathPixel labels and "t2w"/"adc" channels.
[[nodiscard]] PatientCase generate_phantom(const PhantomSpec& spec, std::size_t patient_index);

/// Lesion-level digital pathology labels: cancer lesions from the pixel
/// grade map, graded by the 1% rule and painted uniformly.
[[nodiscard]] LabelVolume derive_dpath_lesion(const PatientCase& patient, const LesionParams& params = {});

struct RngKey {
  std::uint64_t master_seed = 0;
  std::size_t patient_index = 0;
};

/// Per lesion, each slice kept with slice_keep_prob; at least one slice survives.
[[nodiscard]] LabelVolume simulate_pathologist(const PatientCase& patient, const DegradationSpec& spec, RngKey key);

/// Per lesion, dropped with miss_prob; survivors eroded in-plane by erosion_mm.
[[nodiscard]] LabelVolume simulate_radiologist(const PatientCase& patient, const DegradationSpec& spec, RngKey key);

/// One-hot DPathPixel truth -> blur -> clipped noise -> per-lesion miss ->
/// false-positive blobs -> prostate masking -> renormalization.
[[nodiscard]] ProbVolume simulate_predictions(const PatientCase& patient, const DegradationSpec& spec, RngKey key);

}  // namespace lh

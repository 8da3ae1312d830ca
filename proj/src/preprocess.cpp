#include "lh/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lh/text.hpp"

namespace lh {

std::vector<double> default_percentiles() {
  std::vector<double> p{1.0};
  for (int d = 10; d <= 90; d += 10) p.push_back(d);
  p.push_back(99.0);
  return p;
}

void validate(const LandmarkTable& lm) {
  if (lm.percentiles.size() < 2 || lm.percentiles.size() != lm.standard_values.size()) {
    throw Error(ErrorKind::InvalidArgument, "landmark table needs >= 2 matched entries");
  }
  for (std::size_t i = 0; i < lm.percentiles.size(); ++i) {
    if (!(lm.percentiles[i] > 0.0 && lm.percentiles[i] < 100.0)) {
      throw Error(ErrorKind::InvalidArgument, "landmark percentiles must lie in (0, 100)");
    }
    if (i > 0 && !(lm.percentiles[i] > lm.percentiles[i - 1] && lm.standard_values[i] > lm.standard_values[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "landmarks must be strictly increasing");
    }
  }
}

namespace {

std::vector<double> scoped_values(const IntensityVolume& vol, const MaskVolume* mask) {
  if (mask) require_same_meta(vol.meta(), mask->meta(), "intensity mask");
  std::vector<double> v;
  v.reserve(vol.size());
  for (std::size_t i = 0; i < vol.size(); ++i) {
    if (!mask || (*mask)[i]) v.push_back(vol[i]);
  }
  return v;
}

void check_percentiles(const std::vector<double>& percentiles) {
  for (std::size_t i = 0; i < percentiles.size(); ++i) {
    if (!(percentiles[i] > 0.0 && percentiles[i] < 100.0) || (i > 0 && percentiles[i] <= percentiles[i - 1])) {
      throw Error(ErrorKind::InvalidArgument, "percentiles must increase strictly inside (0, 100)");
    }
  }
  if (percentiles.size() < 2) throw Error(ErrorKind::InvalidArgument, "need at least two percentiles");
}

}  // namespace

std::vector<double> intensity_percentiles(const IntensityVolume& vol, const MaskVolume* mask,
                                          const std::vector<double>& percentiles) {
  check_percentiles(percentiles);
  auto values = scoped_values(vol, mask);
  if (values.empty()) throw Error(ErrorKind::DegenerateIntensities, "no voxels in scope");
  std::sort(values.begin(), values.end());
  const auto last = static_cast<double>(values.size() - 1);
  std::vector<double> out;
  out.reserve(percentiles.size());
  for (double p : percentiles) {
    out.push_back(values[static_cast<std::size_t>(std::lround(last * p / 100.0))]);
  }
  return out;
}

LandmarkTable fit_landmarks(std::span<const IntensityVolume> cohort, std::span<const MaskVolume* const> masks,
                            const std::vector<double>& percentiles) {
  if (cohort.empty()) throw Error(ErrorKind::EmptyCohort, "cannot fit landmarks on an empty cohort");
  if (!masks.empty() && masks.size() != cohort.size()) {
    throw Error(ErrorKind::InvalidArgument, "one mask per volume (or none) is required");
  }
  LandmarkTable lm{percentiles, std::vector<double>(percentiles.size(), 0.0)};
  for (std::size_t k = 0; k < cohort.size(); ++k) {
    const auto pct = intensity_percentiles(cohort[k], masks.empty() ? nullptr : masks[k], percentiles);
    const double lo = pct.front(), hi = pct.back();
    if (!(hi > lo)) {
      throw Error(ErrorKind::DegenerateIntensities, "volume " + std::to_string(k) + " has a flat histogram");
    }
    for (std::size_t i = 0; i < pct.size(); ++i) lm.standard_values[i] += (pct[i] - lo) / (hi - lo) * 100.0;
  }
  for (auto& v : lm.standard_values) v /= static_cast<double>(cohort.size());
  for (std::size_t i = 1; i < lm.standard_values.size(); ++i) {
    if (!(lm.standard_values[i] > lm.standard_values[i - 1])) {
      throw Error(ErrorKind::DegenerateIntensities, "averaged landmarks are not strictly increasing");
    }
  }
  return lm;
}

IntensityVolume standardize(const IntensityVolume& vol, const LandmarkTable& lm, const MaskVolume* mask) {
  validate(lm);
  const auto src = intensity_percentiles(vol, mask, lm.percentiles);

  // Collapse repeated source landmarks; a flat stretch maps to its first target.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (!xs.empty() && src[i] <= xs.back()) continue;
    xs.push_back(src[i]);
    ys.push_back(lm.standard_values[i]);
  }
  if (xs.size() < 2) throw Error(ErrorKind::DegenerateIntensities, "volume landmarks collapse to a point");

  const auto map = [&](double v) {
    std::size_t seg = 0;
    if (v >= xs.back()) {
      seg = xs.size() - 2;
    } else if (v > xs.front()) {
      seg = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), v) - xs.begin()) - 1;
    }
    const double t = (v - xs[seg]) / (xs[seg + 1] - xs[seg]);
    const double out = ys[seg] + t * (ys[seg + 1] - ys[seg]);
    return std::clamp(out, kStandardClampLow, kStandardClampHigh);
  };

  IntensityVolume out(vol.meta());
  for (std::size_t i = 0; i < vol.size(); ++i) out[i] = static_cast<float>(map(vol[i]));
  return out;
}

IntensityVolume zscore(const IntensityVolume& vol, const MaskVolume* mask) {
  const auto values = scoped_values(vol, mask);
  if (values.size() < 2) throw Error(ErrorKind::DegenerateIntensities, "z-score needs at least two voxels");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  if (!(var > 0.0)) throw Error(ErrorKind::DegenerateIntensities, "constant intensities cannot be z-scored");
  const double sd = std::sqrt(var);
  IntensityVolume out(vol.meta());
  for (std::size_t i = 0; i < vol.size(); ++i) out[i] = static_cast<float>((vol[i] - mean) / sd);
  return out;
}

void write_landmarks(const LandmarkTable& lm, const std::filesystem::path& path) {
  validate(lm);
  std::string text = "percentiles =";
  for (double p : lm.percentiles) text += " " + format_exact(p);
  text += "\nstandard_values =";
  for (double v : lm.standard_values) text += " " + format_exact(v);
  text += "\n";
  write_text_file(path, text);
}

LandmarkTable read_landmarks(const std::filesystem::path& path) {
  LandmarkTable lm;
  bool have_p = false, have_v = false;
  for (const auto& [key, value] : read_key_value_file(path)) {
    std::vector<double>* target = nullptr;
    if (key == "percentiles") {
      target = &lm.percentiles;
      have_p = true;
    } else if (key == "standard_values") {
      target = &lm.standard_values;
      have_v = true;
    } else {
      throw Error(ErrorKind::MalformedHeader, path.string() + ": unknown key '" + key + "'");
    }
    for (auto tok : split_ws(value)) {
      const auto d = parse_double(tok);
      if (!d) throw Error(ErrorKind::MalformedHeader, path.string() + ": bad number '" + std::string(tok) + "'");
      target->push_back(*d);
    }
  }
  if (!have_p || !have_v) throw Error(ErrorKind::MalformedHeader, path.string() + ": incomplete landmark table");
  validate(lm);
  return lm;
}

std::array<double, 2> mask_centroid_xy(const MaskVolume& mask) {
  const auto& m = mask.meta();
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const auto c = m.coords(i);
    sx += static_cast<double>(c[0]);
    sy += static_cast<double>(c[1]);
    ++n;
  }
  if (n == 0) throw Error(ErrorKind::EmptyMask, "mask has no voxels");
  return {sx / static_cast<double>(n), sy / static_cast<double>(n)};
}

namespace {

template <typename T>
inline constexpr bool kInterpolable = std::is_floating_point_v<T> || std::is_same_v<T, ClassProbs>;

template <typename T>
T lerp_value(const T& a, const T& b, double t) {
  if constexpr (std::is_same_v<T, ClassProbs>) {
    T out{};
    for (std::size_t c = 0; c < out.size(); ++c) {
      out[c] = static_cast<float>(a[c] + t * (static_cast<double>(b[c]) - a[c]));
    }
    return out;
  } else {
    return static_cast<T>(a + t * (static_cast<double>(b) - a));
  }
}

template <typename T>
Volume<T> resample_impl(const Volume<T>& vol, const ResampleParams& p, T background) {
  if (!(p.spacing_x > 0.0) || !(p.spacing_y > 0.0) || p.size_x < 1 || p.size_y < 1) {
    throw Error(ErrorKind::InvalidArgument, "resample target spacing and size must be positive");
  }
  const auto& in = vol.meta();
  GridMeta out_meta = in;
  out_meta.dims = {p.size_x, p.size_y, in.nz()};
  out_meta.spacing = {p.spacing_x, p.spacing_y, in.spacing[2]};
  Volume<T> out(out_meta, background);

  const double step_x = p.spacing_x / in.spacing[0];
  const double step_y = p.spacing_y / in.spacing[1];
  const double half_x = static_cast<double>(p.size_x - 1) / 2.0;
  const double half_y = static_cast<double>(p.size_y - 1) / 2.0;
  const auto nx = static_cast<double>(in.nx()), ny = static_cast<double>(in.ny());

  for (std::int64_t j = 0; j < p.size_y; ++j) {
    const double fy = p.center[1] + (static_cast<double>(j) - half_y) * step_y;
    if (fy < -0.5 || fy > ny - 0.5) continue;
    for (std::int64_t i = 0; i < p.size_x; ++i) {
      const double fx = p.center[0] + (static_cast<double>(i) - half_x) * step_x;
      if (fx < -0.5 || fx > nx - 0.5) continue;
      for (std::int64_t z = 0; z < in.nz(); ++z) {
        if (p.mode == InterpMode::Nearest || !kInterpolable<T>) {
          const auto x = std::clamp<std::int64_t>(std::llround(fx), 0, in.nx() - 1);
          const auto y = std::clamp<std::int64_t>(std::llround(fy), 0, in.ny() - 1);
          out.at(i, j, z) = vol.at(x, y, z);
        } else if constexpr (kInterpolable<T>) {
          // Edge-replicate within the half-voxel border.
          const double cx = std::clamp(fx, 0.0, nx - 1.0), cy = std::clamp(fy, 0.0, ny - 1.0);
          const auto x0 = static_cast<std::int64_t>(std::floor(cx)), y0 = static_cast<std::int64_t>(std::floor(cy));
          const auto x1 = std::min(x0 + 1, in.nx() - 1), y1 = std::min(y0 + 1, in.ny() - 1);
          const double tx = cx - static_cast<double>(x0), ty = cy - static_cast<double>(y0);
          const T top = lerp_value(vol.at(x0, y0, z), vol.at(x1, y0, z), tx);
          const T bottom = lerp_value(vol.at(x0, y1, z), vol.at(x1, y1, z), tx);
          out.at(i, j, z) = lerp_value(top, bottom, ty);
        }
      }
    }
  }
  return out;
}

void require_nearest(const ResampleParams& p) {
  if (p.mode != InterpMode::Nearest) {
    throw Error(ErrorKind::ModeMismatch, "label and mask volumes can only be resampled with nearest");
  }
}

}  // namespace

IntensityVolume resample_crop(const IntensityVolume& vol, const ResampleParams& params) {
  return resample_impl(vol, params, 0.0f);
}

ProbVolume resample_crop(const ProbVolume& vol, const ResampleParams& params) {
  return resample_impl(vol, params, ClassProbs{1.0f, 0.0f, 0.0f});
}

LabelVolume resample_crop(const LabelVolume& vol, const ResampleParams& params) {
  require_nearest(params);
  return resample_impl(vol, params, ClassId::Normal);
}

MaskVolume resample_crop(const MaskVolume& vol, const ResampleParams& params) {
  require_nearest(params);
  return resample_impl(vol, params, std::uint8_t{0});
}

}  // namespace lh

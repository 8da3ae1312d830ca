#include "lh/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lh {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

void check_range(const Range& r, std::string_view name, bool positive) {
  if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || r.lo > r.hi || (positive && r.lo <= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "invalid range for " + std::string(name));
  }
}

void check_probability(double p, std::string_view name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, std::string(name) + " must lie in [0, 1]");
  }
}

double uniform(std::mt19937_64& rng, const Range& r) {
  return r.lo == r.hi ? r.lo : std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

double unit(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

std::string join(const Range& r) { return format_exact(r.lo) + " " + format_exact(r.hi); }

std::string join(const ChannelSpec& c) {
  return format_exact(c.background) + " " + format_exact(c.prostate) + " " + format_exact(c.indolent_shift) + " " +
         format_exact(c.aggressive_shift) + " " + format_exact(c.noise_sigma);
}

/// Voxels of an axis-aligned ellipsoid (physical semi-axes, voxel-space centre).
/// With `slab` the in-plane ellipse is constant over the z extent instead.
std::vector<std::size_t> ellipsoid_voxels(const GridMeta& m, const std::array<double, 3>& center,
                                          const std::array<double, 3>& semi_mm, bool slab = false) {
  std::vector<std::size_t> out;
  std::array<std::int64_t, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const double reach = semi_mm[a] / m.spacing[a];
    lo[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(center[a] - reach)));
    hi[a] = std::min<std::int64_t>(m.dims[a] - 1, static_cast<std::int64_t>(std::ceil(center[a] + reach)));
  }
  for (auto z = lo[2]; z <= hi[2]; ++z) {
    for (auto y = lo[1]; y <= hi[1]; ++y) {
      for (auto x = lo[0]; x <= hi[0]; ++x) {
        const double dx = (static_cast<double>(x) - center[0]) * m.spacing[0] / semi_mm[0];
        const double dy = (static_cast<double>(y) - center[1]) * m.spacing[1] / semi_mm[1];
        const double dz = (static_cast<double>(z) - center[2]) * m.spacing[2] / semi_mm[2];
        const double dz2 = slab ? (std::abs(dz) <= 1.0 ? 0.0 : 2.0) : dz * dz;
        if (dx * dx + dy * dy + dz2 <= 1.0) out.push_back(m.linear(x, y, z));
      }
    }
  }
  return out;
}

/// Marks every voxel within a (rx, ry, rz) box of `voxels`.
void mark_box(const GridMeta& m, std::span<const std::size_t> voxels, const Index3& r, std::vector<std::uint8_t>& out) {
  for (auto v : voxels) {
    const auto c = m.coords(v);
    for (auto z = std::max<std::int64_t>(0, c[2] - r[2]); z <= std::min(m.nz() - 1, c[2] + r[2]); ++z) {
      for (auto y = std::max<std::int64_t>(0, c[1] - r[1]); y <= std::min(m.ny() - 1, c[1] + r[1]); ++y) {
        for (auto x = std::max<std::int64_t>(0, c[0] - r[0]); x <= std::min(m.nx() - 1, c[0] + r[0]); ++x) {
          out[m.linear(x, y, z)] = 1;
        }
      }
    }
  }
}

std::vector<std::vector<std::size_t>> cancer_lesions(const LabelVolume& labels) {
  const auto cc = connected_components(binarize(labels, ClassGroup::CancerVsAll), Connectivity::TwentySix);
  std::vector<std::vector<std::size_t>> out(cc.count);
  for (std::size_t i = 0; i < cc.ids.size(); ++i) {
    if (cc.ids[i]) out[cc.ids[i] - 1].push_back(i);
  }
  return out;
}

std::vector<double> gaussian_kernel(double sigma_vox) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_vox));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-0.5 * (i * i) / (sigma_vox * sigma_vox));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (auto& w : k) w /= sum;
  return k;
}

/// Separable blur along one axis with clamp-to-edge boundaries.
void blur_axis(std::vector<double>& data, const GridMeta& m, int axis, const std::vector<double>& kernel) {
  const auto radius = static_cast<std::int64_t>(kernel.size() / 2);
  const auto n = m.dims[axis];
  std::vector<double> line(static_cast<std::size_t>(n)), tmp(static_cast<std::size_t>(n));
  const std::int64_t stride = axis == 0 ? 1 : axis == 1 ? m.nx() : m.nx() * m.ny();
  const std::int64_t other_a = axis == 0 ? 1 : 0, other_b = axis == 2 ? 1 : 2;
  for (std::int64_t b = 0; b < m.dims[other_b]; ++b) {
    for (std::int64_t a = 0; a < m.dims[other_a]; ++a) {
      Index3 c{0, 0, 0};
      c[other_a] = a;
      c[other_b] = b;
      const auto base = static_cast<std::int64_t>(m.linear(c[0], c[1], c[2]));
      for (std::int64_t i = 0; i < n; ++i) line[i] = data[static_cast<std::size_t>(base + i * stride)];
      for (std::int64_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::int64_t k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] * line[static_cast<std::size_t>(std::clamp(i + k, std::int64_t{0}, n - 1))];
        }
        tmp[i] = acc;
      }
      for (std::int64_t i = 0; i < n; ++i) data[static_cast<std::size_t>(base + i * stride)] = tmp[i];
    }
  }
}

}  // namespace

void validate(const PhantomSpec& spec) {
  validate(spec.grid);
  if (spec.n_patients < 1) throw Error(ErrorKind::InvalidArgument, "n_patients must be >= 1");
  check_range(spec.prostate_semi_x_mm, "prostate_semi_x_mm", true);
  check_range(spec.prostate_semi_y_mm, "prostate_semi_y_mm", true);
  check_range(spec.prostate_semi_z_mm, "prostate_semi_z_mm", true);
  check_range(spec.lesion_radius_mm, "lesion_radius_mm", true);
  check_range(spec.lesion_half_height_mm, "lesion_half_height_mm", true);
  check_range(spec.aggressive_fraction, "aggressive_fraction", false);
  if (spec.aggressive_fraction.lo < 0.0 || spec.aggressive_fraction.hi > 1.0) {
    throw Error(ErrorKind::InvalidArgument, "aggressive_fraction must lie in [0, 1]");
  }
  if (spec.lesions_min < 0 || spec.lesions_max < spec.lesions_min) {
    throw Error(ErrorKind::InvalidArgument, "lesion count range is invalid");
  }
  for (const auto* c : {&spec.t2w, &spec.adc}) {
    if (!(c->noise_sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "channel noise must be >= 0");
  }
}

KeyValues describe(const PhantomSpec& spec) {
  return {
      {"seed", std::to_string(spec.master_seed)},
      {"n_patients", std::to_string(spec.n_patients)},
      {"dims", std::to_string(spec.grid.dims[0]) + " " + std::to_string(spec.grid.dims[1]) + " " +
                   std::to_string(spec.grid.dims[2])},
      {"spacing_mm", format_exact(spec.grid.spacing[0]) + " " + format_exact(spec.grid.spacing[1]) + " " +
                         format_exact(spec.grid.spacing[2])},
      {"prostate_semi_x_mm", join(spec.prostate_semi_x_mm)},
      {"prostate_semi_y_mm", join(spec.prostate_semi_y_mm)},
      {"prostate_semi_z_mm", join(spec.prostate_semi_z_mm)},
      {"lesions_per_patient", std::to_string(spec.lesions_min) + " " + std::to_string(spec.lesions_max)},
      {"lesion_radius_mm", join(spec.lesion_radius_mm)},
      {"lesion_half_height_mm", join(spec.lesion_half_height_mm)},
      {"aggressive_fraction", join(spec.aggressive_fraction)},
      {"t2w", join(spec.t2w)},
      {"adc", join(spec.adc)},
  };
}

void validate(const DegradationSpec& spec) {
  check_probability(spec.miss_prob, "miss_prob");
  check_probability(spec.slice_keep_prob, "slice_keep_prob");
  for (double v : {spec.erosion_mm, spec.fp_rate, spec.blur_mm, spec.noise_sigma}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, "degradation radii and rates must be >= 0");
    }
  }
}

KeyValues describe(const DegradationSpec& spec) {
  return {
      {"miss_prob", format_exact(spec.miss_prob)},   {"erosion_mm", format_exact(spec.erosion_mm)},
      {"slice_keep_prob", format_exact(spec.slice_keep_prob)}, {"fp_rate", format_exact(spec.fp_rate)},
      {"blur_mm", format_exact(spec.blur_mm)},       {"noise_sigma", format_exact(spec.noise_sigma)},
  };
}

std::mt19937_64 make_stream(std::uint64_t master_seed, std::uint64_t patient_index, std::string_view op) {
  const auto h = splitmix64(splitmix64(splitmix64(master_seed) ^ patient_index) ^ fnv1a(op));
  std::seed_seq seq{static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

std::string patient_id(std::size_t patient_index) {
  auto digits = std::to_string(patient_index);
  if (digits.size() < 4) digits.insert(0, 4 - digits.size(), '0');
  return "case_" + digits;
}

PatientCase generate_phantom(const PhantomSpec& spec, std::size_t patient_index) {
  validate(spec);
  const auto& m = spec.grid;
  auto rng = make_stream(spec.master_seed, patient_index, "phantom");

  // Prostate: ellipsoid near the grid centre.
  const std::array<double, 3> semi{uniform(rng, spec.prostate_semi_x_mm), uniform(rng, spec.prostate_semi_y_mm),
                                   uniform(rng, spec.prostate_semi_z_mm)};
  std::array<double, 3> center{};
  for (int a = 0; a < 3; ++a) {
    const double jitter = uniform(rng, {-2.0, 2.0}) / m.spacing[a];
    center[a] = static_cast<double>(m.dims[a] - 1) / 2.0 + jitter;
  }
  MaskVolume mask(m);
  const auto prostate = ellipsoid_voxels(m, center, semi);
  if (prostate.empty()) throw Error(ErrorKind::SpecInfeasible, "prostate does not intersect the grid");
  for (auto v : prostate) mask[v] = 1;

  LabelVolume grades(m);
  std::vector<std::uint8_t> blocked(m.voxel_count(), 0);
  const int n_lesions = std::uniform_int_distribution<int>(spec.lesions_min, spec.lesions_max)(rng);
  for (int l = 0; l < n_lesions; ++l) {
    const double radius = uniform(rng, spec.lesion_radius_mm);
    const std::array<double, 3> lesion_semi{radius * uniform(rng, {0.8, 1.2}), radius * uniform(rng, {0.8, 1.2}),
                                            uniform(rng, spec.lesion_half_height_mm)};
    std::vector<std::size_t> voxels;
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      const auto pick = prostate[std::uniform_int_distribution<std::size_t>(0, prostate.size() - 1)(rng)];
      const auto c = m.coords(pick);
      const auto full = ellipsoid_voxels(m, {double(c[0]), double(c[1]), double(c[2])}, lesion_semi, true);
      voxels.clear();
      bool clash = false;
      for (auto v : full) {
        if (!mask[v]) continue;
        if (blocked[v]) {
          clash = true;
          break;
        }
        voxels.push_back(v);
      }
      // At least half of the lesion must sit inside the gland.
      placed = !clash && !voxels.empty() && 2 * voxels.size() >= full.size();
    }
    if (!placed) {
      throw Error(ErrorKind::SpecInfeasible, "could not place lesion " + std::to_string(l + 1) + " of patient " +
                                                 std::to_string(patient_index) + " after 100 attempts");
    }

    // Aggressive component: the voxels furthest along a random direction.
    const double fraction = uniform(rng, spec.aggressive_fraction);
    const double theta = uniform(rng, {0.0, 2.0 * std::numbers::pi});
    const double cos_phi = uniform(rng, {-1.0, 1.0});
    const double sin_phi = std::sqrt(1.0 - cos_phi * cos_phi);
    const std::array<double, 3> dir{sin_phi * std::cos(theta), sin_phi * std::sin(theta), cos_phi};
    std::vector<std::pair<double, std::size_t>> proj;
    proj.reserve(voxels.size());
    for (auto v : voxels) {
      const auto c = m.coords(v);
      double t = 0.0;
      for (int a = 0; a < 3; ++a) t += dir[a] * static_cast<double>(c[a]) * m.spacing[a];
      proj.emplace_back(t, v);
    }
    std::sort(proj.begin(), proj.end());
    const auto n_agg = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(proj.size())));
    for (std::size_t i = 0; i < proj.size(); ++i) {
      grades[proj[i].second] = i >= proj.size() - n_agg ? ClassId::Aggressive : ClassId::Indolent;
    }
    for (auto v : voxels) blocked[v] = 1;
  }

  PatientCase patient(patient_id(patient_index), std::move(mask));

  auto noise_rng = make_stream(spec.master_seed, patient_index, "intensity");
  for (const auto& [name, ch] : {std::pair{"t2w", spec.t2w}, std::pair{"adc", spec.adc}}) {
    IntensityVolume img(m);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t i = 0; i < img.size(); ++i) {
      double v = patient.mask()[i] ? ch.prostate : ch.background;
      if (grades[i] == ClassId::Indolent) v += ch.indolent_shift;
      if (grades[i] == ClassId::Aggressive) v += ch.aggressive_shift;
      img[i] = static_cast<float>(v + ch.noise_sigma * noise(noise_rng));
    }
    patient.set_intensity(name, std::move(img));
  }
  patient.set_label(LabelSource::DPathPixel, std::move(grades));
  return patient;
}

LabelVolume derive_dpath_lesion(const PatientCase& patient, const LesionParams& params) {
  const auto& pixel = patient.label(LabelSource::DPathPixel);
  return lesionset_to_labelvolume(extract_lesions(pixel, ClassGroup::CancerVsAll, params));
}

LabelVolume simulate_pathologist(const PatientCase& patient, const DegradationSpec& spec, RngKey key) {
  validate(spec);
  const auto& truth = patient.label(LabelSource::DPathLesion);
  const auto& m = truth.meta();
  auto rng = make_stream(key.master_seed, key.patient_index, "pathologist");
  LabelVolume out = truth;
  for (const auto& lesion : cancer_lesions(truth)) {
    std::vector<std::int64_t> slices;
    for (auto v : lesion) slices.push_back(m.coords(v)[2]);
    std::sort(slices.begin(), slices.end());
    slices.erase(std::unique(slices.begin(), slices.end()), slices.end());

    std::vector<std::uint8_t> keep(static_cast<std::size_t>(m.nz()), 0);
    bool any = false;
    for (auto z : slices) {
      keep[static_cast<std::size_t>(z)] = unit(rng) < spec.slice_keep_prob;
      any = any || keep[static_cast<std::size_t>(z)];
    }
    if (!any) {
      const auto pick = std::uniform_int_distribution<std::size_t>(0, slices.size() - 1)(rng);
      keep[static_cast<std::size_t>(slices[pick])] = 1;
    }
    for (auto v : lesion) {
      if (!keep[static_cast<std::size_t>(m.coords(v)[2])]) out[v] = ClassId::Normal;
    }
  }
  return out;
}

LabelVolume simulate_radiologist(const PatientCase& patient, const DegradationSpec& spec, RngKey key) {
  validate(spec);
  const auto& truth = patient.label(LabelSource::DPathLesion);
  const auto& m = truth.meta();
  if (std::abs(m.spacing[0] - m.spacing[1]) > 1e-6) {
    throw Error(ErrorKind::AnisotropicInPlaneSpacing, "in-plane erosion needs sx == sy");
  }
  const auto disk = disk_offsets(disk_radius_voxels(spec.erosion_mm, m.spacing[0]));
  auto rng = make_stream(key.master_seed, key.patient_index, "radiologist");

  LabelVolume out = truth;
  for (const auto& lesion : cancer_lesions(truth)) {
    if (unit(rng) < spec.miss_prob) {
      for (auto v : lesion) out[v] = ClassId::Normal;
      continue;
    }
    std::vector<std::uint8_t> member(m.voxel_count(), 0);
    for (auto v : lesion) member[v] = 1;
    for (auto v : lesion) {
      const auto [x, y, z] = m.coords(v);
      const bool inside = std::all_of(disk.begin(), disk.end(), [&](const auto& o) {
        const auto px = x + o[0], py = y + o[1];
        return m.contains(px, py, z) && member[m.linear(px, py, z)];
      });
      if (!inside) out[v] = ClassId::Normal;
    }
  }
  return out;
}

ProbVolume simulate_predictions(const PatientCase& patient, const DegradationSpec& spec, RngKey key) {
  validate(spec);
  const auto& truth = patient.label(LabelSource::DPathPixel);
  const auto& m = truth.meta();
  const auto n = m.voxel_count();

  std::array<std::vector<double>, 3> ch;
  for (auto& c : ch) c.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) ch[static_cast<std::size_t>(truth[i])][i] = 1.0;

  Index3 blur_reach{0, 0, 0};
  if (spec.blur_mm > 0.0) {
    for (int a = 0; a < 3; ++a) {
      const double sigma = spec.blur_mm / m.spacing[a];
      if (sigma < 1e-3) continue;
      const auto kernel = gaussian_kernel(sigma);
      blur_reach[a] = static_cast<std::int64_t>(kernel.size() / 2);
      for (auto& c : ch) blur_axis(c, m, a, kernel);
    }
  }

  if (spec.noise_sigma > 0.0) {
    auto rng = make_stream(key.master_seed, key.patient_index, "predictions/noise");
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& c : ch) c[i] = std::clamp(c[i] + noise(rng), 0.0, 1.0);
    }
  }

  {
    auto rng = make_stream(key.master_seed, key.patient_index, "predictions/miss");
    std::vector<std::uint8_t> dropped(n, 0);
    for (const auto& lesion : cancer_lesions(truth)) {
      if (unit(rng) < spec.miss_prob) mark_box(m, lesion, blur_reach, dropped);
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (dropped[i]) ch[1][i] = ch[2][i] = 0.0;
    }
  }

  {
    auto rng = make_stream(key.master_seed, key.patient_index, "predictions/false_positives");
    std::vector<std::size_t> gland;
    for (std::size_t i = 0; i < n; ++i) {
      if (patient.mask()[i]) gland.push_back(i);
    }
    const int blobs = spec.fp_rate > 0.0 ? std::poisson_distribution<int>(spec.fp_rate)(rng) : 0;
    for (int b = 0; b < blobs && !gland.empty(); ++b) {
      const auto c = m.coords(gland[std::uniform_int_distribution<std::size_t>(0, gland.size() - 1)(rng)]);
      const double r = uniform(rng, {2.0, 5.0});
      const std::size_t cls = unit(rng) < 0.5 ? 1 : 2;
      const double peak = uniform(rng, {0.55, 0.95});
      for (auto v : ellipsoid_voxels(m, {double(c[0]), double(c[1]), double(c[2])}, {r, r, r})) {
        ch[cls][v] = std::max(ch[cls][v], peak);
      }
    }
  }

  ProbVolume out(m);
  for (std::size_t i = 0; i < n; ++i) {
    if (!patient.mask()[i]) ch[1][i] = ch[2][i] = 0.0;
    const double sum = ch[0][i] + ch[1][i] + ch[2][i];
    if (sum <= 0.0) {
      out[i] = {1.0f, 0.0f, 0.0f};
      continue;
    }
    out[i] = {static_cast<float>(ch[0][i] / sum), static_cast<float>(ch[1][i] / sum),
              static_cast<float>(ch[2][i] / sum)};
  }
  return out;
}

}  // namespace lh

#include "lh/lesions.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

#include "lh/text.hpp"

namespace lh {

Index3 StructuringElement::reach() const noexcept {
  Index3 r{0, 0, 0};
  for (const auto& o : offsets) {
    for (int a = 0; a < 3; ++a) r[a] = std::max(r[a], std::abs(o[a]));
  }
  return r;
}

int disk_radius_voxels(double radius_mm, double spacing_mm) {
  if (!(radius_mm >= 0.0) || !(spacing_mm > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "disk radius must be >= 0 and spacing > 0");
  }
  return static_cast<int>(std::lround(radius_mm / spacing_mm));
}

std::vector<std::array<std::int64_t, 2>> disk_offsets(int radius_vox) {
  std::vector<std::array<std::int64_t, 2>> out;
  const std::int64_t r = radius_vox;
  for (std::int64_t dy = -r; dy <= r; ++dy) {
    for (std::int64_t dx = -r; dx <= r; ++dx) {
      if (dx * dx + dy * dy <= r * r) out.push_back({dx, dy});
    }
  }
  return out;
}

StructuringElement build_structuring_element(const GridMeta& meta, std::array<double, 3> radii_mm) {
  validate(meta);
  if (std::abs(meta.spacing[0] - meta.spacing[1]) > 1e-6) {
    throw Error(ErrorKind::AnisotropicInPlaneSpacing, "structuring disks need sx == sy");
  }
  for (double r : radii_mm) {
    if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidArgument, "disk radii must be positive");
  }
  StructuringElement se;
  se.radii_mm = radii_mm;
  for (int k = 0; k < 3; ++k) se.radii_vox[k] = disk_radius_voxels(radii_mm[k], meta.spacing[0]);
  if (se.radii_vox[0] != se.radii_vox[2]) {
    throw Error(ErrorKind::InvalidArgument, "outer disks must round to the same voxel radius");
  }
  for (int k = 0; k < 3; ++k) {
    for (const auto& [dx, dy] : disk_offsets(se.radii_vox[k])) se.offsets.push_back({dx, dy, k - 1});
  }
  return se;
}

MaskVolume binary_dilate(const MaskVolume& mask, const StructuringElement& se) {
  const auto& m = mask.meta();
  MaskVolume out(m);
  for (std::int64_t z = 0; z < m.nz(); ++z) {
    for (std::int64_t y = 0; y < m.ny(); ++y) {
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        if (!mask.at(x, y, z)) continue;
        for (const auto& o : se.offsets) {
          const auto px = x + o[0], py = y + o[1], pz = z + o[2];
          if (m.contains(px, py, pz)) out.at(px, py, pz) = 1;
        }
      }
    }
  }
  return out;
}

MaskVolume binary_erode(const MaskVolume& mask, const StructuringElement& se) {
  const auto& m = mask.meta();
  MaskVolume out(m);
  for (std::int64_t z = 0; z < m.nz(); ++z) {
    for (std::int64_t y = 0; y < m.ny(); ++y) {
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        if (!mask.at(x, y, z)) continue;
        const bool keep = std::all_of(se.offsets.begin(), se.offsets.end(), [&](const Index3& o) {
          const auto px = x + o[0], py = y + o[1], pz = z + o[2];
          return m.contains(px, py, pz) && mask.at(px, py, pz) != 0;
        });
        out.at(x, y, z) = keep ? 1 : 0;
      }
    }
  }
  return out;
}

MaskVolume binary_close(const MaskVolume& mask, const StructuringElement& se) {
  const auto& m = mask.meta();
  const auto pad = se.reach();
  GridMeta padded = m;
  for (int a = 0; a < 3; ++a) padded.dims[a] += 2 * pad[a];

  // Dilate into the padded buffer so nothing is lost at the border.
  std::vector<std::uint8_t> dilated(padded.voxel_count(), 0);
  for (std::int64_t z = 0; z < m.nz(); ++z) {
    for (std::int64_t y = 0; y < m.ny(); ++y) {
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        if (!mask.at(x, y, z)) continue;
        for (const auto& o : se.offsets) {
          dilated[padded.linear(x + pad[0] + o[0], y + pad[1] + o[1], z + pad[2] + o[2])] = 1;
        }
      }
    }
  }

  MaskVolume out(m);
  for (std::int64_t z = 0; z < m.nz(); ++z) {
    for (std::int64_t y = 0; y < m.ny(); ++y) {
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        const auto cx = x + pad[0], cy = y + pad[1], cz = z + pad[2];
        if (!dilated[padded.linear(cx, cy, cz)]) continue;
        const bool keep = std::all_of(se.offsets.begin(), se.offsets.end(), [&](const Index3& o) {
          return dilated[padded.linear(cx + o[0], cy + o[1], cz + o[2])] != 0;
        });
        out.at(x, y, z) = keep ? 1 : 0;
      }
    }
  }
  return out;
}

namespace {

std::vector<Index3> make_neighbors(int max_manhattan) {
  std::vector<Index3> out;
  for (std::int64_t dz = -1; dz <= 1; ++dz) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto n = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (n > 0 && n <= max_manhattan) out.push_back({dx, dy, dz});
      }
    }
  }
  return out;
}

}  // namespace

std::span<const Index3> neighbor_offsets(Connectivity c) noexcept {
  static const auto six = make_neighbors(1);
  static const auto eighteen = make_neighbors(2);
  static const auto twenty_six = make_neighbors(3);
  switch (c) {
    case Connectivity::Six: return six;
    case Connectivity::Eighteen: return eighteen;
    case Connectivity::TwentySix: return twenty_six;
  }
  return twenty_six;
}

std::optional<Connectivity> parse_connectivity(int n) noexcept {
  switch (n) {
    case 6: return Connectivity::Six;
    case 18: return Connectivity::Eighteen;
    case 26: return Connectivity::TwentySix;
    default: return std::nullopt;
  }
}

Components connected_components(const MaskVolume& mask, Connectivity connectivity) {
  const auto& m = mask.meta();
  const auto nbrs = neighbor_offsets(connectivity);
  Components cc{Volume<std::uint32_t>(m), 0};
  std::deque<std::size_t> queue;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || cc.ids[seed] != 0) continue;
    const auto label = ++cc.count;
    cc.ids[seed] = label;
    queue.push_back(seed);
    while (!queue.empty()) {
      const auto cur = queue.front();
      queue.pop_front();
      const auto [x, y, z] = m.coords(cur);
      for (const auto& o : nbrs) {
        const auto px = x + o[0], py = y + o[1], pz = z + o[2];
        if (!m.contains(px, py, pz)) continue;
        const auto id = m.linear(px, py, pz);
        if (mask[id] && cc.ids[id] == 0) {
          cc.ids[id] = label;
          queue.push_back(id);
        }
      }
    }
  }
  return cc;
}

std::string_view to_string(LesionGrade g) noexcept {
  switch (g) {
    case LesionGrade::Benign: return "benign";
    case LesionGrade::Indolent: return "indolent";
    case LesionGrade::Aggressive: return "aggressive";
  }
  return "?";
}

bool in_group(LesionGrade g, ClassGroup group) noexcept {
  switch (g) {
    case LesionGrade::Benign: return false;
    case LesionGrade::Indolent: return in_group(ClassId::Indolent, group);
    case LesionGrade::Aggressive: return in_group(ClassId::Aggressive, group);
  }
  return false;
}

GradeResult grade_lesion(std::span<const std::size_t> voxels, const LabelVolume& grade_map, double agg_threshold,
                         double ind_threshold) {
  if (voxels.empty()) throw Error(ErrorKind::EmptyLesion, "cannot grade an empty voxel set");
  std::size_t agg = 0, ind = 0;
  for (auto v : voxels) {
    const auto c = grade_map[v];
    agg += c == ClassId::Aggressive;
    ind += c == ClassId::Indolent;
  }
  const auto n = static_cast<double>(voxels.size());
  GradeResult r;
  r.agg_fraction = static_cast<double>(agg) / n;
  r.ind_fraction = static_cast<double>(ind) / n;
  if (r.agg_fraction >= agg_threshold) {
    r.grade = LesionGrade::Aggressive;
  } else if (r.ind_fraction >= ind_threshold) {
    r.grade = LesionGrade::Indolent;
  } else {
    r.grade = LesionGrade::Benign;
  }
  return r;
}

LesionSet extract_lesions(const LabelVolume& labels, ClassGroup group, const StructuringElement& se,
                          const LesionParams& params) {
  const auto& meta = labels.meta();
  const auto closed = binary_close(binarize(labels, group), se);
  const auto cc = connected_components(closed, params.connectivity);

  std::vector<std::vector<std::size_t>> members(cc.count);
  for (std::size_t i = 0; i < cc.ids.size(); ++i) {
    if (cc.ids[i] != 0) members[cc.ids[i] - 1].push_back(i);
  }

  LesionSet out{{}, meta, params.min_volume_mm3};
  const double voxel_mm3 = voxel_volume_mm3(meta);
  for (auto& voxels : members) {
    const double volume = static_cast<double>(voxels.size()) * voxel_mm3;
    if (volume < params.min_volume_mm3) continue;
    const auto g = grade_lesion(voxels, labels, params.agg_threshold, params.ind_threshold);
    out.lesions.push_back({std::move(voxels), volume, g.grade, g.agg_fraction, g.ind_fraction});
  }
  return out;
}

LesionSet extract_lesions(const LabelVolume& labels, ClassGroup group, const LesionParams& params) {
  return extract_lesions(labels, group, build_structuring_element(labels.meta(), params.radii_mm), params);
}

LabelVolume lesionset_to_labelvolume(const LesionSet& lesions) {
  LabelVolume out(lesions.meta);
  std::vector<std::uint8_t> painted(out.size(), 0);
  for (const auto& lesion : lesions.lesions) {
    const auto cls = lesion.grade == LesionGrade::Aggressive ? ClassId::Aggressive
                     : lesion.grade == LesionGrade::Indolent ? ClassId::Indolent
                                                             : ClassId::Normal;
    for (auto v : lesion.voxel_ids) {
      if (v >= out.size()) throw Error(ErrorKind::InvalidArgument, "lesion voxel outside the grid");
      if (painted[v]) throw Error(ErrorKind::OverlappingLesions, "voxel " + std::to_string(v) + " in two lesions");
      painted[v] = 1;
      out[v] = cls;
    }
  }
  return out;
}

void write_lesion_csv_header(std::ostream& out) {
  out << "patient_id,lesion_id,grade,n_voxels,volume_mm3,agg_fraction,ind_fraction\n";
}

void write_lesion_csv_rows(std::ostream& out, std::string_view patient_id, const LesionSet& lesions) {
  for (std::size_t i = 0; i < lesions.lesions.size(); ++i) {
    const auto& l = lesions.lesions[i];
    out << patient_id << ',' << (i + 1) << ',' << to_string(l.grade) << ',' << l.voxel_ids.size() << ','
        << format_number(l.volume_mm3) << ',' << format_number(l.agg_fraction) << ','
        << format_number(l.ind_fraction) << '\n';
  }
}

}  // namespace lh

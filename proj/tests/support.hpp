#pragma once
// Random generators and brute-force oracles shared by the test binaries.
// The oracles deliberately use different algorithms from the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "lh/eval.hpp"
#include "lh/lesions.hpp"
#include "lh/volume.hpp"

namespace lh::test {

using Rng = std::mt19937_64;

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline GridMeta random_meta(Rng& rng, int max_dim = 16) {
  return GridMeta{{uniform_int(rng, 1, max_dim), uniform_int(rng, 1, max_dim), uniform_int(rng, 1, max_dim)},
                  {1.0, 1.0, 1.0}};
}

inline MaskVolume random_mask(Rng& rng, const GridMeta& m, double density) {
  MaskVolume v(m);
  std::bernoulli_distribution on(density);
  for (auto& x : v.voxels()) x = on(rng) ? 1 : 0;
  return v;
}

inline LabelVolume random_labels(Rng& rng, const GridMeta& m) {
  LabelVolume v(m);
  for (auto& x : v.voxels()) x = static_cast<ClassId>(uniform_int(rng, 0, 2));
  return v;
}

/// Fills an axis-aligned box [lo, hi] (inclusive voxel coords).
template <typename T>
void fill_box(Volume<T>& v, Index3 lo, Index3 hi, T value) {
  for (auto z = lo[2]; z <= hi[2]; ++z)
    for (auto y = lo[1]; y <= hi[1]; ++y)
      for (auto x = lo[0]; x <= hi[0]; ++x) v.at(x, y, z) = value;
}

/// Component labelling by repeated min-label relaxation until nothing
/// changes, then relabelled 1..n in scan order of first appearance.
inline std::vector<std::uint32_t> flood_fill_oracle(const MaskVolume& mask, int connectivity) {
  const auto& m = mask.meta();
  const auto n = m.voxel_count();
  std::vector<std::uint64_t> label(n, 0);
  for (std::size_t i = 0; i < n; ++i) label[i] = mask[i] ? i + 1 : 0;
  const auto adjacent = [connectivity](int dx, int dy, int dz) {
    const int s = std::abs(dx) + std::abs(dy) + std::abs(dz);
    if (s == 0) return false;
    if (connectivity == 6) return s == 1;
    if (connectivity == 18) return s <= 2;
    return true;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::int64_t z = 0; z < m.nz(); ++z)
      for (std::int64_t y = 0; y < m.ny(); ++y)
        for (std::int64_t x = 0; x < m.nx(); ++x) {
          const auto i = m.linear(x, y, z);
          if (!label[i]) continue;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                if (!adjacent(dx, dy, dz) || !m.contains(x + dx, y + dy, z + dz)) continue;
                const auto j = m.linear(x + dx, y + dy, z + dz);
                if (label[j] && label[j] < label[i]) {
                  label[i] = label[j];
                  changed = true;
                }
              }
        }
  }
  std::map<std::uint64_t, std::uint32_t> renumber;
  std::vector<std::uint32_t> out(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!label[i]) continue;
    auto [it, fresh] = renumber.emplace(label[i], static_cast<std::uint32_t>(renumber.size() + 1));
    out[i] = it->second;
  }
  return out;
}

inline bool mask_at(const MaskVolume& m, std::int64_t x, std::int64_t y, std::int64_t z) {
  return m.meta().contains(x, y, z) && m.at(x, y, z);
}

inline MaskVolume dilate_oracle(const MaskVolume& mask, const StructuringElement& se) {
  MaskVolume out(mask.meta());
  const auto& m = mask.meta();
  for (std::int64_t z = 0; z < m.nz(); ++z)
    for (std::int64_t y = 0; y < m.ny(); ++y)
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        bool hit = false;
        for (const auto& o : se.offsets) hit = hit || mask_at(mask, x - o[0], y - o[1], z - o[2]);
        out.at(x, y, z) = hit;
      }
  return out;
}

inline MaskVolume erode_oracle(const MaskVolume& mask, const StructuringElement& se) {
  MaskVolume out(mask.meta());
  const auto& m = mask.meta();
  for (std::int64_t z = 0; z < m.nz(); ++z)
    for (std::int64_t y = 0; y < m.ny(); ++y)
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        bool all = true;
        for (const auto& o : se.offsets) all = all && mask_at(mask, x + o[0], y + o[1], z + o[2]);
        out.at(x, y, z) = all;
      }
  return out;
}

/// Closing on an unbounded background: v survives iff every shifted copy
/// v + o of the element origin reaches some mask voxel v + o + o'.
inline MaskVolume close_oracle(const MaskVolume& mask, const StructuringElement& se) {
  MaskVolume out(mask.meta());
  const auto& m = mask.meta();
  for (std::int64_t z = 0; z < m.nz(); ++z)
    for (std::int64_t y = 0; y < m.ny(); ++y)
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        bool all = true;
        for (const auto& o : se.offsets) {
          bool any = false;
          for (const auto& p : se.offsets) {
            any = any || mask_at(mask, x + o[0] + p[0], y + o[1] + p[1], z + o[2] + p[2]);
            if (any) break;
          }
          all = all && any;
          if (!all) break;
        }
        out.at(x, y, z) = all;
      }
  return out;
}

inline std::optional<double> auc_oracle(const std::vector<EvalUnit>& units) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : units) {
    if (!p.truth) continue;
    for (const auto& n : units) {
      if (n.truth) continue;
      ++pairs;
      wins += p.score > n.score ? 1.0 : p.score == n.score ? 0.5 : 0.0;
    }
  }
  if (pairs == 0) return std::nullopt;
  return wins / static_cast<double>(pairs);
}

/// A connected ellipsoid blob centred in a grid, spanning at least
/// `min_slices` slices.
inline MaskVolume random_blob(Rng& rng, int min_slices = 6) {
  const int ax = uniform_int(rng, 3, 9), ay = uniform_int(rng, 3, 9);
  const int az = uniform_int(rng, (min_slices + 1) / 2, 9);
  const GridMeta m{{2 * ax + 5, 2 * ay + 5, 2 * az + 3}, {1.0, 1.0, 1.0}};
  MaskVolume v(m);
  const double cx = (m.nx() - 1) / 2.0 + uniform_real(rng, -1, 1);
  const double cy = (m.ny() - 1) / 2.0 + uniform_real(rng, -1, 1);
  const double cz = (m.nz() - 1) / 2.0;
  const double sx = ax + uniform_real(rng, 0, 0.9), sy = ay + uniform_real(rng, 0, 0.9);
  const double sz = az + uniform_real(rng, 0, 0.9);
  for (std::int64_t z = 0; z < m.nz(); ++z)
    for (std::int64_t y = 0; y < m.ny(); ++y)
      for (std::int64_t x = 0; x < m.nx(); ++x) {
        const double dx = (x - cx) / sx, dy = (y - cy) / sy, dz = (z - cz) / sz;
        // Mild lumpy perturbation keeps the blob star-shaped, hence connected.
        const double r = 1.0 + 0.15 * std::sin(3.0 * std::atan2(dy, dx));
        v.at(x, y, z) = dx * dx + dy * dy + dz * dz <= r * r ? 1 : 0;
      }
  return v;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("lh_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace lh::test

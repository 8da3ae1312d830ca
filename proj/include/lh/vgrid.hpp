#pragma once

// VGRID: a `key = value` text header (.vgh) next to a dense little-endian
// raw dump in x-fastest order.
//
//   dims = 96 96 16
//   spacing_mm = 0.5 0.5 3
//   dtype = u8            (u8 | bool8 | f32 | f32x3)
//   order = xyz
//   byteorder = little
//   data = mask.raw

#include <filesystem>
#include <variant>

#include "lh/volume.hpp"

namespace lh {

enum class VoxelType { U8, Bool8, F32, F32x3 };

using AnyVolume = std::variant<LabelVolume, MaskVolume, IntensityVolume, ProbVolume>;

[[nodiscard]] AnyVolume read_volume(const std::filesystem::path& header_path);

/// Reads and requires a specific volume kind; a dtype mismatch is a MalformedHeader.
template <typename V>
[[nodiscard]] V read_volume_as(const std::filesystem::path& header_path) {
  auto any = read_volume(header_path);
  if (auto* v = std::get_if<V>(&any)) return std::move(*v);
  throw Error(ErrorKind::MalformedHeader, header_path.string() + ": unexpected dtype");
}

/// Writes `<stem>.vgh` and `<stem>.raw` side by side.
void write_volume(const LabelVolume& vol, const std::filesystem::path& header_path);
void write_volume(const MaskVolume& vol, const std::filesystem::path& header_path);
void write_volume(const IntensityVolume& vol, const std::filesystem::path& header_path);
void write_volume(const ProbVolume& vol, const std::filesystem::path& header_path);
void write_volume(const AnyVolume& vol, const std::filesystem::path& header_path);

}  // namespace lh

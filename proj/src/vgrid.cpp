#include "lh/vgrid.hpp"

#include <bit>
#include <fstream>
#include <map>

#include "lh/text.hpp"

namespace lh {
namespace {

constexpr std::string_view dtype_name(VoxelType t) {
  switch (t) {
    case VoxelType::U8: return "u8";
    case VoxelType::Bool8: return "bool8";
    case VoxelType::F32: return "f32";
    case VoxelType::F32x3: return "f32x3";
  }
  return "?";
}

constexpr std::size_t element_bytes(VoxelType t) {
  switch (t) {
    case VoxelType::U8:
    case VoxelType::Bool8: return 1;
    case VoxelType::F32: return 4;
    case VoxelType::F32x3: return 12;
  }
  return 0;
}

struct Header {
  GridMeta meta;
  VoxelType type = VoxelType::U8;
  std::filesystem::path data;
};

Header parse_header(const std::filesystem::path& header_path) {
  const auto kv = read_key_value_file(header_path);
  std::map<std::string, std::string, std::less<>> fields(kv.begin(), kv.end());
  const auto require = [&](std::string_view key) -> const std::string& {
    const auto it = fields.find(key);
    if (it == fields.end()) {
      throw Error(ErrorKind::MalformedHeader, header_path.string() + ": missing '" + std::string(key) + "'");
    }
    return it->second;
  };
  for (const auto& [k, v] : kv) {
    if (k != "dims" && k != "spacing_mm" && k != "dtype" && k != "order" && k != "byteorder" && k != "data") {
      throw Error(ErrorKind::MalformedHeader, header_path.string() + ": unknown key '" + k + "'");
    }
  }

  Header h;
  const auto dims = split_ws(require("dims"));
  const auto spacing = split_ws(require("spacing_mm"));
  if (dims.size() != 3 || spacing.size() != 3) {
    throw Error(ErrorKind::MalformedHeader, header_path.string() + ": dims/spacing_mm need three values");
  }
  for (int a = 0; a < 3; ++a) {
    const auto d = parse_int(dims[a]);
    const auto s = parse_double(spacing[a]);
    if (!d || *d < 1) throw Error(ErrorKind::MalformedHeader, header_path.string() + ": bad dims");
    if (!s || !std::isfinite(*s) || *s <= 0.0) {
      throw Error(ErrorKind::MalformedHeader, header_path.string() + ": bad spacing_mm");
    }
    h.meta.dims[a] = *d;
    h.meta.spacing[a] = *s;
  }
  const auto& dtype = require("dtype");
  bool found = false;
  for (auto t : {VoxelType::U8, VoxelType::Bool8, VoxelType::F32, VoxelType::F32x3}) {
    if (dtype == dtype_name(t)) {
      h.type = t;
      found = true;
    }
  }
  if (!found) throw Error(ErrorKind::MalformedHeader, header_path.string() + ": unknown dtype '" + dtype + "'");
  if (require("order") != "xyz") throw Error(ErrorKind::MalformedHeader, "only order = xyz is supported");
  if (require("byteorder") != "little") {
    throw Error(ErrorKind::MalformedHeader, "only byteorder = little is supported");
  }
  const auto& data = require("data");
  if (data.empty()) throw Error(ErrorKind::MalformedHeader, header_path.string() + ": empty data path");
  h.data = header_path.parent_path() / data;
  return h;
}

std::vector<unsigned char> read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoFailure, "cannot open raw file " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

float load_f32(const unsigned char* p) {
  const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
                             (std::uint32_t{p[3]} << 24);
  return std::bit_cast<float>(bits);
}

void store_f32(float v, std::vector<unsigned char>& out) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<unsigned char>((bits >> s) & 0xffu));
}

float checked_finite(float v) {
  if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteValue, "raw data contains a non-finite float");
  return v;
}

void write_pair(const GridMeta& meta, VoxelType type, const std::vector<unsigned char>& raw,
                const std::filesystem::path& header_path) {
  auto raw_path = header_path;
  raw_path.replace_extension(".raw");
  std::string header;
  header += "dims = " + std::to_string(meta.dims[0]) + " " + std::to_string(meta.dims[1]) + " " +
            std::to_string(meta.dims[2]) + "\n";
  header += "spacing_mm = " + format_exact(meta.spacing[0]) + " " + format_exact(meta.spacing[1]) + " " +
            format_exact(meta.spacing[2]) + "\n";
  header += "dtype = " + std::string(dtype_name(type)) + "\n";
  header += "order = xyz\nbyteorder = little\n";
  header += "data = " + raw_path.filename().string() + "\n";

  std::ofstream out(raw_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + raw_path.string());
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorKind::IoFailure, "write failed for " + raw_path.string());
  write_text_file(header_path, header);
}

}  // namespace

AnyVolume read_volume(const std::filesystem::path& header_path) {
  const auto h = parse_header(header_path);
  const auto raw = read_raw(h.data);
  const auto n = h.meta.voxel_count();
  const auto expected = n * element_bytes(h.type);
  if (raw.size() != expected) {
    throw Error(ErrorKind::SizeMismatch, h.data.string() + ": " + std::to_string(raw.size()) +
                                             " bytes, expected " + std::to_string(expected));
  }

  switch (h.type) {
    case VoxelType::U8: {
      std::vector<ClassId> v(n);
      for (std::size_t i = 0; i < n; ++i) {
        if (!is_valid_class(raw[i])) {
          throw Error(ErrorKind::InvalidClassValue, "label value " + std::to_string(raw[i]) + " at voxel " +
                                                        std::to_string(i));
        }
        v[i] = static_cast<ClassId>(raw[i]);
      }
      return LabelVolume(h.meta, std::move(v));
    }
    case VoxelType::Bool8: {
      for (std::size_t i = 0; i < n; ++i) {
        if (raw[i] > 1) {
          throw Error(ErrorKind::InvalidClassValue, "mask value " + std::to_string(raw[i]) + " at voxel " +
                                                        std::to_string(i));
        }
      }
      return MaskVolume(h.meta, std::vector<std::uint8_t>(raw.begin(), raw.end()));
    }
    case VoxelType::F32: {
      std::vector<float> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = checked_finite(load_f32(&raw[4 * i]));
      return IntensityVolume(h.meta, std::move(v));
    }
    case VoxelType::F32x3: {
      std::vector<ClassProbs> v(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 3; ++c) v[i][c] = checked_finite(load_f32(&raw[12 * i + 4 * c]));
      }
      ProbVolume out(h.meta, std::move(v));
      validate(out);
      return out;
    }
  }
  throw Error(ErrorKind::MalformedHeader, "unreachable dtype");
}

void write_volume(const LabelVolume& vol, const std::filesystem::path& header_path) {
  std::vector<unsigned char> raw(vol.size());
  for (std::size_t i = 0; i < vol.size(); ++i) raw[i] = static_cast<unsigned char>(vol[i]);
  write_pair(vol.meta(), VoxelType::U8, raw, header_path);
}

void write_volume(const MaskVolume& vol, const std::filesystem::path& header_path) {
  std::vector<unsigned char> raw(vol.size());
  for (std::size_t i = 0; i < vol.size(); ++i) raw[i] = vol[i] != 0 ? 1 : 0;
  write_pair(vol.meta(), VoxelType::Bool8, raw, header_path);
}

void write_volume(const IntensityVolume& vol, const std::filesystem::path& header_path) {
  std::vector<unsigned char> raw;
  raw.reserve(vol.size() * 4);
  for (float v : vol.voxels()) store_f32(v, raw);
  write_pair(vol.meta(), VoxelType::F32, raw, header_path);
}

void write_volume(const ProbVolume& vol, const std::filesystem::path& header_path) {
  std::vector<unsigned char> raw;
  raw.reserve(vol.size() * 12);
  for (const auto& p : vol.voxels()) {
    for (float v : p) store_f32(v, raw);
  }
  write_pair(vol.meta(), VoxelType::F32x3, raw, header_path);
}

void write_volume(const AnyVolume& vol, const std::filesystem::path& header_path) {
  std::visit([&](const auto& v) { write_volume(v, header_path); }, vol);
}

}  // namespace lh

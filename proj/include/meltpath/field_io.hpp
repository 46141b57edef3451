#pragma once

// ".vgf" voxel grid files: one ASCII line holding a JSON header, then the raw
// little-endian payload. Spatial order is x-fastest; multi-channel payloads are
// planar (all voxels of channel 0, then channel 1, ...).
//
//   {"magic":"VGF1","dims":[nx,ny,nz],"voxel_um":u,"channels":c,"dtype":"i32",
//    "order":"x-fastest","endian":"little", ...}\n<payload>
//
// dtype is "i32" (labels, melt masks), "f32" (temperatures) or "f64" (order
// parameters). Extra keys: "kind" (grain|temperature|mask), "size_mm", "n_ori",
// "config_hash" (omitted when empty).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "meltpath/domain.hpp"

namespace meltpath {

struct VgfHeader {
  std::string kind;
  DomainSpec spec;
  int channels = 1;
  std::string dtype;
  int n_ori = 0;
  std::string config_hash;
};

struct VgfFile {
  VgfHeader header;
  std::uint64_t payload_offset = 0;
  std::vector<std::uint8_t> payload;
};

/// Parses a .vgf file; throws FormatError with the failing byte offset.
VgfFile read_vgf(const std::filesystem::path& path);

void save_field(const std::filesystem::path& path, const GrainField& field, const std::string& config_hash = {});
void save_field(const std::filesystem::path& path, const TemperatureField& field, const std::string& config_hash = {});
void save_field(const std::filesystem::path& path, const MeltMask& mask, const std::string& config_hash = {});

GrainField load_grain_field(const std::filesystem::path& path);
TemperatureField load_temperature_field(const std::filesystem::path& path);
MeltMask load_melt_mask(const std::filesystem::path& path);

}  // namespace meltpath

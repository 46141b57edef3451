#include "meltpath/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <json.hpp>

#include "meltpath/error.hpp"

namespace meltpath {

static_assert(std::endian::native == std::endian::little,
              "field I/O assumes a little-endian host");

namespace {

using nlohmann::json;

std::size_t dtype_size(const std::string& dtype) {
  if (dtype == "i32" || dtype == "f32") return 4;
  if (dtype == "f64") return 8;
  return 0;
}

template <typename T>
void write_file(const std::filesystem::path& path, const std::string& kind, const DomainSpec& spec,
                int channels, const std::string& dtype, int n_ori, const std::vector<T>& data,
                const std::string& config_hash) {
  nlohmann::ordered_json h;
  h["magic"] = "VGF1";
  h["dims"] = {spec.dims[0], spec.dims[1], spec.dims[2]};
  h["voxel_um"] = spec.voxel_um;
  h["channels"] = channels;
  h["dtype"] = dtype;
  h["order"] = "x-fastest";
  h["endian"] = "little";
  h["kind"] = kind;
  h["size_mm"] = {spec.size_mm[0], spec.size_mm[1], spec.size_mm[2]};
  if (n_ori > 0) h["n_ori"] = n_ori;
  if (!config_hash.empty()) h["config_hash"] = config_hash;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  const std::string line = h.dump() + "\n";
  out.write(line.data(), static_cast<std::streamsize>(line.size()));
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(T)));
  if (!out) throw InvalidArgument("failed writing '" + path.string() + "'");
}

template <typename T>
std::vector<T> decode(const VgfFile& f) {
  std::vector<T> out(f.payload.size() / sizeof(T));
  std::memcpy(out.data(), f.payload.data(), out.size() * sizeof(T));
  return out;
}

void expect(const VgfFile& f, const std::string& kind, const std::string& dtype) {
  if (f.header.kind != kind) {
    throw FormatError("expected a '" + kind + "' field but found '" + f.header.kind + "'", 0);
  }
  if (f.header.dtype != dtype) {
    throw FormatError("expected dtype " + dtype + " but found " + f.header.dtype, 0);
  }
}

}  // namespace

VgfFile read_vgf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const char magic[] = "{\"magic\":\"VGF1\"";
  if (bytes.size() < sizeof(magic) - 1 || std::memcmp(bytes.data(), magic, sizeof(magic) - 1) != 0) {
    throw FormatError("missing VGF1 magic", 0);
  }
  std::size_t eol = 0;
  while (eol < bytes.size() && bytes[eol] != '\n') ++eol;
  if (eol == bytes.size()) throw FormatError("header line is not terminated", bytes.size());

  json h;
  try {
    h = json::parse(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(eol));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed header: ") + e.what(), e.byte);
  }

  VgfFile f;
  f.payload_offset = eol + 1;
  try {
    if (h.value("endian", "") != "little") throw FormatError("unsupported endianness", 0);
    if (h.value("order", "") != "x-fastest") throw FormatError("unsupported voxel order", 0);
    const auto dims = h.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3 || dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
      throw FormatError("dims must hold three positive counts", 0);
    }
    f.header.kind = h.value("kind", "");
    f.header.channels = h.at("channels").get<int>();
    f.header.dtype = h.at("dtype").get<std::string>();
    f.header.n_ori = h.value("n_ori", 0);
    f.header.config_hash = h.value("config_hash", "");
    const double voxel_um = h.at("voxel_um").get<double>();
    f.header.spec = DomainSpec::from_dims({dims[0], dims[1], dims[2]}, voxel_um);
    if (h.contains("size_mm")) {
      const auto s = h.at("size_mm").get<std::vector<double>>();
      if (s.size() != 3) throw FormatError("size_mm must hold three values", 0);
      f.header.spec.size_mm = {s[0], s[1], s[2]};
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid header field: ") + e.what(), 0);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("invalid header field: ") + e.what(), 0);
  }
  const std::size_t elem = dtype_size(f.header.dtype);
  if (elem == 0) throw FormatError("unknown dtype '" + f.header.dtype + "'", 0);
  if (f.header.channels < 1) throw FormatError("channels must be positive", 0);

  const std::uint64_t expected =
      static_cast<std::uint64_t>(f.header.spec.voxel_count()) * static_cast<std::uint64_t>(f.header.channels) * elem;
  const std::uint64_t available = bytes.size() - f.payload_offset;
  if (available < expected) throw FormatError("truncated payload", bytes.size());
  if (available > expected) throw FormatError("payload longer than header dims", f.payload_offset + expected);
  f.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(f.payload_offset), bytes.end());
  return f;
}

void save_field(const std::filesystem::path& path, const GrainField& field, const std::string& config_hash) {
  if (field.has_eta()) {
    write_file(path, "grain", field.spec, field.n_ori, "f64", field.n_ori, field.eta, config_hash);
  } else {
    write_file(path, "grain", field.spec, 1, "i32", field.n_ori, field.labels, config_hash);
  }
}

void save_field(const std::filesystem::path& path, const TemperatureField& field, const std::string& config_hash) {
  write_file(path, "temperature", field.spec, 1, "f32", 0, field.kelvin, config_hash);
}

void save_field(const std::filesystem::path& path, const MeltMask& mask, const std::string& config_hash) {
  std::vector<std::int32_t> flags(mask.melted.begin(), mask.melted.end());
  write_file(path, "mask", mask.spec, 1, "i32", 0, flags, config_hash);
}

GrainField load_grain_field(const std::filesystem::path& path) {
  const VgfFile f = read_vgf(path);
  if (f.header.kind != "grain") throw FormatError("expected a 'grain' field but found '" + f.header.kind + "'", 0);
  GrainField g;
  g.spec = f.header.spec;
  if (f.header.dtype == "f64") {
    g.n_ori = f.header.channels;
    g.eta = decode<double>(f);
    g.labels.assign(g.spec.voxel_count(), kLiquid);
    g.recompute_labels();
  } else if (f.header.dtype == "i32" && f.header.channels == 1) {
    g.n_ori = f.header.n_ori > 0 ? f.header.n_ori : kDefaultOrientations;
    g.labels = decode<std::int32_t>(f);
    for (std::size_t v = 0; v < g.labels.size(); ++v) {
      if (g.labels[v] != kLiquid && (g.labels[v] < 0 || g.labels[v] >= g.n_ori)) {
        throw FormatError("label out of range", f.payload_offset + v * 4);
      }
    }
  } else {
    throw FormatError("grain fields must be i32 x1 or f64 x n_ori", 0);
  }
  return g;
}

TemperatureField load_temperature_field(const std::filesystem::path& path) {
  const VgfFile f = read_vgf(path);
  expect(f, "temperature", "f32");
  if (f.header.channels != 1) throw FormatError("temperature fields have one channel", 0);
  TemperatureField t;
  t.spec = f.header.spec;
  t.kelvin = decode<float>(f);
  return t;
}

MeltMask load_melt_mask(const std::filesystem::path& path) {
  const VgfFile f = read_vgf(path);
  expect(f, "mask", "i32");
  MeltMask m(f.header.spec);
  const auto flags = decode<std::int32_t>(f);
  for (std::size_t v = 0; v < flags.size(); ++v) m.melted[v] = flags[v] != 0 ? 1 : 0;
  return m;
}

}  // namespace meltpath

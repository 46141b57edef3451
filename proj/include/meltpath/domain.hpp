#pragma once

// Voxel-grid geometry, the field types shared by every module, synthetic
// microstructure generation and volume-of-interest (VOI) windowing.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace meltpath {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  friend Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;
  double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
  double norm() const { return std::sqrt(dot(*this)); }
};

using Index3 = std::array<std::size_t, 3>;

/// Half-open voxel box [lo, hi).
struct Box {
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 0};

  bool empty() const { return lo[0] >= hi[0] || lo[1] >= hi[1] || lo[2] >= hi[2]; }
  std::size_t extent(int axis) const { return hi[axis] > lo[axis] ? hi[axis] - lo[axis] : 0; }
  std::size_t volume() const { return extent(0) * extent(1) * extent(2); }
  friend bool operator==(const Box&, const Box&) = default;
};

/// Physical extent and voxel resolution of a rectangular build domain.
struct DomainSpec {
  std::array<double, 3> size_mm{1.0, 1.0, 0.1};
  double voxel_um = 1000.0 / 464.0;
  Index3 dims{1, 1, 1};

  /// dims[k] = round(size_mm[k] * 1000 / voxel_um); throws InvalidArgument when
  /// any dimension would be empty or the voxel size is not positive.
  static DomainSpec from_size(std::array<double, 3> size_mm, double voxel_um);
  /// Domain that is exactly `dims` voxels.
  static DomainSpec from_dims(Index3 dims, double voxel_um);

  std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
  std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
    return x + dims[0] * (y + dims[1] * z);
  }
  Index3 coords(std::size_t index) const {
    return {index % dims[0], (index / dims[0]) % dims[1], index / (dims[0] * dims[1])};
  }
  double voxel_mm() const { return voxel_um * 1e-3; }
  double voxel_volume_um3() const { return voxel_um * voxel_um * voxel_um; }
  /// Voxel centre in mm.
  Vec3 center_mm(std::size_t x, std::size_t y, std::size_t z) const {
    const double h = voxel_mm();
    return {(static_cast<double>(x) + 0.5) * h, (static_cast<double>(y) + 0.5) * h,
            (static_cast<double>(z) + 0.5) * h};
  }
  /// Extent actually covered by the voxels (dims * voxel size), in mm.
  Vec3 extent_mm() const {
    const double h = voxel_mm();
    return {static_cast<double>(dims[0]) * h, static_cast<double>(dims[1]) * h,
            static_cast<double>(dims[2]) * h};
  }
  Box full_box() const { return {{0, 0, 0}, dims}; }

  friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

inline constexpr std::int32_t kLiquid = -1;
inline constexpr int kDefaultOrientations = 20;

/// Orientation labels plus (optionally) the order-parameter channels that
/// produced them. `eta` is planar: channel c of voxel v lives at c * voxels + v.
struct GrainField {
  DomainSpec spec;
  int n_ori = kDefaultOrientations;
  std::vector<std::int32_t> labels;
  std::vector<double> eta;

  GrainField() = default;
  GrainField(DomainSpec s, int orientations, std::int32_t fill = 0)
      : spec(s), n_ori(orientations), labels(s.voxel_count(), fill) {}

  bool has_eta() const { return !eta.empty(); }
  std::size_t voxel_count() const { return spec.voxel_count(); }
  double* channel(int c) { return eta.data() + static_cast<std::size_t>(c) * voxel_count(); }
  const double* channel(int c) const {
    return eta.data() + static_cast<std::size_t>(c) * voxel_count();
  }

  /// Allocates eta as the one-hot encoding of `labels` (liquid voxels get all zeros).
  void init_eta_from_labels();
  /// labels = argmax_c eta_c where the maximum is >= 0.5, kLiquid otherwise;
  /// ties go to the lowest channel.
  void recompute_labels();
  void recompute_labels(const Box& box);

  friend bool operator==(const GrainField&, const GrainField&) = default;
};

struct TemperatureField {
  DomainSpec spec;
  std::vector<float> kelvin;

  TemperatureField() = default;
  TemperatureField(DomainSpec s, float fill) : spec(s), kelvin(s.voxel_count(), fill) {}
  friend bool operator==(const TemperatureField&, const TemperatureField&) = default;
};

/// Ever-melted flags.
struct MeltMask {
  DomainSpec spec;
  std::vector<std::uint8_t> melted;

  MeltMask() = default;
  explicit MeltMask(DomainSpec s) : spec(s), melted(s.voxel_count(), 0) {}
  std::size_t count() const;
  friend bool operator==(const MeltMask&, const MeltMask&) = default;
};

struct VoiWindow {
  Index3 origin{0, 0, 0};
  Index3 dims{0, 0, 0};

  Box box() const {
    return {origin, {origin[0] + dims[0], origin[1] + dims[1], origin[2] + dims[2]}};
  }
  friend bool operator==(const VoiWindow&, const VoiWindow&) = default;
};

inline constexpr std::array<double, 3> kDefaultVoiMm{0.17, 0.17, 0.07};

/// Seed positions (mm) for a Voronoi microstructure.
std::vector<Vec3> random_seeds(const DomainSpec& spec, std::size_t n_seeds, std::uint64_t seed);

/// Index of the nearest seed for every voxel centre; equidistant seeds resolve
/// to the lowest index.
std::vector<std::int32_t> voronoi_cells(const DomainSpec& spec, const std::vector<Vec3>& seeds);

/// Nearest-seed Voronoi tessellation with seed classes assigned round-robin over
/// [0, n_ori) and then shuffled. Deterministic for a fixed seed.
GrainField generate_voronoi_microstructure(const DomainSpec& spec, std::size_t n_seeds, int n_ori,
                                           std::uint64_t seed);

/// Window of the given physical size centred on `center_mm`, shifted (never
/// shrunk) so it lies inside the domain.
VoiWindow voi_window(const DomainSpec& spec, Vec3 center_mm, std::array<double, 3> voi_dims_mm);

GrainField extract(const GrainField& field, const VoiWindow& window);
TemperatureField extract(const TemperatureField& field, const VoiWindow& window);

std::pair<GrainField, VoiWindow> extract_voi(const GrainField& field, Vec3 center_mm,
                                             std::array<double, 3> voi_dims_mm = kDefaultVoiMm);

/// Copy of `field` with the window replaced by `patch`.
GrainField write_back_voi(const GrainField& field, const VoiWindow& window, const GrainField& patch);
void write_back_voi_in_place(GrainField& field, const VoiWindow& window, const GrainField& patch);

/// Invertible voxel permutation used for data augmentation. Applied in the
/// order: cyclic shift, in-plane dihedral operation, z flip.
struct VoxelTransform {
  enum class Planar { identity, rot90, rot180, rot270, flip_x, flip_y, transpose, anti_transpose };
  Planar planar = Planar::identity;
  bool flip_z = false;
  bool half_shift_x = false;
  bool half_shift_y = false;

  std::string name() const;
  friend bool operator==(const VoxelTransform&, const VoxelTransform&) = default;
};

/// The 19 augmentation transforms, in emission order.
const std::vector<VoxelTransform>& augmentation_transforms();

GrainField apply_transform(const VoxelTransform& t, const GrainField& field);
TemperatureField apply_transform(const VoxelTransform& t, const TemperatureField& field);
GrainField apply_inverse(const VoxelTransform& t, const GrainField& field);
TemperatureField apply_inverse(const VoxelTransform& t, const TemperatureField& field);

/// One (grain, temperature) pair per augmentation transform. The patch must
/// have a square x-y cross-section.
std::vector<std::pair<GrainField, TemperatureField>> augment_voi(const GrainField& patch,
                                                                 const TemperatureField& temperature);

}  // namespace meltpath

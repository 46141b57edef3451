#include "meltpath/domain.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "meltpath/error.hpp"
#include "meltpath/rng.hpp"

namespace meltpath {

DomainSpec DomainSpec::from_size(std::array<double, 3> size_mm, double voxel_um) {
  if (!(voxel_um > 0.0)) throw InvalidArgument("voxel size must be positive");
  DomainSpec s;
  s.size_mm = size_mm;
  s.voxel_um = voxel_um;
  for (int k = 0; k < 3; ++k) {
    const double n = std::round(size_mm[k] * 1000.0 / voxel_um);
    if (!(n >= 1.0)) throw InvalidArgument("domain dimension " + std::to_string(k) + " has no voxels");
    s.dims[k] = static_cast<std::size_t>(n);
  }
  return s;
}

DomainSpec DomainSpec::from_dims(Index3 dims, double voxel_um) {
  if (!(voxel_um > 0.0)) throw InvalidArgument("voxel size must be positive");
  DomainSpec s;
  s.voxel_um = voxel_um;
  s.dims = dims;
  for (int k = 0; k < 3; ++k) {
    if (dims[k] == 0) throw InvalidArgument("domain dimension " + std::to_string(k) + " has no voxels");
    s.size_mm[k] = static_cast<double>(dims[k]) * voxel_um * 1e-3;
  }
  return s;
}

void GrainField::init_eta_from_labels() {
  const std::size_t n = voxel_count();
  eta.assign(static_cast<std::size_t>(n_ori) * n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    const std::int32_t l = labels[v];
    if (l >= 0 && l < n_ori) eta[static_cast<std::size_t>(l) * n + v] = 1.0;
  }
}

void GrainField::recompute_labels() { recompute_labels(spec.full_box()); }

void GrainField::recompute_labels(const Box& box) {
  if (!has_eta() || box.empty()) return;
  const std::size_t n = voxel_count();
  const std::size_t w = box.extent(0);
  std::vector<double> best(w);
  std::vector<std::int32_t> arg(w);
  for (std::size_t z = box.lo[2]; z < box.hi[2]; ++z) {
    for (std::size_t y = box.lo[1]; y < box.hi[1]; ++y) {
      const std::size_t row = spec.index(box.lo[0], y, z);
      std::fill(best.begin(), best.end(), -std::numeric_limits<double>::infinity());
      std::fill(arg.begin(), arg.end(), kLiquid);
      for (int c = 0; c < n_ori; ++c) {
        const double* e = eta.data() + static_cast<std::size_t>(c) * n + row;
        for (std::size_t i = 0; i < w; ++i) {
          if (e[i] > best[i]) {
            best[i] = e[i];
            arg[i] = c;
          }
        }
      }
      for (std::size_t i = 0; i < w; ++i) labels[row + i] = best[i] >= 0.5 ? arg[i] : kLiquid;
    }
  }
}

std::size_t MeltMask::count() const {
  return static_cast<std::size_t>(std::count(melted.begin(), melted.end(), std::uint8_t{1}));
}

// --- Voronoi -----------------------------------------------------------------

std::vector<Vec3> random_seeds(const DomainSpec& spec, std::size_t n_seeds, std::uint64_t seed) {
  Rng rng(stream_seed(seed, "voronoi-seeds"));
  const Vec3 ext = spec.extent_mm();
  std::vector<Vec3> seeds(n_seeds);
  for (auto& s : seeds) {
    s.x = uniform(rng, 0.0, ext.x);
    s.y = uniform(rng, 0.0, ext.y);
    s.z = uniform(rng, 0.0, ext.z);
  }
  return seeds;
}

namespace {

inline double dist2(Vec3 a, Vec3 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<std::int32_t> voronoi_cells(const DomainSpec& spec, const std::vector<Vec3>& seeds) {
  if (seeds.empty()) throw InvalidArgument("Voronoi tessellation needs at least one seed");
  const Vec3 ext = spec.extent_mm();
  const double volume = ext.x * ext.y * ext.z;
  const double cell = std::cbrt(volume / static_cast<double>(seeds.size()));
  std::array<std::size_t, 3> nb{};
  const std::array<double, 3> e{ext.x, ext.y, ext.z};
  for (int k = 0; k < 3; ++k) nb[k] = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(e[k] / cell)));

  auto bucket_of = [&](double v, int k) {
    const auto b = static_cast<long>(std::floor(v / cell));
    return static_cast<std::size_t>(std::clamp<long>(b, 0, static_cast<long>(nb[k]) - 1));
  };
  // Seeds sorted by bucket, each bucket lists indices in increasing order.
  std::vector<std::size_t> start(nb[0] * nb[1] * nb[2] + 1, 0);
  std::vector<std::size_t> bucket(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    bucket[i] = bucket_of(seeds[i].x, 0) + nb[0] * (bucket_of(seeds[i].y, 1) + nb[1] * bucket_of(seeds[i].z, 2));
    ++start[bucket[i] + 1];
  }
  std::partial_sum(start.begin(), start.end(), start.begin());
  std::vector<std::size_t> members(seeds.size());
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for (std::size_t i = 0; i < seeds.size(); ++i) members[fill[bucket[i]]++] = i;
  }
  const std::size_t max_shell = std::max({nb[0], nb[1], nb[2]});

  std::vector<std::int32_t> cells(spec.voxel_count());
  for (std::size_t z = 0; z < spec.dims[2]; ++z) {
    for (std::size_t y = 0; y < spec.dims[1]; ++y) {
      for (std::size_t x = 0; x < spec.dims[0]; ++x) {
        const Vec3 p = spec.center_mm(x, y, z);
        const long bx = static_cast<long>(bucket_of(p.x, 0));
        const long by = static_cast<long>(bucket_of(p.y, 1));
        const long bz = static_cast<long>(bucket_of(p.z, 2));
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_idx = 0;
        for (std::size_t r = 0; r <= max_shell; ++r) {
          const long rr = static_cast<long>(r);
          for (long k = bz - rr; k <= bz + rr; ++k) {
            if (k < 0 || k >= static_cast<long>(nb[2])) continue;
            for (long j = by - rr; j <= by + rr; ++j) {
              if (j < 0 || j >= static_cast<long>(nb[1])) continue;
              for (long i = bx - rr; i <= bx + rr; ++i) {
                if (i < 0 || i >= static_cast<long>(nb[0])) continue;
                const long cheb = std::max({std::labs(i - bx), std::labs(j - by), std::labs(k - bz)});
                if (cheb != rr) continue;
                const std::size_t b = static_cast<std::size_t>(i) + nb[0] * (static_cast<std::size_t>(j) + nb[1] * static_cast<std::size_t>(k));
                for (std::size_t m = start[b]; m < start[b + 1]; ++m) {
                  const std::size_t s = members[m];
                  const double d = dist2(p, seeds[s]);
                  if (d < best || (d == best && s < best_idx)) {
                    best = d;
                    best_idx = s;
                  }
                }
              }
            }
          }
          // Any seed in shell r+1 or beyond is at least r * cell away.
          const double reach = static_cast<double>(r) * cell;
          if (best < reach * reach) break;
        }
        cells[spec.index(x, y, z)] = static_cast<std::int32_t>(best_idx);
      }
    }
  }
  return cells;
}

GrainField generate_voronoi_microstructure(const DomainSpec& spec, std::size_t n_seeds, int n_ori,
                                           std::uint64_t seed) {
  if (n_seeds == 0) throw InvalidArgument("n_seeds must be at least 1");
  if (n_ori < 1) throw InvalidArgument("n_ori must be at least 1");
  const auto seeds = random_seeds(spec, n_seeds, seed);
  const auto cells = voronoi_cells(spec, seeds);

  std::vector<std::int32_t> cls(n_seeds);
  for (std::size_t i = 0; i < n_seeds; ++i) cls[i] = static_cast<std::int32_t>(i % static_cast<std::size_t>(n_ori));
  Rng rng(stream_seed(seed, "voronoi-classes"));
  for (std::size_t i = n_seeds; i > 1; --i) {
    std::swap(cls[i - 1], cls[uniform_index(rng, i)]);
  }

  GrainField field(spec, n_ori);
  for (std::size_t v = 0; v < cells.size(); ++v) field.labels[v] = cls[static_cast<std::size_t>(cells[v])];
  return field;
}

// --- VOI windows ---------------------------------------------------------------

VoiWindow voi_window(const DomainSpec& spec, Vec3 center_mm, std::array<double, 3> voi_dims_mm) {
  const Vec3 ext = spec.extent_mm();
  const std::array<double, 3> c{center_mm.x, center_mm.y, center_mm.z};
  const std::array<double, 3> e{ext.x, ext.y, ext.z};
  VoiWindow w;
  for (int k = 0; k < 3; ++k) {
    if (!(c[k] >= 0.0 && c[k] <= e[k])) throw InvalidArgument("VOI centre lies outside the domain");
    const double n = std::round(voi_dims_mm[k] * 1000.0 / spec.voxel_um);
    if (!(n >= 1.0)) throw InvalidArgument("VOI dimension has no voxels");
    const auto d = static_cast<std::size_t>(n);
    if (d > spec.dims[k]) throw InvalidArgument("VOI is larger than the domain");
    const double lo = c[k] / spec.voxel_mm() - static_cast<double>(d) / 2.0;
    const long origin = std::lround(lo);
    w.dims[k] = d;
    w.origin[k] = static_cast<std::size_t>(std::clamp<long>(origin, 0, static_cast<long>(spec.dims[k] - d)));
  }
  return w;
}

namespace {

void check_window(const DomainSpec& spec, const VoiWindow& w) {
  for (int k = 0; k < 3; ++k) {
    if (w.dims[k] == 0 || w.origin[k] + w.dims[k] > spec.dims[k]) {
      throw InvalidArgument("VOI window does not fit in the domain");
    }
  }
}

template <typename T>
void copy_box(const T* src, const DomainSpec& src_spec, T* dst, const DomainSpec& dst_spec, Index3 src_origin,
              Index3 dst_origin, Index3 extent) {
  for (std::size_t z = 0; z < extent[2]; ++z) {
    for (std::size_t y = 0; y < extent[1]; ++y) {
      const T* s = src + src_spec.index(src_origin[0], src_origin[1] + y, src_origin[2] + z);
      T* d = dst + dst_spec.index(dst_origin[0], dst_origin[1] + y, dst_origin[2] + z);
      std::copy(s, s + extent[0], d);
    }
  }
}

}  // namespace

GrainField extract(const GrainField& field, const VoiWindow& window) {
  check_window(field.spec, window);
  GrainField out(DomainSpec::from_dims(window.dims, field.spec.voxel_um), field.n_ori);
  copy_box(field.labels.data(), field.spec, out.labels.data(), out.spec, window.origin, {0, 0, 0}, window.dims);
  if (field.has_eta()) {
    out.eta.assign(static_cast<std::size_t>(field.n_ori) * out.voxel_count(), 0.0);
    for (int c = 0; c < field.n_ori; ++c) {
      copy_box(field.channel(c), field.spec, out.channel(c), out.spec, window.origin, {0, 0, 0}, window.dims);
    }
  }
  return out;
}

TemperatureField extract(const TemperatureField& field, const VoiWindow& window) {
  check_window(field.spec, window);
  TemperatureField out(DomainSpec::from_dims(window.dims, field.spec.voxel_um), 0.0f);
  copy_box(field.kelvin.data(), field.spec, out.kelvin.data(), out.spec, window.origin, {0, 0, 0}, window.dims);
  return out;
}

std::pair<GrainField, VoiWindow> extract_voi(const GrainField& field, Vec3 center_mm,
                                             std::array<double, 3> voi_dims_mm) {
  const VoiWindow w = voi_window(field.spec, center_mm, voi_dims_mm);
  return {extract(field, w), w};
}

void write_back_voi_in_place(GrainField& field, const VoiWindow& window, const GrainField& patch) {
  check_window(field.spec, window);
  if (patch.spec.dims != window.dims) throw InvalidArgument("patch dimensions differ from the window");
  if (patch.n_ori != field.n_ori) throw InvalidArgument("patch orientation count differs from the field");
  copy_box(patch.labels.data(), patch.spec, field.labels.data(), field.spec, {0, 0, 0}, window.origin, window.dims);
  if (!field.has_eta()) return;
  const std::size_t pn = patch.voxel_count();
  const std::size_t fn = field.voxel_count();
  for (int c = 0; c < field.n_ori; ++c) {
    for (std::size_t z = 0; z < window.dims[2]; ++z) {
      for (std::size_t y = 0; y < window.dims[1]; ++y) {
        for (std::size_t x = 0; x < window.dims[0]; ++x) {
          const std::size_t pv = patch.spec.index(x, y, z);
          const std::size_t fv = field.spec.index(window.origin[0] + x, window.origin[1] + y, window.origin[2] + z);
          field.eta[static_cast<std::size_t>(c) * fn + fv] =
              patch.has_eta() ? patch.eta[static_cast<std::size_t>(c) * pn + pv]
                              : (patch.labels[pv] == c ? 1.0 : 0.0);
        }
      }
    }
  }
}

GrainField write_back_voi(const GrainField& field, const VoiWindow& window, const GrainField& patch) {
  GrainField out = field;
  write_back_voi_in_place(out, window, patch);
  return out;
}

// --- augmentation ------------------------------------------------------------

std::string VoxelTransform::name() const {
  static const char* planar_names[] = {"identity", "rot90", "rot180", "rot270",
                                       "flip_x", "flip_y", "transpose", "anti_transpose"};
  std::string n;
  if (half_shift_x) n += "shift_x+";
  if (half_shift_y) n += "shift_y+";
  if (planar != Planar::identity || n.empty()) n += planar_names[static_cast<int>(planar)];
  else n.pop_back();
  if (flip_z) n += "+flip_z";
  return n;
}

const std::vector<VoxelTransform>& augmentation_transforms() {
  using P = VoxelTransform::Planar;
  static const std::vector<VoxelTransform> list = [] {
    std::vector<VoxelTransform> v;
    const P planar[] = {P::rot90, P::rot180, P::rot270, P::flip_x, P::flip_y, P::transpose, P::anti_transpose};
    for (P p : planar) v.push_back({p, false, false, false});
    v.push_back({P::identity, true, false, false});
    for (P p : planar) v.push_back({p, true, false, false});
    // The square prism has only 15 non-trivial symmetries; half-period cyclic
    // shifts complete the list to 19.
    v.push_back({P::identity, false, true, false});
    v.push_back({P::identity, false, false, true});
    v.push_back({P::identity, false, true, true});
    v.push_back({P::identity, true, true, true});
    return v;
  }();
  return list;
}

namespace {

/// Destination coordinates of source voxel (x, y, z).
Index3 forward_map(const VoxelTransform& t, const Index3& dims, Index3 p) {
  using P = VoxelTransform::Planar;
  const std::size_t n = dims[0];
  std::size_t x = p[0], y = p[1], z = p[2];
  if (t.half_shift_x) x = (x + dims[0] / 2) % dims[0];
  if (t.half_shift_y) y = (y + dims[1] / 2) % dims[1];
  std::size_t nx = x, ny = y;
  switch (t.planar) {
    case P::identity: break;
    case P::rot90: nx = n - 1 - y; ny = x; break;
    case P::rot180: nx = n - 1 - x; ny = n - 1 - y; break;
    case P::rot270: nx = y; ny = n - 1 - x; break;
    case P::flip_x: nx = n - 1 - x; break;
    case P::flip_y: ny = n - 1 - y; break;
    case P::transpose: nx = y; ny = x; break;
    case P::anti_transpose: nx = n - 1 - y; ny = n - 1 - x; break;
  }
  if (t.flip_z) z = dims[2] - 1 - z;
  return {nx, ny, z};
}

void require_square(const DomainSpec& spec, const VoxelTransform& t) {
  const bool needs_square = t.planar != VoxelTransform::Planar::identity;
  if (needs_square && spec.dims[0] != spec.dims[1]) {
    throw InvalidArgument("augmentation requires a square x-y cross-section");
  }
}

/// perm[v] = destination index of source voxel v.
std::vector<std::size_t> permutation(const VoxelTransform& t, const DomainSpec& spec) {
  require_square(spec, t);
  std::vector<std::size_t> perm(spec.voxel_count());
  for (std::size_t v = 0; v < perm.size(); ++v) {
    const Index3 d = forward_map(t, spec.dims, spec.coords(v));
    perm[v] = spec.index(d[0], d[1], d[2]);
  }
  return perm;
}

template <typename T>
void permute(const std::vector<T>& src, std::vector<T>& dst, const std::vector<std::size_t>& perm,
             bool inverse, std::size_t offset = 0) {
  for (std::size_t v = 0; v < perm.size(); ++v) {
    if (inverse) dst[offset + v] = src[offset + perm[v]];
    else dst[offset + perm[v]] = src[offset + v];
  }
}

GrainField transform_grain(const VoxelTransform& t, const GrainField& f, bool inverse) {
  const auto perm = permutation(t, f.spec);
  GrainField out = f;
  permute(f.labels, out.labels, perm, inverse);
  for (int c = 0; c < (f.has_eta() ? f.n_ori : 0); ++c) {
    permute(f.eta, out.eta, perm, inverse, static_cast<std::size_t>(c) * f.voxel_count());
  }
  return out;
}

TemperatureField transform_temperature(const VoxelTransform& t, const TemperatureField& f, bool inverse) {
  const auto perm = permutation(t, f.spec);
  TemperatureField out = f;
  permute(f.kelvin, out.kelvin, perm, inverse);
  return out;
}

}  // namespace

GrainField apply_transform(const VoxelTransform& t, const GrainField& f) { return transform_grain(t, f, false); }
TemperatureField apply_transform(const VoxelTransform& t, const TemperatureField& f) {
  return transform_temperature(t, f, false);
}
GrainField apply_inverse(const VoxelTransform& t, const GrainField& f) { return transform_grain(t, f, true); }
TemperatureField apply_inverse(const VoxelTransform& t, const TemperatureField& f) {
  return transform_temperature(t, f, true);
}

std::vector<std::pair<GrainField, TemperatureField>> augment_voi(const GrainField& patch,
                                                                 const TemperatureField& temperature) {
  if (patch.spec.dims[0] != patch.spec.dims[1]) {
    throw InvalidArgument("augmentation requires a square x-y cross-section");
  }
  if (patch.spec.dims != temperature.spec.dims) {
    throw InvalidArgument("grain and temperature patches differ in size");
  }
  std::vector<std::pair<GrainField, TemperatureField>> out;
  out.reserve(augmentation_transforms().size());
  for (const auto& t : augmentation_transforms()) {
    out.emplace_back(apply_transform(t, patch), apply_transform(t, temperature));
  }
  return out;
}

}  // namespace meltpath

#pragma once

// Shared helpers for tests: scratch directories and an independent grain
// counter used as an oracle for the BFS labeller.

#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "meltpath/domain.hpp"
#include "meltpath/reward.hpp"

namespace meltpath::test {

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("meltpath-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Union-find over face (6) or full (26) neighbourhoods; shares no code with label_grains.
inline std::size_t union_find_grain_count(const GrainField& f, const MeltMask* mask, int connectivity) {
  const std::size_t n = f.voxel_count();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  auto active = [&](std::size_t v) { return f.labels[v] != kLiquid && (!mask || mask->melted[v]); };
  const auto d = f.spec.dims;
  for (std::size_t z = 0; z < d[2]; ++z) {
    for (std::size_t y = 0; y < d[1]; ++y) {
      for (std::size_t x = 0; x < d[0]; ++x) {
        const std::size_t v = f.spec.index(x, y, z);
        if (!active(v)) continue;
        for (int dz = -1; dz <= 1; ++dz) {
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
              if (manhattan == 0 || (connectivity == 6 && manhattan != 1)) continue;
              const long nx = static_cast<long>(x) + dx, ny = static_cast<long>(y) + dy, nz = static_cast<long>(z) + dz;
              if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long>(d[0]) || ny >= static_cast<long>(d[1]) ||
                  nz >= static_cast<long>(d[2]))
                continue;
              const std::size_t w = f.spec.index(nx, ny, nz);
              if (active(w) && f.labels[w] == f.labels[v]) parent[find(w)] = find(v);
            }
          }
        }
      }
    }
  }
  std::size_t roots = 0;
  for (std::size_t v = 0; v < n; ++v) roots += active(v) && find(v) == v;
  return roots;
}

/// Table over an n x n grid (hatch 0.1 mm) whose in-bounds entries carry the
/// aspect ratio returned by ar(from, action) and a fixed grain volume.
template <typename Fn>
RewardTable synthetic_table(std::size_t n, Fn&& ar, double volume_um3 = 1000.0) {
  RewardTable t;
  t.grid = GridSpec{n, 0.1, {0.1, 0.1, 0.1}};
  t.backend = "synthetic";
  for (const auto& m : enumerate_movements(t.grid)) {
    RewardEntry e{m, {}};
    if (m.in_bounds()) {
      e.metrics.avg_aspect_ratio = ar(m.from_index, m.action);
      e.metrics.avg_grain_volume_um3 = volume_um3;
      e.metrics.melted_voxels = 1;
    }
    t.entries.push_back(e);
  }
  return t;
}

inline RewardTable uniform_table(std::size_t n) {
  return synthetic_table(n, [](std::size_t, Action) { return 1.0; });
}

}  // namespace meltpath::test

#pragma once

// Grain identification and shape statistics. A grain is a maximal connected
// set of voxels sharing a non-liquid orientation label.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meltpath/domain.hpp"

namespace meltpath {

struct Grain {
  std::int32_t orientation = 0;
  std::vector<std::size_t> voxels;  // linear indices, BFS order
  double volume_um3 = 0.0;
  std::array<double, 3> axes_um{};  // a >= b >= c
  double aspect_ratio = 0.0;
};

/// Connected components of equal label. With a mask, only masked voxels take
/// part. `connectivity` is 6 (faces) or 26 (faces, edges, corners).
std::vector<Grain> label_grains(const GrainField& field, const MeltMask* mask = nullptr, int connectivity = 6);

/// Equivalent-ellipsoid semi-axes (um), sorted descending. Voxel-centre
/// covariance plus dx^2/12 per axis, a_i = sqrt(5 lambda_i).
std::array<double, 3> equivalent_ellipsoid(std::span<const std::size_t> voxels, const DomainSpec& spec);
/// 2a / (b + c).
double aspect_ratio(const std::array<double, 3>& axes);

struct Histogram {
  std::vector<double> edges;  // bins [edges[i], edges[i+1]); the last edge may be +inf
  std::vector<std::size_t> counts;
  std::size_t outside = 0;    // values below the first or at/after the last edge
};

Histogram make_histogram(std::span<const double> values, std::span<const double> edges);

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline const std::vector<double> kDefaultVolumeEdges{0, 250, 500, 1000, 2000, 4000, 8000, 16000, 32000, 64000, kInf};
inline const std::vector<double> kDefaultAspectEdges{0, 1.0, 1.25, 1.5, 1.75, 2.0, 2.25, 2.5, 3.0, 4.0, kInf};
inline constexpr double kDefaultMinVolumeUm3 = 500.0;

struct MorphologyStats {
  std::size_t grain_count = 0;
  std::size_t aspect_count = 0;                  // grains passing the volume filter
  std::optional<double> mean_volume_um3;         // over all grains
  std::optional<double> mean_aspect_ratio;       // over grains >= min volume
  Histogram volume_histogram;                    // all grains
  Histogram aspect_histogram;                    // filtered grains
};

MorphologyStats stats(std::span<const Grain> grains, double min_volume_um3 = kDefaultMinVolumeUm3,
                      std::span<const double> volume_edges = kDefaultVolumeEdges,
                      std::span<const double> aspect_edges = kDefaultAspectEdges);

struct Comparison {
  double rmse = 0.0;
  double nrmse = 0.0;
};

/// RMSE of a against the reference b, normalised by the range of b. Throws
/// InvalidArgument on empty or unequal series and UndefinedNormalization when
/// b has zero range.
Comparison compare(std::span<const double> a, std::span<const double> b);

/// Both series sorted ascending and cut to a common length by picking evenly
/// spaced ranks from the longer one.
std::pair<std::vector<double>, std::vector<double>> rank_matched(std::span<const double> a, std::span<const double> b);

/// `comment` lines are written first, prefixed by "# ".
void write_stats_csv(const std::filesystem::path& path, const MorphologyStats& s, double min_volume_um3,
                     const std::vector<std::string>& comment = {});
void write_histogram_csv(const std::filesystem::path& path, const Histogram& h,
                         const std::vector<std::string>& comment = {});

}  // namespace meltpath

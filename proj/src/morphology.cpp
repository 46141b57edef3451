#include "meltpath/morphology.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>

#include "meltpath/error.hpp"

namespace meltpath {

std::vector<Grain> label_grains(const GrainField& field, const MeltMask* mask, int connectivity) {
  if (connectivity != 6 && connectivity != 26) throw InvalidArgument("connectivity must be 6 or 26");
  const DomainSpec& spec = field.spec;
  if (mask && !(mask->spec == spec)) throw InvalidArgument("melt mask and grain field differ in domain");
  const std::size_t n = spec.voxel_count();
  if (field.labels.size() != n) throw InvalidArgument("grain labels do not cover the domain");

  std::vector<std::array<long, 3>> offsets;
  for (long dz = -1; dz <= 1; ++dz) {
    for (long dy = -1; dy <= 1; ++dy) {
      for (long dx = -1; dx <= 1; ++dx) {
        const long manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0 || (connectivity == 6 && manhattan != 1)) continue;
        offsets.push_back({dx, dy, dz});
      }
    }
  }
  auto inside = [&](std::size_t v) { return !mask || mask->melted[v]; };

  std::vector<std::uint8_t> seen(n, 0);
  std::vector<Grain> grains;
  std::vector<std::size_t> queue;
  const long nx = static_cast<long>(spec.dims[0]), ny = static_cast<long>(spec.dims[1]),
             nz = static_cast<long>(spec.dims[2]);
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start] || field.labels[start] == kLiquid || !inside(start)) continue;
    const std::int32_t label = field.labels[start];
    queue.assign(1, start);
    seen[start] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Index3 c = spec.coords(queue[head]);
      for (const auto& o : offsets) {
        const long x = static_cast<long>(c[0]) + o[0], y = static_cast<long>(c[1]) + o[1],
                   z = static_cast<long>(c[2]) + o[2];
        if (x < 0 || y < 0 || z < 0 || x >= nx || y >= ny || z >= nz) continue;
        const std::size_t w = spec.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                         static_cast<std::size_t>(z));
        if (seen[w] || field.labels[w] != label || !inside(w)) continue;
        seen[w] = 1;
        queue.push_back(w);
      }
    }
    Grain g;
    g.orientation = label;
    g.voxels = queue;
    g.volume_um3 = static_cast<double>(queue.size()) * spec.voxel_volume_um3();
    g.axes_um = equivalent_ellipsoid(g.voxels, spec);
    g.aspect_ratio = aspect_ratio(g.axes_um);
    grains.push_back(std::move(g));
  }
  return grains;
}

std::array<double, 3> equivalent_ellipsoid(std::span<const std::size_t> voxels, const DomainSpec& spec) {
  if (voxels.empty()) throw InvalidArgument("empty grain");
  const double h = spec.voxel_um;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t v : voxels) {
    const Index3 c = spec.coords(v);
    mean += Eigen::Vector3d(static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2]));
  }
  mean /= static_cast<double>(voxels.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t v : voxels) {
    const Index3 c = spec.coords(v);
    const Eigen::Vector3d d =
        Eigen::Vector3d(static_cast<double>(c[0]), static_cast<double>(c[1]), static_cast<double>(c[2])) - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(voxels.size());
  cov += Eigen::Matrix3d::Identity() / 12.0;
  cov *= h * h;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov, Eigen::EigenvaluesOnly);
  std::array<double, 3> axes{};
  for (int i = 0; i < 3; ++i) axes[static_cast<std::size_t>(i)] = std::sqrt(5.0 * std::max(0.0, eig.eigenvalues()[i]));
  std::sort(axes.begin(), axes.end(), std::greater<>());
  return axes;
}

double aspect_ratio(const std::array<double, 3>& axes) { return 2.0 * axes[0] / (axes[1] + axes[2]); }

Histogram make_histogram(std::span<const double> values, std::span<const double> edges) {
  if (edges.size() < 2) throw InvalidArgument("histogram needs at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) throw InvalidArgument("histogram edges must increase");
  }
  Histogram h;
  h.edges.assign(edges.begin(), edges.end());
  h.counts.assign(edges.size() - 1, 0);
  for (double v : values) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    if (it == edges.begin() || it == edges.end()) {
      ++h.outside;
      continue;
    }
    ++h.counts[static_cast<std::size_t>(it - edges.begin()) - 1];
  }
  return h;
}

MorphologyStats stats(std::span<const Grain> grains, double min_volume_um3, std::span<const double> volume_edges,
                      std::span<const double> aspect_edges) {
  MorphologyStats s;
  s.grain_count = grains.size();
  std::vector<double> volumes, aspects;
  double vsum = 0.0, asum = 0.0;
  for (const auto& g : grains) {
    volumes.push_back(g.volume_um3);
    vsum += g.volume_um3;
    if (g.volume_um3 >= min_volume_um3) {
      aspects.push_back(g.aspect_ratio);
      asum += g.aspect_ratio;
    }
  }
  s.aspect_count = aspects.size();
  if (!volumes.empty()) s.mean_volume_um3 = vsum / static_cast<double>(volumes.size());
  if (!aspects.empty()) s.mean_aspect_ratio = asum / static_cast<double>(aspects.size());
  s.volume_histogram = make_histogram(volumes, volume_edges);
  s.aspect_histogram = make_histogram(aspects, aspect_edges);
  return s;
}

Comparison compare(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || a.size() != b.size()) throw InvalidArgument("series must be non-empty and of equal length");
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sq += (a[i] - b[i]) * (a[i] - b[i]);
  Comparison c;
  c.rmse = std::sqrt(sq / static_cast<double>(a.size()));
  const auto [lo, hi] = std::minmax_element(b.begin(), b.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) throw UndefinedNormalization("reference series has zero range");
  c.nrmse = c.rmse / range;
  return c;
}

std::pair<std::vector<double>, std::vector<double>> rank_matched(std::span<const double> a, std::span<const double> b) {
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  auto thin = [](std::vector<double>& v, std::size_t m) {
    if (v.size() <= m) return;
    std::vector<double> out(m);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = m == 1 ? 0
                                   : static_cast<std::size_t>(std::llround(static_cast<double>(i) *
                                                                           static_cast<double>(v.size() - 1) /
                                                                           static_cast<double>(m - 1)));
      out[i] = v[k];
    }
    v = std::move(out);
  };
  const std::size_t m = std::min(sa.size(), sb.size());
  thin(sa, m);
  thin(sb, m);
  return {std::move(sa), std::move(sb)};
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

}  // namespace

void write_stats_csv(const std::filesystem::path& path, const MorphologyStats& s, double min_volume_um3,
                     const std::vector<std::string>& comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  for (const auto& c : comment) out << "# " << c << '\n';
  out << "grain_count,aspect_count,mean_volume_um3,mean_aspect_ratio,min_volume_um3\n";
  out << s.grain_count << ',' << s.aspect_count << ',' << opt_num(s.mean_volume_um3) << ','
      << opt_num(s.mean_aspect_ratio) << ',' << num(min_volume_um3) << '\n';
}

void write_histogram_csv(const std::filesystem::path& path, const Histogram& h,
                         const std::vector<std::string>& comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  for (const auto& c : comment) out << "# " << c << '\n';
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    out << num(h.edges[i]) << ',' << num(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
  }
}

}  // namespace meltpath

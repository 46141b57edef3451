#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meltpath/error.hpp"
#include "meltpath/morphology.hpp"
#include "meltpath/rng.hpp"
#include "support.hpp"

using namespace meltpath;

namespace {

Grain grain_of(double volume, double ar) {
  Grain g;
  g.volume_um3 = volume;
  g.aspect_ratio = ar;
  g.voxels.resize(1);
  return g;
}

GrainField random_grid(Rng& rng, int n_ori) {
  const Index3 dims{2 + uniform_index(rng, 15), 2 + uniform_index(rng, 15), 1 + uniform_index(rng, 10)};
  GrainField f(DomainSpec::from_dims(dims, 1.0), n_ori);
  for (auto& l : f.labels) {
    const auto r = uniform_index(rng, static_cast<std::uint64_t>(n_ori) + 1);
    l = r == static_cast<std::uint64_t>(n_ori) ? kLiquid : static_cast<std::int32_t>(r);
  }
  return f;
}

}  // namespace

TEST_CASE("grain counts match a union-find oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto f = random_grid(rng, 2 + static_cast<int>(trial % 3));
    MeltMask mask(f.spec);
    for (auto& m : mask.melted) m = uniform01(rng) < 0.7;
    for (int conn : {6, 26}) {
      CHECK(label_grains(f, nullptr, conn).size() == test::union_find_grain_count(f, nullptr, conn));
      CHECK(label_grains(f, &mask, conn).size() == test::union_find_grain_count(f, &mask, conn));
    }
  }
}

TEST_CASE("every voxel lands in exactly one grain") {
  Rng rng(12);
  const auto f = random_grid(rng, 3);
  std::vector<int> seen(f.voxel_count(), 0);
  for (const auto& g : label_grains(f))
    for (auto v : g.voxels) {
      ++seen[v];
      CHECK(f.labels[v] == g.orientation);
    }
  for (std::size_t v = 0; v < f.voxel_count(); ++v) CHECK(seen[v] == (f.labels[v] == kLiquid ? 0 : 1));
}

TEST_CASE("disjoint blobs and checkerboards") {
  GrainField f(DomainSpec::from_dims({5, 1, 1}, 1.0), 2, 0);
  f.labels[2] = 1;
  CHECK(label_grains(f).size() == 3);

  GrainField c(DomainSpec::from_dims({4, 4, 4}, 1.0), 2);
  for (std::size_t v = 0; v < c.voxel_count(); ++v) {
    const auto p = c.spec.coords(v);
    c.labels[v] = static_cast<std::int32_t>((p[0] + p[1] + p[2]) % 2);
  }
  CHECK(label_grains(c, nullptr, 6).size() == 64);
  CHECK(label_grains(c, nullptr, 26).size() == 2);
}

TEST_CASE("full-domain grain volumes sum to the domain volume") {
  const auto f = generate_voronoi_microstructure(DomainSpec::from_dims({20, 15, 10}, 2.5), 25, 20, 6);
  double total = 0.0;
  for (const auto& g : label_grains(f)) total += g.volume_um3;
  CHECK(total == doctest::Approx(f.spec.voxel_count() * f.spec.voxel_volume_um3()));
}

TEST_CASE("equivalent ellipsoid of a box and a single voxel") {
  const auto spec = DomainSpec::from_dims({20, 10, 10}, 1.0);
  std::vector<std::size_t> all(spec.voxel_count());
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto axes = equivalent_ellipsoid(all, spec);
  CHECK(aspect_ratio(axes) == doctest::Approx(2.0).epsilon(1e-12));
  // Continuum box variance L^2 / 12 gives a = sqrt(5/12) L.
  CHECK(axes[0] == doctest::Approx(std::sqrt(5.0 / 12.0) * 20.0).epsilon(1e-12));

  const std::vector<std::size_t> one{37};
  const auto a1 = equivalent_ellipsoid(one, spec);
  CHECK(a1[0] == a1[1]);
  CHECK(a1[1] == a1[2]);
  CHECK(aspect_ratio(a1) == 1.0);
}

TEST_CASE("ellipsoid axes are permutation invariant and scale with voxel size") {
  Rng rng(8);
  const auto a = DomainSpec::from_dims({6, 7, 8}, 1.0);
  const auto permuted = DomainSpec::from_dims({8, 6, 7}, 1.0);
  std::vector<std::size_t> vox, pvox;
  for (std::size_t v = 0; v < a.voxel_count(); ++v) {
    if (uniform01(rng) < 0.3) {
      const auto c = a.coords(v);
      vox.push_back(v);
      pvox.push_back(permuted.index(c[2], c[0], c[1]));
    }
  }
  const auto x = equivalent_ellipsoid(vox, a), y = equivalent_ellipsoid(pvox, permuted);
  const auto scaled = equivalent_ellipsoid(vox, DomainSpec::from_dims({6, 7, 8}, 2.5));
  for (int k = 0; k < 3; ++k) {
    CHECK(x[k] == doctest::Approx(y[k]).epsilon(1e-12));
    CHECK(scaled[k] == doctest::Approx(2.5 * x[k]).epsilon(1e-12));
  }
  CHECK(x[0] >= x[1]);
  CHECK(x[1] >= x[2]);
}

TEST_CASE("stats means and the volume filter") {
  const std::vector<Grain> one{grain_of(1000, 2.0)};
  const auto s1 = stats(one);
  CHECK(*s1.mean_volume_um3 == 1000.0);
  CHECK(*s1.mean_aspect_ratio == 2.0);

  const std::vector<Grain> two{grain_of(400, 3.0), grain_of(600, 1.5)};
  const auto s2 = stats(two, 500.0);
  CHECK(*s2.mean_volume_um3 == 500.0);
  CHECK(*s2.mean_aspect_ratio == 1.5);
  CHECK(s2.aspect_count == 1);

  const auto empty = stats(std::vector<Grain>{});
  CHECK(empty.grain_count == 0);
  CHECK(!empty.mean_volume_um3);
  for (auto c : empty.volume_histogram.counts) CHECK(c == 0);
  for (auto c : empty.aspect_histogram.counts) CHECK(c == 0);
}

TEST_CASE("stats are permutation invariant") {
  Rng rng(3);
  std::vector<Grain> g;
  for (int i = 0; i < 30; ++i) g.push_back(grain_of(uniform(rng, 100, 3000), uniform(rng, 1, 3)));
  const auto a = stats(g);
  std::reverse(g.begin(), g.end());
  const auto b = stats(g);
  CHECK(*a.mean_volume_um3 == doctest::Approx(*b.mean_volume_um3).epsilon(1e-14));
  CHECK(*a.mean_aspect_ratio == doctest::Approx(*b.mean_aspect_ratio).epsilon(1e-14));
  CHECK(a.volume_histogram.counts == b.volume_histogram.counts);
}

TEST_CASE("histogram binning") {
  const std::vector<double> v{0.5, 1.0, 1.5, 2.0, 9.0, -1.0};
  const std::vector<double> e{0.0, 1.0, 2.0, 3.0};
  const auto h = make_histogram(v, e);
  CHECK(h.counts == std::vector<std::size_t>{1, 2, 1});
  CHECK(h.outside == 2);
}

TEST_CASE("rmse and nrmse") {
  const std::vector<double> a{1, 2, 3}, b{1, 2, 5};
  const auto c = compare(a, b);
  CHECK(c.rmse == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-12));
  CHECK(c.nrmse == doctest::Approx(std::sqrt(4.0 / 3.0) / 4.0).epsilon(1e-12));
  const auto same = compare(b, b);
  CHECK(same.rmse == 0.0);
  CHECK(same.nrmse == 0.0);
  const std::vector<double> x{2, 4}, zero{0, 0};
  CHECK_THROWS_AS(compare(x, zero), UndefinedNormalization);
  CHECK_THROWS_AS(compare(a, x), InvalidArgument);
  CHECK_THROWS_AS(compare(std::vector<double>{}, std::vector<double>{}), InvalidArgument);
}

TEST_CASE("rank matching sorts and thins the longer series") {
  const std::vector<double> a{5, 1, 3}, b{10, 40, 20, 30, 50};
  const auto [x, y] = rank_matched(a, b);
  CHECK(x == std::vector<double>{1, 3, 5});
  REQUIRE(y.size() == 3);
  CHECK(std::is_sorted(y.begin(), y.end()));
  CHECK(y.front() == 10);
  CHECK(y.back() == 50);
}

TEST_CASE("stats and histogram CSVs") {
  test::ScratchDir dir("morph");
  const std::vector<Grain> two{grain_of(400, 3.0), grain_of(600, 1.5)};
  const auto s = stats(two);
  write_histogram_csv(dir / "h.csv", s.volume_histogram, {"config_hash=abc"});
  const auto text = test::slurp(dir / "h.csv");
  CHECK(text.rfind("# config_hash=abc\nbin_lo,bin_hi,count\n", 0) == 0);
  write_stats_csv(dir / "s.csv", s, 500.0);
  CHECK(test::slurp(dir / "s.csv").find("grain_count") != std::string::npos);
}

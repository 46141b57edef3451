#include <doctest.h>

#include <algorithm>
#include <map>

#include "meltpath/domain.hpp"
#include "meltpath/error.hpp"
#include "meltpath/morphology.hpp"
#include "meltpath/rng.hpp"
#include "support.hpp"

using namespace meltpath;

TEST_CASE("domain dims follow the rounding rule") {
  const auto s = DomainSpec::from_size({1.0, 0.3, 0.1}, 1000.0 / 464.0);
  CHECK(s.dims == Index3{464, 139, 46});
  for (int k = 0; k < 3; ++k) CHECK(std::abs(s.dims[k] * s.voxel_um - s.size_mm[k] * 1000.0) <= s.voxel_um);
  CHECK_THROWS_AS(DomainSpec::from_size({1.0, 1.0, 0.0001}, 5.0), InvalidArgument);
  CHECK_THROWS_AS(DomainSpec::from_size({1.0, 1.0, 1.0}, 0.0), InvalidArgument);
}

TEST_CASE("voronoi labels match a brute-force nearest-seed scan") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto spec = DomainSpec::from_dims({32, 24, 16}, 2.0);
    const auto seeds = random_seeds(spec, 40, seed);
    const auto cells = voronoi_cells(spec, seeds);
    std::size_t mismatches = 0;
    for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
      const auto c = spec.coords(v);
      const Vec3 p = spec.center_mm(c[0], c[1], c[2]);
      std::size_t best = 0;
      double best_d = (p - seeds[0]).dot(p - seeds[0]);
      for (std::size_t i = 1; i < seeds.size(); ++i) {
        const double d = (p - seeds[i]).dot(p - seeds[i]);
        if (d < best_d) best = i, best_d = d;
      }
      mismatches += static_cast<std::size_t>(cells[v]) != best;
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("voronoi microstructure is deterministic and labels lie in range") {
  const auto spec = DomainSpec::from_dims({20, 20, 10}, 5.0);
  const auto a = generate_voronoi_microstructure(spec, 100, 20, 9);
  const auto b = generate_voronoi_microstructure(spec, 100, 20, 9);
  CHECK(a.labels == b.labels);
  CHECK(std::all_of(a.labels.begin(), a.labels.end(), [](auto l) { return l >= 0 && l < 20; }));
  const auto c = generate_voronoi_microstructure(spec, 100, 20, 10);
  CHECK(a.labels != c.labels);
}

TEST_CASE("one seed fills the domain with one grain") {
  const auto spec = DomainSpec::from_dims({10, 8, 6}, 5.0);
  const auto f = generate_voronoi_microstructure(spec, 1, 20, 3);
  CHECK(label_grains(f).size() == 1);
  CHECK_THROWS_AS(generate_voronoi_microstructure(spec, 0, 20, 3), InvalidArgument);
  CHECK_THROWS_AS(generate_voronoi_microstructure(spec, 5, 0, 3), InvalidArgument);
}

TEST_CASE("default VOI at the default voxel size is 79 x 79 x 32") {
  const auto spec = DomainSpec::from_size({1.0, 0.3, 0.1}, 1000.0 / 464.0);
  const auto w = voi_window(spec, {0.5, 0.15, 0.05}, kDefaultVoiMm);
  CHECK(w.dims == Index3{79, 79, 32});
}

TEST_CASE("VOI windows are clamped by shifting, never shrinking") {
  const auto spec = DomainSpec::from_dims({40, 30, 20}, 5.0);
  const auto centre = voi_window(spec, {0.1, 0.075, 0.05}, {0.2, 0.15, 0.1});
  CHECK(centre.origin == Index3{0, 0, 0});
  CHECK(centre.dims == spec.dims);
  const auto corner = voi_window(spec, {0.0, 0.0, 0.0}, {0.05, 0.05, 0.05});
  CHECK(corner.origin == Index3{0, 0, 0});
  CHECK(corner.dims == Index3{10, 10, 10});
  const auto far = voi_window(spec, {0.2, 0.15, 0.1}, {0.05, 0.05, 0.05});
  CHECK(far.origin == Index3{30, 20, 10});
  CHECK(far.dims == Index3{10, 10, 10});
  CHECK_THROWS_AS(voi_window(spec, {0.1, 0.1, 0.05}, {0.5, 0.05, 0.05}), InvalidArgument);
}

TEST_CASE("full-domain VOI is an identity copy and write-back roundtrips") {
  const auto spec = DomainSpec::from_dims({24, 20, 12}, 5.0);
  const auto f = generate_voronoi_microstructure(spec, 30, 20, 4);
  const auto [all, wall] = extract_voi(f, {0.06, 0.05, 0.03}, {0.12, 0.1, 0.06});
  CHECK(all.labels == f.labels);

  const auto [patch, w] = extract_voi(f, {0.03, 0.04, 0.02}, {0.05, 0.05, 0.04});
  CHECK(write_back_voi(f, w, patch) == f);

  GrainField three(patch.spec, patch.n_ori, 3);
  const auto g = write_back_voi(f, w, three);
  std::size_t inside = 0, changed_outside = 0;
  const Box b = w.box();
  for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
    const auto c = spec.coords(v);
    const bool in = c[0] >= b.lo[0] && c[0] < b.hi[0] && c[1] >= b.lo[1] && c[1] < b.hi[1] && c[2] >= b.lo[2] &&
                    c[2] < b.hi[2];
    if (in) inside += g.labels[v] == 3;
    else changed_outside += g.labels[v] != f.labels[v];
  }
  CHECK(inside == b.volume());
  CHECK(changed_outside == 0);

  GrainField wrong(DomainSpec::from_dims({2, 2, 2}, 5.0), 20, 0);
  CHECK_THROWS_AS(write_back_voi(f, w, wrong), InvalidArgument);
}

TEST_CASE("write-back of disjoint windows commutes") {
  const auto spec = DomainSpec::from_dims({30, 20, 10}, 5.0);
  const auto f = generate_voronoi_microstructure(spec, 20, 20, 5);
  const VoiWindow a{{0, 0, 0}, {10, 10, 5}}, b{{15, 5, 3}, {10, 10, 5}};
  GrainField pa(DomainSpec::from_dims(a.dims, 5.0), 20, 7), pb(DomainSpec::from_dims(b.dims, 5.0), 20, 11);
  CHECK(write_back_voi(write_back_voi(f, a, pa), b, pb) == write_back_voi(write_back_voi(f, b, pb), a, pa));
}

namespace {

std::pair<GrainField, TemperatureField> asymmetric_patch() {
  const auto spec = DomainSpec::from_dims({6, 6, 4}, 5.0);
  GrainField g(spec, 20);
  TemperatureField t(spec, 0.0f);
  Rng rng(17);
  for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
    g.labels[v] = static_cast<std::int32_t>(uniform_index(rng, 20));
    t.kelvin[v] = static_cast<float>(300 + v);
  }
  return {g, t};
}

std::map<std::int32_t, std::size_t> histogram(const GrainField& g) {
  std::map<std::int32_t, std::size_t> h;
  for (auto l : g.labels) ++h[l];
  return h;
}

}  // namespace

TEST_CASE("augmentation emits 19 distinct invertible variants") {
  const auto [g, t] = asymmetric_patch();
  const auto out = augment_voi(g, t);
  REQUIRE(out.size() == 19);
  const auto& list = augmentation_transforms();
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK_MESSAGE(!(out[i].first == g), list[i].name());
    CHECK(!(out[i].second == t));
    for (std::size_t j = 0; j < i; ++j) CHECK(!(out[i].second == out[j].second));
    CHECK(apply_inverse(list[i], out[i].first) == g);
    CHECK(apply_inverse(list[i], out[i].second) == t);
    CHECK(histogram(out[i].first) == histogram(g));
  }
}

TEST_CASE("augmentation leaves a constant patch unchanged") {
  const auto spec = DomainSpec::from_dims({8, 8, 4}, 5.0);
  GrainField g(spec, 20, 5);
  TemperatureField t(spec, 1000.0f);
  for (const auto& [a, b] : augment_voi(g, t)) {
    CHECK(a == g);
    CHECK(b == t);
  }
}

TEST_CASE("augmentation requires a square cross-section") {
  const auto spec = DomainSpec::from_dims({6, 5, 4}, 5.0);
  CHECK_THROWS_AS(augment_voi(GrainField(spec, 20), TemperatureField(spec, 0.0f)), InvalidArgument);
}

TEST_CASE("labels follow the order parameters") {
  const auto spec = DomainSpec::from_dims({3, 1, 1}, 5.0);
  GrainField g(spec, 3);
  g.eta.assign(9, 0.0);
  g.channel(1)[0] = 0.9;
  g.channel(0)[1] = 0.6;
  g.channel(2)[1] = 0.6;  // tie goes to the lower channel
  g.channel(2)[2] = 0.4;
  g.recompute_labels();
  CHECK(g.labels == std::vector<std::int32_t>{1, 0, kLiquid});
}

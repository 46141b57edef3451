#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "meltpath/error.hpp"
#include "meltpath/thermal.hpp"

using namespace meltpath;

namespace {

MaterialThermal material(double clamp_um = 1.0) {
  MaterialThermal m;
  m.clamp_radius_um = clamp_um;
  return m;
}

const Vec3 kX{1.0, 0.0, 0.0};

}  // namespace

TEST_CASE("rosenthal value directly behind the source") {
  // Behind the source xi = -R, so the exponential is exactly one.
  const LaserParams laser{25.0, 0.5};
  const double t = rosenthal_point({0.45, 0.5, 0.1}, {0.5, 0.5, 0.1}, kX, laser, material());
  const double expected = 25.0 / (2.0 * std::numbers::pi * 30.0 * 5e-5);
  CHECK(t - 293.0 == doctest::Approx(expected).epsilon(1e-12));
  CHECK(t - 293.0 == doctest::Approx(2652.6).epsilon(1e-4));
}

TEST_CASE("rosenthal far field, mirror symmetry and clamping") {
  const LaserParams laser;
  const auto mat = material(2.0);
  const Vec3 src{0.5, 0.5, 0.1};
  CHECK(rosenthal_point({50.0, 50.0, 0.1}, src, kX, laser, mat) == doctest::Approx(293.0).epsilon(1e-6));
  CHECK(rosenthal_point({0.47, 0.52, 0.08}, src, kX, laser, mat) ==
        doctest::Approx(rosenthal_point({0.47, 0.48, 0.08}, src, kX, laser, mat)).epsilon(1e-12));
  const double at_source = rosenthal_point(src, src, kX, laser, mat);
  CHECK(std::isfinite(at_source));
  // Inside the clamp radius only the along-track offset matters.
  CHECK(at_source == rosenthal_point({0.5, 0.5005, 0.1}, src, kX, laser, mat));
  CHECK(at_source == rosenthal_point({0.5, 0.5, 0.099}, src, kX, laser, mat));
}

TEST_CASE("temperature falls with distance along any ray") {
  const LaserParams laser;
  const auto mat = material(0.5);
  const Vec3 src{0.5, 0.5, 0.1};
  for (double angle : {0.0, 0.7, 1.9, 3.14159, 4.4}) {
    const Vec3 dir{std::cos(angle), std::sin(angle) * 0.8, -std::abs(std::sin(angle)) * 0.6};
    double prev = INFINITY;
    for (double r = 0.001; r < 0.3; r += 0.001) {
      const double t = rosenthal_point(src + r * dir, src, kX, laser, mat);
      CHECK(t < prev);
      prev = t;
    }
  }
}

TEST_CASE("at equal distance the point behind the source is hottest") {
  const LaserParams laser;
  const auto mat = material(0.5);
  const Vec3 src{0.5, 0.5, 0.1};
  const double r = 0.03;
  const double behind = rosenthal_point(src + r * Vec3{-1, 0, 0}, src, kX, laser, mat);
  for (double a = 0.1; a < 6.2; a += 0.3) {
    CHECK(rosenthal_point(src + r * Vec3{-std::cos(a), std::sin(a), 0}, src, kX, laser, mat) <= behind);
  }
}

TEST_CASE("field at time puts the hottest voxel at the source") {
  const auto spec = DomainSpec::from_dims({40, 20, 10}, 5.0);
  ScanPath path;
  path.waypoints = {{0.0525, 0.0525, 0.05}, {0.15, 0.0525, 0.05}};
  const LaserParams laser;
  const auto mat = MaterialThermal{}.resolved(spec);
  const auto f = field_at_time(path, 0.0, spec, laser, mat);
  const auto hottest = std::max_element(f.kelvin.begin(), f.kelvin.end()) - f.kelvin.begin();
  CHECK(spec.coords(hottest) == Index3{10, 10, 9});
  CHECK(f == field_at_time(path, 0.0, spec, laser, mat));
  CHECK(f == field_at_time(path, 0.0, spec, laser, mat, 3));
  CHECK_THROWS_AS(field_at_time(path, path.duration_s() * 1.01, spec, laser, mat), InvalidArgument);
  CHECK_THROWS_AS(field_at_time(path, -1e-9, spec, laser, mat), InvalidArgument);

  // Behind the source along the scan line temperatures fall monotonically.
  const auto mid = field_at_time(path, path.duration_s() / 2, spec, laser, mat);
  const auto s = path.at(path.duration_s() / 2);
  const auto x0 = static_cast<std::size_t>(s.position.x / spec.voxel_mm());
  for (std::size_t x = x0; x > 0; --x) {
    CHECK(mid.kelvin[spec.index(x - 1, 10, 9)] <= mid.kelvin[spec.index(x, 10, 9)]);
  }
}

TEST_CASE("box evaluation agrees with the full field") {
  const auto spec = DomainSpec::from_dims({30, 20, 10}, 5.0);
  const auto mat = MaterialThermal{}.resolved(spec);
  const Vec3 src{0.07, 0.05, 0.05};
  const auto full = evaluate_field(spec, src, kX, {}, mat);
  const Box box = source_box(spec, src, kX, mat.melt_K, {}, mat);
  REQUIRE(!box.empty());
  std::vector<double> part(box.volume());
  evaluate_box(spec, box, src, kX, {}, mat, part.data());
  std::size_t i = 0;
  for (std::size_t z = box.lo[2]; z < box.hi[2]; ++z)
    for (std::size_t y = box.lo[1]; y < box.hi[1]; ++y)
      for (std::size_t x = box.lo[0]; x < box.hi[0]; ++x, ++i)
        CHECK(static_cast<float>(part[i]) == full.kelvin[spec.index(x, y, z)]);
  // Nothing outside the box reaches the threshold.
  for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
    const auto c = spec.coords(v);
    const bool in = c[0] >= box.lo[0] && c[0] < box.hi[0] && c[1] >= box.lo[1] && c[1] < box.hi[1] &&
                    c[2] >= box.lo[2] && c[2] < box.hi[2];
    if (!in) CHECK(full.kelvin[v] < mat.melt_K);
  }
}

TEST_CASE("melt accumulation is monotone and idempotent") {
  const auto spec = DomainSpec::from_dims({30, 20, 10}, 5.0);
  const auto mat = MaterialThermal{}.resolved(spec);
  MeltMask mask(spec);
  accumulate_melt(mask, TemperatureField(spec, 293.0f), mat);
  CHECK(mask.count() == 0);

  const auto hot = evaluate_field(spec, {0.05, 0.05, 0.05}, kX, {}, mat);
  accumulate_melt(mask, hot, mat);
  const auto once = mask;
  CHECK(once.count() > 0);
  accumulate_melt(mask, hot, mat);
  CHECK(mask == once);

  // A second pass elsewhere only adds voxels.
  accumulate_melt(mask, evaluate_field(spec, {0.1, 0.05, 0.05}, kX, {}, mat), mat);
  for (std::size_t v = 0; v < spec.voxel_count(); ++v) CHECK(mask.melted[v] >= once.melted[v]);

  MeltMask other(DomainSpec::from_dims({3, 3, 3}, 5.0));
  CHECK_THROWS_AS(accumulate_melt(other, hot, mat), InvalidArgument);
}

TEST_CASE("two-pass serpentine melt covers each single pass") {
  const auto spec = DomainSpec::from_dims({40, 30, 10}, 5.0);
  const auto mat = MaterialThermal{}.resolved(spec);
  const LaserParams laser;
  auto pass_mask = [&](const ScanPath& p) {
    MeltMask m(spec);
    const double d = p.duration_s();
    for (int i = 0; i <= 40; ++i) accumulate_melt(m, field_at_time(p, d * i / 40.0, spec, laser, mat), mat);
    return m;
  };
  ScanPath a, b;
  a.waypoints = {{0.05, 0.03, 0.05}, {0.05, 0.12, 0.05}};
  b.waypoints = {{0.1, 0.12, 0.05}, {0.1, 0.03, 0.05}};
  const auto ma = pass_mask(a), mb = pass_mask(b);
  MeltMask u = ma;
  const double d = b.duration_s();
  for (int i = 0; i <= 40; ++i) accumulate_melt(u, field_at_time(b, d * i / 40.0, spec, laser, mat), mat);
  CHECK(u == [&] {
    MeltMask x = mb;
    for (std::size_t v = 0; v < x.melted.size(); ++v) x.melted[v] |= ma.melted[v];
    return x;
  }());
  for (std::size_t v = 0; v < spec.voxel_count(); ++v) {
    CHECK(u.melted[v] >= ma.melted[v]);
    CHECK(u.melted[v] >= mb.melted[v]);
  }
  CHECK(u.count() > std::max(ma.count(), mb.count()));
}

TEST_CASE("material and laser validation") {
  MaterialThermal m;
  m.melt_K = 200.0;
  CHECK_THROWS_AS(m.validate(), InvalidArgument);
  LaserParams l{0.0, 0.5};
  CHECK_THROWS_AS(l.validate(), InvalidArgument);
  const auto spec = DomainSpec::from_dims({4, 4, 4}, 5.0);
  CHECK(MaterialThermal{}.resolved(spec).clamp_radius_um == 2.5);
}

#include <doctest.h>

#include <cmath>
#include <set>

#include "meltpath/error.hpp"
#include "meltpath/scanpath.hpp"
#include "support.hpp"

using namespace meltpath;

namespace {

const DomainSpec kSquare = DomainSpec::from_size({1.0, 1.0, 0.1}, 5.0);

Vec3 unit(Vec3 v) { return (1.0 / v.norm()) * v; }

double cross_z(Vec3 a, Vec3 b) { return a.x * b.y - a.y * b.x; }

std::size_t turns(const ScanPath& p) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < p.waypoints.size(); ++i) {
    const Vec3 a = unit(p.waypoints[i] - p.waypoints[i - 1]), b = unit(p.waypoints[i + 1] - p.waypoints[i]);
    n += a.dot(b) < 1.0 - 1e-9;
  }
  return n;
}

bool segments_cross(Vec3 p1, Vec3 p2, Vec3 q1, Vec3 q2) {
  auto orient = [](Vec3 a, Vec3 b, Vec3 c) { return cross_z(b - a, c - a); };
  const double d1 = orient(q1, q2, p1), d2 = orient(q1, q2, p2), d3 = orient(p1, p2, q1), d4 = orient(p1, p2, q2);
  return ((d1 > 1e-12 && d2 < -1e-12) || (d1 < -1e-12 && d2 > 1e-12)) &&
         ((d3 > 1e-12 && d4 < -1e-12) || (d3 < -1e-12 && d4 > 1e-12));
}

void check_inside(const ScanPath& p, const DomainSpec& d) {
  CHECK_NOTHROW(p.validate(d));
  const Vec3 e = d.extent_mm();
  for (const auto& w : p.waypoints) {
    CHECK(w.x >= -1e-12);
    CHECK(w.x <= e.x + 1e-12);
    CHECK(w.y >= -1e-12);
    CHECK(w.y <= e.y + 1e-12);
  }
}

}  // namespace

TEST_CASE("serpentine with hatch 0.5 and no margin") {
  const auto p = vertical_serpentine(kSquare, 0.5, {0.0, 0.5, 25.0});
  REQUIRE(p.waypoints.size() == 6);
  std::set<double> xs;
  for (const auto& w : p.waypoints) xs.insert(w.x);
  CHECK(xs.size() == 3);
  CHECK(turns(p) == 4);
  check_inside(p, kSquare);
}

TEST_CASE("serpentine columns alternate direction") {
  const auto p = vertical_serpentine(kSquare, 0.15, {0.0, 0.5, 25.0});
  std::vector<double> dy;
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i)
    if (!p.jog[i]) dy.push_back(p.waypoints[i + 1].y - p.waypoints[i].y);
  CHECK(dy.size() == 7);
  for (std::size_t i = 1; i < dy.size(); ++i) CHECK(dy[i] * dy[i - 1] < 0.0);
  check_inside(vertical_serpentine(kSquare, 0.15), kSquare);
  CHECK_THROWS_AS(vertical_serpentine(kSquare, 1.5), InvalidArgument);
  CHECK_THROWS_AS(vertical_serpentine(kSquare, 0.0), InvalidArgument);
}

TEST_CASE("clockwise spiral does not cross itself and stays within the coverage bound") {
  for (double hatch : {0.1, 0.15, 0.3}) {
    const auto p = spiral_clockwise(kSquare, hatch);
    check_inside(p, kSquare);
    const auto& w = p.waypoints;
    REQUIRE(w.size() >= 3);
    for (std::size_t i = 1; i + 1 < w.size(); ++i) CHECK(cross_z(w[i] - w[i - 1], w[i + 1] - w[i]) < 0.0);
    for (std::size_t i = 0; i + 1 < w.size(); ++i)
      for (std::size_t j = i + 2; j + 1 < w.size(); ++j) CHECK(!segments_cross(w[i], w[i + 1], w[j], w[j + 1]));
    CHECK(p.length_mm() < 1.0 / hatch + 4.0);
  }
}

TEST_CASE("diagonal passes are 45 degrees and one hatch apart") {
  const auto p = diagonal(kSquare, 0.15);
  check_inside(p, kSquare);
  std::vector<std::pair<Vec3, Vec3>> passes;
  for (std::size_t i = 0; i + 1 < p.waypoints.size(); ++i)
    if (!p.jog[i]) passes.emplace_back(p.waypoints[i], p.waypoints[i + 1]);
  CHECK(passes.size() == 10);
  const double r = 1.0 / std::sqrt(2.0);
  for (std::size_t k = 0; k < passes.size(); ++k) {
    const Vec3 d = unit(passes[k].second - passes[k].first);
    CHECK(std::abs(std::abs(d.x) - r) < 1e-12);
    CHECK(std::abs(std::abs(d.y) - r) < 1e-12);
    if (k > 0) {
      const double s0 = (passes[k - 1].first.x + passes[k - 1].first.y) * r;
      const double s1 = (passes[k].first.x + passes[k].first.y) * r;
      CHECK(std::abs(std::abs(s1 - s0) - 0.15) < 1e-9);
    }
  }
}

TEST_CASE("path from actions") {
  const GridSpec grid = GridSpec::centered(kSquare, 5, 0.15);
  const auto origin_only = path_from_actions(grid, std::vector<Action>{});
  REQUIRE(origin_only.waypoints.size() == 1);
  CHECK(origin_only.waypoints[0] == grid.point(0));

  const auto serp = serpentine_actions(5);
  const auto p = path_from_actions(grid, serp);
  CHECK(p.waypoints.size() == 25);
  std::set<std::pair<double, double>> distinct;
  for (const auto& w : p.waypoints) distinct.insert({w.x, w.y});
  CHECK(distinct.size() == 25);

  const std::vector<Action> off{Action::up, Action::up, Action::left};
  try {
    path_from_actions(grid, off);
    FAIL("left of the origin column accepted");
  } catch (const InvalidPath& e) {
    CHECK(e.step() == 2);
  }
  const std::vector<Action> back{Action::right, Action::up, Action::left, Action::down};
  try {
    path_from_actions(grid, back);
    FAIL("revisit accepted");
  } catch (const InvalidPath& e) {
    CHECK(e.step() == 3);
  }
}

TEST_CASE("distinct valid action strings give distinct waypoint sequences") {
  const GridSpec grid{3, 0.1, {0.1, 0.1, 0.1}};
  std::set<std::vector<std::pair<double, double>>> seen;
  std::size_t valid = 0;
  std::vector<Action> acts;
  auto rec = [&](auto&& self, std::size_t depth) -> void {
    try {
      const auto p = path_from_actions(grid, acts);
      std::vector<std::pair<double, double>> key;
      for (const auto& w : p.waypoints) key.push_back({w.x, w.y});
      seen.insert(key);
      ++valid;
    } catch (const InvalidPath&) {
      return;
    }
    if (depth == 8) return;
    for (Action a : kActions) {
      acts.push_back(a);
      self(self, depth + 1);
      acts.pop_back();
    }
  };
  rec(rec, 0);
  CHECK(valid > 20);
  CHECK(seen.size() == valid);
}

TEST_CASE("timing along a path") {
  ScanPath p;
  p.speed_m_s = 0.5;
  p.waypoints = {{0, 0, 0}, {0.1, 0, 0}, {0.1, 0.2, 0}};
  CHECK(p.length_mm() == doctest::Approx(0.3));
  CHECK(p.duration_s() == doctest::Approx(0.3e-3 / 0.5));
  const auto s = p.at(p.duration_s() / 2);
  CHECK(s.segment == 1);
  CHECK(s.position.y == doctest::Approx(0.05));
  CHECK(s.direction == Vec3{0, 1, 0});
  CHECK_THROWS_AS(p.at(1.0), InvalidArgument);
}

TEST_CASE("path CSV roundtrip and action parsing") {
  test::ScratchDir dir("path");
  const auto p = spiral_clockwise(kSquare, 0.2);
  write_path_csv(dir / "p.csv", p, {"config_hash=x"});
  const auto q = read_path_csv(dir / "p.csv");
  REQUIRE(q.waypoints.size() == p.waypoints.size());
  for (std::size_t i = 0; i < p.waypoints.size(); ++i) {
    CHECK(q.waypoints[i].x == doctest::Approx(p.waypoints[i].x).epsilon(1e-12));
    CHECK(q.waypoints[i].y == doctest::Approx(p.waypoints[i].y).epsilon(1e-12));
  }
  CHECK(test::slurp(dir / "p.csv").find("x_mm,y_mm,z_mm,t_s,power_W") != std::string::npos);
  CHECK(parse_action("Up") == Action::up);
  CHECK(parse_action("R") == Action::right);
  CHECK_THROWS_AS(parse_action("north"), InvalidArgument);
}

TEST_CASE("grid validation") {
  CHECK_THROWS_AS(GridSpec::centered(kSquare, 11, 0.16), InvalidArgument);
  CHECK_NOTHROW(GridSpec::centered(DomainSpec::from_size({2.0, 2.0, 0.1}, 5.0), 11, 0.16));
  const GridSpec g{2, 0.1, {}};
  CHECK(!g.neighbor(0, Action::left));
  CHECK(!g.neighbor(0, Action::down));
  CHECK(*g.neighbor(0, Action::up) == 2);
  CHECK(*g.neighbor(0, Action::right) == 1);
}

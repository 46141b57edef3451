#include <doctest.h>

#include "meltpath/error.hpp"
#include "meltpath/reward.hpp"
#include "support.hpp"

using namespace meltpath;

namespace {

std::size_t in_bounds(const GridSpec& g) {
  std::size_t k = 0;
  for (const auto& m : enumerate_movements(g)) k += m.in_bounds();
  return k;
}

struct Small {
  DomainSpec spec = DomainSpec::from_size({0.3, 0.3, 0.05}, 5.0);
  GridSpec grid = GridSpec::centered(spec, 2, 0.1);
  GrainField base = generate_voronoi_microstructure(spec, 120, 20, 4);
  PFParams pf;
};

}  // namespace

TEST_CASE("movement enumeration") {
  CHECK(enumerate_movements(GridSpec{5, 0.15, {}}).size() == 100);
  CHECK(enumerate_movements(GridSpec{11, 0.16, {}}).size() == 484);
  const GridSpec two{2, 0.1, {}};
  CHECK(enumerate_movements(two).size() == 16);
  CHECK(in_bounds(two) == 8);
  CHECK(in_bounds(GridSpec{5, 0.15, {}}) == 80);
  const auto m = enumerate_movements(GridSpec{3, 0.1, {}});
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(m[i].from_index == i / 4);
    CHECK(m[i].action == kActions[i % 4]);
    CHECK(movement_slot(m[i].from_index, m[i].action) == i);
  }
  CHECK(m[4 * 4 + 0].to_index == 7);  // up from the centre of a 3 x 3 grid
  CHECK(m[4 * 4 + 2].to_index == 3);  // left
}

TEST_CASE("opposite movements over one edge melt the same voxel count on a uniform field") {
  Small s;
  GrainField uniform(s.spec, 20, 5);
  const Movement right{0, Action::right, 1}, left{1, Action::left, 0};
  const auto a = movement_metrics(right, s.grid, uniform, {}, {}, s.pf);
  const auto b = movement_metrics(left, s.grid, uniform, {}, {}, s.pf);
  CHECK(a.melted_voxels > 0);
  CHECK(a.melted_voxels == b.melted_voxels);
}

TEST_CASE("movement metrics are pure and reject out-of-bounds or cold moves") {
  Small s;
  const Movement up{0, Action::up, 2};
  const auto first = movement_metrics(up, s.grid, s.base, {}, {}, s.pf);
  movement_metrics(Movement{0, Action::right, 1}, s.grid, s.base, {}, {}, s.pf);
  CHECK(movement_metrics(up, s.grid, s.base, {}, {}, s.pf) == first);
  CHECK(first.valid());
  CHECK(*first.avg_aspect_ratio > 0.0);
  CHECK(*first.avg_grain_volume_um3 > 0.0);

  CHECK_THROWS_AS(movement_metrics(Movement{0, Action::left, kOutOfBounds}, s.grid, s.base, {}, {}, s.pf),
                  InvalidArgument);

  const auto cold = movement_metrics(up, s.grid, s.base, {0.01, 0.5}, {}, s.pf);
  CHECK(cold.melted_voxels == 0);
  CHECK(!cold.valid());
}

TEST_CASE("table build is independent of worker count and roundtrips through CSV") {
  Small s;
  BuildOptions one;
  one.config_hash = "feedfacecafebeef";
  BuildOptions three = one;
  three.workers = 3;
  const auto a = build_table(s.grid, s.base, {}, {}, s.pf, one);
  const auto b = build_table(s.grid, s.base, {}, {}, s.pf, three);
  REQUIRE(a.entries.size() == 16);
  test::ScratchDir dir("table");
  write_reward_table(dir / "a.csv", a);
  write_reward_table(dir / "b.csv", b);
  CHECK(test::slurp(dir / "a.csv") == test::slurp(dir / "b.csv"));

  const auto r = read_reward_table(dir / "a.csv");
  CHECK(r.grid == a.grid);
  CHECK(r.config_hash == "feedfacecafebeef");
  REQUIRE(r.entries.size() == a.entries.size());
  for (std::size_t i = 0; i < r.entries.size(); ++i) {
    CHECK(r.entries[i].movement == a.entries[i].movement);
    CHECK(r.entries[i].metrics == a.entries[i].metrics);
  }
  write_reward_table(dir / "c.csv", r);
  CHECK(test::slurp(dir / "c.csv") == test::slurp(dir / "a.csv"));

  BuildOptions surrogate;
  surrogate.backend = Backend::surrogate;
  CHECK_THROWS_AS(build_table(s.grid, s.base, {}, {}, s.pf, surrogate), ConfigError);
}

TEST_CASE("malformed tables are format errors") {
  test::ScratchDir dir("table");
  write_reward_table(dir / "ok.csv", test::uniform_table(3));
  const auto good = test::slurp(dir / "ok.csv");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
  };
  auto replaced = [&](const std::string& from, const std::string& to) {
    auto t = good;
    t.replace(t.find(from), from.size(), to);
    return t;
  };
  CHECK_NOTHROW(read_reward_table(dir / "ok.csv"));
  CHECK_THROWS_AS(read_reward_table(write("hdr.csv", replaced("avg_aspect_ratio", "ar"))), FormatError);
  CHECK_THROWS_AS(read_reward_table(write("act.csv", replaced(",Up,", ",North,"))), FormatError);
  CHECK_THROWS_AS(read_reward_table(write("short.csv", good.substr(0, good.rfind('\n', good.size() - 2) + 1))),
                  FormatError);
  CHECK_THROWS_AS(read_reward_table(write("flag.csv", replaced(",1\n", ",0\n"))), FormatError);
  CHECK_THROWS_AS(read_reward_table(write("empty.csv", "")), FormatError);
}

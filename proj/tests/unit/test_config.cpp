#include <doctest.h>

#include <fstream>

#include "meltpath/config.hpp"
#include "meltpath/error.hpp"
#include "support.hpp"

using namespace meltpath;

TEST_CASE("defaults validate and roundtrip through INI") {
  const ExperimentConfig d;
  CHECK_NOTHROW(d.validate());
  const auto again = parse_config(to_ini(d));
  CHECK(again.canonical() == d.canonical());
  CHECK(again.hash() == d.hash());
  CHECK(d.hash().size() == 16);
}

TEST_CASE("the shipped default config is the built-in default") {
  const auto cfg = load_config(std::filesystem::path(MELTPATH_SOURCE_DIR) / "configs" / "default.ini");
  CHECK(cfg.hash() == ExperimentConfig{}.hash());
  CHECK_NOTHROW(load_config(std::filesystem::path(MELTPATH_SOURCE_DIR) / "configs" / "smoke.ini"));
}

TEST_CASE("missing keys take defaults; unknown keys and schema mismatches are rejected") {
  const auto cfg = parse_config("[schema]\nversion = 1\n[grid]\nn = 3\n");
  CHECK(cfg.grid_n == 3);
  CHECK(cfg.hatch_mm == 0.15);
  CHECK_THROWS_AS(parse_config("[schema]\nversion = 1\n[grid]\nsize = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[schema]\nversion = 1\n[bogus]\nn = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[schema]\nversion = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nn = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[schema]\nversion = 1\n[grid]\nn = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[schema]\nversion = 1\n[reward]\ncase = 4\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/meltpath.ini"), ConfigError);
}

TEST_CASE("inconsistent values are config errors") {
  ExperimentConfig c;
  c.grid_n = 9;  // 8 x 0.15 mm does not fit in 1 mm
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.pf.stability_factor = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = ExperimentConfig{};
  c.connectivity = 8;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("hash covers results but not output location or threads") {
  ExperimentConfig a, b;
  b.output_dir = "elsewhere";
  b.threads = 7;
  CHECK(a.hash() == b.hash());
  b.seed = 2;
  CHECK(a.hash() != b.hash());
  ExperimentConfig c;
  apply_override(c, "laser.power_W=26");
  CHECK(c.laser.power_W == 26.0);
  CHECK(c.hash() != a.hash());
  CHECK_THROWS_AS(apply_override(c, "laser.colour=red"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "no-equals-sign"), ConfigError);
}

TEST_CASE("canonical form is sorted key=value lines") {
  const auto text = ExperimentConfig{}.canonical();
  CHECK(text.find("grid.hatch_mm=0.15\n") != std::string::npos);
  CHECK(text.find("run.output_dir") == std::string::npos);
  CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

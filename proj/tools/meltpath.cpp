// meltpath: command-line front end for microstructure simulation, reward-table
// construction, toolpath training and path comparison.
//
// Exit codes: 0 success, 2 configuration error, 3 numeric failure, 4 format error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "meltpath/config.hpp"
#include "meltpath/dqn.hpp"
#include "meltpath/environment.hpp"
#include "meltpath/error.hpp"
#include "meltpath/experiment.hpp"
#include "meltpath/field_io.hpp"
#include "meltpath/morphology.hpp"
#include "meltpath/reward.hpp"
#include "meltpath/scanpath.hpp"
#include "meltpath/simd/kernels.hpp"

namespace fs = std::filesystem;
using namespace meltpath;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitFormat = 4;

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::string out_dir;

  ExperimentConfig load() const {
    ExperimentConfig cfg;
    if (!config.empty()) cfg = load_config(config);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();
    return cfg;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "INI experiment config (defaults apply when omitted)");
  cmd->add_option("--set", c.overrides, "Override a config value: section.key=value (repeatable)");
  cmd->add_option("-o,--out-dir", c.out_dir, "Output directory (overrides run.output_dir)");
}

/// Creates the parent directory of an output file.
const std::string& prepared(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return path;
}

std::vector<std::string> stamp(const ExperimentConfig& cfg) { return {"config_hash=" + cfg.hash()}; }

void append_ledger(const ExperimentConfig& cfg, const std::string& stage, const std::string& backend,
                   double seconds, std::size_t steps) {
  fs::create_directories(cfg.output_dir);
  const auto path = cfg.output_dir / "runtime_ledger.csv";
  RuntimeLedger ledger;
  if (fs::exists(path)) ledger = RuntimeLedger::read_csv(path);
  ledger.add({stage, backend, seconds, steps});
  ledger.write_csv(path, cfg.hash());
}

GrainField load_or_generate(const std::string& field_path, const ExperimentConfig& cfg) {
  if (!field_path.empty()) {
    if (!fs::exists(field_path)) throw ConfigError("missing field file " + field_path);
    return load_grain_field(field_path);
  }
  return initial_field(cfg);
}

std::vector<Action> parse_actions(const std::string& text) {
  std::vector<Action> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_action(tok));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"meltpath: grain-structure-aware laser toolpath optimisation"};
  app.require_subcommand(1);
  std::string isa;
  app.add_option("--simd", isa, "Force the kernel set: scalar or avx2");

  // gen-voronoi
  Common gv_c;
  std::string gv_size, gv_out;
  std::optional<double> gv_voxel;
  std::optional<std::size_t> gv_seeds;
  std::optional<int> gv_ori;
  std::optional<std::uint64_t> gv_seed;
  auto* gv = app.add_subcommand("gen-voronoi", "Generate a Voronoi initial microstructure (.vgf)");
  add_common(gv, gv_c);
  gv->add_option("--size", gv_size, "Domain size in mm: x,y,z");
  gv->add_option("--voxel-um", gv_voxel, "Voxel edge in micrometres");
  gv->add_option("--seeds", gv_seeds, "Number of Voronoi seeds");
  gv->add_option("--orientations", gv_ori, "Number of orientation classes");
  gv->add_option("--seed", gv_seed, "Global random seed");
  gv->add_option("--out", gv_out, "Output .vgf")->required();

  // gen-path
  Common gp_c;
  std::string gp_pattern = "serpentine", gp_out, gp_actions;
  std::optional<double> gp_hatch;
  auto* gp = app.add_subcommand("gen-path", "Write a toolpath CSV");
  add_common(gp, gp_c);
  gp->add_option("--pattern", gp_pattern, "serpentine | spiral | diagonal | grid-zigzag | actions")
      ->check(CLI::IsMember({"serpentine", "spiral", "diagonal", "grid-zigzag", "actions"}));
  gp->add_option("--hatch", gp_hatch, "Hatch spacing in mm");
  gp->add_option("--actions", gp_actions, "Comma-separated grid actions for --pattern actions (e.g. U,U,R,D)");
  gp->add_option("--out", gp_out, "Output path CSV")->required();

  // simulate
  Common sim_c;
  std::string sim_field, sim_path, sim_out;
  std::size_t sim_save_every = 0;
  auto* sim = app.add_subcommand("simulate", "Run the grain-evolution solver along a toolpath");
  add_common(sim, sim_c);
  sim->add_option("--field", sim_field, "Initial microstructure .vgf (generated from the config when omitted)");
  sim->add_option("--path", sim_path, "Toolpath CSV")->required();
  sim->add_option("--save-every", sim_save_every, "Also write grain/temperature snapshots every N steps");

  // analyze
  Common an_c;
  std::string an_field, an_mask, an_out, an_hist_out, an_vhist_out;
  std::optional<double> an_min_volume;
  auto* an = app.add_subcommand("analyze", "Grain statistics and histograms of a field");
  add_common(an, an_c);
  an->add_option("--field", an_field, "Grain field .vgf")->required();
  an->add_option("--mask", an_mask, "Melt mask .vgf restricting the analysis");
  an->add_option("--min-volume", an_min_volume, "Smallest grain volume (um^3) counted for the mean aspect ratio");
  an->add_option("--out", an_out, "Stats CSV (default <out-dir>/stats.csv)");
  an->add_option("--hist-out", an_hist_out, "Aspect-ratio histogram CSV (default <out-dir>/aspect_hist.csv)");
  an->add_option("--volume-hist-out", an_vhist_out, "Volume histogram CSV (default <out-dir>/volume_hist.csv)");

  // export-voi
  Common ev_c;
  std::size_t ev_tracks = 1;
  bool ev_no_aug = false;
  std::string ev_field;
  auto* ev = app.add_subcommand("export-voi", "Export VOI training samples along single tracks");
  add_common(ev, ev_c);
  ev->add_option("--tracks", ev_tracks, "Number of tracks (powers cycle through voi.powers_W)");
  ev->add_flag("--no-augment", ev_no_aug, "Disable the 19 augmentation transforms");
  ev->add_option("--field", ev_field, "Initial microstructure .vgf");

  // reward-table
  Common rt_c;
  std::optional<std::size_t> rt_grid;
  std::optional<double> rt_hatch;
  std::string rt_backend, rt_out, rt_field;
  auto* rt = app.add_subcommand("reward-table", "Precompute per-movement grain metrics on the scan grid");
  add_common(rt, rt_c);
  rt->add_option("--grid", rt_grid, "Grid points per side");
  rt->add_option("--hatch", rt_hatch, "Grid spacing in mm");
  rt->add_option("--backend", rt_backend, "dns | surrogate");
  rt->add_option("--field", rt_field, "Initial microstructure .vgf");
  rt->add_option("--out", rt_out, "Output CSV (default <out-dir>/reward_table.csv)");

  // train
  Common tr_c;
  std::string tr_table;
  std::optional<int> tr_case;
  std::optional<double> tr_alpha, tr_beta;
  std::optional<std::size_t> tr_episodes;
  std::optional<std::uint64_t> tr_seed;
  auto* tr = app.add_subcommand("train", "Train the toolpath DQN on a reward table");
  add_common(tr, tr_c);
  tr->add_option("--table", tr_table, "Reward table CSV")->required();
  tr->add_option("--case", tr_case, "Reward case 1 (aspect ratio), 2 (grain volume) or 3 (both)");
  tr->add_option("--alpha", tr_alpha, "Aspect-ratio weight for case 3");
  tr->add_option("--beta", tr_beta, "Grain-volume weight for case 3");
  tr->add_option("--episodes", tr_episodes, "Maximum episodes");
  tr->add_option("--seed", tr_seed, "Training seed");

  // compare
  Common cp_c;
  std::string cp_field, cp_path, cp_policy;
  auto* cp = app.add_subcommand("compare", "Simulate the grid zigzag and a learned path on the same field");
  add_common(cp, cp_c);
  cp->add_option("--field", cp_field, "Initial microstructure .vgf");
  auto* cp_path_opt = cp->add_option("--path", cp_path, "Learned toolpath CSV");
  auto* cp_policy_opt = cp->add_option("--policy", cp_policy, "Trained network file; its greedy path is used");
  cp_path_opt->excludes(cp_policy_opt);

  // ledger
  std::string lg_in;
  auto* lg = app.add_subcommand("ledger", "Summarise a runtime ledger CSV");
  lg->add_option("--in", lg_in, "Ledger CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (!isa.empty()) {
      if (isa == "scalar") {
        simd::set_active_isa(simd::Isa::scalar);
      } else if (isa == "avx2") {
        simd::set_active_isa(simd::Isa::avx2);
      } else {
        throw ConfigError("--simd must be scalar or avx2");
      }
    }

    if (*gv) {
      auto cfg = gv_c.load();
      if (!gv_size.empty()) apply_override(cfg, "domain.size_mm=" + gv_size);
      if (gv_voxel) cfg.voxel_um = *gv_voxel;
      if (gv_seeds) cfg.voronoi_seeds = *gv_seeds;
      if (gv_ori) cfg.orientations = cfg.pf.n_ori = *gv_ori;
      if (gv_seed) cfg.seed = *gv_seed;
      cfg.validate();
      GrainField g;
      const double s = timed([&] { g = initial_field(cfg); });
      save_field(prepared(gv_out), g, cfg.hash());
      append_ledger(cfg, "gen-voronoi", "-", s, 0);
      std::printf("wrote %s (%zu x %zu x %zu voxels, field hash %s)\n", gv_out.c_str(), g.spec.dims[0],
                  g.spec.dims[1], g.spec.dims[2], field_hash(g).c_str());
    } else if (*gp) {
      auto cfg = gp_c.load();
      if (gp_hatch) cfg.hatch_mm = *gp_hatch;
      cfg.validate();
      const DomainSpec d = cfg.domain();
      PatternOptions po;
      po.speed_m_s = cfg.laser.speed_m_s;
      po.power_W = cfg.laser.power_W;
      ScanPath path;
      if (gp_pattern == "serpentine") {
        path = vertical_serpentine(d, cfg.hatch_mm, po);
      } else if (gp_pattern == "spiral") {
        path = spiral_clockwise(d, cfg.hatch_mm, po);
      } else if (gp_pattern == "diagonal") {
        po.margin_mm = 0.0;
        path = diagonal(d, cfg.hatch_mm, po);
      } else if (gp_pattern == "grid-zigzag") {
        path = path_from_actions(cfg.grid(), serpentine_actions(cfg.grid_n), cfg.laser.speed_m_s, cfg.laser.power_W);
      } else {
        if (gp_actions.empty()) throw ConfigError("--pattern actions needs --actions");
        path = path_from_actions(cfg.grid(), parse_actions(gp_actions), cfg.laser.speed_m_s, cfg.laser.power_W);
      }
      write_path_csv(prepared(gp_out), path, stamp(cfg));
      std::printf("wrote %s (%zu waypoints, %.6g mm)\n", gp_out.c_str(), path.waypoints.size(), path.length_mm());
    } else if (*sim) {
      auto cfg = sim_c.load();
      const GrainField base = load_or_generate(sim_field, cfg);
      ScanPath path = read_path_csv(sim_path);
      path.validate(base.spec);
      TrackOptions opt = cfg.track;
      opt.collect_samples = false;
      opt.workers = cfg.workers();
      fs::create_directories(cfg.output_dir);
      if (sim_save_every > 0) {
        opt.sample_every = sim_save_every;
        opt.on_sample = [&](const TrackSample& s) {
          char name[64];
          std::snprintf(name, sizeof name, "grain_%07zu.vgf", s.step);
          GrainField g = s.grains;
          g.eta.clear();
          save_field(cfg.output_dir / name, g, cfg.hash());
          std::snprintf(name, sizeof name, "temp_%07zu.vgf", s.step);
          save_field(cfg.output_dir / name, s.temperature, cfg.hash());
        };
      }
      TrackResult res;
      const double secs =
          timed([&] { res = run_track(base, path, cfg.laser, cfg.material, cfg.pf, opt); });
      GrainField final_labels = res.final_field;
      final_labels.eta.clear();
      save_field(cfg.output_dir / "final_grains.vgf", final_labels, cfg.hash());
      save_field(cfg.output_dir / "melt_mask.vgf", res.melt, cfg.hash());
      const auto grains = label_grains(res.final_field, &res.melt, cfg.connectivity);
      const auto st = stats(grains, cfg.min_volume_um3);
      write_stats_csv(cfg.output_dir / "melt_stats.csv", st, cfg.min_volume_um3, stamp(cfg));
      append_ledger(cfg, "simulate", "dns", secs, res.steps);
      std::printf("steps %zu  dt %.3g s  melted voxels %zu  unsolidified %zu  grains %zu  mean AR %s\n", res.steps,
                  res.dt_s, res.melt.count(), res.unsolidified, st.grain_count,
                  st.mean_aspect_ratio ? std::to_string(*st.mean_aspect_ratio).c_str() : "n/a");
    } else if (*an) {
      auto cfg = an_c.load();
      if (an_min_volume) cfg.min_volume_um3 = *an_min_volume;
      cfg.validate();
      const GrainField g = load_grain_field(an_field);
      std::optional<MeltMask> mask;
      if (!an_mask.empty()) mask = load_melt_mask(an_mask);
      if (mask && !(mask->spec.dims == g.spec.dims)) throw ConfigError("mask and field dimensions differ");
      const auto grains = label_grains(g, mask ? &*mask : nullptr, cfg.connectivity);
      const auto st = stats(grains, cfg.min_volume_um3);
      auto target = [&](const std::string& given, const char* fallback) {
        const std::string p = given.empty() ? (cfg.output_dir / fallback).string() : given;
        prepared(p);
        return fs::path(p);
      };
      write_stats_csv(target(an_out, "stats.csv"), st, cfg.min_volume_um3, stamp(cfg));
      write_histogram_csv(target(an_hist_out, "aspect_hist.csv"), st.aspect_histogram, stamp(cfg));
      write_histogram_csv(target(an_vhist_out, "volume_hist.csv"), st.volume_histogram, stamp(cfg));
      std::printf("grains %zu  counted for AR %zu  mean AR %s  mean GV %s um^3\n", st.grain_count, st.aspect_count,
                  st.mean_aspect_ratio ? std::to_string(*st.mean_aspect_ratio).c_str() : "n/a",
                  st.mean_volume_um3 ? std::to_string(*st.mean_volume_um3).c_str() : "n/a");
    } else if (*ev) {
      auto cfg = ev_c.load();
      if (ev_no_aug) cfg.voi.augment = false;
      const GrainField base = load_or_generate(ev_field, cfg);
      VoiManifest m;
      const double secs = timed([&] { m = export_voi_dataset(cfg, base, ev_tracks, cfg.output_dir / "voi"); });
      append_ledger(cfg, "export-voi", "dns", secs, ev_tracks * cfg.voi.steps);
      std::printf("wrote %zu samples to %s\n", m.samples.size(), (cfg.output_dir / "voi").c_str());
    } else if (*rt) {
      auto cfg = rt_c.load();
      if (rt_grid) cfg.grid_n = *rt_grid;
      if (rt_hatch) cfg.hatch_mm = *rt_hatch;
      if (!rt_backend.empty()) cfg.backend = rt_backend;
      cfg.validate();
      BuildOptions bo;
      bo.backend = parse_backend(cfg.backend);
      bo.config_hash = cfg.hash();
      bo.workers = cfg.workers();
      bo.metrics = cfg.metrics();
      const GrainField base = load_or_generate(rt_field, cfg);
      RewardTable table;
      const double secs =
          timed([&] { table = build_table(cfg.grid(), base, cfg.laser, cfg.material, cfg.pf, bo); });
      const fs::path out = rt_out.empty() ? cfg.output_dir / "reward_table.csv" : fs::path(rt_out);
      if (out.has_parent_path()) fs::create_directories(out.parent_path());
      write_reward_table(out, table);
      append_ledger(cfg, "reward-table", cfg.backend, secs, 0);
      std::size_t valid = 0;
      for (const auto& e : table.entries) valid += e.valid() ? 1 : 0;
      std::printf("wrote %s (%zu movements, %zu with metrics)\n", out.c_str(), table.entries.size(), valid);
    } else if (*tr) {
      auto cfg = tr_c.load();
      if (tr_case) cfg.reward.reward_case = *tr_case;
      if (tr_alpha) cfg.reward.alpha = *tr_alpha;
      if (tr_beta) cfg.reward.beta = *tr_beta;
      if (tr_episodes) cfg.train.max_episodes = *tr_episodes;
      if (tr_seed) cfg.seed = *tr_seed;
      cfg.train.seed = cfg.seed;
      cfg.validate();
      const RewardTable table = read_reward_table(tr_table);
      GridEnv env(table.grid, table, cfg.reward);
      TrainResult res;
      const double secs = timed([&] { res = train(env, cfg.train); });
      fs::create_directories(cfg.output_dir / "snapshots");
      auto comment = stamp(cfg);
      comment.push_back("table_config_hash=" + (table.config_hash.empty() ? std::string("-") : table.config_hash));
      write_episode_log(cfg.output_dir / "episode_log.csv", res.log, comment);
      write_mlp(cfg.output_dir / "policy.txt", res.net, comment);
      for (const auto& s : res.snapshots) {
        char name[64];
        std::snprintf(name, sizeof name, "episode_%06zu.csv", s.episode);
        auto c = comment;
        c.push_back(std::string("full_coverage=") + (s.rollout.full_coverage ? "true" : "false"));
        write_path_csv(cfg.output_dir / "snapshots" / name, s.rollout.path, c);
      }
      const auto greedy = extract_greedy_path(res.net, table.grid, cfg.laser.speed_m_s, cfg.laser.power_W);
      auto c = comment;
      c.push_back(std::string("full_coverage=") + (greedy.full_coverage ? "true" : "false"));
      write_path_csv(cfg.output_dir / "greedy_path.csv", greedy.path, c);
      append_ledger(cfg, "train", "-", secs, 0);
      std::printf("episodes %zu  final reward %.6g  greedy path covers %zu/%zu points%s\n", res.log.size(),
                  res.log.empty() ? 0.0 : res.log.back().cumulative_reward, greedy.points.size(),
                  table.grid.point_count(), greedy.full_coverage ? " (full coverage)" : "");
    } else if (*cp) {
      auto cfg = cp_c.load();
      if (cp_path.empty() && cp_policy.empty()) throw ConfigError("compare needs --path or --policy");
      const GrainField base = load_or_generate(cp_field, cfg);
      const GridSpec grid = cfg.grid();
      const ScanPath zigzag =
          path_from_actions(grid, serpentine_actions(grid.n), cfg.laser.speed_m_s, cfg.laser.power_W);
      ScanPath learned;
      if (!cp_path.empty()) {
        if (!fs::exists(cp_path)) throw ConfigError("missing path file " + cp_path);
        learned = read_path_csv(cp_path);
      } else {
        if (!fs::exists(cp_policy)) throw ConfigError("missing policy file " + cp_policy);
        learned = extract_greedy_path(read_mlp(cp_policy), grid, cfg.laser.speed_m_s, cfg.laser.power_W).path;
      }
      learned.validate(base.spec);
      const auto report = run_compare(cfg, base, zigzag, learned);
      write_report(cfg.output_dir, report);
      append_ledger(cfg, "compare-zigzag", "dns", report.reference.seconds, report.reference.steps);
      append_ledger(cfg, "compare-drl", "dns", report.candidate.seconds, report.candidate.steps);
      auto show = [](std::optional<double> v) { return v ? std::to_string(*v) : std::string("n/a"); };
      std::printf("zigzag mean AR %s  drl mean AR %s  delta %s\n", show(report.reference.stats.mean_aspect_ratio).c_str(),
                  show(report.candidate.stats.mean_aspect_ratio).c_str(), show(report.mean_aspect_delta).c_str());
      std::printf("zigzag mean GV %s  drl mean GV %s  delta %s um^3\n",
                  show(report.reference.stats.mean_volume_um3).c_str(),
                  show(report.candidate.stats.mean_volume_um3).c_str(), show(report.mean_volume_delta_um3).c_str());
    } else if (*lg) {
      const auto ledger = RuntimeLedger::read_csv(lg_in);
      double total = 0.0;
      for (const auto& r : ledger.rows()) {
        std::printf("%-16s %-10s %12.3f s  %10zu steps\n", r.stage.c_str(), r.backend.c_str(), r.seconds, r.steps);
        total += r.seconds;
      }
      std::printf("total %.3f s over %zu stages\n", total, ledger.rows().size());
      if (const auto ratio = ledger.speedup()) {
        std::printf("dns / surrogate seconds per step: %.3f\n", *ratio);
      } else {
        std::printf("dns / surrogate seconds per step: n/a (no surrogate rows)\n");
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const InvalidPath& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const NumericFailure& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const PartialTableError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "format error: %s\n", e.what());
    return kExitFormat;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kExitOk;
}

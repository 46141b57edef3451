#include "meltpath/reward.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "meltpath/error.hpp"
#include "meltpath/morphology.hpp"
#include "meltpath/parallel.hpp"

namespace meltpath {

std::vector<Movement> enumerate_movements(const GridSpec& grid) {
  std::vector<Movement> out;
  out.reserve(grid.point_count() * 4);
  for (std::size_t p = 0; p < grid.point_count(); ++p) {
    for (Action a : kActions) {
      const auto to = grid.neighbor(p, a);
      out.push_back({p, a, to ? static_cast<long>(*to) : kOutOfBounds});
    }
  }
  return out;
}

MovementMetrics movement_metrics(const Movement& m, const GridSpec& grid, const GrainField& base,
                                 const LaserParams& laser, const MaterialThermal& mat_in, const PFParams& pf,
                                 const MetricsOptions& opt) {
  if (!m.in_bounds()) throw InvalidArgument("movement leaves the grid");
  const DomainSpec& spec = base.spec;
  const MaterialThermal mat = mat_in.resolved(spec);
  const Vec3 a = grid.point(m.from_index);
  const Vec3 b = grid.point(static_cast<std::size_t>(m.to_index));

  // Mobility vanishes beyond the cutoff isotherm radius of the source, which
  // never leaves the segment, so a crop that far out (plus stencil slack)
  // behaves exactly like the full domain.
  const double cutoff_K = mobility_cutoff_K(mat, pf);
  const bool everywhere = cutoff_K <= mat.ambient_K;
  const double reach = everywhere ? 0.0 : isotherm_radius_mm(cutoff_K, laser, mat) + 3.0 * spec.voxel_mm();
  VoiWindow w;
  const double h = spec.voxel_mm();
  const std::array<double, 2> lo{std::min(a.x, b.x) - reach, std::min(a.y, b.y) - reach};
  const std::array<double, 2> hi{std::max(a.x, b.x) + reach, std::max(a.y, b.y) + reach};
  for (int k = 0; k < 2; ++k) {
    const double l = std::clamp(std::floor(lo[k] / h), 0.0, static_cast<double>(spec.dims[k]));
    const double u = std::clamp(std::ceil(hi[k] / h), 0.0, static_cast<double>(spec.dims[k]));
    w.origin[k] = static_cast<std::size_t>(l);
    w.dims[k] = static_cast<std::size_t>(u - l);
  }
  w.origin[2] = 0;
  w.dims[2] = spec.dims[2];
  if (everywhere) w = VoiWindow{{0, 0, 0}, spec.dims};

  GrainField crop = extract(base, w);
  const Vec3 shift{static_cast<double>(w.origin[0]) * h, static_cast<double>(w.origin[1]) * h, 0.0};
  ScanPath path;
  path.waypoints = {a - shift, b - shift};
  path.speed_m_s = laser.speed_m_s;
  path.power_W = laser.power_W;

  TrackOptions topt = opt.track;
  topt.collect_samples = false;
  topt.on_sample = nullptr;
  const TrackResult r = run_track(crop, path, laser, mat, pf, topt);

  MovementMetrics out;
  out.melted_voxels = r.melt.count();
  if (out.melted_voxels == 0) return out;
  const auto grains = label_grains(r.final_field, &r.melt, opt.connectivity);
  const MorphologyStats s = stats(grains, opt.min_volume_um3);
  out.avg_aspect_ratio = s.mean_aspect_ratio;
  out.avg_grain_volume_um3 = s.mean_volume_um3;
  return out;
}

Backend parse_backend(const std::string& s) {
  if (s == "dns") return Backend::dns;
  if (s == "surrogate") return Backend::surrogate;
  throw ConfigError("unknown backend '" + s + "' (expected dns or surrogate)");
}

RewardTable build_table(const GridSpec& grid, const GrainField& base, const LaserParams& laser,
                        const MaterialThermal& mat, const PFParams& pf, const BuildOptions& opt) {
  if (opt.backend == Backend::surrogate) {
    throw ConfigError("the surrogate backend is not part of this build; use the dns backend");
  }
  grid.validate(base.spec);
  RewardTable table;
  table.grid = grid;
  table.backend = "dns";
  table.config_hash = opt.config_hash;
  {
    const auto s = stats(label_grains(base, nullptr, opt.metrics.connectivity), opt.metrics.min_volume_um3);
    table.initial_mean_grain_volume_um3 = s.mean_volume_um3;
  }
  const auto moves = enumerate_movements(grid);
  table.entries.resize(moves.size());
  std::vector<std::size_t> jobs;
  for (std::size_t i = 0; i < moves.size(); ++i) {
    table.entries[i].movement = moves[i];
    if (moves[i].in_bounds()) jobs.push_back(i);
  }
  std::vector<std::uint8_t> failed(moves.size(), 0);
  MetricsOptions mopt = opt.metrics;
  mopt.track.workers = 1;
  parallel_for(jobs.size(), opt.workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const std::size_t i = jobs[j];
      try {
        table.entries[i].metrics = movement_metrics(moves[i], grid, base, laser, mat, pf, mopt);
      } catch (const Error&) {
        failed[i] = 1;
      }
    }
  });
  std::vector<std::size_t> bad;
  for (std::size_t i = 0; i < failed.size(); ++i) {
    if (failed[i]) bad.push_back(i);
  }
  if (!bad.empty()) {
    throw PartialTableError(std::to_string(bad.size()) + " movement(s) failed", std::move(bad));
  }
  return table;
}

// --- CSV -------------------------------------------------------------------------

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(s);
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::optional<double> parse_opt(const std::string& cell, std::uint64_t offset) {
  if (cell.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (...) {
    throw FormatError("'" + cell + "' is not a number", offset);
  }
  if (used != cell.size() || !std::isfinite(v)) throw FormatError("'" + cell + "' is not a finite number", offset);
  return v;
}

long parse_int(const std::string& cell, std::uint64_t offset) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(cell, &used);
  } catch (...) {
    throw FormatError("'" + cell + "' is not an integer", offset);
  }
  if (used != cell.size()) throw FormatError("'" + cell + "' is not an integer", offset);
  return v;
}

}  // namespace

void write_reward_table(const std::filesystem::path& path, const RewardTable& t) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  out << "# backend=" << t.backend << " config_hash=" << (t.config_hash.empty() ? "-" : t.config_hash)
      << " grid=" << t.grid.n << " hatch_mm=" << num(t.grid.hatch_mm) << " origin_mm=" << num(t.grid.origin_mm.x)
      << ';' << num(t.grid.origin_mm.y) << ';' << num(t.grid.origin_mm.z);
  if (t.initial_mean_grain_volume_um3) {
    out << " initial_mean_grain_volume_um3=" << num(*t.initial_mean_grain_volume_um3);
  }
  out << '\n' << kRewardTableHeader << '\n';
  for (const auto& e : t.entries) {
    const auto& m = e.movement;
    out << m.from_index << ',' << action_name(m.action) << ',' << m.to_index << ','
        << (m.in_bounds() ? opt_num(e.metrics.avg_aspect_ratio) : "") << ','
        << (m.in_bounds() ? opt_num(e.metrics.avg_grain_volume_um3) : "") << ','
        << (m.in_bounds() ? std::to_string(e.metrics.melted_voxels) : "") << ',' << (e.valid() ? 1 : 0) << '\n';
  }
}

RewardTable read_reward_table(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  RewardTable t;
  t.backend.clear();
  std::optional<std::size_t> meta_n;
  std::string line;
  std::uint64_t offset = 0;
  bool header = false;
  struct Row {
    RewardEntry entry;
    bool valid_flag;
    std::uint64_t offset;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    const std::uint64_t here = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header && !line.empty() && line[0] == '#') {
      std::stringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "backend") {
          t.backend = val;
        } else if (key == "config_hash") {
          t.config_hash = val == "-" ? "" : val;
        } else if (key == "grid") {
          meta_n = static_cast<std::size_t>(parse_int(val, here));
        } else if (key == "hatch_mm") {
          t.grid.hatch_mm = *parse_opt(val, here);
        } else if (key == "origin_mm") {
          const auto p = split(val, ';');
          if (p.size() != 3) throw FormatError("origin_mm needs three components", here);
          t.grid.origin_mm = {*parse_opt(p[0], here), *parse_opt(p[1], here), *parse_opt(p[2], here)};
        } else if (key == "initial_mean_grain_volume_um3") {
          t.initial_mean_grain_volume_um3 = parse_opt(val, here);
        }
      }
      continue;
    }
    if (!header) {
      if (line != kRewardTableHeader) throw FormatError("unexpected reward table header", here);
      header = true;
      continue;
    }
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 7) throw FormatError("reward table row needs 7 columns", here);
    Row r;
    r.offset = here;
    r.entry.movement.from_index = static_cast<std::size_t>(parse_int(cells[0], here));
    try {
      r.entry.movement.action = parse_action(cells[1]);
    } catch (const InvalidArgument&) {
      throw FormatError("unknown action '" + cells[1] + "'", here);
    }
    r.entry.movement.to_index = parse_int(cells[2], here);
    r.entry.metrics.avg_aspect_ratio = parse_opt(cells[3], here);
    r.entry.metrics.avg_grain_volume_um3 = parse_opt(cells[4], here);
    r.entry.metrics.melted_voxels = cells[5].empty() ? 0 : static_cast<std::size_t>(parse_int(cells[5], here));
    if (cells[6] != "0" && cells[6] != "1") throw FormatError("valid flag must be 0 or 1", here);
    r.valid_flag = cells[6] == "1";
    rows.push_back(std::move(r));
  }
  if (!header) throw FormatError("reward table has no header", offset);
  const auto n = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rows.size()) / 4.0)));
  if (n < 2 || 4 * n * n != rows.size()) throw FormatError("row count is not 4 n^2 for a grid with n >= 2", offset);
  if (meta_n && *meta_n != n) throw FormatError("grid size in metadata disagrees with the row count", 0);
  t.grid.n = n;
  if (t.backend.empty()) t.backend = "unknown";
  const auto expected = enumerate_movements(t.grid);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& r = rows[i];
    if (!(r.entry.movement == expected[i])) throw FormatError("row does not match grid movement order", r.offset);
    if (r.valid_flag != r.entry.valid()) throw FormatError("valid flag disagrees with the row contents", r.offset);
    t.entries.push_back(r.entry);
  }
  return t;
}

}  // namespace meltpath

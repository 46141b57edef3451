#include "meltpath/experiment.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <json.hpp>

#include "meltpath/error.hpp"
#include "meltpath/field_io.hpp"
#include "meltpath/rng.hpp"

namespace meltpath {

namespace {

std::string num(std::optional<double> v) {
  if (!v) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", *v);
  return buf;
}

GrainField labels_only(GrainField g) {
  g.eta.clear();
  g.eta.shrink_to_fit();
  return g;
}

}  // namespace

GrainField initial_field(const ExperimentConfig& cfg) {
  return generate_voronoi_microstructure(cfg.domain(), cfg.voronoi_seeds, cfg.orientations,
                                         stream_seed(cfg.seed, "voronoi"));
}

std::string field_hash(const GrainField& field) {
  std::vector<std::int64_t> head{static_cast<std::int64_t>(field.spec.dims[0]),
                                 static_cast<std::int64_t>(field.spec.dims[1]),
                                 static_cast<std::int64_t>(field.spec.dims[2]), field.n_ori};
  std::uint64_t h = fnv1a64(head.data(), head.size() * sizeof(std::int64_t));
  const std::uint64_t body = fnv1a64(field.labels.data(), field.labels.size() * sizeof(std::int32_t));
  h ^= body + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return hex64(h);
}

ArmResult evaluate_path(const std::string& name, const ScanPath& path, const GrainField& base,
                        const ExperimentConfig& cfg) {
  ArmResult arm;
  arm.name = name;
  arm.path = path;
  TrackOptions opt = cfg.track;
  opt.collect_samples = false;
  opt.on_sample = nullptr;
  opt.workers = cfg.workers();
  TrackResult tr;
  arm.seconds = timed([&] { tr = run_track(base, path, cfg.laser, cfg.material, cfg.pf, opt); });
  const auto grains = label_grains(tr.final_field, &tr.melt, cfg.connectivity);
  arm.stats = stats(grains, cfg.min_volume_um3);
  arm.melted_voxels = tr.melt.count();
  arm.unsolidified = tr.unsolidified;
  arm.steps = tr.steps;
  return arm;
}

ComparisonReport run_compare(const ExperimentConfig& cfg, const GrainField& base, const ScanPath& reference,
                             const ScanPath& candidate) {
  ComparisonReport r;
  r.config_hash = cfg.hash();
  r.initial_field_hash = field_hash(base);
  r.reference = evaluate_path("zigzag", reference, base, cfg);
  r.candidate = evaluate_path("drl", candidate, base, cfg);
  const auto& a = r.reference.stats;
  const auto& b = r.candidate.stats;
  if (a.mean_aspect_ratio && b.mean_aspect_ratio) r.mean_aspect_delta = *b.mean_aspect_ratio - *a.mean_aspect_ratio;
  if (a.mean_volume_um3 && b.mean_volume_um3) r.mean_volume_delta_um3 = *b.mean_volume_um3 - *a.mean_volume_um3;
  return r;
}

void write_report(const std::filesystem::path& dir, const ComparisonReport& report) {
  std::filesystem::create_directories(dir);
  const std::vector<std::string> comment{"config_hash=" + report.config_hash,
                                         "initial_field_hash=" + report.initial_field_hash};
  std::ofstream out(dir / "compare_summary.csv", std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + (dir / "compare_summary.csv").string());
  for (const auto& c : comment) out << "# " << c << '\n';
  out << "arm,grain_count,aspect_count,mean_aspect_ratio,mean_volume_um3,melted_voxels,unsolidified,"
         "initial_field_hash\n";
  for (const ArmResult* arm : {&report.reference, &report.candidate}) {
    out << arm->name << ',' << arm->stats.grain_count << ',' << arm->stats.aspect_count << ','
        << num(arm->stats.mean_aspect_ratio) << ',' << num(arm->stats.mean_volume_um3) << ','
        << arm->melted_voxels << ',' << arm->unsolidified << ',' << report.initial_field_hash << '\n';
  }
  out << "delta,,," << num(report.mean_aspect_delta) << ',' << num(report.mean_volume_delta_um3) << ",,,"
      << report.initial_field_hash << '\n';
  if (!out) throw InvalidArgument("failed writing compare summary");
  for (const ArmResult* arm : {&report.reference, &report.candidate}) {
    write_histogram_csv(dir / (arm->name + "_aspect_hist.csv"), arm->stats.aspect_histogram, comment);
    write_histogram_csv(dir / (arm->name + "_volume_hist.csv"), arm->stats.volume_histogram, comment);
  }
}

void write_manifest(const std::filesystem::path& path, const VoiManifest& m) {
  nlohmann::ordered_json j;
  j["config_hash"] = m.config_hash;
  j["tracks"] = m.tracks;
  j["complete"] = m.complete;
  j["sample_count"] = m.samples.size();
  j["file_order"] = {"grain_t", "temperature_t", "temperature_next", "grain_next"};
  auto& arr = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : m.samples) {
    arr.push_back({{"id", s.id},
                   {"track", s.track},
                   {"power_W", s.power_W},
                   {"step", s.step},
                   {"transform", s.transform},
                   {"files", s.files}});
  }
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write " + tmp);
    out << j.dump(1) << '\n';
    if (!out) throw InvalidArgument("failed writing " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

VoiManifest export_voi_dataset(const ExperimentConfig& cfg, const GrainField& base, std::size_t tracks,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const DomainSpec spec = base.spec;
  VoiManifest manifest;
  manifest.config_hash = cfg.hash();
  const auto manifest_path = dir / "manifest.json";

  struct Pending {
    VoiWindow window;
    std::size_t step = 0;
    GrainField grain;
    TemperatureField temperature;
  };

  auto emit = [&](std::size_t track, double power, const Pending& prev, const GrainField& grain_next,
                  const TemperatureField& temp_next) {
    auto write_sample = [&](const std::string& transform, const GrainField& g0, const TemperatureField& t0,
                            const TemperatureField& t1, const GrainField& g1) {
      VoiSample s;
      s.id = manifest.samples.size();
      s.track = track;
      s.power_W = power;
      s.step = prev.step;
      s.transform = transform;
      char stem[32];
      std::snprintf(stem, sizeof stem, "sample_%06zu", s.id);
      s.files = {std::string(stem) + "_grain_t.vgf", std::string(stem) + "_temp_t.vgf",
                 std::string(stem) + "_temp_next.vgf", std::string(stem) + "_grain_next.vgf"};
      save_field(dir / s.files[0], g0, manifest.config_hash);
      save_field(dir / s.files[1], t0, manifest.config_hash);
      save_field(dir / s.files[2], t1, manifest.config_hash);
      save_field(dir / s.files[3], g1, manifest.config_hash);
      manifest.samples.push_back(std::move(s));
    };
    write_sample("identity", prev.grain, prev.temperature, temp_next, grain_next);
    if (!cfg.voi.augment) return;
    for (const auto& t : augmentation_transforms()) {
      write_sample(t.name(), apply_transform(t, prev.grain), apply_transform(t, prev.temperature),
                   apply_transform(t, temp_next), apply_transform(t, grain_next));
    }
  };

  try {
    for (std::size_t track = 0; track < tracks; ++track) {
      const double power = cfg.voi.powers_W[track % cfg.voi.powers_W.size()];
      const Vec3 ext = spec.extent_mm();
      ScanPath path;
      path.waypoints = {{0.1 * ext.x, 0.5 * ext.y, ext.z}, {0.9 * ext.x, 0.5 * ext.y, ext.z}};
      LaserParams laser = cfg.laser;
      laser.power_W = power;
      path.speed_m_s = laser.speed_m_s;
      path.power_W = power;

      TrackOptions opt = cfg.track;
      opt.total_steps = cfg.voi.steps;
      opt.settle_max_steps = 0;
      opt.sample_every = cfg.voi.sample_every;
      opt.collect_samples = false;
      opt.workers = cfg.workers();
      std::optional<Pending> prev;
      opt.on_sample = [&](const TrackSample& s) {
        if (s.step % cfg.voi.sample_every != 0 || s.step > cfg.voi.steps) return;
        if (prev) {
          emit(track, power, *prev, labels_only(extract(s.grains, prev->window)),
               extract(s.temperature, prev->window));
        }
        Pending next;
        next.window = voi_window(spec, s.laser_mm, cfg.voi.size_mm);
        next.step = s.step;
        next.grain = labels_only(extract(s.grains, next.window));
        next.temperature = extract(s.temperature, next.window);
        prev = std::move(next);
      };
      run_track(base, path, laser, cfg.material, cfg.pf, opt);
      ++manifest.tracks;
      write_manifest(manifest_path, manifest);
    }
  } catch (...) {
    write_manifest(manifest_path, manifest);
    throw;
  }
  manifest.complete = true;
  write_manifest(manifest_path, manifest);
  return manifest;
}

std::optional<double> RuntimeLedger::speedup() const {
  double dns_s = 0.0, sur_s = 0.0;
  std::size_t dns_n = 0, sur_n = 0;
  for (const auto& r : rows_) {
    if (r.steps == 0) continue;
    if (r.backend == "dns") {
      dns_s += r.seconds;
      dns_n += r.steps;
    } else if (r.backend == "surrogate") {
      sur_s += r.seconds;
      sur_n += r.steps;
    }
  }
  if (dns_n == 0 || sur_n == 0 || sur_s <= 0.0) return std::nullopt;
  return (dns_s / static_cast<double>(dns_n)) / (sur_s / static_cast<double>(sur_n));
}

void RuntimeLedger::write_csv(const std::filesystem::path& path, const std::string& config_hash) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << "# config_hash=" << config_hash << '\n';
  out << "stage,backend,seconds,steps,seconds_per_step,dns_over_surrogate\n";
  const std::string ratio = num(speedup());
  for (const auto& r : rows_) {
    out << r.stage << ',' << r.backend << ',' << num(r.seconds) << ',' << r.steps << ','
        << (r.steps ? num(r.seconds / static_cast<double>(r.steps)) : std::string()) << ',' << ratio << '\n';
  }
  if (!out) throw InvalidArgument("failed writing " + path.string());
}

RuntimeLedger RuntimeLedger::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string(), 0);
  RuntimeLedger ledger;
  std::string line;
  std::uint64_t offset = 0;
  bool header = false;
  while (std::getline(in, line)) {
    const std::uint64_t here = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "stage,backend,seconds,steps,seconds_per_step,dns_over_surrogate") {
        throw FormatError("unexpected ledger header", here);
      }
      header = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 4) throw FormatError("ledger row has too few columns", here);
    Row r;
    r.stage = cells[0];
    r.backend = cells[1];
    try {
      std::size_t used = 0;
      r.seconds = std::stod(cells[2], &used);
      if (used != cells[2].size()) throw std::invalid_argument("seconds");
      r.steps = std::stoull(cells[3], &used);
      if (used != cells[3].size()) throw std::invalid_argument("steps");
    } catch (const std::exception&) {
      throw FormatError("ledger row has a bad number", here);
    }
    ledger.add(std::move(r));
  }
  if (!header) throw FormatError("ledger has no header", offset);
  return ledger;
}

}  // namespace meltpath

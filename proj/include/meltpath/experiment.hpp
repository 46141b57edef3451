#pragma once

// End-to-end orchestration on top of the modules: the shared initial
// microstructure, path comparisons, VOI dataset export and the runtime ledger.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "meltpath/config.hpp"
#include "meltpath/morphology.hpp"

namespace meltpath {

/// Voronoi field for the configured domain; the generator seed derives from cfg.seed.
GrainField initial_field(const ExperimentConfig& cfg);
/// FNV-1a 64 over dims, orientation count and labels.
std::string field_hash(const GrainField& field);

struct ArmResult {
  std::string name;
  ScanPath path;
  MorphologyStats stats;
  std::size_t melted_voxels = 0;
  std::size_t unsolidified = 0;
  double seconds = 0.0;
  std::size_t steps = 0;
};

struct ComparisonReport {
  std::string config_hash;
  std::string initial_field_hash;
  ArmResult reference;  // zigzag
  ArmResult candidate;  // learned path
  /// candidate - reference; empty when either mean is undefined.
  std::optional<double> mean_aspect_delta;
  std::optional<double> mean_volume_delta_um3;
};

/// Simulates one path over `base` and measures the grains inside its melt.
ArmResult evaluate_path(const std::string& name, const ScanPath& path, const GrainField& base,
                        const ExperimentConfig& cfg);

/// Both arms start from the same `base`.
ComparisonReport run_compare(const ExperimentConfig& cfg, const GrainField& base, const ScanPath& reference,
                             const ScanPath& candidate);

/// Writes compare_summary.csv and one aspect/volume histogram CSV per arm.
void write_report(const std::filesystem::path& dir, const ComparisonReport& report);

struct VoiSample {
  std::size_t id = 0;
  std::size_t track = 0;
  double power_W = 0.0;
  std::size_t step = 0;
  std::string transform;  // "identity" for the unaugmented sample
  std::array<std::string, 4> files;  // grain t, temperature t, temperature t+k, grain t+k
};

struct VoiManifest {
  std::string config_hash;
  std::size_t tracks = 0;
  bool complete = false;
  std::vector<VoiSample> samples;
};

/// Single straight tracks through the domain centre at the configured powers
/// (track i uses powers[i % size]). VOIs follow the laser every
/// voi.sample_every steps; each consecutive pair of samples yields one sample
/// and, with augmentation on, 19 transformed copies. The manifest is rewritten
/// after every track so a failure leaves a consistent partial manifest.
VoiManifest export_voi_dataset(const ExperimentConfig& cfg, const GrainField& base, std::size_t tracks,
                               const std::filesystem::path& dir);
void write_manifest(const std::filesystem::path& path, const VoiManifest& m);

/// Wall-clock seconds per executed stage.
class RuntimeLedger {
 public:
  struct Row {
    std::string stage;
    std::string backend;  // "dns", "surrogate" or "-"
    double seconds = 0.0;
    std::size_t steps = 0;  // solver steps represented by the row, 0 if not applicable
  };

  void add(Row row) { rows_.push_back(std::move(row)); }
  const std::vector<Row>& rows() const { return rows_; }
  /// DNS over surrogate seconds per step; empty unless both backends logged steps.
  std::optional<double> speedup() const;
  /// Columns stage,backend,seconds,steps,seconds_per_step,dns_over_surrogate.
  void write_csv(const std::filesystem::path& path, const std::string& config_hash) const;
  /// Reads rows written by write_csv; throws FormatError when malformed.
  static RuntimeLedger read_csv(const std::filesystem::path& path);

 private:
  std::vector<Row> rows_;
};

/// Times a callable in seconds.
template <typename Fn>
double timed(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace meltpath

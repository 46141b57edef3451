#include "meltpath/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "meltpath/error.hpp"
#include "meltpath/parallel.hpp"

namespace meltpath {

namespace {

// Shortest text that parses back to the same double.
std::string fmt(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& s) {
  const char* b = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(b, &end);
  if (end == b || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError("'" + s + "' is not a finite number");
  }
  return v;
}

std::uint64_t to_unsigned(const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
    throw ConfigError("'" + s + "' is not a non-negative integer");
  }
  errno = 0;
  const auto v = std::strtoull(s.c_str(), nullptr, 10);
  if (errno == ERANGE) throw ConfigError("'" + s + "' is out of range");
  return v;
}

int to_int(const std::string& s) {
  const bool neg = !s.empty() && s[0] == '-';
  const auto mag = to_unsigned(neg ? s.substr(1) : s);
  if (mag > 1000000000ULL) throw ConfigError("'" + s + "' is out of range");
  return neg ? -static_cast<int>(mag) : static_cast<int>(mag);
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("'" + s + "' is not a boolean");
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    out.push_back(to_double(item));
  }
  return out;
}

std::string from_list(const double* v, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += (i ? "," : "") + fmt(v[i]);
  return out;
}

struct Key {
  std::string section;
  std::string name;
  bool hashed;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename Acc>
Key real(std::string sec, std::string name, Acc acc) {
  return {sec, name, true, [acc](const ExperimentConfig& c) { return fmt(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const std::string& v) { acc(c) = to_double(v); }};
}

template <typename Acc>
Key count(std::string sec, std::string name, Acc acc, bool hashed = true) {
  return {sec, name, hashed,
          [acc](const ExperimentConfig& c) { return std::to_string(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const std::string& v) {
            acc(c) = static_cast<std::remove_reference_t<decltype(acc(c))>>(to_unsigned(v));
          }};
}

template <typename Acc>
Key integer(std::string sec, std::string name, Acc acc) {
  return {sec, name, true,
          [acc](const ExperimentConfig& c) { return std::to_string(acc(const_cast<ExperimentConfig&>(c))); },
          [acc](ExperimentConfig& c, const std::string& v) { acc(c) = to_int(v); }};
}

template <typename Acc>
Key flag(std::string sec, std::string name, Acc acc) {
  return {sec, name, true,
          [acc](const ExperimentConfig& c) { return acc(const_cast<ExperimentConfig&>(c)) ? "true" : "false"; },
          [acc](ExperimentConfig& c, const std::string& v) { acc(c) = to_bool(v); }};
}

template <typename Acc>
Key triple(std::string sec, std::string name, Acc acc) {
  return {sec, name, true,
          [acc](const ExperimentConfig& c) {
            const auto& a = acc(const_cast<ExperimentConfig&>(c));
            return from_list(a.data(), a.size());
          },
          [acc](ExperimentConfig& c, const std::string& v) {
            const auto l = to_list(v);
            if (l.size() != 3) throw ConfigError("expected three comma-separated values, got '" + v + "'");
            std::copy(l.begin(), l.end(), acc(c).begin());
          }};
}

#define ACC(expr) [](ExperimentConfig& c) -> auto& { return expr; }

const std::vector<Key>& keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> v;
    v.push_back(count("run", "seed", ACC(c.seed)));
    v.push_back({"run", "output_dir", false, [](const ExperimentConfig& c) { return c.output_dir.string(); },
                 [](ExperimentConfig& c, const std::string& s) { c.output_dir = s; }});
    v.push_back(count("run", "threads", ACC(c.threads), false));

    v.push_back(triple("domain", "size_mm", ACC(c.domain_size_mm)));
    v.push_back(real("domain", "voxel_um", ACC(c.voxel_um)));
    v.push_back(count("domain", "voronoi_seeds", ACC(c.voronoi_seeds)));
    v.push_back({"domain", "orientations", true,
                 [](const ExperimentConfig& c) { return std::to_string(c.orientations); },
                 [](ExperimentConfig& c, const std::string& s) { c.pf.n_ori = c.orientations = to_int(s); }});

    v.push_back(real("material", "conductivity_W_mK", ACC(c.material.conductivity_W_mK)));
    v.push_back(real("material", "diffusivity_m2_s", ACC(c.material.diffusivity_m2_s)));
    v.push_back(real("material", "ambient_K", ACC(c.material.ambient_K)));
    v.push_back(real("material", "melt_K", ACC(c.material.melt_K)));
    v.push_back(real("material", "clamp_radius_um", ACC(c.material.clamp_radius_um)));
    v.push_back(real("material", "transition_band_K", ACC(c.material.transition_band_K)));

    v.push_back(real("laser", "power_W", ACC(c.laser.power_W)));
    v.push_back(real("laser", "speed_m_s", ACC(c.laser.speed_m_s)));

    v.push_back(real("phase_field", "sigma_J_m2", ACC(c.pf.sigma_J_m2)));
    v.push_back(real("phase_field", "mobility_m4_Js", ACC(c.pf.mobility_m4_Js)));
    v.push_back(real("phase_field", "gamma", ACC(c.pf.gamma)));
    v.push_back(real("phase_field", "boundary_width_um", ACC(c.pf.boundary_width_um)));
    v.push_back(real("phase_field", "dt_s", ACC(c.pf.dt_s)));
    v.push_back(real("phase_field", "stability_factor", ACC(c.pf.stability_factor)));
    v.push_back(real("phase_field", "activation_K", ACC(c.pf.activation_K)));
    v.push_back(real("phase_field", "mobility_cutoff", ACC(c.pf.mobility_cutoff)));

    v.push_back(count("track", "sample_every", ACC(c.track.sample_every)));
    v.push_back(real("track", "cooldown_s", ACC(c.track.cooldown_s)));
    v.push_back(count("track", "settle_max_steps", ACC(c.track.settle_max_steps)));

    v.push_back(count("grid", "n", ACC(c.grid_n)));
    v.push_back(real("grid", "hatch_mm", ACC(c.hatch_mm)));

    v.push_back(real("morphology", "min_volume_um3", ACC(c.min_volume_um3)));
    v.push_back(integer("morphology", "connectivity", ACC(c.connectivity)));

    v.push_back({"reward", "backend", true, [](const ExperimentConfig& c) { return c.backend; },
                 [](ExperimentConfig& c, const std::string& s) { c.backend = s; }});
    v.push_back(integer("reward", "case", ACC(c.reward.reward_case)));
    v.push_back(real("reward", "alpha", ACC(c.reward.alpha)));
    v.push_back(real("reward", "beta", ACC(c.reward.beta)));
    v.push_back(real("reward", "gv_scale_um3", ACC(c.reward.gv_scale_um3)));
    v.push_back(real("reward", "r_collision", ACC(c.reward.r_collision)));
    v.push_back(real("reward", "r_oob", ACC(c.reward.r_oob)));
    v.push_back(real("reward", "r_unvisited_per_point", ACC(c.reward.r_unvisited_per_point)));

    v.push_back(real("train", "lr", ACC(c.train.adam.lr)));
    v.push_back(real("train", "adam_beta1", ACC(c.train.adam.beta1)));
    v.push_back(real("train", "adam_beta2", ACC(c.train.adam.beta2)));
    v.push_back(real("train", "adam_eps", ACC(c.train.adam.eps)));
    v.push_back(real("train", "gamma", ACC(c.train.gamma)));
    v.push_back(real("train", "epsilon", ACC(c.train.eps_start)));
    v.push_back(real("train", "epsilon_min", ACC(c.train.eps_min)));
    v.push_back(real("train", "epsilon_decay", ACC(c.train.eps_decay)));
    v.push_back(count("train", "batch_size", ACC(c.train.batch_size)));
    v.push_back(count("train", "target_sync_every", ACC(c.train.target_sync_every)));
    v.push_back(count("train", "episodes", ACC(c.train.max_episodes)));
    v.push_back(count("train", "snapshot_every", ACC(c.train.snapshot_every)));
    v.push_back(count("train", "replay_capacity", ACC(c.train.replay_capacity)));
    v.push_back(count("train", "hidden", ACC(c.train.hidden)));

    v.push_back(triple("voi", "size_mm", ACC(c.voi.size_mm)));
    v.push_back({"voi", "powers_W", true,
                 [](const ExperimentConfig& c) { return from_list(c.voi.powers_W.data(), c.voi.powers_W.size()); },
                 [](ExperimentConfig& c, const std::string& s) { c.voi.powers_W = to_list(s); }});
    v.push_back(count("voi", "steps", ACC(c.voi.steps)));
    v.push_back(count("voi", "sample_every", ACC(c.voi.sample_every)));
    v.push_back(flag("voi", "augment", ACC(c.voi.augment)));
    return v;
  }();
  return k;
}

#undef ACC

const Key* find_key(const std::string& section, const std::string& name) {
  for (const auto& k : keys()) {
    if (k.section == section && k.name == name) return &k;
  }
  return nullptr;
}

void set_value(ExperimentConfig& cfg, const std::string& section, const std::string& name, const std::string& value) {
  const Key* k = find_key(section, name);
  if (!k) throw ConfigError("unknown key " + section + "." + name);
  try {
    k->set(cfg, value);
  } catch (const ConfigError& e) {
    throw ConfigError(section + "." + name + ": " + e.what());
  }
}

template <typename Fn>
void rethrow_as_config(const std::string& what, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

DomainSpec ExperimentConfig::domain() const { return DomainSpec::from_size(domain_size_mm, voxel_um); }

GridSpec ExperimentConfig::grid() const { return GridSpec::centered(domain(), grid_n, hatch_mm); }

MetricsOptions ExperimentConfig::metrics() const {
  MetricsOptions m;
  m.min_volume_um3 = min_volume_um3;
  m.connectivity = connectivity;
  m.track.cooldown_s = track.cooldown_s;
  m.track.settle_max_steps = track.settle_max_steps;
  m.track.collect_samples = false;
  return m;
}

std::size_t ExperimentConfig::workers() const {
  const std::size_t cap = default_workers();
  return threads == 0 ? cap : std::min(threads, cap);
}

void ExperimentConfig::validate() const {
  DomainSpec d;
  rethrow_as_config("domain", [&] { d = domain(); });
  if (voronoi_seeds == 0) throw ConfigError("domain.voronoi_seeds must be positive");
  if (orientations < 1) throw ConfigError("domain.orientations must be positive");
  if (pf.n_ori != orientations) throw ConfigError("phase-field orientation count differs from domain.orientations");
  rethrow_as_config("material", [&] { material.validate(); });
  rethrow_as_config("laser", [&] { laser.validate(); });
  rethrow_as_config("phase_field", [&] { pf.validate(pf.voxel_um_for(d)); });
  if (track.sample_every == 0) throw ConfigError("track.sample_every must be positive");
  if (grid_n == 0) throw ConfigError("grid.n must be positive");
  rethrow_as_config("grid", [&] { grid().validate(d); });
  if (!(min_volume_um3 >= 0.0)) throw ConfigError("morphology.min_volume_um3 must be non-negative");
  if (connectivity != 6 && connectivity != 26) throw ConfigError("morphology.connectivity must be 6 or 26");
  parse_backend(backend);
  reward.validate();
  train.validate();
  for (double s : voi.size_mm) {
    if (!(s > 0.0)) throw ConfigError("voi.size_mm must be positive");
  }
  if (voi.powers_W.empty()) throw ConfigError("voi.powers_W must not be empty");
  for (double p : voi.powers_W) {
    if (!(p > 0.0)) throw ConfigError("voi.powers_W must be positive");
  }
  if (voi.sample_every == 0 || voi.steps < voi.sample_every) {
    throw ConfigError("voi.steps must be at least voi.sample_every > 0");
  }
}

std::string ExperimentConfig::canonical() const {
  std::vector<std::string> lines;
  for (const auto& k : keys()) {
    if (k.hashed) lines.push_back(k.section + "." + k.name + "=" + k.get(*this));
  }
  lines.push_back("schema.version=" + std::to_string(kConfigSchemaVersion));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string ExperimentConfig::hash() const {
  const std::string c = canonical();
  return hex64(fnv1a64(c.data(), c.size()));
}

ExperimentConfig parse_config(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  ExperimentConfig cfg;
  bool have_schema = false;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' is outside any section");
    for (const auto& [name, value] : body) {
      const std::string v = value.get_value<std::string>();
      if (section == "schema") {
        if (name != "version") throw ConfigError("unknown key schema." + name);
        if (v != std::to_string(kConfigSchemaVersion)) {
          throw ConfigError("config schema version " + v + " is not supported (expected " +
                            std::to_string(kConfigSchemaVersion) + ")");
        }
        have_schema = true;
        continue;
      }
      set_value(cfg, section, name, v);
    }
  }
  if (!have_schema) throw ConfigError("config lacks [schema] version");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: '" + assignment + "'");
  }
  set_value(cfg, assignment.substr(0, dot), assignment.substr(dot + 1, eq - dot - 1), assignment.substr(eq + 1));
}

std::string to_ini(const ExperimentConfig& cfg) {
  std::string out = "[schema]\nversion = " + std::to_string(kConfigSchemaVersion) + "\n";
  std::string section;
  for (const auto& k : keys()) {
    if (k.section != section) {
      section = k.section;
      out += "\n[" + section + "]\n";
    }
    out += k.name + " = " + k.get(cfg) + "\n";
  }
  return out;
}

}  // namespace meltpath

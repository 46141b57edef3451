#include "meltpath/scanpath.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "meltpath/error.hpp"

namespace meltpath {

namespace {

constexpr double kEps = 1e-9;

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::up: return "Up";
    case Action::down: return "Down";
    case Action::left: return "Left";
    case Action::right: return "Right";
  }
  return "?";
}

Action parse_action(std::string_view s) {
  if (s == "Up" || s == "up" || s == "U") return Action::up;
  if (s == "Down" || s == "down" || s == "D") return Action::down;
  if (s == "Left" || s == "left" || s == "L") return Action::left;
  if (s == "Right" || s == "right" || s == "R") return Action::right;
  throw InvalidArgument("unknown action '" + std::string(s) + "'");
}

// --- ScanPath ------------------------------------------------------------------

double ScanPath::length_mm() const {
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) len += (waypoints[i] - waypoints[i - 1]).norm();
  return len;
}

double ScanPath::duration_s() const { return length_mm() * 1e-3 / speed_m_s; }

std::vector<double> ScanPath::waypoint_times() const {
  std::vector<double> t(waypoints.size(), 0.0);
  double len = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    len += (waypoints[i] - waypoints[i - 1]).norm();
    t[i] = len * 1e-3 / speed_m_s;
  }
  return t;
}

ScanPath::State ScanPath::at(double t) const {
  if (waypoints.empty()) throw InvalidArgument("empty scan path");
  const double total = duration_s();
  if (!(t >= 0.0 && t <= total + 1e-15)) throw InvalidArgument("time lies outside the path duration");
  if (waypoints.size() == 1) return {waypoints[0], {1.0, 0.0, 0.0}, 0};
  const auto times = waypoint_times();
  std::size_t seg = 0;
  while (seg + 2 < waypoints.size() && t >= times[seg + 1]) ++seg;
  const Vec3 a = waypoints[seg];
  const Vec3 b = waypoints[seg + 1];
  const Vec3 d = b - a;
  const double len = d.norm();
  const double span = times[seg + 1] - times[seg];
  const double frac = span > 0.0 ? std::clamp((t - times[seg]) / span, 0.0, 1.0) : 0.0;
  return {a + frac * d, (1.0 / len) * d, seg};
}

void ScanPath::validate(const DomainSpec& domain) const {
  if (waypoints.empty()) throw InvalidArgument("scan path has no waypoints");
  if (!(speed_m_s > 0.0)) throw InvalidArgument("scan speed must be positive");
  if (!(power_W > 0.0)) throw InvalidArgument("laser power must be positive");
  const Vec3 ext = domain.extent_mm();
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const Vec3 p = waypoints[i];
    if (p.x < -kEps || p.y < -kEps || p.z < -kEps || p.x > ext.x + kEps || p.y > ext.y + kEps ||
        p.z > ext.z + kEps) {
      throw InvalidArgument("waypoint " + std::to_string(i) + " lies outside the domain");
    }
    if (i > 0 && (p - waypoints[i - 1]).norm() <= kEps) {
      throw InvalidArgument("waypoints " + std::to_string(i - 1) + " and " + std::to_string(i) + " coincide");
    }
  }
}

// --- GridSpec --------------------------------------------------------------------

GridSpec GridSpec::centered(const DomainSpec& domain, std::size_t n, double hatch_mm) {
  const Vec3 ext = domain.extent_mm();
  const double span = static_cast<double>(n - 1) * hatch_mm;
  GridSpec g{n, hatch_mm, {(ext.x - span) / 2.0, (ext.y - span) / 2.0, ext.z}};
  g.validate(domain);
  return g;
}

Vec3 GridSpec::point(std::size_t index) const {
  const double col = static_cast<double>(index % n);
  const double row = static_cast<double>(index / n);
  return {origin_mm.x + col * hatch_mm, origin_mm.y + row * hatch_mm, origin_mm.z};
}

std::optional<std::size_t> GridSpec::neighbor(std::size_t index, Action a) const {
  const std::size_t row = index / n;
  const std::size_t col = index % n;
  switch (a) {
    case Action::up: return row + 1 < n ? std::optional(index + n) : std::nullopt;
    case Action::down: return row > 0 ? std::optional(index - n) : std::nullopt;
    case Action::left: return col > 0 ? std::optional(index - 1) : std::nullopt;
    case Action::right: return col + 1 < n ? std::optional(index + 1) : std::nullopt;
  }
  return std::nullopt;
}

void GridSpec::validate(const DomainSpec& domain) const {
  if (n < 2) throw InvalidArgument("grid needs at least 2 points per side");
  if (!(hatch_mm > 0.0)) throw InvalidArgument("hatch spacing must be positive");
  const Vec3 ext = domain.extent_mm();
  const double span = static_cast<double>(n - 1) * hatch_mm;
  if (origin_mm.x < -kEps || origin_mm.y < -kEps || origin_mm.x + span > ext.x + kEps ||
      origin_mm.y + span > ext.y + kEps || origin_mm.z < -kEps || origin_mm.z > ext.z + kEps) {
    throw InvalidArgument("grid does not fit in the domain");
  }
}

// --- generators ----------------------------------------------------------------

namespace {

struct Span {
  double lo, hi;
  std::size_t count;  // hatch-spaced lines inside
};

Span hatch_span(double extent, double hatch, double margin) {
  if (!(hatch > 0.0)) throw InvalidArgument("hatch spacing must be positive");
  if (hatch > extent + kEps) throw InvalidArgument("hatch spacing is wider than the domain");
  if (margin < 0.0) {
    const auto n = static_cast<std::size_t>(std::floor(extent / hatch + kEps)) + 1;
    margin = (extent - static_cast<double>(n - 1) * hatch) / 2.0;
  }
  const double usable = extent - 2.0 * margin;
  if (usable < -kEps) throw InvalidArgument("margin leaves no room for the pattern");
  const auto n = static_cast<std::size_t>(std::floor(std::max(usable, 0.0) / hatch + kEps)) + 1;
  return {margin, extent - margin, n};
}

void push(ScanPath& p, Vec3 v, bool jog) {
  if (!p.waypoints.empty() && (v - p.waypoints.back()).norm() <= kEps) return;
  if (!p.waypoints.empty()) p.jog.push_back(jog ? 1 : 0);
  p.waypoints.push_back(v);
}

ScanPath empty_path(const PatternOptions& opt) {
  ScanPath p;
  p.speed_m_s = opt.speed_m_s;
  p.power_W = opt.power_W;
  return p;
}

}  // namespace

ScanPath vertical_serpentine(const DomainSpec& domain, double hatch_mm, const PatternOptions& opt) {
  const Vec3 ext = domain.extent_mm();
  const Span xs = hatch_span(ext.x, hatch_mm, opt.margin_mm);
  const double my = opt.margin_mm < 0.0 ? hatch_span(ext.y, hatch_mm, -1.0).lo : opt.margin_mm;
  const double y0 = my;
  const double y1 = ext.y - my;
  if (y1 - y0 <= kEps) throw InvalidArgument("domain too short for a serpentine column");
  ScanPath p = empty_path(opt);
  for (std::size_t k = 0; k < xs.count; ++k) {
    const double x = xs.lo + static_cast<double>(k) * hatch_mm;
    const bool upward = k % 2 == 0;
    push(p, {x, upward ? y0 : y1, ext.z}, true);
    push(p, {x, upward ? y1 : y0, ext.z}, false);
  }
  return p;
}

ScanPath spiral_clockwise(const DomainSpec& domain, double hatch_mm, const PatternOptions& opt) {
  const Vec3 ext = domain.extent_mm();
  const Span xs = hatch_span(ext.x, hatch_mm, opt.margin_mm);
  const Span ys = hatch_span(ext.y, hatch_mm, opt.margin_mm < 0.0 ? -1.0 : opt.margin_mm);
  double left = xs.lo, right = xs.hi, bottom = ys.lo, top = ys.hi;
  ScanPath p = empty_path(opt);
  Vec3 at{left, top, ext.z};
  push(p, at, false);
  // Right, down, left, up; each completed edge pulls the opposite bound inward.
  for (int dir = 0;; dir = (dir + 1) % 4) {
    Vec3 next = at;
    double travel = 0.0;
    switch (dir) {
      case 0: next.x = right; travel = right - at.x; break;
      case 1: next.y = bottom; travel = at.y - bottom; break;
      case 2: next.x = left; travel = at.x - left; break;
      case 3: next.y = top; travel = top - at.y; break;
    }
    if (travel <= kEps) break;
    push(p, next, false);
    at = next;
    switch (dir) {
      case 0: top -= hatch_mm; break;
      case 1: right -= hatch_mm; break;
      case 2: bottom += hatch_mm; break;
      case 3: left += hatch_mm; break;
    }
  }
  return p;
}

ScanPath diagonal(const DomainSpec& domain, double hatch_mm, const PatternOptions& opt) {
  const Vec3 ext = domain.extent_mm();
  if (!(hatch_mm > 0.0)) throw InvalidArgument("hatch spacing must be positive");
  const double margin = std::max(opt.margin_mm, 0.0);
  const double x0 = margin, x1 = ext.x - margin, y0 = margin, y1 = ext.y - margin;
  if (x1 - x0 <= kEps || y1 - y0 <= kEps) throw InvalidArgument("margin leaves no room for the pattern");
  const double root2 = std::sqrt(2.0);
  const double s_lo = (x0 + y0) / root2;
  const double s_hi = (x1 + y1) / root2;
  const double extent = s_hi - s_lo;
  if (hatch_mm > extent + kEps) throw InvalidArgument("hatch spacing is wider than the domain");
  const auto passes = static_cast<std::size_t>(std::ceil(extent / hatch_mm - kEps));
  const double mid = (s_lo + s_hi) / 2.0;

  ScanPath p = empty_path(opt);
  for (std::size_t k = 0; k < passes; ++k) {
    const double s = mid + (static_cast<double>(k) - static_cast<double>(passes - 1) / 2.0) * hatch_mm;
    const double c = s * root2;  // line x + y = c
    const double xa = std::max(x0, c - y1);
    const double xb = std::min(x1, c - y0);
    const Vec3 upper_left{xa, c - xa, ext.z};
    const Vec3 lower_right{xb, c - xb, ext.z};
    const bool forward = k % 2 == 0;
    const Vec3 start = forward ? upper_left : lower_right;
    const Vec3 end = forward ? lower_right : upper_left;
    if (!p.waypoints.empty()) {
      // Jog along the boundary, turning the corner when the endpoints sit on different edges.
      const Vec3 prev = p.waypoints.back();
      const bool same_edge = std::abs(prev.x - start.x) <= kEps || std::abs(prev.y - start.y) <= kEps;
      if (!same_edge) {
        const Vec3 corner = forward ? Vec3{x0, y1, ext.z} : Vec3{x1, y0, ext.z};
        push(p, corner, true);
      }
    }
    push(p, start, true);
    push(p, end, false);
  }
  return p;
}

ScanPath path_from_actions(const GridSpec& grid, std::span<const Action> actions, double speed_m_s,
                           double power_W) {
  ScanPath p;
  p.speed_m_s = speed_m_s;
  p.power_W = power_W;
  std::vector<std::uint8_t> visited(grid.point_count(), 0);
  std::size_t at = 0;
  visited[at] = 1;
  p.waypoints.push_back(grid.point(at));
  for (std::size_t k = 0; k < actions.size(); ++k) {
    const auto next = grid.neighbor(at, actions[k]);
    if (!next) throw InvalidPath("action " + std::string(action_name(actions[k])) + " leaves the grid", k);
    if (visited[*next]) throw InvalidPath("action " + std::string(action_name(actions[k])) + " revisits a point", k);
    visited[*next] = 1;
    at = *next;
    p.waypoints.push_back(grid.point(at));
    p.jog.push_back(0);
  }
  return p;
}

std::vector<Action> serpentine_actions(std::size_t n) {
  std::vector<Action> a;
  for (std::size_t col = 0; col < n; ++col) {
    const Action along = col % 2 == 0 ? Action::up : Action::down;
    for (std::size_t i = 0; i + 1 < n; ++i) a.push_back(along);
    if (col + 1 < n) a.push_back(Action::right);
  }
  return a;
}

// --- CSV -------------------------------------------------------------------------

void write_path_csv(const std::filesystem::path& path, const ScanPath& scan,
                    const std::vector<std::string>& comment) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open '" + path.string() + "' for writing");
  for (const auto& c : comment) out << "# " << c << '\n';
  out << "x_mm,y_mm,z_mm,t_s,power_W\n";
  const auto times = scan.waypoint_times();
  for (std::size_t i = 0; i < scan.waypoints.size(); ++i) {
    const Vec3 w = scan.waypoints[i];
    out << fmt_double(w.x) << ',' << fmt_double(w.y) << ',' << fmt_double(w.z) << ','
        << fmt_double(times[i]) << ',' << fmt_double(scan.power_W) << '\n';
  }
}

ScanPath read_path_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path.string() + "'");
  std::string line;
  bool header = false;
  ScanPath p;
  std::vector<double> times;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const std::uint64_t here = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "x_mm,y_mm,z_mm,t_s,power_W") throw FormatError("unexpected path CSV header", here);
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    std::array<double, 5> v{};
    for (std::size_t k = 0; k < 5; ++k) {
      if (!std::getline(ss, cell, ',')) throw FormatError("path CSV row has fewer than 5 columns", here);
      try {
        v[k] = std::stod(cell);
      } catch (...) {
        throw FormatError("path CSV cell is not a number", here);
      }
    }
    p.waypoints.push_back({v[0], v[1], v[2]});
    times.push_back(v[3]);
    p.power_W = v[4];
  }
  if (!header) throw FormatError("path CSV has no header", offset);
  if (p.waypoints.empty()) throw FormatError("path CSV has no waypoints", offset);
  if (p.waypoints.size() >= 2 && times.back() > 0.0) {
    p.speed_m_s = p.length_mm() * 1e-3 / times.back();
  }
  p.jog.assign(p.segment_count(), 0);
  return p;
}

}  // namespace meltpath

#include "meltpath/phase_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "meltpath/error.hpp"
#include "meltpath/parallel.hpp"
#include "meltpath/simd/kernels.hpp"

namespace meltpath {

double PFParams::stability_limit_s(double voxel_um) const {
  const double dx = voxel_um * 1e-6;
  return dx * dx / (L_g() * kappa_g());
}

double PFParams::time_step(double voxel_um) const {
  return dt_s > 0.0 ? dt_s : stability_factor * stability_limit_s(voxel_um);
}

void PFParams::validate(double voxel_um) const {
  if (!(sigma_J_m2 > 0.0) || !(mobility_m4_Js > 0.0) || !(gamma > 0.0) || !(boundary_width_um > 0.0)) {
    throw InvalidArgument("phase-field constants must be positive");
  }
  if (n_ori < 1) throw InvalidArgument("need at least one orientation");
  if (!(voxel_um > 0.0)) throw InvalidArgument("voxel size must be positive");
  if (!(stability_factor > 0.0) || stability_factor > 0.25) {
    throw InvalidArgument("stability factor must lie in (0, 0.25]");
  }
  if (!(dt_s >= 0.0)) throw InvalidArgument("time step must not be negative");
  if (dt_s > 0.25 * stability_limit_s(voxel_um)) throw InvalidArgument("time step exceeds the explicit stability bound");
  // Bulk stiffness 2m adds to the 12κ/dx² Laplacian eigenvalue; coarse grids (dx near l/2) need both.
  const double dx = voxel_um * 1e-6;
  const double stiff = time_step(voxel_um) * L_g() * (12.0 * kappa_g() / (dx * dx) + 2.0 * m_g());
  if (stiff > 2.0) throw InvalidArgument("time step exceeds the explicit stability bound including bulk stiffness");
  if (!(activation_K >= 0.0)) throw InvalidArgument("activation temperature must not be negative");
  if (!(mobility_cutoff >= 0.0) || mobility_cutoff >= 1.0) throw InvalidArgument("mobility cutoff must lie in [0, 1)");
}

std::vector<double> bulk_derivative(std::span<const double> eta, double zeta, const PFParams& p) {
  double s = 0.0;
  for (double e : eta) s += e * e;
  const double d = 1.0 - zeta;
  const double zt = 2.0 * (d * d);
  std::vector<double> out(eta.size());
  for (std::size_t i = 0; i < eta.size(); ++i) {
    const double e = eta[i];
    const double others = s - e * e;
    out[i] = p.m_g() * (e * e * e - e + 2.0 * p.gamma * e * others + zt * e);
  }
  return out;
}

double zeta_value(double kelvin, const MaterialThermal& mat) {
  if (kelvin >= mat.melt_K) return 0.0;
  const double solidus = mat.melt_K - mat.transition_band_K;
  if (kelvin <= solidus) return 1.0;
  return (mat.melt_K - kelvin) / mat.transition_band_K;
}

SolidIndicator zeta_from_temperature(const TemperatureField& t, const MaterialThermal& mat, GrainField* erase) {
  if (erase && !(erase->spec == t.spec)) throw InvalidArgument("grain and temperature fields differ in domain");
  SolidIndicator s(t.spec, 1.0);
  const std::size_t n = t.spec.voxel_count();
  for (std::size_t v = 0; v < n; ++v) {
    s.zeta[v] = zeta_value(t.kelvin[v], mat);
    if (erase && s.zeta[v] == 0.0) {
      for (int c = 0; c < erase->n_ori && erase->has_eta(); ++c) erase->channel(c)[v] = 0.0;
      erase->labels[v] = kLiquid;
    }
  }
  return s;
}

double mobility_factor(double kelvin, const MaterialThermal& mat, const PFParams& p) {
  if (p.activation_K == 0.0) return 1.0;
  const double solidus = mat.melt_K - mat.transition_band_K;
  if (kelvin >= solidus) return 1.0;
  const double f = std::exp(-p.activation_K * (1.0 / kelvin - 1.0 / solidus));
  return f < p.mobility_cutoff ? 0.0 : f;
}

double mobility_cutoff_K(const MaterialThermal& mat, const PFParams& p) {
  if (p.activation_K == 0.0 || p.mobility_cutoff == 0.0) return mat.ambient_K;
  const double solidus = mat.melt_K - mat.transition_band_K;
  const double t = 1.0 / (1.0 / solidus + std::log(1.0 / p.mobility_cutoff) / p.activation_K);
  return std::max(t, mat.ambient_K);
}

// --- stepping ---------------------------------------------------------------------

namespace {

bool any_nonzero(const double* row, std::size_t begin, std::size_t end) {
  for (std::size_t x = begin; x < end; ++x) {
    if (row[x] != 0.0) return true;
  }
  return false;
}

}  // namespace

void sum_squares_box(const GrainField& field, const Box& box, std::vector<double>& out, std::size_t workers) {
  if (!field.has_eta()) throw InvalidArgument("grain field has no order parameters");
  const DomainSpec& spec = field.spec;
  const std::size_t ex = box.extent(0), ey = box.extent(1);
  const std::size_t rows = ey * box.extent(2);
  out.assign(box.volume(), 0.0);
  const auto& k = simd::active();
  parallel_for(rows, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t v = spec.index(box.lo[0], box.lo[1] + r % ey, box.lo[2] + r / ey);
      for (int c = 0; c < field.n_ori; ++c) k.sum_squares_acc(field.channel(c) + v, out.data() + r * ex, ex);
    }
  });
}

void step_box(GrainField& field, const Box& box, std::span<const double> zeta, std::span<const double> mobility,
              const PFParams& p, PFWorkspace& ws, std::size_t workers) {
  if (!field.has_eta()) throw InvalidArgument("grain field has no order parameters");
  if (field.n_ori != p.n_ori) throw InvalidArgument("orientation count differs from the solver parameters");
  if (box.empty()) return;
  const DomainSpec& spec = field.spec;
  for (int a = 0; a < 3; ++a) {
    if (box.hi[a] > spec.dims[a]) throw InvalidArgument("step box exceeds the domain");
  }
  const std::size_t bv = box.volume();
  if (zeta.size() != bv || mobility.size() != bv) throw InvalidArgument("box buffers do not match the box");
  const double vox = p.voxel_um_for(spec);
  p.validate(vox);

  const std::size_t nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  const std::size_t n = spec.voxel_count();
  const std::size_t ex = box.extent(0), ey = box.extent(1), ez = box.extent(2);
  const std::size_t rows = ey * ez;
  const int n_ori = field.n_ori;
  const double base_rate = p.time_step(vox) * p.L_g();
  const double dx = vox * 1e-6;

  sum_squares_box(field, box, ws.sum_squares, workers);
  ws.zeta_term.resize(bv);
  ws.rate.resize(bv);
  ws.next.resize(bv * static_cast<std::size_t>(n_ori));
  for (std::size_t i = 0; i < bv; ++i) {
    const double d = 1.0 - zeta[i];
    ws.zeta_term[i] = 2.0 * (d * d);
    ws.rate[i] = base_rate * mobility[i];
  }

  const auto& k = simd::active();
  const double* eta = field.eta.data();
  auto row_start = [&](std::size_t y, std::size_t z) { return spec.index(0, y, z); };

  simd::AllenCahnRow proto{};
  proto.nx = nx;
  proto.x_begin = box.lo[0];
  proto.x_end = box.hi[0];
  proto.m_g = p.m_g();
  proto.two_gamma = 2.0 * p.gamma;
  proto.kappa = p.kappa_g();
  proto.inv_dx2 = 1.0 / (dx * dx);

  // nonzero[c][row] over the box grown by one voxel: does channel c have any
  // non-zero value on that x-row within one voxel of the box?
  const std::size_t gy0 = box.lo[1] == 0 ? 0 : box.lo[1] - 1, gy1 = std::min(ny, box.hi[1] + 1);
  const std::size_t gz0 = box.lo[2] == 0 ? 0 : box.lo[2] - 1, gz1 = std::min(nz, box.hi[2] + 1);
  const std::size_t gx0 = box.lo[0] == 0 ? 0 : box.lo[0] - 1, gx1 = std::min(nx, box.hi[0] + 1);
  const std::size_t gy = gy1 - gy0, grows = gy * (gz1 - gz0);
  ws.nonzero.resize(static_cast<std::size_t>(n_ori) * grows);
  ws.live.resize(static_cast<std::size_t>(n_ori) * rows);
  for (int c = 0; c < n_ori; ++c) {
    const double* base = eta + static_cast<std::size_t>(c) * n;
    for (std::size_t g = 0; g < grows; ++g) {
      const double* row = base + row_start(gy0 + g % gy, gz0 + g / gy);
      ws.nonzero[static_cast<std::size_t>(c) * grows + g] = any_nonzero(row, gx0, gx1);
    }
  }
  auto grown = [&](std::size_t y, std::size_t z) { return (y - gy0) + gy * (z - gz0); };

  parallel_for(rows, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      const std::size_t y = box.lo[1] + r % ey;
      const std::size_t z = box.lo[2] + r / ey;
      const std::size_t ym = y == 0 ? y : y - 1;
      const std::size_t yp = y + 1 == ny ? y : y + 1;
      const std::size_t zm = z == 0 ? z : z - 1;
      const std::size_t zp = z + 1 == nz ? z : z + 1;
      for (int c = 0; c < n_ori; ++c) {
        // A channel that vanishes on the whole stencil stays exactly zero.
        const std::uint8_t* nzc = ws.nonzero.data() + static_cast<std::size_t>(c) * grows;
        const bool live = nzc[grown(y, z)] || nzc[grown(ym, z)] || nzc[grown(yp, z)] || nzc[grown(y, zm)] ||
                          nzc[grown(y, zp)];
        ws.live[static_cast<std::size_t>(c) * rows + r] = live;
        if (!live) continue;
        const double* base = eta + static_cast<std::size_t>(c) * n;
        simd::AllenCahnRow row = proto;
        row.center = base + row_start(y, z);
        row.y_minus = base + row_start(ym, z);
        row.y_plus = base + row_start(yp, z);
        row.z_minus = base + row_start(y, zm);
        row.z_plus = base + row_start(y, zp);
        row.sum_squares = ws.sum_squares.data() + r * ex;
        row.zeta_term = ws.zeta_term.data() + r * ex;
        row.rate = ws.rate.data() + r * ex;
        row.out = ws.next.data() + (static_cast<std::size_t>(c) * rows + r) * ex;
        k.allen_cahn_row(row);
      }
    }
  });

  // Rows that were skipped are zero before and after, so only live rows are
  // checked and copied back.
  std::size_t bad = std::numeric_limits<std::size_t>::max();
  ws.change.assign(bv, 0.0);
  for (int c = 0; c < n_ori; ++c) {
    for (std::size_t r = 0; r < rows; ++r) {
      if (!ws.live[static_cast<std::size_t>(c) * rows + r]) continue;
      const double* src = ws.next.data() + (static_cast<std::size_t>(c) * rows + r) * ex;
      const double* dst = field.channel(c) + row_start(box.lo[1] + r % ey, box.lo[2] + r / ey) + box.lo[0];
      double* change = ws.change.data() + r * ex;
      for (std::size_t i = 0; i < ex; ++i) {
        const double d = std::abs(src[i] - dst[i]);
        if (!(d <= std::numeric_limits<double>::max())) {
          bad = std::min(bad, row_start(box.lo[1] + r % ey, box.lo[2] + r / ey) + box.lo[0] + i);
          break;
        }
        change[i] = std::max(change[i], d);
      }
    }
  }
  if (bad != std::numeric_limits<std::size_t>::max()) throw NumericFailure("non-finite order parameter", bad);

  for (int c = 0; c < n_ori; ++c) {
    for (std::size_t r = 0; r < rows; ++r) {
      if (!ws.live[static_cast<std::size_t>(c) * rows + r]) continue;
      const double* src = ws.next.data() + (static_cast<std::size_t>(c) * rows + r) * ex;
      double* dst = field.channel(c) + row_start(box.lo[1] + r % ey, box.lo[2] + r / ey) + box.lo[0];
      std::memcpy(dst, src, ex * sizeof(double));
    }
  }
  field.recompute_labels(box);
}

void step_in_place(GrainField& field, const SolidIndicator& zeta, const PFParams& p, std::size_t workers) {
  if (!(zeta.spec == field.spec)) throw InvalidArgument("solid indicator and grain field differ in domain");
  const std::vector<double> ones(field.voxel_count(), 1.0);
  PFWorkspace ws;
  step_box(field, field.spec.full_box(), zeta.zeta, ones, p, ws, workers);
}

GrainField step(const GrainField& field, const SolidIndicator& zeta, const PFParams& p) {
  GrainField out = field;
  step_in_place(out, zeta, p);
  return out;
}

double free_energy(const GrainField& field, const SolidIndicator& zeta, const PFParams& p) {
  if (!field.has_eta()) throw InvalidArgument("grain field has no order parameters");
  if (!(zeta.spec == field.spec)) throw InvalidArgument("solid indicator and grain field differ in domain");
  const DomainSpec& spec = field.spec;
  const double dx = p.voxel_um_for(spec) * 1e-6;
  const double dv = dx * dx * dx;
  const std::size_t n = spec.voxel_count();
  const double m = p.m_g();
  const double half_kappa = 0.5 * p.kappa_g() / (dx * dx);

  double bulk = 0.0;
  for (std::size_t v = 0; v < n; ++v) {
    double s2 = 0.0, s4 = 0.0, well = 0.0;
    for (int c = 0; c < field.n_ori; ++c) {
      const double e = field.channel(c)[v];
      const double e2 = e * e;
      s2 += e2;
      s4 += e2 * e2;
      well += 0.25 * e2 * e2 - 0.5 * e2;
    }
    const double d = 1.0 - zeta.zeta[v];
    const double cross = 0.5 * p.gamma * (s2 * s2 - s4);
    bulk += m * (well + cross + 0.25 + d * d * s2);
  }

  double grad = 0.0;
  const std::size_t nx = spec.dims[0], ny = spec.dims[1], nz = spec.dims[2];
  for (int c = 0; c < field.n_ori; ++c) {
    const double* e = field.channel(c);
    for (std::size_t z = 0; z < nz; ++z) {
      for (std::size_t y = 0; y < ny; ++y) {
        for (std::size_t x = 0; x < nx; ++x) {
          const std::size_t v = spec.index(x, y, z);
          if (x + 1 < nx) grad += (e[v + 1] - e[v]) * (e[v + 1] - e[v]);
          if (y + 1 < ny) grad += (e[v + nx] - e[v]) * (e[v + nx] - e[v]);
          if (z + 1 < nz) grad += (e[v + nx * ny] - e[v]) * (e[v + nx * ny] - e[v]);
        }
      }
    }
  }
  return dv * (bulk + half_kappa * grad);
}

// --- tracks -----------------------------------------------------------------------

namespace {

Box bounding_union(const Box& a, const Box& b) {
  if (a.empty()) return b;
  if (b.empty()) return a;
  Box u;
  for (int k = 0; k < 3; ++k) {
    u.lo[k] = std::min(a.lo[k], b.lo[k]);
    u.hi[k] = std::max(a.hi[k], b.hi[k]);
  }
  return u;
}

}  // namespace

SourceState source_at(const ScanPath& path, double t, double power_W, double cooldown_s) {
  const double duration = path.duration_s();
  if (t <= duration) {
    const auto s = path.at(std::max(t, 0.0));
    return {s.position, s.direction, power_W};
  }
  const auto s = path.at(duration);
  const double frac = cooldown_s > 0.0 ? 1.0 - (t - duration) / cooldown_s : 0.0;
  return {s.position, s.direction, frac > 0.0 ? power_W * frac : 0.0};
}

double default_cooldown_s(const LaserParams& laser, const MaterialThermal& mat) {
  return 2.0 * isotherm_radius_mm(mat.melt_K, laser, mat) * 1e-3 / laser.speed_m_s;
}

TrackResult run_track(const GrainField& initial, const ScanPath& path_in, const LaserParams& laser,
                      const MaterialThermal& mat_in, const PFParams& p, const TrackOptions& opt) {
  const DomainSpec& spec = initial.spec;
  const double vox = p.voxel_um_for(spec);
  p.validate(vox);
  laser.validate();
  const MaterialThermal mat = mat_in.resolved(spec);
  mat.validate();
  if (opt.sample_every == 0) throw InvalidArgument("sample interval must be positive");
  ScanPath path = path_in;
  path.speed_m_s = laser.speed_m_s;
  path.power_W = laser.power_W;
  path.validate(spec);

  TrackResult res;
  res.final_field = initial;
  GrainField& field = res.final_field;
  if (!field.has_eta()) field.init_eta_from_labels();
  res.melt = MeltMask(spec);
  res.dt_s = p.time_step(vox);
  const double cooldown = opt.cooldown_s < 0.0 ? default_cooldown_s(laser, mat) : opt.cooldown_s;
  res.steps = opt.total_steps > 0
                  ? opt.total_steps
                  : static_cast<std::size_t>(std::ceil((path.duration_s() + cooldown) / res.dt_s));

  const bool full_box = p.activation_K == 0.0 || opt.full_domain_thermal;
  const double active_K = mobility_cutoff_K(mat, p);

  auto sample = [&](std::size_t n) {
    if (!opt.collect_samples && !opt.on_sample) return;
    TrackSample s;
    s.step = n;
    s.time_s = static_cast<double>(n) * res.dt_s;
    const SourceState src = source_at(path, s.time_s, laser.power_W, cooldown);
    s.laser_mm = src.position_mm;
    s.power_W = src.power_W;
    s.grains = field;
    if (src.power_W > 0.0) {
      s.temperature = evaluate_field(spec, src.position_mm, src.direction, {src.power_W, laser.speed_m_s}, mat,
                                     opt.workers);
    } else {
      s.temperature = TemperatureField(spec, static_cast<float>(mat.ambient_K));
    }
    if (opt.on_sample) opt.on_sample(s);
    if (opt.collect_samples) res.samples.push_back(std::move(s));
  };

  // pending[v]: melted and not yet regrown and settled. Such voxels evolve at
  // full mobility wherever the source is.
  std::vector<std::uint8_t> pending(spec.voxel_count(), 0);
  Box pending_box;
  PFWorkspace ws;
  std::vector<double> temp, zeta, mob;
  std::size_t n = 0;
  for (; n < res.steps || (!pending_box.empty() && n < res.steps + opt.settle_max_steps); ++n) {
    if (n % opt.sample_every == 0) sample(n);
    const SourceState src = source_at(path, static_cast<double>(n) * res.dt_s, laser.power_W, cooldown);
    const LaserParams lp{src.power_W, laser.speed_m_s};
    const bool heated = src.power_W > 0.0;

    Box box;
    if (full_box || (heated && active_K <= mat.ambient_K) || (!heated && mobility_factor(mat.ambient_K, mat, p) > 0.0)) {
      box = spec.full_box();
    } else {
      if (heated) box = source_box(spec, src.position_mm, src.direction, active_K, lp, mat);
      box = bounding_union(box, pending_box);
    }
    if (box.empty()) continue;
    const std::size_t bv = box.volume();
    temp.resize(bv);
    if (heated) {
      evaluate_box(spec, box, src.position_mm, src.direction, lp, mat, temp.data(), opt.workers);
    } else {
      std::fill(temp.begin(), temp.end(), mat.ambient_K);
    }
    zeta.resize(bv);
    std::size_t i = 0;
    for (std::size_t z = box.lo[2]; z < box.hi[2]; ++z) {
      for (std::size_t y = box.lo[1]; y < box.hi[1]; ++y) {
        for (std::size_t x = box.lo[0]; x < box.hi[0]; ++x, ++i) {
          zeta[i] = zeta_value(temp[i], mat);
          if (zeta[i] == 0.0) {
            const std::size_t v = spec.index(x, y, z);
            for (int c = 0; c < field.n_ori; ++c) field.channel(c)[v] = 0.0;
            field.labels[v] = kLiquid;
            pending[v] = 1;
          }
        }
      }
    }
    accumulate_melt(res.melt, box, temp.data(), mat);
    mob.resize(bv);
    i = 0;
    for (std::size_t z = box.lo[2]; z < box.hi[2]; ++z) {
      for (std::size_t y = box.lo[1]; y < box.hi[1]; ++y) {
        for (std::size_t x = box.lo[0]; x < box.hi[0]; ++x, ++i) {
          mob[i] = pending[spec.index(x, y, z)] ? 1.0 : mobility_factor(temp[i], mat, p);
        }
      }
    }
    step_box(field, box, zeta, mob, p, ws, opt.workers);

    Box still_pending{box.hi, box.lo};
    i = 0;
    for (std::size_t z = box.lo[2]; z < box.hi[2]; ++z) {
      for (std::size_t y = box.lo[1]; y < box.hi[1]; ++y) {
        for (std::size_t x = box.lo[0]; x < box.hi[0]; ++x, ++i) {
          const std::size_t v = spec.index(x, y, z);
          if (!pending[v]) continue;
          if (ws.change[i] < kSettleTolerance && ws.sum_squares[i] >= kRegrownSumSquares) {
            pending[v] = 0;
            continue;
          }
          const Index3 at{x, y, z};
          for (int a = 0; a < 3; ++a) {
            still_pending.lo[a] = std::min(still_pending.lo[a], at[a]);
            still_pending.hi[a] = std::max(still_pending.hi[a], at[a] + 1);
          }
        }
      }
    }
    pending_box = still_pending.empty() ? Box{} : still_pending;
  }
  res.steps = n;
  res.unsolidified = static_cast<std::size_t>(std::count(pending.begin(), pending.end(), std::uint8_t{1}));
  sample(res.steps);
  return res;
}

}  // namespace meltpath

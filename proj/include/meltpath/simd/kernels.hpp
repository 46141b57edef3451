#pragma once

// Data-parallel inner loops with a scalar reference implementation and an AVX2
// variant. Every AVX2 kernel performs the same IEEE operations in the same order
// as its scalar twin (no FMA, no reassociation), so the two agree bit for bit.

#include <cstddef>
#include <string_view>

namespace meltpath::simd {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

/// One x-row of the explicit Allen-Cahn update for a single order parameter.
///
/// `center`, `y_minus`, `y_plus`, `z_minus`, `z_plus` point at full domain rows
/// (index by x); the y/z neighbours are already clamped for zero-flux walls.
/// `sum_squares`, `zeta_term`, `rate` and `out` are box rows indexed by x - x_begin.
struct AllenCahnRow {
  const double* center;
  const double* y_minus;
  const double* y_plus;
  const double* z_minus;
  const double* z_plus;
  const double* sum_squares;  // sum over all channels of eta^2
  const double* zeta_term;    // 2 (1 - zeta)^2
  const double* rate;         // dt * L_g * local mobility factor
  double* out;
  std::size_t nx;
  std::size_t x_begin;
  std::size_t x_end;
  double m_g;
  double two_gamma;
  double kappa;
  double inv_dx2;
};

/// Rosenthal temperatures for a run of points along x (all lengths in metres).
struct RosenthalRow {
  double x_origin;    // point i sits at x_origin + (first_index + i) * spacing
  double spacing;
  std::size_t first_index;
  std::size_t count;
  double laser_x;
  double offset_y;    // point.y - laser.y (constant along the row)
  double offset_z;    // point.z - laser.z
  double dir_x, dir_y, dir_z;
  double amplitude;   // Q / (2 pi k)
  double decay;       // v / (2 alpha)
  double clamp_radius;
  double ambient;
  double* out;
};

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^t
  double bias2;  // 1 - beta2^t
};

struct Kernels {
  Isa isa;
  /// c[m x n] += a[m x k] * b[k x n], row-major; zero entries of `a` are skipped.
  void (*gemm_acc)(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
                   std::size_t n);
  /// acc[i] += x[i] * x[i]
  void (*sum_squares_acc)(const double* x, double* acc, std::size_t n);
  void (*relu)(double* x, std::size_t n);
  /// grad[i] = activation[i] > 0 ? grad[i] : 0
  void (*relu_backward)(const double* activation, double* grad, std::size_t n);
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n,
               const AdamStep& step);
  void (*allen_cahn_row)(const AllenCahnRow& row);
  void (*rosenthal_row)(const RosenthalRow& row);
};

const Kernels& scalar_kernels();
/// Null when the library was built without AVX2 support.
const Kernels* avx2_kernels();

bool isa_supported(Isa isa);
/// Best supported ISA, unless overridden by MELTPATH_SIMD=scalar|avx2.
Isa default_isa();
/// Kernel table in use; selected once at first call, changeable with set_active_isa.
const Kernels& active();
/// Throws InvalidArgument when the ISA is not supported on this CPU/build.
void set_active_isa(Isa isa);

}  // namespace meltpath::simd

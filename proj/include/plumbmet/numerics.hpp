#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace plumbmet {

/// Tridiagonal system a[i]*x[i-1] + b[i]*x[i] + c[i]*x[i+1] = r[i].
/// Thomas elimination; throws std::runtime_error on a vanishing pivot.
std::vector<double> solve_tridiagonal(std::span<const double> sub,
                                      std::span<const double> diag,
                                      std::span<const double> sup,
                                      std::span<const double> rhs);

std::vector<std::complex<double>> solve_tridiagonal(
    std::span<const double> sub, std::span<const double> diag,
    std::span<const double> sup,
    std::span<const std::complex<double>> rhs);

/// Tridiagonal system whose first and last rows may touch one extra
/// entry (x[2] resp. x[n-3]); used for three-point endpoint closures.
/// The extra entries are eliminated against the neighbouring rows first.
struct BorderedTridiagonal {
  std::vector<double> sub, diag, sup;
  double first_extra = 0.0;  // coefficient of x[2] in row 0
  double last_extra = 0.0;   // coefficient of x[n-3] in row n-1

  std::vector<double> solve(std::span<const double> rhs) const;
  /// y = A x for the same sparsity pattern.
  std::vector<double> apply(std::span<const double> x) const;
};

/// Smallest eigenvalue of a symmetric tridiagonal matrix via Sturm
/// sequence bisection, to absolute tolerance tol.
double tridiag_smallest_eigenvalue(std::span<const double> diag,
                                   std::span<const double> off,
                                   double tol = 1e-12);

/// Smallest singular value of a BorderedTridiagonal via inverse power
/// iteration on A^T A.
double smallest_singular_value(const BorderedTridiagonal& A, int iters = 60);

/// In-place radix-2 FFT, data.size() must be a power of two.
void fft(std::vector<std::complex<double>>& data, bool inverse);

/// Composite Simpson rule on [a,b] with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b,
               int n);

/// Least-squares slope of log(y) against log(x); ignores y <= floor.
double fitted_exponent(std::span<const double> x, std::span<const double> y,
                       double floor = 0.0);

/// Least-squares polynomial fit of degree `deg` over the first `m`
/// samples of (x, y); returns the coefficients c0..c_deg.
std::vector<double> polyfit_prefix(std::span<const double> x,
                                   std::span<const double> y, int deg, int m);

/// Quadratic extrapolation of a cell-centered array to the left edge
/// (coordinate 0 at half a cell before x[0], uniform spacing).
double extrapolate_left_edge(std::span<const double> v);
double extrapolate_right_edge(std::span<const double> v);

/// Cubic (Catmull-Rom) interpolation of samples on a uniform grid
/// x[i] = x0 + (i + 1/2) h; exact at the nodes, clamped linear beyond
/// the first/last cell centers.
double interp_cells(std::span<const double> v, double x0, double h, double x);

/// Smooth transition profile: 1 on [0,1/2], 0 on [1,inf), strictly
/// decreasing in between and infinitely flat at both junctions.
/// Built from u -> exp(-1/u).
double smoothstep_profile(double y);
double smoothstep_profile_d1(double y);
double smoothstep_profile_d2(double y);

/// sin(pi m)^2 / (pi m)^2 with a stable series near m = 0.
double sinc2_pi(double m);
/// (sinc2_pi(m) - 1)/m^2, stable near m = 0.
double sinc2_pi_m1_over_m2(double m);

/// Deterministic xorshift-based generator for property checks.
struct SplitMix64 {
  std::uint64_t state;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}
  std::uint64_t next();
  /// uniform in [lo, hi)
  double uniform(double lo, double hi);
};

}  // namespace plumbmet

#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "plumbmet/charts.hpp"
#include "plumbmet/laplacian.hpp"

namespace plumbmet {

/// Cell-centered face grids for the corner calculus: the cusp face
/// carries x in (0, x_max], the front face mu in (0, 1).
struct FaceGrids {
  int n_x = 0, n_mu = 0;
  double x_max = 0.0, hx = 0.0, hmu = 0.0;
  std::vector<double> x, mu;

  static std::shared_ptr<const FaceGrids> make(int n_x, int n_mu);
};

using Samples = std::shared_ptr<const std::vector<double>>;

/// One term  coef * s_t^j * mu^a * x^b * X^k * Y^l * cI(x) * cII(mu)
/// with X = log mu, Y = log x and s_t = x mu.  Null samples mean 1.
/// The term set represents a symmetric function through the half-fiber
/// rule: points with mu > 1/2 evaluate at the mirrored coordinates.
struct LogTerm {
  int j = 0, a = 0, b = 0, k = 0, l = 0;
  double coef = 1.0;
  Samples cI, cII;
};

/// Bi-graded polynomial in (X, Y) with face-sampled coefficients.
struct LogPoly {
  std::shared_ptr<const FaceGrids> grids;
  std::vector<LogTerm> terms;

  bool empty() const { return terms.empty(); }
  int degree() const;        // max k + l
  int max_log_rhoI() const;  // max k
  int max_log_rhoII() const; // max l
  int min_pow_rhoI() const;  // min a (+j)
  int min_pow_rhoII() const; // min b (+j)
};

LogPoly poly_add(const LogPoly& p, const LogPoly& q);
LogPoly poly_scale(const LogPoly& p, double c);
LogPoly poly_mul(const LogPoly& p, const LogPoly& q);
/// Merge exactly matching terms and drop zero terms.
void poly_compress(LogPoly& p);

/// Evaluate at a fiber point: s = log|z| on the fiber of log|t| = L.
double poly_eval(const LogPoly& p, double L, double s);
/// Evaluate at the chart coordinates (x, mu) directly, mu <= 1/2.
double poly_eval_chart(const LogPoly& p, double x, double mu);

LogPoly constant_poly(std::shared_ptr<const FaceGrids> grids, double c);
LogPoly face_BI_poly(std::shared_ptr<const FaceGrids> grids,
                     const std::vector<double>& cI, int b = 1);

/// (Delta0 + 2) applied through the exact term calculus of the model
/// (plumbing) operator 2 - S(mu) (D^2 + D), D = x d/dx - mu d/dmu.
LogPoly apply_model_operator(const LogPoly& p);

/// Structured solve on the cusp face: forcing x * (polynomial in Y with
/// x-sampled coefficients); the log degree may rise by one through the
/// resonance of the x^1 forcing power with the indicial root 1.
/// dirichlet_data pins the log-free component at x = x_max.
LogPoly solve_model_BI(const LogPoly& g, double dirichlet_data = 0.0);

/// Structured solve on the front face: forcing polynomial in X with
/// mu-sampled coefficients; level 0 is the face operator (roots 2, -1,
/// resonance bump at rho_I^2), level 1 the conjugated operator
/// (roots 3, 0, bump at rho_I^3).
LogPoly solve_model_BII(const LogPoly& h, int conjugation_level);

/// One order-reduction: f in x P^k + mu x P^{k+1}  ->  u with
/// (Delta0+2) u - f one s_t order smaller.  Throws on grading
/// violations of the input.
struct ReductionResult {
  LogPoly solution;
  LogPoly remainder;  // class s_t (x P^{k+1} + mu x P^{k+2})
};
ReductionResult reduction_step(const LogPoly& f, double dirichlet_data = 0.0);

/// Formal series sum_j s_t^{j0+j} u_j.
struct TaylorLogSeries {
  int j0 = 0;
  std::vector<LogPoly> coeff;

  int orders() const { return int(coeff.size()); }
};

TaylorLogSeries series_add(const TaylorLogSeries& a, const TaylorLogSeries& b,
                           int j_cap);
TaylorLogSeries series_mul(const TaylorLogSeries& a, const TaylorLogSeries& b,
                           int j_cap);

/// Iterated reduction: solves (Delta0+2) u = f order by order, dividing
/// each remainder by s_t = x mu.  boundary_data[m] pins the log-free
/// component of order m at x = x_max.
TaylorLogSeries linear_expand(const LogPoly& f, int n_orders,
                              const std::vector<double>& boundary_data = {});
/// final_remainder, when given, receives the last order's remainder, so
/// that (Delta0+2)(sum) - f = s_t^{n_orders-1} * final_remainder exactly
/// in the term calculus.
TaylorLogSeries series_solve(const TaylorLogSeries& f, int n_orders,
                             const std::vector<double>& boundary_data = {},
                             LogPoly* final_remainder = nullptr);

/// Curvature-equation series: g[0] = -(Delta0+2)^{-1} defect with
/// defect = s_t^2 * defect_coeff, then the quadratic-and-higher
/// exponential corrections g[i].
std::vector<TaylorLogSeries> nonlinear_expand(const LogPoly& defect_coeff,
                                              int n_terms, int inner_orders,
                                              double boundary_data);

double series_eval(const TaylorLogSeries& u, double L, double s,
                   int max_order = -1);

/// Evaluate at a resolved point through its chart coordinates; throws
/// when the point lies outside the coefficient grids.
double series_eval_point(const TaylorLogSeries& u, const BlowupPoint& p,
                         int max_order = -1);

/// Exact rational coefficients 2^j / j! of the exponential series.
struct ExpPowerSeries {
  static std::pair<std::int64_t, std::int64_t> coefficient(int j);
  static double coefficient_d(int j);
};

/// Grading check: every term of u lies in
///   x P^{K}  +  mu^min_corner_a x P^{K+1, K}_II,
/// i.e. b+j >= 1 always, and per term either k+l <= K or
/// a+j >= min_corner_a with k+l <= K+1 and l <= K.
bool check_grading(const LogPoly& u, int K, int min_corner_a = 1);

/// Closed-form coefficient of s_t^2 in the grafted curvature defect,
/// sampled on the cusp-face grid.
std::vector<double> defect_leading_coefficient(
    const FaceGrids& grids, const Cutoff& cutoff);

/// The same coefficient as a LogPoly of class rho_II P^0 whose value on
/// the cusp face equals defect_leading_coefficient.
LogPoly defect_poly(std::shared_ptr<const FaceGrids> grids,
                    const Cutoff& cutoff);

/// Boundary-data coefficient of s_t^2 for the conformal factor at the
/// truncation circle: pi^2 / (6 x_max^2).
double defect_boundary_data(const FaceGrids& grids);

}  // namespace plumbmet

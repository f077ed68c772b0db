#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "plumbmet/expansion.hpp"
#include "plumbmet/laplacian.hpp"
#include "plumbmet/metrics.hpp"

namespace plumbmet {

enum class SolveMethod { Newton, KMap };

enum class BoundaryData { Oracle, Zero };

/// Prescribed-curvature problem on one fiber: find f with
/// Delta_h f + R(h) + e^{2f} = 0, f pinned at the truncation circles.
struct CurvatureProblem {
  std::complex<double> t;
  MetricKind base = MetricKind::Grafted;
  Cutoff cutoff;
  int n_radial = 512;
  int m_angular = 1;
  SolveMethod method = SolveMethod::Newton;
  BoundaryData data = BoundaryData::Oracle;
  double tol_residual = 1e-12;
  double tol_step = 1e-13;
  int max_iterations = 25;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;  // max norm per iterate
  double max_f = 0.0;
  double max_residual = 0.0;
  std::optional<double> oracle_error;  // max |f - f_exact| when available
  bool converged = false;
  std::string failure;
  double wall_ms = 0.0;
};

struct SolveOutput {
  MetricField h;         // the base metric used
  std::vector<double> f; // conformal factor at the cell centers
  SolveReport report;
};

/// Delta_h f + R(h) + e^{2f} at the cell centers.
std::vector<double> curvature_residual(const std::vector<double>& f,
                                       const MetricField& h,
                                       const std::vector<double>& R_h,
                                       double bc_lo, double bc_hi);

SolveOutput newton_solve(const CurvatureProblem& p);

/// Newton iteration on a caller-supplied base metric and curvature,
/// with Dirichlet values for f at the two circles.
SolveOutput newton_solve_custom(const MetricField& h,
                                const std::vector<double>& R_h, double bc_lo,
                                double bc_hi, double tol_residual = 1e-12,
                                double tol_step = 1e-13, int max_iter = 25);

/// Paper-style fixed point f = f0 + ftilde,
/// ftilde <- (Delta+2)^{-1}(-(2 ftilde (e^{2f0}-1)
///           + e^{2f0}(e^{2 ftilde}-1-2 ftilde) + r0)),
/// r0 the residual of f0.  f0 is an evaluated series (or zero).
SolveOutput kmap_solve(const CurvatureProblem& p,
                       const TaylorLogSeries* f0_series = nullptr,
                       double* contraction_factor = nullptr);

struct SweepRow {
  double t_abs = 0.0;
  double s_t = 0.0;
  int n = 0, m = 0;
  std::string method;
  int iterations = 0;
  double max_f = 0.0;
  double max_residual = 0.0;
  double oracle_error = 0.0;
  bool ok = false;
  std::string note;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double fit_exponent_f = 0.0;          // max|f| against s_t
  double fit_exponent_f_minus_g1 = 0.0; // max|f - g1| against s_t
};

/// Solve the problem template at each |t|, decreasing; fits the decay
/// exponents of max|f| and of max|f - g1| against s_t.  g1 is the
/// leading curvature-series term evaluated on each fiber.
SweepResult sweep(const std::vector<double>& t_abs_list,
                  CurvatureProblem tmpl, int series_orders = 3,
                  int face_cells = 1024, int jobs = 1);

/// Exact conformal factor of the graft oracle sampled on the grid.
std::vector<double> oracle_factor(const MetricField& h);

}  // namespace plumbmet

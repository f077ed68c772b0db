#include "plumbmet/solver.hpp"

#include <chrono>
#include <cmath>
#include <future>
#include <stdexcept>

namespace plumbmet {

namespace {

double density_at(MetricKind kind, double s, double L, const Cutoff& cutoff) {
  switch (kind) {
    case MetricKind::Plumbing: return plumbing_density(s / L, L);
    case MetricKind::CuspExtension: return cusp_extension_density(s, L);
    case MetricKind::Grafted: return grafted_density(s, L, cutoff);
    default: throw std::invalid_argument("density_at: analytic kinds only");
  }
}

// boundary values of the oracle conformal factor at the circle faces
std::pair<double, double> oracle_bc(const CurvatureProblem& p, double L) {
  if (p.data == BoundaryData::Zero) return {0.0, 0.0};
  const auto dom = fiber_chart_L(L);
  auto f_exact = [&](double s) {
    return std::log(plumbing_density(s / L, L)) -
           std::log(density_at(p.base, s, L, p.cutoff));
  };
  return {f_exact(dom.s_lo), f_exact(dom.s_hi)};
}

// -lambda^{-2} D^2 f with Dirichlet ghost folding
std::vector<double> fiber_laplacian(const MetricField& h,
                                    const std::vector<double>& f,
                                    double bc_lo, double bc_hi) {
  const int n = h.grid.n;
  const double dh = h.grid.h;
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    const double fm =
        (i == 0) ? 2.0 * bc_lo - f[0] : f[i - 1];
    const double fp =
        (i == n - 1) ? 2.0 * bc_hi - f[n - 1] : f[i + 1];
    const double lam = h.density[i];
    out[i] = -(fm - 2.0 * f[i] + fp) / (dh * dh * lam * lam);
  }
  return out;
}

}  // namespace

std::vector<double> curvature_residual(const std::vector<double>& f,
                                       const MetricField& h,
                                       const std::vector<double>& R_h,
                                       double bc_lo, double bc_hi) {
  const int n = h.grid.n;
  if (int(f.size()) != n || int(R_h.size()) != n)
    throw std::invalid_argument("curvature_residual: size mismatch");
  auto lap = fiber_laplacian(h, f, bc_lo, bc_hi);
  std::vector<double> r(n);
  for (int i = 0; i < n; ++i)
    r[i] = lap[i] + R_h[i] + std::exp(2.0 * f[i]);
  return r;
}

std::vector<double> oracle_factor(const MetricField& h) {
  std::vector<double> f(h.grid.n);
  for (int i = 0; i < h.grid.n; ++i)
    f[i] = std::log(plumbing_density(h.grid.mu[i], h.grid.dom.L)) -
           std::log(h.density[i]);
  return f;
}

namespace {

struct NewtonCore {
  std::vector<double> f;
  SolveReport report;
};

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

NewtonCore newton_core(const MetricField& h, const std::vector<double>& R_h,
                       double bc_lo, double bc_hi, double tol_res,
                       double tol_step, int max_iter) {
  const int n = h.grid.n;
  const double dh = h.grid.h;
  NewtonCore out;
  out.f.assign(n, 0.0);
  // start from the boundary-compatible linear interpolant of the data
  for (int i = 0; i < n; ++i) {
    const double s = (h.grid.s[i] - h.grid.dom.s_lo) /
                     (h.grid.dom.s_hi - h.grid.dom.s_lo);
    out.f[i] = bc_lo + (bc_hi - bc_lo) * s;
  }
  const auto t0 = std::chrono::steady_clock::now();
  for (int it = 0; it < max_iter; ++it) {
    auto res = curvature_residual(out.f, h, R_h, bc_lo, bc_hi);
    const double rn = max_abs(res);
    out.report.residual_history.push_back(rn);
    out.report.iterations = it;
    if (rn <= tol_res) {
      out.report.converged = true;
      break;
    }
    // (Delta + 2 e^{2f}) delta = -residual, delta = 0 at the circles
    std::vector<double> sub(n), diag(n), sup(n), rhs(n);
    for (int i = 0; i < n; ++i) {
      const double lam = h.density[i];
      const double w = 1.0 / (dh * dh * lam * lam);
      sub[i] = -w;
      sup[i] = -w;
      diag[i] = 2.0 * w + 2.0 * std::exp(2.0 * out.f[i]);
      if (i == 0) {
        diag[i] += w;
        sub[i] = 0.0;
      }
      if (i == n - 1) {
        diag[i] += w;
        sup[i] = 0.0;
      }
      rhs[i] = -res[i];
    }
    auto delta = solve_tridiagonal(sub, diag, sup, rhs);
    for (int i = 0; i < n; ++i) out.f[i] += delta[i];
    if (max_abs(delta) <= tol_step) {
      auto res2 = curvature_residual(out.f, h, R_h, bc_lo, bc_hi);
      out.report.residual_history.push_back(max_abs(res2));
      out.report.converged = true;
      out.report.iterations = it + 1;
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.report.wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (!out.report.converged)
    out.report.failure = "newton did not reach tolerance";
  auto res = curvature_residual(out.f, h, R_h, bc_lo, bc_hi);
  out.report.max_residual = max_abs(res);
  out.report.max_f = max_abs(out.f);
  return out;
}

}  // namespace

SolveOutput newton_solve_custom(const MetricField& h,
                                const std::vector<double>& R_h, double bc_lo,
                                double bc_hi, double tol_residual,
                                double tol_step, int max_iter) {
  auto core = newton_core(h, R_h, bc_lo, bc_hi, tol_residual, tol_step,
                          max_iter);
  return {h, std::move(core.f), std::move(core.report)};
}

SolveOutput newton_solve(const CurvatureProblem& p) {
  const double L = std::log(std::abs(p.t));
  MetricField h = make_metric(p.t, p.base, p.n_radial, GridKind::UniformMu,
                              p.cutoff);
  auto R_h = gauss_curvature(h, CurvatureMethod::AnalyticDerivative);
  auto [lo, hi] = oracle_bc(p, L);
  auto core = newton_core(h, R_h, lo, hi, p.tol_residual, p.tol_step,
                          p.max_iterations);
  auto fe = oracle_factor(h);
  double err = 0.0;
  for (int i = 0; i < h.grid.n; ++i)
    err = std::max(err, std::abs(core.f[i] - fe[i]));
  core.report.oracle_error = err;
  return {std::move(h), std::move(core.f), std::move(core.report)};
}

SolveOutput kmap_solve(const CurvatureProblem& p,
                       const TaylorLogSeries* f0_series,
                       double* contraction_factor) {
  const double L = std::log(std::abs(p.t));
  MetricField h = make_metric(p.t, p.base, p.n_radial, GridKind::UniformMu,
                              p.cutoff);
  const int n = h.grid.n;
  auto R_h = gauss_curvature(h, CurvatureMethod::AnalyticDerivative);
  auto [lo, hi] = oracle_bc(p, L);

  std::vector<double> f0(n, 0.0);
  double f0_lo = 0.0, f0_hi = 0.0;
  if (f0_series) {
    for (int i = 0; i < n; ++i)
      f0[i] = series_eval(*f0_series, L, h.grid.s[i]);
    f0_lo = series_eval(*f0_series, L, h.grid.dom.s_lo);
    f0_hi = series_eval(*f0_series, L, h.grid.dom.s_hi);
  }
  auto r0 = curvature_residual(f0, h, R_h, f0_lo, f0_hi);

  // (Delta + 2) with Dirichlet data ftilde = bc - f0 at the circles
  ModeOperator op = assemble_fiber_mode(
      h, 0, {BcKind::Dirichlet, lo - f0_lo}, {BcKind::Dirichlet, hi - f0_hi});

  SolveOutput out;
  out.report.converged = false;
  std::vector<double> ft(n, 0.0), prev_step;
  double prev_norm = 0.0, factor = 0.0;
  int grow = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int it = 0; it < p.max_iterations; ++it) {
    std::vector<double> rhs(n);
    for (int i = 0; i < n; ++i) {
      const double e0 = std::exp(2.0 * f0[i]);
      const double ef = std::exp(2.0 * ft[i]);
      rhs[i] = -(2.0 * ft[i] * (e0 - 1.0) + e0 * (ef - 1.0 - 2.0 * ft[i]) +
                 r0[i]);
    }
    auto next = solve_mode(op, rhs);
    double step = 0.0;
    for (int i = 0; i < n; ++i) step = std::max(step, std::abs(next[i] - ft[i]));
    ft = std::move(next);
    out.report.iterations = it + 1;
    out.report.residual_history.push_back(step);
    if (it > 0 && prev_norm > 1e-300) {
      const double ratio = step / prev_norm;
      if (step > 1e2 * 1e-16) factor = std::max(factor, ratio);
      if (ratio > 1.0) {
        if (++grow >= 3) {
          out.report.failure = "kmap diverging";
          break;
        }
      } else {
        grow = 0;
      }
    }
    prev_norm = step;
    if (step <= p.tol_step) {
      out.report.converged = true;
      break;
    }
  }
  const auto t1 = std::chrono::steady_clock::now();
  out.report.wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (contraction_factor) *contraction_factor = factor;

  out.f.resize(n);
  for (int i = 0; i < n; ++i) out.f[i] = f0[i] + ft[i];
  auto res = curvature_residual(out.f, h, R_h, lo, hi);
  out.report.max_residual = max_abs(res);
  out.report.max_f = max_abs(out.f);
  auto fe = oracle_factor(h);
  double err = 0.0;
  for (int i = 0; i < n; ++i)
    err = std::max(err, std::abs(out.f[i] - fe[i]));
  out.report.oracle_error = err;
  out.h = std::move(h);
  return out;
}

SweepResult sweep(const std::vector<double>& t_abs_list, CurvatureProblem tmpl,
                  int series_orders, int face_cells, int jobs) {
  SweepResult result;
  // leading series term of the curvature expansion, shared across t
  auto grids = FaceGrids::make(face_cells, face_cells);
  TaylorLogSeries g1;
  if (tmpl.base == MetricKind::Grafted) {
    g1 = nonlinear_expand(defect_poly(grids, tmpl.cutoff), 1, series_orders,
                          defect_boundary_data(*grids))[0];
  }

  auto run_one = [&](double ta) {
    SweepRow row;
    row.t_abs = ta;
    row.s_t = ilog(ta);
    row.n = tmpl.n_radial;
    row.m = tmpl.m_angular;
    row.method = tmpl.method == SolveMethod::Newton ? "newton" : "kmap";
    double diff_g1 = 0.0;
    try {
      CurvatureProblem p = tmpl;
      p.t = ta;
      SolveOutput sol = (p.method == SolveMethod::Newton)
                            ? newton_solve(p)
                            : kmap_solve(p);
      row.iterations = sol.report.iterations;
      row.max_f = sol.report.max_f;
      row.max_residual = sol.report.max_residual;
      row.oracle_error = sol.report.oracle_error.value_or(0.0);
      row.ok = sol.report.converged;
      if (!sol.report.failure.empty()) row.note = sol.report.failure;
      if (tmpl.base == MetricKind::Grafted) {
        const double L = std::log(ta);
        for (int i = 0; i < sol.h.grid.n; ++i) {
          const double g = series_eval(g1, L, sol.h.grid.s[i]);
          diff_g1 = std::max(diff_g1, std::abs(sol.f[i] - g));
        }
      }
    } catch (const std::exception& e) {
      row.ok = false;
      row.note = e.what();
    }
    return std::pair<SweepRow, double>{row, diff_g1};
  };

  std::vector<std::pair<SweepRow, double>> results(t_abs_list.size());
  if (jobs > 1) {
    std::vector<std::future<std::pair<SweepRow, double>>> futs;
    for (double ta : t_abs_list)
      futs.push_back(std::async(std::launch::async, run_one, ta));
    for (std::size_t i = 0; i < futs.size(); ++i) results[i] = futs[i].get();
  } else {
    for (std::size_t i = 0; i < t_abs_list.size(); ++i)
      results[i] = run_one(t_abs_list[i]);
  }

  std::vector<double> sts, fs, dgs;
  for (auto& [row, dg] : results) {
    result.rows.push_back(row);
    if (row.ok) {
      sts.push_back(row.s_t);
      fs.push_back(row.max_f);
      dgs.push_back(dg);
    }
  }
  auto has_positive = [](const std::vector<double>& v) {
    int m = 0;
    for (double x : v)
      if (x > 0.0) ++m;
    return m >= 2;
  };
  if (sts.size() >= 2 && has_positive(fs))
    result.fit_exponent_f = fitted_exponent(sts, fs);
  if (sts.size() >= 2 && tmpl.base == MetricKind::Grafted && has_positive(dgs))
    result.fit_exponent_f_minus_g1 = fitted_exponent(sts, dgs);
  return result;
}

}  // namespace plumbmet

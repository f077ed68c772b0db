#include <doctest.h>

#include <cmath>
#include <numbers>

#include "plumbmet/solver.hpp"

using namespace plumbmet;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("plumbing problem is already solved") {
  CurvatureProblem p;
  p.t = std::exp(-10.0);
  p.base = MetricKind::Plumbing;
  p.n_radial = 256;
  auto sol = newton_solve(p);
  CHECK(sol.report.converged);
  CHECK(sol.report.iterations <= 1);
  CHECK(sol.report.max_f <= 1e-11);
  CHECK(sol.report.max_residual <= 1e-12);
}

TEST_CASE("manufactured conformal problem recovers -phi") {
  const double L = -10.0;
  std::vector<double> hs, errs;
  for (int n : {256, 512, 1024}) {
    MetricField base = make_metric_L(L, MetricKind::Plumbing, n);
    std::vector<double> phi(n), Rh(n);
    for (int i = 0; i < n; ++i) {
      const double mu = base.grid.mu[i];
      phi[i] = 0.1 * std::sin(kPi * mu);
      const double lam = base.density[i];
      const double lap_phi =
          0.1 * std::pow(kPi / L, 2) * std::sin(kPi * mu) / (lam * lam);
      Rh[i] = std::exp(-2.0 * phi[i]) * (lap_phi - 1.0);
    }
    MetricField h = conformal_metric(base, phi);
    auto phib = [&](double s) {
      return -0.1 * std::sin(kPi * s / L);
    };
    auto sol = newton_solve_custom(h, Rh, phib(base.grid.dom.s_lo),
                                   phib(base.grid.dom.s_hi));
    CHECK(sol.report.converged);
    double err = 0.0;
    for (int i = 0; i < n; ++i)
      err = std::max(err, std::abs(sol.f[i] + phi[i]));
    hs.push_back(1.0 / n);
    errs.push_back(err);
  }
  CHECK(errs[2] <= 5e-6);
  const double order = fitted_exponent(hs, errs);
  CHECK(order >= 1.8);
  CHECK(order <= 2.2);
}

TEST_CASE("grafted problem against the closed-form factor") {
  CurvatureProblem p;
  p.t = std::exp(-10.0);
  p.n_radial = 1024;
  auto sol = newton_solve(p);
  CHECK(sol.report.converged);
  CHECK(sol.report.oracle_error.value() <= 5e-6);
  // residual history contracts at least quadratically until the floor
  const auto& hist = sol.report.residual_history;
  REQUIRE(hist.size() >= 3);
  for (std::size_t k = 0; k + 1 < hist.size(); ++k) {
    CHECK(hist[k + 1] <= hist[k]);  // monotone within the basin
    if (hist[k + 1] <= 1e-13) break;
    CHECK(hist[k + 1] <= 20.0 * hist[k] * hist[k]);
  }
  // halving h cuts the oracle error by a second-order factor
  CurvatureProblem p2 = p;
  p2.n_radial = 2048;
  auto sol2 = newton_solve(p2);
  const double ratio =
      sol.report.oracle_error.value() / sol2.report.oracle_error.value();
  CHECK(ratio >= 3.4);
  CHECK(ratio <= 4.6);
}

TEST_CASE("kmap agrees with newton and contracts") {
  CurvatureProblem p;
  p.t = std::exp(-10.0);
  p.n_radial = 512;
  auto nsol = newton_solve(p);
  double factor = 0.0;
  auto ksol = kmap_solve(p, nullptr, &factor);
  CHECK(ksol.report.converged);
  CHECK(factor <= 0.5);
  double diff = 0.0;
  for (int i = 0; i < p.n_radial; ++i)
    diff = std::max(diff, std::abs(nsol.f[i] - ksol.f[i]));
  CHECK(diff <= 1e-8);

  // seeding with the leading series term shrinks the contraction
  auto grids = FaceGrids::make(512, 512);
  auto g1 = nonlinear_expand(defect_poly(grids, p.cutoff), 1, 2,
                             defect_boundary_data(*grids))[0];
  double factor_seeded = 0.0;
  auto ksol2 = kmap_solve(p, &g1, &factor_seeded);
  CHECK(ksol2.report.converged);
  CHECK(factor_seeded < factor);
  // the seed itself is already accurate to a few times s_t^3
  double seed_err = 0.0;
  for (int i = 0; i < p.n_radial; ++i) {
    const double g = series_eval(g1, -10.0, ksol2.h.grid.s[i]);
    seed_err = std::max(seed_err, std::abs(g - nsol.f[i]));
  }
  CHECK(seed_err <= 5e-4);  // the next series order is s_t^3
}

TEST_CASE("kmap with exact seed is an immediate fixed point") {
  CurvatureProblem p;
  p.t = std::exp(-12.0);
  p.base = MetricKind::Plumbing;  // residual of f0 = 0 vanishes
  p.n_radial = 256;
  auto sol = kmap_solve(p);
  CHECK(sol.report.converged);
  CHECK(sol.report.iterations <= 2);
  CHECK(sol.report.max_f <= 1e-12);
}

TEST_CASE("sweep: plumbing template stays at zero") {
  CurvatureProblem tmpl;
  tmpl.base = MetricKind::Plumbing;
  tmpl.n_radial = 128;
  auto r = sweep({std::exp(-6.0), std::exp(-9.0), std::exp(-13.0)}, tmpl, 1, 64);
  for (const auto& row : r.rows) {
    CHECK(row.ok);
    CHECK(row.max_f <= 1e-11);
  }
}

TEST_CASE("sweep: grafted decay exponents") {
  CurvatureProblem tmpl;
  tmpl.n_radial = 1024;
  auto r = sweep({std::exp(-5.0), std::exp(-10.0), std::exp(-20.0),
                  std::exp(-40.0)},
                 tmpl, 3, 512);
  for (const auto& row : r.rows) CHECK(row.ok);
  CHECK(r.fit_exponent_f >= 1.9);
  CHECK(r.fit_exponent_f_minus_g1 >= 2.7);
  // error vs oracle stays uniformly bounded over the sweep
  double lo = 1e300, hi = 0.0;
  for (const auto& row : r.rows) {
    lo = std::min(lo, row.oracle_error);
    hi = std::max(hi, row.oracle_error);
  }
  CHECK(hi <= 8e-5);
}

TEST_CASE("sweep: oracle error is t-uniform once the band is resolved") {
  // at N = 2048 every fiber has >= 24 cells across the transition band
  double lo = 1e300, hi = 0.0;
  for (double L : {-5.0, -10.0, -20.0, -40.0}) {
    CurvatureProblem p;
    p.t = std::exp(L);
    p.n_radial = 2048;
    auto s = newton_solve(p);
    REQUIRE(s.report.converged);
    lo = std::min(lo, s.report.oracle_error.value());
    hi = std::max(hi, s.report.oracle_error.value());
  }
  CHECK(hi <= 2.0 * lo);
}

TEST_CASE("curvature residual oracle identities") {
  const double L = -10.0;
  Cutoff cut;
  MetricField h = make_metric_L(L, MetricKind::Grafted, 512);
  auto Rh = gauss_curvature(h, CurvatureMethod::AnalyticDerivative);
  // f = exact factor: residual at the discretization level
  std::vector<double> fe = oracle_factor(h);
  auto res = curvature_residual(
      fe, h, Rh, exact_conformal_factor(h.grid.dom.s_lo, L, cut),
      exact_conformal_factor(h.grid.dom.s_hi, L, cut));
  double mx = 0.0;
  for (double r : res) mx = std::max(mx, std::abs(r));
  CHECK(mx <= 2e-2);  // h^2 with the cutoff-layer derivatives
  // f = 0: residual is the curvature defect, supported where chi moves
  std::vector<double> zero(h.grid.n, 0.0);
  auto res0 = curvature_residual(zero, h, Rh, 0.0, 0.0);
  for (int i = 0; i < h.grid.n; ++i) {
    const double chi = cut.chi_of_R(corner_R(h.grid.s[i], L));
    if (chi >= 1.0 || chi <= 0.0) {
      // away from the fiber ends the boundary rows do not interfere
      if (i > 2 && i < h.grid.n - 3) CHECK(std::abs(res0[i]) <= 1e-12);
    }
  }
}

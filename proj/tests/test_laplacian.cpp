#include <doctest.h>

#include <complex>

#include <cmath>
#include <numbers>

#include "plumbmet/laplacian.hpp"
#include "plumbmet/metrics.hpp"

using namespace plumbmet;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("neumann closure solves constants exactly") {
  auto op = assemble_fiber_mode(std::exp(-9.0), 0, 128, {BcKind::Neumann, 0.0},
                                {BcKind::Neumann, 0.0});
  std::vector<double> f(128, 1.0);
  double resid = 0.0;
  auto u = solve_mode(op, f, &resid);
  for (double v : u) CHECK(v == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(resid <= 1e-12);
}

TEST_CASE("pencil eigenvalue: floor at 2 and dense cross-check") {
  // cross-check the Sturm route against the Rayleigh quotient of the
  // inverse-iteration vector on a small grid
  MetricField m = make_metric_L(-10.0, MetricKind::Plumbing, 96);
  auto op = assemble_fiber_mode(m, 0, {}, {});
  const double lam = smallest_pencil_eigenvalue(op);
  CHECK(lam >= 2.0 - 1e-6);
  // inverse iteration on (A - lam_shift I) in the D inner product
  const int n = 96;
  std::vector<double> v(n, 1.0), lam2(n);
  for (int i = 0; i < n; ++i) lam2[i] = op.weight[i] / op.h;
  double rayleigh = 0.0;
  for (int it = 0; it < 200; ++it) {
    // w = A^{-1} v  via the tridiagonal rows
    auto w = op.A.solve(v);
    double nrm = 0.0;
    for (int i = 0; i < n; ++i) nrm += lam2[i] * w[i] * w[i];
    nrm = std::sqrt(nrm);
    for (auto& x : w) x /= nrm;
    // Rayleigh quotient <A w, w>_D / <w, w>_D
    auto Aw = op.A.apply(w);
    double num = 0.0;
    for (int i = 0; i < n; ++i) num += lam2[i] * Aw[i] * w[i];
    rayleigh = num;
    v = w;
  }
  CHECK(lam == doctest::Approx(rayleigh).epsilon(1e-7));
}

TEST_CASE("pencil eigenvalue grows with the angular mode") {
  MetricField m = make_metric_L(-10.0, MetricKind::Plumbing, 512);
  double prev = 0.0;
  for (int mm : {0, 1, 2, 4, 8}) {
    auto op = assemble_fiber_mode(m, mm, {}, {});
    const double lam = smallest_pencil_eigenvalue(op);
    CHECK(lam >= 2.0 - 1e-6);
    CHECK(lam > prev);
    prev = lam;
  }
}

TEST_CASE("uniformity in t of the eigenvalue floor") {
  double prev = 1e300;
  for (double L : {-5.0, -10.0, -20.0, -40.0}) {
    MetricField m = make_metric_L(L, MetricKind::Grafted, 512);
    auto op = assemble_fiber_mode(m, 0, {}, {});
    const double lam = smallest_pencil_eigenvalue(op);
    CHECK(lam >= 2.0 - 1e-6);
    CHECK(lam <= prev + 1e-9);  // nonincreasing in |L|
    prev = lam;
  }
}

TEST_CASE("symmetrized matrix is exactly symmetric") {
  MetricField m = make_metric_L(-8.0, MetricKind::Grafted, 64);
  auto op = assemble_fiber_mode(m, 3, {}, {});
  auto p = symmetrized_pencil(op);
  // one shared off-diagonal array: B equals its transpose exactly
  for (int i = 0; i + 1 < 64; ++i) CHECK(p.off[i] == p.off[i]);
  // and B agrees with D A up to roundoff
  for (int i = 0; i + 1 < 64; ++i) {
    CHECK(p.off[i] == doctest::Approx(op.A.sup[i] * p.d[i]).epsilon(1e-14));
    CHECK(p.off[i] == doctest::Approx(op.A.sub[i + 1] * p.d[i + 1]).epsilon(1e-14));
    CHECK(p.diag[i] == doctest::Approx(op.A.diag[i] * p.d[i]).epsilon(1e-14));
  }
}

TEST_CASE("manufactured solution converges at second order") {
  const double L = -10.0;
  std::vector<double> hs, errs;
  for (int n : {128, 256, 512, 1024}) {
    MetricField m = make_metric_L(L, MetricKind::Plumbing, n);
    auto ue = [&](double s) { return std::sin(kPi * s / L); };
    auto op = assemble_fiber_mode(m, 0, {BcKind::Dirichlet, ue(m.grid.dom.s_lo)},
                                  {BcKind::Dirichlet, ue(m.grid.dom.s_hi)});
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) {
      const double s = m.grid.s[i];
      const double lam = m.density[i];
      f[i] = std::pow(kPi / L, 2) * ue(s) / (lam * lam) + 2.0 * ue(s);
    }
    auto u = solve_mode(op, f);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(u[i] - ue(m.grid.s[i])));
    hs.push_back(1.0 / n);
    errs.push_back(err);
  }
  const double order = fitted_exponent(hs, errs);
  CHECK(order >= 1.8);
  CHECK(order <= 2.2);
}

TEST_CASE("cusp face: manufactured solution and nonzero-mode decay") {
  const double xm = ilog(kDiscRadius);
  std::vector<double> hs, errs;
  for (int n : {128, 256, 512}) {
    auto op = assemble_face_BI_cusp(n);
    std::vector<double> f(n), ue(n);
    for (int i = 0; i < n; ++i) {
      const double x = op.grid[i];
      f[i] = 4.0 * x * x;  // (Delta+2) of x (x_max - x)
      ue[i] = x * (xm - x);
    }
    auto u = solve_mode(op, f);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(u[i] - ue[i]));
    hs.push_back(1.0 / n);
    errs.push_back(err);
  }
  const double order = fitted_exponent(hs, errs);
  CHECK(order >= 1.8);
  CHECK(order <= 2.3);

  // nonzero mode: solutions die faster than any moderate power at x -> 0
  auto op3 = assemble_face_BI_cusp(2048, 0.0, 3);
  std::vector<double> f(2048);
  for (int i = 0; i < 2048; ++i) {
    const double r = op3.grid[i] / xm;
    const double d = (r - 0.6) / 0.1;
    f[i] = std::exp(-d * d);
  }
  auto u = solve_mode(op3, f);
  std::vector<double> xs, ys;
  for (int i = 0; i < 2048; ++i) {
    const double x = op3.grid[i];
    if (x >= 0.05 && x <= 0.25 && std::abs(u[i]) > 1e-280) {
      xs.push_back(x);
      ys.push_back(std::abs(u[i]));
    }
  }
  CHECK(fitted_exponent(xs, ys) >= 4.0);
}

TEST_CASE("operator norm bound one half in the weighted norm") {
  SplitMix64 rng(2026);
  for (double L : {-5.0, -20.0}) {
    MetricField m = make_metric_L(L, MetricKind::Grafted, 256);
    for (int mm : {0, 2}) {
      auto op = assemble_fiber_mode(m, mm, {}, {});
      for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> f(256);
        for (auto& x : f) x = rng.uniform(-1.0, 1.0);
        auto u = solve_mode(op, f);
        CHECK(weighted_norm(op, u) <=
              0.5 * weighted_norm(op, f) * (1.0 + 1e-6) + 1e-12);
      }
    }
  }
}

TEST_CASE("theta solve: mode decoupling and Parseval") {
  MetricField m = make_metric_L(-8.0, MetricKind::Plumbing, 128);
  const int M = 16;
  // theta-independent data reduces to the zero mode
  {
    std::vector<double> f2(128 * M), f1(128);
    for (int i = 0; i < 128; ++i) {
      const double g = std::sin(kPi * m.grid.mu[i]);
      f1[i] = g;
      for (int j = 0; j < M; ++j) f2[i * M + j] = g;
    }
    auto u2 = solve_fiber(m, f2, M);
    auto op = assemble_fiber_mode(m, 0, {}, {});
    auto u1 = solve_mode(op, f1);
    for (int i = 0; i < 128; ++i)
      for (int j = 0; j < M; ++j)
        CHECK(std::abs(u2[i * M + j] - u1[i]) <= 1e-13);
  }
  // f = cos(3 theta) g(mu) solves through mode 3 alone
  {
    std::vector<double> f2(128 * M), f1(128);
    for (int i = 0; i < 128; ++i) {
      const double g = m.grid.mu[i] * (1.0 - m.grid.mu[i]);
      f1[i] = g;
      for (int j = 0; j < M; ++j)
        f2[i * M + j] = std::cos(3.0 * 2.0 * kPi * j / M) * g;
    }
    auto u2 = solve_fiber(m, f2, M);
    auto op = assemble_fiber_mode(m, 3, {}, {});
    auto u1 = solve_mode(op, f1);
    for (int i = 0; i < 128; ++i)
      for (int j = 0; j < M; ++j)
        CHECK(std::abs(u2[i * M + j] -
                       std::cos(3.0 * 2.0 * kPi * j / M) * u1[i]) <= 1e-12);
  }
}

TEST_CASE("weighted norms agree between grid and mode space") {
  MetricField m = make_metric_L(-8.0, MetricKind::Plumbing, 96);
  const int M = 32;
  SplitMix64 rng(64);
  std::vector<double> f(96 * M);
  for (auto& x : f) x = rng.uniform(-1.0, 1.0);
  // grid-space weighted norm
  auto op0 = assemble_fiber_mode(m, 0, {}, {});
  double grid2 = 0.0;
  for (int i = 0; i < 96; ++i)
    for (int j = 0; j < M; ++j)
      grid2 += op0.weight[i] * f[i * M + j] * f[i * M + j] * (2 * kPi / M);
  // mode-space: Parseval for the unitary-normalized transform
  double mode2 = 0.0;
  {
    std::vector<std::complex<double>> row(M);
    for (int i = 0; i < 96; ++i) {
      for (int j = 0; j < M; ++j) row[j] = f[i * M + j];
      fft(row, false);
      for (int j = 0; j < M; ++j)
        mode2 += op0.weight[i] * std::norm(row[j]) * (2 * kPi / (M * double(M)));
    }
  }
  CHECK(grid2 == doctest::Approx(mode2).epsilon(1e-12));
}

TEST_CASE("indicial data: exact roots, fits, and polynomial") {
  auto b2 = indicial_roots(OpDomain::FaceBII, 4096);
  CHECK(b2.roots.first == 2.0);
  CHECK(b2.roots.second == -1.0);
  // sigma^2 + b sigma + c with the exact integer roots
  CHECK(b2.b == -1.0);
  CHECK(b2.c == -2.0);
  auto bc = indicial_roots(OpDomain::FaceBICusp, 4096);
  CHECK(bc.roots.first == 1.0);
  CHECK(bc.roots.second == -2.0);
  CHECK(std::abs(bc.fitted_slope - 1.0) <= 1e-3);
  auto bj = indicial_roots(OpDomain::FaceBIIConjugated, 8192);
  CHECK(bj.roots.first == 3.0);
  CHECK(bj.roots.second == 0.0);
  CHECK(std::abs(bj.fitted_slope - 3.0) <= 1e-3);
  CHECK(std::abs(indicial_roots(OpDomain::FaceBII, 8192).fitted_slope - 2.0) <=
        1e-3);
}

TEST_CASE("front face null space stays away from zero") {
  double prev = 0.0;
  for (int n : {64, 128, 256}) {
    const double s = face_min_singular_value(OpDomain::FaceBII, n);
    CHECK(s > 0.05);
    if (prev > 0.0) CHECK(s > 0.5 * prev);  // no collapse as N grows
    prev = s;
  }
}

TEST_CASE("fiber zero mode approaches the front face operator") {
  // coefficient of the mu-second-derivative in the fiber operator,
  // written in mu, against sin^2(pi mu)/pi^2 for the grafted metric
  std::vector<double> sts, devs;
  for (double L : {-8.0, -16.0, -32.0, -64.0}) {
    MetricField m = make_metric_L(L, MetricKind::Grafted, 512);
    double dev = 0.0;
    for (int i = 0; i < 512; ++i) {
      const double lam = m.density[i];
      const double c_fiber = 1.0 / (lam * lam * L * L);
      const double mu = m.grid.mu[i];
      const double c_face = std::pow(std::sin(kPi * mu) / kPi, 2);
      dev = std::max(dev, std::abs(c_fiber - c_face));
    }
    sts.push_back(-1.0 / L);
    devs.push_back(dev);
  }
  CHECK(fitted_exponent(sts, devs) >= 1.0);
}

TEST_CASE("assembly validation") {
  CHECK_THROWS_AS(assemble_fiber_mode(std::exp(-1.0), 0, 64),
                  std::domain_error);
  CHECK_THROWS_AS(assemble_fiber_mode(std::exp(-8.0), 0, 8),
                  std::invalid_argument);
  CHECK_THROWS_AS(assemble_face_BII(4), std::invalid_argument);
  MetricField m = make_metric_L(-8.0, MetricKind::Plumbing, 64);
  std::vector<double> bad(64 * 12);
  CHECK_THROWS_AS(solve_fiber(m, bad, 12), std::invalid_argument);
}

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "plumbmet/numerics.hpp"

using namespace plumbmet;

namespace {

// dense Jacobi eigenvalue sweep, test-side oracle for the Sturm solver
std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n) {
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a[p * n + q]) < 1e-18) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) /
                             (2.0 * a[p * n + q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i * n + i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

}  // namespace

TEST_CASE("tridiagonal solve against a known system") {
  const int n = 64;
  const double h = 1.0 / (n + 1);
  std::vector<double> sub(n, -1.0 / (h * h)), diag(n, 2.0 / (h * h)),
      sup(n, -1.0 / (h * h)), rhs(n, 1.0);
  auto u = solve_tridiagonal(sub, diag, sup, rhs);
  for (int i = 0; i < n; ++i) {
    const double x = (i + 1) * h;
    CHECK(u[i] == doctest::Approx(0.5 * x * (1.0 - x)).epsilon(1e-12));
  }
}

TEST_CASE("sturm bisection matches a dense eigensolve") {
  const int n = 96;
  SplitMix64 rng(42);
  std::vector<double> d(n), e(n - 1);
  for (int i = 0; i < n; ++i) d[i] = 2.0 + rng.uniform(0.0, 1.0);
  for (int i = 0; i < n - 1; ++i) e[i] = rng.uniform(-0.8, 0.8);
  std::vector<double> dense(n * n, 0.0);
  for (int i = 0; i < n; ++i) dense[i * n + i] = d[i];
  for (int i = 0; i < n - 1; ++i)
    dense[i * n + i + 1] = dense[(i + 1) * n + i] = e[i];
  const double lam = tridiag_smallest_eigenvalue(d, e);
  const double ref = jacobi_eigenvalues(dense, n)[0];
  CHECK(lam == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("fft roundtrip and Parseval") {
  const int n = 128;
  SplitMix64 rng(7);
  std::vector<std::complex<double>> a(n), b;
  for (auto& z : a) z = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  b = a;
  fft(b, false);
  double sa = 0.0, sb = 0.0;
  for (int i = 0; i < n; ++i) {
    sa += std::norm(a[i]);
    sb += std::norm(b[i]);
  }
  CHECK(sa == doctest::Approx(sb / n).epsilon(1e-12));
  fft(b, true);
  for (int i = 0; i < n; ++i) CHECK(std::abs(b[i] - a[i]) < 1e-12);
}

TEST_CASE("simpson integrates smooth functions accurately") {
  const double v = simpson([](double x) { return std::sin(x); }, 0.0,
                           std::numbers::pi, 256);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("fitted exponent recovers a power law") {
  std::vector<double> x, y;
  for (double t : {0.2, 0.1, 0.05, 0.025}) {
    x.push_back(t);
    y.push_back(3.7 * std::pow(t, 2.5));
  }
  CHECK(fitted_exponent(x, y) == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("smooth cutoff profile and derivatives") {
  CHECK(smoothstep_profile(0.2) == 1.0);
  CHECK(smoothstep_profile(0.5) == 1.0);
  CHECK(smoothstep_profile(1.0) == 0.0);
  CHECK(smoothstep_profile(2.0) == 0.0);
  double prev = 1.0;
  for (double y = 0.52; y < 1.0; y += 0.02) {
    const double v = smoothstep_profile(y);
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  for (double y : {0.58, 0.66, 0.75, 0.84, 0.93}) {
    const double h = 1e-4;
    const double d1 =
        (smoothstep_profile(y + h) - smoothstep_profile(y - h)) / (2 * h);
    const double d2 = (smoothstep_profile(y + h) - 2 * smoothstep_profile(y) +
                       smoothstep_profile(y - h)) /
                      (h * h);
    CHECK(smoothstep_profile_d1(y) ==
          doctest::Approx(d1).epsilon(1e-4).scale(std::abs(d1) + 1.0));
    CHECK(smoothstep_profile_d2(y) ==
          doctest::Approx(d2).epsilon(1e-3).scale(std::abs(d2) + 1.0));
  }
  CHECK(smoothstep_profile_d1(0.5 + 1e-9) == doctest::Approx(0.0));
  CHECK(smoothstep_profile_d1(1.0 - 1e-9) == doctest::Approx(0.0));
}

TEST_CASE("stable sinc helpers") {
  const double u = std::numbers::pi * 0.5;
  CHECK(sinc2_pi(0.5) ==
        doctest::Approx(std::pow(std::sin(u) / u, 2)).epsilon(1e-15));
  const double m0 = 1e-3 / std::numbers::pi;
  CHECK(sinc2_pi_m1_over_m2(m0 * 0.999) ==
        doctest::Approx(sinc2_pi_m1_over_m2(m0 * 1.001)).epsilon(1e-9));
}

TEST_CASE("interp_cells is exact at the nodes") {
  std::vector<double> v{1.0, 4.0, 2.0, -1.0, 0.5};
  for (int i = 0; i < 5; ++i)
    CHECK(interp_cells(v, 0.0, 0.2, 0.2 * (i + 0.5)) ==
          doctest::Approx(v[i]).epsilon(1e-15));
}

TEST_CASE("bordered tridiagonal solve and apply are consistent") {
  const int n = 32;
  SplitMix64 rng(11);
  BorderedTridiagonal A;
  A.sub.assign(n, 0.0);
  A.diag.assign(n, 0.0);
  A.sup.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    A.diag[i] = 4.0 + rng.uniform(0, 1);
    if (i > 0) A.sub[i] = rng.uniform(-1, 1);
    if (i + 1 < n) A.sup[i] = rng.uniform(-1, 1);
  }
  A.first_extra = 0.3;
  A.last_extra = -0.2;
  std::vector<double> x(n);
  for (auto& t : x) t = rng.uniform(-2, 2);
  auto y = A.apply(x);
  auto x2 = A.solve(y);
  for (int i = 0; i < n; ++i)
    CHECK(x2[i] == doctest::Approx(x[i]).epsilon(1e-10));
}

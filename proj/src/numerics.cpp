#include "plumbmet/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace plumbmet {

namespace {

template <class T>
std::vector<T> thomas(std::span<const double> a, std::span<const double> b,
                      std::span<const double> c, std::span<const T> r) {
  const std::size_t n = b.size();
  if (a.size() != n || c.size() != n || r.size() != n)
    throw std::invalid_argument("tridiagonal: size mismatch");
  std::vector<double> cp(n);
  std::vector<T> rp(n), x(n);
  double beta = b[0];
  if (beta == 0.0) throw std::runtime_error("tridiagonal: zero pivot");
  cp[0] = c[0] / beta;
  rp[0] = r[0] / beta;
  for (std::size_t i = 1; i < n; ++i) {
    beta = b[i] - a[i] * cp[i - 1];
    if (beta == 0.0) throw std::runtime_error("tridiagonal: zero pivot");
    cp[i] = c[i] / beta;
    rp[i] = (r[i] - a[i] * rp[i - 1]) / beta;
  }
  x[n - 1] = rp[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = rp[i] - cp[i] * x[i + 1];
  return x;
}

}  // namespace

std::vector<double> solve_tridiagonal(std::span<const double> sub,
                                      std::span<const double> diag,
                                      std::span<const double> sup,
                                      std::span<const double> rhs) {
  return thomas<double>(sub, diag, sup, rhs);
}

std::vector<std::complex<double>> solve_tridiagonal(
    std::span<const double> sub, std::span<const double> diag,
    std::span<const double> sup,
    std::span<const std::complex<double>> rhs) {
  return thomas<std::complex<double>>(sub, diag, sup, rhs);
}

std::vector<double> BorderedTridiagonal::solve(
    std::span<const double> rhs) const {
  const std::size_t n = diag.size();
  if (n < 4) throw std::invalid_argument("bordered solve needs n >= 4");
  std::vector<double> a(sub.begin(), sub.end());
  std::vector<double> b(diag.begin(), diag.end());
  std::vector<double> c(sup.begin(), sup.end());
  std::vector<double> r(rhs.begin(), rhs.end());
  if (first_extra != 0.0) {
    // eliminate the x[2] entry of row 0 against row 1
    if (sup[1] == 0.0) throw std::runtime_error("bordered: cannot eliminate");
    const double f = first_extra / sup[1];
    // row0 -= f * row1   (row 1 touches x0, x1, x2)
    b[0] -= f * a[1];
    c[0] -= f * b[1];
    r[0] -= f * r[1];
  }
  if (last_extra != 0.0) {
    if (sub[n - 2] == 0.0)
      throw std::runtime_error("bordered: cannot eliminate");
    const double f = last_extra / sub[n - 2];
    b[n - 1] -= f * c[n - 2];
    a[n - 1] -= f * b[n - 2];
    r[n - 1] -= f * r[n - 2];
  }
  return thomas<double>(a, b, c, r);
}

std::vector<double> BorderedTridiagonal::apply(
    std::span<const double> x) const {
  const std::size_t n = diag.size();
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = diag[i] * x[i];
    if (i > 0) s += sub[i] * x[i - 1];
    if (i + 1 < n) s += sup[i] * x[i + 1];
    y[i] = s;
  }
  if (n >= 3) {
    y[0] += first_extra * x[2];
    y[n - 1] += last_extra * x[n - 3];
  }
  return y;
}

double tridiag_smallest_eigenvalue(std::span<const double> diag,
                                   std::span<const double> off, double tol) {
  const std::size_t n = diag.size();
  if (off.size() + 1 != n) throw std::invalid_argument("eig: size mismatch");
  // Gershgorin bounds
  double lo = diag[0], hi = diag[0];
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    if (i > 0) r += std::abs(off[i - 1]);
    if (i + 1 < n) r += std::abs(off[i]);
    lo = std::min(lo, diag[i] - r);
    hi = std::max(hi, diag[i] + r);
  }
  auto count_below = [&](double sigma) {
    // number of eigenvalues < sigma via the LDL^T pivot signs
    int cnt = 0;
    double d = diag[0] - sigma;
    if (d < 0) ++cnt;
    for (std::size_t i = 1; i < n; ++i) {
      double denom = (d == 0.0) ? 1e-300 : d;
      d = diag[i] - sigma - off[i - 1] * off[i - 1] / denom;
      if (d < 0) ++cnt;
    }
    return cnt;
  };
  while (hi - lo > tol * std::max(1.0, std::abs(lo))) {
    const double mid = 0.5 * (lo + hi);
    if (count_below(mid) >= 1)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

double smallest_singular_value(const BorderedTridiagonal& A, int iters) {
  const std::size_t n = A.diag.size();
  // Inverse power iteration on A^T A: v <- A^{-1} A^{-T} v.
  // A^{-T} x solved by transposing the pattern: reuse solve on the
  // transposed matrix.
  BorderedTridiagonal At;
  At.diag = A.diag;
  At.sub.assign(n, 0.0);
  At.sup.assign(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    At.sub[i + 1] = A.sup[i];
    At.sup[i] = A.sub[i + 1];
  }
  // extra entries transpose to rows 2 and n-3; fold them by noting the
  // transposed system is solved as a dense-free 5-band; for the sizes
  // used here a simple normal-equations power iteration is enough.
  std::vector<double> v(n);
  SplitMix64 rng(0x9e3779b97f4a7c15ull);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  double nrm = 0.0;
  auto normalize = [&](std::vector<double>& w) {
    double s = 0.0;
    for (double t : w) s += t * t;
    s = std::sqrt(s);
    for (double& t : w) t /= s;
    return s;
  };
  normalize(v);
  // у = A^{-T} v needs the transpose including extras; emulate by CG-free
  // fixed-point: since extras are only two entries, treat them with a
  // rank-2 correction (Sherman-Morrison applied twice).
  auto solve_T = [&](const std::vector<double>& rhs) {
    // Transpose pattern: row 2 gains A.first_extra at column 0,
    // row n-3 gains A.last_extra at column n-1.
    std::vector<double> a(At.sub), b(At.diag), c(At.sup), r(rhs);
    // eliminate the (2,0) entry with row 0 and row 1 of the transpose:
    // do two elimination steps of plain Gaussian elimination.
    double e20 = A.first_extra;
    if (e20 != 0.0) {
      if (b[0] == 0.0) throw std::runtime_error("singular solve_T");
      double f = e20 / b[0];  // row2 -= f*row0 touching cols 0,1
      // row0 has cols 0 (b[0]) and 1 (c[0])
      a[2] -= f * c[0];  // col1 entry of row2
      r[2] -= f * r[0];
    }
    double em = A.last_extra;
    if (em != 0.0) {
      if (b[n - 1] == 0.0) throw std::runtime_error("singular solve_T");
      double f = em / b[n - 1];  // row n-3 -= f * row n-1 (cols n-2, n-1)
      c[n - 3] -= f * a[n - 1];
      r[n - 3] -= f * r[n - 1];
    }
    return thomas<double>(a, b, c, r);
  };
  double mu = 0.0;
  for (int it = 0; it < iters; ++it) {
    auto w = solve_T(v);
    auto u = A.solve(w);
    nrm = normalize(u);
    v.swap(u);
    mu = nrm;
  }
  return 1.0 / std::sqrt(mu);
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft size must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        2.0 * std::numbers::pi / double(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const auto u = a[i + k];
        const auto t = a[i + k + len / 2] * w;
        a[i + k] = u + t;
        a[i + k + len / 2] = u - t;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= double(n);
}

double simpson(const std::function<double(double)>& f, double a, double b,
               int n) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("simpson: even n >= 2");
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double fitted_exponent(std::span<const double> x, std::span<const double> y,
                       double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(y[i] > floor) || !(x[i] > 0)) continue;
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  if (m < 2) throw std::runtime_error("fitted_exponent: not enough points");
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

std::vector<double> polyfit_prefix(std::span<const double> x,
                                   std::span<const double> y, int deg,
                                   int m) {
  if (m > int(x.size()) || m < deg + 1)
    throw std::invalid_argument("polyfit_prefix: bad window");
  const int k = deg + 1;
  // normal equations in long double; the windows used are tiny
  std::vector<long double> ata(k * k, 0.0L), atb(k, 0.0L);
  const long double scale = std::abs((long double)x[m - 1]) + 1e-300L;
  for (int i = 0; i < m; ++i) {
    long double p = 1.0L;
    std::vector<long double> row(k);
    for (int j = 0; j < k; ++j) {
      row[j] = p;
      p *= x[i] / scale;
    }
    for (int r = 0; r < k; ++r) {
      atb[r] += row[r] * y[i];
      for (int c = 0; c < k; ++c) ata[r * k + c] += row[r] * row[c];
    }
  }
  // Gaussian elimination with partial pivoting
  std::vector<int> piv(k);
  for (int i = 0; i < k; ++i) piv[i] = i;
  for (int col = 0; col < k; ++col) {
    int best = col;
    for (int r = col + 1; r < k; ++r)
      if (std::abs(ata[r * k + col]) > std::abs(ata[best * k + col]))
        best = r;
    if (best != col) {
      for (int c = 0; c < k; ++c) std::swap(ata[col * k + c], ata[best * k + c]);
      std::swap(atb[col], atb[best]);
    }
    const long double p = ata[col * k + col];
    if (p == 0.0L) throw std::runtime_error("polyfit: singular");
    for (int r = col + 1; r < k; ++r) {
      const long double f = ata[r * k + col] / p;
      for (int c = col; c < k; ++c) ata[r * k + c] -= f * ata[col * k + c];
      atb[r] -= f * atb[col];
    }
  }
  std::vector<double> out(k);
  for (int r = k - 1; r >= 0; --r) {
    long double s = atb[r];
    for (int c = r + 1; c < k; ++c) s -= ata[r * k + c] * out[c];
    out[r] = double(s / ata[r * k + r]);
  }
  // undo scaling
  long double sc = 1.0L;
  for (int j = 0; j < k; ++j) {
    out[j] = double(out[j] / sc);
    sc *= scale;
  }
  return out;
}

double extrapolate_left_edge(std::span<const double> v) {
  if (v.size() < 3) throw std::invalid_argument("extrapolate: too short");
  // cells at h/2, 3h/2, 5h/2 -> value at 0
  return (15.0 * v[0] - 10.0 * v[1] + 3.0 * v[2]) / 8.0;
}

double extrapolate_right_edge(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n < 3) throw std::invalid_argument("extrapolate: too short");
  return (15.0 * v[n - 1] - 10.0 * v[n - 2] + 3.0 * v[n - 3]) / 8.0;
}

double interp_cells(std::span<const double> v, double x0, double h, double x) {
  const int n = int(v.size());
  if (n == 1) return v[0];
  const double c0 = x0 + 0.5 * h;
  double u = (x - c0) / h;  // in cell-center units
  if (u <= 0.0) {
    const double t = u;
    return v[0] + t * (v[1] - v[0]);
  }
  if (u >= n - 1) {
    const double t = u - (n - 2);
    return v[n - 2] + t * (v[n - 1] - v[n - 2]);
  }
  const int i = int(u);
  const double t = u - i;
  const double p1 = v[i], p2 = v[i + 1];
  const double p0 = (i > 0) ? v[i - 1] : 2.0 * p1 - p2;
  const double p3 = (i + 2 < n) ? v[i + 2] : 2.0 * p2 - p1;
  // Catmull-Rom
  const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
  const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
  const double c = -0.5 * p0 + 0.5 * p2;
  return ((a * t + b) * t + c) * t + p1;
}

namespace {
inline double phi(double u) { return u > 0.0 ? std::exp(-1.0 / u) : 0.0; }
inline double phi_d1(double u) {
  return u > 0.0 ? std::exp(-1.0 / u) / (u * u) : 0.0;
}
inline double phi_d2(double u) {
  if (u <= 0.0) return 0.0;
  const double e = std::exp(-1.0 / u);
  return e * (1.0 / (u * u * u * u) - 2.0 / (u * u * u));
}
}  // namespace

double smoothstep_profile(double y) {
  if (y <= 0.5) return 1.0;
  if (y >= 1.0) return 0.0;
  const double u = 2.0 - 2.0 * y;  // 1 -> 0 as y: 1/2 -> 1
  const double p = phi(u), q = phi(1.0 - u);
  return p / (p + q);
}

double smoothstep_profile_d1(double y) {
  if (y <= 0.5 || y >= 1.0) return 0.0;
  const double u = 2.0 - 2.0 * y;
  const double p = phi(u), q = phi(1.0 - u);
  const double pd = phi_d1(u), qd = phi_d1(1.0 - u);
  const double den = (p + q) * (p + q);
  // d/du [p/(p+q)] = (pd*q + p*qd)/den ; du/dy = -2
  return -2.0 * (pd * q + p * qd) / den;
}

double smoothstep_profile_d2(double y) {
  if (y <= 0.5 || y >= 1.0) return 0.0;
  // chi(y) = g(u), u = 2-2y, g = p/(p+q), p = phi(u), q = phi(1-u).
  // g'  = N/(p+q)^2 with N = p'q + p q' (q differentiated at 1-u),
  // g'' = (N'(p+q) - 2N(p'-q')) / (p+q)^3 with N' = p''q - p q''.
  const double u = 2.0 - 2.0 * y;
  const double p = phi(u), q = phi(1.0 - u);
  const double pd = phi_d1(u), qd = phi_d1(1.0 - u);
  const double pdd = phi_d2(u), qdd = phi_d2(1.0 - u);
  const double s = p + q;
  const double num = pd * q + p * qd;
  const double num1 = pdd * q - p * qdd;
  const double g2 = (num1 * s - 2.0 * num * (pd - qd)) / (s * s * s);
  return 4.0 * g2;  // (du/dy)^2 = 4
}

double sinc2_pi(double m) {
  const double u = std::numbers::pi * m;
  if (std::abs(u) < 1e-4) {
    const double u2 = u * u;
    return 1.0 - u2 / 3.0 + 2.0 * u2 * u2 / 45.0;
  }
  const double s = std::sin(u) / u;
  return s * s;
}

double sinc2_pi_m1_over_m2(double m) {
  const double u = std::numbers::pi * m;
  const double pi2 = std::numbers::pi * std::numbers::pi;
  if (std::abs(u) < 1e-3) {
    const double u2 = u * u;
    return pi2 * (-1.0 / 3.0 + 2.0 * u2 / 45.0 - u2 * u2 / 315.0);
  }
  return (sinc2_pi(m) - 1.0) / (m * m);
}

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform(double lo, double hi) {
  const double u = double(next() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

}  // namespace plumbmet

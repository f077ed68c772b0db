#include "plumbmet/laplacian.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace plumbmet {

namespace {
constexpr double kPi = std::numbers::pi;

void size_op(ModeOperator& op, int n) {
  op.A.sub.assign(n, 0.0);
  op.A.diag.assign(n, 0.0);
  op.A.sup.assign(n, 0.0);
  op.rhs_bc.assign(n, 0.0);
  op.weight.assign(n, 1.0);
  op.grid.resize(n);
}
}  // namespace

ModeOperator assemble_fiber_mode(const MetricField& metric, int m, Bc left,
                                 Bc right) {
  if (metric.grid.kind != GridKind::UniformMu)
    throw std::invalid_argument("fiber mode operator needs a UniformMu grid");
  const int n = metric.grid.n;
  if (n < 16) throw std::invalid_argument("fiber mode operator: N >= 16");
  if (left.kind == BcKind::BoundedIndicial ||
      right.kind == BcKind::BoundedIndicial)
    throw std::invalid_argument("indicial closure applies to face models");
  ModeOperator op;
  op.domain = OpDomain::Fiber;
  op.mode = m;
  op.L = metric.grid.dom.L;
  op.left = left;
  op.right = right;
  size_op(op, n);
  const double h = metric.grid.h;  // s spacing
  op.h = h;
  op.grid = metric.grid.mu;
  for (int i = 0; i < n; ++i) {
    const double lam = metric.density[i];
    const double w = 1.0 / (lam * lam);
    op.weight[i] = lam * lam * h;
    op.A.sub[i] = -w / (h * h);
    op.A.sup[i] = -w / (h * h);
    op.A.diag[i] = 2.0 * w / (h * h) + w * double(m) * double(m) + 2.0;
    if (i == 0) {
      if (left.kind == BcKind::Dirichlet) {
        op.A.diag[i] += w / (h * h);  // ghost = 2 d - u0
        op.rhs_bc[i] += 2.0 * w / (h * h) * left.value;
      } else {  // Neumann ghost = u0
        op.A.diag[i] -= w / (h * h);
      }
      op.A.sub[i] = 0.0;
    }
    if (i == n - 1) {
      if (right.kind == BcKind::Dirichlet) {
        op.A.diag[i] += w / (h * h);
        op.rhs_bc[i] += 2.0 * w / (h * h) * right.value;
      } else {
        op.A.diag[i] -= w / (h * h);
      }
      op.A.sup[i] = 0.0;
    }
  }
  return op;
}

ModeOperator assemble_fiber_mode(std::complex<double> t, int m, int n, Bc left,
                                 Bc right, MetricKind kind) {
  const double a = std::abs(t);
  if (!(a > 0.0) || a > std::exp(-2.0))
    throw std::domain_error("assemble_fiber_mode: need 0 < |t| <= e^-2");
  return assemble_fiber_mode(make_metric(t, kind, n), m, left, right);
}

ModeOperator assemble_face_BII(int n) {
  if (n < 16) throw std::invalid_argument("face operator: N >= 16");
  ModeOperator op;
  op.domain = OpDomain::FaceBII;
  op.left = {BcKind::BoundedIndicial, 0.0};
  op.right = {BcKind::BoundedIndicial, 0.0};
  op.closure_rows = true;
  size_op(op, n);
  const double h = 1.0 / n;
  op.h = h;
  for (int i = 0; i < n; ++i) {
    const double mu = (i + 0.5) * h;
    op.grid[i] = mu;
    op.weight[i] = h;
    const double sn = std::sin(kPi * mu);
    const double c = sn * sn / (kPi * kPi);
    op.A.sub[i] = -c / (h * h);
    op.A.sup[i] = -c / (h * h);
    op.A.diag[i] = 2.0 + 2.0 * c / (h * h);
  }
  // value closures: bounded solutions take the value f(0)/2 resp. f(1)/2;
  // the rhs side is filled by solve_mode from the forcing.
  op.A.sub[0] = 0.0;
  op.A.diag[0] = 15.0 / 8.0;
  op.A.sup[0] = -10.0 / 8.0;
  op.A.first_extra = 3.0 / 8.0;
  op.A.sup[n - 1] = 0.0;
  op.A.diag[n - 1] = 15.0 / 8.0;
  op.A.sub[n - 1] = -10.0 / 8.0;
  op.A.last_extra = 3.0 / 8.0;
  return op;
}

ModeOperator assemble_face_BII_conjugated(int n) {
  if (n < 16) throw std::invalid_argument("face operator: N >= 16");
  ModeOperator op;
  op.domain = OpDomain::FaceBIIConjugated;
  op.left = {BcKind::BoundedIndicial, 0.0};
  op.right = {BcKind::BoundedIndicial, 0.0};
  op.closure_rows = true;
  size_op(op, n);
  const double h = 1.0 / n;
  op.h = h;
  for (int i = 0; i < n; ++i) {
    const double mu = (i + 0.5) * h;
    op.grid[i] = mu;
    op.weight[i] = h;
    const double S = sinc2_pi(mu);
    op.A.sub[i] = -S * (mu * mu / (h * h) + mu / h);
    op.A.sup[i] = -S * (mu * mu / (h * h) - mu / h);
    op.A.diag[i] = 2.0 - 2.0 * S + 2.0 * S * mu * mu / (h * h);
  }
  // left: select the mu branch (annihilates mu and mu^2)
  op.A.sub[0] = 0.0;
  op.A.diag[0] = 15.0;
  op.A.sup[0] = -10.0;
  op.A.first_extra = 3.0;
  // right: bounded value branch, value row filled from the forcing
  op.A.sup[n - 1] = 0.0;
  op.A.diag[n - 1] = 15.0 / 8.0;
  op.A.sub[n - 1] = -10.0 / 8.0;
  op.A.last_extra = 3.0 / 8.0;
  return op;
}

ModeOperator assemble_face_BI_cusp(int n, double x_max, int m,
                                   double dirichlet_value) {
  if (n < 16) throw std::invalid_argument("face operator: N >= 16");
  if (x_max <= 0.0) x_max = ilog(kDiscRadius);
  ModeOperator op;
  op.domain = OpDomain::FaceBICusp;
  op.mode = m;
  op.left = {BcKind::BoundedIndicial, 0.0};
  op.right = {BcKind::Dirichlet, dirichlet_value};
  op.closure_rows = true;
  size_op(op, n);
  const double h = x_max / n;
  op.h = h;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) * h;
    op.grid[i] = x;
    op.weight[i] = h;  // cusp area form dx dtheta
    // 2u - x^2 u'' - 2x u' + m^2 x^{-2} u
    op.A.sub[i] = -x * x / (h * h) + x / h;
    op.A.sup[i] = -x * x / (h * h) - x / h;
    op.A.diag[i] =
        2.0 + 2.0 * x * x / (h * h) + double(m) * double(m) / (x * x);
  }
  // left: select the x branch
  op.A.sub[0] = 0.0;
  op.A.diag[0] = 15.0;
  op.A.sup[0] = -10.0;
  op.A.first_extra = 3.0;
  // right: Dirichlet at the face x_max + ... the boundary sits at x_max,
  // half a cell beyond the last center: ghost = 2 d - u_{n-1}
  {
    const int i = n - 1;
    const double x = op.grid[i];
    const double sup = -x * x / (h * h) - x / h;  // ghost coefficient
    op.A.diag[i] -= sup;           // ghost = -u_{n-1} part
    op.rhs_bc[i] -= 2.0 * sup * dirichlet_value;
    op.A.sup[i] = 0.0;
  }
  return op;
}

std::vector<double> solve_mode(const ModeOperator& op,
                               const std::vector<double>& f,
                               double* residual) {
  const int n = int(op.A.diag.size());
  if (int(f.size()) != n) throw std::invalid_argument("solve_mode: size");
  std::vector<double> rhs(n);
  for (int i = 0; i < n; ++i) rhs[i] = f[i] + op.rhs_bc[i];
  if (op.closure_rows) {
    // closure rows carry boundary information instead of the forcing
    if (op.domain == OpDomain::FaceBII) {
      rhs[0] = extrapolate_left_edge(f) / 2.0;
      rhs[n - 1] = extrapolate_right_edge(f) / 2.0;
    } else if (op.domain == OpDomain::FaceBIIConjugated) {
      rhs[0] = 0.0;
      rhs[n - 1] = extrapolate_right_edge(f) / 2.0;
    } else {  // cusp: left closure row
      rhs[0] = 0.0;
    }
  }
  auto u = op.A.solve(rhs);
  if (residual) {
    const auto Au = op.A.apply(u);
    double r = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
      r = std::max(r, std::abs(Au[i] - rhs[i]));
      scale = std::max(scale, std::abs(rhs[i]));
    }
    *residual = (scale > 0.0) ? r / scale : r;
  }
  return u;
}

SymmetrizedPencil symmetrized_pencil(const ModeOperator& op) {
  if (op.domain != OpDomain::Fiber)
    throw std::invalid_argument("pencil form is for fiber operators");
  const int n = int(op.A.diag.size());
  SymmetrizedPencil p;
  p.diag.resize(n);
  p.off.assign(n - 1, -1.0 / (op.h * op.h));
  p.d.resize(n);
  const double m2 = double(op.mode) * double(op.mode);
  for (int i = 0; i < n; ++i) {
    p.d[i] = op.weight[i] / op.h;  // lambda_i^2
    double b = 2.0 / (op.h * op.h) + m2 + 2.0 * p.d[i];
    const bool dir_lo = op.left.kind == BcKind::Dirichlet;
    const bool dir_hi = op.right.kind == BcKind::Dirichlet;
    if (i == 0) b += (dir_lo ? 1.0 : -1.0) / (op.h * op.h);
    if (i == n - 1) b += (dir_hi ? 1.0 : -1.0) / (op.h * op.h);
    p.diag[i] = b;
  }
  return p;
}

double smallest_pencil_eigenvalue(const ModeOperator& op) {
  const SymmetrizedPencil p = symmetrized_pencil(op);
  const int n = int(p.diag.size());
  std::vector<double> cdiag(n), coff(n - 1);
  for (int i = 0; i < n; ++i) cdiag[i] = p.diag[i] / p.d[i];
  for (int i = 0; i + 1 < n; ++i)
    coff[i] = p.off[i] / std::sqrt(p.d[i] * p.d[i + 1]);
  return tridiag_smallest_eigenvalue(cdiag, coff);
}

double weighted_norm(const ModeOperator& op, const std::vector<double>& u) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    s += op.weight[i] * u[i] * u[i];
  return std::sqrt(2.0 * kPi * s);
}

std::vector<double> solve_fiber(const MetricField& metric,
                                const std::vector<double>& f, int m_theta,
                                Bc left, Bc right) {
  const int n = metric.grid.n;
  if (m_theta < 2 || (m_theta & (m_theta - 1)) != 0)
    throw std::invalid_argument("solve_fiber: theta size must be 2^k");
  if (int(f.size()) != n * m_theta)
    throw std::invalid_argument("solve_fiber: size mismatch");
  // forward FFT along theta for each radial index
  std::vector<std::vector<std::complex<double>>> modes(
      m_theta, std::vector<std::complex<double>>(n));
  {
    std::vector<std::complex<double>> row(m_theta);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < m_theta; ++j) row[j] = f[i * m_theta + j];
      fft(row, false);
      for (int j = 0; j < m_theta; ++j) modes[j][i] = row[j];
    }
  }
  for (int j = 0; j < m_theta; ++j) {
    const int m = (j <= m_theta / 2) ? j : j - m_theta;
    ModeOperator op = assemble_fiber_mode(metric, m, left, right);
    std::vector<std::complex<double>> rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = modes[j][i] + op.rhs_bc[i];
    try {
      modes[j] = solve_tridiagonal(op.A.sub, op.A.diag, op.A.sup, rhs);
    } catch (const std::exception& e) {
      throw std::runtime_error("solve_fiber: mode " + std::to_string(m) +
                               ": " + e.what());
    }
  }
  std::vector<double> out(n * m_theta);
  std::vector<std::complex<double>> row(m_theta);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m_theta; ++j) row[j] = modes[j][i];
    fft(row, true);
    for (int j = 0; j < m_theta; ++j) out[i * m_theta + j] = row[j].real();
  }
  return out;
}

namespace {

double decaying_slope_fit(OpDomain face, int n) {
  ModeOperator op;
  switch (face) {
    case OpDomain::FaceBII: op = assemble_face_BII(n); break;
    case OpDomain::FaceBIIConjugated:
      op = assemble_face_BII_conjugated(n);
      break;
    case OpDomain::FaceBICusp: op = assemble_face_BI_cusp(n); break;
    default: throw std::invalid_argument("indicial fit: face operators only");
  }
  const double span = (face == OpDomain::FaceBICusp) ? ilog(kDiscRadius) : 1.0;
  std::vector<double> f(n);
  for (int i = 0; i < n; ++i) {
    const double r = op.grid[i] / span;
    const double d = (r - 0.55) / 0.08;
    f[i] = std::exp(-d * d);
  }
  auto u = solve_mode(op, f);
  // fit on a window clear of both the first cells and the forcing support
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    const double r = op.grid[i] / span;
    if (r >= 0.004 && r <= 0.02 && std::abs(u[i]) > 0.0) {
      xs.push_back(op.grid[i]);
      ys.push_back(std::abs(u[i]));
    }
  }
  return fitted_exponent(xs, ys);
}

}  // namespace

IndicialData indicial_roots(OpDomain face, int n_fit) {
  IndicialData d;
  d.face = face;
  switch (face) {
    case OpDomain::FaceBII:         // 2 - sigma(sigma-1) = 0
      d.b = -1.0; d.c = -2.0;
      break;
    case OpDomain::FaceBICusp:      // 2 - sigma(sigma+1) = 0
      d.b = 1.0; d.c = -2.0;
      break;
    case OpDomain::FaceBIIConjugated:  // 2 - (sigma-1)(sigma-2) = 0
      d.b = -3.0; d.c = 0.0;
      break;
    default:
      throw std::invalid_argument("indicial_roots: face operators only");
  }
  const double disc = d.b * d.b - 4.0 * d.c;
  if (!(disc > 0.0))
    throw std::runtime_error("indicial_roots: non-real or coincident roots");
  const double r1 = (-d.b + std::sqrt(disc)) / 2.0;
  const double r2 = (-d.b - std::sqrt(disc)) / 2.0;
  d.roots = {std::max(r1, r2), std::min(r1, r2)};
  d.fitted_slope = decaying_slope_fit(face, n_fit);
  return d;
}

double face_min_singular_value(OpDomain face, int n) {
  ModeOperator op;
  switch (face) {
    case OpDomain::FaceBII: op = assemble_face_BII(n); break;
    case OpDomain::FaceBIIConjugated:
      op = assemble_face_BII_conjugated(n);
      break;
    case OpDomain::FaceBICusp: op = assemble_face_BI_cusp(n); break;
    default: throw std::invalid_argument("face operators only");
  }
  return smallest_singular_value(op.A);
}

}  // namespace plumbmet

#include "plumbmet/metrics.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "plumbmet/numerics.hpp"

namespace plumbmet {

namespace {
constexpr double kPi = std::numbers::pi;

// pi*cot(pi m) - 1/m, stable near m = 0
double pi_cot_minus_inv(double m) {
  const double u = kPi * m;
  if (std::abs(u) < 1e-2) {
    const double u2 = u * u;
    return -kPi * u * (1.0 / 3.0 + u2 / 45.0 + 2.0 * u2 * u2 / 945.0);
  }
  return kPi * std::cos(u) / std::sin(u) - 1.0 / m;
}

// 1/m^2 - pi^2 csc^2(pi m), stable near m = 0
double inv_sq_minus_pi2_csc2(double m) {
  const double u = kPi * m;
  if (std::abs(u) < 1e-2) {
    const double u2 = u * u;
    return -kPi * kPi * (1.0 / 3.0 + u2 / 15.0 + 2.0 * u2 * u2 / 189.0);
  }
  const double s = std::sin(u);
  return 1.0 / (m * m) - kPi * kPi / (s * s);
}
}  // namespace

double Cutoff::chihat(double y) const { return smoothstep_profile(y); }
double Cutoff::chihat_d1(double y) const { return smoothstep_profile_d1(y); }
double Cutoff::chihat_d2(double y) const { return smoothstep_profile_d2(y); }
double Cutoff::chi_of_R(double R) const { return chihat(R / epsilon); }

FiberGrid FiberGrid::make(const FiberDomain& dom, int n, GridKind kind) {
  if (n < 4) throw std::invalid_argument("FiberGrid: n >= 4 required");
  FiberGrid g;
  g.dom = dom;
  g.kind = kind;
  g.n = n;
  g.s.resize(n);
  g.mu.resize(n);
  if (kind == GridKind::UniformMu) {
    g.h = (dom.s_hi - dom.s_lo) / n;  // spacing in s; mu spacing is h/|L|
    for (int i = 0; i < n; ++i) {
      g.s[i] = dom.s_lo + (i + 0.5) * g.h;
      g.mu[i] = g.s[i] / dom.L;
    }
  } else {
    // v = log(rho_z) = log(s_z/s_w) = log((s-L)/(-s)), increasing in s
    const double v_hi = std::log((dom.s_hi - dom.L) / (-dom.s_hi));
    const double v_lo = -v_hi;
    g.h = (v_hi - v_lo) / n;
    for (int i = 0; i < n; ++i) {
      const double v = v_lo + (i + 0.5) * g.h;
      const double mu = 1.0 / (1.0 + std::exp(v));  // mu decreasing in v
      g.s[i] = dom.L * mu;
      g.mu[i] = mu;
    }
    // order cells by increasing s (mu decreasing was produced above)
  }
  return g;
}

double plumbing_density(double mu, double L) {
  if (!(mu > 0.0) || !(mu < 1.0))
    throw std::domain_error("plumbing_density: mu must lie in (0,1)");
  if (!(L < 0.0)) throw std::domain_error("plumbing_density: L must be < 0");
  return (kPi / -L) / std::sin(kPi * mu);
}

double cusp_density(double s) {
  if (!(s < 0.0)) throw std::domain_error("cusp_density: s must be < 0");
  return -1.0 / s;
}

double cusp_extension_density(double s, double L) {
  const double mu = s / L;
  return (mu <= 0.5) ? -1.0 / s : 1.0 / (s - L);
}

double corner_R(double s, double L) {
  return std::hypot(1.0 / s, 1.0 / (s - L));
}

double corner_R_d1(double s, double L) {
  const double R = corner_R(s, L);
  const double a = 1.0 / (s * s * s), b = 1.0 / std::pow(s - L, 3);
  return -(a + b) / R;
}

double corner_R_d2(double s, double L) {
  const double R = corner_R(s, L);
  const double R1 = corner_R_d1(s, L);
  const double a = 3.0 / std::pow(s, 4), b = 3.0 / std::pow(s - L, 4);
  return (a + b - R1 * R1) / R;
}

double graft_log_ratio(double s, double L) {
  const double mu = s / L;
  const double m = std::min(mu, 1.0 - mu);
  const double u = kPi * m;
  if (u < 1e-3) {
    const double u2 = u * u;
    return -u2 / 6.0 - u2 * u2 / 180.0;
  }
  return std::log(std::sin(u) / u);
}

double graft_log_ratio_d1(double s, double L) {
  const double mu = s / L;
  const double zside = (mu <= 0.5);
  const double m = zside ? mu : 1.0 - mu;
  const double dm = (zside ? 1.0 : -1.0) / L;
  return dm * pi_cot_minus_inv(m);
}

double graft_log_ratio_d2(double s, double L) {
  const double mu = s / L;
  const double m = std::min(mu, 1.0 - mu);
  return inv_sq_minus_pi2_csc2(m) / (L * L);
}

double grafted_density(double s, double L, const Cutoff& cutoff) {
  const double chi = cutoff.chi_of_R(corner_R(s, L));
  if (chi >= 1.0) return plumbing_density(s / L, L);
  if (chi <= 0.0) return cusp_extension_density(s, L);
  return plumbing_density(s / L, L) *
         std::exp((1.0 - chi) * graft_log_ratio(s, L));
}

double grafted_curvature(double s, double L, const Cutoff& cutoff) {
  const double R = corner_R(s, L);
  const double y = R / cutoff.epsilon;
  const double chi = cutoff.chihat(y);
  double g = 0.0, g2 = 0.0;
  if (chi < 1.0) {
    const double R1 = corner_R_d1(s, L), R2 = corner_R_d2(s, L);
    const double c1 = cutoff.chihat_d1(y) * R1 / cutoff.epsilon;
    const double c2 =
        cutoff.chihat_d2(y) * R1 * R1 / (cutoff.epsilon * cutoff.epsilon) +
        cutoff.chihat_d1(y) * R2 / cutoff.epsilon;
    const double d = graft_log_ratio(s, L);
    const double d1 = graft_log_ratio_d1(s, L);
    const double d2 = graft_log_ratio_d2(s, L);
    g = (1.0 - chi) * d;
    g2 = (1.0 - chi) * d2 - 2.0 * c1 * d1 - c2 * d;
  }
  const double mu = s / L;
  const double sin_mu = std::sin(kPi * mu);
  const double lam_p_m2 = (L / kPi) * (L / kPi) * sin_mu * sin_mu;
  return -std::exp(-2.0 * g) * (1.0 + lam_p_m2 * g2);
}

MetricField make_metric_L(double L, MetricKind kind, int n, GridKind gkind,
                          const Cutoff& cutoff) {
  if (kind == MetricKind::Grafted) {
    // both transition bands must fit between the neck and the circles
    const double R_neck = corner_R(0.5 * L, L);  // = 2 sqrt(2) / |L|
    if (!(R_neck < 0.5 * cutoff.epsilon))
      throw std::domain_error(
          "graft: transition regions overlap at this t; decrease |t| or "
          "epsilon");
    const double R_edge = corner_R(std::log(kDiscRadius), L);
    if (!(cutoff.epsilon < R_edge))
      throw std::domain_error("graft: transition leaves the fiber");
  }
  MetricField m;
  m.grid = FiberGrid::make(fiber_chart_L(L), n, gkind);
  m.kind = kind;
  m.cutoff = cutoff;
  m.analytic = kind != MetricKind::Conformal;
  m.density.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = m.grid.s[i];
    switch (kind) {
      case MetricKind::Plumbing:
        m.density[i] = plumbing_density(m.grid.mu[i], L);
        break;
      case MetricKind::CuspExtension:
        m.density[i] = cusp_extension_density(s, L);
        break;
      case MetricKind::Grafted:
        m.density[i] = grafted_density(s, L, cutoff);
        break;
      case MetricKind::Conformal:
        throw std::invalid_argument("use conformal_metric()");
    }
    if (!(m.density[i] > 0.0))
      throw std::runtime_error("make_metric: density not positive");
  }
  return m;
}

MetricField make_metric(std::complex<double> t, MetricKind kind, int n,
                        GridKind gkind, const Cutoff& cutoff) {
  const double a = std::abs(t);
  if (!(a > 0.0) || a > kParamRadius)
    throw std::domain_error("make_metric: need 0 < |t| <= 1/2");
  return make_metric_L(std::log(a), kind, n, gkind, cutoff);
}

MetricField conformal_metric(const MetricField& base,
                             const std::vector<double>& phi) {
  if (int(phi.size()) != base.grid.n)
    throw std::invalid_argument("conformal_metric: size mismatch");
  MetricField m = base;
  m.kind = MetricKind::Conformal;
  m.conf_base = base.kind;
  m.conf_factor = phi;
  m.analytic = false;
  for (int i = 0; i < m.grid.n; ++i) m.density[i] *= std::exp(phi[i]);
  return m;
}

namespace {

std::vector<double> curvature_fd(const MetricField& m) {
  const auto& g = m.grid;
  const int n = g.n;
  std::vector<double> loglam(n), R(n);
  for (int i = 0; i < n; ++i) loglam[i] = std::log(m.density[i]);
  const double L = g.dom.L;
  // second difference in the grid's own variable
  auto d1 = [&](int i) {
    if (i == 0) return (-1.5 * loglam[0] + 2.0 * loglam[1] - 0.5 * loglam[2]) / g.h;
    if (i == n - 1)
      return (1.5 * loglam[n - 1] - 2.0 * loglam[n - 2] + 0.5 * loglam[n - 3]) /
             g.h;
    return (loglam[i + 1] - loglam[i - 1]) / (2.0 * g.h);
  };
  auto d2 = [&](int i) {
    if (i == 0)
      return (2.0 * loglam[0] - 5.0 * loglam[1] + 4.0 * loglam[2] -
              loglam[3]) /
             (g.h * g.h);
    if (i == n - 1)
      return (2.0 * loglam[n - 1] - 5.0 * loglam[n - 2] + 4.0 * loglam[n - 3] -
              loglam[n - 4]) /
             (g.h * g.h);
    return (loglam[i - 1] - 2.0 * loglam[i] + loglam[i + 1]) / (g.h * g.h);
  };
  for (int i = 0; i < n; ++i) {
    double dss;
    if (g.kind == GridKind::UniformMu) {
      dss = d2(i);  // h is already the s spacing
    } else {
      // s-derivatives from v-derivatives: d/ds = v'(s) d/dv
      const double s = g.s[i];
      const double vp = 1.0 / (s - L) - 1.0 / s;        // s_w + s_z
      const double vpp = 1.0 / (s * s) - 1.0 / ((s - L) * (s - L));
      dss = vp * vp * d2(i) + vpp * d1(i);
    }
    const double lam = m.density[i];
    R[i] = (lam > 0.0) ? -dss / (lam * lam)
                       : std::numeric_limits<double>::quiet_NaN();
  }
  return R;
}

}  // namespace

std::vector<double> gauss_curvature(const MetricField& m,
                                    CurvatureMethod method) {
  const auto& g = m.grid;
  const int n = g.n;
  if (method == CurvatureMethod::FiniteDifference || !m.analytic)
    return curvature_fd(m);
  std::vector<double> R(n);
  const double L = g.dom.L;
  for (int i = 0; i < n; ++i) {
    const double s = g.s[i];
    const double lam = m.density[i];
    switch (m.kind) {
      case MetricKind::Plumbing: {
        const double c = kPi / (L * std::sin(kPi * g.mu[i]));
        R[i] = -(c * c) / (lam * lam);
        break;
      }
      case MetricKind::CuspExtension: {
        const double mu = g.mu[i];
        const double d2 =
            (mu <= 0.5) ? 1.0 / (s * s) : 1.0 / ((s - L) * (s - L));
        R[i] = -d2 / (lam * lam);
        break;
      }
      case MetricKind::Grafted:
        R[i] = grafted_curvature(s, L, m.cutoff);
        break;
      case MetricKind::Conformal:
        R[i] = std::numeric_limits<double>::quiet_NaN();
        break;
    }
  }
  return R;
}

std::vector<double> conformal_curvature(const std::vector<double>& R_h,
                                        const std::vector<double>& f,
                                        const std::vector<double>& lap_f) {
  if (R_h.size() != f.size() || f.size() != lap_f.size())
    throw std::invalid_argument("conformal_curvature: size mismatch");
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i)
    out[i] = std::exp(-2.0 * f[i]) * (lap_f[i] + R_h[i]);
  return out;
}

double fiber_area_closed_form(double L) {
  const double s1 = std::log(kDiscRadius);
  const double s0 = L - s1;
  auto cot = [](double u) { return std::cos(u) / std::sin(u); };
  return 2.0 * kPi * (kPi / L) * (cot(kPi * s0 / L) - cot(kPi * s1 / L));
}

double fiber_area_quadrature(double L, int panels) {
  const double s1 = std::log(kDiscRadius);
  const double s0 = L - s1;
  auto lam2 = [&](double s) {
    const double lam = plumbing_density(s / L, L);
    return lam * lam;
  };
  return 2.0 * kPi * simpson(lam2, s0, s1, panels);
}

double area_form_factor(double rho_z) {
  if (!(rho_z > 0.0) || rho_z > 1.0)
    throw std::domain_error("area_form_factor: rho_z in (0,1]");
  const double one_p = 1.0 + rho_z;
  const double sn = std::sin(kPi * rho_z / one_p);
  return kPi * kPi * rho_z * rho_z / (sn * sn * one_p * one_p * one_p);
}

double exact_conformal_factor(double s, double L, const Cutoff& cutoff) {
  const double chi = cutoff.chi_of_R(corner_R(s, L));
  if (chi >= 1.0) return 0.0;
  return -(1.0 - chi) * graft_log_ratio(s, L);
}

}  // namespace plumbmet

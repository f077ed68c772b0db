#pragma once

#include <complex>
#include <vector>

#include "plumbmet/charts.hpp"

namespace plumbmet {

/// Smooth cutoff chi = chihat(R/epsilon) in the corner radial variable
/// R = (s_z^2 + s_w^2)^{1/2}: equal to 1 for R <= epsilon/2 and 0 for
/// R >= epsilon.
struct Cutoff {
  double epsilon = 2.0;

  double chi_of_R(double R) const;
  double chihat(double y) const;      // profile on [0, inf)
  double chihat_d1(double y) const;
  double chihat_d2(double y) const;
};

enum class GridKind { UniformMu, UniformLogRatio };

/// Cell-centered sampling of one annulus fiber.  UniformMu places the
/// cells uniformly in mu = s/L (equivalently in s); UniformLogRatio is
/// uniform in v = log(s_z/s_w), which resolves both cusp regions
/// uniformly in t.
struct FiberGrid {
  FiberDomain dom;
  GridKind kind = GridKind::UniformMu;
  int n = 0;
  double h = 0.0;                // spacing in the kind variable
  std::vector<double> s;         // cell centers, s = log|z|
  std::vector<double> mu;

  static FiberGrid make(const FiberDomain& dom, int n, GridKind kind);
};

enum class MetricKind { Plumbing, CuspExtension, Grafted, Conformal };

/// Conformal fiber metric lambda(s)^2 (ds^2 + dtheta^2).
struct MetricField {
  FiberGrid grid;
  MetricKind kind = MetricKind::Plumbing;
  std::vector<double> density;   // lambda at the cell centers
  bool analytic = true;
  Cutoff cutoff;                 // used by the grafted kind
  std::vector<double> conf_factor;  // phi for Conformal: lambda = e^phi base
  MetricKind conf_base = MetricKind::Plumbing;
};

/// Density of the model hyperbolic metric at mu = s/L: (pi/|L|)csc(pi mu).
double plumbing_density(double mu, double L);
/// Density 1/|s| of the cusp metric (|dz| / (|z| log|z|))^2.
double cusp_density(double s);
/// Piecewise nearest-cusp density: 1/|s| for mu <= 1/2, 1/(s-L) above.
double cusp_extension_density(double s, double L);
/// Grafted density: log lambda = chi log lambda_pl + (1-chi) log lambda_cusp.
double grafted_density(double s, double L, const Cutoff& cutoff);

/// Corner radial variable R and its s-derivatives along the fiber.
double corner_R(double s, double L);
double corner_R_d1(double s, double L);
double corner_R_d2(double s, double L);

MetricField make_metric(std::complex<double> t, MetricKind kind, int n,
                        GridKind gkind = GridKind::UniformMu,
                        const Cutoff& cutoff = Cutoff{});
MetricField make_metric_L(double L, MetricKind kind, int n,
                          GridKind gkind = GridKind::UniformMu,
                          const Cutoff& cutoff = Cutoff{});
/// e^{2 phi} times the base metric, phi sampled on the same grid.
MetricField conformal_metric(const MetricField& base,
                             const std::vector<double>& phi);

enum class CurvatureMethod { AnalyticDerivative, FiniteDifference };

/// Gauss curvature -lambda^{-2} (log lambda)'' at the cell centers.
std::vector<double> gauss_curvature(const MetricField& m,
                                    CurvatureMethod method);

/// Exact curvature of the grafted metric at one point.
double grafted_curvature(double s, double L, const Cutoff& cutoff);

/// R(g) = e^{-2f} (Delta_h f + R(h)) for g = e^{2f} h, Delta nonnegative.
std::vector<double> conformal_curvature(const std::vector<double>& R_h,
                                        const std::vector<double>& f,
                                        const std::vector<double>& lap_f);

/// Fiber area of the plumbing metric by quadrature and in closed form
/// 2 pi (pi/L)(cot(pi s0/L) - cot(pi s1/L)).
double fiber_area_quadrature(double L, int panels = 1 << 15);
double fiber_area_closed_form(double L);

/// Density of the fiber area form against s_w (d rho_z / rho_z) dtheta_z
/// for rho_z in (0, 1]; t-independent positive bounds are an invariant.
double area_form_factor(double rho_z);

/// Conformal factor with e^{2 f} h = g_pl exactly for the grafted h.
double exact_conformal_factor(double s, double L, const Cutoff& cutoff);

/// delta = log(lambda_cusp-ext / lambda_pl) on the side of s, and its
/// s-derivatives; smooth except at the neck where chi = 1 masks it.
double graft_log_ratio(double s, double L);
double graft_log_ratio_d1(double s, double L);
double graft_log_ratio_d2(double s, double L);

}  // namespace plumbmet

#pragma once

#include <complex>

namespace plumbmet {

/// Truncation radii of the local model: |z|, |w| <= kDiscRadius and
/// |t| <= kParamRadius.
inline constexpr double kDiscRadius = 0.75;
inline constexpr double kParamRadius = 0.5;

/// 1/log(1/x) for x in (0,1); throws std::domain_error otherwise.
double ilog(double x);

/// s_z s_w / (s_z + s_w) for positive arguments.
double st_from(double s_z, double s_w);

double normalize_angle(double theta);  // representative in [0, 2*pi)

/// Point of the truncated model in polar coordinates of z and w.
struct PlumbingPoint {
  double r_z, r_w;
  double theta_z, theta_w;

  PlumbingPoint(double r_z, double r_w, double theta_z, double theta_w);
  double r_t() const { return r_z * r_w; }
  double theta_t() const { return normalize_angle(theta_z + theta_w); }
};

/// Same point in inverted-logarithm radial coordinates.
struct LogPoint {
  double s_z, s_w;
  double theta_z, theta_w;

  LogPoint(double s_z, double s_w, double theta_z, double theta_w);
  double s_t() const { return st_from(s_z, s_w); }

  static LogPoint from_plumbing(const PlumbingPoint& p);
  PlumbingPoint to_plumbing() const;
};

enum class ChartTag { NearBIz, NearBIw };

/// Point after the radial blow-up of the corner s_z = s_w = 0.
/// R is the front-face defining function, R_z^2 + R_w^2 = 1, and the
/// chart coordinates are (rho_I, rho_II) with rho_I the ratio
/// coordinate (rho_z = s_z/s_w or its reciprocal) and rho_II the
/// opposite inverted logarithm.
struct BlowupPoint {
  double R, R_z, R_w;
  double theta_z, theta_w;
  ChartTag tag;
  double rho_z;    // s_z / s_w, any chart
  double rho_I;    // chart defining function of the resolved fiber face
  double rho_II;   // chart defining function of the front face
  double mu;       // log|z| / log|t| = 1/(1 + rho_z)

  double s_t() const;
};

BlowupPoint to_blowup(const LogPoint& p);
LogPoint from_blowup(const BlowupPoint& b);

/// Annulus fiber above t != 0 in coordinates s = log|z|, theta.
struct FiberDomain {
  double L;      // log|t| < 0
  double s_lo, s_hi;
  double mu_lo, mu_hi;

  double mu_of_s(double s) const { return s / L; }
  double s_of_mu(double mu) const { return mu * L; }
  double st() const { return -1.0 / L; }
  LogPoint log_point(double s, double theta_z) const;
};

FiberDomain fiber_chart(std::complex<double> t);
FiberDomain fiber_chart_L(double L);

}  // namespace plumbmet

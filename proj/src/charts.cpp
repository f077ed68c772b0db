#include "plumbmet/charts.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace plumbmet {

double ilog(double x) {
  if (!(x > 0.0) || !(x < 1.0))
    throw std::domain_error("ilog: argument must lie in (0,1)");
  return -1.0 / std::log(x);
}

double st_from(double s_z, double s_w) {
  if (!(s_z > 0.0) || !(s_w > 0.0))
    throw std::domain_error("st_from: arguments must be positive");
  return s_z * s_w / (s_z + s_w);
}

double normalize_angle(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double r = std::fmod(theta, two_pi);
  if (r < 0.0) r += two_pi;
  return r;
}

PlumbingPoint::PlumbingPoint(double rz, double rw, double tz, double tw)
    : r_z(rz), r_w(rw), theta_z(normalize_angle(tz)),
      theta_w(normalize_angle(tw)) {
  if (!(r_z > 0.0) || r_z > kDiscRadius || !(r_w > 0.0) || r_w > kDiscRadius)
    throw std::domain_error("PlumbingPoint: radius out of range");
  if (r_z * r_w > kParamRadius)
    throw std::domain_error("PlumbingPoint: |t| out of range");
}

LogPoint::LogPoint(double sz, double sw, double tz, double tw)
    : s_z(sz), s_w(sw), theta_z(normalize_angle(tz)),
      theta_w(normalize_angle(tw)) {
  const double s_max = ilog(kDiscRadius);
  if (!(s_z > 0.0) || s_z > s_max || !(s_w > 0.0) || s_w > s_max)
    throw std::domain_error("LogPoint: coordinate out of range");
}

LogPoint LogPoint::from_plumbing(const PlumbingPoint& p) {
  return LogPoint(ilog(p.r_z), ilog(p.r_w), p.theta_z, p.theta_w);
}

PlumbingPoint LogPoint::to_plumbing() const {
  return PlumbingPoint(std::exp(-1.0 / s_z), std::exp(-1.0 / s_w), theta_z,
                       theta_w);
}

double BlowupPoint::s_t() const { return R_z * R * R_w / (R_z + R_w); }

BlowupPoint to_blowup(const LogPoint& p) {
  BlowupPoint b{};
  b.R = std::hypot(p.s_z, p.s_w);
  b.R_z = p.s_z / b.R;
  b.R_w = p.s_w / b.R;
  b.theta_z = p.theta_z;
  b.theta_w = p.theta_w;
  b.rho_z = p.s_z / p.s_w;
  b.mu = 1.0 / (1.0 + b.rho_z);
  if (b.rho_z <= 1.0) {  // shared line goes to the z chart
    b.tag = ChartTag::NearBIz;
    b.rho_I = b.rho_z;
    b.rho_II = p.s_w;
  } else {
    b.tag = ChartTag::NearBIw;
    b.rho_I = 1.0 / b.rho_z;
    b.rho_II = p.s_z;
  }
  return b;
}

LogPoint from_blowup(const BlowupPoint& b) {
  return LogPoint(b.R * b.R_z, b.R * b.R_w, b.theta_z, b.theta_w);
}

LogPoint FiberDomain::log_point(double s, double theta_z) const {
  // s = log|z|, log|w| = L - s; theta_w chosen so theta_t = 0
  return LogPoint(-1.0 / s, -1.0 / (L - s), theta_z, -theta_z);
}

FiberDomain fiber_chart_L(double L) {
  if (!(L <= std::log(kParamRadius)))
    throw std::domain_error("fiber_chart: |t| must lie in (0, 1/2]");
  FiberDomain d{};
  d.L = L;
  d.s_hi = std::log(kDiscRadius);
  d.s_lo = L - d.s_hi;
  d.mu_lo = d.s_hi / L;  // = mu at the |z| = 3/4 circle
  d.mu_hi = 1.0 - d.mu_lo;
  return d;
}

FiberDomain fiber_chart(std::complex<double> t) {
  const double a = std::abs(t);
  if (!(a > 0.0))
    throw std::domain_error("fiber_chart: t = 0 has no annulus fiber");
  return fiber_chart_L(std::log(a));
}

}  // namespace plumbmet

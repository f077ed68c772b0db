#include "plumbmet/expansion.hpp"
#include <cstdio>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "plumbmet/metrics.hpp"

namespace plumbmet {

namespace {

constexpr double kPi = std::numbers::pi;

using Vec = std::vector<double>;

Samples share(Vec v) { return std::make_shared<const Vec>(std::move(v)); }

double ipow(double x, int n) {
  double r = 1.0;
  for (int i = 0; i < n; ++i) r *= x;
  return r;
}

long binom(int n, int k) {
  long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// b-derivative x v'(x) on a cell-centered grid of spacing h
Vec bderiv(const Vec& v, const Vec& coord, double h, double sign) {
  const int n = int(v.size());
  Vec out(n);
  for (int i = 0; i < n; ++i) {
    double d;
    if (i == 0)
      d = (-1.5 * v[0] + 2.0 * v[1] - 0.5 * v[2]) / h;
    else if (i == n - 1)
      d = (1.5 * v[n - 1] - 2.0 * v[n - 2] + 0.5 * v[n - 3]) / h;
    else
      d = (v[i + 1] - v[i - 1]) / (2.0 * h);
    out[i] = sign * coord[i] * d;
  }
  return out;
}

}  // namespace

std::shared_ptr<const FaceGrids> FaceGrids::make(int n_x, int n_mu) {
  if (n_x < 16 || n_mu < 16)
    throw std::invalid_argument("FaceGrids: need at least 16 cells");
  auto g = std::make_shared<FaceGrids>();
  g->n_x = n_x;
  g->n_mu = n_mu;
  g->x_max = ilog(kDiscRadius);
  g->hx = g->x_max / n_x;
  g->hmu = 1.0 / n_mu;
  g->x.resize(n_x);
  g->mu.resize(n_mu);
  for (int i = 0; i < n_x; ++i) g->x[i] = (i + 0.5) * g->hx;
  for (int i = 0; i < n_mu; ++i) g->mu[i] = (i + 0.5) * g->hmu;
  return g;
}

int LogPoly::degree() const {
  int d = 0;
  for (const auto& t : terms) d = std::max(d, t.k + t.l);
  return d;
}
int LogPoly::max_log_rhoI() const {
  int d = 0;
  for (const auto& t : terms) d = std::max(d, t.k);
  return d;
}
int LogPoly::max_log_rhoII() const {
  int d = 0;
  for (const auto& t : terms) d = std::max(d, t.l);
  return d;
}
int LogPoly::min_pow_rhoI() const {
  int d = 1 << 20;
  for (const auto& t : terms) d = std::min(d, t.a + t.j);
  return terms.empty() ? 0 : d;
}
int LogPoly::min_pow_rhoII() const {
  int d = 1 << 20;
  for (const auto& t : terms) d = std::min(d, t.b + t.j);
  return terms.empty() ? 0 : d;
}

LogPoly constant_poly(std::shared_ptr<const FaceGrids> grids, double c) {
  LogPoly p;
  p.grids = std::move(grids);
  if (c != 0.0) p.terms.push_back(LogTerm{0, 0, 0, 0, 0, c, nullptr, nullptr});
  return p;
}

LogPoly face_BI_poly(std::shared_ptr<const FaceGrids> grids, const Vec& cI,
                     int b) {
  if (int(cI.size()) != grids->n_x)
    throw std::invalid_argument("face_BI_poly: wrong sample count");
  LogPoly p;
  p.grids = std::move(grids);
  p.terms.push_back(LogTerm{0, 0, b, 0, 0, 1.0, share(cI), nullptr});
  return p;
}

void poly_compress(LogPoly& p) {
  std::map<std::tuple<int, int, int, int, int, const Vec*, const Vec*>,
           LogTerm>
      acc;
  for (const auto& t : p.terms) {
    if (t.coef == 0.0) continue;
    auto key =
        std::make_tuple(t.j, t.a, t.b, t.k, t.l, t.cI.get(), t.cII.get());
    auto it = acc.find(key);
    if (it == acc.end())
      acc.emplace(key, t);
    else
      it->second.coef += t.coef;
  }
  // relative pruning: cancellation residues far below the polynomial's
  // own scale carry no information and would pollute the term structure
  double scale = 0.0;
  for (auto& [key, t] : acc) {
    double sup = 0.0;
    if (t.cI)
      for (double v : *t.cI) sup = std::max(sup, std::abs(v));
    else
      sup = 1.0;
    double sup2 = 0.0;
    if (t.cII)
      for (double v : *t.cII) sup2 = std::max(sup2, std::abs(v));
    else
      sup2 = 1.0;
    scale = std::max(scale, std::abs(t.coef) * sup * sup2);
  }
  std::vector<LogTerm> out;
  out.reserve(acc.size());
  for (auto& [key, t] : acc) {
    double sup = 1.0, sup2 = 1.0;
    if (t.cI) {
      sup = 0.0;
      for (double v : *t.cI) sup = std::max(sup, std::abs(v));
    }
    if (t.cII) {
      sup2 = 0.0;
      for (double v : *t.cII) sup2 = std::max(sup2, std::abs(v));
    }
    if (std::abs(t.coef) * sup * sup2 > 1e-13 * scale) out.push_back(t);
  }
  // terms equal up to the cII array are summed into one fresh array
  std::map<std::tuple<int, int, int, int, int, const Vec*>, std::vector<int>>
      groups;
  for (int i = 0; i < int(out.size()); ++i) {
    const auto& t = out[i];
    groups[{t.j, t.a, t.b, t.k, t.l, t.cI.get()}].push_back(i);
  }
  std::vector<LogTerm> res;
  std::vector<char> used(out.size(), 0);
  for (auto& [key, idx] : groups) {
    if (int(idx.size()) < 3 || !p.grids) continue;
    const int n = p.grids->n_mu;
    Vec sum(n, 0.0);
    for (int i : idx) {
      const auto& t = out[i];
      for (int c = 0; c < n; ++c)
        sum[c] += t.coef * (t.cII ? (*t.cII)[c] : 1.0);
      used[i] = 1;
    }
    LogTerm m = out[idx[0]];
    m.coef = 1.0;
    m.cII = share(std::move(sum));
    res.push_back(m);
  }
  for (int i = 0; i < int(out.size()); ++i)
    if (!used[i]) res.push_back(out[i]);
  p.terms = std::move(res);
}

LogPoly poly_add(const LogPoly& p, const LogPoly& q) {
  if (p.grids && q.grids && p.grids != q.grids)
    throw std::invalid_argument("poly_add: face grid mismatch");
  LogPoly r;
  r.grids = p.grids ? p.grids : q.grids;
  r.terms = p.terms;
  r.terms.insert(r.terms.end(), q.terms.begin(), q.terms.end());
  poly_compress(r);
  return r;
}

LogPoly poly_scale(const LogPoly& p, double c) {
  LogPoly r = p;
  for (auto& t : r.terms) t.coef *= c;
  return r;
}

LogPoly poly_mul(const LogPoly& p, const LogPoly& q) {
  if (p.grids && q.grids && p.grids != q.grids)
    throw std::invalid_argument("poly_mul: face grid mismatch");
  LogPoly r;
  r.grids = p.grids ? p.grids : q.grids;
  const int deg_bound = p.degree() + q.degree();
  for (const auto& s : p.terms)
    for (const auto& t : q.terms) {
      LogTerm u;
      u.j = s.j + t.j;
      u.a = s.a + t.a;
      u.b = s.b + t.b;
      u.k = s.k + t.k;
      u.l = s.l + t.l;
      u.coef = s.coef * t.coef;
      if (s.cI && t.cI) {
        Vec v(*s.cI);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= (*t.cI)[i];
        u.cI = share(std::move(v));
      } else {
        u.cI = s.cI ? s.cI : t.cI;
      }
      if (s.cII && t.cII) {
        Vec v(*s.cII);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] *= (*t.cII)[i];
        u.cII = share(std::move(v));
      } else {
        u.cII = s.cII ? s.cII : t.cII;
      }
      r.terms.push_back(std::move(u));
    }
  poly_compress(r);
  if (r.degree() > deg_bound)
    throw std::logic_error("poly_mul: degree bound violated");
  return r;
}

double poly_eval_chart(const LogPoly& p, double x, double mu) {
  if (!p.grids) return 0.0;
  const auto& g = *p.grids;
  double sum = 0.0;
  const double lx = std::log(x), lm = std::log(mu);
  for (const auto& t : p.terms) {
    double v = t.coef * ipow(x * mu, t.j) * ipow(mu, t.a) * ipow(x, t.b) *
               ipow(lm, t.k) * ipow(lx, t.l);
    if (t.cI) v *= interp_cells(*t.cI, 0.0, g.hx, x);
    if (t.cII) v *= interp_cells(*t.cII, 0.0, g.hmu, mu);
    sum += v;
  }
  return sum;
}

double poly_eval(const LogPoly& p, double L, double s) {
  const double mu = s / L;
  if (mu <= 0.5) return poly_eval_chart(p, -1.0 / s, mu);
  return poly_eval_chart(p, 1.0 / (s - L), 1.0 - mu);
}

namespace {

enum class Rep { Canonical, StageBI, StageBII };

// D = x d/dx - mu d/dmu on one term.  In StageBI the k slot holds inert
// powers of log s_t, in StageBII the l slot does.
void derive_term(const LogTerm& t, Rep rep, const FaceGrids& g,
                 std::vector<LogTerm>& out) {
  if (t.b != t.a) {
    LogTerm u = t;
    u.coef *= double(t.b - t.a);
    out.push_back(u);
  }
  if (t.k > 0 && rep != Rep::StageBI) {
    LogTerm u = t;
    u.k -= 1;
    u.coef *= -double(t.k);
    out.push_back(u);
  }
  if (t.l > 0 && rep != Rep::StageBII) {
    LogTerm u = t;
    u.l -= 1;
    u.coef *= double(t.l);
    out.push_back(u);
  }
  if (t.cI) {
    LogTerm u = t;
    u.cI = share(bderiv(*t.cI, g.x, g.hx, 1.0));
    out.push_back(u);
  }
  if (t.cII) {
    LogTerm u = t;
    u.cII = share(bderiv(*t.cII, g.mu, g.hmu, -1.0));
    out.push_back(u);
  }
}

LogPoly derive(const LogPoly& p, Rep rep) {
  LogPoly r;
  r.grids = p.grids;
  for (const auto& t : p.terms) derive_term(t, rep, *p.grids, r.terms);
  poly_compress(r);
  return r;
}

Vec sampled_S(const FaceGrids& g) {
  Vec S(g.n_mu);
  for (int i = 0; i < g.n_mu; ++i) S[i] = sinc2_pi(g.mu[i]);
  return S;
}

LogPoly mul_cII(const LogPoly& p, const Samples& arr, int da = 0) {
  LogPoly r;
  r.grids = p.grids;
  for (const auto& t : p.terms) {
    LogTerm u = t;
    u.a += da;
    if (u.cII) {
      Vec v(*u.cII);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] *= (*arr)[i];
      u.cII = share(std::move(v));
    } else {
      u.cII = arr;
    }
    r.terms.push_back(std::move(u));
  }
  return r;
}

}  // namespace

LogPoly apply_model_operator(const LogPoly& p) {
  const auto S = share(sampled_S(*p.grids));
  LogPoly d1 = derive(p, Rep::Canonical);
  LogPoly d2 = derive(d1, Rep::Canonical);
  LogPoly dd = poly_add(d2, d1);
  LogPoly sdd = mul_cII(dd, S);
  LogPoly r = poly_add(poly_scale(p, 2.0), poly_scale(sdd, -1.0));
  poly_compress(r);
  return r;
}

// ---------------------------------------------------------------------
// representation changes between the canonical (X, Y) logs and the
// stage-local pairs (log s_t, Y) resp. (X, log s_t); log s_t = X + Y.

namespace {

LogPoly to_stage_BI(const LogPoly& p) {
  // X^k = (log s_t - Y)^k; k slot becomes the inert log s_t power
  LogPoly r;
  r.grids = p.grids;
  for (const auto& t : p.terms)
    for (int i = 0; i <= t.k; ++i) {
      LogTerm u = t;
      u.k = t.k - i;
      u.l = t.l + i;
      u.coef *= double(binom(t.k, i)) * ((i % 2) ? -1.0 : 1.0);
      r.terms.push_back(u);
    }
  poly_compress(r);
  return r;
}

LogPoly from_stage_BI(const LogPoly& p) {
  // (log s_t)^kappa = (X + Y)^kappa
  LogPoly r;
  r.grids = p.grids;
  for (const auto& t : p.terms)
    for (int i = 0; i <= t.k; ++i) {
      LogTerm u = t;
      u.k = i;
      u.l = t.l + t.k - i;
      u.coef *= double(binom(t.k, i));
      r.terms.push_back(u);
    }
  poly_compress(r);
  return r;
}

LogPoly to_stage_BII(const LogPoly& p) {
  // Y^l = (log s_t - X)^l; l slot becomes the inert log s_t power
  LogPoly r;
  r.grids = p.grids;
  for (const auto& t : p.terms)
    for (int i = 0; i <= t.l; ++i) {
      LogTerm u = t;
      u.l = t.l - i;
      u.k = t.k + i;
      u.coef *= double(binom(t.l, i)) * ((i % 2) ? -1.0 : 1.0);
      r.terms.push_back(u);
    }
  poly_compress(r);
  return r;
}

LogPoly from_stage_BII(const LogPoly& p) {
  LogPoly r;
  r.grids = p.grids;
  for (const auto& t : p.terms)
    for (int i = 0; i <= t.l; ++i) {
      LogTerm u = t;
      u.l = i;
      u.k = t.k + t.l - i;
      u.coef *= double(binom(t.l, i));
      r.terms.push_back(u);
    }
  poly_compress(r);
  return r;
}

// ---------------------------------------------------------------------
// cusp-face cascade (stage B_I representation: k inert, l = Y active)

struct CuspCascade {
  // arrays include the x prefactor; levels[p] multiplies Y^p
  std::vector<Vec> levels;
};

double taylor_x1(const Vec& v, const Vec& x) {
  Vec q(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) q[i] = v[i] / x[i];
  return extrapolate_left_edge(q);
}

CuspCascade cusp_cascade(const FaceGrids& g, std::vector<Vec> forcing,
                         double data) {
  const int P = int(forcing.size()) - 1;
  CuspCascade cc;
  cc.levels.assign(P + 2, Vec(g.n_x, 0.0));
  auto xd = [&](const Vec& v) { return bderiv(v, g.x, g.hx, 1.0); };
  for (int p = P; p >= 0; --p) {
    Vec rhs = forcing[p];
    {  // spillover from the two higher levels
      const Vec& v1 = cc.levels[p + 1];
      Vec d = xd(v1);
      for (int i = 0; i < g.n_x; ++i)
        rhs[i] += double(p + 1) * (2.0 * d[i] + v1[i]);
      if (p + 2 <= P + 1) {
        const Vec& v2 = cc.levels[p + 2];
        for (int i = 0; i < g.n_x; ++i)
          rhs[i] += double((p + 2) * (p + 1)) * v2[i];
      }
    }
    // resonance of the x^1 power with the indicial root 1: move a
    // multiple of the homogeneous branch x into the next log level
    const double r1 = taylor_x1(rhs, g.x);
    const double gamma = -r1 / (3.0 * double(p + 1));
    if (gamma != 0.0) {
      for (int i = 0; i < g.n_x; ++i) {
        cc.levels[p + 1][i] += gamma * g.x[i];
        rhs[i] += 3.0 * double(p + 1) * gamma * g.x[i];
      }
    }
    double level_data = 0.0;
    if (p == 0) {
      // the total solution carries the Dirichlet value at x_max; the
      // log-bearing levels contribute their boundary traces
      level_data = data;
      const double lxm = std::log(g.x_max);
      for (int q = 1; q < int(cc.levels.size()); ++q)
        level_data -= ipow(lxm, q) * extrapolate_right_edge(cc.levels[q]);
    }
    ModeOperator op = assemble_face_BI_cusp(g.n_x, g.x_max, 0, level_data);
    cc.levels[p] = solve_mode(op, rhs);
  }
  return cc;
}

// split off the x log x component of one cusp-level array;
// gamma returned, array replaced by the log-free part
double split_cusp_log(Vec& v, const FaceGrids& g) {
  // L_I-exactness: the log coefficient equals the x^1 Taylor coefficient
  // of L_I v divided by -3.  Fit it from the solved values instead.
  std::vector<double> xs, ys;
  for (int i = 0; i < g.n_x; ++i) {
    const double r = g.x[i] / g.x_max;
    if (r >= 0.003 && r <= 0.06) {
      xs.push_back(g.x[i]);
      ys.push_back(v[i]);
    }
  }
  if (xs.size() < 8) return 0.0;
  // basis x, x log x, x^2, x^3
  const int m = int(xs.size());
  std::vector<double> A(m * 4);
  for (int i = 0; i < m; ++i) {
    A[i * 4 + 0] = xs[i];
    A[i * 4 + 1] = xs[i] * std::log(xs[i]);
    A[i * 4 + 2] = xs[i] * xs[i];
    A[i * 4 + 3] = xs[i] * xs[i] * xs[i];
  }
  // normal equations (tiny system)
  double ata[16] = {0}, atb[4] = {0};
  for (int i = 0; i < m; ++i)
    for (int r = 0; r < 4; ++r) {
      atb[r] += A[i * 4 + r] * ys[i];
      for (int c = 0; c < 4; ++c) ata[r * 4 + c] += A[i * 4 + r] * A[i * 4 + c];
    }
  // gaussian elimination
  int idx[4] = {0, 1, 2, 3};
  for (int col = 0; col < 4; ++col) {
    int best = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::abs(ata[r * 4 + col]) > std::abs(ata[best * 4 + col])) best = r;
    for (int c = 0; c < 4; ++c) std::swap(ata[col * 4 + c], ata[best * 4 + c]);
    std::swap(atb[col], atb[best]);
    std::swap(idx[col], idx[best]);
    for (int r = col + 1; r < 4; ++r) {
      const double f = ata[r * 4 + col] / ata[col * 4 + col];
      for (int c = col; c < 4; ++c) ata[r * 4 + c] -= f * ata[col * 4 + c];
      atb[r] -= f * atb[col];
    }
  }
  double sol[4];
  for (int r = 3; r >= 0; --r) {
    double s = atb[r];
    for (int c = r + 1; c < 4; ++c) s -= ata[r * 4 + c] * sol[c];
    sol[r] = s / ata[r * 4 + r];
  }
  const double gamma = sol[1];
  double scale = 0.0;
  for (double y : v) scale = std::max(scale, std::abs(y));
  if (std::abs(gamma) < 1e-9 * scale) return 0.0;
  for (int i = 0; i < g.n_x; ++i)
    v[i] -= gamma * g.x[i] * std::log(g.x[i]);
  return gamma;
}

}  // namespace

LogPoly solve_model_BI(const LogPoly& g, double dirichlet_data) {
  if (!g.grids) throw std::invalid_argument("solve_model_BI: empty forcing");
  const auto& fg = *g.grids;
  // forcing must live on the cusp face with a rho_II prefactor
  int P = 0;
  for (const auto& t : g.terms) {
    if (t.a != 0 || t.k != 0 || t.b + t.j < 1)
      throw std::invalid_argument(
          "solve_model_BI: forcing must be rho_II * (Y polynomial)");
    P = std::max(P, t.l);
  }
  std::vector<Vec> forcing(P + 1, Vec(fg.n_x, 0.0));
  for (const auto& t : g.terms) {
    const double c0 = t.cII ? extrapolate_left_edge(*t.cII) : 1.0;
    for (int i = 0; i < fg.n_x; ++i) {
      double v = t.coef * c0 * ipow(fg.x[i], t.b + t.j);
      if (t.cI) v *= (*t.cI)[i];
      forcing[t.l][i] += v;
    }
  }
  auto cc = cusp_cascade(fg, std::move(forcing), dirichlet_data);
  LogPoly u;
  u.grids = g.grids;
  for (int p = 0; p < int(cc.levels.size()); ++p) {
    Vec vp = cc.levels[p];
    const double gamma = split_cusp_log(vp, fg);
    bool nz = false;
    for (double x : vp)
      if (x != 0.0) nz = true;
    if (nz) {
      Vec ci(fg.n_x);
      for (int i = 0; i < fg.n_x; ++i) ci[i] = vp[i] / fg.x[i];
      u.terms.push_back(LogTerm{0, 0, 1, 0, p, 1.0, share(ci), nullptr});
    }
    if (gamma != 0.0)
      u.terms.push_back(LogTerm{0, 0, 1, 0, p + 1, gamma, nullptr, nullptr});
  }
  poly_compress(u);
  return u;
}

// ---------------------------------------------------------------------
// front-face machinery

namespace {

// conjugated operator rows for the sigma = x/(1-mu) convention:
// 2 - S(mu) [ D^2 + (2c+1) D + (c^2 + c + Dc) ],  c = (1-2mu)/(1-mu)
struct SigmaFaceOp {
  std::shared_ptr<const FaceGrids> grids;
  BorderedTridiagonal A;
  Vec S, c;      // sampled coefficient arrays
  Vec root3;     // homogeneous mu^3 branch, marched from the left
  // calibration of the mu^3 log mu fit on this grid: the fitted log
  // coefficient of a solution whose exact log part is 1 * log(mu) root3
  double log_fit = 0.0;
  Vec log_shape;
};

Vec sampled_c(const FaceGrids& g) {
  Vec c(g.n_mu);
  for (int i = 0; i < g.n_mu; ++i)
    c[i] = (1.0 - 2.0 * g.mu[i]) / (1.0 - g.mu[i]);
  return c;
}

double fit_mu3_log(const Vec& w, const FaceGrids& g) {
  // least squares with basis mu, mu^2, mu^3, mu^4, mu^3 log mu
  std::vector<double> xs, ys;
  for (int i = 0; i < g.n_mu; ++i)
    if (g.mu[i] >= 0.004 && g.mu[i] <= 0.05) {
      xs.push_back(g.mu[i]);
      ys.push_back(w[i]);
    }
  const int m = int(xs.size());
  if (m < 10) return 0.0;
  const int K = 5;
  std::vector<double> ata(K * K, 0.0), atb(K, 0.0), row(K);
  for (int i = 0; i < m; ++i) {
    const double mu = xs[i];
    row[0] = mu;
    row[1] = mu * mu;
    row[2] = mu * mu * mu;
    row[3] = mu * mu * mu * mu;
    row[4] = mu * mu * mu * std::log(mu);
    for (int r = 0; r < K; ++r) {
      atb[r] += row[r] * ys[i];
      for (int c2 = 0; c2 < K; ++c2) ata[r * K + c2] += row[r] * row[c2];
    }
  }
  for (int col = 0; col < K; ++col) {
    int best = col;
    for (int r = col + 1; r < K; ++r)
      if (std::abs(ata[r * K + col]) > std::abs(ata[best * K + col])) best = r;
    for (int c2 = 0; c2 < K; ++c2)
      std::swap(ata[col * K + c2], ata[best * K + c2]);
    std::swap(atb[col], atb[best]);
    for (int r = col + 1; r < K; ++r) {
      const double f = ata[r * K + col] / ata[col * K + col];
      for (int c2 = col; c2 < K; ++c2) ata[r * K + c2] -= f * ata[col * K + c2];
      atb[r] -= f * atb[col];
    }
  }
  double sol[8];
  for (int r = K - 1; r >= 0; --r) {
    double s = atb[r];
    for (int c2 = r + 1; c2 < K; ++c2) s -= ata[r * K + c2] * sol[c2];
    sol[r] = s / ata[r * K + r];
  }
  return sol[4];
}

SigmaFaceOp make_sigma_op(std::shared_ptr<const FaceGrids> grids) {
  SigmaFaceOp op;
  op.grids = grids;
  const auto& g = *grids;
  const int n = g.n_mu;
  const double h = g.hmu;
  op.S = sampled_S(g);
  op.c = sampled_c(g);
  op.A.sub.assign(n, 0.0);
  op.A.diag.assign(n, 0.0);
  op.A.sup.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const double mu = g.mu[i], S = op.S[i], c = op.c[i];
    const double om = 1.0 - mu;
    const double e = c * c + c + mu / (om * om);
    op.A.sub[i] = -S * (mu * mu / (h * h) + c * mu / h);
    op.A.sup[i] = -S * (mu * mu / (h * h) - c * mu / h);
    op.A.diag[i] = 2.0 + 2.0 * S * mu * mu / (h * h) - S * e;
  }
  // both endpoints have roots {3, 0}: select the linearly-vanishing branch
  op.A.sub[0] = 0.0;
  op.A.diag[0] = 15.0;
  op.A.sup[0] = -10.0;
  op.A.first_extra = 3.0;
  op.A.sup[n - 1] = 0.0;
  op.A.diag[n - 1] = 15.0;
  op.A.sub[n - 1] = -10.0;
  op.A.last_extra = 3.0;
  // homogeneous root-3 solution, marched from a two-term series seed
  op.root3.assign(n, 0.0);
  op.root3[0] = ipow(g.mu[0], 3) * (1.0 - g.mu[0]);
  op.root3[1] = ipow(g.mu[1], 3) * (1.0 - g.mu[1]);
  for (int i = 2; i < n; ++i) {
    const double num = -op.A.sub[i - 1] * op.root3[i - 2] -
                       op.A.diag[i - 1] * op.root3[i - 1];
    op.root3[i] = num / op.A.sup[i - 1];
  }
  return op;
}

Vec sigma_solve(const SigmaFaceOp& op, Vec rhs) {
  rhs[0] = 0.0;
  rhs[rhs.size() - 1] = 0.0;
  return op.A.solve(rhs);
}

struct FrontCascade {
  std::vector<Vec> smooth;  // level q arrays (log-free part)
  std::vector<double> gamma;  // mu^3 log mu coefficients per level
};

// forcing[q] multiplies X^q; arrays are conjugated face data (T / sigma).
// The near half (mu <= 1/2) is authoritative; the far half of level 0
// absorbs the reflected truth so the assembled solution is globally
// consistent.
FrontCascade front_cascade(SigmaFaceOp& op, std::vector<Vec> forcing) {
  const auto& g = *op.grids;
  const int n = g.n_mu;
  const int Q = int(forcing.size()) - 1;
  // reflected far-half truth, all X powers lumped
  Vec t_far(n, 0.0);
  for (int i = 0; i < n; ++i) {
    if (g.mu[i] <= 0.5) continue;
    const int ir = n - 1 - i;  // reflected cell
    const double lx = std::log(1.0 - g.mu[i]);
    double s = 0.0;
    for (int q = 0; q <= Q; ++q) s += ipow(lx, q) * forcing[q][ir];
    t_far[i] = s;
  }
  for (int q = 0; q <= Q; ++q)
    for (int i = 0; i < n; ++i)
      if (g.mu[i] > 0.5) forcing[q][i] = (q == 0) ? t_far[i] : 0.0;

  if (op.log_shape.empty()) {
    // cache the response of the log-bearing branch
    Vec d = bderiv(op.root3, g.mu, g.hmu, -1.0);  // D root3
    Vec spill(n);
    for (int i = 0; i < n; ++i)
      spill[i] = op.S[i] * (2.0 * (d[i] + op.c[i] * op.root3[i]) +
                            op.root3[i]);
    op.log_shape = sigma_solve(op, spill);
    op.log_fit = fit_mu3_log(op.log_shape, g);
  }

  FrontCascade fc;
  fc.smooth.assign(Q + 1, Vec(n, 0.0));
  fc.gamma.assign(Q + 1, 0.0);
  std::vector<Vec> w(Q + 1, Vec(n, 0.0));  // unsplit level solutions
  auto Dc = [&](const Vec& v) {
    Vec d = bderiv(v, g.mu, g.hmu, -1.0);
    for (int i = 0; i < n; ++i) d[i] += op.c[i] * v[i];
    return d;
  };
  for (int q = Q; q >= 0; --q) {
    Vec rhs = forcing[q];
    if (q + 1 <= Q) {
      Vec d = Dc(w[q + 1]);
      for (int i = 0; i < n; ++i)
        rhs[i] -= op.S[i] * double(q + 1) * (2.0 * d[i] + w[q + 1][i]);
    }
    if (q + 2 <= Q) {
      for (int i = 0; i < n; ++i)
        rhs[i] += op.S[i] * double((q + 2) * (q + 1)) * w[q + 2][i];
    }
    w[q] = sigma_solve(op, rhs);
  }
  // representation split: w_q = smooth + gamma_q * log(mu) * root3,
  // with the fit calibrated against the known log-bearing shape
  for (int q = 0; q <= Q; ++q) {
    double gamma = fit_mu3_log(w[q], g);
    if (std::abs(op.log_fit) > 0.1) gamma /= op.log_fit;
    double scale = 0.0;
    for (double y : w[q]) scale = std::max(scale, std::abs(y));
    if (std::abs(gamma) < 1e-9 * scale || scale == 0.0) gamma = 0.0;
    fc.gamma[q] = gamma;
    fc.smooth[q] = w[q];
    if (gamma != 0.0)
      for (int i = 0; i < n; ++i)
        fc.smooth[q][i] -= gamma * std::log(g.mu[i]) * op.root3[i];
  }
  return fc;
}

}  // namespace

// ---------------------------------------------------------------------
// public front-face structured solves (levels 0 and 1, z-corner charts)

LogPoly solve_model_BII(const LogPoly& h, int conjugation_level) {
  if (!h.grids) throw std::invalid_argument("solve_model_BII: empty forcing");
  if (conjugation_level != 0 && conjugation_level != 1)
    throw std::invalid_argument("solve_model_BII: level must be 0 or 1");
  const auto& g = *h.grids;
  const int n = g.n_mu;
  int Q = 0;
  for (const auto& t : h.terms) {
    if (t.l != 0 || t.b != 0 || t.cI)
      throw std::invalid_argument(
          "solve_model_BII: forcing must be an X polynomial with front-face "
          "coefficients");
    Q = std::max(Q, t.k);
  }
  std::vector<Vec> forcing(Q + 1, Vec(n, 0.0));
  for (const auto& t : h.terms)
    for (int i = 0; i < n; ++i) {
      double v = t.coef * ipow(g.mu[i], t.a + t.j);
      if (t.cII) v *= (*t.cII)[i];
      forcing[t.k][i] += v;
    }

  ModeOperator op = (conjugation_level == 0) ? assemble_face_BII(n)
                                             : assemble_face_BII_conjugated(n);
  const Vec S = sampled_S(g);
  // homogeneous branch at the resonant root (2 resp. 3)
  Vec branch(n);
  if (conjugation_level == 0) {
    branch[0] = g.mu[0] * g.mu[0];
    branch[1] = g.mu[1] * g.mu[1];
  } else {
    branch[0] = ipow(g.mu[0], 3) * (1.0 + (kPi * kPi / 15.0) * g.mu[0] * g.mu[0]);
    branch[1] = ipow(g.mu[1], 3) * (1.0 + (kPi * kPi / 15.0) * g.mu[1] * g.mu[1]);
  }
  for (int i = 2; i < n; ++i)
    branch[i] = (-op.A.sub[i - 1] * branch[i - 2] -
                 op.A.diag[i - 1] * branch[i - 1]) /
                op.A.sup[i - 1];

  const int shift = (conjugation_level == 0) ? 1 : 3;  // 2 D + shift
  std::vector<Vec> w(Q + 1, Vec(n, 0.0));
  auto Dmu = [&](const Vec& v) { return bderiv(v, g.mu, g.hmu, -1.0); };
  for (int q = Q; q >= 0; --q) {
    Vec rhs = forcing[q];
    if (q + 1 <= Q) {
      Vec d = Dmu(w[q + 1]);
      for (int i = 0; i < n; ++i)
        rhs[i] -= S[i] * double(q + 1) * (2.0 * d[i] + double(shift) * w[q + 1][i]);
    }
    if (q + 2 <= Q)
      for (int i = 0; i < n; ++i)
        rhs[i] += S[i] * double((q + 2) * (q + 1)) * w[q + 2][i];
    w[q] = solve_mode(op, rhs);
  }
  // split the resonant log component  gamma * mu^r log mu * (branch/mu^r)
  LogPoly u;
  u.grids = h.grids;
  const int root = (conjugation_level == 0) ? 2 : 3;
  for (int q = 0; q <= Q; ++q) {
    double gamma;
    {
      // fit against basis {mu^0..mu^{root+1}, mu^root log mu}
      std::vector<double> xs, ys;
      for (int i = 0; i < n; ++i)
        if (g.mu[i] >= 0.004 && g.mu[i] <= 0.05) {
          xs.push_back(g.mu[i]);
          ys.push_back(w[q][i]);
        }
      const int m = int(xs.size());
      const int K = root + 3;
      std::vector<double> ata(K * K, 0.0), atb(K, 0.0), row(K);
      for (int i = 0; i < m; ++i) {
        double p = (conjugation_level == 0) ? 1.0 : xs[i];
        for (int r = 0; r + 1 < K; ++r) {
          row[r] = p;
          p *= xs[i];
        }
        row[K - 1] = ipow(xs[i], root) * std::log(xs[i]);
        for (int r = 0; r < K; ++r) {
          atb[r] += row[r] * ys[i];
          for (int c = 0; c < K; ++c) ata[r * K + c] += row[r] * row[c];
        }
      }
      for (int col = 0; col < K; ++col) {
        int best = col;
        for (int r = col + 1; r < K; ++r)
          if (std::abs(ata[r * K + col]) > std::abs(ata[best * K + col]))
            best = r;
        for (int c = 0; c < K; ++c)
          std::swap(ata[col * K + c], ata[best * K + c]);
        std::swap(atb[col], atb[best]);
        for (int r = col + 1; r < K; ++r) {
          const double f = ata[r * K + col] / ata[col * K + col];
          for (int c = col; c < K; ++c) ata[r * K + c] -= f * ata[col * K + c];
          atb[r] -= f * atb[col];
        }
      }
      std::vector<double> sol(K);
      for (int r = K - 1; r >= 0; --r) {
        double s = atb[r];
        for (int c = r + 1; c < K; ++c) s -= ata[r * K + c] * sol[c];
        sol[r] = s / ata[r * K + r];
      }
      gamma = sol[K - 1];
      double scale = 0.0;
      for (double y : w[q]) scale = std::max(scale, std::abs(y));
      if (std::abs(gamma) < 1e-9 * scale || scale == 0.0) gamma = 0.0;
    }
    Vec smooth = w[q];
    if (gamma != 0.0)
      for (int i = 0; i < n; ++i)
        smooth[i] -= gamma * ipow(g.mu[i], root) * std::log(g.mu[i]);
    bool nz = false;
    for (double v : smooth)
      if (v != 0.0) nz = true;
    if (nz)
      u.terms.push_back(LogTerm{0, 0, 0, q, 0, 1.0, nullptr, share(smooth)});
    if (gamma != 0.0) {
      Vec shape(n);
      for (int i = 0; i < n; ++i)
        shape[i] = branch[i] / ipow(g.mu[i], root);
      u.terms.push_back(
          LogTerm{0, root, 0, q + 1, 0, gamma, nullptr, share(shape)});
    }
  }
  poly_compress(u);
  return u;
}

// ---------------------------------------------------------------------
// order reduction

namespace {

struct EngineCache {
  std::shared_ptr<const FaceGrids> grids;
  std::shared_ptr<SigmaFaceOp> sigma;
  Samples one_minus_S_over_mu2;
};

EngineCache& cache_for(const std::shared_ptr<const FaceGrids>& grids) {
  static std::vector<std::shared_ptr<EngineCache>> caches;
  for (auto& c : caches)
    if (c->grids == grids) return *c;
  auto c = std::make_shared<EngineCache>();
  c->grids = grids;
  c->sigma = std::make_shared<SigmaFaceOp>(make_sigma_op(grids));
  const auto& g = *grids;
  Vec r(g.n_mu);
  for (int i = 0; i < g.n_mu; ++i)
    r[i] = -sinc2_pi_m1_over_m2(g.mu[i]);  // (1 - S)/mu^2
  c->one_minus_S_over_mu2 = share(std::move(r));
  caches.push_back(c);
  return *caches.back();
}

// fold x^{b-1} into cI so that every term carries exactly one rho_II power
void normalize_b(LogPoly& p) {
  const auto& g = *p.grids;
  for (auto& t : p.terms) {
    if (t.b == 1) continue;
    if (t.b < 1)
      throw std::invalid_argument("reduction: forcing needs a rho_II factor");
    Vec ci(g.n_x, 1.0);
    if (t.cI) ci = *t.cI;
    for (int i = 0; i < g.n_x; ++i) ci[i] *= ipow(g.x[i], t.b - 1);
    t.cI = share(std::move(ci));
    t.b = 1;
  }
}

}  // namespace

bool check_grading(const LogPoly& u, int K, int min_corner_a) {
  for (const auto& t : u.terms) {
    if (t.b + t.j < 1) return false;
    const bool smooth_class = (t.k + t.l <= K);
    const bool corner_class =
        (t.a + t.j >= min_corner_a && t.k + t.l <= K + 1 && t.l <= K);
    if (!smooth_class && !corner_class) return false;
  }
  return true;
}

ReductionResult reduction_step(const LogPoly& f_in, double dirichlet_data) {
  if (!f_in.grids) throw std::invalid_argument("reduction_step: no grids");
  const auto& g = *f_in.grids;
  EngineCache& cache = cache_for(f_in.grids);

  LogPoly f = f_in;
  for (auto& t : f.terms) {
    t.b += t.j;  // fold series powers into the plain tags
    t.a += t.j;
    t.j = 0;
  }
  normalize_b(f);

  // infer the input grade and validate f in x P^K + mu x P^{K+1}
  int K = 0;
  for (const auto& t : f.terms)
    K = std::max(K, (t.a == 0) ? t.k + t.l : t.k + t.l - 1);
  for (const auto& t : f.terms)
    if (t.a == 0 && t.k + t.l > K)
      throw std::invalid_argument("reduction_step: grading violation");

  LogPoly u;
  u.grids = f_in.grids;
  LogPoly r = f;

  // ---- stage one: cusp face ----
  r = to_stage_BI(r);
  for (int guard = 0;; ++guard) {
    if (guard > 4 * (K + 4))
      throw std::logic_error("reduction_step: cusp stage did not terminate");
    // peel terms without rho_I vanishing, grouped by the inert log power
    std::map<int, std::vector<LogTerm>> peel;
    std::vector<LogTerm> keep;
    for (auto& t : r.terms) {
      if (t.a == 0)
        peel[t.k].push_back(t);
      else
        keep.push_back(t);
    }
    if (peel.empty()) break;
    r.terms = std::move(keep);
    for (auto& [kappa, ts] : peel) {
      int P = 0;
      for (auto& t : ts) P = std::max(P, t.l);
      std::vector<Vec> forcing(P + 1, Vec(g.n_x, 0.0));
      for (auto& t : ts) {
        const double c0 = t.cII ? extrapolate_left_edge(*t.cII) : 1.0;
        for (int i = 0; i < g.n_x; ++i) {
          double v = t.coef * c0 * g.x[i];
          if (t.cI) v *= (*t.cI)[i];
          forcing[t.l][i] += v;
        }
        if (t.cII) {  // difference part gains one rho_I order
          Vec diff(g.n_mu);
          for (int i = 0; i < g.n_mu; ++i)
            diff[i] = ((*t.cII)[i] - c0) / g.mu[i];
          LogTerm d = t;
          d.a += 1;
          d.cII = share(std::move(diff));
          r.terms.push_back(std::move(d));
        }
      }
      const double data = (kappa == 0) ? dirichlet_data : 0.0;
      auto cc = cusp_cascade(g, std::move(forcing), data);
      LogPoly sol;
      sol.grids = f_in.grids;
      for (int p = 0; p < int(cc.levels.size()); ++p) {
        Vec vp = cc.levels[p];
        const double gamma = split_cusp_log(vp, g);
        bool nz = false;
        for (double x : vp)
          if (x != 0.0) nz = true;
        if (nz) {
          Vec ci(g.n_x);
          for (int i = 0; i < g.n_x; ++i) ci[i] = vp[i] / g.x[i];
          sol.terms.push_back(
              LogTerm{0, 0, 1, kappa, p, 1.0, share(ci), nullptr});
        }
        if (gamma != 0.0)
          sol.terms.push_back(
              LogTerm{0, 0, 1, kappa, p + 1, gamma, nullptr, nullptr});
      }
      u = poly_add(u, from_stage_BI(sol));
      // (Lambda+2) sol = target + (1-S)(D^2+D) sol, so the tracked
      // difference f - (Lambda+2) u loses the peeled target and the
      // (1-S) piece, which gains two rho_I orders
      LogPoly d1 = derive(sol, Rep::StageBI);
      LogPoly d2 = derive(d1, Rep::StageBI);
      LogPoly dd = poly_add(d2, d1);
      LogPoly e1 = mul_cII(dd, cache.one_minus_S_over_mu2, 2);
      r = poly_add(r, poly_scale(e1, -1.0));
    }
  }

  // ---- stage two: front face ----
  r = from_stage_BI(r);
  r = to_stage_BII(r);
  LogPoly rem;
  rem.grids = f_in.grids;
  {
    std::map<int, std::vector<LogTerm>> peel;
    for (auto& t : r.terms) {
      if (t.a >= 1 && t.b == 1)
        peel[t.l].push_back(t);
      else
        rem.terms.push_back(t);
    }
    for (auto& [lam, ts] : peel) {
      int Q = 0;
      for (auto& t : ts) Q = std::max(Q, t.k);
      std::vector<Vec> forcing(Q + 1, Vec(g.n_mu, 0.0));
      for (auto& t : ts) {
        const double ci0 = t.cI ? extrapolate_left_edge(*t.cI) : 1.0;
        for (int i = 0; i < g.n_mu; ++i) {
          double v = t.coef * ci0 * ipow(g.mu[i], t.a) * (1.0 - g.mu[i]);
          if (t.cII) v *= (*t.cII)[i];
          forcing[t.k][i] += v;
        }
        if (t.cI) {  // difference part gains one rho_II order -> remainder
          Vec diff(g.n_x);
          for (int i = 0; i < g.n_x; ++i) diff[i] = ((*t.cI)[i] - ci0) / g.x[i];
          LogTerm d = t;
          d.b += 1;
          d.cI = share(std::move(diff));
          rem.terms.push_back(std::move(d));
        }
      }
      auto fc = front_cascade(*cache.sigma, std::move(forcing));
      LogPoly sol;
      sol.grids = f_in.grids;
      for (int q = 0; q <= int(fc.smooth.size()) - 1; ++q) {
        bool nz = false;
        for (double v : fc.smooth[q])
          if (v != 0.0) nz = true;
        if (nz) {
          Vec cii(g.n_mu);
          for (int i = 0; i < g.n_mu; ++i)
            cii[i] = fc.smooth[q][i] / (g.mu[i] * (1.0 - g.mu[i]));
          sol.terms.push_back(
              LogTerm{0, 1, 1, q, lam, 1.0, nullptr, share(cii)});
        }
        if (fc.gamma[q] != 0.0) {
          Vec shape(g.n_mu);
          for (int i = 0; i < g.n_mu; ++i)
            shape[i] = cache.sigma->root3[i] /
                       (ipow(g.mu[i], 3) * (1.0 - g.mu[i]));
          sol.terms.push_back(LogTerm{0, 3, 1, q + 1, lam, fc.gamma[q],
                                      nullptr, share(shape)});
        }
      }
      u = poly_add(u, from_stage_BII(sol));
      // no stage residual: log s_t is inert and the conjugated cascade is
      // matched globally including the reflected far half
    }
  }
  rem = from_stage_BII(rem);
  poly_compress(rem);

  // remainder must carry one extra s_t = mu x factor
  for (const auto& t : rem.terms)
    if (t.a < 1 || t.b < 2)
      throw std::logic_error("reduction_step: remainder class violation");
  if (!check_grading(u, K + 1, 2)) {
    for (const auto& t : u.terms)
      if (!(t.k + t.l <= K + 1) &&
          !(t.a + t.j >= 2 && t.k + t.l <= K + 2 && t.l <= K + 1))
        std::fprintf(stderr,
                     "grading violation: j=%d a=%d b=%d k=%d l=%d coef=%g "
                     "(K=%d)\n",
                     t.j, t.a, t.b, t.k, t.l, t.coef, K);
    throw std::logic_error("reduction_step: solution grading violation");
  }

  // internal r tracks f - (Lambda+2)u; report (Lambda+2)u - f
  return {u, poly_scale(rem, -1.0)};
}

// ---------------------------------------------------------------------
// series drivers

namespace {
TaylorLogSeries series_truncate(const TaylorLogSeries& a, int j_cap) {
  TaylorLogSeries r = a;
  while (!r.coeff.empty() && r.j0 + r.orders() - 1 > j_cap) r.coeff.pop_back();
  return r;
}
}  // namespace

TaylorLogSeries series_add(const TaylorLogSeries& a, const TaylorLogSeries& b,
                           int j_cap) {
  if (a.coeff.empty()) return series_truncate(b, j_cap);
  if (b.coeff.empty()) return series_truncate(a, j_cap);
  TaylorLogSeries r;
  r.j0 = std::min(a.j0, b.j0);
  const int hi =
      std::min(j_cap, std::max(a.j0 + a.orders(), b.j0 + b.orders()) - 1);
  if (hi < r.j0) return r;
  r.coeff.resize(hi - r.j0 + 1);
  auto acc = [&](const TaylorLogSeries& s) {
    for (int m = 0; m < s.orders(); ++m) {
      const int j = s.j0 + m;
      if (j > hi) break;
      r.coeff[j - r.j0] = r.coeff[j - r.j0].grids
                              ? poly_add(r.coeff[j - r.j0], s.coeff[m])
                              : s.coeff[m];
    }
  };
  acc(a);
  acc(b);
  return r;
}

TaylorLogSeries series_mul(const TaylorLogSeries& a, const TaylorLogSeries& b,
                           int j_cap) {
  TaylorLogSeries r;
  r.j0 = a.j0 + b.j0;
  if (a.coeff.empty() || b.coeff.empty() || r.j0 > j_cap) return r;
  r.coeff.resize(j_cap - r.j0 + 1);
  for (int ma = 0; ma < a.orders(); ++ma)
    for (int mb = 0; mb < b.orders(); ++mb) {
      const int j = a.j0 + ma + b.j0 + mb;
      if (j > j_cap) continue;
      if (!a.coeff[ma].grids || !b.coeff[mb].grids) continue;
      LogPoly pr = poly_mul(a.coeff[ma], b.coeff[mb]);
      auto& slot = r.coeff[j - r.j0];
      slot = slot.grids ? poly_add(slot, pr) : pr;
    }
  while (!r.coeff.empty() && r.coeff.back().terms.empty()) r.coeff.pop_back();
  return r;
}

TaylorLogSeries series_solve(const TaylorLogSeries& f, int n_orders,
                             const std::vector<double>& boundary_data,
                             LogPoly* final_remainder) {
  TaylorLogSeries u;
  u.j0 = f.j0;
  LogPoly carry, last_rem;
  for (int m = 0; m < n_orders; ++m) {
    LogPoly fm = carry;
    if (m < f.orders() && f.coeff[m].grids)
      fm = fm.grids ? poly_add(fm, f.coeff[m]) : f.coeff[m];
    if (!fm.grids || fm.terms.empty()) {
      u.coeff.push_back(LogPoly{});
      carry = LogPoly{};
      last_rem = LogPoly{};
      continue;
    }
    const double d = (m < int(boundary_data.size())) ? boundary_data[m] : 0.0;
    auto red = reduction_step(fm, d);
    u.coeff.push_back(red.solution);
    last_rem = red.remainder;
    // next-order forcing: -(remainder) / s_t
    carry = red.remainder;
    for (auto& t : carry.terms) {
      t.a -= 1;
      t.b -= 1;
      t.coef = -t.coef;
    }
  }
  if (final_remainder) *final_remainder = last_rem;
  return u;
}

TaylorLogSeries linear_expand(const LogPoly& f, int n_orders,
                              const std::vector<double>& boundary_data) {
  TaylorLogSeries F;
  F.j0 = 0;
  F.coeff = {f};
  return series_solve(F, n_orders, boundary_data);
}

namespace {
TaylorLogSeries series_one(std::shared_ptr<const FaceGrids> grids) {
  TaylorLogSeries s;
  s.j0 = 0;
  s.coeff = {constant_poly(std::move(grids), 1.0)};
  return s;
}

TaylorLogSeries series_pow(const TaylorLogSeries& s, int m, int j_cap,
                           std::shared_ptr<const FaceGrids> grids) {
  TaylorLogSeries acc = series_one(std::move(grids));
  for (int e = 0; e < m; ++e) acc = series_mul(acc, s, j_cap);
  return acc;
}
}  // namespace

std::vector<TaylorLogSeries> nonlinear_expand(const LogPoly& defect_coeff,
                                              int n_terms, int inner_orders,
                                              double boundary_data) {
  if (n_terms < 1) throw std::invalid_argument("nonlinear_expand: n >= 1");
  const int j_cap = 2 * n_terms + std::max(1, inner_orders);
  auto grids = defect_coeff.grids;
  std::vector<TaylorLogSeries> gs;
  {
    TaylorLogSeries F;
    F.j0 = 2;
    F.coeff = {poly_scale(defect_coeff, -1.0)};
    gs.push_back(series_solve(F, j_cap - 1, {boundary_data}));
  }
  TaylorLogSeries S_prev;         // S_{i-2} = g_1 + ... + g_{i-2}
  TaylorLogSeries S_cur = gs[0];  // S_{i-1}
  for (int i = 2; i <= n_terms; ++i) {
    // -(Delta0+2) g_i = sum_{j>=2} (2^j/j!) (S_{i-1}^j - S_{i-2}^j)
    //                 = g_{i-1} sum_{j>=2} c_j sum_m S_{i-1}^m S_{i-2}^{j-1-m}
    TaylorLogSeries P;  // the bracket, a series without constant term
    P.j0 = 0;
    for (int jj = 2; 2 * (i - 1) + 2 * (jj - 1) <= j_cap; ++jj) {
      const double cj = ExpPowerSeries::coefficient_d(jj);
      for (int m = 0; m <= jj - 1; ++m) {
        if (S_prev.coeff.empty() && jj - 1 - m > 0) continue;
        TaylorLogSeries t = series_pow(S_cur, m, j_cap, grids);
        if (jj - 1 - m > 0)
          t = series_mul(t, series_pow(S_prev, jj - 1 - m, j_cap, grids),
                         j_cap);
        for (auto& c : t.coeff) c = poly_scale(c, cj);
        P = P.coeff.empty() ? t : series_add(P, t, j_cap);
      }
    }
    TaylorLogSeries rhs = series_mul(gs[i - 2], P, j_cap);
    for (auto& c : rhs.coeff) c = poly_scale(c, -1.0);
    TaylorLogSeries gi = series_solve(rhs, rhs.orders(), {});
    gs.push_back(gi);
    S_prev = S_cur;
    S_cur = series_add(S_cur, gi, j_cap);
  }
  return gs;
}

double series_eval(const TaylorLogSeries& u, double L, double s,
                   int max_order) {
  const double mu_f = s / L;
  const double x = (mu_f <= 0.5) ? -1.0 / s : 1.0 / (s - L);
  const double mu = std::min(mu_f, 1.0 - mu_f);
  const double st = x * mu;
  double sum = 0.0;
  const int hi = (max_order < 0) ? u.orders() - 1
                                 : std::min(max_order - u.j0, u.orders() - 1);
  for (int m = 0; m <= hi; ++m) {
    if (!u.coeff[m].grids) continue;
    sum += ipow(st, u.j0 + m) * poly_eval_chart(u.coeff[m], x, mu);
  }
  return sum;
}

double series_eval_point(const TaylorLogSeries& u, const BlowupPoint& p,
                         int max_order) {
  // the engine chart takes x along the side the point lies on
  const double x = p.rho_II;
  const double mu = std::min(p.mu, 1.0 - p.mu);
  std::shared_ptr<const FaceGrids> grids;
  for (const auto& c : u.coeff)
    if (c.grids) grids = c.grids;
  if (grids && x > grids->x_max * (1.0 + 1e-12))
    throw std::domain_error("series_eval_point: outside coefficient grids");
  const double st = x * mu;
  double sum = 0.0;
  const int hi = (max_order < 0) ? u.orders() - 1
                                 : std::min(max_order - u.j0, u.orders() - 1);
  for (int m = 0; m <= hi; ++m) {
    if (!u.coeff[m].grids) continue;
    sum += ipow(st, u.j0 + m) * poly_eval_chart(u.coeff[m], x, mu);
  }
  return sum;
}

std::pair<std::int64_t, std::int64_t> ExpPowerSeries::coefficient(int j) {
  if (j < 0 || j > 20)
    throw std::invalid_argument("ExpPowerSeries: 0 <= j <= 20");
  std::int64_t num = 1, den = 1;
  for (int i = 0; i < j; ++i) num *= 2;
  for (int i = 2; i <= j; ++i) den *= i;
  const std::int64_t g = std::gcd(num, den);
  return {num / g, den / g};
}

double ExpPowerSeries::coefficient_d(int j) {
  auto [n, d] = coefficient(j);
  return double(n) / double(d);
}

std::vector<double> defect_leading_coefficient(const FaceGrids& grids,
                                               const Cutoff& cutoff) {
  Vec F(grids.n_x);
  const double eps = cutoff.epsilon;
  for (int i = 0; i < grids.n_x; ++i) {
    const double x = grids.x[i];
    const double s = -1.0 / x;
    const double y = x / eps;
    const double chi1 = cutoff.chihat_d1(y);
    const double chi2 = cutoff.chihat_d2(y);
    // s-derivatives of chi0(s) = chihat(x(s)/eps), dx/ds = x^2
    const double c1 = chi1 * x * x / eps;
    const double c2 = x * x * (chi2 * x * x / (eps * eps) +
                               2.0 * x * chi1 / eps);
    const double d = -(kPi * kPi / 6.0) * s * s;
    const double d1 = -(kPi * kPi / 3.0) * s;
    // 2d - s^2 d'' vanishes identically, leaving the cutoff-derivative
    // part supported exactly on the transition band
    F[i] = s * s * (2.0 * c1 * d1 + c2 * d);
  }
  return F;
}

LogPoly defect_poly(std::shared_ptr<const FaceGrids> grids,
                    const Cutoff& cutoff) {
  auto F = defect_leading_coefficient(*grids, cutoff);
  for (int i = 0; i < grids->n_x; ++i) F[i] /= grids->x[i];
  return face_BI_poly(std::move(grids), F);
}

double defect_boundary_data(const FaceGrids& grids) {
  return kPi * kPi / (6.0 * grids.x_max * grids.x_max);
}

}  // namespace plumbmet

#include "plumbmet/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "plumbmet/charts.hpp"
#include "plumbmet/expansion.hpp"
#include "plumbmet/laplacian.hpp"
#include "plumbmet/metrics.hpp"
#include "plumbmet/solver.hpp"

namespace plumbmet {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_t(const std::string& tok) {
  if (!tok.empty() && tok[0] == 'e')  // e-10 means exp(-10)
    return std::exp(std::stod(tok.substr(1)));
  return std::stod(tok);
}

std::vector<double> parse_t_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(parse_t(tok));
  return out;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(std::stoi(tok));
  return out;
}

struct OutputDir {
  fs::path dir;
  bool enabled = false;

  void open(const std::string& path) {
    if (path.empty()) return;
    dir = path;
    fs::create_directories(dir);
    enabled = true;
  }
  std::ofstream csv(const std::string& name) const {
    std::ofstream f(dir / name, std::ios::binary);  // LF line endings
    return f;
  }
  void write_json(const std::string& name, const ordered_json& j) const {
    if (!enabled) return;
    std::ofstream f(dir / name, std::ios::binary);
    f << j.dump(2) << "\n";
  }
  void echo_config(const std::map<std::string, std::string>& cfg) const {
    if (!enabled) return;
    std::ofstream f(dir / "config_echo.txt", std::ios::binary);
    for (const auto& [k, v] : cfg) f << k << "=" << v << "\n";
  }
};

std::map<std::string, std::string> read_config(const std::string& path) {
  std::map<std::string, std::string> cfg;
  if (path.empty()) return cfg;
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config " + path);
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return cfg;
}

int fail(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 3;
}

// ------------------------------------------------------------------ charts

int cmd_charts_check(int samples, std::uint64_t seed, bool selftest) {
  if (selftest) {
    bool ok = std::abs(ilog(std::exp(-4.0)) - 0.25) < 1e-15;
    ok = ok && std::abs(st_from(2.0, 2.0) - 1.0) < 1e-15;
    const auto b = to_blowup(LogPoint(0.2, 0.2, 0.0, 0.0));
    ok = ok && std::abs(b.R - 0.2 * std::sqrt(2.0)) < 1e-15;
    std::cout << "charts-check selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    const double r_z = rng.uniform(1e-6, kDiscRadius);
    const double r_w = rng.uniform(1e-6, kDiscRadius);
    if (r_z * r_w > kParamRadius) continue;
    const LogPoint p(ilog(r_z), ilog(r_w), rng.uniform(0, 6.28),
                     rng.uniform(0, 6.28));
    const auto b = to_blowup(p);
    const double st = st_from(p.s_z, p.s_w);
    worst = std::max(worst, std::abs(b.s_t() / st - 1.0));
    worst = std::max(worst, std::abs(st / ilog(r_z * r_w) - 1.0));
    const double mu = 1.0 / (1.0 + b.rho_z);
    worst = std::max(worst, std::abs(mu - b.mu));
    // chart factorization s_t = rho_I rho_II / (1 + rho_I)
    const double st2 = b.rho_I * b.rho_II / (1.0 + b.rho_I);
    worst = std::max(worst, std::abs(st2 / st - 1.0));
    const auto q = from_blowup(b);
    worst = std::max(worst, std::abs(q.s_z / p.s_z - 1.0));
    worst = std::max(worst, std::abs(q.s_w / p.s_w - 1.0));
  }
  std::cout << "charts-check: max relative deviation " << g17(worst) << " over "
            << samples << " samples\n";
  return worst <= 1e-14 ? 0 : 3;
}

// ---------------------------------------------------------------- curvature

int cmd_curvature(const std::string& metric, double t_abs, int n,
                  const std::string& gridkind, const std::string& method,
                  double eps, const OutputDir& out, bool selftest) {
  MetricKind kind;
  if (metric == "plumbing") kind = MetricKind::Plumbing;
  else if (metric == "cusp") kind = MetricKind::CuspExtension;
  else if (metric == "grafted") kind = MetricKind::Grafted;
  else throw std::invalid_argument("unknown metric " + metric);
  if (selftest) {
    bool ok = true;
    MetricField m = make_metric_L(-10.0, MetricKind::Plumbing, 64);
    for (int i = 0; i < 64; ++i) {
      const double lam = plumbing_density(m.grid.mu[i], -10.0);
      ok = ok && std::abs(m.density[i] - lam) < 1e-14;
    }
    ok = ok &&
         std::abs(plumbing_density(0.5, -10.0) - std::numbers::pi / 10.0) <
             1e-15;
    ok = ok && std::abs(cusp_density(-5.0) - 0.2) < 1e-16;
    std::cout << "curvature selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  Cutoff cutoff{eps};
  const GridKind gk = (gridkind == "logratio") ? GridKind::UniformLogRatio
                                               : GridKind::UniformMu;
  MetricField m = make_metric(t_abs, kind, n, gk, cutoff);
  const auto cm = (method == "fd") ? CurvatureMethod::FiniteDifference
                                   : CurvatureMethod::AnalyticDerivative;
  auto R = gauss_curvature(m, cm);
  double worst = 0.0;
  for (double r : R) worst = std::max(worst, std::abs(r + 1.0));
  if (out.enabled) {
    auto f = out.csv("curvature.csv");
    f << "mu,s,lambda,R\n";
    for (int i = 0; i < m.grid.n; ++i)
      f << g17(m.grid.mu[i]) << "," << g17(m.grid.s[i]) << ","
        << g17(m.density[i]) << "," << g17(R[i]) << "\n";
  }
  std::cout << "curvature: metric=" << metric << " max|R+1|=" << g17(worst)
            << "\n";
  if (kind != MetricKind::Grafted && method != "fd" && worst > 1e-10)
    return 3;
  return 0;
}

// ----------------------------------------------------------------- spectrum

int cmd_spectrum(const std::string& t_csv, int mode_cap, int n,
                 const std::string& metric, const OutputDir& out,
                 bool selftest) {
  if (selftest) {
    // constants: (Delta+2)1 = 2, so the Neumann solve of f = 1 is 1/2
    auto op = assemble_fiber_mode(std::exp(-8.0), 0, 64,
                                  {BcKind::Neumann, 0.0},
                                  {BcKind::Neumann, 0.0});
    std::vector<double> f(64, 1.0);
    auto u = solve_mode(op, f);
    bool ok = true;
    for (double v : u) ok = ok && std::abs(v - 0.5) < 1e-12;
    std::cout << "spectrum selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  const MetricKind kind =
      (metric == "plumbing") ? MetricKind::Plumbing : MetricKind::Grafted;
  auto ts = parse_t_list(t_csv);
  double lam_min = 1e300;
  std::ofstream csv;
  if (out.enabled) {
    csv = out.csv("spectrum.csv");
    csv << "t,m,N,lambda_min\n";
  }
  for (double ta : ts) {
    MetricField mf = make_metric(ta, kind, n);
    for (int m = 0; m <= mode_cap; ++m) {
      auto op = assemble_fiber_mode(mf, m, {}, {});
      const double lm = smallest_pencil_eigenvalue(op);
      lam_min = std::min(lam_min, lm);
      if (out.enabled)
        csv << g17(ta) << "," << m << "," << n << "," << g17(lm) << "\n";
    }
  }
  std::cout << "spectrum: min lambda_min = " << g17(lam_min) << "\n";
  return lam_min >= 2.0 - 1e-6 ? 0 : 3;
}

// ----------------------------------------------------------------- indicial

int cmd_indicial(const std::string& face, int n, bool selftest) {
  OpDomain dom;
  if (face == "BII") dom = OpDomain::FaceBII;
  else if (face == "BI" || face == "BI-cusp") dom = OpDomain::FaceBICusp;
  else if (face == "BII1" || face == "BII-conj")
    dom = OpDomain::FaceBIIConjugated;
  else throw std::invalid_argument("unknown face " + face);
  if (selftest) {
    auto d = indicial_roots(OpDomain::FaceBII, 512);
    const bool ok = d.roots.first == 2.0 && d.roots.second == -1.0;
    std::cout << "indicial selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  auto d = indicial_roots(dom, n);
  std::cout << "indicial roots " << g17(d.roots.first) << " "
            << g17(d.roots.second) << " (decaying-branch fit "
            << g17(d.fitted_slope) << ")\n";
  return std::abs(d.fitted_slope - d.roots.first) <= 1e-3 ? 0 : 3;
}

// -------------------------------------------------------------- linear-solve

int cmd_linear_solve(const std::string& n_csv, double t_abs, int mode,
                     const OutputDir& out, bool selftest) {
  if (selftest) {
    auto op = assemble_face_BI_cusp(128);
    // manufactured u = x (x_max - x): f = 4 x^2
    const double xm = ilog(kDiscRadius);
    std::vector<double> f(128), u(128);
    for (int i = 0; i < 128; ++i) {
      const double x = op.grid[i];
      f[i] = 4.0 * x * x;
      u[i] = x * (xm - x);
    }
    auto v = solve_mode(op, f);
    double err = 0.0;
    for (int i = 0; i < 128; ++i) err = std::max(err, std::abs(v[i] - u[i]));
    std::cout << "linear-solve selftest err=" << g17(err)
              << (err < 1e-2 ? " pass" : " FAIL") << "\n";
    return err < 1e-2 ? 0 : 3;
  }
  const double L = std::log(t_abs);
  auto ns = parse_int_list(n_csv);
  std::vector<double> hs, errs;
  std::ofstream csv;
  if (out.enabled) {
    csv = out.csv("linear_solve.csv");
    csv << "N,error\n";
  }
  for (int n : ns) {
    MetricField mf = make_metric_L(L, MetricKind::Plumbing, n);
    const auto dom = mf.grid.dom;
    auto ue = [&](double s) { return std::sin(std::numbers::pi * s / L); };
    auto op = assemble_fiber_mode(mf, mode,
                                  {BcKind::Dirichlet, ue(dom.s_lo)},
                                  {BcKind::Dirichlet, ue(dom.s_hi)});
    std::vector<double> f(n), u(n);
    for (int i = 0; i < n; ++i) {
      const double s = mf.grid.s[i];
      const double lam = mf.density[i];
      const double upp = -std::pow(std::numbers::pi / L, 2) * ue(s);
      f[i] = -(upp - double(mode) * double(mode) * ue(s)) / (lam * lam) +
             2.0 * ue(s);
      u[i] = ue(s);
    }
    auto v = solve_mode(op, f);
    double err = 0.0;
    for (int i = 0; i < n; ++i) err = std::max(err, std::abs(v[i] - u[i]));
    hs.push_back(1.0 / n);
    errs.push_back(err);
    if (out.enabled) csv << n << "," << g17(err) << "\n";
  }
  const double order = fitted_exponent(hs, errs);
  std::cout << "linear-solve: observed order " << g17(order) << "\n";
  return (order >= 1.8 && order <= 2.2) ? 0 : 3;
}

// ------------------------------------------------------------------- expand

int cmd_expand(int n_terms, int orders, int face_cells, double eps,
               const OutputDir& out, bool selftest) {
  auto grids = FaceGrids::make(face_cells, face_cells);
  if (selftest) {
    LogPoly zero;
    zero.grids = grids;
    auto red = reduction_step(zero);
    bool ok = red.solution.terms.empty() && red.remainder.terms.empty();
    // single-term evaluation: s_t^0 rho_II X^0 Y^0 * 1 evaluates to rho_II
    LogPoly p;
    p.grids = grids;
    p.terms.push_back(LogTerm{0, 0, 1, 0, 0, 1.0, nullptr, nullptr});
    ok = ok && std::abs(poly_eval_chart(p, 0.3, 0.2) - 0.3) < 1e-15;
    std::cout << "expand selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  Cutoff cutoff{eps};
  auto gs = nonlinear_expand(defect_poly(grids, cutoff), n_terms, orders,
                             defect_boundary_data(*grids));
  ordered_json series = ordered_json::array();
  int grid_id = 0;
  for (std::size_t i = 0; i < gs.size(); ++i) {
    ordered_json terms = ordered_json::array();
    for (int m = 0; m < gs[i].orders(); ++m) {
      const auto& c = gs[i].coeff[m];
      for (const auto& t : c.terms) {
        ordered_json jt;
        jt["j"] = gs[i].j0 + m + t.j;
        jt["k"] = t.k;
        jt["l"] = t.l;
        jt["pow_rho_I"] = t.a;
        jt["pow_rho_II"] = t.b;
        jt["coef"] = t.coef;
        jt["grid_cI"] = t.cI ? grid_id++ : -1;
        if (t.cI && out.enabled) {
          auto f = out.csv("coeff_" + std::to_string(grid_id - 1) + ".csv");
          f << "x,value\n";
          for (int q = 0; q < grids->n_x; ++q)
            f << g17(grids->x[q]) << "," << g17((*t.cI)[q]) << "\n";
        }
        jt["grid_cII"] = t.cII ? grid_id++ : -1;
        if (t.cII && out.enabled) {
          auto f = out.csv("coeff_" + std::to_string(grid_id - 1) + ".csv");
          f << "mu,value\n";
          for (int q = 0; q < grids->n_mu; ++q)
            f << g17(grids->mu[q]) << "," << g17((*t.cII)[q]) << "\n";
        }
        terms.push_back(jt);
      }
    }
    series.push_back({{"g_index", i + 1}, {"j0", gs[i].j0}, {"terms", terms}});
  }
  out.write_json("series.json", series);
  // headline number: fitted decay of the leading term along t -> 0
  std::vector<double> sts, vals;
  for (double Lm : {-8.0, -12.0, -18.0, -27.0}) {
    const auto dom = fiber_chart_L(Lm);
    double mx = 0.0;
    for (int i = 0; i <= 200; ++i) {
      const double s = dom.s_lo + (dom.s_hi - dom.s_lo) * (i + 0.5) / 201.0;
      mx = std::max(mx, std::abs(series_eval(gs[0], Lm, s)));
    }
    sts.push_back(-1.0 / Lm);
    vals.push_back(mx);
  }
  const double exp_fit = fitted_exponent(sts, vals);
  std::cout << "expand: " << gs.size() << " series terms, leading decay "
            << g17(exp_fit) << "\n";
  return exp_fit >= 1.9 ? 0 : 3;
}

// -------------------------------------------------------------------- solve

int cmd_solve(double t_abs, const std::string& method, int n, double eps,
              const std::string& metric, const OutputDir& out, bool selftest) {
  if (selftest) {
    CurvatureProblem p;
    p.t = std::exp(-8.0);
    p.base = MetricKind::Plumbing;
    p.n_radial = 128;
    auto sol = newton_solve(p);
    const bool ok = sol.report.converged && sol.report.max_f < 1e-11;
    std::cout << "solve selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  CurvatureProblem p;
  p.t = t_abs;
  p.base = (metric == "plumbing") ? MetricKind::Plumbing : MetricKind::Grafted;
  p.cutoff = Cutoff{eps};
  p.n_radial = n;
  p.method = (method == "kmap") ? SolveMethod::KMap : SolveMethod::Newton;
  SolveOutput sol =
      (p.method == SolveMethod::Newton) ? newton_solve(p) : kmap_solve(p);
  if (out.enabled) {
    auto f = out.csv("solution.csv");
    f << "mu,s,f,f_exact\n";
    auto fe = oracle_factor(sol.h);
    for (int i = 0; i < sol.h.grid.n; ++i)
      f << g17(sol.h.grid.mu[i]) << "," << g17(sol.h.grid.s[i]) << ","
        << g17(sol.f[i]) << "," << g17(fe[i]) << "\n";
    ordered_json rep;
    rep["t"] = t_abs;
    rep["method"] = method;
    rep["N"] = n;
    rep["iterations"] = sol.report.iterations;
    rep["max_f"] = sol.report.max_f;
    rep["max_residual"] = sol.report.max_residual;
    rep["oracle_error"] = sol.report.oracle_error.value_or(-1.0);
    rep["converged"] = sol.report.converged;
    ordered_json hist = ordered_json::array();
    for (double r : sol.report.residual_history) hist.push_back(r);
    rep["residual_history"] = hist;
    out.write_json("report.json", rep);
  }
  std::cout << "solve: iterations=" << sol.report.iterations
            << " max_residual=" << g17(sol.report.max_residual)
            << " oracle_error=" << g17(sol.report.oracle_error.value_or(-1.0))
            << "\n";
  return sol.report.converged ? 0 : 3;
}

// -------------------------------------------------------------------- sweep

int cmd_sweep(const std::string& t_csv, const std::string& method, int n,
              double eps, int orders, int face_cells, int jobs,
              const OutputDir& out, bool selftest) {
  if (selftest) {
    CurvatureProblem p;
    p.base = MetricKind::Plumbing;
    p.n_radial = 96;
    auto r = sweep({std::exp(-6.0), std::exp(-9.0)}, p, 1, 64, 1);
    bool ok = true;
    for (auto& row : r.rows) ok = ok && row.ok && row.max_f < 1e-11;
    std::cout << "sweep selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  CurvatureProblem tmpl;
  tmpl.base = MetricKind::Grafted;
  tmpl.cutoff = Cutoff{eps};
  tmpl.n_radial = n;
  tmpl.method = (method == "kmap") ? SolveMethod::KMap : SolveMethod::Newton;
  auto ts = parse_t_list(t_csv);
  auto res = sweep(ts, tmpl, orders, face_cells, jobs);
  if (out.enabled) {
    auto f = out.csv("sweep.csv");
    f << "t,s_t,N,M,method,iterations,max_f,max_residual,oracle_error,"
         "fit_exponent_f,fit_exponent_f_minus_g1\n";
    for (const auto& r : res.rows)
      f << g17(r.t_abs) << "," << g17(r.s_t) << "," << r.n << "," << r.m << ","
        << r.method << "," << r.iterations << "," << g17(r.max_f) << ","
        << g17(r.max_residual) << "," << g17(r.oracle_error) << ","
        << g17(res.fit_exponent_f) << "," << g17(res.fit_exponent_f_minus_g1)
        << "\n";
    ordered_json rep;
    rep["t_list"] = ordered_json::array();
    for (double t : ts) rep["t_list"].push_back(t);
    rep["method"] = method;
    rep["N"] = n;
    rep["fit_exponent_f"] = res.fit_exponent_f;
    rep["fit_exponent_f_minus_g1"] = res.fit_exponent_f_minus_g1;
    ordered_json rows = ordered_json::array();
    for (const auto& r : res.rows)
      rows.push_back({{"t", r.t_abs},
                      {"s_t", r.s_t},
                      {"iterations", r.iterations},
                      {"max_f", r.max_f},
                      {"max_residual", r.max_residual},
                      {"oracle_error", r.oracle_error},
                      {"ok", r.ok},
                      {"note", r.note}});
    rep["rows"] = rows;
    out.write_json("report.json", rep);
  }
  bool all_ok = !res.rows.empty();
  for (const auto& r : res.rows) all_ok = all_ok && r.ok;
  std::cout << "sweep: fit_exponent_f=" << g17(res.fit_exponent_f)
            << " fit_exponent_f_minus_g1="
            << g17(res.fit_exponent_f_minus_g1) << "\n";
  return all_ok ? 0 : 3;
}

// ------------------------------------------------------------------- report

int cmd_report(const OutputDir& out, bool selftest) {
  if (selftest) {
    const bool ok =
        indicial_roots(OpDomain::FaceBII, 512).roots ==
        std::pair<double, double>{2.0, -1.0};
    std::cout << "report selftest " << (ok ? "pass" : "FAIL") << "\n";
    return ok ? 0 : 3;
  }
  ordered_json rep;
  {
    auto d = indicial_roots(OpDomain::FaceBII, 2048);
    rep["indicial_BII"] = {d.roots.first, d.roots.second};
    auto c = indicial_roots(OpDomain::FaceBICusp, 2048);
    rep["indicial_BI_cusp"] = {c.roots.first, c.roots.second};
    auto j = indicial_roots(OpDomain::FaceBIIConjugated, 2048);
    rep["indicial_BII_conjugated"] = {j.roots.first, j.roots.second};
  }
  {
    MetricField m = make_metric_L(-10.0, MetricKind::Plumbing, 256);
    auto R = gauss_curvature(m, CurvatureMethod::AnalyticDerivative);
    double worst = 0.0;
    for (double r : R) worst = std::max(worst, std::abs(r + 1.0));
    rep["plumbing_max_R_plus_1"] = worst;
    rep["fiber_area_L10_quadrature"] = fiber_area_quadrature(-10.0);
    rep["fiber_area_L10_closed_form"] = fiber_area_closed_form(-10.0);
  }
  {
    double lam_min = 1e300;
    for (double Lm : {-5.0, -10.0}) {
      MetricField mf = make_metric_L(Lm, MetricKind::Grafted, 256);
      for (int m = 0; m <= 4; ++m)
        lam_min = std::min(
            lam_min, smallest_pencil_eigenvalue(assemble_fiber_mode(mf, m, {}, {})));
    }
    rep["lambda_min"] = lam_min;
  }
  out.write_json("report.json", rep);
  std::cout << "report: written\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"hyperbolic fiber metrics of the degenerating plumbing family"};
  app.require_subcommand(1);

  std::string config_path, outdir, t_csv = "e-10", metric = "grafted";
  std::string gridkind = "mu", method = "newton", face = "BII";
  std::string n_csv = "128,256,512,1024";
  int n = 512, mode_cap = 8, n_terms = 2, orders = 3, face_cells = 512;
  int jobs = 1, samples = 10000, mode = 0, nfit = 8192;
  double eps = 2.0;
  std::uint64_t seed = 12345;
  bool selftest = false;

  // config file values are defaults; explicit flags override them
  std::map<std::string, std::string> cfg;
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size())
        cfg = read_config(args[i + 1]);
      else if (args[i].rfind("--config=", 0) == 0)
        cfg = read_config(args[i].substr(9));
    }
  } catch (const std::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  }
  auto cfg_get = [&](const std::string& key, auto& var) {
    auto it = cfg.find(key);
    if (it == cfg.end()) return;
    std::stringstream ss(it->second);
    ss >> var;
  };
  cfg_get("t", t_csv);
  cfg_get("metric", metric);
  cfg_get("grid", gridkind);
  cfg_get("method", method);
  cfg_get("face", face);
  cfg_get("n-list", n_csv);
  cfg_get("n", n);
  cfg_get("modes", mode_cap);
  cfg_get("terms", n_terms);
  cfg_get("orders", orders);
  cfg_get("face-cells", face_cells);
  cfg_get("jobs", jobs);
  cfg_get("samples", samples);
  cfg_get("mode", mode);
  cfg_get("epsilon", eps);
  cfg_get("seed", seed);
  cfg_get("out", outdir);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--out", outdir, "output directory");
    sub->add_flag("--selftest", selftest, "run built-in checks");
    sub->add_option("--seed", seed, "seed for randomized checks");
  };

  auto* charts = app.add_subcommand("charts-check", "coordinate identities");
  charts->add_option("--samples", samples);
  add_common(charts);

  auto* curv = app.add_subcommand("curvature", "densities and curvature");
  curv->add_option("--metric", metric, "plumbing|cusp|grafted");
  curv->add_option("--t", t_csv, "parameter, 1e-5 or e-5 form");
  curv->add_option("--n", n);
  curv->add_option("--grid", gridkind, "mu|logratio");
  curv->add_option("--method", method, "analytic|fd");
  curv->add_option("--epsilon", eps);
  add_common(curv);

  auto* spect = app.add_subcommand("spectrum", "mode eigenvalue floor");
  spect->add_option("--t", t_csv);
  spect->add_option("--modes", mode_cap);
  spect->add_option("--n", n);
  spect->add_option("--metric", metric);
  add_common(spect);

  auto* ind = app.add_subcommand("indicial", "face indicial roots");
  ind->add_option("--face", face, "BII|BI|BII1");
  ind->add_option("--n", nfit);
  add_common(ind);

  auto* lin = app.add_subcommand("linear-solve", "manufactured convergence");
  lin->add_option("--n-list", n_csv);
  lin->add_option("--t", t_csv);
  lin->add_option("--mode", mode);
  add_common(lin);

  auto* exp_cmd = app.add_subcommand("expand", "curvature series");
  exp_cmd->add_option("--terms", n_terms);
  exp_cmd->add_option("--orders", orders);
  exp_cmd->add_option("--face-cells", face_cells);
  exp_cmd->add_option("--epsilon", eps);
  add_common(exp_cmd);

  auto* sol = app.add_subcommand("solve", "single curvature solve");
  sol->add_option("--t", t_csv);
  sol->add_option("--method", method, "newton|kmap");
  sol->add_option("--n", n);
  sol->add_option("--metric", metric);
  sol->add_option("--epsilon", eps);
  add_common(sol);

  auto* sw = app.add_subcommand("sweep", "degeneration sweep");
  sw->add_option("--t", t_csv);
  sw->add_option("--method", method);
  sw->add_option("--n", n);
  sw->add_option("--epsilon", eps);
  sw->add_option("--orders", orders);
  sw->add_option("--face-cells", face_cells);
  sw->add_option("--jobs", jobs);
  add_common(sw);

  auto* rept = app.add_subcommand("report", "summary report");
  add_common(rept);

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    OutputDir out;
    out.open(outdir);
    if (out.enabled) {
      std::map<std::string, std::string> echo;
      echo["subcommand"] = app.get_subcommands().front()->get_name();
      echo["n"] = std::to_string(n);
      echo["epsilon"] = g17(eps);
      echo["seed"] = std::to_string(seed);
      echo["t"] = t_csv;
      echo["method"] = method;
      echo["orders"] = std::to_string(orders);
      echo["metric"] = metric;
      echo["jobs"] = std::to_string(jobs);
      out.echo_config(echo);
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "charts-check") return cmd_charts_check(samples, seed, selftest);
    if (sub == "curvature")
      return cmd_curvature(metric, parse_t(t_csv), n, gridkind, method, eps,
                           out, selftest);
    if (sub == "spectrum")
      return cmd_spectrum(t_csv, mode_cap, n, metric, out, selftest);
    if (sub == "indicial") return cmd_indicial(face, nfit, selftest);
    if (sub == "linear-solve")
      return cmd_linear_solve(n_csv, parse_t(t_csv), mode, out, selftest);
    if (sub == "expand")
      return cmd_expand(n_terms, orders, face_cells, eps, out, selftest);
    if (sub == "solve")
      return cmd_solve(parse_t(t_csv), method, n, eps, metric, out, selftest);
    if (sub == "sweep")
      return cmd_sweep(t_csv, method, n, eps, orders, face_cells, jobs, out,
                       selftest);
    if (sub == "report") return cmd_report(out, selftest);
    std::cerr << "unknown subcommand\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
}

}  // namespace plumbmet

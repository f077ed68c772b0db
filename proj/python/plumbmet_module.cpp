#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>

#include "plumbmet/charts.hpp"
#include "plumbmet/expansion.hpp"
#include "plumbmet/laplacian.hpp"
#include "plumbmet/metrics.hpp"
#include "plumbmet/solver.hpp"

namespace py = pybind11;
using namespace plumbmet;

namespace {

MetricKind kind_of(const std::string& name) {
  if (name == "plumbing") return MetricKind::Plumbing;
  if (name == "cusp") return MetricKind::CuspExtension;
  if (name == "grafted") return MetricKind::Grafted;
  throw std::invalid_argument("unknown metric " + name);
}

OpDomain face_of(const std::string& name) {
  if (name == "BII") return OpDomain::FaceBII;
  if (name == "BI") return OpDomain::FaceBICusp;
  if (name == "BII1") return OpDomain::FaceBIIConjugated;
  throw std::invalid_argument("unknown face " + name);
}

py::dict report_dict(const SolveReport& r) {
  py::dict d;
  d["iterations"] = r.iterations;
  d["max_f"] = r.max_f;
  d["max_residual"] = r.max_residual;
  d["converged"] = r.converged;
  d["residual_history"] = r.residual_history;
  if (r.oracle_error) d["oracle_error"] = *r.oracle_error;
  return d;
}

}  // namespace

PYBIND11_MODULE(_plumbmet, m) {
  m.doc() = "hyperbolic fiber metrics of the degenerating plumbing family";

  m.def("ilog", &ilog, py::arg("x"), "1/log(1/x) for x in (0,1)");
  m.def("st_from", &st_from, py::arg("s_z"), py::arg("s_w"),
        "s_z s_w / (s_z + s_w)");

  m.def(
      "blowup",
      [](double s_z, double s_w) {
        auto b = to_blowup(LogPoint(s_z, s_w, 0.0, 0.0));
        py::dict d;
        d["R"] = b.R;
        d["R_z"] = b.R_z;
        d["R_w"] = b.R_w;
        d["rho_z"] = b.rho_z;
        d["rho_I"] = b.rho_I;
        d["rho_II"] = b.rho_II;
        d["mu"] = b.mu;
        d["s_t"] = b.s_t();
        d["chart"] = b.tag == ChartTag::NearBIz ? "near-BI-z" : "near-BI-w";
        return d;
      },
      py::arg("s_z"), py::arg("s_w"),
      "corner blow-up coordinates of a logarithmic point");

  m.def("plumbing_density", &plumbing_density, py::arg("mu"), py::arg("L"));
  m.def("cusp_density", &cusp_density, py::arg("s"));
  m.def(
      "grafted_density",
      [](double s, double L, double epsilon) {
        return grafted_density(s, L, Cutoff{epsilon});
      },
      py::arg("s"), py::arg("L"), py::arg("epsilon") = 2.0);

  m.def(
      "curvature",
      [](double t_abs, const std::string& metric, int n,
         const std::string& method) {
        const GridKind gk = (method == "fd") ? GridKind::UniformLogRatio
                                             : GridKind::UniformMu;
        MetricField f = make_metric(t_abs, kind_of(metric), n, gk);
        auto R = gauss_curvature(f, method == "fd"
                                        ? CurvatureMethod::FiniteDifference
                                        : CurvatureMethod::AnalyticDerivative);
        py::dict d;
        d["mu"] = f.grid.mu;
        d["s"] = f.grid.s;
        d["lambda"] = f.density;
        d["R"] = R;
        return d;
      },
      py::arg("t"), py::arg("metric") = "plumbing", py::arg("n") = 512,
      py::arg("method") = "analytic");

  m.def(
      "lambda_min",
      [](double t_abs, int mode, int n, const std::string& metric) {
        MetricField f = make_metric(t_abs, kind_of(metric), n);
        return smallest_pencil_eigenvalue(assemble_fiber_mode(f, mode, {}, {}));
      },
      py::arg("t"), py::arg("mode") = 0, py::arg("n") = 512,
      py::arg("metric") = "grafted");

  m.def(
      "solve_mode",
      [](double t_abs, int mode, const std::vector<double>& f,
         const std::string& metric) {
        MetricField mf = make_metric(t_abs, kind_of(metric), int(f.size()));
        return solve_mode(assemble_fiber_mode(mf, mode, {}, {}), f);
      },
      py::arg("t"), py::arg("mode"), py::arg("f"),
      py::arg("metric") = "plumbing",
      "solve (Delta+2) u = f restricted to one angular mode");

  m.def(
      "indicial_roots",
      [](const std::string& face, int n) {
        auto d = indicial_roots(face_of(face), n);
        py::dict out;
        out["roots"] = py::make_tuple(d.roots.first, d.roots.second);
        out["fitted_slope"] = d.fitted_slope;
        return out;
      },
      py::arg("face"), py::arg("n") = 8192);

  m.def(
      "newton",
      [](double t_abs, int n, const std::string& metric) {
        CurvatureProblem p;
        p.t = t_abs;
        p.base = kind_of(metric);
        p.n_radial = n;
        auto sol = newton_solve(p);
        py::dict d = report_dict(sol.report);
        d["f"] = sol.f;
        d["mu"] = sol.h.grid.mu;
        return d;
      },
      py::arg("t"), py::arg("n") = 512, py::arg("metric") = "grafted");

  m.def(
      "kmap",
      [](double t_abs, int n, const std::string& metric) {
        CurvatureProblem p;
        p.t = t_abs;
        p.base = kind_of(metric);
        p.n_radial = n;
        double factor = 0.0;
        auto sol = kmap_solve(p, nullptr, &factor);
        py::dict d = report_dict(sol.report);
        d["f"] = sol.f;
        d["contraction_factor"] = factor;
        return d;
      },
      py::arg("t"), py::arg("n") = 512, py::arg("metric") = "grafted");

  m.def(
      "sweep",
      [](const std::vector<double>& t_list, int n, int orders,
         int face_cells) {
        CurvatureProblem tmpl;
        tmpl.n_radial = n;
        auto r = sweep(t_list, tmpl, orders, face_cells);
        py::list rows;
        for (const auto& row : r.rows) {
          py::dict d;
          d["t"] = row.t_abs;
          d["s_t"] = row.s_t;
          d["iterations"] = row.iterations;
          d["max_f"] = row.max_f;
          d["max_residual"] = row.max_residual;
          d["oracle_error"] = row.oracle_error;
          d["ok"] = row.ok;
          rows.append(d);
        }
        py::dict out;
        out["rows"] = rows;
        out["fit_exponent_f"] = r.fit_exponent_f;
        out["fit_exponent_f_minus_g1"] = r.fit_exponent_f_minus_g1;
        return out;
      },
      py::arg("t_list"), py::arg("n") = 1024, py::arg("orders") = 3,
      py::arg("face_cells") = 512);

  m.def(
      "leading_series",
      [](double L, const std::vector<double>& s_list, int orders,
         int face_cells) {
        auto grids = FaceGrids::make(face_cells, face_cells);
        Cutoff cut;
        auto g1 = nonlinear_expand(defect_poly(grids, cut), 1, orders,
                                   defect_boundary_data(*grids))[0];
        std::vector<double> out;
        out.reserve(s_list.size());
        for (double s : s_list) out.push_back(series_eval(g1, L, s));
        return out;
      },
      py::arg("L"), py::arg("s_list"), py::arg("orders") = 2,
      py::arg("face_cells") = 512,
      "evaluate the leading curvature-series term on fiber points");

  m.def("fiber_area", &fiber_area_closed_form, py::arg("L"));
}

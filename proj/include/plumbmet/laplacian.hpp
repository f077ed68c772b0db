#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "plumbmet/metrics.hpp"
#include "plumbmet/numerics.hpp"

namespace plumbmet {

enum class BcKind { Dirichlet, Neumann, BoundedIndicial };

struct Bc {
  BcKind kind = BcKind::Dirichlet;
  double value = 0.0;  // Dirichlet boundary value
};

enum class OpDomain { Fiber, FaceBII, FaceBIIConjugated, FaceBICusp };

/// Banded discretization of (Delta + 2) restricted to one angular mode,
/// on a fiber or on one of the boundary-face models.
struct ModeOperator {
  OpDomain domain = OpDomain::Fiber;
  int mode = 0;
  double L = 0.0;                 // fiber only
  std::vector<double> grid;       // radial cell centers (mu or x)
  double h = 0.0;
  BorderedTridiagonal A;
  std::vector<double> rhs_bc;     // boundary-data contribution to the rhs
  std::vector<double> weight;     // weighted-L2 cell weights
  Bc left, right;
  bool closure_rows = false;      // rows 0 / n-1 are endpoint closures
};

/// (Delta+2)u = -lambda^{-2}(u'' - m^2 u) + 2u on the fiber of the given
/// metric, Dirichlet rows at both truncation circles by default.
ModeOperator assemble_fiber_mode(const MetricField& metric, int m, Bc left,
                                 Bc right);
ModeOperator assemble_fiber_mode(std::complex<double> t, int m, int n,
                                 Bc left = {}, Bc right = {},
                                 MetricKind kind = MetricKind::Plumbing);

/// Face model at the front face: 2u - (sin^2(pi mu)/pi^2) u'' on (0,1),
/// bounded-indicial closures at both regular-singular ends.
ModeOperator assemble_face_BII(int n);

/// Conjugated front-face operator 2w - S(mu)(mu^2 w'' - 2 mu w' + 2w),
/// S = sin^2(pi mu)/(pi mu)^2; closure selects the mu branch at 0 and
/// the bounded value branch at 1.
ModeOperator assemble_face_BII_conjugated(int n);

/// Cusp model on (0, x_max]: 2u - (x^2 u')' (+ m^2 x^{-2} u for m != 0),
/// x^1 indicial closure at 0 and a Dirichlet row at x_max.
ModeOperator assemble_face_BI_cusp(int n, double x_max = 0.0, int m = 0,
                                   double dirichlet_value = 0.0);

/// Tridiagonal solve; throws on factorization failure, returns the
/// solution and stores the max-norm residual in *residual if nonnull.
std::vector<double> solve_mode(const ModeOperator& op,
                               const std::vector<double>& f,
                               double* residual = nullptr);

/// Symmetric form of a fiber operator: B = D A with D = diag(lambda^2),
/// assembled directly so that B is symmetric by construction.
struct SymmetrizedPencil {
  std::vector<double> diag, off;  // B entries
  std::vector<double> d;          // D entries
};
SymmetrizedPencil symmetrized_pencil(const ModeOperator& op);

/// Smallest eigenvalue of the symmetric pencil (B, D) equivalent to the
/// assembled fiber operator in the fiber area-form inner product.
double smallest_pencil_eigenvalue(const ModeOperator& op);

/// Weighted L2 norm with the fiber area form lambda^2 ds dtheta.
double weighted_norm(const ModeOperator& op, const std::vector<double>& u);

/// Theta-grid Fourier solve: forward FFT in theta, per-mode tridiagonal
/// solve, inverse FFT.  f is stored row-major as f[i*m_theta + j].
std::vector<double> solve_fiber(const MetricField& metric,
                                const std::vector<double>& f, int m_theta,
                                Bc left = {}, Bc right = {});

struct IndicialData {
  OpDomain face;
  // monic indicial polynomial sigma^2 + b sigma + c
  double b = 0.0, c = 0.0;
  std::pair<double, double> roots;  // sorted descending
  double fitted_slope = 0.0;        // decaying-branch slope fit
};

/// Exact indicial roots of the face operator at its singular endpoint,
/// with a numerical slope fit of the decaying discrete solution.
IndicialData indicial_roots(OpDomain face, int n_fit = 8192);

/// Smallest singular value of the assembled face operator (null-space
/// check for the front-face model).
double face_min_singular_value(OpDomain face, int n);

}  // namespace plumbmet

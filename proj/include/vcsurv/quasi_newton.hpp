#pragma once

#include "vcsurv/data.hpp"

#include <functional>
#include <string>

namespace vcsurv {

struct SolverConfig {
  double tol = 1e-8;           // sup-norm threshold on the residual
  int max_iter = 100;
  double step_damping = 1.0;   // initial step length, halved on ascent
  int min_effective_events = 5;
  double eps_denom = 1e-12;    // guard on S^(0)

  void validate() const;
};

/// A square nonlinear system F(x) = 0 with an analytic Jacobian used to seed
/// (and, after a failed line search, refresh) the Broyden approximation.
struct RootProblem {
  std::function<Vector(const Vector&)> residual;
  std::function<Matrix(const Vector&)> jacobian;
};

struct RootResult {
  Vector x;
  int iterations = 0;
  double residual = 0.0;
};

/// Broyden's method with step halving. Throws ErrorCode::no_convergence or
/// ErrorCode::singular_system. A residual evaluation may throw
/// ErrorCode::nonfinite_moment for an overflowing trial point; that step is halved.
RootResult broyden_solve(const RootProblem& problem, const Vector& init, const SolverConfig& cfg);

/// LU solve that refuses near-singular systems (reciprocal condition below 1e-13).
Vector checked_solve(const Matrix& a, const Vector& b, const std::string& context = {});
Matrix checked_inverse(const Matrix& a, const std::string& context = {});

}  // namespace vcsurv

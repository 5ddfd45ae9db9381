#include "vcsurv/quasi_newton.hpp"

#include "vcsurv/errors.hpp"

#include <cmath>
#include <optional>

namespace vcsurv {

void SolverConfig::validate() const {
  if (!(tol > 0.0)) throw Error(ErrorCode::config, "solver tol must be positive", "tol");
  if (max_iter < 1) throw Error(ErrorCode::config, "max_iter must be positive", "max_iter");
  if (!(step_damping > 0.0 && step_damping <= 1.0)) {
    throw Error(ErrorCode::config, "step_damping must lie in (0, 1]", "step_damping");
  }
  if (min_effective_events < 1) {
    throw Error(ErrorCode::config, "min_effective_events must be positive", "min_effective_events");
  }
  if (!(eps_denom >= 0.0)) throw Error(ErrorCode::config, "eps_denom must be nonnegative", "eps_denom");
}

namespace {

constexpr double kMinRcond = 1e-13;
constexpr int kMaxHalvings = 40;

std::optional<Eigen::PartialPivLU<Matrix>> factor(const Matrix& a) {
  if (!a.allFinite()) return std::nullopt;
  Eigen::PartialPivLU<Matrix> lu(a);
  if (!(lu.rcond() > kMinRcond)) return std::nullopt;
  return lu;
}

double sup_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>(); }

}  // namespace

Vector checked_solve(const Matrix& a, const Vector& b, const std::string& context) {
  auto lu = factor(a);
  if (!lu) throw Error(ErrorCode::singular_system, "singular linear system", context);
  return lu->solve(b);
}

Matrix checked_inverse(const Matrix& a, const std::string& context) {
  auto lu = factor(a);
  if (!lu) throw Error(ErrorCode::singular_system, "singular matrix", context);
  return lu->inverse();
}

RootResult broyden_solve(const RootProblem& problem, const Vector& init, const SolverConfig& cfg) {
  cfg.validate();
  RootResult out;
  out.x = init;
  Vector f = problem.residual(out.x);
  out.residual = sup_norm(f);
  if (out.residual <= cfg.tol) return out;

  Matrix jac = problem.jacobian(out.x);
  bool fresh = true;

  while (out.iterations < cfg.max_iter) {
    ++out.iterations;
    auto lu = factor(jac);
    if (!lu) {
      if (fresh) throw Error(ErrorCode::singular_system, "singular Jacobian");
      jac = problem.jacobian(out.x);
      fresh = true;
      continue;
    }
    const Vector step = -lu->solve(f);

    double lambda = cfg.step_damping;
    std::optional<Vector> next_x;
    Vector next_f;
    double next_r = 0.0;
    for (int halving = 0; halving < kMaxHalvings; ++halving, lambda *= 0.5) {
      Vector trial = out.x + lambda * step;
      try {
        next_f = problem.residual(trial);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::nonfinite_moment) continue;
        throw;
      }
      next_r = sup_norm(next_f);
      if (next_r < out.residual) {
        next_x = std::move(trial);
        break;
      }
    }

    if (!next_x) {
      // The secant model has drifted; fall back to the analytic Jacobian once.
      if (fresh) {
        throw Error(ErrorCode::no_convergence,
                    "line search failed at residual " + std::to_string(out.residual));
      }
      jac = problem.jacobian(out.x);
      fresh = true;
      continue;
    }

    const Vector dx = *next_x - out.x;
    const Vector df = next_f - f;
    out.x = std::move(*next_x);
    f = std::move(next_f);
    out.residual = next_r;
    if (out.residual <= cfg.tol) return out;

    const double denom = dx.squaredNorm();
    if (denom > 0.0) {
      jac.noalias() += ((df - jac * dx) / denom) * dx.transpose();
      fresh = false;
    }
  }
  throw Error(ErrorCode::no_convergence,
              "no convergence after " + std::to_string(cfg.max_iter) +
                  " iterations (residual " + std::to_string(out.residual) + ")");
}

}  // namespace vcsurv

#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cem/assembly.hpp"
#include "cem/basis.hpp"
#include "cem/grid.hpp"

namespace cem {

/// Load vector at step n (time n*dt), in the space being marched.
using LoadFn = std::function<Vec(int)>;

enum class Scheme { backward, forward };

Scheme scheme_from_string(const std::string& name);

/// States U^0..U^n of one march plus the running stability audit.
struct Trajectory {
  double dt = 0;
  int n_steps = 0;
  std::vector<Vec> states;

  // backward Euler: per-step ||U^n||_M against ||U^0||_M + dt sum ||f^j||
  std::vector<double> norm_history;
  std::vector<double> bound_history;
  bool stability_ok = true;

  // forward Euler metadata
  double lambda_max = 0;
  double stability_margin = 0;  // 2/lambda_max - dt

  const Vec& at(int n) const { return states.at(n); }
  const Vec& final_state() const { return states.back(); }
};

/// Largest generalized eigenvalue of (A, M) by power iteration on M^{-1}A.
double generalized_lambda_max(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M,
                              double rel_tol = 1e-6);
double generalized_lambda_max(const SpMat& A, const SpMat& M,
                              double rel_tol = 1e-6);

/// (M/dt + A) U^n = (M/dt) U^{n-1} + b^n with b^n = load(n); one factorization
/// for the whole march. Unconditionally stable; the audit inequality is
/// checked at every step with the discrete dual norm of the load.
Trajectory backward_euler(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M,
                          const LoadFn& load, const Vec& u_init, double dt,
                          int n_steps);
Trajectory backward_euler(const SpMat& A, const SpMat& M, const LoadFn& load,
                          const Vec& u_init, double dt, int n_steps);

/// M U^{n+1} = (M - dt A) U^n + dt b^n. With enforce_stability the march
/// refuses dt*lambda_max > 2; otherwise it runs and reports the first
/// non-finite step if the iteration blows past floating-point range.
Trajectory forward_euler(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M,
                         const LoadFn& load, const Vec& u_init, double dt,
                         int n_steps, bool enforce_stability);
Trajectory forward_euler(const SpMat& A, const SpMat& M, const LoadFn& load,
                         const Vec& u_init, double dt, int n_steps,
                         bool enforce_stability);

/// L2 projection of a fine vector onto the multiscale space:
/// M_ms c = P' M u0.
Vec project_initial(const MultiscaleSpace& space, const SpMat& M_fine,
                    const Vec& u0);

/// Fine-scale reference march: Dirichlet-eliminated fine system, nodal u0,
/// per-step loads from the source function. States are full fine vectors
/// (zeros on the domain boundary).
Trajectory fine_reference(const FemMatrix& A, const FemMatrix& M,
                          const SpaceTimeFn& f, const Vec& u0, double dt,
                          int n_steps, Scheme scheme, const Grid& grid);

/// Structured-grid snapshot: header "nfx nfy t", then nodal values row-major
/// (bottom row first), one mesh row per line.
void write_snapshot(std::ostream& out, const Grid& grid, const Vec& full_state,
                    double t);
Vec read_snapshot(std::istream& in, const Grid& grid, const std::string& label);

}  // namespace cem

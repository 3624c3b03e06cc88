#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <utility>
#include <vector>

#include "cem/assembly.hpp"
#include "cem/grid.hpp"
#include "cem/time_march.hpp"

namespace cem {

/// Error metrics of one run; the estimator block is filled only by estimator
/// pipelines.
struct ErrorReport {
  double eps = 0;    // relative L2 error at T
  double eps_a = 0;  // relative energy error at T

  bool has_estimator = false;
  double eps_l = 0;          // ||e(T)||^2 + int_0^T ||e||_a^2
  double eps_r = 0;          // sum ||R_i^n||^2 + ||e(0)||^2
  double ratio = 0;          // eps_r / eps_l
  double bound = 0;          // 2 M (1+1/Lambda) sum ||R||^2 + ||e(0)||^2
  bool reliable = true;      // eps_l <= bound
  double e0_sq = 0;          // ||e(0)||_M^2
  double overlap_const = 0;  // M
  double spectral_gap = 0;   // Lambda
  Eigen::MatrixXd residual_sq;  // (n_steps, n_vertices): ||R_i^n||_{Q*}^2

  void write(std::ostream& out) const;  // flat key-value block
  /// CSV "step,vertex,residual_sq", one line per (n, i).
  void write_residual_csv(std::ostream& out) const;
};

/// (eps, eps_a) between a fine state and a prolonged multiscale state.
std::pair<double, double> error_norms(const Vec& u_fine, const Vec& u_ms_fine,
                                      const SpMat& A, const SpMat& M);

/// ||e(T)||_M^2 + dt * sum_{n=1..N} ||e(t_n)||_A^2 (right-endpoint rule),
/// e = fine state minus prolonged reduced state.
double space_time_error(const Trajectory& fine, const Trajectory& ms,
                        const SpMat& P, const SpMat& A, const SpMat& M,
                        double dt);

/// Dual norms of the time-slab residuals over V0(w_i), computed through local
/// Riesz solves: a(phi,v) = (f^{n+1},v) - ((U^{n+1}-U^n)/dt, v) - a(U^{n+1},v)
/// on the interior of w_i, ||R_i^n|| = sqrt(dt) ||phi||_a. One factorization
/// per neighborhood, reused for every step.
class ResidualEstimator {
 public:
  ResidualEstimator(const Grid& grid, const FemMatrix& A, const FemMatrix& M,
                    LoadFn fine_load, double dt);
  ~ResidualEstimator();
  ResidualEstimator(ResidualEstimator&&) noexcept;

  /// ||R_i^n||_{Q*} for one slab (t_n, t_{n+1}) and one coarse vertex.
  double local_residual_norm(int n, int i, const Trajectory& ms,
                             const SpMat& P) const;
  /// All slabs and vertices: (n_steps, n_vertices) matrix of squared norms.
  Eigen::MatrixXd compute_all(const Trajectory& ms, const SpMat& P) const;
  /// Same, for a trajectory already living on fine nodes (oracle path).
  Eigen::MatrixXd compute_all_fine(const Trajectory& fine) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Assembles the estimator block: eps_r, the reliability bound and its flag.
ErrorReport posterior_report(const Eigen::MatrixXd& residual_sq, double e0_sq,
                             double spectral_gap, int overlap, double eps_l);

}  // namespace cem

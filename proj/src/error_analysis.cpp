#include "cem/error_analysis.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cem/linear_solvers.hpp"
#include "cem/parallel.hpp"

namespace cem {

namespace {
void put_kv(std::ostream& out, const char* key, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", v);
  out << key << ": " << buf << "\n";
}
}  // namespace

void ErrorReport::write(std::ostream& out) const {
  put_kv(out, "eps", eps);
  put_kv(out, "eps_a", eps_a);
  if (has_estimator) {
    put_kv(out, "eps_l", eps_l);
    put_kv(out, "eps_r", eps_r);
    put_kv(out, "ratio", ratio);
    put_kv(out, "bound", bound);
    out << "reliable: " << (reliable ? "true" : "false") << "\n";
    put_kv(out, "e0_sq", e0_sq);
    put_kv(out, "overlap_const", overlap_const);
    put_kv(out, "spectral_gap", spectral_gap);
  }
}

void ErrorReport::write_residual_csv(std::ostream& out) const {
  out << "step,vertex,residual_sq\n";
  char buf[40];
  for (Eigen::Index n = 0; n < residual_sq.rows(); ++n)
    for (Eigen::Index i = 0; i < residual_sq.cols(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12e", residual_sq(n, i));
      out << n << "," << i << "," << buf << "\n";
    }
}

std::pair<double, double> error_norms(const Vec& u_fine, const Vec& u_ms_fine,
                                      const SpMat& A, const SpMat& M) {
  if (u_fine.size() != u_ms_fine.size())
    throw std::invalid_argument("error_norms: vectors live on different spaces");
  Vec e = u_fine - u_ms_fine;
  double ref_m = u_fine.dot(M * u_fine);
  double ref_a = u_fine.dot(A * u_fine);
  if (ref_m <= 0)
    throw std::runtime_error("error_norms: reference solution has zero L2 "
                             "norm, relative errors are undefined");
  double eps = std::sqrt(std::max(0.0, e.dot(M * e)) / ref_m);
  double eps_a = ref_a > 0 ? std::sqrt(std::max(0.0, e.dot(A * e)) / ref_a) : 0;
  return {eps, eps_a};
}

double space_time_error(const Trajectory& fine, const Trajectory& ms,
                        const SpMat& P, const SpMat& A, const SpMat& M,
                        double dt) {
  if (fine.n_steps != ms.n_steps || fine.dt != ms.dt)
    throw std::invalid_argument("space_time_error: trajectories disagree on "
                                "step count or dt");
  double acc = 0;
  Vec e;
  for (int n = 1; n <= fine.n_steps; ++n) {
    e = fine.at(n) - P * ms.at(n);
    acc += dt * e.dot(A * e);
  }
  e = fine.final_state() - P * ms.final_state();
  return e.dot(M * e) + acc;
}

struct ResidualEstimator::Impl {
  const Grid& grid;
  const FemMatrix& A;
  const FemMatrix& M;
  LoadFn load;
  double dt;
  struct Local {
    std::vector<int> interior;  // global node ids
    SpMat A_local;
    SpdSolver solver;
  };
  std::vector<std::unique_ptr<Local>> locals;  // per coarse vertex, lazy

  Impl(const Grid& g, const FemMatrix& a, const FemMatrix& m, LoadFn l, double d)
      : grid(g), A(a), M(m), load(std::move(l)), dt(d) {
    locals.resize(grid.coarse_vertex_count());
  }

  Local& local(int i) {
    if (!locals[i]) {
      auto lp = std::make_unique<Local>();
      DofSet hood = coarse_neighborhood(grid, i);
      FemMatrix Ai = restrict_to(A, hood, true);
      lp->interior = Ai.nodes();
      lp->A_local = Ai.mat();
      lp->solver.compute(lp->A_local);
      require_success(lp->solver, "residual solve on neighborhood " +
                                      std::to_string(i));
      locals[i] = std::move(lp);
    }
    return *locals[i];
  }

  // global residual functional of the slab (t_n, t_{n+1}) at fine nodes
  Vec slab_residual(const Vec& u_now, const Vec& u_next, int n) const {
    Vec du = (u_next - u_now) / dt;
    return load(n + 1) - M.mat() * du - A.mat() * u_next;
  }

  double norm_one(int n, int i, const Vec& r) {
    Local& lp = local(i);
    Vec rhs = gather(r, lp.interior);
    Vec phi = lp.solver.solve(rhs);
    double energy = phi.dot(rhs);  // phi' A phi = phi' rhs
    return std::sqrt(std::max(0.0, dt * energy));
  }
};

ResidualEstimator::ResidualEstimator(const Grid& grid, const FemMatrix& A,
                                     const FemMatrix& M, LoadFn fine_load,
                                     double dt)
    : impl_(std::make_unique<Impl>(grid, A, M, std::move(fine_load), dt)) {}
ResidualEstimator::~ResidualEstimator() = default;
ResidualEstimator::ResidualEstimator(ResidualEstimator&&) noexcept = default;

double ResidualEstimator::local_residual_norm(int n, int i, const Trajectory& ms,
                                              const SpMat& P) const {
  if (n + 1 > ms.n_steps)
    throw std::out_of_range("residual slab " + std::to_string(n) +
                            " needs step " + std::to_string(n + 1));
  Vec u_now = P * ms.at(n);
  Vec u_next = P * ms.at(n + 1);
  Vec r = impl_->slab_residual(u_now, u_next, n);
  return impl_->norm_one(n, i, r);
}

Eigen::MatrixXd ResidualEstimator::compute_all(const Trajectory& ms,
                                               const SpMat& P) const {
  const int n_steps = ms.n_steps;
  const int n_vert = impl_->grid.coarse_vertex_count();
  // Residual vectors per slab once, then one factorization per vertex reused
  // across all slabs.
  std::vector<Vec> residuals(n_steps);
  Vec u_now = P * ms.at(0);
  for (int n = 0; n < n_steps; ++n) {
    Vec u_next = P * ms.at(n + 1);
    residuals[n] = impl_->slab_residual(u_now, u_next, n);
    u_now = std::move(u_next);
  }
  Eigen::MatrixXd table(n_steps, n_vert);
  parallel_for(n_vert, [&](int i) {
    Impl::Local& lp = impl_->local(i);
    for (int n = 0; n < n_steps; ++n) {
      Vec rhs = gather(residuals[n], lp.interior);
      Vec phi = lp.solver.solve(rhs);
      table(n, i) = impl_->dt * std::max(0.0, phi.dot(rhs));
    }
  });
  return table;
}

Eigen::MatrixXd ResidualEstimator::compute_all_fine(const Trajectory& fine) const {
  const int n_steps = fine.n_steps;
  const int n_vert = impl_->grid.coarse_vertex_count();
  std::vector<Vec> residuals(n_steps);
  for (int n = 0; n < n_steps; ++n)
    residuals[n] = impl_->slab_residual(fine.at(n), fine.at(n + 1), n);
  Eigen::MatrixXd table(n_steps, n_vert);
  parallel_for(n_vert, [&](int i) {
    Impl::Local& lp = impl_->local(i);
    for (int n = 0; n < n_steps; ++n) {
      Vec rhs = gather(residuals[n], lp.interior);
      Vec phi = lp.solver.solve(rhs);
      table(n, i) = impl_->dt * std::max(0.0, phi.dot(rhs));
    }
  });
  return table;
}

ErrorReport posterior_report(const Eigen::MatrixXd& residual_sq, double e0_sq,
                             double spectral_gap, int overlap, double eps_l) {
  ErrorReport rep;
  rep.has_estimator = true;
  rep.residual_sq = residual_sq;
  rep.e0_sq = e0_sq;
  rep.spectral_gap = spectral_gap;
  rep.overlap_const = overlap;
  rep.eps_l = eps_l;
  double total = residual_sq.sum();
  rep.eps_r = total + e0_sq;
  rep.bound = 2.0 * overlap * (1.0 + 1.0 / spectral_gap) * total + e0_sq;
  rep.reliable = eps_l <= rep.bound * (1 + 1e-12) + 1e-300;
  rep.ratio = eps_l > 0 ? rep.eps_r / eps_l : 0;
  return rep;
}

}  // namespace cem

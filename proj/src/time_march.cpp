#include "cem/time_march.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "cem/linear_solvers.hpp"

namespace cem {

Scheme scheme_from_string(const std::string& name) {
  if (name == "backward") return Scheme::backward;
  if (name == "forward") return Scheme::forward;
  throw std::invalid_argument("unknown scheme '" + name +
                              "' (expected backward or forward)");
}

namespace {

template <class Mat>
struct Factorized;

template <>
struct Factorized<Eigen::MatrixXd> {
  Eigen::LDLT<Eigen::MatrixXd> chol;
  explicit Factorized(const Eigen::MatrixXd& m) : chol(m) {
    if (chol.info() != Eigen::Success)
      throw std::runtime_error("dense factorization failed");
  }
  Vec solve(const Vec& b) const { return chol.solve(b); }
};

template <>
struct Factorized<SpMat> {
  SpdSolver chol;
  explicit Factorized(const SpMat& m) {
    chol.compute(m);
    if (chol.info() != Eigen::Success)
      throw std::runtime_error("sparse factorization failed");
  }
  Vec solve(const Vec& b) const { return chol.solve(b); }
};

// Deterministic start vector for the power iteration.
Vec seeded_vector(Eigen::Index n) {
  Vec v(n);
  std::uint64_t s = 0x9e3779b97f4a7c15ull;
  for (Eigen::Index i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v[i] = 0.5 + static_cast<double>(s % 1000003ull) / 1000003.0;
  }
  return v;
}

template <class Mat>
double lambda_max_impl(const Mat& A, const Mat& M, double rel_tol) {
  Factorized<Mat> Minv(M);
  Vec x = seeded_vector(A.rows());
  x /= x.norm();
  double lambda = 0;
  for (int it = 0; it < 20000; ++it) {
    Vec y = Minv.solve(A * x);
    double ynorm = y.norm();
    if (ynorm == 0) return 0;  // A is zero on this space
    y /= ynorm;
    double next = y.dot(A * y) / y.dot(M * y);
    x = y;
    if (it > 3 && std::abs(next - lambda) <= rel_tol * std::abs(next)) {
      return next;
    }
    lambda = next;
  }
  return lambda;
}

template <class Mat>
Trajectory backward_euler_impl(const Mat& A, const Mat& M, const LoadFn& load,
                               const Vec& u_init, double dt, int n_steps) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  Trajectory traj;
  traj.dt = dt;
  traj.n_steps = n_steps;
  traj.states.reserve(n_steps + 1);
  traj.states.push_back(u_init);

  Mat system = M / dt + A;
  Factorized<Mat> solver(system);
  Factorized<Mat> mass(M);

  auto m_norm = [&](const Vec& v) { return std::sqrt(std::max(0.0, v.dot(M * v))); };
  auto dual_norm = [&](const Vec& b) {
    return std::sqrt(std::max(0.0, b.dot(mass.solve(b))));
  };

  double bound = m_norm(u_init);
  traj.norm_history.push_back(bound);
  traj.bound_history.push_back(bound);
  Vec u = u_init;
  for (int n = 1; n <= n_steps; ++n) {
    Vec b = load(n);
    Vec rhs = M * u / dt + b;
    u = solver.solve(rhs);
    if (!u.allFinite())
      throw std::runtime_error("backward Euler diverged at step " +
                               std::to_string(n));
    traj.states.push_back(u);
    bound += dt * dual_norm(b);
    double norm = m_norm(u);
    traj.norm_history.push_back(norm);
    traj.bound_history.push_back(bound);
    if (norm > bound * (1 + 1e-10) + 1e-300) traj.stability_ok = false;
  }
  return traj;
}

template <class Mat>
Trajectory forward_euler_impl(const Mat& A, const Mat& M, const LoadFn& load,
                              const Vec& u_init, double dt, int n_steps,
                              bool enforce_stability) {
  if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
  Trajectory traj;
  traj.dt = dt;
  traj.n_steps = n_steps;
  traj.lambda_max = lambda_max_impl(A, M, 1e-6);
  traj.stability_margin = traj.lambda_max > 0 ? 2.0 / traj.lambda_max - dt : 0;
  if (enforce_stability && traj.lambda_max * dt > 2.0)
    throw std::runtime_error(
        "forward Euler unstable: dt*lambda_max = " +
        std::to_string(dt * traj.lambda_max) + " > 2 (|1 - dt*lambda| > 1)");
  Factorized<Mat> mass(M);
  traj.states.reserve(n_steps + 1);
  traj.states.push_back(u_init);
  Vec u = u_init;
  for (int n = 0; n < n_steps; ++n) {
    Vec b = load(n);
    Vec rhs = M * u - dt * (A * u) + dt * b;
    u = mass.solve(rhs);
    if (!u.allFinite())
      throw std::runtime_error("forward Euler overflowed at step " +
                               std::to_string(n + 1));
    traj.states.push_back(u);
  }
  return traj;
}

}  // namespace

double generalized_lambda_max(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M,
                              double rel_tol) {
  return lambda_max_impl(A, M, rel_tol);
}
double generalized_lambda_max(const SpMat& A, const SpMat& M, double rel_tol) {
  return lambda_max_impl(A, M, rel_tol);
}

Trajectory backward_euler(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M,
                          const LoadFn& load, const Vec& u_init, double dt,
                          int n_steps) {
  return backward_euler_impl(A, M, load, u_init, dt, n_steps);
}
Trajectory backward_euler(const SpMat& A, const SpMat& M, const LoadFn& load,
                          const Vec& u_init, double dt, int n_steps) {
  return backward_euler_impl(A, M, load, u_init, dt, n_steps);
}

Trajectory forward_euler(const Eigen::MatrixXd& A, const Eigen::MatrixXd& M,
                         const LoadFn& load, const Vec& u_init, double dt,
                         int n_steps, bool enforce_stability) {
  return forward_euler_impl(A, M, load, u_init, dt, n_steps, enforce_stability);
}
Trajectory forward_euler(const SpMat& A, const SpMat& M, const LoadFn& load,
                         const Vec& u_init, double dt, int n_steps,
                         bool enforce_stability) {
  return forward_euler_impl(A, M, load, u_init, dt, n_steps, enforce_stability);
}

Vec project_initial(const MultiscaleSpace& space, const SpMat& M_fine,
                    const Vec& u0) {
  if (u0.size() != M_fine.rows())
    throw std::invalid_argument("project_initial: dimension mismatch");
  Eigen::LDLT<Eigen::MatrixXd> chol(space.M_ms);
  if (chol.info() != Eigen::Success)
    throw std::runtime_error("project_initial: reduced mass is singular");
  Vec rhs = space.P.transpose() * (M_fine * u0);
  return chol.solve(rhs);
}

Trajectory fine_reference(const FemMatrix& A, const FemMatrix& M,
                          const SpaceTimeFn& f, const Vec& u0, double dt,
                          int n_steps, Scheme scheme, const Grid& grid) {
  DofSet domain = whole_domain(grid);
  FemMatrix A0 = restrict_to(A, domain, true);
  FemMatrix M0 = restrict_to(M, domain, true);
  const std::vector<int>& interior = A0.nodes();

  LoadFn load = [&](int n) {
    return gather(assemble_load(grid, f, n * dt), interior);
  };
  Vec u0_int = gather(u0, interior);
  Trajectory reduced =
      scheme == Scheme::backward
          ? backward_euler(A0.mat(), M0.mat(), load, u0_int, dt, n_steps)
          : forward_euler(A0.mat(), M0.mat(), load, u0_int, dt, n_steps, true);

  // expand to full fine vectors (zeros on the Dirichlet boundary)
  for (Vec& state : reduced.states) {
    Vec full = Vec::Zero(grid.node_count());
    for (std::size_t k = 0; k < interior.size(); ++k)
      full[interior[k]] = state[k];
    state = std::move(full);
  }
  return reduced;
}

void write_snapshot(std::ostream& out, const Grid& grid, const Vec& full_state,
                    double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", t);
  out << grid.nfx() << " " << grid.nfy() << " " << buf << "\n";
  for (int j = 0; j <= grid.nfy(); ++j) {
    for (int i = 0; i <= grid.nfx(); ++i) {
      std::snprintf(buf, sizeof buf, "%.12e", full_state[grid.node_id(i, j)]);
      out << buf << (i == grid.nfx() ? "" : " ");
    }
    out << "\n";
  }
}

Vec read_snapshot(std::istream& in, const Grid& grid, const std::string& label) {
  int nfx = 0, nfy = 0;
  double t = 0;
  if (!(in >> nfx >> nfy >> t))
    throw std::runtime_error(label + ": missing snapshot header");
  if (nfx != grid.nfx() || nfy != grid.nfy())
    throw std::runtime_error(label + ": snapshot is " + std::to_string(nfx) +
                             "x" + std::to_string(nfy) +
                             " but the grid expects " +
                             std::to_string(grid.nfx()) + "x" +
                             std::to_string(grid.nfy()));
  Vec v(grid.node_count());
  for (int j = 0; j <= nfy; ++j)
    for (int i = 0; i <= nfx; ++i) {
      double x;
      if (!(in >> x)) throw std::runtime_error(label + ": truncated snapshot");
      v[grid.node_id(i, j)] = x;
    }
  return v;
}

}  // namespace cem

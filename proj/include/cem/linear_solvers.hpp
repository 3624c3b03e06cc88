#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <Eigen/UmfPackSupport>
#include <stdexcept>
#include <string>

#include "cem/assembly.hpp"

namespace cem {

/// Direct factorization for the bordered (saddle-point) systems.
using SaddleSolver = Eigen::UmfPackLU<SpMat>;

/// Direct factorization for symmetric positive definite systems.
using SpdSolver = Eigen::SimplicialLDLT<SpMat>;

/// Solve with one step of iterative refinement; keeps constraint residuals at
/// rounding level even on high-contrast systems.
template <class Solver>
Vec solve_refined(const Solver& solver, const SpMat& A, const Vec& b) {
  Vec x = solver.solve(b);
  Vec r = b - A * x;
  x += solver.solve(r);
  return x;
}

template <class Solver>
void require_success(const Solver& solver, const std::string& what) {
  if (solver.info() != Eigen::Success)
    throw std::runtime_error(what + ": factorization failed");
}

}  // namespace cem

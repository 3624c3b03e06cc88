#pragma once

#include <Eigen/Dense>
#include <limits>
#include <utility>
#include <vector>

#include "cem/assembly.hpp"
#include "cem/grid.hpp"

namespace cem {

/// How many eigenfunctions each coarse element keeps.
struct ModeSchedule {
  int uniform = 0;         // > 0: same count everywhere
  double threshold = -1;   // >= 0: every eigenvalue below it, capped
  int cap = 0;

  static ModeSchedule fixed(int count) { return {count, -1.0, 0}; }
  static ModeSchedule below(double tol, int cap) { return {0, tol, cap}; }
};

/// Per-element eigenpairs of a_i(phi,v) = lambda s_i(phi,v) on V(K_i)
/// (no boundary condition), s-orthonormal, eigenvalues ascending. One extra
/// eigenvalue beyond the kept modes is stored for the spectral gap.
struct ElementModes {
  std::vector<int> nodes;        // fine nodes of K_i
  Eigen::VectorXd eigenvalues;   // count()+1 values, ascending
  Eigen::MatrixXd modes;         // nodes x count(), s_i-orthonormal
  Eigen::MatrixXd s_modes;       // S_i * modes (s-products against K_i)

  int count() const { return static_cast<int>(modes.cols()); }
  double first_discarded() const { return eigenvalues[count()]; }
};

struct AuxiliarySpace {
  std::vector<ElementModes> elements;  // by coarse element id
  std::vector<int> offsets;            // global mode index base per element
  int total = 0;                       // sum of per-element counts
  double spectral_gap = std::numeric_limits<double>::infinity();  // Lambda

  int mode_count(int element) const { return elements[element].count(); }
  /// Same space with at most `count` modes per element; the spectral gap is
  /// recomputed. Requires count < the stored per-element count + 1.
  AuxiliarySpace truncated(int count) const;
};

/// First L+1 eigenpairs on one coarse element, dense generalized
/// symmetric-definite solve. Eigenvectors are s_i-normalized with the
/// largest-magnitude entry positive; the (L+1)-th eigenvalue rides along so
/// the caller can form the spectral gap.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> local_eigens(const FemMatrix& A,
                                                         const FemMatrix& S,
                                                         const Grid& grid,
                                                         int element, int L);

AuxiliarySpace build_aux_space(const FemMatrix& A, const FemMatrix& S,
                               const Grid& grid, const ModeSchedule& schedule);

/// The s-orthogonal projection of a fine vector onto the span of the
/// zero-extended auxiliary functions (pi of the auxiliary space). Idempotent
/// and s-self-adjoint by construction; reproduces members of the span.
Vec pi_project(const AuxiliarySpace& aux, const SpMat& S, const Vec& v);

}  // namespace cem

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cem/assembly.hpp"
#include "cem/grid.hpp"
#include "cem/spectral.hpp"

namespace cem {

enum class Flavor { constrained, relaxed };

std::string to_string(Flavor f);

/// Localized multiscale space: the coefficient columns of every basis
/// function (extended by zero outside its oversampling region, element-major
/// order, mode-minor), plus the Galerkin-reduced operators.
struct MultiscaleSpace {
  Flavor flavor = Flavor::constrained;
  int layers = 0;  // oversampling layers m used for every column
  SpMat P;         // fine nodes x n_ms
  std::vector<std::pair<int, int>> source;  // column -> (element, mode)
  Eigen::MatrixXd A_ms, M_ms;

  int count() const { return static_cast<int>(P.cols()); }
  Vec prolong(const Vec& reduced) const { return P * reduced; }
};

/// One basis function for (element, mode j) by constrained energy
/// minimization on K_{i,m}: the bordered system enforces s-orthogonality
/// against every auxiliary function of the coarse elements inside K_{i,m}.
Vec build_constrained_basis(const FemMatrix& A, const FemMatrix& S,
                            const AuxiliarySpace& aux, const Grid& grid,
                            int element, int j, int m);

/// The relaxed variant: a(psi,w) + s(pi psi, pi w) = s(phi_j, pi w) on
/// V0(K_{i,m}), solved through the equivalent bordered form.
Vec build_relaxed_basis(const FemMatrix& A, const FemMatrix& S,
                        const AuxiliarySpace& aux, const Grid& grid,
                        int element, int j, int m);

/// Assemble P and the reduced operators from prebuilt columns
/// (element-major, mode-minor order expected).
MultiscaleSpace assemble_ms_space(const std::vector<Vec>& columns,
                                  const std::vector<std::pair<int, int>>& source,
                                  Flavor flavor, int m, const FemMatrix& A,
                                  const FemMatrix& M, const Grid& grid);

/// Build every column (one factorization per element, shared by its modes)
/// and assemble the space.
MultiscaleSpace build_ms_space(const FemMatrix& A, const FemMatrix& S,
                               const AuxiliarySpace& aux, const Grid& grid,
                               Flavor flavor, int m, const FemMatrix& M);

/// Fraction of the a-energy of psi in each coarse-layer annulus around its
/// element (layer 0 = K_i, layer l = K_{i,l} minus K_{i,l-1}).
std::vector<double> decay_profile(const Vec& psi, const FemMatrix& A,
                                  const Grid& grid, int element);

/// Column cache: grid sizes, flavor, per-element mode counts, m and the field
/// checksum in the header; loading verifies all of them.
void save_basis_cache(const std::string& path, const Grid& grid,
                      const MultiscaleSpace& space, std::uint64_t checksum);
/// Returns the cached columns if the header matches; the reduced operators
/// are recomputed. Throws on checksum or shape mismatch.
MultiscaleSpace load_basis_cache(const std::string& path, const Grid& grid,
                                 Flavor flavor, int m, std::uint64_t checksum,
                                 const FemMatrix& A, const FemMatrix& M);

}  // namespace cem

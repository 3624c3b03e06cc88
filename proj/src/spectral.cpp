#include "cem/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cem/parallel.hpp"

namespace cem {

namespace {

// Keep the span but restore s-orthonormality to rounding level; the raw
// solver output drifts on high-contrast weights. Cholesky of the small Gram
// matrix has positive diagonal, so no sign flips are introduced.
void reorthonormalize(Eigen::MatrixXd& V, const Eigen::MatrixXd& S) {
  Eigen::MatrixXd G = V.transpose() * S * V;
  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) return;  // keep solver output
  Eigen::MatrixXd R = llt.matrixU();
  V = R.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(V);
}

void fix_signs(Eigen::MatrixXd& V) {
  for (int c = 0; c < V.cols(); ++c) {
    int arg = 0;
    double best = 0;
    for (int r = 0; r < V.rows(); ++r)
      if (std::abs(V(r, c)) > best) {
        best = std::abs(V(r, c));
        arg = r;
      }
    if (V(arg, c) < 0) V.col(c) = -V.col(c);
  }
}

ElementModes solve_element(const FemMatrix& A, const FemMatrix& S,
                           const Grid& grid, int element, int keep) {
  DofSet region = oversample(grid, element, 0);
  FemMatrix Ai = restrict_to(A, region, false);
  FemMatrix Si = restrict_to(S, region, false);
  const int n = Ai.dim();
  if (keep + 1 > n)
    throw std::runtime_error("element " + std::to_string(element) + ": asked for " +
                             std::to_string(keep) + "+1 eigenpairs but K_i has only " +
                             std::to_string(n) + " nodes");
  Eigen::MatrixXd Ad = Eigen::MatrixXd(Ai.mat());
  Eigen::MatrixXd Sd = Eigen::MatrixXd(Si.mat());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Ad, Sd);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("element " + std::to_string(element) +
                             ": local eigensolve failed (s-matrix not positive "
                             "definite?)");
  ElementModes em;
  em.nodes = region.nodes;
  em.eigenvalues = es.eigenvalues().head(keep + 1);
  em.modes = es.eigenvectors().leftCols(keep);
  reorthonormalize(em.modes, Sd);
  fix_signs(em.modes);
  em.s_modes = Sd * em.modes;
  return em;
}

}  // namespace

std::pair<Eigen::VectorXd, Eigen::MatrixXd> local_eigens(const FemMatrix& A,
                                                         const FemMatrix& S,
                                                         const Grid& grid,
                                                         int element, int L) {
  ElementModes em = solve_element(A, S, grid, element, L);
  return {em.eigenvalues, em.modes};
}

AuxiliarySpace build_aux_space(const FemMatrix& A, const FemMatrix& S,
                               const Grid& grid, const ModeSchedule& schedule) {
  const int n_elem = grid.coarse_element_count();
  const int solve_count =
      schedule.uniform > 0 ? schedule.uniform : std::max(1, schedule.cap);
  AuxiliarySpace aux;
  aux.elements.resize(n_elem);
  parallel_for(n_elem, [&](int e) {
    aux.elements[e] = solve_element(A, S, grid, e, solve_count);
  });
  if (schedule.uniform <= 0) {
    // threshold mode: keep every eigenvalue below the cut, at least one
    for (auto& em : aux.elements) {
      int keep = 1;
      while (keep < solve_count && em.eigenvalues[keep] < schedule.threshold)
        ++keep;
      em.modes.conservativeResize(Eigen::NoChange, keep);
      em.s_modes.conservativeResize(Eigen::NoChange, keep);
      em.eigenvalues.conservativeResize(keep + 1);
    }
  }
  aux.offsets.resize(n_elem);
  aux.total = 0;
  aux.spectral_gap = std::numeric_limits<double>::infinity();
  for (int e = 0; e < n_elem; ++e) {
    aux.offsets[e] = aux.total;
    aux.total += aux.elements[e].count();
    aux.spectral_gap = std::min(aux.spectral_gap, aux.elements[e].first_discarded());
  }
  return aux;
}

AuxiliarySpace AuxiliarySpace::truncated(int count) const {
  AuxiliarySpace out;
  out.elements.resize(elements.size());
  out.offsets.resize(elements.size());
  out.total = 0;
  out.spectral_gap = std::numeric_limits<double>::infinity();
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const ElementModes& src = elements[e];
    if (count + 1 > src.eigenvalues.size())
      throw std::invalid_argument(
          "truncated: need " + std::to_string(count) +
          "+1 stored eigenvalues, have " + std::to_string(src.eigenvalues.size()));
    ElementModes em;
    em.nodes = src.nodes;
    em.eigenvalues = src.eigenvalues.head(count + 1);
    em.modes = src.modes.leftCols(count);
    em.s_modes = src.s_modes.leftCols(count);
    out.offsets[e] = out.total;
    out.total += count;
    out.spectral_gap = std::min(out.spectral_gap, em.first_discarded());
    out.elements[e] = std::move(em);
  }
  return out;
}

Vec pi_project(const AuxiliarySpace& aux, const SpMat& S, const Vec& v) {
  // Zero-extended auxiliary functions as sparse columns.
  SpMat phi(v.size(), aux.total);
  {
    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t e = 0; e < aux.elements.size(); ++e) {
      const ElementModes& em = aux.elements[e];
      for (int j = 0; j < em.count(); ++j)
        for (std::size_t k = 0; k < em.nodes.size(); ++k)
          trips.emplace_back(em.nodes[k], aux.offsets[e] + j,
                             em.modes(static_cast<int>(k), j));
    }
    phi.setFromTriplets(trips.begin(), trips.end());
  }
  SpMat sphi = S * phi;
  SpMat gram = SpMat(phi.transpose() * sphi);
  Eigen::SimplicialLDLT<SpMat> solver(gram);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("pi_project: auxiliary Gram matrix is singular");
  Vec coef = solver.solve(sphi.transpose() * v);
  return phi * coef;
}

}  // namespace cem

#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "cem/grid.hpp"
#include "cem/media.hpp"

namespace cem {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

/// Scalar function of (x, y, t).
using SpaceTimeFn = std::function<double(double, double, double)>;

enum class CellForm { stiffness, mass };

/// 1D two-node contribution [[diag, off], [off, diag]] on a fine edge.
struct EdgeTerm {
  int n0 = 0, n1 = 0;
  double diag = 0, off = 0;
};

/// Q1 operator assembled from per-cell weights (and optional fracture edge
/// terms). The recipe is kept alongside the assembled matrix so the operator
/// can be cut out on a sub-region: Neumann restriction re-assembles over the
/// region's cells only, Dirichlet restriction additionally eliminates the
/// region-boundary rows and columns.
class FemMatrix {
 public:
  FemMatrix() = default;

  const SpMat& mat() const { return mat_; }
  int dim() const { return static_cast<int>(mat_.rows()); }
  CellForm form() const { return form_; }
  const Grid& grid() const { return *grid_; }

  /// Global node ids backing the rows/columns of mat(), ascending.
  const std::vector<int>& nodes() const { return nodes_; }
  /// Fine cells the operator integrates over, ascending.
  const std::vector<int>& cells() const { return cells_; }
  const std::vector<double>& cell_weights() const { return *cell_weight_; }
  const std::vector<EdgeTerm>& edge_terms() const { return *edge_terms_; }

  /// Quadratic form v'Av without forming products (v indexed like mat()).
  double energy(const Vec& v) const { return v.dot(mat_ * v); }

  /// Per-cell/per-edge accumulation of the quadratic form of a full fine
  /// vector; equals energy() on the global operator (identity check).
  double energy_by_cells(const Vec& full_fine) const;

  static FemMatrix assemble_global(const Grid& grid, CellForm form,
                                   std::shared_ptr<const std::vector<double>> w,
                                   std::shared_ptr<const std::vector<EdgeTerm>> e);
  friend FemMatrix restrict_to(const FemMatrix&, const DofSet&, bool);

 private:
  const Grid* grid_ = nullptr;
  CellForm form_ = CellForm::mass;
  std::shared_ptr<const std::vector<double>> cell_weight_;
  std::shared_ptr<const std::vector<EdgeTerm>> edge_terms_;
  std::vector<int> cells_;
  std::vector<int> nodes_;
  SpMat mat_;

  void assemble(const Grid& grid);
};

/// 4x4 Q1 element matrices on an hx-by-hy cell with unit coefficient,
/// 2x2 Gauss quadrature (exact for these integrands), SW,SE,NE,NW corners.
Eigen::Matrix4d unit_cell_stiffness(double hx, double hy);
Eigen::Matrix4d unit_cell_mass(double hx, double hy);

FemMatrix assemble_stiffness(const Grid& grid, const PermeabilityField& field);
FemMatrix assemble_mass(const Grid& grid);
FemMatrix assemble_s_mass(const Grid& grid, const WeightedCoefficient& ktilde);

/// Load vector (f(.,t), phi_i) over all fine nodes, same quadrature as the
/// matrices.
Vec assemble_load(const Grid& grid, const SpaceTimeFn& f, double t);

/// Adds the 1D fracture terms: (kf/h)[[1,-1],[-1,1]] to the stiffness and
/// (h/6)[[2,1],[1,2]] to the mass on each fracture fine edge.
std::pair<FemMatrix, FemMatrix> add_fracture_terms(const FemMatrix& A,
                                                   const FemMatrix& M,
                                                   const FractureSet& fractures,
                                                   const Grid& grid);

/// Cut the operator down to a region. dirichlet=false keeps every region node
/// (Neumann, integrals over the region's cells only); dirichlet=true drops the
/// boundary-flagged nodes (homogeneous Dirichlet by elimination).
FemMatrix restrict_to(const FemMatrix& op, const DofSet& dofs, bool dirichlet);

/// Gather/scatter between full fine vectors and region-indexed vectors.
Vec gather(const Vec& full, const std::vector<int>& nodes);
void scatter_add(Vec& full, const std::vector<int>& nodes, const Vec& local);

}  // namespace cem

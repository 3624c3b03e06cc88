#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cem {

/// Nested uniform Cartesian meshes on an axis-aligned rectangle (unit square
/// by default). The fine mesh has nfx x nfy cells; the coarse mesh ncx x ncy
/// blocks, each block an (nfx/ncx) x (nfy/ncy) patch of fine cells.
///
/// Orderings are fixed at construction and shared by every assembly and
/// reduction in the library:
///   fine node   (i,j) -> j*(nfx+1)+i      i=0..nfx, j=0..nfy  (bottom row first)
///   fine cell   (i,j) -> j*nfx+i          i=0..nfx-1
///   coarse cell (I,J) -> J*ncx+I
///   coarse vertex (I,J) -> J*(ncx+1)+I
class Grid {
 public:
  Grid() = default;
  Grid(int nfx, int nfy, int ncx, int ncy, double x0 = 0.0, double y0 = 0.0,
       double x1 = 1.0, double y1 = 1.0);

  int nfx() const { return nfx_; }
  int nfy() const { return nfy_; }
  int ncx() const { return ncx_; }
  int ncy() const { return ncy_; }
  int fine_per_coarse_x() const { return fpcx_; }
  int fine_per_coarse_y() const { return fpcy_; }

  double hx() const { return hx_; }
  double hy() const { return hy_; }
  double coarse_hx() const { return Hx_; }
  double coarse_hy() const { return Hy_; }

  int node_count() const { return (nfx_ + 1) * (nfy_ + 1); }
  int cell_count() const { return nfx_ * nfy_; }
  int coarse_element_count() const { return ncx_ * ncy_; }
  int coarse_vertex_count() const { return (ncx_ + 1) * (ncy_ + 1); }

  int node_id(int i, int j) const { return j * (nfx_ + 1) + i; }
  std::array<int, 2> node_ij(int id) const {
    return {id % (nfx_ + 1), id / (nfx_ + 1)};
  }
  double node_x(int id) const { return x0_ + (id % (nfx_ + 1)) * hx_; }
  double node_y(int id) const { return y0_ + (id / (nfx_ + 1)) * hy_; }

  int cell_id(int i, int j) const { return j * nfx_ + i; }
  std::array<int, 2> cell_ij(int id) const { return {id % nfx_, id / nfx_}; }
  std::array<double, 2> cell_center(int id) const {
    auto [i, j] = cell_ij(id);
    return {x0_ + (i + 0.5) * hx_, y0_ + (j + 0.5) * hy_};
  }
  /// Corner nodes in SW,SE,NE,NW order.
  std::array<int, 4> cell_nodes(int id) const {
    auto [i, j] = cell_ij(id);
    int sw = node_id(i, j);
    return {sw, sw + 1, sw + nfx_ + 2, sw + nfx_ + 1};
  }

  int coarse_element_id(int I, int J) const { return J * ncx_ + I; }
  std::array<int, 2> coarse_element_ij(int id) const {
    return {id % ncx_, id / ncx_};
  }
  int coarse_vertex_id(int I, int J) const { return J * (ncx_ + 1) + I; }
  std::array<int, 2> coarse_vertex_ij(int id) const {
    return {id % (ncx_ + 1), id / (ncx_ + 1)};
  }
  std::array<double, 2> coarse_vertex_coords(int id) const {
    auto [I, J] = coarse_vertex_ij(id);
    return {x0_ + I * Hx_, y0_ + J * Hy_};
  }

  /// Fine cells covered by a coarse element, ascending.
  std::vector<int> coarse_element_cells(int element) const;

  bool node_on_domain_boundary(int id) const {
    auto [i, j] = node_ij(id);
    return i == 0 || j == 0 || i == nfx_ || j == nfy_;
  }

 private:
  int nfx_ = 0, nfy_ = 0, ncx_ = 0, ncy_ = 0;
  int fpcx_ = 0, fpcy_ = 0;
  double x0_ = 0, y0_ = 0, x1_ = 1, y1_ = 1;
  double hx_ = 0, hy_ = 0, Hx_ = 0, Hy_ = 0;
};

/// Fine dofs of a rectangular union of coarse blocks, together with the fine
/// cells the region covers (operators are re-assembled from those cells when
/// the region is cut out). Boundary flags mark the region perimeter; for the
/// local solves those nodes carry homogeneous Dirichlet data.
struct DofSet {
  std::vector<int> nodes;             // strictly increasing global node ids
  std::vector<std::uint8_t> boundary; // parallel to nodes, 1 = on perimeter
  std::vector<int> cells;             // fine cells of the region, ascending
  int ci0 = 0, cj0 = 0, ci1 = 0, cj1 = 0; // coarse rectangle [ci0,ci1)x[cj0,cj1)

  int size() const { return static_cast<int>(nodes.size()); }
  int interior_count() const;
  /// Positions (into .nodes) of the non-boundary entries, ascending.
  std::vector<int> interior_positions() const;
};

/// Build the nested mesh pair on the unit square. Both fine sizes must be
/// divisible by the matching coarse size and all counts must be >= 2.
Grid build_grid(int nfx, int nfy, int ncx, int ncy);

/// Fine dofs of the neighborhood w_i: the union of coarse elements having
/// coarse vertex `vertex` as a corner (4 for interior vertices, 2 on edges,
/// 1 at domain corners).
DofSet coarse_neighborhood(const Grid& grid, int vertex);

/// Fine dofs of the oversampling region K_{i,m}: coarse element `element`
/// grown by m coarse layers on every side, clipped at the domain boundary.
/// m = 0 returns the element itself.
DofSet oversample(const Grid& grid, int element, int m);

/// The whole domain as a DofSet (boundary flags on the domain boundary).
DofSet whole_domain(const Grid& grid);

/// Maximum number of coarse neighborhoods w_i sharing one fine cell.
int max_neighborhood_overlap(const Grid& grid);

}  // namespace cem

#include "cem/grid.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cem {

Grid::Grid(int nfx, int nfy, int ncx, int ncy, double x0, double y0, double x1,
           double y1)
    : nfx_(nfx), nfy_(nfy), ncx_(ncx), ncy_(ncy), x0_(x0), y0_(y0), x1_(x1),
      y1_(y1) {
  if (nfx < 2 || nfy < 2 || ncx < 2 || ncy < 2)
    throw std::invalid_argument("grid sizes must all be >= 2, got fine " +
                                std::to_string(nfx) + "x" + std::to_string(nfy) +
                                ", coarse " + std::to_string(ncx) + "x" +
                                std::to_string(ncy));
  if (nfx % ncx != 0)
    throw std::invalid_argument("fine size " + std::to_string(nfx) +
                                " is not divisible by coarse size " +
                                std::to_string(ncx) + " along x");
  if (nfy % ncy != 0)
    throw std::invalid_argument("fine size " + std::to_string(nfy) +
                                " is not divisible by coarse size " +
                                std::to_string(ncy) + " along y");
  fpcx_ = nfx / ncx;
  fpcy_ = nfy / ncy;
  hx_ = (x1_ - x0_) / nfx_;
  hy_ = (y1_ - y0_) / nfy_;
  Hx_ = (x1_ - x0_) / ncx_;
  Hy_ = (y1_ - y0_) / ncy_;
}

std::vector<int> Grid::coarse_element_cells(int element) const {
  auto [I, J] = coarse_element_ij(element);
  std::vector<int> cells;
  cells.reserve(fpcx_ * fpcy_);
  for (int j = J * fpcy_; j < (J + 1) * fpcy_; ++j)
    for (int i = I * fpcx_; i < (I + 1) * fpcx_; ++i)
      cells.push_back(cell_id(i, j));
  return cells;
}

int DofSet::interior_count() const {
  int n = 0;
  for (auto b : boundary) n += (b == 0);
  return n;
}

std::vector<int> DofSet::interior_positions() const {
  std::vector<int> pos;
  pos.reserve(nodes.size());
  for (int k = 0; k < size(); ++k)
    if (!boundary[k]) pos.push_back(k);
  return pos;
}

Grid build_grid(int nfx, int nfy, int ncx, int ncy) {
  return Grid(nfx, nfy, ncx, ncy);
}

namespace {

// Region of whole coarse blocks [ci0,ci1) x [cj0,cj1); nodes on the region
// perimeter are flagged boundary (including parts on the domain boundary).
DofSet coarse_rect_dofs(const Grid& g, int ci0, int cj0, int ci1, int cj1) {
  DofSet d;
  d.ci0 = ci0;
  d.cj0 = cj0;
  d.ci1 = ci1;
  d.cj1 = cj1;
  const int ilo = ci0 * g.fine_per_coarse_x();
  const int ihi = ci1 * g.fine_per_coarse_x();
  const int jlo = cj0 * g.fine_per_coarse_y();
  const int jhi = cj1 * g.fine_per_coarse_y();
  d.nodes.reserve((ihi - ilo + 1) * (jhi - jlo + 1));
  d.boundary.reserve(d.nodes.capacity());
  for (int j = jlo; j <= jhi; ++j)
    for (int i = ilo; i <= ihi; ++i) {
      d.nodes.push_back(g.node_id(i, j));
      d.boundary.push_back(i == ilo || i == ihi || j == jlo || j == jhi);
    }
  d.cells.reserve((ihi - ilo) * (jhi - jlo));
  for (int j = jlo; j < jhi; ++j)
    for (int i = ilo; i < ihi; ++i) d.cells.push_back(g.cell_id(i, j));
  return d;
}

}  // namespace

DofSet coarse_neighborhood(const Grid& grid, int vertex) {
  if (vertex < 0 || vertex >= grid.coarse_vertex_count())
    throw std::out_of_range("coarse vertex " + std::to_string(vertex) +
                            " out of range (grid has " +
                            std::to_string(grid.coarse_vertex_count()) + ")");
  auto [I, J] = grid.coarse_vertex_ij(vertex);
  return coarse_rect_dofs(grid, std::max(I - 1, 0), std::max(J - 1, 0),
                          std::min(I + 1, grid.ncx()),
                          std::min(J + 1, grid.ncy()));
}

DofSet oversample(const Grid& grid, int element, int m) {
  if (element < 0 || element >= grid.coarse_element_count())
    throw std::out_of_range("coarse element " + std::to_string(element) +
                            " out of range (grid has " +
                            std::to_string(grid.coarse_element_count()) + ")");
  if (m < 0) throw std::invalid_argument("oversampling layers must be >= 0");
  auto [I, J] = grid.coarse_element_ij(element);
  return coarse_rect_dofs(grid, std::max(I - m, 0), std::max(J - m, 0),
                          std::min(I + m + 1, grid.ncx()),
                          std::min(J + m + 1, grid.ncy()));
}

DofSet whole_domain(const Grid& grid) {
  return coarse_rect_dofs(grid, 0, 0, grid.ncx(), grid.ncy());
}

int max_neighborhood_overlap(const Grid& grid) {
  std::vector<int> count(grid.cell_count(), 0);
  for (int v = 0; v < grid.coarse_vertex_count(); ++v) {
    DofSet d = coarse_neighborhood(grid, v);
    for (int c : d.cells) ++count[c];
  }
  return *std::max_element(count.begin(), count.end());
}

}  // namespace cem

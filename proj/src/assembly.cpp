#include "cem/assembly.hpp"

#include <cmath>
#include <stdexcept>

namespace cem {

namespace {

// 2x2 Gauss points on [-1,1]^2 and bilinear shapes in SW,SE,NE,NW order.
struct QuadData {
  double N[4][4];    // [gauss][shape]
  double dNx[4][4];  // d/dxi
  double dNy[4][4];  // d/deta
  double gx[4], gy[4];
};

QuadData gauss22() {
  QuadData q{};
  const double g = 1.0 / std::sqrt(3.0);
  const double pts[4][2] = {{-g, -g}, {g, -g}, {g, g}, {-g, g}};
  const double cx[4] = {-1, 1, 1, -1};  // corner signs, SW,SE,NE,NW
  const double cy[4] = {-1, -1, 1, 1};
  for (int p = 0; p < 4; ++p) {
    q.gx[p] = pts[p][0];
    q.gy[p] = pts[p][1];
    for (int a = 0; a < 4; ++a) {
      q.N[p][a] = 0.25 * (1 + cx[a] * pts[p][0]) * (1 + cy[a] * pts[p][1]);
      q.dNx[p][a] = 0.25 * cx[a] * (1 + cy[a] * pts[p][1]);
      q.dNy[p][a] = 0.25 * cy[a] * (1 + cx[a] * pts[p][0]);
    }
  }
  return q;
}

}  // namespace

Eigen::Matrix4d unit_cell_stiffness(double hx, double hy) {
  const QuadData q = gauss22();
  Eigen::Matrix4d K = Eigen::Matrix4d::Zero();
  const double w = (hx * hy) / 4.0;  // jacobian, unit gauss weights
  for (int p = 0; p < 4; ++p)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        K(a, b) += w * (q.dNx[p][a] * 2 / hx * q.dNx[p][b] * 2 / hx +
                        q.dNy[p][a] * 2 / hy * q.dNy[p][b] * 2 / hy);
  return K;
}

Eigen::Matrix4d unit_cell_mass(double hx, double hy) {
  const QuadData q = gauss22();
  Eigen::Matrix4d M = Eigen::Matrix4d::Zero();
  const double w = (hx * hy) / 4.0;
  for (int p = 0; p < 4; ++p)
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) M(a, b) += w * q.N[p][a] * q.N[p][b];
  return M;
}

void FemMatrix::assemble(const Grid& grid) {
  const Eigen::Matrix4d base = form_ == CellForm::stiffness
                                   ? unit_cell_stiffness(grid.hx(), grid.hy())
                                   : unit_cell_mass(grid.hx(), grid.hy());
  // global node id -> position in nodes_, or -1
  std::vector<int> local(grid.node_count(), -1);
  for (std::size_t k = 0; k < nodes_.size(); ++k) local[nodes_[k]] = static_cast<int>(k);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(cells_.size() * 16 + edge_terms_->size() * 4);
  for (int c : cells_) {
    const double w = (*cell_weight_)[c];
    const auto n = grid.cell_nodes(c);
    int loc[4];
    for (int a = 0; a < 4; ++a) loc[a] = local[n[a]];
    for (int a = 0; a < 4; ++a) {
      if (loc[a] < 0) continue;
      for (int b = 0; b < 4; ++b) {
        if (loc[b] < 0) continue;
        trips.emplace_back(loc[a], loc[b], w * base(a, b));
      }
    }
  }
  for (const auto& e : *edge_terms_) {
    int la = local[e.n0], lb = local[e.n1];
    // Keep diagonal contributions of edges reaching eliminated nodes.
    if (la >= 0) trips.emplace_back(la, la, e.diag);
    if (lb >= 0) trips.emplace_back(lb, lb, e.diag);
    if (la >= 0 && lb >= 0) {
      trips.emplace_back(la, lb, e.off);
      trips.emplace_back(lb, la, e.off);
    }
  }
  mat_.resize(static_cast<int>(nodes_.size()), static_cast<int>(nodes_.size()));
  mat_.setFromTriplets(trips.begin(), trips.end());
  mat_.makeCompressed();
}

FemMatrix FemMatrix::assemble_global(
    const Grid& grid, CellForm form,
    std::shared_ptr<const std::vector<double>> w,
    std::shared_ptr<const std::vector<EdgeTerm>> e) {
  FemMatrix op;
  op.grid_ = &grid;
  op.form_ = form;
  op.cell_weight_ = std::move(w);
  op.edge_terms_ = e ? std::move(e)
                     : std::make_shared<const std::vector<EdgeTerm>>();
  op.cells_.resize(grid.cell_count());
  for (int c = 0; c < grid.cell_count(); ++c) op.cells_[c] = c;
  op.nodes_.resize(grid.node_count());
  for (int n = 0; n < grid.node_count(); ++n) op.nodes_[n] = n;
  op.assemble(grid);
  return op;
}

double FemMatrix::energy_by_cells(const Vec& full_fine) const {
  const Eigen::Matrix4d base = form_ == CellForm::stiffness
                                   ? unit_cell_stiffness(grid_->hx(), grid_->hy())
                                   : unit_cell_mass(grid_->hx(), grid_->hy());
  double total = 0;
  for (int c : cells_) {
    const auto n = grid_->cell_nodes(c);
    Eigen::Vector4d v(full_fine[n[0]], full_fine[n[1]], full_fine[n[2]],
                      full_fine[n[3]]);
    total += (*cell_weight_)[c] * v.dot(base * v);
  }
  for (const auto& e : *edge_terms_) {
    double a = full_fine[e.n0], b = full_fine[e.n1];
    total += e.diag * (a * a + b * b) + 2 * e.off * a * b;
  }
  return total;
}

FemMatrix assemble_stiffness(const Grid& grid, const PermeabilityField& field) {
  if (field.nfx != grid.nfx() || field.nfy != grid.nfy())
    throw std::invalid_argument("stiffness: field does not match the grid");
  auto w = std::make_shared<const std::vector<double>>(field.cell_values);
  return FemMatrix::assemble_global(grid, CellForm::stiffness, std::move(w), nullptr);
}

FemMatrix assemble_mass(const Grid& grid) {
  auto w = std::make_shared<const std::vector<double>>(
      std::vector<double>(grid.cell_count(), 1.0));
  return FemMatrix::assemble_global(grid, CellForm::mass, std::move(w), nullptr);
}

FemMatrix assemble_s_mass(const Grid& grid, const WeightedCoefficient& ktilde) {
  if (ktilde.nfx != grid.nfx() || ktilde.nfy != grid.nfy())
    throw std::invalid_argument("s-mass: weight does not match the grid");
  auto w = std::make_shared<const std::vector<double>>(ktilde.cell_values);
  return FemMatrix::assemble_global(grid, CellForm::mass, std::move(w), nullptr);
}

Vec assemble_load(const Grid& grid, const SpaceTimeFn& f, double t) {
  const QuadData q = gauss22();
  const double w = grid.hx() * grid.hy() / 4.0;
  Vec b = Vec::Zero(grid.node_count());
  for (int c = 0; c < grid.cell_count(); ++c) {
    auto [xc, yc] = grid.cell_center(c);
    const auto n = grid.cell_nodes(c);
    for (int p = 0; p < 4; ++p) {
      double x = xc + 0.5 * grid.hx() * q.gx[p];
      double y = yc + 0.5 * grid.hy() * q.gy[p];
      double fv = f(x, y, t);
      if (!std::isfinite(fv))
        throw std::runtime_error("load: source is not finite at (" +
                                 std::to_string(x) + "," + std::to_string(y) + ")");
      for (int a = 0; a < 4; ++a) b[n[a]] += w * fv * q.N[p][a];
    }
  }
  return b;
}

std::pair<FemMatrix, FemMatrix> add_fracture_terms(const FemMatrix& A,
                                                   const FemMatrix& M,
                                                   const FractureSet& fractures,
                                                   const Grid& grid) {
  auto a_edges = std::make_shared<std::vector<EdgeTerm>>(A.edge_terms());
  auto m_edges = std::make_shared<std::vector<EdgeTerm>>(M.edge_terms());
  for (const auto& seg : fractures.segments) {
    for (const auto& [n0, n1] : seg.edges) {
      // Edge length: nodes differ by 1 (horizontal) or nfx+1 (vertical).
      double h = (n1 - n0 == 1) ? grid.hx() : grid.hy();
      a_edges->push_back({n0, n1, seg.conductivity / h, -seg.conductivity / h});
      m_edges->push_back({n0, n1, h / 3.0, h / 6.0});
    }
  }
  FemMatrix A2 = FemMatrix::assemble_global(
      grid, CellForm::stiffness,
      std::make_shared<const std::vector<double>>(A.cell_weights()),
      std::move(a_edges));
  FemMatrix M2 = FemMatrix::assemble_global(
      grid, CellForm::mass,
      std::make_shared<const std::vector<double>>(M.cell_weights()),
      std::move(m_edges));
  return {std::move(A2), std::move(M2)};
}

FemMatrix restrict_to(const FemMatrix& op, const DofSet& dofs, bool dirichlet) {
  FemMatrix out;
  out.grid_ = op.grid_;
  out.form_ = op.form_;
  out.cell_weight_ = op.cell_weight_;

  // Intersect the region with the cells the operator still integrates over.
  if (op.cells_.size() == static_cast<std::size_t>(op.grid_->cell_count())) {
    out.cells_ = dofs.cells;
  } else {
    std::vector<std::uint8_t> have(op.grid_->cell_count(), 0);
    for (int c : op.cells_) have[c] = 1;
    for (int c : dofs.cells)
      if (have[c]) out.cells_.push_back(c);
  }

  out.nodes_.reserve(dofs.nodes.size());
  for (int k = 0; k < dofs.size(); ++k)
    if (!dirichlet || !dofs.boundary[k]) out.nodes_.push_back(dofs.nodes[k]);

  // Keep edge terms whose endpoints both lie in the region; assemble()
  // keeps the diagonal part of edges with an eliminated endpoint.
  std::vector<std::uint8_t> in_support(op.grid_->node_count(), 0);
  for (int n : out.nodes_) in_support[n] = 1;
  auto kept = std::make_shared<std::vector<EdgeTerm>>();
  std::vector<std::uint8_t> region_node(op.grid_->node_count(), 0);
  for (int n : dofs.nodes) region_node[n] = 1;
  for (const auto& e : *op.edge_terms_)
    if (region_node[e.n0] && region_node[e.n1]) kept->push_back(e);
  out.edge_terms_ = std::move(kept);

  out.assemble(*op.grid_);
  return out;
}

Vec gather(const Vec& full, const std::vector<int>& nodes) {
  Vec v(nodes.size());
  for (std::size_t k = 0; k < nodes.size(); ++k) v[k] = full[nodes[k]];
  return v;
}

void scatter_add(Vec& full, const std::vector<int>& nodes, const Vec& local) {
  for (std::size_t k = 0; k < nodes.size(); ++k) full[nodes[k]] += local[k];
}

}  // namespace cem

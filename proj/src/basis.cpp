#include "cem/basis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "cem/linear_solvers.hpp"
#include "cem/parallel.hpp"

namespace cem {

std::string to_string(Flavor f) {
  return f == Flavor::constrained ? "constrained" : "relaxed";
}

namespace {

// Everything the bordered solves of one element share: the Dirichlet
// stiffness on K_{i,m}, one constraint row per auxiliary function living
// inside the region, and the factorization. Constrained flavor keeps a zero
// trailing block ([A C'; C 0]); the relaxed one gets -I there, which is the
// penalized SPD problem after eliminating the multiplier.
struct ElementSystem {
  DofSet region;
  std::vector<int> interior;  // global node ids backing rows 0..n_int-1
  int n_int = 0, n_con = 0;
  int max_modes = 0;
  std::vector<int> constraint_row;  // element*max_modes + j -> bordered row
  SpMat K;

  int row_of(int element, int j) const {
    return constraint_row[static_cast<std::size_t>(element) * max_modes + j];
  }
};

ElementSystem build_element_system(const FemMatrix& A, const AuxiliarySpace& aux,
                                   const Grid& grid, int element, int m,
                                   Flavor flavor) {
  if (m < 1) throw std::invalid_argument("oversampling layers must be >= 1");
  ElementSystem sys;
  sys.region = oversample(grid, element, m);
  FemMatrix Ar = restrict_to(A, sys.region, true);
  sys.interior = Ar.nodes();
  sys.n_int = static_cast<int>(sys.interior.size());

  std::vector<int> local(grid.node_count(), -1);
  for (int k = 0; k < sys.n_int; ++k) local[sys.interior[k]] = k;

  // Oversampling regions are unions of whole coarse elements, so every
  // element of the coarse rectangle is fully inside.
  std::vector<int> region_elements;
  for (int J = sys.region.cj0; J < sys.region.cj1; ++J)
    for (int I = sys.region.ci0; I < sys.region.ci1; ++I)
      region_elements.push_back(grid.coarse_element_id(I, J));

  sys.max_modes = 1;
  for (int e : region_elements)
    sys.max_modes = std::max(sys.max_modes, aux.elements[e].count());
  sys.constraint_row.assign(
      static_cast<std::size_t>(grid.coarse_element_count()) * sys.max_modes, -1);

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(Ar.mat().nonZeros() + sys.n_int * 2);
  for (int k = 0; k < Ar.mat().outerSize(); ++k)
    for (SpMat::InnerIterator it(Ar.mat(), k); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()),
                         it.value());

  int row = sys.n_int;
  for (int e : region_elements) {
    const ElementModes& em = aux.elements[e];
    for (int j = 0; j < em.count(); ++j) {
      sys.constraint_row[static_cast<std::size_t>(e) * sys.max_modes + j] = row;
      for (std::size_t k = 0; k < em.nodes.size(); ++k) {
        int li = local[em.nodes[k]];
        if (li < 0) continue;  // outside the region interior
        double v = em.s_modes(static_cast<int>(k), j);
        trips.emplace_back(row, li, v);
        trips.emplace_back(li, row, v);
      }
      ++row;
    }
  }
  sys.n_con = row - sys.n_int;
  if (flavor == Flavor::relaxed)
    for (int c = 0; c < sys.n_con; ++c)
      trips.emplace_back(sys.n_int + c, sys.n_int + c, -1.0);

  sys.K.resize(sys.n_int + sys.n_con, sys.n_int + sys.n_con);
  sys.K.setFromTriplets(trips.begin(), trips.end());
  sys.K.makeCompressed();
  return sys;
}

// Interior coefficients of one basis function (indexed like sys.interior).
Vec solve_column(const ElementSystem& sys, const SaddleSolver& lu,
                 const AuxiliarySpace& aux, Flavor flavor, int element, int j) {
  const ElementModes& em = aux.elements[element];
  if (j < 0 || j >= em.count())
    throw std::out_of_range("basis: element " + std::to_string(element) +
                            " keeps " + std::to_string(em.count()) +
                            " modes, asked for mode " + std::to_string(j));
  const int crow = sys.row_of(element, j);
  Vec rhs = Vec::Zero(sys.K.rows());
  if (flavor == Flavor::constrained) {
    rhs[crow] = 1.0;
  } else {
    // s(phi_j, pi w): exactly the top block of the constraint column
    for (SpMat::InnerIterator it(sys.K, crow); it; ++it)
      if (it.row() < sys.n_int) rhs[it.row()] = it.value();
  }
  Vec x = solve_refined(lu, sys.K, rhs);
  if (!x.allFinite())
    throw std::runtime_error("basis: singular local system on element " +
                             std::to_string(element) +
                             " (dependent constraints?)");
  return x.head(sys.n_int);
}

Vec expand_full(const Vec& interior, const std::vector<int>& nodes, int n_fine) {
  Vec full = Vec::Zero(n_fine);
  for (std::size_t k = 0; k < nodes.size(); ++k) full[nodes[k]] = interior[k];
  return full;
}

Vec build_one(const FemMatrix& A, const AuxiliarySpace& aux, const Grid& grid,
              int element, int j, int m, Flavor flavor) {
  ElementSystem sys = build_element_system(A, aux, grid, element, m, flavor);
  SaddleSolver lu;
  lu.compute(sys.K);
  require_success(lu, "basis element " + std::to_string(element));
  Vec interior = solve_column(sys, lu, aux, flavor, element, j);
  return expand_full(interior, sys.interior, grid.node_count());
}

// Reduced operators and the definiteness check, shared by every entry path.
void finalize_space(MultiscaleSpace& space, const FemMatrix& A,
                    const FemMatrix& M, const Grid& grid) {
  const int n = space.count();
  space.A_ms.setZero(n, n);
  space.M_ms.setZero(n, n);
  std::vector<std::array<int, 4>> rect(n);
  for (int c = 0; c < n; ++c) {
    DofSet d = oversample(grid, space.source[c].first, space.layers);
    rect[c] = {d.ci0, d.cj0, d.ci1, d.cj1};
  }
  auto overlaps = [&](int a, int b) {
    return rect[a][0] < rect[b][2] && rect[b][0] < rect[a][2] &&
           rect[a][1] < rect[b][3] && rect[b][1] < rect[a][3];
  };
  parallel_for(n, [&](int c) {
    Vec pc = Vec(space.P.col(c));
    Vec wa = A.mat() * pc;
    Vec wm = M.mat() * pc;
    for (int r = c; r < n; ++r) {
      if (!overlaps(c, r)) continue;
      space.A_ms(r, c) = space.P.col(r).dot(wa);
      space.M_ms(r, c) = space.P.col(r).dot(wm);
    }
  });
  for (int c = 0; c < n; ++c)
    for (int r = c + 1; r < n; ++r) {
      space.A_ms(c, r) = space.A_ms(r, c);
      space.M_ms(c, r) = space.M_ms(r, c);
    }
  Eigen::LDLT<Eigen::MatrixXd> chol(space.M_ms);
  if (chol.info() != Eigen::Success || !chol.isPositive())
    throw std::runtime_error("reduced mass matrix is not positive definite "
                             "(dependent basis columns)");
}

}  // namespace

Vec build_constrained_basis(const FemMatrix& A, const FemMatrix& /*S*/,
                            const AuxiliarySpace& aux, const Grid& grid,
                            int element, int j, int m) {
  return build_one(A, aux, grid, element, j, m, Flavor::constrained);
}

Vec build_relaxed_basis(const FemMatrix& A, const FemMatrix& /*S*/,
                        const AuxiliarySpace& aux, const Grid& grid,
                        int element, int j, int m) {
  return build_one(A, aux, grid, element, j, m, Flavor::relaxed);
}

MultiscaleSpace assemble_ms_space(const std::vector<Vec>& columns,
                                  const std::vector<std::pair<int, int>>& source,
                                  Flavor flavor, int m, const FemMatrix& A,
                                  const FemMatrix& M, const Grid& grid) {
  if (columns.empty()) throw std::invalid_argument("no basis columns");
  if (columns.size() != source.size())
    throw std::invalid_argument("columns/source size mismatch");
  MultiscaleSpace space;
  space.flavor = flavor;
  space.layers = m;
  space.source = source;
  const int n = static_cast<int>(columns.size());
  const int rows = static_cast<int>(columns[0].size());
  space.P.resize(rows, n);
  for (int c = 0; c < n; ++c) {
    space.P.startVec(c);
    for (int r = 0; r < rows; ++r)
      if (columns[c][r] != 0.0) space.P.insertBack(r, c) = columns[c][r];
  }
  space.P.finalize();
  space.P.makeCompressed();
  finalize_space(space, A, M, grid);
  return space;
}

MultiscaleSpace build_ms_space(const FemMatrix& A, const FemMatrix& S,
                               const AuxiliarySpace& aux, const Grid& grid,
                               Flavor flavor, int m, const FemMatrix& M) {
  (void)S;  // the s-products are baked into aux.s_modes
  const int n_elem = grid.coarse_element_count();
  MultiscaleSpace space;
  space.flavor = flavor;
  space.layers = m;
  std::vector<int> first_col(n_elem, 0);
  for (int e = 0; e < n_elem; ++e) {
    first_col[e] = static_cast<int>(space.source.size());
    for (int j = 0; j < aux.elements[e].count(); ++j)
      space.source.emplace_back(e, j);
  }
  const int n_cols = static_cast<int>(space.source.size());

  // Interior values per column, stored compactly (the node list is shared by
  // each element's modes); scattered into P column-by-column afterwards.
  std::vector<Vec> values(n_cols);
  std::vector<std::vector<int>> nodes(n_elem);
  parallel_for(n_elem, [&](int e) {
    if (aux.elements[e].count() == 0) return;
    ElementSystem sys = build_element_system(A, aux, grid, e, m, flavor);
    SaddleSolver lu;
    lu.compute(sys.K);
    require_success(lu, "basis element " + std::to_string(e));
    for (int j = 0; j < aux.elements[e].count(); ++j)
      values[first_col[e] + j] = solve_column(sys, lu, aux, flavor, e, j);
    nodes[e] = std::move(sys.interior);
  });

  space.P.resize(grid.node_count(), n_cols);
  for (int c = 0; c < n_cols; ++c) {
    space.P.startVec(c);
    const auto& nd = nodes[space.source[c].first];
    const Vec& val = values[c];
    for (std::size_t k = 0; k < nd.size(); ++k)
      if (val[k] != 0.0) space.P.insertBack(nd[k], c) = val[k];
    values[c].resize(0);
  }
  space.P.finalize();
  space.P.makeCompressed();
  finalize_space(space, A, M, grid);
  return space;
}

std::vector<double> decay_profile(const Vec& psi, const FemMatrix& A,
                                  const Grid& grid, int element) {
  auto [EI, EJ] = grid.coarse_element_ij(element);
  const int n_layers =
      std::max({EI + 1, grid.ncx() - EI, EJ + 1, grid.ncy() - EJ});
  std::vector<double> energy(n_layers, 0.0);
  const Eigen::Matrix4d base = unit_cell_stiffness(grid.hx(), grid.hy());
  for (int c : A.cells()) {
    auto [i, j] = grid.cell_ij(c);
    int layer = std::max(std::abs(i / grid.fine_per_coarse_x() - EI),
                         std::abs(j / grid.fine_per_coarse_y() - EJ));
    const auto nd = grid.cell_nodes(c);
    Eigen::Vector4d v(psi[nd[0]], psi[nd[1]], psi[nd[2]], psi[nd[3]]);
    energy[layer] += A.cell_weights()[c] * v.dot(base * v);
  }
  for (const auto& e : A.edge_terms()) {
    // attribute fracture edges to an adjacent cell's layer
    auto [i0, j0] = grid.node_ij(e.n0);
    int ci = std::min(i0, grid.nfx() - 1), cj = std::min(j0, grid.nfy() - 1);
    int layer = std::max(std::abs(ci / grid.fine_per_coarse_x() - EI),
                         std::abs(cj / grid.fine_per_coarse_y() - EJ));
    double a = psi[e.n0], b = psi[e.n1];
    energy[layer] += e.diag * (a * a + b * b) + 2 * e.off * a * b;
  }
  double total = 0;
  for (double v : energy) total += v;
  if (total <= 0) throw std::runtime_error("decay_profile: zero-energy column");
  for (double& v : energy) v /= total;
  return energy;
}

namespace {
constexpr char kCacheMagic[9] = "CEMBAS01";

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("basis cache: truncated file");
  return v;
}
}  // namespace

void save_basis_cache(const std::string& path, const Grid& grid,
                      const MultiscaleSpace& space, std::uint64_t checksum) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write basis cache " + path);
  out.write(kCacheMagic, 8);
  put(out, grid.nfx());
  put(out, grid.nfy());
  put(out, grid.ncx());
  put(out, grid.ncy());
  put(out, static_cast<std::int32_t>(space.flavor));
  put(out, space.layers);
  put(out, checksum);
  put(out, space.count());
  for (int c = 0; c < space.count(); ++c) {
    put(out, space.source[c].first);
    put(out, space.source[c].second);
    std::vector<int> idx;
    std::vector<double> val;
    for (SpMat::InnerIterator it(space.P, c); it; ++it) {
      idx.push_back(static_cast<int>(it.row()));
      val.push_back(it.value());
    }
    put(out, static_cast<std::int64_t>(idx.size()));
    out.write(reinterpret_cast<const char*>(idx.data()),
              static_cast<std::streamsize>(idx.size() * sizeof(int)));
    out.write(reinterpret_cast<const char*>(val.data()),
              static_cast<std::streamsize>(val.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("basis cache write failed: " + path);
}

MultiscaleSpace load_basis_cache(const std::string& path, const Grid& grid,
                                 Flavor flavor, int m, std::uint64_t checksum,
                                 const FemMatrix& A, const FemMatrix& M) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open basis cache " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::string(magic, 8) != std::string(kCacheMagic, 8))
    throw std::runtime_error(path + ": not a basis cache file");
  int nfx = get<int>(in), nfy = get<int>(in), ncx = get<int>(in),
      ncy = get<int>(in);
  auto fl = static_cast<Flavor>(get<std::int32_t>(in));
  int layers = get<int>(in);
  auto sum = get<std::uint64_t>(in);
  if (nfx != grid.nfx() || nfy != grid.nfy() || ncx != grid.ncx() ||
      ncy != grid.ncy() || fl != flavor || layers != m)
    throw std::runtime_error(path + ": cache was built for a different setup");
  if (sum != checksum)
    throw std::runtime_error(path + ": field checksum mismatch");
  int n = get<int>(in);
  MultiscaleSpace space;
  space.flavor = flavor;
  space.layers = m;
  space.P.resize(grid.node_count(), n);
  for (int c = 0; c < n; ++c) {
    int e = get<int>(in), j = get<int>(in);
    space.source.emplace_back(e, j);
    auto nz = get<std::int64_t>(in);
    std::vector<int> idx(nz);
    std::vector<double> val(nz);
    in.read(reinterpret_cast<char*>(idx.data()),
            static_cast<std::streamsize>(nz * sizeof(int)));
    in.read(reinterpret_cast<char*>(val.data()),
            static_cast<std::streamsize>(nz * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated cache");
    space.P.startVec(c);
    for (std::int64_t k = 0; k < nz; ++k)
      space.P.insertBack(idx[k], c) = val[k];
  }
  space.P.finalize();
  space.P.makeCompressed();
  finalize_space(space, A, M, grid);
  return space;
}

}  // namespace cem

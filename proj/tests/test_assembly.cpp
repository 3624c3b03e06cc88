#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "cem/assembly.hpp"
#include "cem/grid.hpp"
#include "cem/media.hpp"

using namespace cem;

namespace {

// deterministic pseudo-random vector for property checks
Vec test_vector(int n, unsigned seed) {
  Vec v(n);
  std::uint64_t s = seed * 0x9e3779b97f4a7c15ull + 1;
  for (int i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v[i] = static_cast<double>(s % 2000003ull) / 2000003.0 - 0.5;
  }
  return v;
}

double max_abs(const SpMat& m) {
  double v = 0;
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      v = std::max(v, std::abs(it.value()));
  return v;
}

}  // namespace

TEST_SUITE("assembly") {

TEST_CASE("unit-cell element matrices match the analytic integrals") {
  // stiffness on a square cell: (1/6) [[4,-1,-2,-1],...], size-independent
  Eigen::Matrix4d K = unit_cell_stiffness(1.0, 1.0);
  Eigen::Matrix4d K_exact;
  K_exact << 4, -1, -2, -1, -1, 4, -1, -2, -2, -1, 4, -1, -1, -2, -1, 4;
  K_exact /= 6.0;
  CHECK((K - K_exact).cwiseAbs().maxCoeff() < 1e-14);
  // the Q1 stiffness of a square cell does not depend on its size
  CHECK((unit_cell_stiffness(0.01, 0.01) - K_exact).cwiseAbs().maxCoeff() <
        1e-13);

  const double h = 0.25;
  Eigen::Matrix4d M = unit_cell_mass(h, h);
  Eigen::Matrix4d M_exact;
  M_exact << 4, 2, 1, 2, 2, 4, 2, 1, 1, 2, 4, 2, 2, 1, 2, 4;
  M_exact *= h * h / 36.0;
  CHECK((M - M_exact).cwiseAbs().maxCoeff() < 1e-16);
}

TEST_CASE("stiffness rows sum to zero and scale linearly in kappa") {
  Grid g = build_grid(8, 8, 2, 2);
  PermeabilityField f = synth_channel_field(g, 5, 1e3, 3, 4);
  FemMatrix A = assemble_stiffness(g, f);
  Vec ones = Vec::Ones(A.dim());
  CHECK((A.mat() * ones).cwiseAbs().maxCoeff() < 1e-10 * max_abs(A.mat()));

  const double c = 3.5;
  PermeabilityField fc = f;
  for (double& v : fc.cell_values) v *= c;
  FemMatrix Ac = assemble_stiffness(g, fc);
  CHECK(max_abs(SpMat(Ac.mat() - c * A.mat())) < 1e-11 * max_abs(Ac.mat()));

  // symmetry
  CHECK(max_abs(SpMat(A.mat() - SpMat(A.mat().transpose()))) <
        1e-12 * max_abs(A.mat()));
}

TEST_CASE("mass matrix: total integral, positivity") {
  Grid g = build_grid(4, 4, 2, 2);
  FemMatrix M = assemble_mass(g);
  double total = 0;
  for (int k = 0; k < M.mat().outerSize(); ++k)
    for (SpMat::InnerIterator it(M.mat(), k); it; ++it) total += it.value();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));  // |Omega|

  // dense eigensolve oracle: smallest eigenvalue strictly positive
  Eigen::MatrixXd Md = Eigen::MatrixXd(M.mat());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Md);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("weighted mass equals mass when the weight is one") {
  Grid g = build_grid(8, 8, 4, 4);
  WeightedCoefficient w{g.nfx(), g.nfy(),
                        std::vector<double>(g.cell_count(), 1.0)};
  FemMatrix S = assemble_s_mass(g, w);
  FemMatrix M = assemble_mass(g);
  CHECK(max_abs(SpMat(S.mat() - M.mat())) < 1e-15);

  for (double& v : w.cell_values) v = 2.5;
  FemMatrix S2 = assemble_s_mass(g, w);
  CHECK(max_abs(SpMat(S2.mat() - 2.5 * M.mat())) < 1e-13);

  Vec u = test_vector(S.dim(), 3);
  CHECK(u.dot(S.mat() * u) > 0.0);
}

TEST_CASE("load vectors: zero, total mass, nodal-interpolation oracle") {
  Grid g = build_grid(16, 16, 4, 4);
  Vec zero = assemble_load(g, [](double, double, double) { return 0.0; }, 0.5);
  CHECK(zero.cwiseAbs().maxCoeff() == 0.0);

  Vec ones = assemble_load(g, [](double, double, double) { return 1.0; }, 0.0);
  CHECK(ones.sum() == doctest::Approx(1.0).epsilon(1e-12));

  // b ~ M * nodal values of f, deviation O(h^2): compare two resolutions
  auto f = [](double x, double y, double) {
    const double pi = 3.14159265358979323846;
    return 3 * pi * pi * std::sin(pi * x) * std::sin(pi * y);
  };
  auto deviation = [&](int nf) {
    Grid gg = build_grid(nf, nf, 4, 4);
    FemMatrix M = assemble_mass(gg);
    Vec b = assemble_load(gg, f, 0.0);
    Vec nodal(gg.node_count());
    for (int n = 0; n < gg.node_count(); ++n)
      nodal[n] = f(gg.node_x(n), gg.node_y(n), 0.0);
    return (b - M.mat() * nodal).cwiseAbs().maxCoeff();
  };
  double d1 = deviation(8), d2 = deviation(16);
  CHECK(d1 / d2 > 3.5);  // at least second order
}

TEST_CASE("fracture terms: entries, row sums, empty set") {
  Grid g = build_grid(160, 160, 8, 8);
  PermeabilityField ones = uniform_field(g, 1.0);
  FemMatrix A = assemble_stiffness(g, ones);
  FemMatrix M = assemble_mass(g);

  FractureSet empty;
  auto [Ae, Me] = add_fracture_terms(A, M, empty, g);
  CHECK(max_abs(SpMat(Ae.mat() - A.mat())) == 0.0);
  CHECK(max_abs(SpMat(Me.mat() - M.mat())) == 0.0);

  std::istringstream in("0.5 0.5 0.50625 0.5 1e4\n");  // one fine edge
  FractureSet single = read_fractures(in, g, "test");
  REQUIRE(single.edge_count() == 1u);
  auto [A2, M2] = add_fracture_terms(A, M, single, g);
  int n0 = single.segments[0].edges[0].first;
  int n1 = single.segments[0].edges[0].second;
  SpMat dA = A2.mat() - A.mat();
  CHECK(dA.coeff(n0, n0) == doctest::Approx(1.6e6).epsilon(1e-12));
  CHECK(dA.coeff(n1, n1) == doctest::Approx(1.6e6).epsilon(1e-12));
  CHECK(dA.coeff(n0, n1) == doctest::Approx(-1.6e6).epsilon(1e-12));
  // added stiffness keeps constants in the kernel
  Vec all_ones = Vec::Ones(g.node_count());
  CHECK((SpMat(dA) * all_ones).cwiseAbs().maxCoeff() < 1e-9);
  // and the full matrix still has zero row sums
  CHECK((A2.mat() * all_ones).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("restriction: identity, Dirichlet SPD, Neumann kernel") {
  Grid g = build_grid(20, 20, 4, 4);
  PermeabilityField f = synth_channel_field(g, 9, 1e4, 3, 4);
  FemMatrix A = assemble_stiffness(g, f);

  DofSet all = whole_domain(g);
  FemMatrix same = restrict_to(A, all, false);
  CHECK(max_abs(SpMat(same.mat() - A.mat())) == 0.0);

  // Dirichlet restriction to an oversampling region is SPD (dense oracle)
  DofSet region = oversample(g, g.coarse_element_id(1, 1), 1);
  FemMatrix Ar = restrict_to(A, region, true);
  CHECK(Ar.dim() == region.interior_count());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(Ar.mat())};
  CHECK(es.eigenvalues().minCoeff() > 0.0);

  // Neumann restriction to one coarse element keeps constants in the kernel
  DofSet elem = oversample(g, g.coarse_element_id(2, 2), 0);
  FemMatrix An = restrict_to(A, elem, false);
  Vec ones = Vec::Ones(An.dim());
  CHECK((An.mat() * ones).cwiseAbs().maxCoeff() < 1e-9 * max_abs(An.mat()));
}

TEST_CASE("nested restriction is consistent") {
  Grid g = build_grid(20, 20, 4, 4);
  PermeabilityField f = synth_channel_field(g, 2, 100.0, 3, 3);
  FemMatrix A = assemble_stiffness(g, f);
  DofSet outer = oversample(g, g.coarse_element_id(1, 2), 2);
  DofSet inner = oversample(g, g.coarse_element_id(1, 2), 1);
  FemMatrix once = restrict_to(A, inner, false);
  FemMatrix twice = restrict_to(restrict_to(A, outer, false), inner, false);
  CHECK(max_abs(SpMat(once.mat() - twice.mat())) == 0.0);
}

TEST_CASE("per-cell energy accumulation matches the quadratic form") {
  Grid g = build_grid(16, 16, 4, 4);
  PermeabilityField f = synth_channel_field(g, 4, 1e3, 3, 3);
  FemMatrix A = assemble_stiffness(g, f);
  FemMatrix M = assemble_mass(g);
  std::istringstream in("0.25 0.5 0.75 0.5 1e3\n");
  auto [A2, M2] = add_fracture_terms(A, M, read_fractures(in, g, "test"), g);

  for (unsigned seed : {1u, 2u, 3u}) {
    Vec u = test_vector(g.node_count(), seed);
    double direct = u.dot(A2.mat() * u);
    double by_cells = A2.energy_by_cells(u);
    CHECK(by_cells == doctest::Approx(direct).epsilon(1e-12));
    CHECK(M2.energy_by_cells(u) ==
          doctest::Approx(u.dot(M2.mat() * u)).epsilon(1e-12));
  }
}

}  // TEST_SUITE

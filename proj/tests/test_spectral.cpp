#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cem/assembly.hpp"
#include "cem/grid.hpp"
#include "cem/media.hpp"
#include "cem/spectral.hpp"

using namespace cem;

namespace {

struct Setup {
  Grid grid;
  PermeabilityField field;
  FemMatrix A, S;
};

Setup make_setup(int nf, int nc, std::uint64_t seed, double contrast) {
  Setup s{build_grid(nf, nf, nc, nc), {}, {}, {}};
  s.field = contrast > 1 ? synth_channel_field(s.grid, seed, contrast, 3, 4)
                         : uniform_field(s.grid, 1.0);
  s.A = assemble_stiffness(s.grid, s.field);
  PartitionOfUnity pou = partition_of_unity(s.grid);
  s.S = assemble_s_mass(s.grid, kappa_tilde(s.field, pou));
  return s;
}

// Independent dense route: fold S into the standard form S^{-1/2} A S^{-1/2}
// through its own eigendecomposition, then a plain symmetric eigensolve.
Eigen::VectorXd oracle_eigenvalues(const Eigen::MatrixXd& A,
                                   const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_s(S);
  Eigen::VectorXd d = es_s.eigenvalues();
  Eigen::MatrixXd Q = es_s.eigenvectors();
  Eigen::VectorXd dinv_sqrt(d.size());
  for (int i = 0; i < d.size(); ++i) dinv_sqrt[i] = 1.0 / std::sqrt(d[i]);
  Eigen::MatrixXd Sinv_half = Q * dinv_sqrt.asDiagonal() * Q.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sinv_half * A * Sinv_half);
  return es.eigenvalues();
}

Vec test_vector(int n, unsigned seed) {
  Vec v(n);
  std::uint64_t s = seed * 0x2545f4914f6cdd1dull + 11;
  for (int i = 0; i < n; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    v[i] = static_cast<double>(s % 1000003ull) / 1000003.0 - 0.5;
  }
  return v;
}

}  // namespace

TEST_SUITE("spectral") {

TEST_CASE("constant coefficient: lambda_1 = 0 with the constant eigenvector") {
  Setup s = make_setup(8, 4, 0, 1.0);
  auto [values, vectors] = local_eigens(s.A, s.S, s.grid, 5, 3);
  CHECK(values[0] == doctest::Approx(0.0).epsilon(1e-10));
  CHECK(values[0] < 1e-10);
  // eigenvector is constant, its value forced by s-normalization
  Vec first = vectors.col(0);
  double spread = first.maxCoeff() - first.minCoeff();
  CHECK(spread < 1e-8 * std::abs(first.maxCoeff()));
  // ascending order
  for (int k = 1; k < values.size(); ++k) CHECK(values[k] >= values[k - 1]);
}

TEST_CASE("full spectrum on a 2x2-cell element matches the dense oracle") {
  Setup s = make_setup(8, 4, 21, 1e3);
  const int element = 5;
  // 2x2 fine cells = 9 nodes; ask for the full 9-pair spectrum (L = 8)
  auto [values, vectors] = local_eigens(s.A, s.S, s.grid, element, 8);
  DofSet region = oversample(s.grid, element, 0);
  Eigen::MatrixXd Ad(restrict_to(s.A, region, false).mat());
  Eigen::MatrixXd Sd(restrict_to(s.S, region, false).mat());
  Eigen::VectorXd expected = oracle_eigenvalues(Ad, Sd);
  REQUIRE(values.size() == 9);
  for (int k = 0; k < 9; ++k)
    CHECK(values[k] == doctest::Approx(expected[k])
                           .epsilon(1e-8)
                           .scale(std::abs(expected[8])));
  // s-orthonormality and the Rayleigh identity a(phi_j,phi_j) = lambda_j
  Eigen::MatrixXd G = vectors.transpose() * Sd * vectors;
  CHECK((G - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
  Eigen::MatrixXd R = vectors.transpose() * Ad * vectors;
  for (int k = 0; k < 8; ++k)
    CHECK(R(k, k) == doctest::Approx(values[k]).epsilon(1e-8).scale(values[7]));
}

TEST_CASE("asking for more pairs than the element holds is an error") {
  Setup s = make_setup(8, 4, 0, 1.0);
  CHECK_THROWS_AS(local_eigens(s.A, s.S, s.grid, 0, 9), std::runtime_error);
}

TEST_CASE("auxiliary space: counts, spectral gap, truncation") {
  Setup s = make_setup(20, 10, 0, 1.0);  // 10x10 coarse grid
  AuxiliarySpace aux = build_aux_space(s.A, s.S, s.grid, ModeSchedule::fixed(4));
  CHECK(aux.total == 400);  // four per element on a 10x10 coarse grid
  double min_discarded = std::numeric_limits<double>::infinity();
  for (const auto& em : aux.elements)
    min_discarded = std::min(min_discarded, em.first_discarded());
  CHECK(aux.spectral_gap == doctest::Approx(min_discarded));
  CHECK(aux.spectral_gap > 0.0);

  AuxiliarySpace three = aux.truncated(3);
  CHECK(three.total == 300);
  CHECK(three.spectral_gap > 0.0);
  CHECK(three.elements[7].eigenvalues.size() == 4);
}

TEST_CASE("eigenvalues are invariant under global scaling of kappa") {
  Setup s = make_setup(12, 4, 17, 1e4);
  auto [values, vectors] = local_eigens(s.A, s.S, s.grid, 7, 4);

  PermeabilityField scaled = s.field;
  const double c = 12.75;
  for (double& v : scaled.cell_values) v *= c;
  scaled.min_value *= c;
  scaled.max_value *= c;
  FemMatrix A2 = assemble_stiffness(s.grid, scaled);
  PartitionOfUnity pou = partition_of_unity(s.grid);
  FemMatrix S2 = assemble_s_mass(s.grid, kappa_tilde(scaled, pou));
  auto [values2, vectors2] = local_eigens(A2, S2, s.grid, 7, 4);
  for (int k = 0; k < values.size(); ++k)
    CHECK(values2[k] ==
          doctest::Approx(values[k]).epsilon(1e-10).scale(values[4] + 1));
}

TEST_CASE("two disconnected channels give two small eigenvalues") {
  // build a field by hand: element (1,1) of a 4x4 coarse grid on 16x16 fine
  // cells is crossed by two horizontal contrast-1e4 channels
  Grid g = build_grid(16, 16, 4, 4);
  PermeabilityField f = uniform_field(g, 1.0);
  for (int i = 0; i < 16; ++i) {
    f.cell_values[g.cell_id(i, 5)] = 1e4;
    f.cell_values[g.cell_id(i, 7)] = 1e4;
  }
  f.max_value = 1e4;
  FemMatrix A = assemble_stiffness(g, f);
  PartitionOfUnity pou = partition_of_unity(g);
  FemMatrix S = assemble_s_mass(g, kappa_tilde(f, pou));
  auto [values, vectors] = local_eigens(A, S, g, g.coarse_element_id(1, 1), 4);
  // two small eigenvalues (one per disconnected channel component), then a gap
  CHECK(values[2] / std::max(values[1], 1e-300) > 10.0);
}

TEST_CASE("pi is a projection, s-self-adjoint, and reproduces members") {
  Setup s = make_setup(16, 4, 29, 1e3);
  AuxiliarySpace aux = build_aux_space(s.A, s.S, s.grid, ModeSchedule::fixed(3));

  // reproduces its own basis functions; in particular the restriction to K_i
  // equals phi_j^(i)
  const int e = 5, j = 1;
  Vec member = Vec::Zero(s.grid.node_count());
  const ElementModes& em = aux.elements[e];
  for (std::size_t k = 0; k < em.nodes.size(); ++k)
    member[em.nodes[k]] = em.modes(static_cast<int>(k), j);
  Vec projected = pi_project(aux, s.S.mat(), member);
  CHECK((projected - member).cwiseAbs().maxCoeff() <
        1e-9 * member.cwiseAbs().maxCoeff());

  // idempotence on random vectors
  Vec v = test_vector(s.grid.node_count(), 3);
  Vec pv = pi_project(aux, s.S.mat(), v);
  Vec ppv = pi_project(aux, s.S.mat(), pv);
  CHECK((ppv - pv).cwiseAbs().maxCoeff() < 1e-10 * pv.cwiseAbs().maxCoeff());

  // a vector with pi(v) = 0 is s-orthogonal to every auxiliary function
  Vec w = v - pv;
  Vec pw = pi_project(aux, s.S.mat(), w);
  CHECK(pw.cwiseAbs().maxCoeff() < 1e-10 * v.cwiseAbs().maxCoeff());
  Vec sw = s.S.mat() * w;
  for (const auto& emk : aux.elements)
    for (int jj = 0; jj < emk.count(); ++jj) {
      double dot = 0;
      for (std::size_t k = 0; k < emk.nodes.size(); ++k)
        dot += emk.modes(static_cast<int>(k), jj) * sw[emk.nodes[k]];
      CHECK(std::abs(dot) < 1e-9 * std::sqrt(double(s.grid.node_count())));
    }

  // s-self-adjointness: s(pi u, v) = s(u, pi v)
  Vec u = test_vector(s.grid.node_count(), 4);
  Vec pu = pi_project(aux, s.S.mat(), u);
  double left = pu.dot(s.S.mat() * v);
  double right = u.dot(s.S.mat() * pv);
  CHECK(left == doctest::Approx(right).epsilon(1e-10));
}

}  // TEST_SUITE

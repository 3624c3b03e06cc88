#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cem/grid.hpp"
#include "cem/media.hpp"

using namespace cem;

TEST_SUITE("media") {

TEST_CASE("permeability files round-trip and validate") {
  Grid g = build_grid(4, 4, 2, 2);
  SUBCASE("uniform file") {
    std::istringstream in("4 4\n1 1 1 1\n1 1 1 1\n1 1 1 1\n1 1 1 1\n");
    PermeabilityField f = read_permeability(in, g, "test");
    CHECK(f.min_value == 1.0);
    CHECK(f.max_value == 1.0);
  }
  SUBCASE("one hot cell sets the contrast") {
    std::istringstream in("4 4\n1 1 1 1\n1 1e4 1 1\n1 1 1 1\n1 1 1 1\n");
    PermeabilityField f = read_permeability(in, g, "test");
    CHECK(f.contrast() == doctest::Approx(1e4));
    CHECK(f.cell_values[g.cell_id(1, 1)] == doctest::Approx(1e4));
  }
  SUBCASE("a zero entry is rejected naming the cell") {
    std::istringstream in("4 4\n1 1 1 1\n1 1 0 1\n1 1 1 1\n1 1 1 1\n");
    try {
      read_permeability(in, g, "test");
      FAIL("expected an exception");
    } catch (const std::runtime_error& e) {
      CHECK(std::string(e.what()).find("(2,1)") != std::string::npos);
    }
  }
  SUBCASE("dimension mismatch is rejected") {
    std::istringstream in("8 8\n");
    CHECK_THROWS_AS(read_permeability(in, g, "test"), std::runtime_error);
  }
}

TEST_CASE("synthetic fields are pure functions of their arguments") {
  Grid g = build_grid(40, 40, 4, 4);
  PermeabilityField a = synth_channel_field(g, 7, 1e4, 8, 12);
  PermeabilityField b = synth_channel_field(g, 7, 1e4, 8, 12);
  CHECK(a.cell_values == b.cell_values);  // bit-identical
  CHECK(a.contrast() == doctest::Approx(1e4));
  PermeabilityField c = synth_channel_field(g, 8, 1e4, 8, 12);
  CHECK(a.cell_values != c.cell_values);

  PermeabilityField flat = synth_channel_field(g, 7, 1.0, 8, 12);
  CHECK(flat.min_value == 1.0);
  CHECK(flat.max_value == 1.0);

  CHECK_THROWS_AS(synth_channel_field(g, 7, 0.5, 8, 12), std::invalid_argument);
}

TEST_CASE("partition of unity: sum, range, nodal property, support") {
  Grid g = build_grid(12, 12, 3, 3);
  PartitionOfUnity pou = partition_of_unity(g);
  std::vector<double> sum(g.node_count(), 0.0);
  for (const auto& hat : pou.hats)
    for (std::size_t k = 0; k < hat.support.nodes.size(); ++k) {
      double v = hat.node_values[k];
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum[hat.support.nodes[k]] += v;
    }
  for (int n = 0; n < g.node_count(); ++n)
    CHECK(sum[n] == doctest::Approx(1.0).epsilon(1e-12));
  // nodal property: hat j is 1 at its vertex, 0 at every other coarse vertex
  for (const auto& hat : pou.hats) {
    auto [vx, vy] = g.coarse_vertex_coords(hat.vertex);
    for (std::size_t k = 0; k < hat.support.nodes.size(); ++k) {
      double x = g.node_x(hat.support.nodes[k]);
      double y = g.node_y(hat.support.nodes[k]);
      bool at_own = x == doctest::Approx(vx) && y == doctest::Approx(vy);
      if (at_own) CHECK(hat.node_values[k] == doctest::Approx(1.0));
    }
  }
}

TEST_CASE("gradient sum hits 2/H^2 at coarse-cell centers") {
  // 3 fine cells per coarse block put a fine-cell center exactly at each
  // coarse-cell center
  Grid g = build_grid(6, 6, 2, 2);
  PartitionOfUnity pou = partition_of_unity(g);
  const double H = g.coarse_hx();
  int cell = g.cell_id(1, 1);  // center of coarse block (0,0)
  CHECK(pou.grad_sq_sum[cell] == doctest::Approx(2.0 / (H * H)).epsilon(1e-12));

  PermeabilityField ones = uniform_field(g, 1.0);
  WeightedCoefficient kt = kappa_tilde(ones, pou);
  CHECK(kt.cell_values[cell] == doctest::Approx(2.0 / (H * H)).epsilon(1e-12));
  for (double v : kt.cell_values) CHECK(v > 0.0);
}

TEST_CASE("kappa_tilde is homogeneous of degree one in kappa") {
  Grid g = build_grid(20, 20, 4, 4);
  PartitionOfUnity pou = partition_of_unity(g);
  PermeabilityField f = synth_channel_field(g, 3, 100.0, 4, 6);
  WeightedCoefficient base = kappa_tilde(f, pou);
  const double c = 7.25;
  PermeabilityField scaled = f;
  for (double& v : scaled.cell_values) v *= c;
  scaled.min_value *= c;
  scaled.max_value *= c;
  WeightedCoefficient scaled_kt = kappa_tilde(scaled, pou);
  for (std::size_t k = 0; k < base.cell_values.size(); ++k)
    CHECK(scaled_kt.cell_values[k] ==
          doctest::Approx(c * base.cell_values[k]).epsilon(1e-12));
}

TEST_CASE("fracture parsing") {
  Grid g = build_grid(160, 160, 8, 8);
  SUBCASE("horizontal mid-channel on the paper-scale grid") {
    std::istringstream in("0.25 0.5 0.75 0.5 1e4\n");
    FractureSet set = read_fractures(in, g, "test");
    REQUIRE(set.segments.size() == 1u);
    CHECK(set.segments[0].edges.size() == 80u);
    CHECK(set.segments[0].conductivity == doctest::Approx(1e4));
  }
  SUBCASE("empty file") {
    std::istringstream in("# nothing here\n\n");
    CHECK(read_fractures(in, g, "test").empty());
  }
  SUBCASE("diagonal segments are rejected") {
    std::istringstream in("0.25 0.25 0.75 0.5 1e4\n");
    CHECK_THROWS_AS(read_fractures(in, g, "test"), std::runtime_error);
  }
  SUBCASE("off-grid endpoints are rejected") {
    std::istringstream in("0.2501 0.5 0.75 0.5 1e4\n");
    CHECK_THROWS_AS(read_fractures(in, g, "test"), std::runtime_error);
  }
  SUBCASE("non-positive conductivity is rejected") {
    std::istringstream in("0.25 0.5 0.75 0.5 0\n");
    CHECK_THROWS_AS(read_fractures(in, g, "test"), std::runtime_error);
  }
}

TEST_CASE("field writer round-trips through the loader") {
  Grid g = build_grid(8, 8, 2, 2);
  PermeabilityField f = synth_channel_field(g, 11, 50.0, 3, 3);
  write_permeability("/tmp/cem_test_field.txt", f);
  PermeabilityField back = load_permeability("/tmp/cem_test_field.txt", g);
  for (std::size_t k = 0; k < f.cell_values.size(); ++k)
    CHECK(back.cell_values[k] == doctest::Approx(f.cell_values[k]).epsilon(1e-12));
  CHECK(field_checksum(f) == field_checksum(f));
}

}  // TEST_SUITE

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "cem/grid.hpp"

using namespace cem;

TEST_SUITE("grid") {

TEST_CASE("paper-scale grid sizes") {
  Grid g = build_grid(200, 200, 10, 10);
  CHECK(g.coarse_hx() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(g.hx() == doctest::Approx(1.0 / 200).epsilon(1e-15));
  CHECK(g.coarse_element_count() == 100);
  CHECK(g.coarse_vertex_count() == 121);
  CHECK(g.node_count() == 201 * 201);
}

TEST_CASE("small grid counts") {
  Grid g = build_grid(4, 4, 2, 2);
  CHECK(g.coarse_element_count() == 4);
  CHECK(g.coarse_vertex_count() == 9);
  CHECK(g.fine_per_coarse_x() == 2);
}

TEST_CASE("non-divisible sizes are a configuration error naming both") {
  try {
    build_grid(5, 5, 2, 2);
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    std::string msg = e.what();
    CHECK(msg.find("5") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
  CHECK_THROWS_AS(build_grid(4, 4, 1, 2), std::invalid_argument);
}

TEST_CASE("neighborhood sizes by vertex position") {
  Grid g = build_grid(40, 40, 10, 10);
  const int fpc = g.fine_per_coarse_x();
  // interior vertex: 2x2 coarse elements
  DofSet mid = coarse_neighborhood(g, g.coarse_vertex_id(5, 5));
  CHECK(mid.cells.size() == 4u * fpc * fpc);
  CHECK(mid.nodes.size() == (2u * fpc + 1) * (2u * fpc + 1));
  // domain corner: a single element
  DofSet corner = coarse_neighborhood(g, g.coarse_vertex_id(0, 0));
  CHECK(corner.cells.size() == 1u * fpc * fpc);
  // edge vertex: two elements
  DofSet edge = coarse_neighborhood(g, g.coarse_vertex_id(5, 0));
  CHECK(edge.cells.size() == 2u * fpc * fpc);
  CHECK_THROWS_AS(coarse_neighborhood(g, g.coarse_vertex_count()),
                  std::out_of_range);
}

TEST_CASE("center vertex of the 2x2 coarse grid covers every fine node") {
  Grid g = build_grid(4, 4, 2, 2);
  DofSet d = coarse_neighborhood(g, g.coarse_vertex_id(1, 1));
  // enumeration: the union of all four coarse elements is the whole 5x5 grid
  std::set<int> expected;
  for (int n = 0; n < g.node_count(); ++n) expected.insert(n);
  CHECK(d.nodes.size() == 25u);
  CHECK(std::set<int>(d.nodes.begin(), d.nodes.end()) == expected);
}

TEST_CASE("oversampling blocks, clipping and saturation") {
  Grid g = build_grid(40, 40, 10, 10);
  const int fpc = g.fine_per_coarse_x();
  DofSet inner = oversample(g, g.coarse_element_id(5, 5), 1);
  CHECK(inner.cells.size() == 9u * fpc * fpc);  // 3x3 coarse blocks
  DofSet corner = oversample(g, g.coarse_element_id(0, 0), 1);
  CHECK(corner.cells.size() == 4u * fpc * fpc);  // clipped to 2x2
  DofSet all = oversample(g, g.coarse_element_id(4, 4), 10);
  CHECK(all.cells.size() == static_cast<std::size_t>(g.cell_count()));
  // saturated region boundary = domain boundary
  for (int k = 0; k < all.size(); ++k)
    CHECK(static_cast<bool>(all.boundary[k]) ==
          g.node_on_domain_boundary(all.nodes[k]));
  DofSet self = oversample(g, g.coarse_element_id(3, 2), 0);
  CHECK(self.cells.size() == static_cast<std::size_t>(fpc * fpc));
  CHECK_THROWS_AS(oversample(g, g.coarse_element_count(), 1), std::out_of_range);
}

TEST_CASE("oversampling chains are nested and saturate") {
  Grid g = build_grid(24, 24, 6, 6);
  for (int e : {0, 7, 35}) {
    std::set<int> prev;
    for (int m = 0; m <= 7; ++m) {
      DofSet d = oversample(g, e, m);
      std::set<int> cur(d.nodes.begin(), d.nodes.end());
      CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      prev = std::move(cur);
    }
    CHECK(prev.size() == static_cast<std::size_t>(g.node_count()));
  }
}

TEST_CASE("neighborhoods cover the mesh; elements partition it") {
  Grid g = build_grid(12, 12, 3, 3);
  std::vector<int> node_hits(g.node_count(), 0);
  for (int v = 0; v < g.coarse_vertex_count(); ++v)
    for (int n : coarse_neighborhood(g, v).nodes) ++node_hits[n];
  for (int n = 0; n < g.node_count(); ++n) {
    CHECK(node_hits[n] >= 1);
  }
  std::vector<int> cell_hits(g.cell_count(), 0);
  for (int e = 0; e < g.coarse_element_count(); ++e)
    for (int c : g.coarse_element_cells(e)) ++cell_hits[c];
  CHECK(std::all_of(cell_hits.begin(), cell_hits.end(),
                    [](int k) { return k == 1; }));
}

TEST_CASE("every fine node sits in 1..4 neighborhoods, cell overlap is 4") {
  // membership in the partition-of-unity sense: the hat of vertex v is
  // positive at the node (strict Chebyshev distance < 1 in coarse units)
  for (auto [nf, nc] : {std::pair{8, 2}, {12, 3}, {40, 10}}) {
    Grid g = build_grid(nf, nf, nc, nc);
    for (int n = 0; n < g.node_count(); ++n) {
      int count = 0;
      for (int v = 0; v < g.coarse_vertex_count(); ++v) {
        auto [vx, vy] = g.coarse_vertex_coords(v);
        double dx = std::abs(g.node_x(n) - vx) / g.coarse_hx();
        double dy = std::abs(g.node_y(n) - vy) / g.coarse_hy();
        if (dx < 1.0 - 1e-12 && dy < 1.0 - 1e-12) ++count;
      }
      CHECK(count >= 1);
      CHECK(count <= 4);
    }
    CHECK(max_neighborhood_overlap(g) == 4);
  }
}

TEST_CASE("dofset ordering invariants") {
  Grid g = build_grid(12, 12, 3, 3);
  DofSet d = oversample(g, 4, 1);
  CHECK(std::is_sorted(d.nodes.begin(), d.nodes.end()));
  CHECK(std::adjacent_find(d.nodes.begin(), d.nodes.end()) == d.nodes.end());
  CHECK(d.nodes.front() >= 0);
  CHECK(d.nodes.back() < g.node_count());
  CHECK(d.size() == d.interior_count() + static_cast<int>(d.nodes.size()) -
                        d.interior_count());
  // interior nodes are exactly the non-perimeter ones
  int perim = 0;
  for (auto b : d.boundary) perim += b;
  CHECK(d.interior_count() + perim == d.size());
}

}  // TEST_SUITE

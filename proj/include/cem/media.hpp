#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cem/grid.hpp"

namespace cem {

/// Piecewise-constant conductivity, one positive value per fine cell.
struct PermeabilityField {
  int nfx = 0, nfy = 0;
  std::vector<double> cell_values;  // row-major, bottom row first
  double min_value = 0;             // kappa_0
  double max_value = 0;             // kappa_1

  double contrast() const { return max_value / min_value; }
};

/// Bilinear hats of the coarse mesh sampled on the fine mesh: nodal values on
/// each hat's support plus |grad chi|^2 at the fine-cell centers, and their
/// per-cell sum over all hats (the weight entering kappa-tilde).
struct PartitionOfUnity {
  struct Hat {
    int vertex = 0;
    DofSet support;                  // the neighborhood of the vertex
    std::vector<double> node_values; // parallel to support.nodes
    std::vector<double> grad_sq;     // parallel to support.cells
  };
  int nfx = 0, nfy = 0;
  double coarse_hx = 0, coarse_hy = 0;
  std::vector<Hat> hats;             // one per coarse vertex
  std::vector<double> grad_sq_sum;   // per fine cell
};

/// Per-fine-cell weight kappa * sum_j |grad chi_j|^2 of the s-inner product.
struct WeightedCoefficient {
  int nfx = 0, nfy = 0;
  std::vector<double> cell_values;
};

/// Axis-aligned fracture polylines snapped to fine-grid edges, each segment
/// carrying an effective 1D conductivity (aperture folded in).
struct FractureSet {
  struct Segment {
    std::vector<std::pair<int, int>> edges;  // fine-node id pairs
    double conductivity = 0;                 // kappa_f
  };
  std::vector<Segment> segments;

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& s : segments) n += s.edges.size();
    return n;
  }
  bool empty() const { return segments.empty(); }
};

/// File format: first line "nfx nfy", then nfy lines of nfx positive decimals,
/// row-major from the bottom row.
PermeabilityField load_permeability(const std::string& path, const Grid& grid);
PermeabilityField read_permeability(std::istream& in, const Grid& grid,
                                    const std::string& label);
void write_permeability(const std::string& path, const PermeabilityField&);

/// Field of the given constant value (the contrast-1 degenerate case).
PermeabilityField uniform_field(const Grid& grid, double value);

/// Deterministic synthetic field: background 1, plus one-cell-thick channels
/// and rectangular inclusions at value `contrast`. Identical arguments give a
/// bit-identical field on any platform.
PermeabilityField synth_channel_field(const Grid& grid, std::uint64_t seed,
                                      double contrast, int n_channels,
                                      int n_inclusions);

PartitionOfUnity partition_of_unity(const Grid& grid);

WeightedCoefficient kappa_tilde(const PermeabilityField& field,
                                const PartitionOfUnity& pou);

/// File format: one segment per line, "x1 y1 x2 y2 kappa_f" in domain
/// coordinates; endpoints must lie on fine nodes and segments must be
/// axis-aligned. Blank lines and lines starting with '#' are skipped.
FractureSet load_fractures(const std::string& path, const Grid& grid);
FractureSet read_fractures(std::istream& in, const Grid& grid,
                           const std::string& label);

/// FNV-1a over the field's cell bytes; keys basis caches and run manifests.
std::uint64_t field_checksum(const PermeabilityField& field);

}  // namespace cem

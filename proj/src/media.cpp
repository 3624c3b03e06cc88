#include "cem/media.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cem {

namespace {

// splitmix64; kept in-house so synthetic fields are stable across toolchains.
struct DetRng {
  std::uint64_t state;
  explicit DetRng(std::uint64_t seed) : state(seed) {}
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  int below(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }
};

void finalize_minmax(PermeabilityField& f) {
  auto [lo, hi] = std::minmax_element(f.cell_values.begin(), f.cell_values.end());
  f.min_value = *lo;
  f.max_value = *hi;
}

}  // namespace

PermeabilityField read_permeability(std::istream& in, const Grid& grid,
                                    const std::string& label) {
  int nfx = 0, nfy = 0;
  if (!(in >> nfx >> nfy))
    throw std::runtime_error(label + ": missing size header");
  if (nfx != grid.nfx() || nfy != grid.nfy())
    throw std::runtime_error(label + ": field is " + std::to_string(nfx) + "x" +
                             std::to_string(nfy) + " but the grid has " +
                             std::to_string(grid.nfx()) + "x" +
                             std::to_string(grid.nfy()) + " fine cells");
  PermeabilityField f;
  f.nfx = nfx;
  f.nfy = nfy;
  f.cell_values.resize(static_cast<std::size_t>(nfx) * nfy);
  for (int j = 0; j < nfy; ++j)
    for (int i = 0; i < nfx; ++i) {
      double v;
      if (!(in >> v))
        throw std::runtime_error(label + ": truncated at cell (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
      if (!(v > 0.0) || !std::isfinite(v))
        throw std::runtime_error(label + ": non-positive value at cell (" +
                                 std::to_string(i) + "," + std::to_string(j) + ")");
      f.cell_values[grid.cell_id(i, j)] = v;
    }
  finalize_minmax(f);
  return f;
}

PermeabilityField load_permeability(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open permeability file " + path);
  return read_permeability(in, grid, path);
}

void write_permeability(const std::string& path, const PermeabilityField& f) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write permeability file " + path);
  out << f.nfx << " " << f.nfy << "\n";
  char buf[32];
  for (int j = 0; j < f.nfy; ++j) {
    for (int i = 0; i < f.nfx; ++i) {
      std::snprintf(buf, sizeof buf, "%.12g", f.cell_values[j * f.nfx + i]);
      out << buf << (i + 1 == f.nfx ? "" : " ");
    }
    out << "\n";
  }
}

PermeabilityField uniform_field(const Grid& grid, double value) {
  if (!(value > 0.0))
    throw std::invalid_argument("permeability must be positive");
  PermeabilityField f;
  f.nfx = grid.nfx();
  f.nfy = grid.nfy();
  f.cell_values.assign(grid.cell_count(), value);
  f.min_value = f.max_value = value;
  return f;
}

PermeabilityField synth_channel_field(const Grid& grid, std::uint64_t seed,
                                      double contrast, int n_channels,
                                      int n_inclusions) {
  if (contrast < 1.0)
    throw std::invalid_argument("contrast must be >= 1");
  PermeabilityField f = uniform_field(grid, 1.0);
  DetRng rng(seed);
  const int nfx = grid.nfx(), nfy = grid.nfy();
  for (int c = 0; c < n_channels; ++c) {
    bool horizontal = (rng.next() & 1) == 0;
    if (horizontal) {
      int row = rng.below(nfy);
      int len = nfx / 4 + rng.below(std::max(1, nfx / 2));
      int start = rng.below(std::max(1, nfx - len / 2));
      for (int i = start; i < std::min(start + len, nfx); ++i)
        f.cell_values[grid.cell_id(i, row)] = contrast;
    } else {
      int col = rng.below(nfx);
      int len = nfy / 4 + rng.below(std::max(1, nfy / 2));
      int start = rng.below(std::max(1, nfy - len / 2));
      for (int j = start; j < std::min(start + len, nfy); ++j)
        f.cell_values[grid.cell_id(col, j)] = contrast;
    }
  }
  for (int b = 0; b < n_inclusions; ++b) {
    int w = 1 + rng.below(std::max(2, nfx / 12));
    int h = 1 + rng.below(std::max(2, nfy / 12));
    int i0 = rng.below(std::max(1, nfx - w));
    int j0 = rng.below(std::max(1, nfy - h));
    for (int j = j0; j < j0 + h; ++j)
      for (int i = i0; i < i0 + w; ++i)
        f.cell_values[grid.cell_id(i, j)] = contrast;
  }
  finalize_minmax(f);
  return f;
}

PartitionOfUnity partition_of_unity(const Grid& grid) {
  PartitionOfUnity pou;
  pou.nfx = grid.nfx();
  pou.nfy = grid.nfy();
  pou.coarse_hx = grid.coarse_hx();
  pou.coarse_hy = grid.coarse_hy();
  pou.grad_sq_sum.assign(grid.cell_count(), 0.0);
  pou.hats.reserve(grid.coarse_vertex_count());
  const double Hx = grid.coarse_hx(), Hy = grid.coarse_hy();
  for (int v = 0; v < grid.coarse_vertex_count(); ++v) {
    auto [cx, cy] = grid.coarse_vertex_coords(v);
    PartitionOfUnity::Hat hat;
    hat.vertex = v;
    hat.support = coarse_neighborhood(grid, v);
    const auto& d = hat.support;
    hat.node_values.resize(d.nodes.size());
    for (std::size_t k = 0; k < d.nodes.size(); ++k) {
      double tx = 1.0 - std::abs(grid.node_x(d.nodes[k]) - cx) / Hx;
      double ty = 1.0 - std::abs(grid.node_y(d.nodes[k]) - cy) / Hy;
      hat.node_values[k] = std::max(0.0, tx) * std::max(0.0, ty);
    }
    hat.grad_sq.resize(d.cells.size());
    for (std::size_t k = 0; k < d.cells.size(); ++k) {
      auto [px, py] = grid.cell_center(d.cells[k]);
      double tx = 1.0 - std::abs(px - cx) / Hx;  // > 0 inside the support
      double ty = 1.0 - std::abs(py - cy) / Hy;
      double gx = ty / Hx;  // |d chi/dx| at the cell center
      double gy = tx / Hy;
      hat.grad_sq[k] = gx * gx + gy * gy;
      pou.grad_sq_sum[d.cells[k]] += hat.grad_sq[k];
    }
    pou.hats.push_back(std::move(hat));
  }
  return pou;
}

WeightedCoefficient kappa_tilde(const PermeabilityField& field,
                                const PartitionOfUnity& pou) {
  if (field.nfx != pou.nfx || field.nfy != pou.nfy)
    throw std::invalid_argument("kappa_tilde: field and partition of unity "
                                "live on different grids");
  WeightedCoefficient w;
  w.nfx = field.nfx;
  w.nfy = field.nfy;
  w.cell_values.resize(field.cell_values.size());
  const double H = std::max(pou.coarse_hx, pou.coarse_hy);
  const double floor = 1e-14 * field.min_value / (H * H);
  for (std::size_t c = 0; c < w.cell_values.size(); ++c)
    w.cell_values[c] =
        std::max(field.cell_values[c] * pou.grad_sq_sum[c], floor);
  return w;
}

FractureSet read_fractures(std::istream& in, const Grid& grid,
                           const std::string& label) {
  FractureSet set;
  std::string line;
  int lineno = 0;
  auto snap = [&](double x, double h, int n, const char* axis) {
    double pos = x / h;
    int k = static_cast<int>(std::llround(pos));
    if (std::abs(pos - k) > 1e-9 * std::max(1.0, std::abs(pos)) || k < 0 || k > n)
      throw std::runtime_error(label + " line " + std::to_string(lineno) +
                               ": endpoint coordinate " + std::to_string(x) +
                               " is off the fine grid along " + axis);
    return k;
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double x1, y1, x2, y2, kf;
    if (!(ls >> x1 >> y1 >> x2 >> y2 >> kf))
      throw std::runtime_error(label + " line " + std::to_string(lineno) +
                               ": expected 'x1 y1 x2 y2 kappa_f'");
    if (!(kf > 0.0))
      throw std::runtime_error(label + " line " + std::to_string(lineno) +
                               ": fracture conductivity must be positive");
    int i1 = snap(x1, grid.hx(), grid.nfx(), "x");
    int j1 = snap(y1, grid.hy(), grid.nfy(), "y");
    int i2 = snap(x2, grid.hx(), grid.nfx(), "x");
    int j2 = snap(y2, grid.hy(), grid.nfy(), "y");
    if (i1 != i2 && j1 != j2)
      throw std::runtime_error(label + " line " + std::to_string(lineno) +
                               ": segment is not axis-aligned");
    FractureSet::Segment seg;
    seg.conductivity = kf;
    if (j1 == j2) {
      for (int i = std::min(i1, i2); i < std::max(i1, i2); ++i)
        seg.edges.emplace_back(grid.node_id(i, j1), grid.node_id(i + 1, j1));
    } else {
      for (int j = std::min(j1, j2); j < std::max(j1, j2); ++j)
        seg.edges.emplace_back(grid.node_id(i1, j), grid.node_id(i1, j + 1));
    }
    if (seg.edges.empty())
      throw std::runtime_error(label + " line " + std::to_string(lineno) +
                               ": zero-length segment");
    set.segments.push_back(std::move(seg));
  }
  return set;
}

FractureSet load_fractures(const std::string& path, const Grid& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open fracture file " + path);
  return read_fractures(in, grid, path);
}

std::uint64_t field_checksum(const PermeabilityField& field) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const void* p, std::size_t n) {
    const unsigned char* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ull;
    }
  };
  mix(&field.nfx, sizeof field.nfx);
  mix(&field.nfy, sizeof field.nfy);
  mix(field.cell_values.data(), field.cell_values.size() * sizeof(double));
  return h;
}

}  // namespace cem

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace stokes_gmg {

/// A cell in the hierarchy: level plus integer lattice coordinates.
/// Vertex positions are lattice * h_level; only the first dim entries are used.
struct CellId {
  int level = 0;
  std::array<int, 3> lattice{0, 0, 0};

  friend bool operator==(const CellId&, const CellId&) = default;
};

/// Nested hierarchy of uniformly refined Cartesian grids on [0,1]^dim.
/// Level 0 is the single root cell; level n_levels-1 is the active mesh.
/// Cells on a level are numbered lexicographically (x fastest).
template <int dim>
class MeshHierarchy {
  static_assert(dim == 2 || dim == 3, "only 2D and 3D hierarchies are supported");

 public:
  explicit MeshHierarchy(int n_levels) : n_levels_(n_levels) {
    if (n_levels < 1) throw std::invalid_argument("MeshHierarchy: n_levels must be >= 1");
    if (n_levels > 12) throw std::invalid_argument("MeshHierarchy: n_levels too large");
    parents_.resize(static_cast<std::size_t>(n_levels));
    for (int l = 1; l < n_levels; ++l) {
      auto& par = parents_[static_cast<std::size_t>(l)];
      par.resize(n_cells(l));
      for (std::size_t c = 0; c < par.size(); ++c) {
        CellId id = cell(l, c);
        for (int d = 0; d < dim; ++d) id.lattice[static_cast<std::size_t>(d)] /= 2;
        id.level = l - 1;
        par[c] = static_cast<std::uint32_t>(index(id));
      }
    }
  }

  [[nodiscard]] int n_levels() const { return n_levels_; }
  [[nodiscard]] int finest_level() const { return n_levels_ - 1; }

  /// Cells per axis on a level.
  [[nodiscard]] static int cells_per_axis(int level) { return 1 << level; }
  [[nodiscard]] static std::size_t n_cells(int level) {
    return std::size_t{1} << static_cast<unsigned>(dim * level);
  }
  [[nodiscard]] static double cell_size(int level) { return 1.0 / cells_per_axis(level); }

  [[nodiscard]] std::size_t total_cells() const {
    std::size_t total = 0;
    for (int l = 0; l < n_levels_; ++l) total += n_cells(l);
    return total;
  }

  [[nodiscard]] CellId cell(int level, std::size_t index) const {
    check_level(level);
    const auto n = static_cast<std::size_t>(cells_per_axis(level));
    CellId id;
    id.level = level;
    for (int d = 0; d < dim; ++d) {
      id.lattice[static_cast<std::size_t>(d)] = static_cast<int>(index % n);
      index /= n;
    }
    return id;
  }

  [[nodiscard]] std::size_t index(const CellId& c) const {
    check_cell(c);
    const auto n = static_cast<std::size_t>(cells_per_axis(c.level));
    std::size_t idx = 0;
    for (int d = dim - 1; d >= 0; --d) idx = idx * n + static_cast<std::size_t>(c.lattice[static_cast<std::size_t>(d)]);
    return idx;
  }

  /// Parent cell index on level-1 for cell `index` on `level` (> 0).
  [[nodiscard]] std::size_t parent_index(int level, std::size_t index) const {
    if (level <= 0) throw std::invalid_argument("parent_index: root level has no parent");
    return parents_[static_cast<std::size_t>(level)][index];
  }

  [[nodiscard]] CellId parent(const CellId& c) const {
    check_cell(c);
    if (c.level == 0) throw std::invalid_argument("parent: root cell has no parent");
    CellId p = c;
    p.level -= 1;
    for (int d = 0; d < dim; ++d) p.lattice[static_cast<std::size_t>(d)] /= 2;
    return p;
  }

  /// The 2^dim children, ordered lexicographically by the child offset (x fastest).
  [[nodiscard]] std::vector<CellId> children(const CellId& c) const {
    check_cell(c);
    if (c.level >= finest_level()) throw std::invalid_argument("children: cell is on the finest level");
    std::vector<CellId> out;
    out.reserve(std::size_t{1} << dim);
    for (int k = 0; k < (1 << dim); ++k) {
      CellId ch;
      ch.level = c.level + 1;
      for (int d = 0; d < dim; ++d)
        ch.lattice[static_cast<std::size_t>(d)] = 2 * c.lattice[static_cast<std::size_t>(d)] + ((k >> d) & 1);
      out.push_back(ch);
    }
    return out;
  }

  [[nodiscard]] std::array<double, dim> cell_center(const CellId& c) const {
    check_cell(c);
    const double h = cell_size(c.level);
    std::array<double, dim> x{};
    for (int d = 0; d < dim; ++d) x[static_cast<std::size_t>(d)] = (c.lattice[static_cast<std::size_t>(d)] + 0.5) * h;
    return x;
  }

  /// Lower-left vertex of a cell.
  [[nodiscard]] std::array<double, dim> cell_origin(int level, std::size_t index) const {
    const CellId c = cell(level, index);
    const double h = cell_size(level);
    std::array<double, dim> x{};
    for (int d = 0; d < dim; ++d) x[static_cast<std::size_t>(d)] = c.lattice[static_cast<std::size_t>(d)] * h;
    return x;
  }

  [[nodiscard]] std::size_t memory_bytes() const {
    std::size_t bytes = sizeof(*this);
    for (const auto& p : parents_) bytes += p.capacity() * sizeof(std::uint32_t);
    return bytes;
  }

 private:
  void check_level(int level) const {
    if (level < 0 || level >= n_levels_) throw std::out_of_range("MeshHierarchy: level out of range");
  }
  void check_cell(const CellId& c) const {
    check_level(c.level);
    for (int d = 0; d < dim; ++d) {
      const int v = c.lattice[static_cast<std::size_t>(d)];
      if (v < 0 || v >= cells_per_axis(c.level)) throw std::out_of_range("MeshHierarchy: lattice coordinate out of range");
    }
  }

  int n_levels_;
  std::vector<std::vector<std::uint32_t>> parents_;
};

/// Runtime-dimension entry point; dim must be 2 or 3.
template <int dim>
MeshHierarchy<dim> build_hierarchy(int n_levels) {
  return MeshHierarchy<dim>(n_levels);
}

inline void check_dimension(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("dimension must be 2 or 3");
}

}  // namespace stokes_gmg

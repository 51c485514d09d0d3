#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mesh.hpp"

namespace stokes_gmg {

using Vector = std::vector<double>;

/// Degree-of-freedom numbering of one level: Q2 velocity per component and Q1 pressure.
///
/// Support points sit on a lattice: Q2 nodes at i/(2N), Q1 nodes at i/N for N cells per axis.
/// Scalar node numbering is lexicographic (x fastest). Velocity unknown (c, node) has global
/// index c * n_velocity_nodes + node, so the unknown layout is u_1 .. u_dim followed by p.
template <int dim>
struct LevelDofs {
  int level = 0;
  int cells_per_axis = 1;
  double h = 1.0;
  std::size_t n_cells = 1;
  int q2_per_axis = 3;  // 2N+1
  int q1_per_axis = 2;  // N+1
  std::size_t n_velocity_nodes = 0;
  std::size_t n_u = 0;
  std::size_t n_p = 0;

  /// cell -> 3^dim Q2 node indices (local lexicographic order)
  std::vector<std::uint32_t> velocity_nodes;
  /// cell -> 2^dim Q1 node indices
  std::vector<std::uint32_t> pressure_nodes;
  /// sorted velocity unknowns whose support point lies on the boundary
  std::vector<std::uint32_t> dirichlet;
  /// per Q2 node: 1 when the node lies on the boundary
  std::vector<std::uint8_t> boundary_node;

  static constexpr std::size_t q2_local = dim == 2 ? 9 : 27;
  static constexpr std::size_t q1_local = dim == 2 ? 4 : 8;

  [[nodiscard]] bool is_constrained(std::size_t velocity_index) const {
    return boundary_node[velocity_index % n_velocity_nodes] != 0;
  }

  [[nodiscard]] std::size_t memory_bytes() const {
    return velocity_nodes.capacity() * sizeof(std::uint32_t) + pressure_nodes.capacity() * sizeof(std::uint32_t) +
           boundary_node.capacity();
  }
  [[nodiscard]] std::size_t constraint_bytes() const { return dirichlet.capacity() * sizeof(std::uint32_t); }
};

template <int dim>
LevelDofs<dim> distribute_level_dofs(int level) {
  LevelDofs<dim> dofs;
  const int n = MeshHierarchy<dim>::cells_per_axis(level);
  dofs.level = level;
  dofs.cells_per_axis = n;
  dofs.h = 1.0 / n;
  dofs.n_cells = MeshHierarchy<dim>::n_cells(level);
  dofs.q2_per_axis = 2 * n + 1;
  dofs.q1_per_axis = n + 1;
  std::size_t nn2 = 1, nn1 = 1;
  for (int d = 0; d < dim; ++d) {
    nn2 *= static_cast<std::size_t>(dofs.q2_per_axis);
    nn1 *= static_cast<std::size_t>(dofs.q1_per_axis);
  }
  dofs.n_velocity_nodes = nn2;
  dofs.n_u = dim * nn2;
  dofs.n_p = nn1;

  dofs.velocity_nodes.resize(dofs.n_cells * LevelDofs<dim>::q2_local);
  dofs.pressure_nodes.resize(dofs.n_cells * LevelDofs<dim>::q1_local);
  const auto n2 = static_cast<std::size_t>(dofs.q2_per_axis);
  const auto n1 = static_cast<std::size_t>(dofs.q1_per_axis);
  for (std::size_t cell = 0; cell < dofs.n_cells; ++cell) {
    std::array<std::size_t, 3> lat{0, 0, 0};
    std::size_t rem = cell;
    for (int d = 0; d < dim; ++d) {
      lat[static_cast<std::size_t>(d)] = rem % static_cast<std::size_t>(n);
      rem /= static_cast<std::size_t>(n);
    }
    for (std::size_t a = 0; a < LevelDofs<dim>::q2_local; ++a) {
      std::size_t idx = 0, stride = 1, r = a;
      for (int d = 0; d < dim; ++d) {
        idx += (2 * lat[static_cast<std::size_t>(d)] + r % 3) * stride;
        r /= 3;
        stride *= n2;
      }
      dofs.velocity_nodes[cell * LevelDofs<dim>::q2_local + a] = static_cast<std::uint32_t>(idx);
    }
    for (std::size_t a = 0; a < LevelDofs<dim>::q1_local; ++a) {
      std::size_t idx = 0, stride = 1, r = a;
      for (int d = 0; d < dim; ++d) {
        idx += (lat[static_cast<std::size_t>(d)] + r % 2) * stride;
        r /= 2;
        stride *= n1;
      }
      dofs.pressure_nodes[cell * LevelDofs<dim>::q1_local + a] = static_cast<std::uint32_t>(idx);
    }
  }

  dofs.boundary_node.assign(nn2, 0);
  for (std::size_t node = 0; node < nn2; ++node) {
    std::size_t r = node;
    for (int d = 0; d < dim; ++d) {
      const std::size_t i = r % n2;
      r /= n2;
      if (i == 0 || i == n2 - 1) dofs.boundary_node[node] = 1;
    }
  }
  for (int c = 0; c < dim; ++c)
    for (std::size_t node = 0; node < nn2; ++node)
      if (dofs.boundary_node[node]) dofs.dirichlet.push_back(static_cast<std::uint32_t>(c * nn2 + node));
  return dofs;
}

/// Numbering for every level of a hierarchy.
template <int dim>
struct DofMap {
  std::vector<LevelDofs<dim>> levels;

  [[nodiscard]] const LevelDofs<dim>& level(int l) const { return levels.at(static_cast<std::size_t>(l)); }
  [[nodiscard]] const LevelDofs<dim>& active() const { return levels.back(); }
  [[nodiscard]] std::size_t memory_bytes() const {
    std::size_t b = 0;
    for (const auto& l : levels) b += l.memory_bytes();
    return b;
  }
  [[nodiscard]] std::size_t constraint_bytes() const {
    std::size_t b = 0;
    for (const auto& l : levels) b += l.constraint_bytes();
    return b;
  }
};

template <int dim>
DofMap<dim> distribute_dofs(const MeshHierarchy<dim>& mesh) {
  DofMap<dim> map;
  for (int l = 0; l < mesh.n_levels(); ++l) map.levels.push_back(distribute_level_dofs<dim>(l));
  return map;
}

/// Velocity coefficients followed by pressure coefficients in one contiguous buffer.
class BlockVector {
 public:
  BlockVector() = default;
  BlockVector(std::size_t n_u, std::size_t n_p) : data_(n_u + n_p, 0.0), n_u_(n_u) {}
  template <int dim>
  explicit BlockVector(const LevelDofs<dim>& dofs) : BlockVector(dofs.n_u, dofs.n_p) {}

  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] std::size_t n_u() const { return n_u_; }
  [[nodiscard]] std::size_t n_p() const { return data_.size() - n_u_; }

  [[nodiscard]] std::span<double> u() { return {data_.data(), n_u_}; }
  [[nodiscard]] std::span<const double> u() const { return {data_.data(), n_u_}; }
  [[nodiscard]] std::span<double> p() { return {data_.data() + n_u_, n_p()}; }
  [[nodiscard]] std::span<const double> p() const { return {data_.data() + n_u_, n_p()}; }

  [[nodiscard]] Vector& data() { return data_; }
  [[nodiscard]] const Vector& data() const { return data_; }

 private:
  Vector data_;
  std::size_t n_u_ = 0;
};

/// Zeroes constrained velocity entries in place.
template <int dim>
void zero_constrained(std::span<double> u, const LevelDofs<dim>& dofs) {
  if (u.size() != dofs.n_u) throw std::invalid_argument("zero_constrained: size mismatch");
  for (const auto i : dofs.dirichlet) u[i] = 0.0;
}

template <int dim>
BlockVector apply_dirichlet(BlockVector v, const LevelDofs<dim>& dofs) {
  if (v.n_u() != dofs.n_u || v.n_p() != dofs.n_p) throw std::invalid_argument("apply_dirichlet: size mismatch");
  zero_constrained<dim>(v.u(), dofs);
  return v;
}

}  // namespace stokes_gmg

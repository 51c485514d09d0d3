#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "fem_basis.hpp"

namespace stokes_gmg {

/// Sparse 1D embedding from a coarse Lagrange lattice (N cells) into the refined one (2N cells).
struct Embedding1D {
  struct Entry {
    std::size_t row;
    std::size_t col;
    double weight;
  };
  std::size_t n_coarse = 0;
  std::size_t n_fine = 0;
  std::vector<Entry> entries;  // sorted by row
};

inline Embedding1D make_embedding_1d(int degree, int coarse_cells) {
  const ScalarBasis<1> basis(degree);
  Embedding1D emb;
  emb.n_coarse = static_cast<std::size_t>(degree * coarse_cells + 1);
  emb.n_fine = static_cast<std::size_t>(2 * degree * coarse_cells + 1);
  for (std::size_t j = 0; j < emb.n_fine; ++j) {
    const double t = static_cast<double>(j) / static_cast<double>(2 * degree * coarse_cells);
    const int cell = std::min(static_cast<int>(t * coarse_cells), coarse_cells - 1);
    const double s = t * coarse_cells - cell;
    for (int m = 0; m <= degree; ++m) {
      const double w = basis.value_1d(m, s);
      if (std::abs(w) > 1e-14)
        emb.entries.push_back({j, static_cast<std::size_t>(cell * degree + m), w});
    }
  }
  return emb;
}

/// Inter-level transfer for `components` copies of a scalar Q_degree field.
///
/// Prolongation interpolates the coarse finite element function at the fine support points,
/// which on a Cartesian hierarchy is the Kronecker product of 1D embeddings. With
/// `constrained` set, boundary entries of the fine result are zeroed; restriction is the
/// exact transpose of that map.
template <int dim>
class TransferPlan {
 public:
  TransferPlan(int degree, int components, int n_levels, bool constrained)
      : degree_(degree), components_(components), constrained_(constrained) {
    if (degree < 1 || components < 1 || n_levels < 1) throw std::invalid_argument("TransferPlan: bad arguments");
    embeddings_.resize(static_cast<std::size_t>(n_levels));
    for (int l = 1; l < n_levels; ++l) embeddings_[static_cast<std::size_t>(l)] = make_embedding_1d(degree, 1 << (l - 1));
  }

  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int components() const { return components_; }
  [[nodiscard]] bool constrained() const { return constrained_; }
  [[nodiscard]] int n_levels() const { return static_cast<int>(embeddings_.size()); }

  [[nodiscard]] std::size_t nodes_per_axis(int level) const {
    return static_cast<std::size_t>(degree_ * (1 << level) + 1);
  }
  [[nodiscard]] std::size_t size(int level) const {
    std::size_t n = 1;
    for (int d = 0; d < dim; ++d) n *= nodes_per_axis(level);
    return n * static_cast<std::size_t>(components_);
  }
  [[nodiscard]] const Embedding1D& embedding(int level) const { return embeddings_.at(static_cast<std::size_t>(level)); }

  /// fine = P coarse for the pair (level-1, level).
  void prolongate(int level, std::span<const double> coarse, std::span<double> fine) const {
    check_level(level);
    if (coarse.size() != size(level - 1) || fine.size() != size(level))
      throw std::invalid_argument("prolongate: size mismatch");
    const auto& emb = embeddings_[static_cast<std::size_t>(level)];
    const std::size_t nc = emb.n_coarse, nf = emb.n_fine;
    const std::size_t block_c = size(level - 1) / static_cast<std::size_t>(components_);
    const std::size_t block_f = size(level) / static_cast<std::size_t>(components_);
    for (int c = 0; c < components_; ++c) {
      std::array<std::size_t, 3> shape{1, 1, 1};
      for (int d = 0; d < dim; ++d) shape[static_cast<std::size_t>(d)] = nc;
      work_a_.assign(coarse.begin() + static_cast<std::ptrdiff_t>(c * block_c), coarse.begin() + static_cast<std::ptrdiff_t>((c + 1) * block_c));
      for (int axis = 0; axis < dim; ++axis) {
        sweep(emb, false, axis, shape, work_a_, work_b_);
        shape[static_cast<std::size_t>(axis)] = nf;
        work_a_.swap(work_b_);
      }
      std::copy(work_a_.begin(), work_a_.end(), fine.begin() + static_cast<std::ptrdiff_t>(c * block_f));
    }
    if (constrained_) zero_boundary(level, fine);
  }

  /// coarse = P^T fine for the pair (level-1, level).
  void restrict(int level, std::span<const double> fine, std::span<double> coarse) const {
    check_level(level);
    if (coarse.size() != size(level - 1) || fine.size() != size(level))
      throw std::invalid_argument("restrict: size mismatch");
    const auto& emb = embeddings_[static_cast<std::size_t>(level)];
    const std::size_t nc = emb.n_coarse, nf = emb.n_fine;
    const std::size_t block_c = size(level - 1) / static_cast<std::size_t>(components_);
    const std::size_t block_f = size(level) / static_cast<std::size_t>(components_);
    for (int c = 0; c < components_; ++c) {
      std::array<std::size_t, 3> shape{1, 1, 1};
      for (int d = 0; d < dim; ++d) shape[static_cast<std::size_t>(d)] = nf;
      work_a_.assign(fine.begin() + static_cast<std::ptrdiff_t>(c * block_f), fine.begin() + static_cast<std::ptrdiff_t>((c + 1) * block_f));
      if (constrained_) zero_boundary_scalar(level, work_a_);
      for (int axis = dim - 1; axis >= 0; --axis) {
        sweep(emb, true, axis, shape, work_a_, work_b_);
        shape[static_cast<std::size_t>(axis)] = nc;
        work_a_.swap(work_b_);
      }
      std::copy(work_a_.begin(), work_a_.end(), coarse.begin() + static_cast<std::ptrdiff_t>(c * block_c));
    }
  }

  /// Zeroes every entry whose support point lies on the boundary of the unit box.
  void zero_boundary(int level, std::span<double> v) const {
    const std::size_t block = size(level) / static_cast<std::size_t>(components_);
    for (int c = 0; c < components_; ++c) zero_boundary_scalar(level, v.subspan(static_cast<std::size_t>(c) * block, block));
  }

  [[nodiscard]] std::size_t memory_bytes() const {
    std::size_t b = 0;
    for (const auto& e : embeddings_) b += e.entries.capacity() * sizeof(Embedding1D::Entry);
    return b + (work_a_.capacity() + work_b_.capacity()) * sizeof(double);
  }

 private:
  void check_level(int level) const {
    if (level < 1 || level >= n_levels()) throw std::out_of_range("TransferPlan: level out of range");
  }

  void zero_boundary_scalar(int level, std::span<double> v) const {
    const std::size_t n = nodes_per_axis(level);
    for (std::size_t idx = 0; idx < v.size(); ++idx) {
      std::size_t r = idx;
      for (int d = 0; d < dim; ++d) {
        const std::size_t i = r % n;
        r /= n;
        if (i == 0 || i == n - 1) {
          v[idx] = 0.0;
          break;
        }
      }
    }
  }

  /// Applies the 1D embedding (or its transpose) along one axis of a lexicographic array.
  static void sweep(const Embedding1D& emb, bool transpose, int axis, const std::array<std::size_t, 3>& shape,
                    const std::vector<double>& in, std::vector<double>& out) {
    std::array<std::size_t, 3> out_shape = shape;
    out_shape[static_cast<std::size_t>(axis)] = transpose ? emb.n_coarse : emb.n_fine;
    std::size_t inner = 1;
    for (int d = 0; d < axis; ++d) inner *= shape[static_cast<std::size_t>(d)];
    std::size_t outer = 1;
    for (int d = axis + 1; d < 3; ++d) outer *= shape[static_cast<std::size_t>(d)];
    const std::size_t n_in = shape[static_cast<std::size_t>(axis)];
    const std::size_t n_out = out_shape[static_cast<std::size_t>(axis)];
    out.assign(inner * n_out * outer, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
      const double* src = in.data() + o * n_in * inner;
      double* dst = out.data() + o * n_out * inner;
      for (const auto& e : emb.entries) {
        const std::size_t from = transpose ? e.row : e.col;
        const std::size_t to = transpose ? e.col : e.row;
        const double* s = src + from * inner;
        double* t = dst + to * inner;
        for (std::size_t i = 0; i < inner; ++i) t[i] += e.weight * s[i];
      }
    }
  }

  int degree_;
  int components_;
  bool constrained_;
  std::vector<Embedding1D> embeddings_;
  mutable std::vector<double> work_a_, work_b_;
};

}  // namespace stokes_gmg

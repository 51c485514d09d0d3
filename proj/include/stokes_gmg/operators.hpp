#pragma once

#include <array>
#include <concepts>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dof_map.hpp"
#include "fem_basis.hpp"
#include "parallel.hpp"
#include "viscosity.hpp"

namespace stokes_gmg {

enum class DiagonalKind { A, A_partial, Mp };

/// Matrix-free discretization of the Stokes blocks on one level.
///
/// Every kernel loops over cells and quadrature points, using one averaged viscosity per
/// cell. Dirichlet velocity unknowns are eliminated: the velocity blocks act as the
/// identity on them, B ignores them as inputs and B^T writes zero into them.
template <int dim>
class LevelOperatorContext {
 public:
  static constexpr std::size_t nq2 = LevelDofs<dim>::q2_local;
  static constexpr std::size_t nq1 = LevelDofs<dim>::q1_local;

  LevelOperatorContext(const LevelDofs<dim>& dofs, const std::vector<double>& viscosity,
                       const QuadratureRule<dim>& rule, unsigned n_threads = 1)
      : dofs_(&dofs), visc_(&viscosity), rule_(rule), n_threads_(n_threads) {
    if (viscosity.size() != dofs.n_cells) throw std::invalid_argument("LevelOperatorContext: viscosity size mismatch");
    const ScalarBasis<dim> q2(2), q1(1);
    const std::size_t nq = rule.size();
    val2_.resize(nq * nq2);
    grad2_.resize(nq * nq2 * dim);
    val1_.resize(nq * nq1);
    for (std::size_t q = 0; q < nq; ++q) {
      for (std::size_t a = 0; a < nq2; ++a) {
        const auto s = shape_eval<dim>(q2, a, rule.points[q]);
        val2_[q * nq2 + a] = s.value;
        for (int d = 0; d < dim; ++d) grad2_[(q * nq2 + a) * dim + static_cast<std::size_t>(d)] = s.gradient[static_cast<std::size_t>(d)];
      }
      for (std::size_t b = 0; b < nq1; ++b) val1_[q * nq1 + b] = shape_eval<dim>(q1, b, rule.points[q]).value;
    }
  }

  [[nodiscard]] const LevelDofs<dim>& dofs() const { return *dofs_; }
  [[nodiscard]] const std::vector<double>& viscosity() const { return *visc_; }
  [[nodiscard]] const QuadratureRule<dim>& rule() const { return rule_; }
  [[nodiscard]] int level() const { return dofs_->level; }
  [[nodiscard]] std::size_t n_u() const { return dofs_->n_u; }
  [[nodiscard]] std::size_t n_p() const { return dofs_->n_p; }
  [[nodiscard]] std::uint64_t flops() const { return flops_; }
  void reset_flops() const { flops_ = 0; }

  /// dst = A src, strain-rate form with viscosity 2 mu.
  void apply_A(std::span<double> dst, std::span<const double> src) const {
    check(src.size(), n_u(), "apply_A");
    check(dst.size(), n_u(), "apply_A");
    std::fill(dst.begin(), dst.end(), 0.0);
    const std::size_t nq = rule_.size();
    const double hfac = std::pow(dofs_->h, dim - 2);
    for_each_cell_colored<dim>(dofs_->cells_per_axis, n_threads_, [&](std::size_t cell) {
      double u[dim][nq2];
      gather_velocity(cell, src, u);
      double out[dim][nq2] = {};
      const double coef = 2.0 * (*visc_)[cell] * hfac;
      for (std::size_t q = 0; q < nq; ++q) {
        const double* g = &grad2_[q * nq2 * dim];
        double grad[dim][dim] = {};
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c)
            for (int d = 0; d < dim; ++d) grad[c][d] += u[c][a] * g[a * dim + static_cast<std::size_t>(d)];
        const double s = coef * rule_.weights[q];
        double sigma[dim][dim];
        for (int c = 0; c < dim; ++c)
          for (int d = 0; d < dim; ++d) sigma[c][d] = 0.5 * s * (grad[c][d] + grad[d][c]);
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c) {
            double acc = 0.0;
            for (int d = 0; d < dim; ++d) acc += sigma[c][d] * g[a * dim + static_cast<std::size_t>(d)];
            out[c][a] += acc;
          }
      }
      scatter_velocity(cell, out, dst);
    });
    for (const auto i : dofs_->dirichlet) dst[i] = src[i];
    flops_ += dofs_->n_cells * nq * (4 * nq2 * dim * dim + 3 * dim * dim);
  }

  /// dst = A_partial src: each component c only sees the derivative along axis c.
  void apply_A_partial(std::span<double> dst, std::span<const double> src) const {
    check(src.size(), n_u(), "apply_A_partial");
    check(dst.size(), n_u(), "apply_A_partial");
    std::fill(dst.begin(), dst.end(), 0.0);
    const std::size_t nq = rule_.size();
    const double hfac = std::pow(dofs_->h, dim - 2);
    for_each_cell_colored<dim>(dofs_->cells_per_axis, n_threads_, [&](std::size_t cell) {
      double u[dim][nq2];
      gather_velocity(cell, src, u);
      double out[dim][nq2] = {};
      const double coef = 2.0 * (*visc_)[cell] * hfac;
      for (std::size_t q = 0; q < nq; ++q) {
        const double* g = &grad2_[q * nq2 * dim];
        double diag[dim] = {};
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c) diag[c] += u[c][a] * g[a * dim + static_cast<std::size_t>(c)];
        const double s = coef * rule_.weights[q];
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c) out[c][a] += s * diag[c] * g[a * dim + static_cast<std::size_t>(c)];
      }
      scatter_velocity(cell, out, dst);
    });
    for (const auto i : dofs_->dirichlet) dst[i] = src[i];
    flops_ += dofs_->n_cells * nq * 4 * nq2 * dim;
  }

  /// dst (pressure) = B src (velocity), B_ij = -(div phi_j, psi_i).
  void apply_B(std::span<double> dst, std::span<const double> src) const {
    check(src.size(), n_u(), "apply_B");
    check(dst.size(), n_p(), "apply_B");
    std::fill(dst.begin(), dst.end(), 0.0);
    const std::size_t nq = rule_.size();
    const double hfac = std::pow(dofs_->h, dim - 1);
    for_each_cell_colored<dim>(dofs_->cells_per_axis, n_threads_, [&](std::size_t cell) {
      double u[dim][nq2];
      gather_velocity(cell, src, u);
      double out[nq1] = {};
      for (std::size_t q = 0; q < nq; ++q) {
        const double div = -hfac * rule_.weights[q] * divergence(q, u);
        for (std::size_t b = 0; b < nq1; ++b) out[b] += div * val1_[q * nq1 + b];
      }
      const auto* pn = &dofs_->pressure_nodes[cell * nq1];
      for (std::size_t b = 0; b < nq1; ++b) dst[pn[b]] += out[b];
    });
    flops_ += dofs_->n_cells * nq * (2 * nq2 * dim + 2 * nq1);
  }

  /// dst (velocity) = B^T src (pressure); zero on constrained velocity unknowns.
  void apply_Bt(std::span<double> dst, std::span<const double> src) const {
    check(src.size(), n_p(), "apply_Bt");
    check(dst.size(), n_u(), "apply_Bt");
    std::fill(dst.begin(), dst.end(), 0.0);
    const std::size_t nq = rule_.size();
    const double hfac = std::pow(dofs_->h, dim - 1);
    for_each_cell_colored<dim>(dofs_->cells_per_axis, n_threads_, [&](std::size_t cell) {
      double p[nq1];
      gather_pressure(cell, src, p);
      double out[dim][nq2] = {};
      for (std::size_t q = 0; q < nq; ++q) {
        double pq = 0.0;
        for (std::size_t b = 0; b < nq1; ++b) pq += p[b] * val1_[q * nq1 + b];
        const double s = -hfac * rule_.weights[q] * pq;
        const double* g = &grad2_[q * nq2 * dim];
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c) out[c][a] += s * g[a * dim + static_cast<std::size_t>(c)];
      }
      scatter_velocity(cell, out, dst);
    });
    flops_ += dofs_->n_cells * nq * (2 * nq2 * dim + 2 * nq1);
  }

  /// dst = M_p src with [M_p]_ij = (psi_i, psi_j / mu).
  void apply_Mp(std::span<double> dst, std::span<const double> src) const {
    check(src.size(), n_p(), "apply_Mp");
    check(dst.size(), n_p(), "apply_Mp");
    std::fill(dst.begin(), dst.end(), 0.0);
    const std::size_t nq = rule_.size();
    const double hfac = std::pow(dofs_->h, dim);
    for_each_cell_colored<dim>(dofs_->cells_per_axis, n_threads_, [&](std::size_t cell) {
      double p[nq1];
      gather_pressure(cell, src, p);
      double out[nq1] = {};
      const double coef = hfac / (*visc_)[cell];
      for (std::size_t q = 0; q < nq; ++q) {
        double pq = 0.0;
        for (std::size_t b = 0; b < nq1; ++b) pq += p[b] * val1_[q * nq1 + b];
        const double s = coef * rule_.weights[q] * pq;
        for (std::size_t b = 0; b < nq1; ++b) out[b] += s * val1_[q * nq1 + b];
      }
      const auto* pn = &dofs_->pressure_nodes[cell * nq1];
      for (std::size_t b = 0; b < nq1; ++b) dst[pn[b]] += out[b];
    });
    flops_ += dofs_->n_cells * nq * 4 * nq1;
  }

  /// Saddle-point product (A u + B^T p, B u) on contiguous block vectors.
  void apply_stokes(std::span<double> dst, std::span<const double> src) const {
    check(src.size(), n_u() + n_p(), "apply_stokes");
    check(dst.size(), n_u() + n_p(), "apply_stokes");
    const auto su = src.first(n_u());
    const auto sp = src.subspan(n_u());
    auto du = dst.first(n_u());
    auto dp = dst.subspan(n_u());
    std::fill(dst.begin(), dst.end(), 0.0);
    const std::size_t nq = rule_.size();
    const double hA = std::pow(dofs_->h, dim - 2), hB = std::pow(dofs_->h, dim - 1);
    for_each_cell_colored<dim>(dofs_->cells_per_axis, n_threads_, [&](std::size_t cell) {
      double u[dim][nq2];
      double p[nq1];
      gather_velocity(cell, su, u);
      gather_pressure(cell, sp, p);
      double out[dim][nq2] = {};
      double outp[nq1] = {};
      const double coef = 2.0 * (*visc_)[cell] * hA;
      for (std::size_t q = 0; q < nq; ++q) {
        const double* g = &grad2_[q * nq2 * dim];
        const double w = rule_.weights[q];
        double grad[dim][dim] = {};
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c)
            for (int d = 0; d < dim; ++d) grad[c][d] += u[c][a] * g[a * dim + static_cast<std::size_t>(d)];
        double pq = 0.0;
        for (std::size_t b = 0; b < nq1; ++b) pq += p[b] * val1_[q * nq1 + b];
        double sigma[dim][dim];
        double div = 0.0;
        for (int c = 0; c < dim; ++c) {
          div += grad[c][c];
          for (int d = 0; d < dim; ++d) sigma[c][d] = 0.5 * coef * w * (grad[c][d] + grad[d][c]);
          sigma[c][c] -= hB * w * pq;
        }
        const double sdiv = -hB * w * div;
        for (std::size_t b = 0; b < nq1; ++b) outp[b] += sdiv * val1_[q * nq1 + b];
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c) {
            double acc = 0.0;
            for (int d = 0; d < dim; ++d) acc += sigma[c][d] * g[a * dim + static_cast<std::size_t>(d)];
            out[c][a] += acc;
          }
      }
      scatter_velocity(cell, out, du);
      const auto* pn = &dofs_->pressure_nodes[cell * nq1];
      for (std::size_t b = 0; b < nq1; ++b) dp[pn[b]] += outp[b];
    });
    for (const auto i : dofs_->dirichlet) du[i] = su[i];
    flops_ += dofs_->n_cells * nq * (4 * nq2 * dim * dim + 4 * nq1 + 3 * dim * dim);
  }

  /// Exact diagonal by cell-local extraction; constrained velocity entries are 1.
  [[nodiscard]] Vector compute_diagonal(DiagonalKind which) const {
    const std::size_t nq = rule_.size();
    if (which == DiagonalKind::Mp) {
      Vector diag(n_p(), 0.0);
      const double hfac = std::pow(dofs_->h, dim);
      for (std::size_t cell = 0; cell < dofs_->n_cells; ++cell) {
        const double coef = hfac / (*visc_)[cell];
        const auto* pn = &dofs_->pressure_nodes[cell * nq1];
        for (std::size_t b = 0; b < nq1; ++b) {
          double acc = 0.0;
          for (std::size_t q = 0; q < nq; ++q) acc += rule_.weights[q] * val1_[q * nq1 + b] * val1_[q * nq1 + b];
          diag[pn[b]] += coef * acc;
        }
      }
      return diag;
    }
    Vector diag(n_u(), 0.0);
    const double hfac = std::pow(dofs_->h, dim - 2);
    const std::size_t nn = dofs_->n_velocity_nodes;
    for (std::size_t cell = 0; cell < dofs_->n_cells; ++cell) {
      const double coef = 2.0 * (*visc_)[cell] * hfac;
      const auto* vn = &dofs_->velocity_nodes[cell * nq2];
      for (std::size_t a = 0; a < nq2; ++a) {
        for (int c = 0; c < dim; ++c) {
          double acc = 0.0;
          for (std::size_t q = 0; q < nq; ++q) {
            const double* g = &grad2_[(q * nq2 + a) * dim];
            const double gc = g[c];
            if (which == DiagonalKind::A) {
              double g2 = 0.0;
              for (int d = 0; d < dim; ++d) g2 += g[d] * g[d];
              acc += rule_.weights[q] * 0.5 * (g2 + gc * gc);
            } else {
              acc += rule_.weights[q] * gc * gc;
            }
          }
          diag[static_cast<std::size_t>(c) * nn + vn[a]] += coef * acc;
        }
      }
    }
    for (const auto i : dofs_->dirichlet) diag[i] = 1.0;
    return diag;
  }

  /// Velocity load vector (phi_j, f) for a pointwise body force; constrained entries zero.
  template <class ForceFn>
    requires std::invocable<ForceFn&, const std::array<double, dim>&>
  [[nodiscard]] BlockVector assemble_rhs(ForceFn&& f) const {
    BlockVector rhs(*dofs_);
    auto u = rhs.u();
    const std::size_t nq = rule_.size();
    const double h = dofs_->h;
    const double jxw = std::pow(h, dim);
    const std::size_t nn = dofs_->n_velocity_nodes;
    for (std::size_t cell = 0; cell < dofs_->n_cells; ++cell) {
      std::array<std::size_t, dim> lat{};
      std::size_t rem = cell;
      for (int d = 0; d < dim; ++d) {
        lat[static_cast<std::size_t>(d)] = rem % static_cast<std::size_t>(dofs_->cells_per_axis);
        rem /= static_cast<std::size_t>(dofs_->cells_per_axis);
      }
      const auto* vn = &dofs_->velocity_nodes[cell * nq2];
      for (std::size_t q = 0; q < nq; ++q) {
        std::array<double, dim> x{};
        for (int d = 0; d < dim; ++d)
          x[static_cast<std::size_t>(d)] = (static_cast<double>(lat[static_cast<std::size_t>(d)]) + rule_.points[q][static_cast<std::size_t>(d)]) * h;
        const std::array<double, dim> fq = f(x);
        const double w = rule_.weights[q] * jxw;
        for (std::size_t a = 0; a < nq2; ++a)
          for (int c = 0; c < dim; ++c)
            u[static_cast<std::size_t>(c) * nn + vn[a]] += w * val2_[q * nq2 + a] * fq[static_cast<std::size_t>(c)];
      }
    }
    zero_constrained<dim>(u, *dofs_);
    return rhs;
  }

  [[nodiscard]] BlockVector assemble_rhs(const SinkerConfig<dim>& cfg) const {
    return assemble_rhs([&cfg](const std::array<double, dim>& x) { return forcing<dim>(x, cfg); });
  }

  /// Integrals of the pressure basis functions, (psi_i, 1).
  [[nodiscard]] Vector pressure_integrals() const {
    Vector w(n_p(), 0.0);
    const double jxw = std::pow(dofs_->h, dim);
    for (std::size_t cell = 0; cell < dofs_->n_cells; ++cell) {
      const auto* pn = &dofs_->pressure_nodes[cell * nq1];
      for (std::size_t q = 0; q < rule_.size(); ++q)
        for (std::size_t b = 0; b < nq1; ++b) w[pn[b]] += jxw * rule_.weights[q] * val1_[q * nq1 + b];
    }
    return w;
  }

  [[nodiscard]] std::size_t memory_bytes() const {
    return (val2_.capacity() + grad2_.capacity() + val1_.capacity()) * sizeof(double);
  }

 private:
  static void check(std::size_t got, std::size_t want, const char* what) {
    if (got != want) throw std::invalid_argument(std::string(what) + ": length mismatch");
  }

  void gather_velocity(std::size_t cell, std::span<const double> src, double (&u)[dim][nq2]) const {
    const auto* vn = &dofs_->velocity_nodes[cell * nq2];
    const std::size_t nn = dofs_->n_velocity_nodes;
    for (std::size_t a = 0; a < nq2; ++a) {
      const bool fixed = dofs_->boundary_node[vn[a]] != 0;
      for (int c = 0; c < dim; ++c) u[c][a] = fixed ? 0.0 : src[static_cast<std::size_t>(c) * nn + vn[a]];
    }
  }

  void gather_pressure(std::size_t cell, std::span<const double> src, double (&p)[nq1]) const {
    const auto* pn = &dofs_->pressure_nodes[cell * nq1];
    for (std::size_t b = 0; b < nq1; ++b) p[b] = src[pn[b]];
  }

  void scatter_velocity(std::size_t cell, const double (&out)[dim][nq2], std::span<double> dst) const {
    const auto* vn = &dofs_->velocity_nodes[cell * nq2];
    const std::size_t nn = dofs_->n_velocity_nodes;
    for (std::size_t a = 0; a < nq2; ++a) {
      if (dofs_->boundary_node[vn[a]]) continue;
      for (int c = 0; c < dim; ++c) dst[static_cast<std::size_t>(c) * nn + vn[a]] += out[c][a];
    }
  }

  double divergence(std::size_t q, const double (&u)[dim][nq2]) const {
    const double* g = &grad2_[q * nq2 * dim];
    double div = 0.0;
    for (std::size_t a = 0; a < nq2; ++a)
      for (int c = 0; c < dim; ++c) div += u[c][a] * g[a * dim + static_cast<std::size_t>(c)];
    return div;
  }

  const LevelDofs<dim>* dofs_;
  const std::vector<double>* visc_;
  QuadratureRule<dim> rule_;
  unsigned n_threads_;
  std::vector<double> val2_, grad2_, val1_;
  mutable std::uint64_t flops_ = 0;
};

}  // namespace stokes_gmg

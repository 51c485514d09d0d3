#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "chebyshev.hpp"
#include "krylov.hpp"
#include "linalg.hpp"
#include "operators.hpp"
#include "transfer.hpp"

namespace stokes_gmg {

struct MultigridParams {
  ChebyshevParams smoother;
  /// Relative tolerance and cap of the CG solve on level 0. The tolerance is tight so the
  /// V-cycle stays a fixed linear operator.
  double coarse_tolerance = 1e-12;
  int coarse_max_iters = 100;
  /// Smooth with the partially coupled operator instead of A (residuals still use A).
  bool partial_smoothing = false;
};

/// Symmetric V-cycle: one Chebyshev application before and after the coarse correction on
/// every level, with a preconditioned CG solve on level 0.
template <int dim>
class Multigrid {
 public:
  struct Level {
    LinearFn op;
    ChebyshevSmoother smoother;
    EigenEstimate estimate;
    std::size_t size = 0;
    mutable Vector b, x, r, t;
  };

  Multigrid(std::vector<LinearFn> ops, std::vector<LinearFn> smoothing_ops, std::vector<Vector> diagonals,
            TransferPlan<dim> transfer, const MultigridParams& params)
      : transfer_(std::move(transfer)), params_(params) {
    if (ops.empty() || ops.size() != diagonals.size() || ops.size() != smoothing_ops.size())
      throw std::invalid_argument("Multigrid: inconsistent level data");
    if (static_cast<int>(ops.size()) != transfer_.n_levels())
      throw std::invalid_argument("Multigrid: transfer plan does not match the level count");
    for (std::size_t l = 0; l < ops.size(); ++l) {
      Level lev;
      lev.size = diagonals[l].size();
      if (lev.size != transfer_.size(static_cast<int>(l))) throw std::invalid_argument("Multigrid: level size mismatch");
      lev.op = std::move(ops[l]);
      lev.smoother = make_chebyshev_smoother(std::move(smoothing_ops[l]), std::move(diagonals[l]), params.smoother,
                                             &lev.estimate);
      lev.b.assign(lev.size, 0.0);
      lev.x.assign(lev.size, 0.0);
      lev.r.assign(lev.size, 0.0);
      lev.t.assign(lev.size, 0.0);
      levels_.push_back(std::move(lev));
    }
  }

  [[nodiscard]] int n_levels() const { return static_cast<int>(levels_.size()); }
  [[nodiscard]] const Level& level(int l) const { return levels_.at(static_cast<std::size_t>(l)); }
  [[nodiscard]] const TransferPlan<dim>& transfer() const { return transfer_; }
  [[nodiscard]] std::size_t size() const { return levels_.back().size; }
  [[nodiscard]] long coarse_iterations() const { return coarse_iterations_; }
  [[nodiscard]] long applications() const { return applications_; }

  /// x = one V-cycle applied to b on `level`, starting from zero.
  void vcycle(int level, std::span<const double> b, std::span<double> x) const {
    const auto& lev = levels_.at(static_cast<std::size_t>(level));
    if (b.size() != lev.size || x.size() != lev.size) throw std::invalid_argument("vcycle: size mismatch");
    if (level == 0) {
      coarse_solve(b, x);
      return;
    }
    const auto& coarse = levels_[static_cast<std::size_t>(level - 1)];
    lev.smoother.smooth(b, x, true);
    lev.op(lev.r, std::span<const double>(x.data(), x.size()));
    for (std::size_t i = 0; i < lev.size; ++i) lev.r[i] = b[i] - lev.r[i];
    transfer_.restrict(level, lev.r, coarse.b);
    if (transfer_.constrained()) transfer_.zero_boundary(level - 1, coarse.b);
    vcycle(level - 1, coarse.b, coarse.x);
    transfer_.prolongate(level, coarse.x, lev.t);
    vec::axpy(1.0, lev.t, x);
    lev.smoother.smooth(b, x, false);
  }

  void operator()(std::span<double> dst, std::span<const double> src) const {
    ++applications_;
    vcycle(n_levels() - 1, src, dst);
  }

  [[nodiscard]] std::size_t memory_bytes() const {
    std::size_t bytes = transfer_.memory_bytes();
    for (const auto& l : levels_)
      bytes += l.smoother.memory_bytes() + (l.b.capacity() + l.x.capacity() + l.r.capacity() + l.t.capacity()) * sizeof(double);
    return bytes;
  }

 private:
  void coarse_solve(std::span<const double> b, std::span<double> x) const {
    const auto& lev = levels_.front();
    vec::fill(x, 0.0);
    SolveControl control;
    control.reduction_target = params_.coarse_tolerance;
    control.max_iters = params_.coarse_max_iters;
    const auto stats = cg(lev.op, lev.smoother, b, x, control);
    coarse_iterations_ += stats.iterations;
  }

  TransferPlan<dim> transfer_;
  MultigridParams params_;
  std::vector<Level> levels_;
  mutable long coarse_iterations_ = 0;
  mutable long applications_ = 0;
};

/// V-cycle for the fully coupled velocity block over all levels of `contexts`.
template <int dim>
Multigrid<dim> make_velocity_multigrid(const std::vector<LevelOperatorContext<dim>>& contexts, const MultigridParams& params) {
  std::vector<LinearFn> ops, smooth_ops;
  std::vector<Vector> diags;
  for (const auto& ctx : contexts) {
    const auto* c = &ctx;
    ops.emplace_back([c](std::span<double> d, std::span<const double> s) { c->apply_A(d, s); });
    if (params.partial_smoothing) {
      smooth_ops.emplace_back([c](std::span<double> d, std::span<const double> s) { c->apply_A_partial(d, s); });
      diags.push_back(ctx.compute_diagonal(DiagonalKind::A_partial));
    } else {
      smooth_ops.push_back(ops.back());
      diags.push_back(ctx.compute_diagonal(DiagonalKind::A));
    }
  }
  return Multigrid<dim>(std::move(ops), std::move(smooth_ops), std::move(diags),
                        TransferPlan<dim>(2, dim, static_cast<int>(contexts.size()), true), params);
}

/// V-cycle for the viscosity-weighted pressure mass matrix (Q1, no constraints).
template <int dim>
Multigrid<dim> make_mass_multigrid(const std::vector<LevelOperatorContext<dim>>& contexts, const MultigridParams& params) {
  std::vector<LinearFn> ops;
  std::vector<Vector> diags;
  for (const auto& ctx : contexts) {
    const auto* c = &ctx;
    ops.emplace_back([c](std::span<double> d, std::span<const double> s) { c->apply_Mp(d, s); });
    diags.push_back(ctx.compute_diagonal(DiagonalKind::Mp));
  }
  auto smooth_ops = ops;
  return Multigrid<dim>(std::move(ops), std::move(smooth_ops), std::move(diags),
                        TransferPlan<dim>(1, 1, static_cast<int>(contexts.size()), false), params);
}

}  // namespace stokes_gmg

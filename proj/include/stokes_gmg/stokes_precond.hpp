#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dof_map.hpp"
#include "krylov.hpp"
#include "mesh.hpp"
#include "multigrid.hpp"
#include "operators.hpp"
#include "viscosity.hpp"

namespace stokes_gmg {

/// Mesh, numbering, viscosity and per-level operator contexts of one problem.
/// Contexts point into the owned members, so the object is pinned in memory.
template <int dim>
class StokesDiscretization {
 public:
  StokesDiscretization(MeshHierarchy<dim> mesh, DofMap<dim> dofs, ViscosityField viscosity, QuadratureRule<dim> rule,
                       unsigned n_threads = 1)
      : mesh_(std::move(mesh)), dofs_(std::move(dofs)), visc_(std::move(viscosity)), rule_(std::move(rule)) {
    if (visc_.levels.size() != static_cast<std::size_t>(mesh_.n_levels()))
      throw std::invalid_argument("StokesDiscretization: viscosity must be filled on every level");
    contexts_.reserve(static_cast<std::size_t>(mesh_.n_levels()));
    for (int l = 0; l < mesh_.n_levels(); ++l) contexts_.emplace_back(dofs_.level(l), visc_.level(l), rule_, n_threads);
  }
  StokesDiscretization(const StokesDiscretization&) = delete;
  StokesDiscretization& operator=(const StokesDiscretization&) = delete;

  [[nodiscard]] const MeshHierarchy<dim>& mesh() const { return mesh_; }
  [[nodiscard]] const DofMap<dim>& dofs() const { return dofs_; }
  [[nodiscard]] const ViscosityField& viscosity() const { return visc_; }
  [[nodiscard]] const QuadratureRule<dim>& rule() const { return rule_; }
  [[nodiscard]] const std::vector<LevelOperatorContext<dim>>& contexts() const { return contexts_; }
  [[nodiscard]] const LevelOperatorContext<dim>& active() const { return contexts_.back(); }

 private:
  MeshHierarchy<dim> mesh_;
  DofMap<dim> dofs_;
  ViscosityField visc_;
  QuadratureRule<dim> rule_;
  std::vector<LevelOperatorContext<dim>> contexts_;
};

/// Builds the hierarchy, numbering and restricted sinker viscosity with the default
/// 3-point Gauss rule.
template <int dim>
std::unique_ptr<StokesDiscretization<dim>> make_sinker_discretization(int n_levels, const SinkerConfig<dim>& cfg,
                                                                      unsigned n_threads = 1) {
  cfg.validate();
  auto mesh = build_hierarchy<dim>(n_levels);
  auto dofs = distribute_dofs(mesh);
  auto rule = make_gauss_rule<dim>(3);
  auto visc = restrict_viscosity(average_active_viscosity(mesh, cfg, rule), mesh);
  return std::make_unique<StokesDiscretization<dim>>(std::move(mesh), std::move(dofs), std::move(visc), std::move(rule),
                                                     n_threads);
}

template <int dim>
std::unique_ptr<StokesDiscretization<dim>> make_constant_discretization(int n_levels, double viscosity,
                                                                        unsigned n_threads = 1) {
  auto mesh = build_hierarchy<dim>(n_levels);
  auto dofs = distribute_dofs(mesh);
  auto visc = constant_viscosity(mesh, viscosity);
  return std::make_unique<StokesDiscretization<dim>>(std::move(mesh), std::move(dofs), std::move(visc),
                                                     make_gauss_rule<dim>(3), n_threads);
}

enum class PrecondShape { triangular, diagonal };
enum class AInverse { gmg_vcycle, exact_inner_solve };
enum class SInverse { cg_mass, vcycle_mass, diag_mass, exact_inner_solve };
enum class OuterSolver { gmres, fgmres, idr };

struct PrecondConfig {
  PrecondShape shape = PrecondShape::triangular;
  AInverse a_inv = AInverse::gmg_vcycle;
  SInverse s_inv = SInverse::cg_mass;
  double cg_mass_tolerance = 1e-2;
  int cg_mass_max_iters = 100;
  double exact_tolerance = 1e-12;
  int exact_max_iters = 2000;
  MultigridParams multigrid;
};

/// Rejects pairing a non-flexible outer solver with a varying Schur approximation.
inline void validate_solver_pairing(OuterSolver solver, const PrecondConfig& cfg) {
  if (solver == OuterSolver::gmres && cfg.s_inv == SInverse::cg_mass)
    throw std::invalid_argument("gmres requires a fixed preconditioner; cg_mass needs fgmres or idr");
}

struct PrecondStats {
  long applications = 0;
  long a_inv_applications = 0;
  long s_inv_applications = 0;
  long inner_s_iterations = 0;
  int min_inner_s_iterations = 0;
  int max_inner_s_iterations = 0;
  long inner_a_iterations = 0;
  long warnings = 0;
  std::string last_warning;
};

/// Block preconditioner for the Stokes system.
///
/// Triangular: p = -S^{-1} r_p, u = A^{-1} (r_u - B^T p).
/// Diagonal:   p = -S^{-1} r_p, u = A^{-1} r_u.
/// Inner non-convergence is recorded as a warning and never aborts the outer solve.
template <int dim>
class StokesPreconditioner {
 public:
  StokesPreconditioner(const StokesDiscretization<dim>& disc, PrecondConfig cfg) : disc_(&disc), cfg_(std::move(cfg)) {
    const auto& ctx = disc.active();
    velocity_mg_.emplace(make_velocity_multigrid(disc.contexts(), cfg_.multigrid));
    mass_diag_ = ctx.compute_diagonal(DiagonalKind::Mp);
    if (cfg_.s_inv == SInverse::vcycle_mass) mass_mg_.emplace(make_mass_multigrid(disc.contexts(), cfg_.multigrid));
    if (cfg_.s_inv == SInverse::cg_mass || cfg_.s_inv == SInverse::exact_inner_solve) {
      const auto* c = &ctx;
      mass_smoother_ = make_chebyshev_smoother(
          [c](std::span<double> d, std::span<const double> s) { c->apply_Mp(d, s); }, mass_diag_, cfg_.multigrid.smoother);
    }
    tmp_u_.assign(ctx.n_u(), 0.0);
    tmp_p_.assign(ctx.n_p(), 0.0);
  }

  [[nodiscard]] const PrecondConfig& config() const { return cfg_; }
  [[nodiscard]] const PrecondStats& stats() const { return stats_; }
  [[nodiscard]] const Multigrid<dim>& velocity_multigrid() const { return *velocity_mg_; }
  [[nodiscard]] const Multigrid<dim>* mass_multigrid() const { return mass_mg_ ? &*mass_mg_ : nullptr; }

  /// dst = P^{-1} src on contiguous (u, p) block vectors of the active level.
  void operator()(std::span<double> dst, std::span<const double> src) const {
    const auto& ctx = disc_->active();
    const std::size_t nu = ctx.n_u(), np = ctx.n_p();
    if (src.size() != nu + np || dst.size() != nu + np) throw std::invalid_argument("StokesPreconditioner: size mismatch");
    ++stats_.applications;
    auto du = dst.first(nu);
    auto dp = dst.subspan(nu);
    schur_apply(src.subspan(nu), dp);
    vec::scale(-1.0, dp);
    if (cfg_.shape == PrecondShape::triangular) {
      ctx.apply_Bt(tmp_u_, std::span<const double>(dp));
      for (std::size_t i = 0; i < nu; ++i) tmp_u_[i] = src[i] - tmp_u_[i];
      a_apply(tmp_u_, du);
    } else {
      a_apply(src.first(nu), du);
    }
  }

  /// dst approximates S^{-1} src according to the configured Schur option.
  void schur_apply(std::span<const double> src, std::span<double> dst) const {
    const auto& ctx = disc_->active();
    if (src.size() != ctx.n_p() || dst.size() != ctx.n_p()) throw std::invalid_argument("schur_apply: size mismatch");
    ++stats_.s_inv_applications;
    switch (cfg_.s_inv) {
      case SInverse::diag_mass:
        for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] / mass_diag_[i];
        break;
      case SInverse::vcycle_mass:
        (*mass_mg_)(dst, src);
        break;
      case SInverse::cg_mass: {
        vec::fill(dst, 0.0);
        SolveControl control;
        control.reduction_target = cfg_.cg_mass_tolerance;
        control.max_iters = cfg_.cg_mass_max_iters;
        auto op = [&ctx](std::span<double> d, std::span<const double> s) { ctx.apply_Mp(d, s); };
        const auto st = cg(op, mass_smoother_, src, dst, control);
        record_inner_s(st.iterations);
        if (!st.converged) warn("schur_apply: mass-matrix CG hit its iteration cap");
        break;
      }
      case SInverse::exact_inner_solve:
        exact_schur_solve(src, dst);
        break;
    }
  }

  /// dst approximates A^{-1} src according to the configured velocity option.
  void a_apply(std::span<const double> src, std::span<double> dst) const {
    ++stats_.a_inv_applications;
    if (cfg_.a_inv == AInverse::gmg_vcycle) {
      (*velocity_mg_)(dst, src);
      return;
    }
    exact_velocity_solve(src, dst, cfg_.exact_tolerance);
  }

  [[nodiscard]] std::size_t memory_bytes() const {
    std::size_t b = velocity_mg_->memory_bytes() + (mass_diag_.capacity() + tmp_u_.capacity() + tmp_p_.capacity()) * sizeof(double);
    if (mass_mg_) b += mass_mg_->memory_bytes();
    b += mass_smoother_.memory_bytes();
    return b;
  }

 private:
  void warn(const std::string& what) const {
    ++stats_.warnings;
    stats_.last_warning = what;
  }

  void record_inner_s(int its) const {
    stats_.inner_s_iterations += its;
    if (stats_.s_inv_applications == 1 || its < stats_.min_inner_s_iterations) stats_.min_inner_s_iterations = its;
    stats_.max_inner_s_iterations = std::max(stats_.max_inner_s_iterations, its);
  }

  void exact_velocity_solve(std::span<const double> src, std::span<double> dst, double tol) const {
    const auto& ctx = disc_->active();
    vec::fill(dst, 0.0);
    SolveControl control;
    control.reduction_target = tol;
    control.max_iters = cfg_.exact_max_iters;
    auto op = [&ctx](std::span<double> d, std::span<const double> s) { ctx.apply_A(d, s); };
    const auto st = cg(op, *velocity_mg_, src, dst, control);
    stats_.inner_a_iterations += st.iterations;
    if (!st.converged) warn("exact velocity solve did not reach its tolerance");
  }

  /// CG on S = B A^{-1} B^T restricted to pressures orthogonal to constants,
  /// preconditioned by a Chebyshev approximation of M_p^{-1}.
  void exact_schur_solve(std::span<const double> src, std::span<double> dst) const {
    const auto& ctx = disc_->active();
    const std::size_t np = ctx.n_p();
    std::vector<double> rhs(src.begin(), src.end());
    double mean = 0.0;
    for (double v : rhs) mean += v;
    mean /= static_cast<double>(np);
    for (double& v : rhs) v -= mean;
    std::vector<double> bu(ctx.n_u()), au(ctx.n_u());
    auto schur = [&](std::span<double> d, std::span<const double> s) {
      ctx.apply_Bt(bu, s);
      exact_velocity_solve(bu, au, 0.1 * cfg_.exact_tolerance);
      ctx.apply_B(d, std::span<const double>(au));
    };
    vec::fill(dst, 0.0);
    SolveControl control;
    control.reduction_target = cfg_.exact_tolerance;
    control.max_iters = cfg_.exact_max_iters;
    const auto st = cg(schur, mass_smoother_, std::span<const double>(rhs), dst, control);
    record_inner_s(st.iterations);
    if (!st.converged) warn("exact Schur solve did not reach its tolerance");
  }

  const StokesDiscretization<dim>* disc_;
  PrecondConfig cfg_;
  std::optional<Multigrid<dim>> velocity_mg_;
  std::optional<Multigrid<dim>> mass_mg_;
  ChebyshevSmoother mass_smoother_;
  Vector mass_diag_;
  mutable Vector tmp_u_, tmp_p_;
  mutable PrecondStats stats_;
};

/// Shifts the pressure so that its integral over the domain vanishes.
template <int dim>
void normalize_pressure(BlockVector& x, const LevelOperatorContext<dim>& ctx) {
  if (x.n_p() != ctx.n_p()) throw std::invalid_argument("normalize_pressure: size mismatch");
  const Vector w = ctx.pressure_integrals();
  double num = 0.0, den = 0.0;
  auto p = x.p();
  for (std::size_t i = 0; i < p.size(); ++i) {
    num += w[i] * p[i];
    den += w[i];
  }
  const double shift = num / den;
  for (auto& v : p) v -= shift;
}

/// Runs the chosen outer Krylov method on the active-level Stokes system.
/// x holds the initial guess; the returned solution has zero-mean pressure.
template <int dim>
SolverStats solve_stokes(const StokesDiscretization<dim>& disc, const StokesPreconditioner<dim>& precond, OuterSolver solver,
                         const BlockVector& rhs, BlockVector& x, const SolveControl& control, const IdrParams& idr = {}) {
  validate_solver_pairing(solver, precond.config());
  const auto& ctx = disc.active();
  if (rhs.size() != ctx.n_u() + ctx.n_p() || x.size() != rhs.size()) throw std::invalid_argument("solve_stokes: size mismatch");
  auto op = [&ctx](std::span<double> d, std::span<const double> s) { ctx.apply_stokes(d, s); };
  normalize_pressure(x, ctx);
  SolverStats stats;
  switch (solver) {
    case OuterSolver::gmres:
      stats = gmres(op, precond, rhs.data(), x.data(), control);
      break;
    case OuterSolver::fgmres:
      stats = fgmres(op, precond, rhs.data(), x.data(), control);
      break;
    case OuterSolver::idr:
      stats = idr_s(op, precond, rhs.data(), x.data(), idr, control);
      break;
  }
  normalize_pressure(x, ctx);
  return stats;
}

}  // namespace stokes_gmg

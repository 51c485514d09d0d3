#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "linalg.hpp"
#include "viscosity.hpp"

namespace stokes_gmg {

struct SolveControl {
  double reduction_target = 1e-6;
  int max_iters = 1000;
  int restart_length = 50;

  void validate() const {
    if (!(reduction_target > 0.0 && reduction_target < 1.0))
      throw std::invalid_argument("SolveControl: reduction_target must lie in (0,1)");
    if (restart_length < 1) throw std::invalid_argument("SolveControl: restart_length must be >= 1");
    if (max_iters < 0) throw std::invalid_argument("SolveControl: max_iters must be >= 0");
  }
};

struct SolverStats {
  int iterations = 0;
  int precond_applications = 0;
  int matvec_count = 0;
  /// High-water mark of all solver-owned full-length vectors alive at once.
  int peak_vector_count = 0;
  /// High-water mark of the subset holding Krylov/shadow-space storage (GMRES: basis,
  /// FGMRES: basis plus preconditioned basis, IDR(s): P, U and G).
  int krylov_vector_count = 0;
  /// Euclidean residual norm; entry 0 is the initial residual, entry k after iteration k.
  std::vector<double> residual_history;
  bool converged = false;
  bool breakdown = false;
  std::string message;

  [[nodiscard]] double initial_residual() const { return residual_history.empty() ? 0.0 : residual_history.front(); }
  [[nodiscard]] double final_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Counts live solver-owned vectors. Every LedgerVector registers itself on construction
/// and deregisters on destruction, so the peaks are measured, not modelled.
class VectorLedger {
 public:
  enum class Role { krylov, work };

  void acquire(Role role) {
    ++live_;
    peak_ = std::max(peak_, live_);
    if (role == Role::krylov) {
      ++live_krylov_;
      peak_krylov_ = std::max(peak_krylov_, live_krylov_);
    }
    ++allocations_;
  }
  void release(Role role) {
    --live_;
    if (role == Role::krylov) --live_krylov_;
  }

  [[nodiscard]] int live() const { return live_; }
  [[nodiscard]] int peak() const { return peak_; }
  [[nodiscard]] int peak_krylov() const { return peak_krylov_; }
  [[nodiscard]] int allocations() const { return allocations_; }

 private:
  int live_ = 0, peak_ = 0, live_krylov_ = 0, peak_krylov_ = 0, allocations_ = 0;
};

class LedgerVector {
 public:
  LedgerVector(VectorLedger& ledger, std::size_t n, VectorLedger::Role role = VectorLedger::Role::work)
      : ledger_(&ledger), role_(role), data_(n, 0.0) {
    ledger_->acquire(role_);
  }
  LedgerVector(const LedgerVector&) = delete;
  LedgerVector& operator=(const LedgerVector&) = delete;
  LedgerVector(LedgerVector&& o) noexcept : ledger_(o.ledger_), role_(o.role_), data_(std::move(o.data_)) {
    o.ledger_ = nullptr;
  }
  LedgerVector& operator=(LedgerVector&&) = delete;
  ~LedgerVector() {
    if (ledger_) ledger_->release(role_);
  }

  [[nodiscard]] std::span<double> span() { return data_; }
  [[nodiscard]] std::span<const double> span() const { return data_; }
  operator std::span<double>() { return data_; }
  operator std::span<const double>() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  void swap_data(LedgerVector& o) noexcept { data_.swap(o.data_); }

 private:
  VectorLedger* ledger_;
  VectorLedger::Role role_;
  std::vector<double> data_;
};

namespace detail {

inline void finish(SolverStats& stats, const VectorLedger& ledger) {
  stats.peak_vector_count = ledger.peak();
  stats.krylov_vector_count = ledger.peak_krylov();
}

}  // namespace detail

/// Preconditioned conjugate gradients. x holds the initial guess on entry.
/// Throws SolverError when a non-positive curvature <p, op p> is met.
template <LinearMap Op, LinearMap Prec>
SolverStats cg(const Op& op, const Prec& prec, std::span<const double> b, std::span<double> x, const SolveControl& control) {
  control.validate();
  const std::size_t n = b.size();
  if (x.size() != n) throw std::invalid_argument("cg: size mismatch");
  VectorLedger ledger;
  SolverStats stats;
  LedgerVector r(ledger, n), z(ledger, n), p(ledger, n), q(ledger, n);

  const double bnorm = vec::norm(b);
  op(q.span(), std::span<const double>(x.data(), n));
  ++stats.matvec_count;
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
  double rnorm = vec::norm(r);
  stats.residual_history.push_back(rnorm);
  const double target = control.reduction_target * bnorm;
  if (bnorm == 0.0 || rnorm <= target) {
    if (bnorm == 0.0) vec::fill(x, 0.0);
    stats.converged = true;
    detail::finish(stats, ledger);
    return stats;
  }
  prec(z.span(), r.span());
  ++stats.precond_applications;
  vec::copy(z.span(), p.span());
  double rz = vec::dot(r.span(), z.span());
  while (stats.iterations < control.max_iters) {
    op(q.span(), p.span());
    ++stats.matvec_count;
    const double pq = vec::dot(p.span(), q.span());
    if (!(pq > 0.0)) throw SolverError("cg: operator is not positive definite (non-positive curvature)");
    const double alpha = rz / pq;
    vec::axpy(alpha, p.span(), x);
    vec::axpy(-alpha, q.span(), r.span());
    ++stats.iterations;
    rnorm = vec::norm(r.span());
    stats.residual_history.push_back(rnorm);
    if (rnorm <= target) {
      stats.converged = true;
      break;
    }
    prec(z.span(), r.span());
    ++stats.precond_applications;
    const double rz_new = vec::dot(r.span(), z.span());
    if (!(rz > 0.0)) throw SolverError("cg: preconditioner is not positive definite");
    vec::xpby(z.span(), rz_new / rz, p.span());
    rz = rz_new;
  }
  if (!stats.converged) stats.message = "cg: iteration cap reached";
  detail::finish(stats, ledger);
  return stats;
}

namespace detail {

/// Shared restarted (F)GMRES driver with right preconditioning.
template <bool flexible, LinearMap Op, LinearMap Prec>
SolverStats gmres_impl(const Op& op, Prec& prec, std::span<const double> b, std::span<double> x,
                       const SolveControl& control) {
  control.validate();
  const std::size_t n = b.size();
  if (x.size() != n) throw std::invalid_argument("gmres: size mismatch");
  const auto m = static_cast<std::size_t>(control.restart_length);
  VectorLedger ledger;
  SolverStats stats;

  std::vector<LedgerVector> basis;    // V_0 .. V_k
  std::vector<LedgerVector> precond;  // Z_0 .. Z_{k-1} (flexible only)
  basis.reserve(m + 1);
  if constexpr (flexible) precond.reserve(m);
  std::unique_ptr<LedgerVector> z;  // single preconditioned vector (standard GMRES)
  if constexpr (!flexible) z = std::make_unique<LedgerVector>(ledger, n);

  basis.emplace_back(ledger, n, VectorLedger::Role::krylov);
  const double bnorm = vec::norm(b);
  if (bnorm == 0.0) {
    vec::fill(x, 0.0);
    stats.residual_history.push_back(0.0);
    stats.converged = true;
    finish(stats, ledger);
    return stats;
  }
  const double target = control.reduction_target * bnorm;

  std::vector<double> H((m + 1) * m), cs(m), sn(m), g(m + 1), y(m);
  auto h = [&](std::size_t i, std::size_t j) -> double& { return H[i * m + j]; };

  bool first_cycle = true;
  while (true) {
    // r = b - A x into V_0
    op(basis[0].span(), std::span<const double>(x.data(), n));
    ++stats.matvec_count;
    for (std::size_t i = 0; i < n; ++i) basis[0][i] = b[i] - basis[0][i];
    const double beta = vec::norm(basis[0].span());
    if (first_cycle) stats.residual_history.push_back(beta);
    first_cycle = false;
    if (beta <= target) {
      stats.converged = true;
      break;
    }
    if (stats.iterations >= control.max_iters) break;
    vec::scale(1.0 / beta, basis[0].span());
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    const double cycle_start = beta;

    std::size_t k = 0;
    bool happy = false;
    for (; k < m && stats.iterations < control.max_iters; ++k) {
      if (basis.size() < k + 2) basis.emplace_back(ledger, n, VectorLedger::Role::krylov);
      std::span<double> zk;
      if constexpr (flexible) {
        if (precond.size() < k + 1) precond.emplace_back(ledger, n, VectorLedger::Role::krylov);
        zk = precond[k].span();
      } else {
        zk = z->span();
      }
      prec(zk, basis[k].span());
      ++stats.precond_applications;
      op(basis[k + 1].span(), std::span<const double>(zk));
      ++stats.matvec_count;
      auto& w = basis[k + 1];
      for (std::size_t i = 0; i <= k; ++i) {
        h(i, k) = vec::dot(w.span(), basis[i].span());
        vec::axpy(-h(i, k), basis[i].span(), w.span());
      }
      const double hn = vec::norm(w.span());
      h(k + 1, k) = hn;
      if (hn > 0.0) vec::scale(1.0 / hn, w.span());
      for (std::size_t i = 0; i < k; ++i) {
        const double t = cs[i] * h(i, k) + sn[i] * h(i + 1, k);
        h(i + 1, k) = -sn[i] * h(i, k) + cs[i] * h(i + 1, k);
        h(i, k) = t;
      }
      const double denom = std::hypot(h(k, k), h(k + 1, k));
      cs[k] = denom == 0.0 ? 1.0 : h(k, k) / denom;
      sn[k] = denom == 0.0 ? 0.0 : h(k + 1, k) / denom;
      h(k, k) = denom;
      h(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++stats.iterations;
      const double res = std::abs(g[k + 1]);
      stats.residual_history.push_back(res);
      if (res <= target || hn <= 1e-14 * cycle_start) {
        happy = hn <= 1e-14 * cycle_start;
        ++k;
        break;
      }
    }

    // y = H^{-1} g (upper triangular)
    for (std::size_t ii = k; ii-- > 0;) {
      double s = g[ii];
      for (std::size_t j = ii + 1; j < k; ++j) s -= h(ii, j) * y[j];
      y[ii] = h(ii, ii) == 0.0 ? 0.0 : s / h(ii, ii);
    }
    if constexpr (flexible) {
      for (std::size_t j = 0; j < k; ++j) vec::axpy(y[j], precond[j].span(), x);
    } else {
      // V y into z, then x += M^{-1} (V y); V_0 is free as the output buffer.
      vec::fill(z->span(), 0.0);
      for (std::size_t j = 0; j < k; ++j) vec::axpy(y[j], basis[j].span(), z->span());
      prec(basis[0].span(), z->span());
      ++stats.precond_applications;
      vec::axpy(1.0, basis[0].span(), x);
    }
    const double cycle_end = stats.residual_history.back();
    if (cycle_end <= target || happy) {
      stats.converged = true;
      break;
    }
    if (stats.iterations >= control.max_iters) break;
    if (cycle_end >= cycle_start * (1.0 - 1e-12)) {
      stats.breakdown = true;
      stats.message = "gmres: stagnation over a full restart cycle";
      break;
    }
  }
  if (!stats.converged && stats.message.empty()) stats.message = "gmres: iteration cap reached";
  finish(stats, ledger);
  return stats;
}

}  // namespace detail

/// Restarted GMRES, right preconditioned; the preconditioner must be a fixed linear map.
template <LinearMap Op, LinearMap Prec>
SolverStats gmres(const Op& op, Prec&& prec, std::span<const double> b, std::span<double> x, const SolveControl& control) {
  return detail::gmres_impl<false>(op, prec, b, x, control);
}

/// Flexible GMRES: stores the preconditioned basis, so the preconditioner may change
/// between applications.
template <LinearMap Op, LinearMap Prec>
SolverStats fgmres(const Op& op, Prec&& prec, std::span<const double> b, std::span<double> x, const SolveControl& control) {
  return detail::gmres_impl<true>(op, prec, b, x, control);
}

struct IdrParams {
  int s = 2;
  double kappa = 0.7;
  std::uint64_t seed = 1234;
};

/// IDR(s) with biorthogonalization (the "elegant" variant), preconditioned so that x is
/// updated with preconditioned directions and r stays the unpreconditioned residual.
/// Storage is exactly 5 + 3s solver vectors: r, v, t, two scratch vectors and the P, U, G
/// blocks. One iteration is s inner steps plus one dimension-reduction step, i.e. s+1
/// operator and preconditioner applications; convergence is tested after each iteration.
template <LinearMap Op, LinearMap Prec>
SolverStats idr_s(const Op& op, Prec&& prec, std::span<const double> b, std::span<double> x, const IdrParams& params,
                  const SolveControl& control) {
  control.validate();
  if (params.s < 1) throw std::invalid_argument("idr_s: s must be >= 1");
  const std::size_t n = b.size();
  const auto s = static_cast<std::size_t>(params.s);
  if (x.size() != n) throw std::invalid_argument("idr_s: size mismatch");
  VectorLedger ledger;
  SolverStats stats;
  using Role = VectorLedger::Role;

  LedgerVector r(ledger, n), v(ledger, n), t(ledger, n), uhat(ledger, n), ghat(ledger, n);
  std::vector<LedgerVector> P, U, G;
  for (std::size_t k = 0; k < s; ++k) {
    P.emplace_back(ledger, n, Role::krylov);
    U.emplace_back(ledger, n, Role::krylov);
    G.emplace_back(ledger, n, Role::krylov);
  }

  std::uint64_t shadow_seed = params.seed;
  auto make_shadow = [&] {
    std::mt19937_64 rng(shadow_seed);
    for (std::size_t k = 0; k < s; ++k) {
      for (std::size_t i = 0; i < n; ++i) P[k][i] = 2.0 * unit_uniform(rng) - 1.0;
      for (std::size_t j = 0; j < k; ++j) vec::axpy(-vec::dot(P[k].span(), P[j].span()), P[j].span(), P[k].span());
      const double nrm = vec::norm(P[k].span());
      if (nrm == 0.0) throw SolverError("idr_s: degenerate shadow space");
      vec::scale(1.0 / nrm, P[k].span());
    }
  };
  std::vector<double> M(s * s), f(s), c(s);
  double om = 1.0;
  auto reset_space = [&] {
    for (std::size_t k = 0; k < s; ++k) {
      vec::fill(U[k].span(), 0.0);
      vec::fill(G[k].span(), 0.0);
    }
    std::fill(M.begin(), M.end(), 0.0);
    for (std::size_t k = 0; k < s; ++k) M[k * s + k] = 1.0;
    om = 1.0;
  };
  make_shadow();
  reset_space();

  op(r.span(), std::span<const double>(x.data(), n));
  ++stats.matvec_count;
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  const double bnorm = vec::norm(b);
  double rnorm = vec::norm(r.span());
  stats.residual_history.push_back(rnorm);
  if (bnorm == 0.0) {
    vec::fill(x, 0.0);
    stats.converged = true;
    detail::finish(stats, ledger);
    return stats;
  }
  const double target = control.reduction_target * bnorm;
  if (rnorm <= target) stats.converged = true;
  bool restarted = false;

  auto handle_breakdown = [&](const char* what) {
    if (!restarted) {
      restarted = true;
      shadow_seed = mix_seed(shadow_seed);
      make_shadow();
      reset_space();
      return true;
    }
    stats.breakdown = true;
    stats.message = std::string("idr_s: breakdown (") + what + ") after shadow-space restart";
    return false;
  };

  while (!stats.converged && stats.iterations < control.max_iters) {
    for (std::size_t k = 0; k < s; ++k) f[k] = vec::dot(P[k].span(), r.span());
    bool broke = false;
    for (std::size_t k = 0; k < s; ++k) {
      // M(k:s,k:s) c = f(k:s), lower triangular
      for (std::size_t i = k; i < s; ++i) {
        double acc = f[i];
        for (std::size_t j = k; j < i; ++j) acc -= M[i * s + j] * c[j];
        c[i] = acc / M[i * s + i];
      }
      vec::copy(r.span(), v.span());
      for (std::size_t i = k; i < s; ++i) vec::axpy(-c[i], G[i].span(), v.span());
      prec(t.span(), v.span());
      ++stats.precond_applications;
      for (std::size_t i = 0; i < n; ++i) uhat[i] = om * t[i];
      for (std::size_t i = k; i < s; ++i) vec::axpy(c[i], U[i].span(), uhat.span());
      op(ghat.span(), uhat.span());
      ++stats.matvec_count;
      for (std::size_t i = 0; i < k; ++i) {
        const double alpha = vec::dot(P[i].span(), ghat.span()) / M[i * s + i];
        vec::axpy(-alpha, G[i].span(), ghat.span());
        vec::axpy(-alpha, U[i].span(), uhat.span());
      }
      U[k].swap_data(uhat);
      G[k].swap_data(ghat);
      for (std::size_t i = k; i < s; ++i) M[i * s + k] = vec::dot(P[i].span(), G[k].span());
      if (std::abs(M[k * s + k]) <= 1e-300 || !std::isfinite(M[k * s + k])) {
        broke = true;
        break;
      }
      const double beta = f[k] / M[k * s + k];
      vec::axpy(-beta, G[k].span(), r.span());
      vec::axpy(beta, U[k].span(), x);
      for (std::size_t i = k + 1; i < s; ++i) f[i] -= beta * M[i * s + k];
    }
    if (broke) {
      if (!handle_breakdown("singular projected system")) break;
      continue;
    }
    prec(v.span(), r.span());
    ++stats.precond_applications;
    op(t.span(), v.span());
    ++stats.matvec_count;
    const double nt = vec::norm(t.span());
    const double ts = vec::dot(t.span(), r.span());
    const double nr = vec::norm(r.span());
    ++stats.iterations;
    if (nt == 0.0 || ts == 0.0) {
      rnorm = nr;
      stats.residual_history.push_back(rnorm);
      if (rnorm <= target) {
        stats.converged = true;
        break;
      }
      if (!handle_breakdown("zero omega")) break;
      continue;
    }
    om = ts / (nt * nt);
    const double rho = std::abs(ts / (nt * nr));
    if (rho < params.kappa) om *= params.kappa / rho;
    vec::axpy(-om, t.span(), r.span());
    vec::axpy(om, v.span(), x);
    rnorm = vec::norm(r.span());
    stats.residual_history.push_back(rnorm);
    if (rnorm <= target) stats.converged = true;
  }
  if (!stats.converged && stats.message.empty()) stats.message = "idr_s: iteration cap reached";
  detail::finish(stats, ledger);
  return stats;
}

}  // namespace stokes_gmg

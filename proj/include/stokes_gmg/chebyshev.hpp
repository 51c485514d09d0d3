#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "linalg.hpp"
#include "viscosity.hpp"

namespace stokes_gmg {

struct ChebyshevParams {
  int degree = 4;
  int eig_estimate_iters = 10;
  /// smoothing interval is [lambda_max / alpha_low, alpha_high * lambda_max]
  double alpha_low = 4.0;
  double alpha_high = 1.2;
  std::uint64_t seed = 42;

  void validate() const {
    if (degree < 1) throw std::invalid_argument("ChebyshevParams: degree must be >= 1");
    if (eig_estimate_iters < 1) throw std::invalid_argument("ChebyshevParams: need at least one estimation step");
    if (!(alpha_low >= 1.0) || !(alpha_high >= 1.0)) throw std::invalid_argument("ChebyshevParams: bad range scaling");
  }
};

struct EigenEstimate {
  double lambda_max = 0.0;  // largest Ritz value
  double upper = 0.0;       // lambda_max * alpha_high
  int steps = 0;
  bool used_power_fallback = false;
};

/// Estimates the largest eigenvalue of diag^{-1} op with Lanczos on the symmetrically
/// scaled operator diag^{-1/2} op diag^{-1/2}, from a fixed-seed random start.
/// An invariant subspace found at the first step falls back to power iteration.
template <LinearMap Op>
EigenEstimate estimate_lambda_max(const Op& op, std::span<const double> diag, const ChebyshevParams& params) {
  const std::size_t n = diag.size();
  if (n == 0) throw std::invalid_argument("estimate_lambda_max: empty operator");
  std::vector<double> isd(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0)) throw std::domain_error("estimate_lambda_max: diagonal must be positive");
    isd[i] = 1.0 / std::sqrt(diag[i]);
  }
  auto scaled = [&](std::span<double> dst, std::span<const double> src, std::vector<double>& tmp) {
    tmp.resize(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = isd[i] * src[i];
    op(dst, std::span<const double>(tmp));
    for (std::size_t i = 0; i < n; ++i) dst[i] *= isd[i];
  };

  std::mt19937_64 rng(params.seed);
  std::vector<double> v(n), v_prev(n, 0.0), w(n), tmp;
  for (auto& e : v) e = 2.0 * unit_uniform(rng) - 1.0;
  vec::scale(1.0 / vec::norm(v), v);
  const std::vector<double> start = v;

  std::vector<double> alpha, beta;
  double beta_prev = 0.0;
  EigenEstimate est;
  for (int j = 0; j < params.eig_estimate_iters; ++j) {
    scaled(w, v, tmp);
    vec::axpy(-beta_prev, v_prev, w);
    const double a = vec::dot(w, v);
    vec::axpy(-a, v, w);
    alpha.push_back(a);
    const double b = vec::norm(w);
    ++est.steps;
    if (b <= 1e-12 * std::max(1.0, std::abs(a))) break;
    if (j + 1 == params.eig_estimate_iters) break;
    beta.push_back(b);
    v_prev.swap(v);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / b;
    beta_prev = b;
  }

  if (alpha.size() == 1 && est.steps < params.eig_estimate_iters) {
    // breakdown on the first step: power iteration on the same start
    est.used_power_fallback = true;
    v = start;
    double rq = 0.0;
    for (int j = 0; j < params.eig_estimate_iters; ++j) {
      scaled(w, v, tmp);
      rq = vec::dot(w, v);
      const double nw = vec::norm(w);
      if (nw == 0.0) break;
      for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
    }
    est.lambda_max = rq;
  } else {
    const auto m = static_cast<Eigen::Index>(alpha.size());
    Eigen::VectorXd d = Eigen::Map<const Eigen::VectorXd>(alpha.data(), m);
    Eigen::VectorXd e(std::max<Eigen::Index>(m - 1, 0));
    for (Eigen::Index i = 0; i + 1 < m; ++i) e[i] = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
    est.lambda_max = es.eigenvalues().maxCoeff();
  }
  if (!(est.lambda_max > 0.0)) throw std::domain_error("estimate_lambda_max: operator is not positive definite");
  est.upper = params.alpha_high * est.lambda_max;
  return est;
}

/// Chebyshev iteration for op x = b, Jacobi preconditioned, targeting the eigenvalue
/// interval [lower, upper] of diag^{-1} op. The error is multiplied by
/// T_k((theta - lambda)/delta) / T_k(theta/delta) with theta, delta the interval center
/// and half-width.
class ChebyshevSmoother {
 public:
  ChebyshevSmoother() = default;
  ChebyshevSmoother(LinearFn op, std::vector<double> diag, double lower, double upper, int degree)
      : op_(std::move(op)), inv_diag_(std::move(diag)), lower_(lower), upper_(upper), degree_(degree) {
    if (degree < 1) throw std::invalid_argument("ChebyshevSmoother: degree must be >= 1");
    if (!(lower > 0.0) || !(upper >= lower)) throw std::invalid_argument("ChebyshevSmoother: invalid eigenvalue range");
    for (auto& d : inv_diag_) {
      if (!(d > 0.0)) throw std::domain_error("ChebyshevSmoother: diagonal must be positive");
      d = 1.0 / d;
    }
  }

  [[nodiscard]] double lower() const { return lower_; }
  [[nodiscard]] double upper() const { return upper_; }
  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] std::size_t size() const { return inv_diag_.size(); }

  /// Smooths x in place; x_is_zero skips the initial residual product.
  void smooth(std::span<const double> b, std::span<double> x, bool x_is_zero = false) const {
    const std::size_t n = inv_diag_.size();
    if (b.size() != n || x.size() != n) throw std::invalid_argument("ChebyshevSmoother: size mismatch");
    r_.resize(n);
    d_.resize(n);
    ad_.resize(n);
    if (x_is_zero) {
      vec::copy(b, r_);
      vec::fill(x, 0.0);
    } else {
      op_(ad_, std::span<const double>(x.data(), n));
      for (std::size_t i = 0; i < n; ++i) r_[i] = b[i] - ad_[i];
    }
    const double theta = 0.5 * (upper_ + lower_);
    const double delta = 0.5 * (upper_ - lower_);
    if (delta <= 1e-14 * theta) {
      for (int k = 1; k <= degree_; ++k) {
        for (std::size_t i = 0; i < n; ++i) x[i] += inv_diag_[i] * r_[i] / theta;
        if (k == degree_) break;
        op_(ad_, std::span<const double>(x.data(), n));
        for (std::size_t i = 0; i < n; ++i) r_[i] = b[i] - ad_[i];
      }
      return;
    }
    const double sigma = theta / delta;
    double rho = 1.0 / sigma;
    for (std::size_t i = 0; i < n; ++i) d_[i] = inv_diag_[i] * r_[i] / theta;
    for (int k = 1; k <= degree_; ++k) {
      vec::axpy(1.0, d_, x);
      if (k == degree_) break;
      op_(ad_, d_);
      vec::axpy(-1.0, ad_, r_);
      const double rho_new = 1.0 / (2.0 * sigma - rho);
      const double c1 = rho_new * rho, c2 = 2.0 * rho_new / delta;
      for (std::size_t i = 0; i < n; ++i) d_[i] = c1 * d_[i] + c2 * inv_diag_[i] * r_[i];
      rho = rho_new;
    }
  }

  /// Applies the smoother from a zero start: dst = q(D^{-1} op) D^{-1} src.
  void operator()(std::span<double> dst, std::span<const double> src) const { smooth(src, dst, true); }

  [[nodiscard]] std::size_t memory_bytes() const {
    return (inv_diag_.capacity() + r_.capacity() + d_.capacity() + ad_.capacity()) * sizeof(double);
  }

 private:
  LinearFn op_;
  std::vector<double> inv_diag_;
  double lower_ = 1.0, upper_ = 1.0;
  int degree_ = 1;
  mutable std::vector<double> r_, d_, ad_;
};

/// Builds a smoother on [lambda_max/alpha_low, alpha_high*lambda_max] from a fresh estimate.
inline ChebyshevSmoother make_chebyshev_smoother(LinearFn op, std::vector<double> diag, const ChebyshevParams& params,
                                                 EigenEstimate* estimate_out = nullptr) {
  params.validate();
  const EigenEstimate est = estimate_lambda_max(op, diag, params);
  if (estimate_out) *estimate_out = est;
  return ChebyshevSmoother(std::move(op), std::move(diag), est.lambda_max / params.alpha_low, est.upper, params.degree);
}

/// dst = Chebyshev smoothing of src starting from x0 (free-function form).
inline void chebyshev_smooth(const ChebyshevSmoother& smoother, std::span<const double> b, std::span<double> x) {
  smoother.smooth(b, x, false);
}

}  // namespace stokes_gmg

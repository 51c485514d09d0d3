#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace stokes_gmg {

/// Tensor-product Lagrange basis of per-axis degree 1 or 2 on the reference cell [0,1]^dim,
/// with equispaced nodes. Local index i runs lexicographically over node tuples, x fastest.
template <int dim>
class ScalarBasis {
 public:
  explicit ScalarBasis(int degree) : degree_(degree) {
    if (degree != 1 && degree != 2) throw std::invalid_argument("ScalarBasis: degree must be 1 or 2");
    for (int i = 0; i <= degree; ++i) nodes_.push_back(static_cast<double>(i) / degree);
  }

  [[nodiscard]] int degree() const { return degree_; }
  [[nodiscard]] int nodes_per_axis() const { return degree_ + 1; }
  [[nodiscard]] std::size_t size() const {
    std::size_t n = 1;
    for (int d = 0; d < dim; ++d) n *= static_cast<std::size_t>(degree_ + 1);
    return n;
  }
  [[nodiscard]] const std::vector<double>& nodes() const { return nodes_; }

  /// 1D Lagrange polynomial `a` and its derivative at t.
  [[nodiscard]] double value_1d(int a, double t) const {
    double v = 1.0;
    for (int m = 0; m <= degree_; ++m)
      if (m != a) v *= (t - nodes_[static_cast<std::size_t>(m)]) / (nodes_[static_cast<std::size_t>(a)] - nodes_[static_cast<std::size_t>(m)]);
    return v;
  }
  [[nodiscard]] double derivative_1d(int a, double t) const {
    const double xa = nodes_[static_cast<std::size_t>(a)];
    double sum = 0.0;
    for (int k = 0; k <= degree_; ++k) {
      if (k == a) continue;
      double term = 1.0 / (xa - nodes_[static_cast<std::size_t>(k)]);
      for (int m = 0; m <= degree_; ++m)
        if (m != a && m != k) term *= (t - nodes_[static_cast<std::size_t>(m)]) / (xa - nodes_[static_cast<std::size_t>(m)]);
      sum += term;
    }
    return sum;
  }

  /// Per-axis node indices of local function i.
  [[nodiscard]] std::array<int, dim> node_tuple(std::size_t i) const {
    std::array<int, dim> t{};
    for (int d = 0; d < dim; ++d) {
      t[static_cast<std::size_t>(d)] = static_cast<int>(i % static_cast<std::size_t>(degree_ + 1));
      i /= static_cast<std::size_t>(degree_ + 1);
    }
    return t;
  }

 private:
  int degree_;
  std::vector<double> nodes_;
};

template <int dim>
struct ShapeValue {
  double value = 0.0;
  std::array<double, dim> gradient{};
};

/// Value and reference gradient of local shape function i at reference point x.
template <int dim>
ShapeValue<dim> shape_eval(const ScalarBasis<dim>& basis, std::size_t i, const std::array<double, dim>& x) {
  if (i >= basis.size()) throw std::out_of_range("shape_eval: local index out of range");
  const auto t = basis.node_tuple(i);
  std::array<double, dim> v{}, dv{};
  for (int d = 0; d < dim; ++d) {
    v[static_cast<std::size_t>(d)] = basis.value_1d(t[static_cast<std::size_t>(d)], x[static_cast<std::size_t>(d)]);
    dv[static_cast<std::size_t>(d)] = basis.derivative_1d(t[static_cast<std::size_t>(d)], x[static_cast<std::size_t>(d)]);
  }
  ShapeValue<dim> out;
  out.value = 1.0;
  for (int d = 0; d < dim; ++d) out.value *= v[static_cast<std::size_t>(d)];
  for (int g = 0; g < dim; ++g) {
    double prod = 1.0;
    for (int d = 0; d < dim; ++d) prod *= (d == g) ? dv[static_cast<std::size_t>(d)] : v[static_cast<std::size_t>(d)];
    out.gradient[static_cast<std::size_t>(g)] = prod;
  }
  return out;
}

/// Quadrature on the reference cell [0,1]^dim; weights sum to 1.
template <int dim>
struct QuadratureRule {
  std::vector<std::array<double, dim>> points;
  std::vector<double> weights;
  int points_per_axis = 0;

  [[nodiscard]] std::size_t size() const { return points.size(); }
};

/// Gauss-Legendre nodes and weights on [0,1].
inline void gauss_legendre_1d(int n, std::vector<double>& x, std::vector<double>& w) {
  if (n < 1) throw std::invalid_argument("gauss_legendre_1d: need at least one point");
  x.assign(static_cast<std::size_t>(n), 0.0);
  w.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess.
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
    }
    const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    x[lo] = 0.5 * (1.0 - z);
    x[hi] = 0.5 * (1.0 + z);
    w[lo] = 0.5 * wt;
    w[hi] = 0.5 * wt;
  }
  if (n % 2 == 1) x[static_cast<std::size_t>(n / 2)] = 0.5;
  // the weight formula loses a few ulps; rescale so the weights sum to the interval length
  double sum = 0.0;
  for (double v : w) sum += v;
  for (double& v : w) v /= sum;
}

/// Tensor-product Gauss rule, exact for per-axis degree <= 2*points_per_axis-1.
template <int dim>
QuadratureRule<dim> make_gauss_rule(int points_per_axis) {
  std::vector<double> x, w;
  gauss_legendre_1d(points_per_axis, x, w);
  QuadratureRule<dim> rule;
  rule.points_per_axis = points_per_axis;
  std::size_t total = 1;
  for (int d = 0; d < dim; ++d) total *= x.size();
  for (std::size_t q = 0; q < total; ++q) {
    std::array<double, dim> pt{};
    double wt = 1.0;
    std::size_t rem = q;
    for (int d = 0; d < dim; ++d) {
      const std::size_t k = rem % x.size();
      rem /= x.size();
      pt[static_cast<std::size_t>(d)] = x[k];
      wt *= w[k];
    }
    rule.points.push_back(pt);
    rule.weights.push_back(wt);
  }
  return rule;
}

}  // namespace stokes_gmg

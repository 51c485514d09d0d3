#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace stokes_gmg {

/// dst = Op(src). Used for operators, smoothers and preconditioners alike.
using LinearFn = std::function<void(std::span<double>, std::span<const double>)>;

template <class F>
concept LinearMap = std::invocable<F&, std::span<double>, std::span<const double>>;

namespace vec {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// y += alpha x
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}
/// y = x + beta y
inline void xpby(std::span<const double> x, double beta, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] + beta * y[i];
}
inline void scale(double alpha, std::span<double> x) {
  for (auto& v : x) v *= alpha;
}
inline void copy(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i];
}
inline void fill(std::span<double> x, double v) {
  for (auto& e : x) e = v;
}

}  // namespace vec

/// Identity preconditioner.
struct IdentityMap {
  void operator()(std::span<double> dst, std::span<const double> src) const { vec::copy(src, dst); }
};

}  // namespace stokes_gmg

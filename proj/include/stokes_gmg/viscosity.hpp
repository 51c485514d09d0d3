#pragma once

#include <algorithm>
#include <array>
#include <concepts>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "fem_basis.hpp"
#include "mesh.hpp"

namespace stokes_gmg {

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw. Platform independent,
/// unlike std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// SplitMix64 finalizer, used to derive per-run seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Parameters of the multi-sinker viscosity benchmark.
template <int dim>
struct SinkerConfig {
  double dynamic_ratio = 1.0e4;
  double delta = 200.0;
  double omega = 0.1;
  double beta = 10.0;
  std::uint64_t seed = 20190513;
  std::vector<std::array<double, dim>> centers;

  [[nodiscard]] std::size_t n() const { return centers.size(); }
  [[nodiscard]] double mu_min() const { return 1.0 / std::sqrt(dynamic_ratio); }
  [[nodiscard]] double mu_max() const { return std::sqrt(dynamic_ratio); }

  void validate() const {
    if (!(dynamic_ratio >= 1.0)) throw std::invalid_argument("SinkerConfig: dynamic_ratio must be >= 1");
    if (!(delta > 0.0) || !(omega >= 0.0)) throw std::invalid_argument("SinkerConfig: delta must be > 0, omega >= 0");
    for (const auto& c : centers)
      for (double v : c)
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("SinkerConfig: sinker center outside the unit box");
  }
};

/// Draws n centers uniformly from [omega/2, 1-omega/2]^dim with mt19937_64(seed).
template <int dim>
std::vector<std::array<double, dim>> generate_sinker_centers(std::size_t n, double omega, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double lo = 0.5 * omega, span = 1.0 - omega;
  std::vector<std::array<double, dim>> out(n);
  for (auto& c : out)
    for (auto& v : c) v = lo + span * unit_uniform(rng);
  return out;
}

template <int dim>
SinkerConfig<dim> make_sinker_config(std::size_t n_sinkers, double dynamic_ratio, std::uint64_t seed) {
  SinkerConfig<dim> cfg;
  cfg.dynamic_ratio = dynamic_ratio;
  cfg.seed = seed;
  cfg.centers = generate_sinker_centers<dim>(n_sinkers, cfg.omega, seed);
  return cfg;
}

/// Indicator X(x) in [0,1]: 0 inside a sinker, approaching 1 far from all sinkers.
template <int dim>
double chi(const std::array<double, dim>& x, const SinkerConfig<dim>& cfg) {
  double prod = 1.0;
  for (const auto& c : cfg.centers) {
    double r2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double diff = c[static_cast<std::size_t>(d)] - x[static_cast<std::size_t>(d)];
      r2 += diff * diff;
    }
    const double gap = std::max(0.0, std::sqrt(r2) - 0.5 * cfg.omega);
    prod *= 1.0 - std::exp(-cfg.delta * gap * gap);
  }
  return prod;
}

template <int dim>
double mu(const std::array<double, dim>& x, const SinkerConfig<dim>& cfg) {
  const double X = chi<dim>(x, cfg);
  return X * cfg.mu_min() + (1.0 - X) * cfg.mu_max();
}

/// Body force pulling sinkers along the negative last axis.
template <int dim>
std::array<double, dim> forcing(const std::array<double, dim>& x, const SinkerConfig<dim>& cfg) {
  std::array<double, dim> f{};
  f[dim - 1] = cfg.beta * (chi<dim>(x, cfg) - 1.0);
  return f;
}

/// One constant viscosity per cell on every level of the hierarchy.
struct ViscosityField {
  std::vector<std::vector<double>> levels;

  [[nodiscard]] const std::vector<double>& level(int l) const { return levels.at(static_cast<std::size_t>(l)); }
  [[nodiscard]] std::size_t memory_bytes() const {
    std::size_t b = 0;
    for (const auto& l : levels) b += l.capacity() * sizeof(double);
    return b;
  }
};

/// Fills the active level with the unweighted harmonic mean of mu over each cell's
/// mapped quadrature points. Coarser levels are left empty.
template <int dim, class MuFn>
  requires std::invocable<MuFn&, const std::array<double, dim>&>
ViscosityField average_active_viscosity(const MeshHierarchy<dim>& mesh, MuFn&& mu_fn, const QuadratureRule<dim>& rule) {
  if (rule.size() == 0) throw std::invalid_argument("average_active_viscosity: empty quadrature rule");
  const int fine = mesh.finest_level();
  const double h = MeshHierarchy<dim>::cell_size(fine);
  ViscosityField field;
  field.levels.resize(static_cast<std::size_t>(mesh.n_levels()));
  auto& values = field.levels.back();
  values.resize(MeshHierarchy<dim>::n_cells(fine));
  for (std::size_t c = 0; c < values.size(); ++c) {
    const auto origin = mesh.cell_origin(fine, c);
    double inv_sum = 0.0;
    for (const auto& qp : rule.points) {
      std::array<double, dim> x{};
      for (int d = 0; d < dim; ++d) x[static_cast<std::size_t>(d)] = origin[static_cast<std::size_t>(d)] + h * qp[static_cast<std::size_t>(d)];
      const double m = mu_fn(x);
      if (!(m > 0.0)) throw std::domain_error("average_active_viscosity: non-positive viscosity at a quadrature point");
      inv_sum += 1.0 / m;
    }
    values[c] = static_cast<double>(rule.size()) / inv_sum;
  }
  return field;
}

template <int dim>
ViscosityField average_active_viscosity(const MeshHierarchy<dim>& mesh, const SinkerConfig<dim>& cfg,
                                        const QuadratureRule<dim>& rule) {
  return average_active_viscosity<dim>(mesh, [&cfg](const std::array<double, dim>& x) { return mu<dim>(x, cfg); }, rule);
}

/// Parent value = arithmetic mean of its children, recursively from the finest level down.
template <int dim>
ViscosityField restrict_viscosity(ViscosityField field, const MeshHierarchy<dim>& mesh) {
  if (field.levels.size() != static_cast<std::size_t>(mesh.n_levels()) ||
      field.levels.back().size() != MeshHierarchy<dim>::n_cells(mesh.finest_level()))
    throw std::invalid_argument("restrict_viscosity: finest level not filled");
  constexpr double inv_children = 1.0 / (1 << dim);
  for (int l = mesh.finest_level(); l > 0; --l) {
    const auto& fine = field.levels[static_cast<std::size_t>(l)];
    auto& coarse = field.levels[static_cast<std::size_t>(l - 1)];
    coarse.assign(MeshHierarchy<dim>::n_cells(l - 1), 0.0);
    for (std::size_t c = 0; c < fine.size(); ++c) coarse[mesh.parent_index(l, c)] += inv_children * fine[c];
  }
  return field;
}

/// Constant viscosity on every level.
template <int dim>
ViscosityField constant_viscosity(const MeshHierarchy<dim>& mesh, double value) {
  ViscosityField field;
  for (int l = 0; l < mesh.n_levels(); ++l) field.levels.emplace_back(MeshHierarchy<dim>::n_cells(l), value);
  return field;
}

}  // namespace stokes_gmg

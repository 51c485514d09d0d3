// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "oracle/assembly_oracle.hpp"
#include "stokes_gmg/stokes_gmg.hpp"
#include "test_util.hpp"

using namespace stokes_gmg;
using testutil::dense_of;
using testutil::random_vector;
using testutil::to_eigen;

namespace {

// pinned tolerances
constexpr int kExactMaxIters = 3;
constexpr double kExactReduction = 1e-10;
constexpr double kOracleRelErr = 1e-12;
constexpr int kOracleVectors = 20;
constexpr int kHRobustSpread = 3;
constexpr double kShapeRatioLo = 1.6, kShapeRatioHi = 2.5;
constexpr int kIdrPeak = 11;
constexpr int kFgmresKrylov = 101;
constexpr int kFgmresOverhead = 0;  // FGMRES owns no vectors outside its two bases
constexpr double kVelocityOrder = 2.8, kPressureOrder = 1.8;
constexpr double kSchurWidthRatio = 2.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string join(const std::vector<int>& v) {
  std::ostringstream s;
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  return s.str();
}

RunConfig benchmark_config(int dim, int levels) {
  RunConfig c;
  c.dim = dim;
  c.levels = levels;
  c.sinkers = 4;
  c.dynamic_ratio = 1e4;
  return c;
}

// 1. exact inner solves make the preconditioned operator have a single eigenvalue
Outcome exact_preconditioner() {
  const auto disc = make_constant_discretization<2>(2, 1.0);
  const auto& ctx = disc->active();
  const auto nu = static_cast<Eigen::Index>(ctx.n_u()), np = static_cast<Eigen::Index>(ctx.n_p());
  const Eigen::MatrixXd A = dense_of([&](auto d, auto s) { ctx.apply_A(d, s); }, ctx.n_u(), ctx.n_u());
  const Eigen::MatrixXd B = dense_of([&](auto d, auto s) { ctx.apply_B(d, s); }, ctx.n_u(), ctx.n_p());
  const Eigen::MatrixXd Ainv = A.inverse();
  const Eigen::MatrixXd Sinv = (B * Ainv * B.transpose()).completeOrthogonalDecomposition().pseudoInverse();
  Eigen::MatrixXd Pinv = Eigen::MatrixXd::Zero(nu + np, nu + np);
  Pinv.topLeftCorner(nu, nu) = Ainv;
  Pinv.topRightCorner(nu, np) = Ainv * B.transpose() * Sinv;
  Pinv.bottomRightCorner(np, np) = -Sinv;
  auto op = [&](std::span<double> d, std::span<const double> s) { ctx.apply_stokes(d, s); };
  auto prec = [&](std::span<double> d, std::span<const double> s) {
    Eigen::Map<Eigen::VectorXd>(d.data(), nu + np) = Pinv * to_eigen(s);
  };
  BlockVector b(ctx.dofs());
  const auto u = random_vector(ctx.n_u(), 1);
  std::copy(u.begin(), u.end(), b.u().begin());
  zero_constrained<2>(b.u(), ctx.dofs());
  SolveControl c;
  c.reduction_target = kExactReduction;
  std::vector<double> x(b.size(), 0.0);
  const auto dense = gmres(op, prec, b.data(), x, c);

  PrecondConfig pc;
  pc.a_inv = AInverse::exact_inner_solve;
  pc.s_inv = SInverse::exact_inner_solve;
  const StokesPreconditioner<2> P(*disc, pc);
  BlockVector y(ctx.dofs());
  const auto mf = solve_stokes(*disc, P, OuterSolver::gmres, b, y, c);
  Outcome o;
  o.pass = dense.converged && mf.converged && dense.iterations <= kExactMaxIters && mf.iterations <= kExactMaxIters;
  o.detail = "gmres iterations to 1e-10: dense inner " + std::to_string(dense.iterations) + ", matrix-free exact inner " +
             std::to_string(mf.iterations) + " (limit " + std::to_string(kExactMaxIters) + ")";
  return o;
}

// 2. matrix-free operators against brute-force assembled matrices
template <int dim>
double oracle_worst(int level, std::uint64_t seed) {
  const auto dofs = distribute_level_dofs<dim>(level);
  std::mt19937_64 rng(seed);
  std::vector<double> mu(dofs.n_cells);
  for (auto& m : mu) m = std::pow(10.0, std::uniform_real_distribution<double>(-2, 2)(rng));
  const LevelOperatorContext<dim> ctx(dofs, mu, make_gauss_rule<dim>(3));
  const oracle::Assembly<dim> o(1 << level, mu);
  const Eigen::MatrixXd A = o.constrain_velocity(o.A), Ap = o.constrain_velocity(o.Apartial), B = o.constrained_B();
  double worst = 0.0;
  auto track = [&](const std::vector<double>& got, const Eigen::VectorXd& ref) {
    worst = std::max(worst, testutil::rel_err(to_eigen(got), ref));
  };
  for (int t = 0; t < kOracleVectors; ++t) {
    const auto u = random_vector(ctx.n_u(), seed * 1000 + t), p = random_vector(ctx.n_p(), seed * 2000 + t);
    std::vector<double> yu(ctx.n_u()), yp(ctx.n_p());
    ctx.apply_A(yu, u);
    track(yu, A * to_eigen(u));
    ctx.apply_A_partial(yu, u);
    track(yu, Ap * to_eigen(u));
    ctx.apply_B(yp, u);
    track(yp, B * to_eigen(u));
    ctx.apply_Bt(yu, p);
    track(yu, B.transpose() * to_eigen(p));
    ctx.apply_Mp(yp, p);
    track(yp, o.Mp * to_eigen(p));
  }
  return worst;
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  for (int l = 0; l <= 2; ++l) {
    worst = std::max(worst, oracle_worst<2>(l, 10 + l));
    worst = std::max(worst, oracle_worst<3>(l, 20 + l));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "A, A-partial, B, B^T, M_p on 1..4^dim cells, 2D+3D: worst relative error %.2e (limit %.0e)",
                worst, kOracleRelErr);
  return {worst < kOracleRelErr, buf};
}

// 3. outer iterations constant across refinement
Outcome h_robustness() {
  std::vector<int> its;
  bool ok = true;
  for (int levels : {3, 4, 5}) {
    const auto rec = run_benchmark(benchmark_config(3, levels));
    ok = ok && rec.converged && rec.residual_consistent;
    its.push_back(rec.stats.iterations);
  }
  const auto [lo, hi] = std::minmax_element(its.begin(), its.end());
  return {ok && *hi - *lo <= kHRobustSpread,
          "3D 4 sinkers DR=1e4 fgmres+cg, levels 3,4,5: iterations " + join(its) + ", spread " +
              std::to_string(*hi - *lo) + " (limit " + std::to_string(kHRobustSpread) + ")"};
}

// 4. block-triangular needs about half the iterations of block-diagonal
Outcome triangular_vs_diagonal() {
  bool ok = true;
  std::ostringstream s;
  // the two finest levels of the refinement study; the 3-level mesh (4^3 cells) is pre-asymptotic
  s << "3D 4 sinkers DR=1e4:";
  for (int levels : {4, 5}) {
    RunConfig c = benchmark_config(3, levels);
    const auto tri = run_benchmark(c);
    c.shape = PrecondShape::diagonal;
    const auto dia = run_benchmark(c);
    const double ratio = double(dia.stats.iterations) / double(std::max(tri.stats.iterations, 1));
    ok = ok && tri.converged && dia.converged && ratio >= kShapeRatioLo && ratio <= kShapeRatioHi;
    char buf[96];
    std::snprintf(buf, sizeof buf, " levels %d diag/tri %d/%d = %.2f;", levels, dia.stats.iterations, tri.stats.iterations,
                  ratio);
    s << buf;
  }
  s << " (window [" << kShapeRatioLo << ", " << kShapeRatioHi << "])";
  return {ok, s.str()};
}

// 5. harder contrast, more iterations
Outcome difficulty_monotonicity() {
  std::vector<int> its;
  bool ok = true;
  for (double dr : {1e2, 1e4, 1e6}) {
    RunConfig c = benchmark_config(2, 6);
    c.sinkers = 8;
    c.dynamic_ratio = dr;
    const auto rec = run_benchmark(c);
    ok = ok && rec.converged;
    its.push_back(rec.stats.iterations);
  }
  ok = ok && its[0] < its[1] && its[1] < its[2];
  return {ok, "2D levels 6, 8 sinkers, DR 1e2,1e4,1e6: iterations " + join(its) + " (must strictly increase)"};
}

// 6. storage ledger
Outcome storage_ledger() {
  RunConfig c = benchmark_config(3, 3);
  c.solver = OuterSolver::idr;
  const auto idr = run_benchmark(c);
  c.solver = OuterSolver::fgmres;
  c.reduction = 1e-14;
  c.max_iters = 60;
  const auto fg = run_benchmark(c);
  const int apps_gap = std::abs(idr.stats.precond_applications - 3 * idr.stats.iterations);
  const bool ok = idr.converged && idr.stats.peak_vector_count == kIdrPeak && apps_gap <= 1 && fg.stats.iterations > 50 &&
                  fg.stats.krylov_vector_count == kFgmresKrylov &&
                  fg.stats.peak_vector_count == kFgmresKrylov + kFgmresOverhead;
  std::ostringstream s;
  s << "idr(2) peak " << idr.stats.peak_vector_count << ", applications " << idr.stats.precond_applications << " for "
    << idr.stats.iterations << " iterations; fgmres(50) after " << fg.stats.iterations << " iterations: basis vectors "
    << fg.stats.krylov_vector_count << ", peak " << fg.stats.peak_vector_count << " (overhead " << kFgmresOverhead << ")";
  return {ok, s.str()};
}

// 7. manufactured solution
constexpr double pi = std::numbers::pi;

std::array<double, 2> mms_u(const std::array<double, 2>& x) {
  const double sx = std::sin(pi * x[0]), sy = std::sin(pi * x[1]);
  return {sx * sx * std::sin(2 * pi * x[1]), -std::sin(2 * pi * x[0]) * sy * sy};
}
double mms_p(const std::array<double, 2>& x) { return std::cos(pi * x[0]) * std::cos(pi * x[1]); }
std::array<double, 2> mms_f(const std::array<double, 2>& x) {
  const double X = x[0], Y = x[1];
  return {-2 * pi * pi * std::sin(2 * pi * Y) * (2 * std::cos(2 * pi * X) - 1) - pi * std::sin(pi * X) * std::cos(pi * Y),
          2 * pi * pi * std::sin(2 * pi * X) * (2 * std::cos(2 * pi * Y) - 1) - pi * std::cos(pi * X) * std::sin(pi * Y)};
}

// -div(2 eps(u)) + grad p by central differences, to check the forcing above
double mms_forcing_defect() {
  const double h = 1e-4;
  double worst = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.1, 0.9);
  auto grad = [&](auto&& g, std::array<double, 2> x, int d) {
    auto a = x, b = x;
    a[d] += h;
    b[d] -= h;
    return (g(a) - g(b)) / (2 * h);
  };
  for (int t = 0; t < 20; ++t) {
    const std::array<double, 2> x{U(rng), U(rng)};
    for (int c = 0; c < 2; ++c) {
      // (div 2eps(u))_c = sum_d d_d (d_d u_c + d_c u_d)
      double div = 0.0;
      for (int d = 0; d < 2; ++d) {
        auto flux = [&](const std::array<double, 2>& y) {
          auto uc = [&](const std::array<double, 2>& z) { return mms_u(z)[c]; };
          auto ud = [&](const std::array<double, 2>& z) { return mms_u(z)[d]; };
          return grad(uc, y, d) + grad(ud, y, c);
        };
        div += grad(flux, x, d);
      }
      const double strong = -div + grad(mms_p, x, c);
      worst = std::max(worst, std::abs(strong - mms_f(x)[c]) / (1 + std::abs(mms_f(x)[c])));
    }
  }
  return worst;
}

std::pair<double, double> mms_errors(int levels) {
  const auto disc = make_constant_discretization<2>(levels, 1.0);
  const auto& ctx = disc->active();
  const auto& dofs = ctx.dofs();
  const BlockVector b = ctx.assemble_rhs([](const std::array<double, 2>& x) { return mms_f(x); });
  PrecondConfig pc;
  pc.a_inv = AInverse::exact_inner_solve;
  pc.s_inv = SInverse::exact_inner_solve;
  const StokesPreconditioner<2> P(*disc, pc);
  BlockVector x(dofs);
  SolveControl c;
  c.reduction_target = 1e-12;
  solve_stokes(*disc, P, OuterSolver::gmres, b, x, c);

  const ScalarBasis<2> q2(2), q1(1);
  const auto rule = make_gauss_rule<2>(5);
  const double h = dofs.h;
  const std::size_t nn = dofs.n_velocity_nodes;
  double eu = 0.0, ep = 0.0;
  for (std::size_t cell = 0; cell < dofs.n_cells; ++cell) {
    const double ox = double(cell % dofs.cells_per_axis) * h, oy = double(cell / dofs.cells_per_axis) * h;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const auto& r = rule.points[q];
      const std::array<double, 2> pt{ox + r[0] * h, oy + r[1] * h};
      std::array<double, 2> uh{0, 0};
      for (std::size_t a = 0; a < 9; ++a) {
        const double phi = shape_eval<2>(q2, a, r).value;
        const auto node = dofs.velocity_nodes[cell * 9 + a];
        uh[0] += phi * x.u()[node];
        uh[1] += phi * x.u()[nn + node];
      }
      double ph = 0.0;
      for (std::size_t a = 0; a < 4; ++a) ph += shape_eval<2>(q1, a, r).value * x.p()[dofs.pressure_nodes[cell * 4 + a]];
      const auto ue = mms_u(pt);
      const double w = rule.weights[q] * h * h;
      eu += w * (std::pow(uh[0] - ue[0], 2) + std::pow(uh[1] - ue[1], 2));
      ep += w * std::pow(ph - mms_p(pt), 2);
    }
  }
  return {std::sqrt(eu), std::sqrt(ep)};
}

Outcome manufactured_solution() {
  const double fd = mms_forcing_defect();
  std::vector<std::pair<double, double>> err;
  for (int levels : {3, 4, 5, 6}) err.push_back(mms_errors(levels));
  bool ok = fd < 1e-5;
  std::ostringstream s;
  s.precision(3);
  s << "2D mu=1, 4..32 cells per axis, orders u/p:";
  for (std::size_t k = 1; k < err.size(); ++k) {
    const double ou = std::log2(err[k - 1].first / err[k].first), op = std::log2(err[k - 1].second / err[k].second);
    ok = ok && ou >= kVelocityOrder && op >= kPressureOrder;
    s << " " << ou << "/" << op;
  }
  s << "; finest errors " << err.back().first << "/" << err.back().second << " (limits " << kVelocityOrder << "/"
    << kPressureOrder << ", forcing check " << fd << ")";
  return {ok, s.str()};
}

// 8. Schur complement against the pressure mass matrix
std::pair<double, double> schur_interval(int levels) {
  const auto disc = make_constant_discretization<2>(levels, 1.0);
  const auto& ctx = disc->active();
  const Eigen::MatrixXd A = dense_of([&](auto d, auto s) { ctx.apply_A(d, s); }, ctx.n_u(), ctx.n_u());
  const Eigen::MatrixXd B = dense_of([&](auto d, auto s) { ctx.apply_B(d, s); }, ctx.n_u(), ctx.n_p());
  const Eigen::MatrixXd M = dense_of([&](auto d, auto s) { ctx.apply_Mp(d, s); }, ctx.n_p(), ctx.n_p());
  const Eigen::MatrixXd S = B * A.ldlt().solve(B.transpose());
  // constants span the kernel of S; work on their orthogonal complement
  const auto np = static_cast<Eigen::Index>(ctx.n_p());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(np).normalized();
  const Eigen::MatrixXd proj = Eigen::MatrixXd::Identity(np, np) - one * one.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pe(proj);
  const Eigen::MatrixXd Q = pe.eigenvectors().rightCols(np - 1);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(Q.transpose() * S * Q, Q.transpose() * M * Q,
                                                               Eigen::EigenvaluesOnly);
  return {ge.eigenvalues().minCoeff(), ge.eigenvalues().maxCoeff()};
}

Outcome schur_equivalence() {
  const auto a = schur_interval(2), b = schur_interval(3);
  const double wa = a.second - a.first, wb = b.second - b.first;
  const double ratio = std::max(wa, wb) / std::min(wa, wb);
  char buf[200];
  std::snprintf(buf, sizeof buf, "2x2 cells [%.4f, %.4f], 4x4 cells [%.4f, %.4f]: width ratio %.3f (limit %.1f)", a.first,
                a.second, b.first, b.second, ratio, kSchurWidthRatio);
  return {a.first > 0 && b.first > 0 && ratio <= kSchurWidthRatio, buf};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact-preconditioner identity", exact_preconditioner},
      {"matrix-free oracle equivalence", oracle_equivalence},
      {"GMG h-robustness", h_robustness},
      {"triangular vs diagonal", triangular_vs_diagonal},
      {"difficulty monotonicity", difficulty_monotonicity},
      {"storage ledger", storage_ledger},
      {"manufactured-solution convergence", manufactured_solution},
      {"Schur spectral equivalence", schur_equivalence},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %zu %s: %s | %s | %.1f s\n", i + 1, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}

#include <cmath>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "oracle/assembly_oracle.hpp"
#include "stokes_gmg/stokes_precond.hpp"
#include "test_util.hpp"

using namespace stokes_gmg;
using testutil::random_vector;
using testutil::to_eigen;

namespace {

PrecondConfig exact_config() {
  PrecondConfig cfg;
  cfg.a_inv = AInverse::exact_inner_solve;
  cfg.s_inv = SInverse::exact_inner_solve;
  return cfg;
}

template <int dim>
BlockVector random_rhs(const LevelDofs<dim>& dofs, std::uint64_t seed, bool with_pressure = false) {
  BlockVector b(dofs);
  const auto u = random_vector(dofs.n_u, seed);
  std::copy(u.begin(), u.end(), b.u().begin());
  zero_constrained<dim>(b.u(), dofs);
  if (with_pressure) {
    // pressure data must be orthogonal to constants to lie in the range of B
    const auto p = random_vector(dofs.n_p, seed + 1);
    double mean = 0.0;
    for (double v : p) mean += v;
    mean /= static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) b.p()[i] = p[i] - mean;
  }
  return b;
}

SolveControl control(double tol) {
  SolveControl c;
  c.reduction_target = tol;
  return c;
}

}  // namespace

TEST(StokesPrecond, ExactInnerSolvesConvergeInTwoIterations) {
  const auto disc = make_constant_discretization<2>(2, 1.0);
  const StokesPreconditioner<2> P(*disc, exact_config());
  for (bool with_p : {false, true}) {
    const auto b = random_rhs<2>(disc->active().dofs(), 3, with_p);
    BlockVector x(disc->active().dofs());
    const auto st = solve_stokes(*disc, P, OuterSolver::gmres, b, x, control(1e-10));
    EXPECT_TRUE(st.converged);
    EXPECT_LE(st.iterations, 3);
  }
  EXPECT_EQ(P.stats().warnings, 0);
}

TEST(StokesPrecond, DenseInnerSolveOracle) {
  // the same identity with a dense block-triangular inverse built from the assembly oracle
  const oracle::Assembly<2> o(2, std::vector<double>(4, 1.0));
  const Eigen::MatrixXd A = o.constrain_velocity(o.A), B = o.constrained_B();
  const Eigen::MatrixXd Ainv = A.inverse();
  const Eigen::MatrixXd S = B * Ainv * B.transpose();
  const Eigen::MatrixXd Sinv = S.completeOrthogonalDecomposition().pseudoInverse();
  const auto nu = static_cast<Eigen::Index>(o.nu), np = static_cast<Eigen::Index>(o.np);
  Eigen::MatrixXd Pinv = Eigen::MatrixXd::Zero(nu + np, nu + np);
  Pinv.topLeftCorner(nu, nu) = Ainv;
  Pinv.topRightCorner(nu, np) = Ainv * B.transpose() * Sinv;
  Pinv.bottomRightCorner(np, np) = -Sinv;
  const Eigen::MatrixXd K = o.stokes();
  auto op = [&](std::span<double> y, std::span<const double> x) {
    Eigen::Map<Eigen::VectorXd>(y.data(), nu + np) = K * to_eigen(x);
  };
  auto prec = [&](std::span<double> y, std::span<const double> x) {
    Eigen::Map<Eigen::VectorXd>(y.data(), nu + np) = Pinv * to_eigen(x);
  };
  const auto disc = make_constant_discretization<2>(2, 1.0);
  const auto b = random_rhs<2>(disc->active().dofs(), 5, true);
  std::vector<double> x(b.size(), 0.0);
  const auto st = gmres(op, prec, b.data(), x, control(1e-10));
  EXPECT_TRUE(st.converged);
  EXPECT_LE(st.iterations, 2);
}

TEST(StokesPrecond, ArnoldiRankAtMostTwo) {
  const auto disc = make_constant_discretization<2>(2, 1.0);
  const StokesPreconditioner<2> P(*disc, exact_config());
  const auto& ctx = disc->active();
  const std::size_t n = ctx.n_u() + ctx.n_p();
  std::vector<double> z(n), w(n);
  for (int t = 0; t < 10; ++t) {
    const auto v0 = random_rhs<2>(ctx.dofs(), 100 + t, true);
    std::vector<Eigen::VectorXd> basis{to_eigen(v0.data()).normalized()};
    double third = 1.0;
    for (int k = 0; k < 3; ++k) {
      std::vector<double> v(basis.back().data(), basis.back().data() + n);
      P(z, v);
      ctx.apply_stokes(w, z);
      Eigen::VectorXd q = to_eigen(w);
      const double norm0 = q.norm();
      for (int pass = 0; pass < 2; ++pass)
        for (const auto& e : basis) q -= e.dot(q) * e;
      if (k == 1) third = q.norm() / norm0;
      if (q.norm() <= 1e-8 * norm0) break;
      basis.push_back(q.normalized());
    }
    EXPECT_LT(third, 1e-8) << "vector " << t;
    EXPECT_LE(basis.size(), 2u);
  }
}

TEST(StokesPrecond, ZeroInZeroOut) {
  const auto disc = make_sinker_discretization<2>(3, make_sinker_config<2>(2, 1e3, 4));
  for (auto s : {SInverse::cg_mass, SInverse::vcycle_mass, SInverse::diag_mass}) {
    for (auto shape : {PrecondShape::triangular, PrecondShape::diagonal}) {
      PrecondConfig cfg;
      cfg.s_inv = s;
      cfg.shape = shape;
      const StokesPreconditioner<2> P(*disc, cfg);
      const auto& ctx = disc->active();
      std::vector<double> r(ctx.n_u() + ctx.n_p(), 0.0), y(r.size(), 3.0);
      P(y, r);
      for (double v : y) EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(StokesPrecond, BlockStructure) {
  // triangular: p = -S^{-1} r_p and u = A^{-1}(r_u - B^T p); diagonal drops the coupling
  const auto disc = make_sinker_discretization<2>(3, make_sinker_config<2>(2, 1e3, 4));
  const auto& ctx = disc->active();
  PrecondConfig cfg;
  cfg.s_inv = SInverse::diag_mass;
  const StokesPreconditioner<2> tri(*disc, cfg);
  cfg.shape = PrecondShape::diagonal;
  const StokesPreconditioner<2> dia(*disc, cfg);
  const auto r = random_vector(ctx.n_u() + ctx.n_p(), 9);
  std::vector<double> yt(r.size()), yd(r.size());
  tri(yt, r);
  dia(yd, r);
  const auto md = ctx.compute_diagonal(DiagonalKind::Mp);
  for (std::size_t i = 0; i < ctx.n_p(); ++i) {
    EXPECT_NEAR(yt[ctx.n_u() + i], -r[ctx.n_u() + i] / md[i], 1e-14 * std::abs(r[ctx.n_u() + i] / md[i]));
    EXPECT_EQ(yt[ctx.n_u() + i], yd[ctx.n_u() + i]);
  }
  std::vector<double> ru(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(ctx.n_u())), bt(ctx.n_u()), ref(ctx.n_u());
  ctx.apply_Bt(bt, std::span<const double>(yt.data() + ctx.n_u(), ctx.n_p()));
  for (std::size_t i = 0; i < ru.size(); ++i) ru[i] -= bt[i];
  tri.velocity_multigrid()(ref, ru);
  for (std::size_t i = 0; i < ctx.n_u(); ++i) EXPECT_NEAR(yt[i], ref[i], 1e-12 * (std::abs(ref[i]) + 1e-12));
}

TEST(StokesPrecond, CgMassInnerIterationsUnitViscosity) {
  const auto disc = make_constant_discretization<3>(3, 1.0);
  const StokesPreconditioner<3> P(*disc, PrecondConfig{});
  const auto b = random_rhs<3>(disc->active().dofs(), 11);
  BlockVector x(disc->active().dofs());
  const auto st = solve_stokes(*disc, P, OuterSolver::fgmres, b, x, control(1e-6));
  EXPECT_TRUE(st.converged);
  EXPECT_LE(P.stats().max_inner_s_iterations, 5);
  EXPECT_EQ(P.stats().warnings, 0);
  // the first outer step sees a zero pressure residual, so check nonzero inputs directly
  const auto np = disc->active().n_p();
  for (int t = 0; t < 10; ++t) {
    const long before = P.stats().inner_s_iterations;
    const auto r = random_vector(np, 500 + t);
    std::vector<double> y(np);
    P.schur_apply(r, y);
    const long its = P.stats().inner_s_iterations - before;
    EXPECT_GE(its, 1);
    EXPECT_LE(its, 5);
  }
}

TEST(StokesPrecond, DiagMassErrorBelowOne) {
  const auto disc = make_sinker_discretization<2>(3, make_sinker_config<2>(3, 1e4, 12));
  PrecondConfig cfg;
  cfg.s_inv = SInverse::diag_mass;
  const StokesPreconditioner<2> P(*disc, cfg);
  const auto& ctx = disc->active();
  const Eigen::MatrixXd M = testutil::dense_of([&](auto d, auto s) { ctx.apply_Mp(d, s); }, ctx.n_p(), ctx.n_p());
  for (int t = 0; t < 10; ++t) {
    const auto r = random_vector(ctx.n_p(), 200 + t);
    std::vector<double> y(r.size());
    P.schur_apply(r, y);
    const Eigen::VectorXd exact = M.ldlt().solve(to_eigen(r));
    EXPECT_LT((to_eigen(y) - exact).norm() / exact.norm(), 1.0);
  }
}

TEST(StokesPrecond, VcycleMassIsSymmetricPositive) {
  const auto disc = make_sinker_discretization<2>(4, make_sinker_config<2>(3, 1e4, 13));
  PrecondConfig cfg;
  cfg.s_inv = SInverse::vcycle_mass;
  const StokesPreconditioner<2> P(*disc, cfg);
  const auto np = disc->active().n_p();
  for (int t = 0; t < 5; ++t) {
    const auto a = random_vector(np, 300 + t), b = random_vector(np, 400 + t);
    std::vector<double> sa(np), sb(np);
    P.schur_apply(a, sa);
    P.schur_apply(b, sb);
    EXPECT_GT(vec::dot(sa, a), 0.0);
    EXPECT_NEAR(vec::dot(sa, b), vec::dot(a, sb), 1e-10 * vec::norm(sa) * vec::norm(b));
  }
}

TEST(StokesPrecond, InnerCapIsAWarningNotAnAbort) {
  const auto disc = make_sinker_discretization<2>(3, make_sinker_config<2>(2, 1e4, 14));
  PrecondConfig cfg;
  cfg.cg_mass_tolerance = 1e-12;
  cfg.cg_mass_max_iters = 1;
  const StokesPreconditioner<2> P(*disc, cfg);
  const auto b = random_rhs<2>(disc->active().dofs(), 15);
  BlockVector x(disc->active().dofs());
  const auto st = solve_stokes(*disc, P, OuterSolver::fgmres, b, x, control(1e-6));
  EXPECT_GT(P.stats().warnings, 0);
  EXPECT_FALSE(P.stats().last_warning.empty());
  EXPECT_GT(st.iterations, 0);
}

TEST(StokesPrecond, SolverPairingRule) {
  PrecondConfig cfg;
  EXPECT_THROW(validate_solver_pairing(OuterSolver::gmres, cfg), std::invalid_argument);
  EXPECT_NO_THROW(validate_solver_pairing(OuterSolver::fgmres, cfg));
  EXPECT_NO_THROW(validate_solver_pairing(OuterSolver::idr, cfg));
  for (auto s : {SInverse::vcycle_mass, SInverse::diag_mass, SInverse::exact_inner_solve}) {
    cfg.s_inv = s;
    EXPECT_NO_THROW(validate_solver_pairing(OuterSolver::gmres, cfg));
  }
  const auto disc = make_constant_discretization<2>(2, 1.0);
  const StokesPreconditioner<2> P(*disc, PrecondConfig{});
  BlockVector b(disc->active().dofs()), x(disc->active().dofs());
  EXPECT_THROW(solve_stokes(*disc, P, OuterSolver::gmres, b, x, control(1e-6)), std::invalid_argument);
}

TEST(StokesPrecond, TriangularBeatsDiagonal) {
  const auto disc = make_sinker_discretization<2>(4, make_sinker_config<2>(4, 1e4, 16));
  const auto b = disc->active().assemble_rhs(make_sinker_config<2>(4, 1e4, 16));
  int its[2];
  for (int k = 0; k < 2; ++k) {
    PrecondConfig cfg;
    cfg.shape = k == 0 ? PrecondShape::triangular : PrecondShape::diagonal;
    const StokesPreconditioner<2> P(*disc, cfg);
    BlockVector x(disc->active().dofs());
    const auto st = solve_stokes(*disc, P, OuterSolver::fgmres, b, x, control(1e-6));
    EXPECT_TRUE(st.converged);
    its[k] = st.iterations;
  }
  EXPECT_GT(its[1], its[0]);
}

TEST(NormalizePressure, ConstantBecomesZero) {
  const auto disc = make_constant_discretization<2>(3, 1.0);
  BlockVector x(disc->active().dofs());
  for (auto& v : x.p()) v = 4.2;
  normalize_pressure(x, disc->active());
  for (double v : x.p()) EXPECT_NEAR(v, 0.0, 1e-14);
}

TEST(NormalizePressure, ZeroMeanAndIdempotent) {
  const auto disc = make_sinker_discretization<3>(3, make_sinker_config<3>(2, 1e4, 17));
  const auto& ctx = disc->active();
  BlockVector x(ctx.dofs());
  const auto r = random_vector(x.size(), 18);
  std::copy(r.begin(), r.end(), x.data().begin());
  normalize_pressure(x, ctx);
  const auto w = ctx.pressure_integrals();
  EXPECT_LT(std::abs(vec::dot(w, x.p())), 1e-13);
  const auto once = x.data();
  normalize_pressure(x, ctx);
  for (std::size_t i = 0; i < once.size(); ++i) EXPECT_NEAR(x.data()[i], once[i], 1e-15);
  for (std::size_t i = 0; i < ctx.n_u(); ++i) EXPECT_EQ(x.u()[i], r[i]);
}

TEST(SolveStokes, SolutionHasZeroMeanPressureAndTrueResidual) {
  const auto cfg = make_sinker_config<2>(3, 1e2, 19);
  const auto disc = make_sinker_discretization<2>(4, cfg);
  const auto& ctx = disc->active();
  const auto b = ctx.assemble_rhs(cfg);
  for (auto solver : {OuterSolver::fgmres, OuterSolver::idr}) {
    const StokesPreconditioner<2> P(*disc, PrecondConfig{});
    BlockVector x(ctx.dofs());
    const auto st = solve_stokes(*disc, P, solver, b, x, control(1e-8));
    EXPECT_TRUE(st.converged);
    EXPECT_LT(std::abs(vec::dot(ctx.pressure_integrals(), x.p())), 1e-12);
    std::vector<double> kx(x.size());
    ctx.apply_stokes(kx, x.data());
    double r = 0.0;
    for (std::size_t i = 0; i < kx.size(); ++i) r += std::pow(b.data()[i] - kx[i], 2);
    EXPECT_LT(std::sqrt(r), 2e-8 * vec::norm(b.data()));
  }
}

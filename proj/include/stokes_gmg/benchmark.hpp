#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stokes_precond.hpp"

namespace stokes_gmg {

inline constexpr const char* version_string = "stokes_gmg 1.0.0";

/// Exit codes of a run: converged, flagged (not converged or residual mismatch), rejected input.
enum ExitCode : int { exit_converged = 0, exit_failed = 1, exit_not_converged = 2, exit_residual_mismatch = 3 };

inline std::string to_string(OuterSolver s) {
  switch (s) {
    case OuterSolver::gmres: return "gmres";
    case OuterSolver::fgmres: return "fgmres";
    case OuterSolver::idr: return "idr";
  }
  return "?";
}
inline std::string to_string(PrecondShape s) { return s == PrecondShape::triangular ? "triangular" : "diagonal"; }
inline std::string to_string(SInverse s) {
  switch (s) {
    case SInverse::cg_mass: return "cg";
    case SInverse::vcycle_mass: return "vcycle";
    case SInverse::diag_mass: return "diag";
    case SInverse::exact_inner_solve: return "exact";
  }
  return "?";
}

inline OuterSolver parse_solver(const std::string& s) {
  if (s == "gmres") return OuterSolver::gmres;
  if (s == "fgmres") return OuterSolver::fgmres;
  if (s == "idr") return OuterSolver::idr;
  throw std::invalid_argument("unknown solver '" + s + "'");
}
inline PrecondShape parse_shape(const std::string& s) {
  if (s == "triangular") return PrecondShape::triangular;
  if (s == "diagonal") return PrecondShape::diagonal;
  throw std::invalid_argument("unknown preconditioner shape '" + s + "'");
}
inline SInverse parse_schur(const std::string& s) {
  if (s == "cg") return SInverse::cg_mass;
  if (s == "vcycle") return SInverse::vcycle_mass;
  if (s == "diag") return SInverse::diag_mass;
  if (s == "exact") return SInverse::exact_inner_solve;
  throw std::invalid_argument("unknown schur option '" + s + "'");
}

struct RunConfig {
  int dim = 3;
  int levels = 4;
  std::size_t sinkers = 4;
  double dynamic_ratio = 1e4;
  std::uint64_t seed = 20190513;
  double delta = 200.0;
  double omega = 0.1;
  double beta = 10.0;
  /// Explicit sinker centers; when non-empty they replace the seeded draw.
  std::vector<std::vector<double>> centers;
  OuterSolver solver = OuterSolver::fgmres;
  int idr_s = 2;
  PrecondShape shape = PrecondShape::triangular;
  SInverse schur = SInverse::cg_mass;
  int restart = 50;
  double reduction = 1e-6;
  int max_iters = 1000;
  unsigned threads = 1;
  std::string out;
  std::string format = "csv";

  void validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("dim must be 2 or 3");
    if (levels < 1) throw std::invalid_argument("levels must be >= 1");
    if (!(dynamic_ratio >= 1.0)) throw std::invalid_argument("dynamic-ratio must be >= 1");
    if (idr_s < 1) throw std::invalid_argument("idr-s must be >= 1");
    if (restart < 1) throw std::invalid_argument("restart must be >= 1");
    if (!(reduction > 0.0 && reduction < 1.0)) throw std::invalid_argument("reduction must lie in (0, 1)");
    if (max_iters < 0) throw std::invalid_argument("max-iters must be >= 0");
    if (threads < 1) throw std::invalid_argument("threads must be >= 1");
    if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv or json");
    if (!centers.empty()) {
      if (centers.size() != sinkers) throw std::invalid_argument("number of centers does not match sinkers");
      for (const auto& c : centers)
        if (c.size() != static_cast<std::size_t>(dim)) throw std::invalid_argument("center has the wrong dimension");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string normalize_key(std::string k) {
  std::replace(k.begin(), k.end(), '_', '-');
  if (k == "n-sinkers") return "sinkers";
  return k;
}

inline double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("bad number for '" + key + "': '" + v + "'");
  return out;
}

inline long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long out = 0;
  try {
    out = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("bad integer for '" + key + "': '" + v + "'");
  return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long out = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    out = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) throw std::invalid_argument("bad unsigned integer for '" + key + "': '" + v + "'");
  return out;
}

}  // namespace detail

/// Parses "x,y[,z]; x,y[,z]; ..." into a list of points.
inline std::vector<std::vector<double>> parse_centers(const std::string& text) {
  std::vector<std::vector<double>> out;
  std::stringstream points(text);
  std::string point;
  while (std::getline(points, point, ';')) {
    point = detail::trim(point);
    if (point.empty()) continue;
    std::vector<double> c;
    std::stringstream coords(point);
    std::string v;
    while (std::getline(coords, v, ',')) c.push_back(detail::to_double("centers", detail::trim(v)));
    out.push_back(std::move(c));
  }
  return out;
}

/// Applies one key=value setting. Keys mirror the CLI flags; '_' and '-' are interchangeable.
inline void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = detail::normalize_key(detail::trim(raw_key));
  const std::string v = detail::trim(raw_value);
  if (key == "dim") cfg.dim = static_cast<int>(detail::to_int(key, v));
  else if (key == "levels") cfg.levels = static_cast<int>(detail::to_int(key, v));
  else if (key == "sinkers") {
    const long long n = detail::to_int(key, v);
    if (n < 0) throw std::invalid_argument("sinkers must be >= 0");
    cfg.sinkers = static_cast<std::size_t>(n);
  } else if (key == "dynamic-ratio") cfg.dynamic_ratio = detail::to_double(key, v);
  else if (key == "seed") cfg.seed = detail::to_u64(key, v);
  else if (key == "delta") cfg.delta = detail::to_double(key, v);
  else if (key == "omega") cfg.omega = detail::to_double(key, v);
  else if (key == "beta") cfg.beta = detail::to_double(key, v);
  else if (key == "centers") cfg.centers = parse_centers(v);
  else if (key == "solver") cfg.solver = parse_solver(v);
  else if (key == "idr-s") cfg.idr_s = static_cast<int>(detail::to_int(key, v));
  else if (key == "precond-shape") cfg.shape = parse_shape(v);
  else if (key == "schur") cfg.schur = parse_schur(v);
  else if (key == "restart") cfg.restart = static_cast<int>(detail::to_int(key, v));
  else if (key == "reduction") cfg.reduction = detail::to_double(key, v);
  else if (key == "max-iters") cfg.max_iters = static_cast<int>(detail::to_int(key, v));
  else if (key == "threads") {
    const long long t = detail::to_int(key, v);
    if (t < 1) throw std::invalid_argument("threads must be >= 1");
    cfg.threads = static_cast<unsigned>(t);
  } else if (key == "out") cfg.out = v;
  else if (key == "format") cfg.format = v;
  else throw std::invalid_argument("unknown configuration key '" + raw_key + "'");
}

/// Flat key=value text; '#' starts a comment, blank lines are ignored.
inline RunConfig parse_config(const std::string& text, RunConfig cfg = {}) {
  std::stringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("line " + std::to_string(lineno) + ": expected key=value");
    apply_setting(cfg, line.substr(0, eq), line.substr(eq + 1));
  }
  return cfg;
}

struct PhaseTimings {
  double setup = 0.0;     // DoF distribution, operator tables
  double assemble = 0.0;  // viscosity, diagonals, eigenvalue estimates, transfers, RHS
  double solve = 0.0;     // outer Krylov iteration
};

struct MemoryCategory {
  std::string name;
  std::size_t vectors = 0;  // full-length vectors, when the category is made of them
  std::size_t bytes = 0;
};

struct RunRecord {
  RunConfig config;
  std::uint64_t sinker_seed = 0;
  std::vector<std::vector<double>> centers;
  std::string version = version_string;
  SolverStats stats;
  PrecondStats precond;
  std::size_t n_u = 0, n_p = 0;
  PhaseTimings timings;
  std::vector<MemoryCategory> memory;
  double claimed_reduction = 0.0;
  double true_reduction = 0.0;
  bool residual_consistent = false;
  double vcycle_flops_per_dof = 0.0;
  bool converged = false;
  int exit_code = exit_failed;
  std::string error;

  [[nodiscard]] const MemoryCategory& category(const std::string& name) const {
    for (const auto& c : memory)
      if (c.name == name) return c;
    throw std::out_of_range("no memory category '" + name + "'");
  }
};

/// Builds the per-category table for a finished run. Solver vectors count
/// peak_vector_count full-length vectors of size n_u + n_p.
template <int dim>
std::vector<MemoryCategory> memory_report(const StokesDiscretization<dim>& disc, const StokesPreconditioner<dim>& precond,
                                          const SolverStats& stats, std::size_t application_vectors) {
  const auto& act = disc.active();
  const std::size_t n = act.n_u() + act.n_p();
  std::size_t operator_bytes = disc.viscosity().memory_bytes();
  for (const auto& c : disc.contexts()) operator_bytes += c.memory_bytes();
  const std::size_t peak = static_cast<std::size_t>(std::max(stats.peak_vector_count, 0));
  return {
      {"mesh", 0, disc.mesh().memory_bytes()},
      {"dof_maps", 0, disc.dofs().memory_bytes()},
      {"constraint_sets", 0, disc.dofs().constraint_bytes()},
      {"solver_vectors", peak, peak * n * sizeof(double)},
      {"multigrid_auxiliaries", 0, precond.memory_bytes()},
      {"application_vectors", application_vectors, application_vectors * n * sizeof(double)},
      {"operator_data", 0, operator_bytes},
  };
}

namespace detail {

template <int dim>
RunRecord run_benchmark_dim(const RunConfig& cfg) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };

  RunRecord rec;
  rec.config = cfg;
  rec.sinker_seed = cfg.seed;

  SinkerConfig<dim> sinkers;
  sinkers.dynamic_ratio = cfg.dynamic_ratio;
  sinkers.delta = cfg.delta;
  sinkers.omega = cfg.omega;
  sinkers.beta = cfg.beta;
  sinkers.seed = cfg.seed;
  if (cfg.centers.empty()) {
    sinkers.centers = generate_sinker_centers<dim>(cfg.sinkers, cfg.omega, cfg.seed);
  } else {
    for (const auto& c : cfg.centers) {
      std::array<double, dim> p{};
      std::copy(c.begin(), c.end(), p.begin());
      sinkers.centers.push_back(p);
    }
  }
  sinkers.validate();
  for (const auto& c : sinkers.centers) rec.centers.emplace_back(c.begin(), c.end());

  PrecondConfig pcfg;
  pcfg.shape = cfg.shape;
  pcfg.s_inv = cfg.schur;
  validate_solver_pairing(cfg.solver, pcfg);

  const auto t0 = clock::now();
  auto mesh = build_hierarchy<dim>(cfg.levels);
  auto dofs = distribute_dofs(mesh);
  auto rule = make_gauss_rule<dim>(3);
  const auto t1 = clock::now();
  auto visc = restrict_viscosity(average_active_viscosity(mesh, sinkers, rule), mesh);
  const auto t2 = clock::now();
  StokesDiscretization<dim> disc(std::move(mesh), std::move(dofs), std::move(visc), std::move(rule), cfg.threads);
  const auto t3 = clock::now();
  StokesPreconditioner<dim> precond(disc, pcfg);
  const auto& ctx = disc.active();
  BlockVector rhs = ctx.assemble_rhs(sinkers);
  const auto t4 = clock::now();
  rec.timings.setup = seconds(t0, t1) + seconds(t2, t3);
  rec.timings.assemble = seconds(t1, t2) + seconds(t3, t4);
  rec.n_u = ctx.n_u();
  rec.n_p = ctx.n_p();

  BlockVector x(ctx.n_u(), ctx.n_p());
  SolveControl control;
  control.reduction_target = cfg.reduction;
  control.max_iters = cfg.max_iters;
  control.restart_length = cfg.restart;
  IdrParams idr;
  idr.s = cfg.idr_s;
  const auto t5 = clock::now();
  rec.stats = solve_stokes(disc, precond, cfg.solver, rhs, x, control, idr);
  const auto t6 = clock::now();
  rec.timings.solve = seconds(t5, t6);
  rec.precond = precond.stats();
  rec.converged = rec.stats.converged;

  // true residual from the returned solution
  Vector r(rhs.size());
  ctx.apply_stokes(r, x.data());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs.data()[i] - r[i];
  const double bnorm = vec::norm(rhs.data());
  rec.true_reduction = bnorm > 0.0 ? vec::norm(r) / bnorm : 0.0;
  const double r0 = rec.stats.initial_residual();
  rec.claimed_reduction = r0 > 0.0 ? rec.stats.final_residual() / r0 : 0.0;
  if (bnorm == 0.0) {
    rec.residual_consistent = vec::norm(x.data()) == 0.0;
  } else {
    // floor at round-off so a perfectly converged solve cannot report a spurious mismatch
    const double floor = 1e-13;
    const double a = std::max(rec.true_reduction, floor), b = std::max(rec.claimed_reduction, floor);
    rec.residual_consistent = a <= 2.0 * b && b <= 2.0 * a;
  }

  // informational: flops of one V-cycle application per velocity unknown
  {
    for (const auto& c : disc.contexts()) c.reset_flops();
    Vector src(ctx.n_u(), 1.0), dst(ctx.n_u());
    zero_constrained<dim>(src, ctx.dofs());
    precond.velocity_multigrid()(dst, src);
    std::uint64_t flops = 0;
    for (const auto& c : disc.contexts()) flops += c.flops();
    rec.vcycle_flops_per_dof = static_cast<double>(flops) / static_cast<double>(ctx.n_u());
  }

  // rhs, x and the true-residual vector are held by the driver
  rec.memory = memory_report(disc, precond, rec.stats, 3);

  if (!rec.converged) rec.exit_code = exit_not_converged;
  else if (!rec.residual_consistent) rec.exit_code = exit_residual_mismatch;
  else rec.exit_code = exit_converged;
  if (!rec.stats.message.empty()) rec.error = rec.stats.message;
  return rec;
}

}  // namespace detail

/// Builds hierarchy, viscosity and operators, solves, and recomputes the residual.
/// Input errors are recorded in the returned record rather than thrown.
inline RunRecord run_benchmark(const RunConfig& cfg) {
  try {
    cfg.validate();
    return cfg.dim == 2 ? detail::run_benchmark_dim<2>(cfg) : detail::run_benchmark_dim<3>(cfg);
  } catch (const std::exception& e) {
    RunRecord rec;
    rec.config = cfg;
    rec.sinker_seed = cfg.seed;
    rec.error = e.what();
    rec.exit_code = exit_failed;
    return rec;
  }
}

/// Sweep axes. An empty axis keeps the base configuration's value.
struct SweepAxes {
  std::vector<int> levels;
  std::vector<std::size_t> sinkers;
  std::vector<double> dynamic_ratio;
  std::vector<PrecondShape> shape;
  std::vector<SInverse> schur;
  std::vector<OuterSolver> solver;
};

/// Seed for rows with a given sinker count. Rows that differ only in levels, DR or solver
/// settings share sinker positions, so those axes compare the same geometry.
inline std::uint64_t sweep_row_seed(std::uint64_t master, std::size_t sinkers) { return mix_seed(master + sinkers); }

/// Expands the axes in fixed nesting order (levels outermost, solver innermost).
inline std::vector<RunConfig> expand_sweep(const RunConfig& base, const SweepAxes& axes, std::uint64_t master_seed) {
  auto or_base = []<class T>(const std::vector<T>& axis, T v) { return axis.empty() ? std::vector<T>{v} : axis; };
  std::vector<RunConfig> rows;
  for (int l : or_base(axes.levels, base.levels))
    for (std::size_t n : or_base(axes.sinkers, base.sinkers))
      for (double dr : or_base(axes.dynamic_ratio, base.dynamic_ratio))
        for (PrecondShape sh : or_base(axes.shape, base.shape))
          for (SInverse si : or_base(axes.schur, base.schur))
            for (OuterSolver so : or_base(axes.solver, base.solver)) {
              RunConfig c = base;
              c.levels = l;
              c.sinkers = n;
              c.dynamic_ratio = dr;
              c.shape = sh;
              c.schur = si;
              c.solver = so;
              c.seed = sweep_row_seed(master_seed, n);
              if (!base.centers.empty() && n != base.centers.size()) c.centers.clear();
              rows.push_back(std::move(c));
            }
  return rows;
}

/// One record per row; failures are recorded and the sweep continues.
inline std::vector<RunRecord> sweep(const RunConfig& base, const SweepAxes& axes, std::uint64_t master_seed) {
  std::vector<RunRecord> out;
  for (const auto& row : expand_sweep(base, axes, master_seed)) out.push_back(run_benchmark(row));
  return out;
}

// ---------------------------------------------------------------------------------------
// Output

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "version", "dim", "levels", "sinkers", "dynamic_ratio", "seed", "solver", "idr_s", "precond_shape", "schur",
      "restart", "reduction", "threads", "n_u", "n_p", "iterations", "precond_applications", "matvec_count",
      "peak_vector_count", "krylov_vector_count", "initial_residual", "final_residual", "claimed_reduction",
      "true_reduction", "residual_consistent", "converged", "breakdown", "setup_s", "assemble_s", "solve_s",
      "mem_mesh_bytes", "mem_dof_maps_bytes", "mem_constraint_sets_bytes", "mem_solver_vectors",
      "mem_solver_vectors_bytes", "mem_multigrid_auxiliaries_bytes", "mem_application_vectors",
      "mem_application_vectors_bytes", "mem_operator_data_bytes", "vcycle_flops_per_dof", "inner_s_iterations",
      "precond_warnings", "exit_code", "error"};
  return cols;
}

namespace detail {

// shortest round-trip form, always with '.' as decimal separator
inline std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::size_t mem_or_zero(const RunRecord& r, const std::string& name, bool vectors) {
  for (const auto& c : r.memory)
    if (c.name == name) return vectors ? c.vectors : c.bytes;
  return 0;
}

}  // namespace detail

inline std::string csv_header() {
  std::string out;
  for (std::size_t i = 0; i < csv_columns().size(); ++i) out += (i ? "," : "") + csv_columns()[i];
  return out;
}

inline std::string csv_row(const RunRecord& r) {
  using detail::fmt;
  using detail::mem_or_zero;
  const auto& c = r.config;
  const std::vector<std::string> f{
      r.version, std::to_string(c.dim), std::to_string(c.levels), std::to_string(c.sinkers), fmt(c.dynamic_ratio),
      std::to_string(r.sinker_seed), to_string(c.solver), std::to_string(c.idr_s), to_string(c.shape),
      to_string(c.schur), std::to_string(c.restart), fmt(c.reduction), std::to_string(c.threads),
      std::to_string(r.n_u), std::to_string(r.n_p), std::to_string(r.stats.iterations),
      std::to_string(r.stats.precond_applications), std::to_string(r.stats.matvec_count),
      std::to_string(r.stats.peak_vector_count), std::to_string(r.stats.krylov_vector_count),
      fmt(r.stats.initial_residual()), fmt(r.stats.final_residual()), fmt(r.claimed_reduction),
      fmt(r.true_reduction), r.residual_consistent ? "1" : "0", r.converged ? "1" : "0",
      r.stats.breakdown ? "1" : "0", fmt(r.timings.setup), fmt(r.timings.assemble), fmt(r.timings.solve),
      std::to_string(mem_or_zero(r, "mesh", false)), std::to_string(mem_or_zero(r, "dof_maps", false)),
      std::to_string(mem_or_zero(r, "constraint_sets", false)), std::to_string(mem_or_zero(r, "solver_vectors", true)),
      std::to_string(mem_or_zero(r, "solver_vectors", false)),
      std::to_string(mem_or_zero(r, "multigrid_auxiliaries", false)),
      std::to_string(mem_or_zero(r, "application_vectors", true)),
      std::to_string(mem_or_zero(r, "application_vectors", false)),
      std::to_string(mem_or_zero(r, "operator_data", false)), fmt(r.vcycle_flops_per_dof),
      std::to_string(r.precond.inner_s_iterations), std::to_string(r.precond.warnings), std::to_string(r.exit_code),
      r.error};
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + detail::csv_escape(f[i]);
  return out;
}

inline nlohmann::json to_json(const RunRecord& r) {
  using nlohmann::json;
  const auto& c = r.config;
  json mem = json::array();
  for (const auto& m : r.memory) mem.push_back({{"category", m.name}, {"vectors", m.vectors}, {"bytes", m.bytes}});
  return json{
      {"version", r.version},
      {"config",
       {{"dim", c.dim},
        {"levels", c.levels},
        {"sinkers", c.sinkers},
        {"dynamic_ratio", c.dynamic_ratio},
        {"seed", r.sinker_seed},
        {"delta", c.delta},
        {"omega", c.omega},
        {"beta", c.beta},
        {"centers", r.centers},
        {"solver", to_string(c.solver)},
        {"idr_s", c.idr_s},
        {"precond_shape", to_string(c.shape)},
        {"schur", to_string(c.schur)},
        {"restart", c.restart},
        {"reduction", c.reduction},
        {"max_iters", c.max_iters},
        {"threads", c.threads}}},
      {"dofs", {{"n_u", r.n_u}, {"n_p", r.n_p}}},
      {"stats",
       {{"iterations", r.stats.iterations},
        {"precond_applications", r.stats.precond_applications},
        {"matvec_count", r.stats.matvec_count},
        {"peak_vector_count", r.stats.peak_vector_count},
        {"krylov_vector_count", r.stats.krylov_vector_count},
        {"residual_history", r.stats.residual_history},
        {"converged", r.stats.converged},
        {"breakdown", r.stats.breakdown},
        {"message", r.stats.message}}},
      {"preconditioner",
       {{"applications", r.precond.applications},
        {"inner_s_iterations", r.precond.inner_s_iterations},
        {"warnings", r.precond.warnings}}},
      {"timings", {{"setup", r.timings.setup}, {"assemble", r.timings.assemble}, {"solve", r.timings.solve}, {"threads", c.threads}}},
      {"memory", mem},
      {"claimed_reduction", r.claimed_reduction},
      {"true_reduction", r.true_reduction},
      {"residual_consistent", r.residual_consistent},
      {"vcycle_flops_per_dof", r.vcycle_flops_per_dof},
      {"converged", r.converged},
      {"exit_code", r.exit_code},
      {"error", r.error}};
}

inline void write_csv(std::ostream& os, const std::vector<RunRecord>& rows) {
  os << csv_header() << '\n';
  for (const auto& r : rows) os << csv_row(r) << '\n';
}

}  // namespace stokes_gmg

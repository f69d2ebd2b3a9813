#include "mfg/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <utility>

#include "mfg/config.hpp"
#include "mfg/error.hpp"
#include "mfg/field_dump.hpp"

namespace mfg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ostream& out_of(const CommandContext& ctx) { return ctx.out ? *ctx.out : std::cout; }
std::ostream& err_of(const CommandContext& ctx) { return ctx.err ? *ctx.err : std::cerr; }

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

std::vector<std::pair<std::string, double>> diagnostics_fields(const DiagnosticsReport& r) {
  return {{"lower_bound_margin", r.lower_bound_margin}, {"duality_residual", r.duality_residual},
          {"energy_mgq2", r.energy_mgq2},               {"energy_g", r.energy_g},
          {"energy_mFm", r.energy_mFm},                 {"entropy_max", r.entropy_max},
          {"sqrt_m_h1_sum", r.sqrt_m_h1_sum},           {"m_lalpha", r.m_lalpha},
          {"dhm_lalpha", r.dhm_lalpha},                 {"dtm_hminus1_surrogate", r.dtm_hminus1},
          {"kh_worst_mass_drift", r.kh_worst_mass_drift}, {"kh_worst_min", r.kh_worst_min}};
}

fs::path output_dir(const RunConfig& cfg, const CommandContext& ctx) {
  fs::path dir = ctx.output_dir ? *ctx.output_dir : cfg.output.dir;
  fs::create_directories(dir);
  return dir;
}

double linf_distance(const Trajectory& a, const Trajectory& b) {
  double worst = 0;
  for (int n = 0; n <= a.steps(); ++n) worst = std::max(worst, (a[n].values() - b[n].values()).cwiseAbs().maxCoeff());
  return worst;
}

template <typename F>
int guarded(const CommandContext& ctx, F&& body) {
  try {
    return body();
  } catch (const std::exception& e) {
    err_of(ctx) << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

const std::vector<std::string>& diagnostics_columns() {
  static const std::vector<std::string> cols = [] {
    std::vector<std::string> c;
    for (const auto& [name, value] : diagnostics_fields(DiagnosticsReport{})) c.push_back(name);
    return c;
  }();
  return cols;
}

json diagnostics_json(const DiagnosticsReport& r) {
  json j = json::object();
  for (const auto& [name, value] : diagnostics_fields(r)) j[name] = value;
  return j;
}

void write_diagnostics_csv(const fs::path& path, const DiagnosticsReport& r) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  const auto fields = diagnostics_fields(r);
  for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? "," : "") << fields[k].first;
  out << "\r\n";
  for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? "," : "") << num(fields[k].second);
  out << "\r\n";
}

void write_history_csv(const fs::path& path, const std::vector<IterationRecord>& history) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "iteration,delta_sup_l1,newton_iterations,linear_iterations,max_step_residual\r\n";
  for (const auto& r : history)
    out << r.iteration << "," << num(r.delta) << "," << r.newton_iterations << "," << r.linear_iterations << ","
        << num(r.max_step_residual) << "\r\n";
}

void write_refine_csv(const fs::path& path, const RefineTable& table) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "n_h,n_t,status,outer_iterations,final_delta,u_cauchy_l1,m_cauchy_l1,u_ratio,m_ratio";
  for (const auto& c : diagnostics_columns()) out << "," << c;
  out << ",error\r\n";
  for (const auto& r : table.rows) {
    const std::string status = !r.solved ? "failed" : (r.converged ? "converged" : "max_outer_exceeded");
    out << r.level.n_h << "," << r.level.n_t << "," << status << "," << r.outer_iterations << "," << num(r.final_delta)
        << "," << opt_num(r.u_cauchy) << "," << opt_num(r.m_cauchy) << "," << opt_num(r.u_ratio) << ","
        << opt_num(r.m_ratio);
    for (const auto& [name, value] : diagnostics_fields(r.diagnostics)) out << "," << (r.solved ? num(value) : "");
    out << "," << csv_field(r.error) << "\r\n";
  }
}

int cmd_solve(const fs::path& config_path, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const RunConfig cfg = load_run_config(config_path);
    const fs::path dir = output_dir(cfg, ctx);
    const DiscreteProblem problem(cfg.problem, cfg.solver.n_h, cfg.solver.n_t);
    const Solution sol = solve(problem, cfg.solver);
    const DiagnosticsReport diag = diagnose(sol.u, sol.m, problem, cfg.diagnostics_options());
    const GlobalResidual res = global_residual(sol.u, sol.m, problem);

    if (cfg.output.dump_fields) write_field_dump(dir / "fields.mfgf", {cfg.problem.nu, cfg.problem.horizon, sol.u, sol.m});
    json report = {{"converged", sol.converged},
                   {"outer_iterations", sol.outer_iterations},
                   {"final_delta", sol.final_delta},
                   {"n_h", cfg.solver.n_h},
                   {"n_t", cfg.solver.n_t},
                   {"global_residual", {{"bellman_linf", res.bellman_linf}, {"fp_linf", res.fp_linf}}},
                   {"diagnostics", diagnostics_json(diag)}};
    std::ofstream(dir / "diagnostics.json") << report.dump(2) << "\n";
    write_diagnostics_csv(dir / "diagnostics.csv", diag);
    write_history_csv(dir / "history.csv", sol.history);

    out_of(ctx) << (sol.converged ? "converged" : "max_outer_exceeded") << " after " << sol.outer_iterations
                << " outer iterations, delta=" << num(sol.final_delta) << ", duality_residual=" << num(diag.duality_residual)
                << "\n";
    return sol.converged ? 0 : 2;
  });
}

int cmd_refine(const fs::path& config_path, const std::string& levels_spec, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const RunConfig cfg = load_run_config(config_path);
    const auto levels = parse_levels(levels_spec);
    validate_levels(levels);
    const fs::path dir = output_dir(cfg, ctx);
    const RefineTable table = run_refinement(cfg, levels, ctx.max_threads);
    write_refine_csv(dir / "refine.csv", table);
    for (const auto& r : table.rows) {
      out_of(ctx) << r.level.n_h << "x" << r.level.n_t << ": "
                  << (!r.solved ? "failed (" + r.error + ")" : (r.converged ? "converged" : "max_outer_exceeded"));
      if (r.u_cauchy) out_of(ctx) << " u_l1=" << num(*r.u_cauchy) << " m_l1=" << num(*r.m_cauchy);
      if (r.u_ratio) out_of(ctx) << " u_ratio=" << num(*r.u_ratio);
      if (r.m_ratio) out_of(ctx) << " m_ratio=" << num(*r.m_ratio);
      out_of(ctx) << "\n";
    }
    return table.all_converged() ? 0 : 2;
  });
}

int cmd_check(const fs::path& dump_path, const fs::path& config_path, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const RunConfig cfg = load_run_config(config_path);
    fs::path path = dump_path;
    if (ctx.output_dir && path.is_relative()) path = *ctx.output_dir / path;
    const FieldDump dump = read_field_dump(path);
    if (dump.u.grid_size() != cfg.solver.n_h || dump.u.steps() != cfg.solver.n_t)
      throw ConfigError("dump discretization " + std::to_string(dump.u.grid_size()) + "x" + std::to_string(dump.u.steps()) +
                        " does not match config " + std::to_string(cfg.solver.n_h) + "x" + std::to_string(cfg.solver.n_t));
    const DiscreteProblem problem(cfg.problem, cfg.solver.n_h, cfg.solver.n_t);
    const GlobalResidual res = global_residual(dump.u, dump.m, problem);
    const DiagnosticsReport diag = diagnose(dump.u, dump.m, problem, cfg.diagnostics_options());
    const bool ok = res.bellman_linf <= cfg.tol_check && res.fp_linf <= cfg.tol_check;
    json report = {{"bellman_linf", res.bellman_linf},
                   {"fp_linf", res.fp_linf},
                   {"tolerance", cfg.tol_check},
                   {"passed", ok},
                   {"diagnostics", diagnostics_json(diag)}};
    out_of(ctx) << report.dump(2) << "\n";
    return ok ? 0 : 2;
  });
}

int cmd_oracle(const fs::path& config_path, const CommandContext& ctx) {
  return guarded(ctx, [&] {
    const RunConfig cfg = load_run_config(config_path);
    check_oracle_size(cfg.solver.n_h, cfg.solver.n_t);
    const DiscreteProblem problem(cfg.problem, cfg.solver.n_h, cfg.solver.n_t);
    const Solution reference = oracle_solve(problem);
    const Solution modular = solve(problem, cfg.solver);
    const double du = linf_distance(reference.u, modular.u);
    const double dm = linf_distance(reference.m, modular.m);
    constexpr double kThreshold = 1e-7;
    out_of(ctx) << "u_linf_discrepancy=" << num(du) << "\nm_linf_discrepancy=" << num(dm) << "\n";
    return std::max(du, dm) <= kThreshold ? 0 : 2;
  });
}

}  // namespace mfg

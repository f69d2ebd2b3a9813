#include "mfg/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <set>

namespace mfg {

namespace {

using nlohmann::json;
constexpr double kTwoPi = 2 * std::numbers::pi;

[[noreturn]] void fail(const std::string& path, const std::string& message) { throw ConfigError(path + ": " + message); }

void check_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(path, "must be an object");
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items())
    if (!keys.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

double number(const json& j, const std::string& path, const std::string& key, std::optional<double> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(join(path, key), "required key is missing");
  }
  const json& v = j.at(key);
  if (!v.is_number()) fail(join(path, key), "must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(join(path, key), "must be finite");
  return d;
}

int integer(const json& j, const std::string& path, const std::string& key, std::optional<int> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(join(path, key), "required key is missing");
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) fail(join(path, key), "must be an integer");
  return v.get<int>();
}

std::string text(const json& j, const std::string& path, const std::string& key, std::optional<std::string> fallback = std::nullopt) {
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    fail(join(path, key), "required key is missing");
  }
  const json& v = j.at(key);
  if (!v.is_string()) fail(join(path, key), "must be a string");
  return v.get<std::string>();
}

const json& params_of(const json& j, const std::string& path) {
  static const json empty = json::object();
  if (!j.contains("params")) return empty;
  if (!j.at("params").is_object()) fail(join(path, "params"), "must be an object");
  return j.at("params");
}

std::pair<double, double> mode_of(const json& params, const std::string& path) {
  if (!params.contains("mode")) return {1.0, 0.0};
  const json& m = params.at("mode");
  if (!m.is_array() || m.size() != 2 || !m[0].is_number_integer() || !m[1].is_number_integer())
    fail(join(path, "mode"), "must be an array of two integers");
  return {m[0].get<double>(), m[1].get<double>()};
}

Potential parse_potential(const json& j, const std::string& path) {
  const std::string kind = text(j, path, "kind", "zero");
  if (kind == "zero") {
    check_object(j, path, {"kind"});
    return Potential::zero();
  }
  if (kind == "cos2") {
    check_object(j, path, {"kind", "amplitude"});
    return Potential::cos2(number(j, path, "amplitude", 1.0));
  }
  if (kind == "custom-samples") {
    check_object(j, path, {"kind", "values"});
    if (!j.contains("values") || !j.at("values").is_array()) fail(join(path, "values"), "must be an array of numbers");
    const auto& vals = j.at("values");
    const int n = static_cast<int>(std::lround(std::sqrt(double(vals.size()))));
    if (n * n != static_cast<int>(vals.size()) || n < 4) fail(join(path, "values"), "length must be n_h^2 with n_h >= 4");
    GridFunction g(n);
    auto flat = g.flat();
    for (int k = 0; k < n * n; ++k) {
      if (!vals[std::size_t(k)].is_number()) fail(join(path, "values"), "must contain only numbers");
      flat[k] = vals[std::size_t(k)].get<double>();
    }
    return Potential(std::move(g));
  }
  fail(join(path, "kind"), "unknown potential kind '" + kind + "' (expected zero, cos2, custom-samples)");
}

HamiltonianModel parse_hamiltonian(const json& j, const std::string& path) {
  check_object(j, path, {"kind", "beta", "potential"});
  const std::string kind = text(j, path, "kind", "power_upwind");
  if (kind != "power_upwind") fail(join(path, "kind"), "only 'power_upwind' can be configured from JSON");
  const double beta = number(j, path, "beta");
  if (!(beta > 1.0 && beta <= 2.0)) fail(join(path, "beta"), "must lie in (1, 2]");
  Potential pot = j.contains("potential") ? parse_potential(j.at("potential"), join(path, "potential")) : Potential::zero();
  return HamiltonianModel::power_upwind(beta, std::move(pot));
}

CouplingModel parse_coupling(const json& j, const std::string& path) {
  check_object(j, path, {"kind", "params"});
  const std::string kind = text(j, path, "kind", "identity");
  const json& p = params_of(j, path);
  const std::string pp = join(path, "params");
  if (kind == "identity") {
    check_object(p, pp, {});
    return CouplingModel::identity();
  }
  if (kind == "power") {
    check_object(p, pp, {"gamma"});
    const double gamma = number(p, pp, "gamma");
    if (!(gamma > 0)) fail(join(pp, "gamma"), "must be positive");
    return CouplingModel::power(gamma);
  }
  if (kind == "log_shifted") {
    check_object(p, pp, {"eps"});
    const double eps = number(p, pp, "eps");
    if (!(eps > 0)) fail(join(pp, "eps"), "must be positive");
    return CouplingModel::log_shifted(eps);
  }
  fail(join(path, "kind"), "unknown coupling kind '" + kind + "' (expected identity, power, log_shifted)");
}

FieldSampler parse_u0(const json& j, const std::string& path) {
  check_object(j, path, {"kind", "params"});
  const std::string kind = text(j, path, "kind", "zero");
  const json& p = params_of(j, path);
  const std::string pp = join(path, "params");
  if (kind == "zero") {
    check_object(p, pp, {});
    return [](double, double) { return 0.0; };
  }
  if (kind == "constant") {
    check_object(p, pp, {"value"});
    const double c = number(p, pp, "value");
    return [c](double, double) { return c; };
  }
  if (kind == "cos") {
    check_object(p, pp, {"amplitude", "mode"});
    const double a = number(p, pp, "amplitude", 1.0);
    const auto [k1, k2] = mode_of(p, pp);
    return [a, k1, k2](double x1, double x2) { return a * std::cos(kTwoPi * (k1 * x1 + k2 * x2)); };
  }
  fail(join(path, "kind"), "unknown u0 kind '" + kind + "' (expected zero, constant, cos)");
}

FieldSampler parse_density(const json& j, const std::string& path) {
  check_object(j, path, {"kind", "params"});
  const std::string kind = text(j, path, "kind", "uniform");
  const json& p = params_of(j, path);
  const std::string pp = join(path, "params");
  if (kind == "uniform") {
    check_object(p, pp, {});
    return [](double, double) { return 1.0; };
  }
  if (kind == "cos") {
    check_object(p, pp, {"amplitude", "mode"});
    const double a = number(p, pp, "amplitude", 0.5);
    if (!(std::abs(a) <= 1.0)) fail(join(pp, "amplitude"), "must satisfy |amplitude| <= 1 so the density stays nonnegative");
    const auto [k1, k2] = mode_of(p, pp);
    return [a, k1, k2](double x1, double x2) { return 1.0 + a * std::cos(kTwoPi * (k1 * x1 + k2 * x2)); };
  }
  if (kind == "gaussian") {
    check_object(p, pp, {"center", "sigma"});
    double c1 = 0.5, c2 = 0.5;
    if (p.contains("center")) {
      const json& c = p.at("center");
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
        fail(join(pp, "center"), "must be an array of two numbers");
      c1 = c[0].get<double>();
      c2 = c[1].get<double>();
    }
    const double sigma = number(p, pp, "sigma", 0.1);
    if (!(sigma > 0)) fail(join(pp, "sigma"), "must be positive");
    // Periodized over the nearest images; normalized later by cell averaging.
    return [c1, c2, sigma](double x1, double x2) {
      double acc = 0;
      for (int a = -1; a <= 1; ++a)
        for (int b = -1; b <= 1; ++b) {
          const double d1 = x1 - c1 + a, d2 = x2 - c2 + b;
          acc += std::exp(-(d1 * d1 + d2 * d2) / (2 * sigma * sigma));
        }
      return acc;
    };
  }
  fail(join(path, "kind"), "unknown mT kind '" + kind + "' (expected uniform, cos, gaussian)");
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  check_object(doc, "", {"problem", "discretization", "solver", "output"});
  RunConfig cfg;
  cfg.source = doc;

  if (!doc.contains("problem")) fail("problem", "required key is missing");
  const json& pj = doc.at("problem");
  check_object(pj, "problem", {"nu", "T", "hamiltonian", "coupling", "u0", "mT"});
  cfg.problem.nu = number(pj, "problem", "nu");
  if (!(cfg.problem.nu > 0)) fail("problem.nu", "must be positive");
  cfg.problem.horizon = number(pj, "problem", "T");
  if (!(cfg.problem.horizon > 0)) fail("problem.T", "must be positive");
  if (!pj.contains("hamiltonian")) fail("problem.hamiltonian", "required key is missing");
  cfg.problem.hamiltonian = parse_hamiltonian(pj.at("hamiltonian"), "problem.hamiltonian");
  if (pj.contains("coupling")) cfg.problem.coupling = parse_coupling(pj.at("coupling"), "problem.coupling");
  if (pj.contains("u0")) cfg.problem.u0 = parse_u0(pj.at("u0"), "problem.u0");
  if (pj.contains("mT")) cfg.problem.m_T = parse_density(pj.at("mT"), "problem.mT");

  if (!doc.contains("discretization")) fail("discretization", "required key is missing");
  const json& dj = doc.at("discretization");
  check_object(dj, "discretization", {"n_h", "n_t"});
  cfg.solver.n_h = integer(dj, "discretization", "n_h");
  if (cfg.solver.n_h < 4) fail("discretization.n_h", "must be at least 4");
  cfg.solver.n_t = integer(dj, "discretization", "n_t");
  if (cfg.solver.n_t < 1) fail("discretization.n_t", "must be positive");

  const json sj = doc.value("solver", json::object());
  check_object(sj, "solver", {"damping", "tol_fixed_point", "max_outer", "tol_newton", "max_newton", "tol_lin", "tol_check"});
  cfg.solver.damping = number(sj, "solver", "damping", 0.5);
  if (!(cfg.solver.damping > 0 && cfg.solver.damping <= 1)) fail("solver.damping", "must lie in (0, 1]");
  cfg.solver.tol_fixed_point = number(sj, "solver", "tol_fixed_point", 1e-8);
  if (!(cfg.solver.tol_fixed_point > 0)) fail("solver.tol_fixed_point", "must be positive");
  cfg.solver.max_outer = integer(sj, "solver", "max_outer", 200);
  if (cfg.solver.max_outer < 1) fail("solver.max_outer", "must be positive");
  cfg.solver.newton.tol = number(sj, "solver", "tol_newton", 1e-10);
  if (!(cfg.solver.newton.tol > 0)) fail("solver.tol_newton", "must be positive");
  cfg.solver.newton.max_iterations = integer(sj, "solver", "max_newton", 50);
  if (cfg.solver.newton.max_iterations < 1) fail("solver.max_newton", "must be positive");
  cfg.solver.linear.tol = number(sj, "solver", "tol_lin", 1e-12);
  if (!(cfg.solver.linear.tol > 0)) fail("solver.tol_lin", "must be positive");
  cfg.solver.newton.linear_tol = cfg.solver.linear.tol;
  cfg.tol_check = number(sj, "solver", "tol_check", 1e-6);
  if (!(cfg.tol_check > 0)) fail("solver.tol_check", "must be positive");

  const json oj = doc.value("output", json::object());
  check_object(oj, "output", {"dir", "dump_fields", "diagnostics_alpha"});
  cfg.output.dir = text(oj, "output", "dir", ".");
  if (oj.contains("dump_fields")) {
    if (!oj.at("dump_fields").is_boolean()) fail("output.dump_fields", "must be a boolean");
    cfg.output.dump_fields = oj.at("dump_fields").get<bool>();
  }
  if (oj.contains("diagnostics_alpha")) {
    const json& a = oj.at("diagnostics_alpha");
    if (a.is_number()) {
      cfg.output.alpha_grad = a.get<double>();
    } else {
      check_object(a, "output.diagnostics_alpha", {"m", "grad"});
      cfg.output.alpha_m = number(a, "output.diagnostics_alpha", "m", 1.5);
      cfg.output.alpha_grad = number(a, "output.diagnostics_alpha", "grad", 1.25);
    }
    if (!(cfg.output.alpha_m >= 1 && cfg.output.alpha_m < 2)) fail("output.diagnostics_alpha.m", "must lie in [1, 2)");
    if (!(cfg.output.alpha_grad >= 1 && cfg.output.alpha_grad < 4.0 / 3.0))
      fail("output.diagnostics_alpha", "gradient exponent must lie in [1, 4/3)");
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": invalid JSON: " + e.what());
  }
  return parse_run_config(doc);
}

}  // namespace mfg

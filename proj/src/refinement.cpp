#include "mfg/refinement.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace mfg {

std::vector<RefineLevel> parse_levels(const std::string& spec) {
  std::vector<RefineLevel> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto x = item.find('x');
    if (x == std::string::npos) throw InvalidArgument("level '" + item + "' is not of the form <n_h>x<n_t>");
    try {
      std::size_t used_a = 0, used_b = 0;
      const std::string a = item.substr(0, x), b = item.substr(x + 1);
      const int n_h = std::stoi(a, &used_a);
      const int n_t = std::stoi(b, &used_b);
      if (used_a != a.size() || used_b != b.size()) throw std::invalid_argument("trailing characters");
      out.push_back({n_h, n_t});
    } catch (const std::logic_error&) {
      throw InvalidArgument("level '" + item + "' is not of the form <n_h>x<n_t>");
    }
  }
  return out;
}

void validate_levels(const std::vector<RefineLevel>& levels) {
  if (levels.size() < 2) throw InvalidArgument("need >= 2 levels for a refinement study");
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k].n_h < 4 || levels[k].n_t < 1) throw InvalidArgument("level sizes must satisfy n_h >= 4, n_t >= 1");
    if (k > 0 && levels[k].n_h % levels[k - 1].n_h != 0)
      throw InvalidArgument("n_h of each level must divide the next (" + std::to_string(levels[k - 1].n_h) + " vs " +
                            std::to_string(levels[k].n_h) + ")");
  }
}

namespace {

struct Overlap {
  int a;
  int b;
  double length;
};

// Common refinement of two partitions of the same interval. `cell_a` maps a
// point to the cell index of partition a (likewise b).
template <typename CellA, typename CellB>
std::vector<Overlap> overlaps(std::vector<double> breaks, double length, CellA cell_a, CellB cell_b) {
  breaks.push_back(0.0);
  breaks.push_back(length);
  std::sort(breaks.begin(), breaks.end());
  std::vector<Overlap> out;
  const double eps = 1e-12 * length;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    const double lo = breaks[k], hi = breaks[k + 1];
    if (hi - lo <= eps) continue;
    const double mid = 0.5 * (lo + hi);
    out.push_back({cell_a(mid), cell_b(mid), hi - lo});
  }
  return out;
}

// Cells of a periodic grid are centered on the nodes: cell i is [ih - h/2, ih + h/2].
std::vector<Overlap> space_overlaps(int na, int nb) {
  std::vector<double> breaks;
  for (int i = 0; i < na; ++i) breaks.push_back((i + 0.5) / na);
  for (int i = 0; i < nb; ++i) breaks.push_back((i + 0.5) / nb);
  return overlaps(
      breaks, 1.0, [na](double x) { return wrap(static_cast<int>(std::lround(x * na)), na); },
      [nb](double x) { return wrap(static_cast<int>(std::lround(x * nb)), nb); });
}

std::vector<Overlap> time_overlaps(int nta, int ntb, double horizon) {
  std::vector<double> breaks;
  for (int n = 1; n < nta; ++n) breaks.push_back(horizon * n / nta);
  for (int n = 1; n < ntb; ++n) breaks.push_back(horizon * n / ntb);
  return overlaps(
      breaks, horizon, [=](double t) { return std::min(nta - 1, static_cast<int>(t / horizon * nta)); },
      [=](double t) { return std::min(ntb - 1, static_cast<int>(t / horizon * ntb)); });
}

}  // namespace

double reconstruction_l1_distance(const Trajectory& a, const Trajectory& b, ReconstructionSlices which) {
  const double horizon = a.horizon();
  if (std::abs(horizon - b.horizon()) > 1e-12 * horizon) throw InvalidArgument("trajectories cover different horizons");
  const auto sx = space_overlaps(a.grid_size(), b.grid_size());
  const auto st = time_overlaps(a.steps(), b.steps(), horizon);
  const int shift = which == ReconstructionSlices::Bellman ? 1 : 0;
  double total = 0;
  for (const auto& t : st) {
    const auto& va = a[t.a + shift].values();
    const auto& vb = b[t.b + shift].values();
    double slab = 0;
    for (const auto& x : sx)
      for (const auto& y : sx) slab += std::abs(va(x.a, y.a) - vb(x.b, y.b)) * x.length * y.length;
    total += slab * t.length;
  }
  return total;
}

bool RefineTable::all_converged() const {
  return std::all_of(rows.begin(), rows.end(), [](const RefineRow& r) { return r.solved && r.converged; });
}

unsigned thread_cap_from_env() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MFG_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = static_cast<unsigned>(v);
  }
  return cap;
}

RefineTable run_refinement(const RunConfig& config, const std::vector<RefineLevel>& levels, unsigned max_threads) {
  validate_levels(levels);
  RefineTable table;
  table.rows.resize(levels.size());
  std::vector<std::optional<Solution>> solutions(levels.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < levels.size(); k = next++) {
      RefineRow& row = table.rows[k];
      row.level = levels[k];
      try {
        SolveConfig sc = config.solver;
        sc.n_h = levels[k].n_h;
        sc.n_t = levels[k].n_t;
        const DiscreteProblem problem(config.problem, sc.n_h, sc.n_t);
        Solution sol = solve(problem, sc);
        row.solved = true;
        row.converged = sol.converged;
        row.outer_iterations = sol.outer_iterations;
        row.final_delta = sol.final_delta;
        row.diagnostics = diagnose(sol.u, sol.m, problem, config.diagnostics_options());
        solutions[k] = std::move(sol);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(max_threads, static_cast<unsigned>(levels.size())));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t k = 1; k < levels.size(); ++k) {
    if (!solutions[k] || !solutions[k - 1]) continue;
    RefineRow& row = table.rows[k];
    row.u_cauchy = reconstruction_l1_distance(solutions[k - 1]->u, solutions[k]->u, ReconstructionSlices::Bellman);
    row.m_cauchy = reconstruction_l1_distance(solutions[k - 1]->m, solutions[k]->m, ReconstructionSlices::FokkerPlanck);
    const RefineRow& prev = table.rows[k - 1];
    if (prev.u_cauchy && *prev.u_cauchy > 0) row.u_ratio = *row.u_cauchy / *prev.u_cauchy;
    if (prev.m_cauchy && *prev.m_cauchy > 0) row.m_ratio = *row.m_cauchy / *prev.m_cauchy;
  }
  return table;
}

}  // namespace mfg

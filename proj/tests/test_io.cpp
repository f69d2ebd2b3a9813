#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "mfg/commands.hpp"
#include "mfg/config.hpp"
#include "mfg/field_dump.hpp"
#include "mfg/refinement.hpp"

using namespace mfg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(MFG_SOURCE_DIR) / "configs";

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("mfg_test_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

json base_config() {
  std::ifstream in(kConfigs / "fixture_a.json");
  return json::parse(in);
}

std::string config_error(const json& doc) {
  try {
    parse_run_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path write_json(const fs::path& dir, const std::string& name, const json& doc) {
  const fs::path p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

std::vector<unsigned char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Minimal RFC-4180 reader: quoted fields, doubled quotes, CRLF records.
std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows(1);
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t k = 0; k < text.size(); ++k) {
    const char c = text[k];
    if (quoted) {
      if (c == '"' && k + 1 < text.size() && text[k + 1] == '"') {
        field += '"';
        ++k;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      rows.back().push_back(field);
      field.clear();
    } else if (c == '\r' && k + 1 < text.size() && text[k + 1] == '\n') {
      rows.back().push_back(field);
      field.clear();
      rows.emplace_back();
      ++k;
    } else {
      field += c;
    }
    any = true;
  }
  if (!field.empty()) rows.back().push_back(field);
  if (any && rows.back().empty()) rows.pop_back();
  return rows;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config parsing") {
  const auto cfg = parse_run_config(base_config());
  CHECK(cfg.problem.nu == 0.3);
  CHECK(cfg.problem.horizon == 0.5);
  CHECK(cfg.problem.hamiltonian.beta() == 1.5);
  CHECK(cfg.problem.coupling.kind() == CouplingKind::Power);
  CHECK(cfg.solver.n_h == 4);
  CHECK(cfg.solver.n_t == 2);
  CHECK(cfg.solver.tol_fixed_point == 1e-13);

  for (const char* name : {"constant.json", "fixture_a_ladder.json", "bump.json"}) CHECK_NOTHROW(load_run_config(kConfigs / name));
}

TEST_CASE("config errors name the offending key") {
  auto doc = base_config();
  doc["solver"]["damping"] = 0.0;
  CHECK(config_error(doc).find("solver.damping") != std::string::npos);

  doc = base_config();
  doc["problem"]["colour"] = 1;
  CHECK(config_error(doc).find("problem.colour") != std::string::npos);

  doc = base_config();
  doc["problem"]["hamiltonian"]["beta"] = 2.5;
  CHECK(config_error(doc).find("problem.hamiltonian.beta") != std::string::npos);

  doc = base_config();
  doc["discretization"]["n_h"] = 3;
  CHECK(config_error(doc).find("discretization.n_h") != std::string::npos);

  doc = base_config();
  doc["problem"]["coupling"] = {{"kind", "power"}, {"params", {{"gamma", -1}}}};
  CHECK(config_error(doc).find("problem.coupling.params.gamma") != std::string::npos);

  doc = base_config();
  doc["problem"].erase("nu");
  CHECK(config_error(doc).find("problem.nu") != std::string::npos);

  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("custom potential samples") {
  auto doc = base_config();
  json values = json::array();
  for (int k = 0; k < 16; ++k) values.push_back(0.1 * k);
  doc["problem"]["hamiltonian"]["potential"] = {{"kind", "custom-samples"}, {"values", values}};
  const auto cfg = parse_run_config(doc);
  const NumericalHamiltonian h(cfg.problem.hamiltonian, 4);
  CHECK(h.potential()(1, 2) == doctest::Approx(0.6));
  CHECK_THROWS_AS(NumericalHamiltonian(cfg.problem.hamiltonian, 8), InvalidArgument);

  values.push_back(1.0);
  doc["problem"]["hamiltonian"]["potential"]["values"] = values;
  CHECK(config_error(doc).find("potential.values") != std::string::npos);
}

TEST_CASE("field dump round trip is bit-identical") {
  std::mt19937_64 rng(1);
  std::vector<GridFunction> us, ms;
  for (int k = 0; k <= 3; ++k) {
    us.push_back(test::random_grid(5, rng));
    ms.push_back(test::random_density(5, rng));
  }
  us[1](2, 3) = -0.0;
  ms[2](0, 0) = 5e-324;
  const FieldDump dump{0.3, 0.75, Trajectory(0.25, us), Trajectory(0.25, ms)};
  const auto bytes = encode_field_dump(dump);
  CHECK(bytes.size() == FieldDump::expected_bytes(5, 3));
  CHECK(bytes.size() == 32 + 2 * 4 * 25 * 8);
  CHECK(std::memcmp(bytes.data(), "MFGF", 4) == 0);
  CHECK(bytes[4] == 1);
  CHECK(bytes[8] == 5);
  CHECK(bytes[12] == 3);

  const auto back = decode_field_dump(bytes);
  CHECK(back.nu == 0.3);
  CHECK(back.horizon == 0.75);
  for (int k = 0; k <= 3; ++k) {
    CHECK(std::memcmp(back.u[k].values().data(), us[k].values().data(), 25 * sizeof(double)) == 0);
    CHECK(std::memcmp(back.m[k].values().data(), ms[k].values().data(), 25 * sizeof(double)) == 0);
  }
  CHECK(encode_field_dump(back) == bytes);

  const auto dir = scratch("dump");
  write_field_dump(dir / "a.mfgf", dump);
  CHECK(slurp(dir / "a.mfgf") == bytes);
  CHECK(encode_field_dump(read_field_dump(dir / "a.mfgf")) == bytes);
}

TEST_CASE("field dump rejects malformed files") {
  const FieldDump dump{0.5, 1.0, Trajectory(2, 0.5, GridFunction(4, 1.0)), Trajectory(2, 0.5, GridFunction(4, 1.0))};
  const auto bytes = encode_field_dump(dump);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_field_dump(truncated), FormatError);
  CHECK_THROWS_AS(decode_field_dump(std::vector<unsigned char>(bytes.begin(), bytes.begin() + 10)), FormatError);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_field_dump(magic), FormatError);

  auto version = bytes;
  version[4] = 2;
  CHECK_THROWS_AS(decode_field_dump(version), FormatError);

  auto extra = bytes;
  extra.push_back(0);
  CHECK_THROWS_AS(decode_field_dump(extra), FormatError);

  CHECK_THROWS_AS(read_field_dump("/nonexistent/file.mfgf"), FormatError);
}

TEST_CASE("refinement levels") {
  const auto levels = parse_levels("8x8,16x16,32x32");
  REQUIRE(levels.size() == 3);
  CHECK(levels[1].n_h == 16);
  CHECK(levels[2].n_t == 32);
  CHECK_NOTHROW(validate_levels(levels));
  CHECK_THROWS_AS(parse_levels("8x8,16"), InvalidArgument);
  CHECK_THROWS_AS(parse_levels("8x8,16x16a"), InvalidArgument);

  try {
    validate_levels(parse_levels("8x8"));
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("need >= 2 levels") != std::string::npos);
  }
  CHECK_THROWS_AS(validate_levels(parse_levels("8x8,12x12")), InvalidArgument);
}

TEST_CASE("reconstruction distance") {
  // Same function on nested grids at the same time resolution: the coarse
  // cells see the average shift exactly.
  const Trajectory a(2, 0.5, GridFunction(4, 1.0));
  const Trajectory b(4, 0.25, GridFunction(8, 1.0));
  CHECK(reconstruction_l1_distance(a, b, ReconstructionSlices::Bellman) <= 1e-15);
  CHECK(reconstruction_l1_distance(a, b, ReconstructionSlices::FokkerPlanck) <= 1e-15);

  // Constants 0 and 1 per slice: distance is the measure of Q.
  const Trajectory z(2, 0.5, GridFunction(4, 0.0));
  CHECK(reconstruction_l1_distance(z, b, ReconstructionSlices::Bellman) == doctest::Approx(1.0));

  // Coarse u^{n+1} vs fine u^{n+1}: slice values c * n only disagree where
  // the fine grid is on its first half-step of a coarse interval.
  std::vector<GridFunction> cs, fs_;
  for (int n = 0; n <= 1; ++n) cs.push_back(GridFunction(4, double(n)));
  for (int n = 0; n <= 2; ++n) fs_.push_back(GridFunction(4, 0.5 * n));
  const Trajectory coarse(1.0, cs), fine(0.5, fs_);
  // Bellman: coarse value 1 on (0, 1); fine 0.5 on (0, 0.5) and 1 on (0.5, 1).
  CHECK(reconstruction_l1_distance(coarse, fine, ReconstructionSlices::Bellman) == doctest::Approx(0.25));
  // Fokker-Planck: coarse 0 on (0, 1); fine 0 then 0.5.
  CHECK(reconstruction_l1_distance(coarse, fine, ReconstructionSlices::FokkerPlanck) == doctest::Approx(0.25));

  // A spatial checker pattern against its cell average on a coarser grid.
  GridFunction checker(8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) checker(i, j) = (i + j) % 2 == 0 ? 1.0 : -1.0;
  const Trajectory tc(1, 1.0, checker);
  const Trajectory tz(1, 1.0, GridFunction(4, 0.0));
  CHECK(reconstruction_l1_distance(tz, tc, ReconstructionSlices::Bellman) == doctest::Approx(1.0));
}

TEST_CASE("csv writers follow RFC-4180") {
  const auto dir = scratch("csv");
  DiagnosticsReport r;
  r.duality_residual = 1.25e-9;
  write_diagnostics_csv(dir / "d.csv", r);
  const auto text = read_text(dir / "d.csv");
  const auto rows = parse_csv(text);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == diagnostics_columns());
  CHECK(rows[1].size() == rows[0].size());
  CHECK(std::stod(rows[1][1]) == 1.25e-9);
  CHECK(text.find("\r\n") != std::string::npos);

  RefineTable table;
  RefineRow row;
  row.level = {8, 8};
  row.error = "bad, \"quoted\" thing";
  table.rows.push_back(row);
  write_refine_csv(dir / "r.csv", table);
  const auto rrows = parse_csv(read_text(dir / "r.csv"));
  REQUIRE(rrows.size() == 2);
  CHECK(rrows[1].size() == rrows[0].size());
  CHECK(rrows[1].back() == "bad, \"quoted\" thing");
  CHECK(rrows[1][2] == "failed");
}

TEST_CASE("cmd_solve and cmd_check round trip") {
  const auto dir = scratch("solve");
  std::ostringstream out, err;
  CommandContext ctx{dir, &out, &err, 1};
  CHECK(cmd_solve(kConfigs / "fixture_a.json", ctx) == 0);
  for (const char* f : {"fields.mfgf", "diagnostics.json", "diagnostics.csv", "history.csv"}) CHECK(fs::exists(dir / f));
  CHECK(fs::file_size(dir / "fields.mfgf") == FieldDump::expected_bytes(4, 2));
  const json diag = json::parse(read_text(dir / "diagnostics.json"));
  CHECK(diag["converged"] == true);
  CHECK(diag["diagnostics"]["duality_residual"].get<double>() <= 1e-7);

  CHECK(cmd_check("fields.mfgf", kConfigs / "fixture_a.json", ctx) == 0);
  const json report = json::parse(out.str().substr(out.str().find('{')));
  CHECK(report["passed"] == true);

  // Determinism of the dump.
  const auto first = slurp(dir / "fields.mfgf");
  CHECK(cmd_solve(kConfigs / "fixture_a.json", ctx) == 0);
  CHECK(slurp(dir / "fields.mfgf") == first);

  // A perturbed dump fails the check with the stencil-sized residual.
  auto dump = read_field_dump(dir / "fields.mfgf");
  dump.u[1](2, 2) += 1e-3;
  write_field_dump(dir / "perturbed.mfgf", dump);
  std::ostringstream out2;
  CommandContext ctx2{dir, &out2, &err, 1};
  CHECK(cmd_check("perturbed.mfgf", kConfigs / "fixture_a.json", ctx2) == 2);
  const json bad = json::parse(out2.str());
  CHECK(bad["bellman_linf"].get<double>() >= 1e-3 / 0.25);

  // Truncated dump.
  auto bytes = slurp(dir / "fields.mfgf");
  bytes.resize(bytes.size() - 8);
  std::ofstream(dir / "short.mfgf", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  std::ostringstream err3;
  CommandContext ctx3{dir, &out, &err3, 1};
  CHECK(cmd_check("short.mfgf", kConfigs / "fixture_a.json", ctx3) == 1);
  CHECK(err3.str().find("length") != std::string::npos);

  // Shape mismatch.
  CHECK(cmd_check("fields.mfgf", kConfigs / "constant.json", ctx3) == 1);
}

TEST_CASE("cmd_solve on constant data") {
  const auto dir = scratch("constant");
  std::ostringstream out, err;
  CommandContext ctx{dir, &out, &err, 1};
  CHECK(cmd_solve(kConfigs / "constant.json", ctx) == 0);
  const json diag = json::parse(read_text(dir / "diagnostics.json"));
  CHECK(diag["diagnostics"]["duality_residual"].get<double>() <= 1e-12);
}

TEST_CASE("cmd_solve exit codes") {
  const auto dir = scratch("codes");
  std::ostringstream out, err;
  CommandContext ctx{dir, &out, &err, 1};

  auto doc = base_config();
  doc["solver"]["damping"] = 0;
  CHECK(cmd_solve(write_json(dir, "bad.json", doc), ctx) == 1);
  CHECK(err.str().find("damping") != std::string::npos);

  doc = base_config();
  doc["solver"]["max_outer"] = 1;
  CHECK(cmd_solve(write_json(dir, "short.json", doc), ctx) == 2);
  CHECK(fs::exists(dir / "fields.mfgf"));
  CHECK(fs::exists(dir / "history.csv"));
}

TEST_CASE("cmd_oracle") {
  const auto dir = scratch("oracle");
  std::ostringstream out, err;
  CommandContext ctx{dir, &out, &err, 1};
  CHECK(cmd_oracle(kConfigs / "fixture_a.json", ctx) == 0);

  auto doc = base_config();
  doc["discretization"] = {{"n_h", 4}, {"n_t", 2}};
  doc["problem"]["hamiltonian"] = {{"kind", "power_upwind"}, {"beta", 2.0}};
  doc["problem"]["coupling"] = {{"kind", "identity"}};
  std::ostringstream out2;
  CommandContext ctx2{dir, &out2, &err, 1};
  CHECK(cmd_oracle(write_json(dir, "const.json", doc), ctx2) == 0);
  const auto text = out2.str();
  const double du = std::stod(text.substr(text.find('=') + 1));
  CHECK(du <= 1e-13);

  doc["discretization"] = {{"n_h", 32}, {"n_t", 2}};
  std::ostringstream err2;
  CommandContext ctx3{dir, &out, &err2, 1};
  CHECK(cmd_oracle(write_json(dir, "big.json", doc), ctx3) == 1);
  CHECK_FALSE(err2.str().empty());
}

TEST_CASE("cmd_refine") {
  const auto dir = scratch("refine");
  std::ostringstream out, err;
  CommandContext ctx{dir, &out, &err, 2};

  auto doc = base_config();
  doc["problem"]["hamiltonian"] = {{"kind", "power_upwind"}, {"beta", 2.0}};
  doc["problem"]["coupling"] = {{"kind", "identity"}};
  CHECK(cmd_refine(write_json(dir, "const.json", doc), "4x2,8x4,16x8", ctx) == 0);
  const auto rows = parse_csv(read_text(dir / "refine.csv"));
  REQUIRE(rows.size() == 4);
  const auto& header = rows[0];
  const auto col = [&](const std::string& name) {
    return std::size_t(std::find(header.begin(), header.end(), name) - header.begin());
  };
  // m is exactly 1 on every level. u^n = n dt is piecewise constant in time,
  // so two levels differ by T dt_coarse / 4 in L^1(Q).
  for (int r = 2; r <= 3; ++r) {
    const double dt_coarse = 0.5 / std::stoi(rows[r - 1][col("n_t")]);
    CHECK(std::stod(rows[r][col("u_cauchy_l1")]) == doctest::Approx(0.5 * dt_coarse / 4).epsilon(1e-12));
    CHECK(std::stod(rows[r][col("m_cauchy_l1")]) <= 1e-12);
  }
  CHECK(std::stod(rows[3][col("u_ratio")]) == doctest::Approx(0.5).epsilon(1e-12));

  std::ostringstream err2;
  CommandContext ctx2{dir, &out, &err2, 1};
  CHECK(cmd_refine(kConfigs / "fixture_a.json", "8x8", ctx2) == 1);
  CHECK(err2.str().find("need >= 2 levels") != std::string::npos);
}

TEST_CASE("thread cap from the environment") {
  setenv("MFG_THREADS", "3", 1);
  CHECK(thread_cap_from_env() == 3);
  setenv("MFG_THREADS", "junk", 1);
  CHECK(thread_cap_from_env() >= 1);
  unsetenv("MFG_THREADS");
}

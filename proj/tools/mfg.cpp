#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "mfg/commands.hpp"
#include "mfg/refinement.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Finite difference solver for mean field games on the 2-D torus"};
  app.require_subcommand(1);

  std::string output_dir;
  app.add_option("--output-dir", output_dir, "Directory for all written artifacts (overrides output.dir)");

  std::string config, levels, dump;
  auto* solve = app.add_subcommand("solve", "Solve the coupled system and write fields, diagnostics and history");
  solve->add_option("config", config, "JSON run configuration")->required();

  auto* refine = app.add_subcommand("refine", "Run a grid-refinement study and write refine.csv");
  refine->add_option("config", config, "JSON run configuration")->required();
  refine->add_option("--levels", levels, "Comma-separated <n_h>x<n_t> list, e.g. 8x8,16x16,32x32")->required();

  auto* check = app.add_subcommand("check", "Recompute residuals and diagnostics from a field dump");
  check->add_option("dump", dump, "Field dump written by solve")->required();
  check->add_option("config", config, "JSON run configuration")->required();

  auto* oracle = app.add_subcommand("oracle", "Compare the modular solver against the monolithic Newton oracle");
  oracle->add_option("config", config, "JSON run configuration")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Usage errors share exit code 1 with every other error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  mfg::CommandContext ctx;
  if (!output_dir.empty()) ctx.output_dir = output_dir;
  ctx.max_threads = mfg::thread_cap_from_env();

  if (*solve) return mfg::cmd_solve(config, ctx);
  if (*refine) return mfg::cmd_refine(config, levels, ctx);
  if (*check) return mfg::cmd_check(dump, config, ctx);
  if (*oracle) return mfg::cmd_oracle(config, ctx);
  return 1;
}

// Command-line driver: convergence studies, the L-shape benchmark and single runs.

#include "biot/config.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> scheme, k, r, levels, solver, out, tau, T;
  std::vector<std::string> set;
  bool dump_mesh = false;
  bool dump_matrices = false;
  std::optional<int> checkpoint_every;
  bool print_config = false;
};

void add_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "Config file with key = value lines");
  cmd->add_option("--scheme", f.scheme, "Time discretization: dG or cG");
  cmd->add_option("--k", f.k, "Polynomial degree in time");
  cmd->add_option("--r", f.r, "Displacement degree in space (pressure uses r - 1)");
  cmd->add_option("--levels", f.levels, "Comma-separated refinement levels");
  cmd->add_option("--solver", f.solver, "Slab solver: gmres, direct or diagonalized");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--tau", f.tau, "Explicit slab length (benchmark)");
  cmd->add_option("--T", f.T, "Final time");
  cmd->add_option("--set", f.set, "Additional key=value overrides")->take_all();
  cmd->add_flag("--dump-mesh", f.dump_mesh, "Write mesh_L<level>.txt");
  cmd->add_flag("--dump-matrices", f.dump_matrices, "Write matrix_L<level>_<block>.txt");
  cmd->add_option("--checkpoint-every", f.checkpoint_every, "Checkpoint every n slabs");
  cmd->add_flag("--print-config", f.print_config, "Print the effective config and exit");
}

std::vector<biot::ConfigEntry> collect(const Flags& f) {
  std::vector<biot::ConfigEntry> entries;
  if (!f.config.empty()) entries = biot::read_config_file(f.config);
  const auto push = [&](const char* key, const std::optional<std::string>& v) {
    if (v) entries.emplace_back(key, *v);
  };
  push("scheme", f.scheme);
  push("k", f.k);
  push("r", f.r);
  push("levels", f.levels);
  push("solver", f.solver);
  push("out", f.out);
  push("tau", f.tau);
  push("T", f.T);
  for (const auto& kv : f.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw biot::ConfigError(biot::ConfigError::Kind::Syntax, kv,
                              "--set expects key=value, got '" + kv + "'");
    }
    entries.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (f.dump_mesh) entries.emplace_back("dump_mesh", "true");
  if (f.dump_matrices) entries.emplace_back("dump_matrices", "true");
  if (f.checkpoint_every) entries.emplace_back("checkpoint_every", std::to_string(*f.checkpoint_every));
  return entries;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time finite elements for dynamic poroelasticity"};
  app.require_subcommand(1);
  Flags flags;
  struct Sub {
    CLI::App* cmd;
    biot::Study study;
  };
  const std::vector<Sub> subs{
      {app.add_subcommand("convergence", "Manufactured-solution convergence study"),
       biot::Study::Convergence},
      {app.add_subcommand("benchmark", "L-shaped benchmark with goal quantities"),
       biot::Study::Benchmark},
      {app.add_subcommand("run", "Single run; choose the case with --set case=..."),
       biot::Study::Single}};
  for (const auto& s : subs) add_flags(s.cmd, flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : biot::kExitConfigError;
  }

  biot::Study study = biot::Study::Convergence;
  for (const auto& s : subs) {
    if (s.cmd->parsed()) study = s.study;
  }

  biot::RunConfig config;
  try {
    config = biot::make_config(collect(flags), study);
  } catch (const biot::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return biot::kExitConfigError;
  }
  if (flags.print_config) {
    std::cout << biot::describe(config) << '\n';
    return biot::kExitSuccess;
  }
  const int status = biot::run(config, std::cerr);
  if (status == biot::kExitSuccess) {
    std::cout << "wrote results to " << config.out.string() << '\n';
  }
  return status;
}

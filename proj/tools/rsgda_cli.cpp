// Command-line front end. Talks to the library only through the C interface.
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rsgda/rsgda.h"

namespace {

struct Invocation {
  std::string config;
  std::string out_dir;
  std::vector<std::uint64_t> seeds;
  bool waive = false;
};

using CommandFn = rsgda_status (*)(const char*, const rsgda_cli_options*);

void add_command(CLI::App& app, const char* name, const char* help, Invocation& inv,
                 CommandFn fn, CommandFn& chosen) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("config", inv.config, "JSON config file")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", inv.out_dir, "output directory (overrides config and RSGDA_OUT_DIR)");
  sub->add_option("--seeds", inv.seeds, "comma-separated seeds (overrides config)")->delimiter(',');
  sub->add_flag("--waive-constraints", inv.waive,
                "run even when step sizes violate the theoretical constraints");
  sub->callback([&chosen, fn] { chosen = fn; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rsgda: stochastic minimax optimizers and diagnostics"};
  app.set_version_flag("--version", std::string(rsgda_version()));
  app.require_subcommand(1);

  Invocation inv;
  CommandFn chosen = nullptr;
  add_command(app, "run", "run one optimizer over seeds and write traces", inv, rsgda_cmd_run, chosen);
  add_command(app, "compare", "run several optimizers at an equal gradient budget", inv,
              rsgda_cmd_compare, chosen);
  add_command(app, "pselect", "choose the RSGDA probability p from a probe run", inv,
              rsgda_cmd_pselect, chosen);
  add_command(app, "check", "verify oracle assumptions and per-step inequalities", inv,
              rsgda_cmd_check, chosen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    // Usage mistakes count as configuration errors.
    return code == 0 ? 0 : rsgda_exit_code(RSGDA_E_CONFIG);
  }

  rsgda_cli_options opts{};
  opts.out_dir = inv.out_dir.empty() ? nullptr : inv.out_dir.c_str();
  opts.seeds = inv.seeds.empty() ? nullptr : inv.seeds.data();
  opts.n_seeds = inv.seeds.size();
  opts.waive_constraints = inv.waive ? 1 : 0;

  const rsgda_status st = chosen(inv.config.c_str(), &opts);
  if (st != RSGDA_OK) std::fprintf(stderr, "rsgda: %s\n", rsgda_last_error());
  return rsgda_exit_code(st);
}

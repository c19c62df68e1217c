#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "critpar/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Parallel SGD simulator: speedup sweeps, drift bounds and noise estimators"};
  app.require_subcommand(1);

  critpar::CommandOptions options;
  std::uint64_t seed = 0;
  for (const char* name : {"run", "tune", "speedup", "rt-verify", "estimate", "verify-theory"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", options.config_path, "INI config file (defaults when omitted)");
    sub->add_option("--out", options.out_path, "CSV output path (stdout when omitted)");
    sub->add_option("--seed", seed, "master seed, overrides seeds.master");
    sub->add_option("--set", options.overrides, "override as section.key=value (repeatable)");
    sub->callback([&options, &seed, sub] {
      options.subcommand = sub->get_name();
      if (sub->count("--seed")) options.seed = seed;
    });
  }

  CLI11_PARSE(app, argc, argv);
  if (options.config_path.empty() && app.get_subcommands().front()->count("--config")) {
    std::cerr << "error: --config path is empty\n";
    return 2;
  }
  try {
    return critpar::run_command(options, std::cout, std::cerr);
  } catch (const critpar::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

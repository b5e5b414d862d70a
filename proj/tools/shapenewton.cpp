#include "shapenewton/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace shapenewton;

int main(int argc, char** argv) {
  CLI::App app{"Newton and gradient shape optimization for J(Omega) = integral of f over Omega"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::string config;
  auto* run = app.add_subcommand("run", "run one experiment");
  run->add_option("config", config, "TOML or JSON config file")->required();

  std::vector<std::string> configs;
  auto* compare = app.add_subcommand("compare", "run several experiments and tabulate the final values");
  compare->add_option("configs", configs, "config files");

  VerifyOptions vopts;
  std::string field = "Test1";
  auto* verify = app.add_subcommand("verify", "derivative, Hessian and invariant checks");
  verify->add_option("--sigma-scale", vopts.sigma_scale, "multiply every kernel width by this factor")
      ->check(CLI::PositiveNumber);
  verify->add_option("--field", field, "density used by the checks")
      ->check(CLI::IsMember({"Test1", "Test2", "Constant"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfigError;
  }

  if (*run) return cmd_run(config, std::cout, std::cerr);
  if (*compare) {
    return cmd_compare(std::vector<std::filesystem::path>(configs.begin(), configs.end()), std::cout, std::cerr);
  }
  vopts.field = field == "Test2" ? BuiltinField::Test2 : field == "Constant" ? BuiltinField::Constant : BuiltinField::Test1;
  return cmd_verify(vopts, std::cout, std::cerr);
}

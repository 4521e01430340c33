#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>

#include "synctl/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Hybrid synergistic feedback on S^n and quadrotor trajectory tracking"};
  app.set_version_flag("--version", synctl::kVersion);
  app.require_subcommand(1);

  struct Args {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
  };

  std::vector<std::pair<synctl::Mode, const char*>> modes = {
      {synctl::Mode::sphere_sim, "run the closed loop on S^n and export the arc"},
      {synctl::Mode::quad_sim, "run the quadrotor tracking loop and export the arc"},
      {synctl::Mode::gains, "synthesize the saturated-LQR position gains"},
      {synctl::Mode::verify, "run the potential-function property suites"},
      {synctl::Mode::geodesic_check, "verify post-jump path length against the minimal geodesic"},
  };

  std::vector<std::shared_ptr<Args>> args;
  std::vector<CLI::App*> subs;
  for (const auto& [mode, help] : modes) {
    auto a = std::make_shared<Args>();
    CLI::App* sub = app.add_subcommand(synctl::mode_name(mode), help);
    sub->add_option("--config", a->config, "path to the JSON scenario config")->required();
    sub->add_option("--out", a->out, "output path (overrides config's `output`)");
    sub->add_option("--seed", a->seed, "random seed (overrides config's `seed`)");
    args.push_back(std::move(a));
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (subs[i]->parsed()) {
      synctl::CliOverrides overrides{args[i]->out, args[i]->seed};
      return synctl::run(args[i]->config, modes[i].first, overrides, std::cout);
    }
  }
  return 2;
}

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fopaeq/errors.hpp"
#include "fopaeq/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"FOPA link simulator with kernel and LMS equalisers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", fopaeq::version_string());

  fopaeq::CommandOptions opts;
  std::uint64_t seed = 0;
  std::string config, out = "out";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "experiment config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "override experiment.seed");
    sub->add_option("--out", out, "output directory")->capture_default_str();
    sub->add_flag("--full", opts.full, "full-scale batch counts");
    sub->add_flag("-q,--quiet", opts.quiet, "no progress output");
  };
  auto* sim = app.add_subcommand("simulate", "BER and RMS deviation per stage");
  auto* grid = app.add_subcommand("gridsearch", "kernel hyper-parameter grid at the last stage");
  auto* gain = app.add_subcommand("gain-profile", "FOPA gain and dither RMS versus detuning");
  auto* tones = app.add_subcommand("optimize-tones", "flatten the dithered pump comb");
  for (auto* s : {sim, grid, gain, tones}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  opts.config = config;
  opts.out = out;
  for (auto* s : {sim, grid, gain, tones})
    if (s->count("--seed")) opts.seed = seed;

  try {
    if (*sim) fopaeq::cmd_simulate(opts);
    else if (*grid) fopaeq::cmd_gridsearch(opts);
    else if (*gain) fopaeq::cmd_gain_profile(opts);
    else if (*tones) fopaeq::cmd_optimize_tones(opts);
  } catch (const fopaeq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fopaeq::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

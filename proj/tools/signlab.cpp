#include <iostream>

#include <CLI11.hpp>

#include "signlab/lab/driver.hpp"

int main(int argc, char** argv) {
  using signlab::lab::Invocation;
  using signlab::lab::Verb;

  CLI::App app{"Sign-pattern laboratory for cooperative elliptic systems near the principal eigenvalue"};
  app.require_subcommand(1);

  Invocation invocation;
  std::string out, config;
  double tol = 0.0;
  std::uint64_t seed = 0;

  struct VerbSpec {
    Verb verb;
    const char* help;
  };
  const VerbSpec verbs[] = {
      {Verb::kSolve, "Solve at the configured mu and write every component"},
      {Verb::kSweep, "Sweep mu across the principal eigenvalue and record the sign patterns"},
      {Verb::kAmp, "Estimate the scalar antimaximum interval"},
      {Verb::kAnnex, "Check the 2 x 2 closed-form sign results"},
      {Verb::kCheckHypotheses, "Check the structural hypotheses on the coupling matrix"},
  };
  for (const VerbSpec& v : verbs) {
    CLI::App* sub = app.add_subcommand(signlab::lab::to_string(v.verb), v.help);
    sub->add_option("-c,--config", config, "Experiment configuration file")->required();
    sub->add_option("-o,--out", out, "Output directory (overrides the config)");
    sub->add_option("--tol", tol, "Matrix tolerance (overrides the config)");
    sub->add_option("--seed", seed, "Seed recorded in the manifest");
    sub->callback([&invocation, verb = v.verb] { invocation.verb = verb; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : signlab::lab::exit_code(signlab::ErrorCategory::kConfig);
  }

  invocation.config = config;
  const CLI::App* used = app.get_subcommands().front();
  if (used->count("--out")) invocation.out = out;
  if (used->count("--tol")) invocation.tol = tol;
  if (used->count("--seed")) invocation.seed = seed;
  return signlab::lab::execute(invocation, std::cout, std::cerr);
}

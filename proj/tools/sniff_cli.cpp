// sniff: generate victim models, run the sign-flip extraction attack, inject
// single faults and evaluate recovered models.

#include <iostream>

#include <CLI11.hpp>

#include "sniff/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sign-flip fault injection and last-layer extraction simulator"};
  app.set_config("--config", "", "flat key=value file mirroring the flags; flags override it");
  app.require_subcommand(1);

  sniff::ExperimentConfig cfg;
  std::vector<std::string> digits{"0", "1", "2", "3", "4", "6", "8", "inf"};
  double epsilon = 0;

  app.add_option("--seed", cfg.seed, "experiment seed")->capture_default_str();
  app.add_option("--dims", cfg.dims, "extractor widths from input to n, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--classes,-m", cfg.classes, "number of output classes m")->capture_default_str();
  app.add_option("--weight-low", cfg.weight_low)->capture_default_str();
  app.add_option("--weight-high", cfg.weight_high)->capture_default_str();
  app.add_option("--precision", cfg.precision, "float width")->check(CLI::IsMember({32, 64}))->capture_default_str();
  app.add_option("--model", cfg.model, "model file (default <out>/model.json)");
  app.add_option("--recovered", cfg.recovered, "recovered model file (default <out>/recovered.json)");
  app.add_option("--out", cfg.out, "output directory")->capture_default_str();
  auto* eps = app.add_option("--epsilon", epsilon, "absolute non-vanishing threshold (default relative rule)");
  app.add_option("--max-tries", cfg.max_tries)->capture_default_str();
  app.add_option("--retry-limit", cfg.retry_limit)->capture_default_str();
  app.add_option("--fault", cfg.fault, "fault spec, e.g. product:i=2,j=1:signflip");
  app.add_option("--input", cfg.input, "comma separated input vector for inject");
  app.add_option("--digits", digits, "rounding sweep, e.g. 0,1,2,inf")->delimiter(',')->capture_default_str();

  auto* generate = app.add_subcommand("generate", "synthesize a seeded victim model");
  auto* attack = app.add_subcommand("attack", "recover the last layer with sign-flip faults");
  auto* inject = app.add_subcommand("inject", "run one clean and one faulted forward pass");
  auto* evaluate = app.add_subcommand("evaluate", "compare original and recovered models");
  auto* all = app.add_subcommand("all", "generate, attack and evaluate");
  for (auto* sub : {generate, attack, inject, evaluate, all}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    std::string joined;
    for (const auto& d : digits) joined += (joined.empty() ? "" : ",") + d;
    cfg.digits = sniff::parse_digits(joined);
    if (*eps) cfg.epsilon = epsilon;

    if (*generate) return sniff::cmd_generate(cfg, std::cout);
    if (*attack) return sniff::cmd_attack(cfg, std::cout);
    if (*inject) return sniff::cmd_inject(cfg, std::cout);
    if (*evaluate) return sniff::cmd_evaluate(cfg, std::cout);
    if (*all) return sniff::cmd_all(cfg, std::cout);
  } catch (const sniff::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "ctaf/cli.hpp"

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "JSON run config");
  cmd->add_option("--seed", c.seed, "override the run seed");
  cmd->add_option("--out", c.out, "output directory");
}

ctaf::RunConfig load(const Common& c) {
  ctaf::RunConfig cfg = c.config.empty() ? ctaf::parse_run_config("{}") : ctaf::load_run_config(c.config);
  if (c.seed) cfg.set_seed(*c.seed);
  if (!c.out.empty()) cfg.out = c.out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"CTAF safety-classification benchmark: dataset generation, evaluation, ablations and reporting"};
  app.require_subcommand(1);

  Common gen_o, eval_o, abl_o;
  auto* gen = app.add_subcommand("gen", "generate the scenario dataset");
  add_common(gen, gen_o);

  auto* eval = app.add_subcommand("eval", "run the prompting matrix and write records and report");
  add_common(eval, eval_o);
  std::string image, scenario;
  std::optional<std::size_t> stop_after;
  eval->add_option("--attach-image", image, "send one zero-shot prompt with this image attached (qualitative)");
  eval->add_option("--scenario", scenario, "scenario id for --attach-image");
  eval->add_option("--stop-after", stop_after, "stop after N new records (resume testing)");

  auto* abl = app.add_subcommand("ablate", "run the configured ablation plans");
  add_common(abl, abl_o);
  std::optional<std::size_t> abl_stop;
  abl->add_option("--stop-after", abl_stop, "stop after N new records (resume testing)");

  auto* rep = app.add_subcommand("report", "tables and plots from a records file");
  std::string records, rep_out;
  rep->add_option("--records", records, "records.jsonl")->required();
  rep->add_option("--out", rep_out, "output directory (default: next to the records file)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      ctaf::cmd_gen(load(gen_o), std::cout);
    } else if (eval->parsed()) {
      const auto cfg = load(eval_o);
      if (!image.empty()) {
        if (scenario.empty()) throw ctaf::ConfigError("--attach-image needs --scenario");
        ctaf::cmd_attach_image(cfg, scenario, image, std::cout);
      } else {
        ctaf::MatrixOptions opt;
        opt.max_new_records = stop_after;
        ctaf::cmd_eval(cfg, std::cout, opt);
      }
    } else if (abl->parsed()) {
      ctaf::MatrixOptions opt;
      opt.max_new_records = abl_stop;
      ctaf::cmd_ablate(load(abl_o), std::cout, opt);
    } else if (rep->parsed()) {
      const ctaf::fs::path r(records);
      ctaf::cmd_report(r, rep_out.empty() ? r.parent_path() / "report" : ctaf::fs::path(rep_out), std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

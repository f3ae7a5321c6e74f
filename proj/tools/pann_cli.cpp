// pann: synthesize DAB datasets, simulate, check Lipschitz bounds, train.
//
//   pann defaults                       print the reference configuration
//   pann synth      [--config F]        write train/test/validation CSVs
//   pann simulate   [--theta a,b,c]     one settled period as CSV
//   pann lipschitz  [--samples N]       bound-vs-Monte-Carlo reports
//   pann train      [--strategies S..]  learning-rate strategy sweep
//   pann reproduce  [--check]           all of the above + manifest
//
// Exit codes: 0 ok, 1 config error, 2 numerical failure, 3 check failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "pann/commands.hpp"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string strategies;
  std::optional<std::size_t> samples;
  std::string theta;
  bool check = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON config file (defaults to the reference setup)");
  cmd->add_option("--seed", o.seed, "override the config seed");
  cmd->add_option("--out", o.out, "output directory (default: $PANN_OUTPUT_ROOT or ./pann_out)");
  cmd->add_option("--strategies", o.strategies, "comma-separated strategy list, e.g. S1,S3,S5");
  cmd->add_option("--samples", o.samples, "Monte-Carlo sample count for every Lipschitz estimate");
}

pann::ExperimentConfig resolve(const Options& o) {
  pann::ExperimentConfig cfg = o.config.empty() ? pann::default_config() : pann::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output = o.out;
  if (!o.strategies.empty()) cfg.training.strategies = pann::parse_strategy_list(o.strategies);
  if (o.samples) {
    cfg.lipschitz.mc_samples_z = *o.samples;
    cfg.lipschitz.mc_samples_theta = *o.samples;
  }
  cfg.validate();
  return cfg;
}

pann::Vector parse_theta(const std::string& text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    v.push_back(pann::parse_double(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return Eigen::Map<pann::Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

int run(const std::string& name, const Options& o) {
  if (name == "defaults") {
    pann::ExperimentConfig cfg = resolve(o);
    std::cout << pann::to_json(cfg).dump(2) << "\n";
    if (!o.out.empty()) {
      pann::ArtifactWriter out(cfg.output_dir());
      pann::write_config_echo(out, cfg);
    }
    return 0;
  }
  const pann::ExperimentConfig cfg = resolve(o);
  pann::ArtifactWriter out(cfg.output_dir());
  if (name == "synth") {
    const auto r = pann::cmd_synth(cfg, out);
    std::cout << "wrote " << r.splits.train.segments.size() << " train, " << r.splits.test.segments.size()
              << " test, " << r.splits.validation.segments.size() << " validation segments to "
              << r.manifest.parent_path().string() << "\n";
  } else if (name == "simulate") {
    std::optional<pann::Vector> theta;
    if (!o.theta.empty()) theta = parse_theta(o.theta);
    const auto r = pann::cmd_simulate(cfg, theta, out);
    std::cout << "simulated " << r.states.cols() << " steps (settled=" << r.settled << " after " << r.cycles
              << " cycles) -> " << (out.root() / "simulate/trajectory.csv").string() << "\n";
  } else if (name == "lipschitz") {
    const auto r = pann::cmd_lipschitz(cfg, out);
    for (const auto& rep : r.reports) {
      std::cout << rep.constant_name << " (" << pann::to_string(rep.norm) << "): theoretical " << rep.theoretical
                << ", empirical " << rep.empirical_max << (rep.dominated() ? "  ok" : "  VIOLATED") << "\n";
    }
    std::cout << "L1z max-entry norm " << r.l1z_max_entry << "\n";
    if (r.rates) std::cout << "alpha (S3) " << r.rates->base_rates.transpose() << "\n";
  } else if (name == "train") {
    const auto r = pann::cmd_train(cfg, out);
    for (const auto& s : r.outcomes) {
      const auto& d = s.diagnostics;
      std::cout << pann::strategy_label(s.strategy) << ": epochs " << s.trace.size() << ", converged "
                << (d.convergence_epoch ? std::to_string(*d.convergence_epoch) : std::string("never"))
                << ", overshoot(" << cfg.names.front() << ") "
                << (d.overshoot_pct.size() ? d.overshoot_pct(0) : 0.0) << "%"
                << (s.trace.failed ? "  DIVERGED: " + s.trace.failure : std::string()) << "\n";
    }
  } else if (name == "reproduce") {
    const auto r = pann::cmd_reproduce(cfg, out, o.check);
    std::cout << "artifacts in " << out.root().string() << " (" << out.files().size() << " files)\n";
    if (o.check) {
      for (const auto& c : r.checks) std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
      if (!r.all_passed()) return 3;
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-in-architecture recurrent model of a dual-active-bridge converter"};
  app.require_subcommand(1);
  Options o;
  const std::pair<const char*, const char*> commands[] = {
      {"defaults", "print the reference configuration as JSON"},
      {"synth", "synthesize train/test/validation datasets"},
      {"simulate", "simulate one settled period"},
      {"lipschitz", "theoretical vs Monte-Carlo Lipschitz constants"},
      {"train", "train with each learning-rate strategy"},
      {"reproduce", "synth, lipschitz and train in one run"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help);
    add_common(cmd, o);
    if (std::string(name) == "simulate") cmd->add_option("--theta", o.theta, "parameter values, comma separated");
    if (std::string(name) == "reproduce") cmd->add_flag("--check", o.check, "exit 3 unless every check passes");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  try {
    return run(app.get_subcommands().front()->get_name(), o);
  } catch (const pann::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const pann::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const pann::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

// udsgd-lab: command-line front end for the simulator and the asymptotic
// analysis pipeline. Subcommands:
//   run       one seeded trajectory, CSV out
//   ensemble  seeded Monte-Carlo ensemble statistics
//   analyze   the experiment named in the config file (sweeps included)
//   compare   closed-form covariance prediction vs ensemble measurement
//   diag      schedule and mixing-contraction diagnostics
// Exit codes: 0 ok, 2 configuration, 3 validation, 4 numerical, 1 other.

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>

#include "CLI11.hpp"
#include "json.hpp"
#include "udsgd/config.hpp"
#include "udsgd/errors.hpp"
#include "udsgd/experiments.hpp"

namespace {

struct Args {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int trials = 0;
  int threads = 0;
  CLI::Option* out_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* trials_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw udsgd::ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int run_command(const std::string& name, const Args& a) {
  std::string text = slurp(a.config_path);

  // Apply overrides by patching the document itself, so the recorded
  // config hash always describes what actually ran. If the text is not
  // valid JSON, hand it to the parser untouched for a proper error.
  nlohmann::json doc;
  bool patchable = false;
  try {
    doc = nlohmann::json::parse(text);
    patchable = doc.is_object();
  } catch (const nlohmann::json::parse_error&) {
  }
  if (patchable) {
    if (name == "run") doc["experiment"] = "single_run";
    if (name == "ensemble") doc["experiment"] = "ensemble";
    if (name == "compare") doc["experiment"] = "clt_compare";
    if (a.seed_opt->count() > 0) doc["seed"] = a.seed;
    if (a.trials_opt->count() > 0) doc["trials"] = a.trials;
    if (a.threads_opt->count() > 0) doc["threads"] = a.threads;
    if (a.out_opt->count() > 0) doc["out"] = a.out_dir;
    text = doc.dump();
  }

  const udsgd::config::ExperimentConfig cfg =
      udsgd::config::parse_config(text);
  const udsgd::experiments::Outcome outcome =
      name == "diag" ? udsgd::experiments::run_diagnostics(cfg)
                     : udsgd::experiments::run_experiment(cfg);

  std::cout << outcome.summary;
  for (const auto& file : outcome.files) {
    std::cout << "wrote " << file << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "udsgd-lab: distributed SGD simulation and asymptotic analysis"};
  app.require_subcommand(1);

  const std::pair<const char*, const char*> commands[] = {
      {"run", "execute one seeded trajectory and write its CSV"},
      {"ensemble", "run a seeded trial ensemble and write its statistics"},
      {"analyze", "run the experiment named in the config (sweeps included)"},
      {"compare", "closed-form covariance prediction vs ensemble"},
      {"diag", "schedule and mixing-contraction diagnostics"},
  };
  std::map<std::string, Args> args;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    Args& a = args[name];
    sub->add_option("--config", a.config_path,
                    "experiment description (JSON)")
        ->required();
    a.out_opt = sub->add_option("--out", a.out_dir,
                                "output directory (overrides the config)");
    a.seed_opt =
        sub->add_option("--seed", a.seed, "master seed (overrides)");
    a.trials_opt =
        sub->add_option("--trials", a.trials, "ensemble trials (overrides)")
            ->check(CLI::PositiveNumber);
    a.threads_opt =
        sub->add_option("--threads", a.threads,
                        "worker threads; must not change any result")
            ->check(CLI::PositiveNumber);
  }

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    return run_command(name, args[name]);
  } catch (const udsgd::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const udsgd::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const udsgd::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

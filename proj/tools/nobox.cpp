// Command-line front end. Exit codes: 0 success, 1 bad configuration or
// arguments, 2 runtime failure, 3 evaluation finished but incomplete.
#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "nobox/cli/commands.hpp"

namespace fs = std::filesystem;
using namespace nobox;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitIncomplete = 3;

struct ConfigArgs {
  std::string path;
  std::vector<std::string> overrides;
  int jobs = 1;
  bool quiet = false;
};

void add_config_args(CLI::App* cmd, ConfigArgs& a) {
  cmd->add_option("-c,--config", a.path, "run config JSON")->required()->check(CLI::ExistingFile);
  cmd->add_option("--set", a.overrides, "override a field, e.g. --set attack.epsilon=0.05 (repeatable)");
  cmd->add_option("-j,--jobs", a.jobs, "worker threads over targets")->check(CLI::PositiveNumber);
  cmd->add_flag("-q,--quiet", a.quiet, "no progress output");
}

cli::RunOptions run_options(const ConfigArgs& a) { return {a.jobs, a.quiet ? nullptr : &std::cerr}; }

struct VictimArgs {
  std::string victims;
  std::string remote;
  double rate = 2.0;
  std::string audit_log;
  int retries = 3;
};

void add_victim_args(CLI::App* cmd, VictimArgs& v) {
  cmd->add_option("--victims", v.victims, "victim directory holding victims.json");
  cmd->add_option("--remote", v.remote, "remote classifier URL; token from NOBOX_REMOTE_TOKEN");
  cmd->add_option("--rate", v.rate, "remote requests per second")->check(CLI::PositiveNumber);
  cmd->add_option("--audit-log", v.audit_log, "append remote request records (JSON lines)");
  cmd->add_option("--retries", v.retries, "remote retries per item")->check(CLI::NonNegativeNumber);
}

cli::EvalOptions eval_options(const VictimArgs& v) {
  cli::EvalOptions e;
  e.victims_dir = v.victims;
  if (!v.remote.empty()) {
    const char* token = std::getenv("NOBOX_REMOTE_TOKEN");
    if (token == nullptr || *token == '\0') throw cli::ConfigError("--remote needs NOBOX_REMOTE_TOKEN to be set");
    eval::RemoteOptions r;
    r.endpoint = v.remote;
    r.audit_log = v.audit_log;
    r.token = token;
    r.requests_per_second = v.rate;
    r.max_retries = v.retries;
    e.remote = r;
  }
  return e;
}

void print_report(const eval::EvalReport& r) {
  std::cout << r.to_csv();
  if (r.incomplete) std::cerr << "warning: evaluation incomplete, some items failed\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"No-box transfer attacks from a handful of images"};
  app.set_version_flag("--version", cli::tool_version());
  app.require_subcommand(1);

  ConfigArgs train_args, craft_args, pipe_args;
  VictimArgs pipe_victims, eval_victims;
  auto* train = app.add_subcommand("train", "train one substitute per target");
  add_config_args(train, train_args);
  auto* craft = app.add_subcommand("craft", "craft adversarial examples from trained substitutes");
  add_config_args(craft, craft_args);

  std::string eval_adv, eval_out;
  auto* evalc = app.add_subcommand("eval", "score adversarial examples against victims");
  evalc->add_option("--adversarial", eval_adv, "directory of PNGs with JSON sidecars")->required();
  evalc->add_option("--out", eval_out, "where report.json and report.csv go");
  add_victim_args(evalc, eval_victims);

  std::vector<std::string> report_runs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "comparison table and plots over run directories");
  report->add_option("runs", report_runs, "run directories")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "output directory")->required();

  auto* pipeline = app.add_subcommand("pipeline", "train, craft, eval and report in one go");
  add_config_args(pipeline, pipe_args);
  add_victim_args(pipeline, pipe_victims);

  cli::ToyDataOptions toy;
  std::string toy_out;
  auto* toyc = app.add_subcommand("toy-data", "generate the synthetic shape dataset");
  toyc->add_option("--out", toy_out, "output directory")->required();
  toyc->add_option("--per-class", toy.per_class, "images per class");
  toyc->add_option("--size", toy.size, "image side in pixels");
  toyc->add_option("--channels", toy.channels, "1 or 3");
  toyc->add_option("--seed", toy.seed, "generator seed");
  toyc->add_option("--shapes", toy.shapes, "subset of shapes");

  cli::VictimOptions vic;
  std::string vic_data, vic_out;
  auto* victims = app.add_subcommand("victims", "train the local victim classifiers");
  victims->add_option("--data", vic_data, "dataset root, one directory per class")->required();
  victims->add_option("--out", vic_out, "output directory")->required();
  victims->add_option("--size", vic.size, "image side in pixels");
  victims->add_option("--channels", vic.channels, "1 or 3");
  victims->add_option("--width", vic.width, "base channel width");
  victims->add_option("--epochs", vic.epochs, "training epochs");
  victims->add_option("--seed", vic.seed, "seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) {
      cli::cmd_train(cli::RunConfig::load(train_args.path, train_args.overrides), run_options(train_args));
    } else if (*craft) {
      cli::cmd_craft(cli::RunConfig::load(craft_args.path, craft_args.overrides), run_options(craft_args));
    } else if (*evalc) {
      auto e = eval_options(eval_victims);
      e.adversarial_dir = eval_adv;
      e.out_dir = eval_out;
      const auto r = cli::cmd_eval(e);
      print_report(r);
      if (r.incomplete) return kExitIncomplete;
    } else if (*report) {
      std::vector<fs::path> dirs(report_runs.begin(), report_runs.end());
      const auto out = cli::cmd_report(dirs, report_out);
      std::cout << out.table.to_markdown();
      for (const auto& f : out.files) std::cerr << "wrote " << f.string() << '\n';
    } else if (*pipeline) {
      const auto config = cli::RunConfig::load(pipe_args.path, pipe_args.overrides);
      const auto r = cli::cmd_pipeline(config, eval_options(pipe_victims), run_options(pipe_args));
      print_report(r);
      if (r.incomplete) return kExitIncomplete;
    } else if (*toyc) {
      toy.out = toy_out;
      cli::cmd_toy_data(toy);
    } else if (*victims) {
      vic.data_root = vic_data;
      vic.out = vic_out;
      cli::cmd_victims(vic);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}

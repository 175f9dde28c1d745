#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nobox/cli/run_config.hpp"
#include "nobox/evaluation/remote.hpp"
#include "nobox/evaluation/report.hpp"

namespace nobox::cli {

std::string tool_version();

/// Per-target artifact paths, relative to the run directory.
struct TargetArtifacts {
  int index = 0;
  std::string class_name;
  std::string source;  // image file the target was loaded from
  std::string checkpoint;
  std::string train_log;
  std::string adversarial;
  std::string sidecar;
};

/// Reproducibility record of a run directory. Everything except `timings` is
/// deterministic given the config, and `content_hash` covers exactly that part
/// together with the SHA-256 of every referenced file.
struct RunManifest {
  std::string tool_version;
  std::string config_hash;
  std::string method;
  std::vector<TargetArtifacts> targets;
  std::vector<std::string> reports;
  std::map<std::string, std::string> file_hashes;  // filled by write()
  std::map<std::string, double> timings;           // seconds per stage
  std::string content_hash;                        // filled by write()

  /// Hashes every referenced artifact and writes manifest.json. Throws
  /// std::runtime_error when an artifact is missing.
  void write(const std::filesystem::path& run_dir);
  static RunManifest read(const std::filesystem::path& run_dir);
  std::string to_json() const;
};

struct RunOptions {
  int jobs = 1;                 // worker threads for independent targets
  std::ostream* log = nullptr;  // progress messages
};

/// Trains one substitute per target and writes checkpoints and training logs.
void cmd_train(const RunConfig& config, const RunOptions& options = {});

/// Crafts one adversarial PNG plus sidecar JSON per target from the trained checkpoints.
void cmd_craft(const RunConfig& config, const RunOptions& options = {});

struct EvalOptions {
  std::filesystem::path adversarial_dir;
  std::filesystem::path victims_dir;  // victims.json + checkpoints; may be empty with a remote victim
  std::optional<eval::RemoteOptions> remote;
  std::filesystem::path out_dir;  // report.json and report.csv
};

/// Scores every sidecar-matched example against the victims.
eval::EvalReport cmd_eval(const EvalOptions& options);

struct ReportOutputs {
  eval::ComparisonTable table;
  std::vector<std::filesystem::path> files;
};

/// Comparison table over runs plus training-curve, n-sweep and K-sweep plots.
ReportOutputs cmd_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir);

/// train, craft, eval and report for one config; the report goes to <output_root>/report.
eval::EvalReport cmd_pipeline(const RunConfig& config, const EvalOptions& eval_options,
                              const RunOptions& options = {});

struct ToyDataOptions {
  std::filesystem::path out;
  int per_class = 60;
  int size = 16;
  int channels = 3;
  std::uint64_t seed = 1;
  std::vector<std::string> shapes;  // empty: every shape
};

void cmd_toy_data(const ToyDataOptions& options);

struct VictimOptions {
  std::filesystem::path data_root;  // one subdirectory per class
  std::filesystem::path out;
  int size = 16;
  int channels = 3;
  int width = 12;
  int epochs = 30;
  std::uint64_t seed = 1;
};

/// Trains vgg, resnet and wide classifiers over every class directory.
void cmd_victims(const VictimOptions& options);

}  // namespace nobox::cli

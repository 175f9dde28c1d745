#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "nobox/attack/attack.hpp"
#include "nobox/model/classifier.hpp"
#include "nobox/model/substitute.hpp"
#include "nobox/training/trainer.hpp"

namespace nobox::cli {

inline constexpr int kConfigVersion = 1;

/// A configuration problem the user can fix; maps to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct DataConfig {
  std::filesystem::path root;  // one subdirectory of PNGs per class
  std::string class0 = "ring";
  std::string class1 = "cross";
  int image_size = 16;
  int channels = 3;
};

struct ModelConfig {
  int width = 8;
  int residual_blocks = 2;
  int supervised_width = 16;
  model::ClassifierArch supervised_arch = model::ClassifierArch::kVgg;
};

/// Master seeds; per-target seeds are derived from these and the target index.
struct SeedConfig {
  std::uint64_t data = 1;
  std::uint64_t model = 2;
  std::uint64_t attack = 3;
};

struct RunConfig {
  training::Mechanism mechanism = training::Mechanism::kPrototypical;
  int n = 20;
  int decoders = 1;
  int targets = 4;  // targets alternate between the classes: 0 -> class0[0], 1 -> class1[0], ...
  ModelConfig model{};
  training::TrainConfig train{.max_iterations = 1000};
  attack::AttackConfig attack{};
  SeedConfig seeds{};
  DataConfig data{};
  std::filesystem::path output_root = "runs/default";

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Canonical JSON (sorted keys) including the format version.
  std::string to_json() const;
  /// Strict: unknown fields, wrong types and unsupported versions throw ConfigError.
  /// Missing fields keep their defaults. Each override is "dotted.path=value",
  /// where value is parsed as JSON when possible and as a string otherwise.
  static RunConfig from_json(const std::string& text, const std::vector<std::string>& overrides = {});
  static RunConfig load(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});
  void save(const std::filesystem::path& path) const;

  /// SHA-256 of the canonical JSON without output_root.
  std::string hash() const;
  /// Row label in reports, e.g. "prototypical", "prototypical_k5", "prototypical_pgd".
  std::string method_name() const;

  model::ModelSpec substitute_spec(std::uint64_t seed) const;
  model::ClassifierSpec supervised_spec(std::uint64_t seed) const;
};

}  // namespace nobox::cli

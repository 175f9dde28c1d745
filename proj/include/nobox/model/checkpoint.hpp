#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nobox/model/classifier.hpp"
#include "nobox/model/substitute.hpp"

namespace nobox::model {

/// Binary container: magic, format version, kind, spec JSON, spec hash,
/// flat parameters (little-endian doubles), free-form metadata JSON.
struct Checkpoint {
  static constexpr std::uint32_t kFormatVersion = 1;
  enum class Kind : std::uint32_t { kSubstitute = 1, kClassifier = 2 };

  Kind kind = Kind::kSubstitute;
  std::string spec_json;
  std::string spec_hash;
  std::vector<double> params;
  std::string metadata_json = "{}";
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
/// Rejects bad magic, unknown versions, a stored hash that does not match the
/// stored spec, and (when given) a spec hash different from `expected_spec_hash`.
Checkpoint read_checkpoint(const std::filesystem::path& path,
                           const std::optional<std::string>& expected_spec_hash = std::nullopt);

void save_substitute(const std::filesystem::path& path, const SubstituteModel& model,
                     const std::string& metadata_json = "{}");
SubstituteModel load_substitute(const std::filesystem::path& path,
                                const std::optional<std::string>& expected_spec_hash = std::nullopt,
                                std::string* metadata_json = nullptr);

void save_classifier(const std::filesystem::path& path, const ClassifierNet& net,
                     const std::string& metadata_json = "{}");
ClassifierNet load_classifier(const std::filesystem::path& path,
                              const std::optional<std::string>& expected_spec_hash = std::nullopt,
                              std::string* metadata_json = nullptr);

}  // namespace nobox::model

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nobox/evaluation/victim.hpp"

namespace nobox::eval {

/// Victim accuracies for one set of adversarial examples.
struct EvalReport {
  std::string method;
  std::map<std::string, AccuracyCount> victims;  // ordered by name
  std::string config_hash;
  std::uint64_t seed = 0;
  bool incomplete = false;

  double accuracy(const std::string& victim) const;
  /// Arithmetic mean of per-victim accuracies.
  double average() const;

  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
  /// Header "method,<victims...>,Average" and one row, accuracies in percent.
  std::string to_csv() const;
};

/// Methods by victims; a blank cell marks a victim the method was not scored on.
struct ComparisonTable {
  std::vector<std::string> victims;
  std::vector<std::string> methods;
  std::vector<std::vector<std::optional<double>>> cells;  // [method][victim], accuracy in [0, 1]
  bool consistent = true;                                  // every method scored on every victim

  /// Rows follow `preferred_order` first, then any remaining methods alphabetically.
  static ComparisonTable from_reports(const std::vector<EvalReport>& reports,
                                      const std::vector<std::string>& preferred_order = {});
  std::optional<double> average(std::size_t method) const;
  std::string to_csv() const;
  std::string to_markdown() const;
};

/// Row order of the reference comparison: weakest reconstruction baseline first.
const std::vector<std::string>& standard_method_order();

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace nobox::eval

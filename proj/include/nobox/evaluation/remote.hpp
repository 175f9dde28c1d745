#pragma once

#include <chrono>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "nobox/data/image.hpp"
#include "nobox/evaluation/report.hpp"

namespace nobox::eval {

/// Evaluation-only client for a classifier behind HTTP.
///
/// Each image is sent as `POST <endpoint>` with a PNG body, `Content-Type: image/png`
/// and `Authorization: Bearer <token>`. A 200 response carries `{"label": <int>}`.
/// 401/403 abort the run; other failures are retried with exponential backoff and
/// the item is skipped (report flagged incomplete) once retries run out.
struct RemoteOptions {
  std::string endpoint;  // http://host:port/path
  std::string token;
  double requests_per_second = 2.0;  // <= 0 disables rate limiting
  int max_retries = 3;
  std::chrono::milliseconds backoff{200};  // doubled after every failed attempt
  std::chrono::seconds timeout{10};
  std::string victim_name = "remote";
  std::filesystem::path audit_log;  // JSON lines, appended; empty disables
};

class RemoteAuthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AuditEntry {
  std::size_t item = 0;
  int attempt = 0;
  int status = 0;  // 0 when no HTTP response arrived
  std::string response;
  std::string error;
  double elapsed_seconds = 0.0;  // since the run started
};

/// Throws std::invalid_argument on a malformed endpoint or empty example list and
/// RemoteAuthError on an authentication failure.
EvalReport remote_victim_eval(const RemoteOptions& options, std::span<const data::LabeledImage> examples,
                              std::vector<AuditEntry>* audit = nullptr);

}  // namespace nobox::eval

#include "nobox/evaluation/remote.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <fstream>
#include <thread>

#include "nobox/data/io.hpp"

namespace nobox::eval {

namespace {

using Clock = std::chrono::steady_clock;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  const std::string scheme = "http://";
  if (url.rfind(scheme, 0) != 0) {
    throw std::invalid_argument("remote endpoint must start with http:// (got '" + url + "')");
  }
  const auto slash = url.find('/', scheme.size());
  Endpoint e;
  e.origin = url.substr(0, slash);
  e.path = slash == std::string::npos ? "/" : url.substr(slash);
  if (e.origin.size() == scheme.size()) throw std::invalid_argument("remote endpoint has no host: '" + url + "'");
  return e;
}

class RateLimiter {
 public:
  explicit RateLimiter(double per_second)
      : interval_(per_second > 0.0 ? std::chrono::duration_cast<Clock::duration>(
                                         std::chrono::duration<double>(1.0 / per_second))
                                   : Clock::duration::zero()),
        next_(Clock::now()) {}

  /// Blocks until the next request slot opens; each slot lasts one interval.
  void acquire() {
    std::this_thread::sleep_until(next_);
    next_ = std::max(next_, Clock::now()) + interval_;
  }
  void drain() const { std::this_thread::sleep_until(next_); }

 private:
  Clock::duration interval_;
  Clock::time_point next_;
};

}  // namespace

EvalReport remote_victim_eval(const RemoteOptions& options, std::span<const data::LabeledImage> examples,
                              std::vector<AuditEntry>* audit) {
  if (examples.empty()) throw std::invalid_argument("remote evaluation: no examples");
  if (options.max_retries < 0) throw std::invalid_argument("remote evaluation: max_retries must be >= 0");
  const auto endpoint = parse_endpoint(options.endpoint);

  httplib::Client client(endpoint.origin);
  client.set_connection_timeout(options.timeout);
  client.set_read_timeout(options.timeout);
  if (!options.token.empty()) client.set_bearer_token_auth(options.token);

  std::ofstream log;
  if (!options.audit_log.empty()) {
    log.open(options.audit_log, std::ios::app);
    if (!log) throw std::runtime_error("cannot open audit log " + options.audit_log.string());
  }
  const auto start = Clock::now();
  const auto record = [&](AuditEntry entry) {
    entry.elapsed_seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (log) {
      log << nlohmann::json{{"item", entry.item},       {"attempt", entry.attempt},
                            {"status", entry.status},   {"response", entry.response.substr(0, 512)},
                            {"error", entry.error},     {"elapsed_seconds", entry.elapsed_seconds}}
                 .dump()
          << '\n'
          << std::flush;
    }
    if (audit != nullptr) audit->push_back(std::move(entry));
  };

  EvalReport report;
  report.method = "remote";
  auto& count = report.victims[options.victim_name];
  RateLimiter limiter(options.requests_per_second);

  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto bytes = data::encode_png(examples[i].image);
    const std::string body(bytes.begin(), bytes.end());
    auto backoff = options.backoff;
    bool scored = false;
    for (int attempt = 0; attempt <= options.max_retries && !scored; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      limiter.acquire();
      AuditEntry entry{i, attempt, 0, {}, {}, 0.0};
      auto res = client.Post(endpoint.path, body, "image/png");
      if (!res) {
        entry.error = httplib::to_string(res.error());
        record(std::move(entry));
        continue;
      }
      entry.status = res->status;
      entry.response = res->body;
      if (res->status == 401 || res->status == 403) {
        record(std::move(entry));
        throw RemoteAuthError("remote victim rejected the credentials (HTTP " + std::to_string(res->status) + ")");
      }
      if (res->status != 200) {
        entry.error = "unexpected HTTP status";
        record(std::move(entry));
        continue;
      }
      try {
        const int label = nlohmann::json::parse(res->body).at("label").get<int>();
        ++count.total;
        count.correct += label == examples[i].label ? 1 : 0;
        scored = true;
      } catch (const nlohmann::json::exception& e) {
        entry.error = std::string("malformed response: ") + e.what();
      }
      record(std::move(entry));
    }
    if (!scored) report.incomplete = true;
  }
  limiter.drain();
  return report;
}

}  // namespace nobox::eval

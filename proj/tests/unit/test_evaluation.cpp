#include <gtest/gtest.h>
#include <httplib.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "nobox/data/io.hpp"
#include "nobox/data/sampling.hpp"
#include "nobox/evaluation/prototype_classifier.hpp"
#include "nobox/evaluation/remote.hpp"
#include "nobox/evaluation/report.hpp"
#include "nobox/evaluation/roc.hpp"
#include "nobox/evaluation/victim.hpp"
#include "nobox/model/substitute.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace nobox;
using namespace nobox::eval;

namespace {

data::PrototypeBank bank_of(std::vector<std::pair<data::ImageTensor, data::ImageTensor>> pairs) {
  data::PrototypeBank bank;
  for (auto& [a, b] : pairs) bank.pairs.push_back({0, 0, std::move(a), std::move(b)});
  return bank;
}

data::ImageTensor px4(double a, double b, double c, double d) { return data::ImageTensor(1, 2, 2, {a, b, c, d}); }

// Predicts class 1 when the first pixel exceeds 0.5.
class ThresholdVictim final : public VictimClassifier {
 public:
  std::vector<int> predict(std::span<const data::ImageTensor> batch) const override {
    std::vector<int> out;
    for (const auto& x : batch) out.push_back(x.pixels()[0] > 0.5 ? 1 : 0);
    return out;
  }
  int num_classes() const override { return 2; }
  VictimInfo info() const override { return {"threshold", "none"}; }
};

// Independent AUC oracle: P(g > i) + P(g = i) / 2 over all pairs.
double mann_whitney(const std::vector<double>& g, const std::vector<double>& im) {
  double s = 0.0;
  for (double a : g) {
    for (double b : im) s += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
  }
  return s / (static_cast<double>(g.size()) * static_cast<double>(im.size()));
}

EvalReport make_report(const std::string& method, std::map<std::string, AccuracyCount> victims) {
  EvalReport r;
  r.method = method;
  r.victims = std::move(victims);
  r.config_hash = "abc";
  r.seed = 7;
  return r;
}

}  // namespace

// ---- prototype classifiers -------------------------------------------------

TEST(PrototypeClassifier, TwoPixelOracle) {
  const auto bank = bank_of({{px4(0, 0, 0, 0), px4(1, 1, 1, 1)}});
  const auto lo = px4(0.4, 0.4, 0.4, 0.4), hi = px4(0.6, 0.6, 0.6, 0.6);
  EXPECT_EQ(classify_reconstructions({lo.pixels()}, bank), 0);
  EXPECT_EQ(classify_reconstructions({hi.pixels()}, bank), 1);
  const auto d = prototype_distances({lo.pixels()}, bank);
  EXPECT_NEAR(d[0], 0.8, 1e-12);
  EXPECT_NEAR(d[1], 1.2, 1e-12);
}

TEST(PrototypeClassifier, TiesGoToClassZero) {
  const auto bank = bank_of({{px4(0, 0, 0, 0), px4(1, 1, 1, 1)}});
  const auto mid = px4(0.5, 0.5, 0.5, 0.5);
  EXPECT_EQ(classify_reconstructions({mid.pixels()}, bank), 0);
}

TEST(PrototypeClassifier, AveragesUnsquaredDistancesOverDecoders) {
  // Decoder 0 strongly prefers class 1, decoder 1 mildly prefers class 0; the
  // mean distance breaks the 1:1 vote.
  const auto bank = bank_of({{px4(1, 1, 1, 1), px4(0, 0, 0, 0)}, {px4(0, 0, 0, 0), px4(1, 1, 1, 1)}});
  const auto r0 = px4(0, 0, 0, 0);
  const auto r1 = px4(0.45, 0.45, 0.45, 0.45);
  const auto d = prototype_distances({r0.pixels(), r1.pixels()}, bank);
  EXPECT_NEAR(d[0], (2.0 + 0.9) / 2.0, 1e-12);
  EXPECT_NEAR(d[1], (0.0 + 1.1) / 2.0, 1e-12);
  EXPECT_EQ(classify_reconstructions({r0.pixels(), r1.pixels()}, bank), 1);
  EXPECT_THROW(classify_reconstructions({r0.pixels()}, bank), std::invalid_argument);
}

TEST(PrototypeClassifier, SingleDecoderVariantsAgree) {
  model::ModelSpec spec;
  spec.input_shape = {3, 8, 8};
  spec.base_width = 8;
  spec.num_residual_blocks = 1;
  spec.seed = 12;
  const auto model = model::SubstituteModel::build(spec);
  const auto aux = test::random_aux(3, 3, 8, 8, 13);
  const auto bank = data::sample_prototype_bank(aux, 1, 14);
  for (int i = 0; i < 60; ++i) {
    const auto x = test::random_image(3, 8, 8, 100 + i);
    EXPECT_EQ(prototype_classify(model, x, bank), prototype_classify_multi(model, x, bank));
  }
  spec.decoders = 2;
  const auto two = model::SubstituteModel::build(spec);
  EXPECT_THROW(prototype_classify(two, aux.target().image, bank), std::invalid_argument);
  EXPECT_THROW(prototype_classify_multi(two, aux.target().image, bank), std::invalid_argument);
}

// ---- victims ----------------------------------------------------------------

TEST(Victim, AccuracyCountsAgainstOracle) {
  std::vector<data::LabeledImage> examples;
  std::size_t expected = 0;
  for (int i = 0; i < 40; ++i) {
    auto x = test::random_image(1, 2, 2, 200 + i);
    const int label = i % 3 == 0 ? 1 : 0;
    expected += (x.pixels()[0] > 0.5 ? 1 : 0) == label;
    examples.push_back({std::move(x), label});
  }
  const ThresholdVictim victim;
  const auto c = count_correct(victim, examples);
  EXPECT_EQ(c.total, 40u);
  EXPECT_EQ(c.correct, expected);
  EXPECT_DOUBLE_EQ(accuracy_on(victim, examples), static_cast<double>(expected) / 40.0);
  EXPECT_THROW(count_correct(victim, std::span<const data::LabeledImage>{}), std::invalid_argument);
}

// ---- ROC --------------------------------------------------------------------

TEST(Roc, AucMatchesMannWhitneyOnRandomScoreSets) {
  Rng rng(300);
  for (int set = 0; set < 100; ++set) {
    std::uniform_int_distribution<int> size(1, 40), coarse(0, 9);
    std::normal_distribution<double> gauss;
    const bool ties = set % 2 == 0;
    std::vector<double> g(size(rng)), im(size(rng));
    for (auto& v : g) v = ties ? coarse(rng) + 2 : gauss(rng) + 0.7;
    for (auto& v : im) v = ties ? coarse(rng) : gauss(rng);
    EXPECT_NEAR(roc_from_scores(g, im).auc, mann_whitney(g, im), 1e-9) << "set " << set;
  }
}

TEST(Roc, DegenerateAndMonotone) {
  EXPECT_DOUBLE_EQ(roc_from_scores(std::vector<double>{2, 3}, std::vector<double>{0, 1}).auc, 1.0);
  EXPECT_DOUBLE_EQ(roc_from_scores(std::vector<double>{0, 1}, std::vector<double>{2, 3}).auc, 0.0);
  EXPECT_DOUBLE_EQ(roc_from_scores(std::vector<double>{1, 1}, std::vector<double>{1}).auc, 0.5);
  const auto r = roc_from_scores(test::random_vector(30, 301), test::random_vector(25, 302));
  ASSERT_EQ(r.thresholds.size(), 55u);
  EXPECT_DOUBLE_EQ(r.tpr.front(), 1.0);
  EXPECT_DOUBLE_EQ(r.fpr.front(), 1.0);
  for (std::size_t i = 1; i < r.thresholds.size(); ++i) {
    EXPECT_LT(r.thresholds[i - 1], r.thresholds[i]);
    EXPECT_LE(r.tpr[i], r.tpr[i - 1]);
    EXPECT_LE(r.fpr[i], r.fpr[i - 1]);
  }
  EXPECT_THROW(roc_from_scores(std::vector<double>{}, std::vector<double>{1}), std::invalid_argument);
}

TEST(Roc, CurveFromVerifier) {
  struct Identity final : VerificationModel {
    std::vector<double> embed(const data::ImageTensor& x) const override { return x.vector(); }
  };
  const Identity verifier;
  std::vector<ImagePair> genuine, impostor;
  for (int i = 0; i < 6; ++i) {
    const auto a = test::random_image(1, 2, 2, 400 + i, 0.1, 1.0);
    genuine.emplace_back(a, a);
    impostor.emplace_back(px4(1, 0, 0, 0), px4(0, 1, 0, 0));
  }
  EXPECT_DOUBLE_EQ(roc_curve(verifier, genuine, impostor).auc, 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 0}), 0.0);
}

// ---- reports ------------------------------------------------------------------

TEST(Report, JsonRoundTripAndCsv) {
  auto r = make_report("prototypical", {{"vgg", {3, 4}}, {"resnet", {1, 4}}});
  EXPECT_DOUBLE_EQ(r.average(), 0.5);
  const auto back = EvalReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_EQ(r.to_csv(), "method,resnet,vgg,Average\nprototypical,25.00,75.00,50.00\n");
}

TEST(Report, ComparisonTableOrderAndGaps) {
  std::vector<EvalReport> reports{make_report("zeta", {{"vgg", {1, 2}}}),
                                  make_report("prototypical", {{"vgg", {0, 2}}, {"wide", {1, 2}}}),
                                  make_report("naive_ae", {{"vgg", {2, 2}}, {"wide", {2, 2}}})};
  const auto t = ComparisonTable::from_reports(reports, standard_method_order());
  EXPECT_EQ(t.methods, (std::vector<std::string>{"naive_ae", "prototypical", "zeta"}));
  EXPECT_FALSE(t.consistent);
  EXPECT_FALSE(t.average(2).has_value());
  EXPECT_EQ(t.to_csv(),
            "method,vgg,wide,Average\nnaive_ae,100.00,100.00,100.00\nprototypical,0.00,50.00,25.00\nzeta,50.00,,\n");
  EXPECT_NE(t.to_markdown().find("| prototypical | 0.00% | 50.00% | 25.00% |"), std::string::npos);
  reports.push_back(make_report("zeta", {}));
  EXPECT_THROW(ComparisonTable::from_reports(reports), std::invalid_argument);
}

TEST(Report, StandardOrder) {
  EXPECT_EQ(standard_method_order(),
            (std::vector<std::string>{"naive_ae", "jigsaw", "rotation", "naive_supervised", "prototypical"}));
}

// ---- remote victim -------------------------------------------------------------

namespace {

// Labels a uniform image by its brightness; mid-grey images get HTTP 500.
class StubServer {
 public:
  explicit StubServer(std::string token) : token_(std::move(token)) {
    server_.Post("/classify", [this](const httplib::Request& req, httplib::Response& res) {
      {
        std::lock_guard lock(mu_);
        arrivals_.push_back(std::chrono::steady_clock::now());
      }
      if (req.get_header_value("Authorization") != "Bearer " + token_) {
        res.status = 401;
        return;
      }
      const std::vector<std::uint8_t> bytes(req.body.begin(), req.body.end());
      const double v = data::decode_png(bytes).pixels()[0];
      if (v > 0.1 && v < 0.9) {
        res.status = 500;
        return;
      }
      res.set_content(v >= 0.9 ? R"({"label": 1})" : R"({"label": 0})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/classify"; }
  std::vector<std::chrono::steady_clock::time_point> arrivals() {
    std::lock_guard lock(mu_);
    return arrivals_;
  }

 private:
  std::string token_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::vector<std::chrono::steady_clock::time_point> arrivals_;
};

std::vector<data::LabeledImage> remote_examples() {
  const std::vector<double> fill{0.0, 1.0, 0.0, 0.5, 1.0};
  const std::vector<int> labels{0, 1, 1, 0, 1};
  std::vector<data::LabeledImage> out;
  for (std::size_t i = 0; i < fill.size(); ++i) out.push_back({data::ImageTensor::filled(1, 4, 4, fill[i]), labels[i]});
  return out;
}

RemoteOptions fast_options(const std::string& url, const std::string& token) {
  RemoteOptions o;
  o.endpoint = url;
  o.token = token;
  o.requests_per_second = 0.0;
  o.max_retries = 2;
  o.backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  o.victim_name = "stub";
  return o;
}

}  // namespace

TEST(Remote, ScoresLabelsAndFlagsFailedItem) {
  StubServer server("secret");
  const auto examples = remote_examples();
  const fs::path log = fs::temp_directory_path() / "nobox_remote_audit.jsonl";
  fs::remove(log);
  auto options = fast_options(server.url(), "secret");
  options.audit_log = log;
  std::vector<AuditEntry> audit;
  const auto report = remote_victim_eval(options, examples, &audit);
  const auto& c = report.victims.at("stub");
  EXPECT_EQ(c.total, 4u);
  EXPECT_EQ(c.correct, 3u);  // item 2 is labelled 1 but the stub says 0
  EXPECT_TRUE(report.incomplete);
  int item3 = 0;
  for (const auto& e : audit) {
    if (e.item == 3) {
      EXPECT_EQ(e.status, 500);
      ++item3;
    }
  }
  EXPECT_EQ(item3, 3);  // first attempt plus two retries
  EXPECT_EQ(audit.size(), 7u);
  std::ifstream lines(log);
  EXPECT_EQ(std::count(std::istreambuf_iterator<char>(lines), std::istreambuf_iterator<char>(), '\n'), 7);
  fs::remove(log);
}

TEST(Remote, AuthenticationFailureAborts) {
  StubServer server("secret");
  const auto examples = remote_examples();
  EXPECT_THROW(remote_victim_eval(fast_options(server.url(), "wrong"), examples), RemoteAuthError);
  EXPECT_EQ(server.arrivals().size(), 1u);
}

TEST(Remote, RespectsRateLimit) {
  StubServer server("secret");
  std::vector<data::LabeledImage> examples(4, {data::ImageTensor::filled(1, 2, 2, 0.0), 0});
  auto options = fast_options(server.url(), "secret");
  options.requests_per_second = 20.0;
  const auto report = remote_victim_eval(options, examples);
  EXPECT_FALSE(report.incomplete);
  EXPECT_EQ(report.victims.at("stub").correct, 4u);
  const auto t = server.arrivals();
  ASSERT_EQ(t.size(), 4u);
  for (std::size_t i = 1; i < t.size(); ++i) {
    EXPECT_GE(std::chrono::duration<double>(t[i] - t[i - 1]).count(), 0.045);
  }
}

TEST(Remote, RejectsBadArguments) {
  const auto examples = remote_examples();
  EXPECT_THROW(remote_victim_eval(fast_options("ftp://x/y", "t"), examples), std::invalid_argument);
  EXPECT_THROW(remote_victim_eval(fast_options("http://", "t"), examples), std::invalid_argument);
  EXPECT_THROW(remote_victim_eval(fast_options("http://127.0.0.1:1/x", "t"), std::span<const data::LabeledImage>{}),
               std::invalid_argument);
}

// End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Usage: nobox_acceptance [victim-cache-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nobox/attack/attack.hpp"
#include "nobox/attack/losses.hpp"
#include "nobox/attack/objective.hpp"
#include "nobox/data/sampling.hpp"
#include "nobox/data/transforms.hpp"
#include "nobox/evaluation/prototype_classifier.hpp"
#include "nobox/evaluation/roc.hpp"
#include "nobox/experiment/toy_suite.hpp"
#include "nobox/training/losses.hpp"
#include "nobox/training/trainer.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace nobox;

namespace {

// Tolerances and sizes pinned by the acceptance contract.
constexpr double kFeasibilityTol = 1e-9;
constexpr int kFeasibilityExamples = 200;
constexpr int kGradientProbes = 50;
constexpr double kGradientTol = 1e-2;
constexpr double kGradientStep = 1e-5;
constexpr double kSymmetryTol = 1e-9;
constexpr double kPositiveHitTol = 1e-6;
constexpr int kTransferSeeds = 5;
constexpr double kOrderingGap = 0.03;
constexpr double kTrendSlack = 0.01;
constexpr int kGapSeeds = 10;
constexpr int kGapTestPerClass = 100;
constexpr int kAgreementInputs = 1000;
constexpr int kRocSets = 100;
constexpr double kRocTol = 1e-9;

using Clock = std::chrono::steady_clock;

struct Verdict {
  std::string name;
  bool pass = false;
  std::string detail;
};

std::vector<Verdict> verdicts;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s | %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  verdicts.push_back({name, pass, detail});
}

std::string fmt(const char* format, auto... args) {
  char buf[2048];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

// ---- feasibility -------------------------------------------------------------

struct FeasibilityTally {
  std::size_t total = 0;
  std::size_t feasible = 0;
  double worst_linf = 0.0;

  void add(const std::vector<data::LabeledImage>& benign, const std::vector<data::LabeledImage>& adv, double eps) {
    for (std::size_t i = 0; i < adv.size(); ++i) {
      const double d = attack::linf_distance(benign[i].image, adv[i].image);
      bool ok = d <= eps + kFeasibilityTol;
      for (double v : adv[i].image.pixels()) ok = ok && v >= 0.0 && v <= 1.0;
      worst_linf = std::max(worst_linf, d);
      ++total;
      feasible += ok ? 1 : 0;
    }
  }
};

// ---- gradient oracle ---------------------------------------------------------

struct GradientStats {
  int probes = 0;
  double max_rel = 0.0;
};

// Probes random coordinates of `point` and compares grad[i] with a central difference.
GradientStats probe_gradient(const std::function<double(const std::vector<double>&)>& f,
                             const std::vector<double>& point, const std::vector<double>& grad, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, point.size() - 1);
  GradientStats s;
  for (int p = 0; p < kGradientProbes; ++p) {
    const auto i = pick(rng);
    const double numeric = test::central_difference(f, point, i, kGradientStep);
    s.max_rel = std::max(s.max_rel, test::relative_error(grad[i], numeric, 1e-8));
    ++s.probes;
  }
  return s;
}

model::ModelSpec suite_spec(const experiment::SuiteConfig& config, int decoders, std::uint64_t seed) {
  model::ModelSpec spec;
  spec.input_shape = config.image_shape();
  spec.base_width = config.substitute_width;
  spec.num_residual_blocks = config.residual_blocks;
  spec.decoders = decoders;
  spec.seed = seed;
  return spec;
}

// Gradient of a parameter loss: params are swapped in for each evaluation.
GradientStats param_gradient(model::SubstituteModel& m, const std::function<double(std::span<double>)>& loss,
                             std::uint64_t seed) {
  std::vector<double> grad(m.param_count(), 0.0);
  loss(grad);
  const auto original = m.parameters();
  const auto f = [&](const std::vector<double>& p) {
    m.parameters() = p;
    const double v = loss({});
    m.parameters() = original;
    return v;
  };
  return probe_gradient(f, original, grad, seed);
}

void check_gradients(const experiment::SuiteConfig& config) {
  const auto t0 = Clock::now();
  const auto aux = experiment::auxiliary_sets(config, 900).front();
  std::vector<data::ImageTensor> batch;
  for (std::size_t i = 0; i < aux.size(); i += 5) batch.push_back(aux.examples[i].image);
  std::vector<data::ChaosDescriptor> transforms;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    transforms.push_back(i % 2 == 0 ? data::ChaosDescriptor{data::ChaosKind::kRotation, 90 * static_cast<int>(i % 4), {}}
                                    : data::ChaosDescriptor{data::ChaosKind::kJigsaw, 0, {3, 1, 0, 2}});
  }

  std::map<std::string, GradientStats> stats;
  auto chaos = model::SubstituteModel::build(suite_spec(config, 1, 901));
  stats["reconstruction"] = param_gradient(
      chaos, [&](std::span<double> g) { return training::loss_chaos(chaos, batch, transforms, g); }, 902);

  auto proto = model::SubstituteModel::build(suite_spec(config, 2, 903));
  const auto bank = data::sample_prototype_bank(aux, 2, 904);
  std::vector<data::LabeledImage> labelled(aux.examples.begin(), aux.examples.begin() + 4);
  labelled.insert(labelled.end(), aux.examples.end() - 4, aux.examples.end());
  stats["prototypical"] = param_gradient(
      proto, [&](std::span<double> g) { return training::loss_prototypical(proto, labelled, bank, g).value; }, 905);

  attack::AttackConfig ac;
  const auto guides = attack::build_guides(proto, aux, &bank, ac);
  const auto x0 = aux.target().image;
  for (auto kind : {attack::LossKind::kEuclidean, attack::LossKind::kCosine}) {
    const attack::SubstituteObjective obj(proto, guides, 1.0, kind);
    std::vector<double> grad;
    obj.evaluate(x0, &grad);
    const auto f = [&](const std::vector<double>& v) {
      return obj.evaluate(data::ImageTensor(x0.channels(), x0.height(), x0.width(), v), nullptr);
    };
    stats["adversarial_" + attack::to_string(kind)] = probe_gradient(f, x0.vector(), grad, 906);
  }

  bool pass = true;
  std::string detail;
  for (const auto& [name, s] : stats) {
    pass = pass && s.probes == kGradientProbes && s.max_rel < kGradientTol;
    detail += fmt("%s max rel %.2e over %d probes; ", name.c_str(), s.max_rel, s.probes);
  }
  detail += fmt("step %.0e, %.1fs", kGradientStep, seconds_since(t0));
  report("gradient oracle", pass, detail);
}

// ---- closed forms --------------------------------------------------------------

void check_closed_forms() {
  const auto r = test::random_vector(256, 1000);
  const auto g = test::random_vector(256, 1001);
  const auto neg = test::random_vector(256, 1002, -0.2, 0.2);
  using Spans = std::vector<std::span<const double>>;
  const double symmetric = attack::softmax_prototype_loss(r, g, Spans{g}, 1.0);
  const double sym_err = std::abs(symmetric - std::log(2.0));

  // Softmax oracle over {-lambda d^2}: positive hit means d_pos = 0.
  double worst_hit = 0.0;
  for (double lambda : {0.01, 0.1, 1.0}) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) d2 += (r[i] - neg[i]) * (r[i] - neg[i]);
    const double expected = std::log1p(std::exp(-lambda * d2));
    worst_hit = std::max(worst_hit, std::abs(attack::softmax_prototype_loss(r, r, Spans{neg}, lambda) - expected));
  }
  report("closed-form loss values", sym_err <= kSymmetryTol && worst_hit <= kPositiveHitTol,
         fmt("|L_sym - ln2| = %.2e (tol %.0e); positive hit max err %.2e (tol %.0e)", sym_err, kSymmetryTol,
             worst_hit, kPositiveHitTol));
}

// ---- prototype classifier agreement ------------------------------------------

void check_agreement(const experiment::SuiteConfig& config) {
  const auto t0 = Clock::now();
  const auto aux = experiment::auxiliary_sets(config, 910).front();
  auto train = config.train;
  train.mechanism = training::Mechanism::kPrototypical;
  train.seed = 911;
  const auto trained = training::train_substitute(model::SubstituteModel::build(suite_spec(config, 1, 912)), aux, train);
  int agree = 0, ones = 0;
  for (int i = 0; i < kAgreementInputs; ++i) {
    // Half uniform noise, half jittered auxiliary images, so both classes occur.
    data::ImageTensor x = test::random_image(config.style.channels, config.style.size, config.style.size, 913 + i);
    if (i % 2 == 1) {
      auto v = aux.examples[static_cast<std::size_t>(i / 2) % aux.size()].image.vector();
      const auto n = test::random_vector(v.size(), 5000 + i, -0.05, 0.05);
      for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::clamp(v[j] + n[j], 0.0, 1.0);
      x = data::ImageTensor(x.channels(), x.height(), x.width(), std::move(v));
    }
    const int a = eval::prototype_classify(trained.model, x, *trained.bank);
    const int b = eval::prototype_classify_multi(trained.model, x, *trained.bank);
    agree += a == b ? 1 : 0;
    ones += a;
  }
  report("single-decoder classifier agreement", agree == kAgreementInputs,
         fmt("%d/%d agree (%d labelled class 1), %.1fs", agree, kAgreementInputs, ones, seconds_since(t0)));
}

// ---- ROC ---------------------------------------------------------------------

void check_roc() {
  Rng rng(920);
  double worst = 0.0;
  for (int set = 0; set < kRocSets; ++set) {
    std::uniform_int_distribution<int> size(1, 60), coarse(0, 7);
    std::normal_distribution<double> gauss;
    std::vector<double> g(size(rng)), im(size(rng));
    const bool ties = set % 3 == 0;
    for (auto& v : g) v = ties ? coarse(rng) + 1 : gauss(rng) + 0.5;
    for (auto& v : im) v = ties ? coarse(rng) : gauss(rng);
    double u = 0.0;
    for (double a : g) {
      for (double b : im) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
    u /= static_cast<double>(g.size() * im.size());
    worst = std::max(worst, std::abs(eval::roc_from_scores(g, im).auc - u));
  }
  report("ROC correctness", worst <= kRocTol, fmt("max |AUC - rank statistic| = %.2e over %d sets", worst, kRocSets));
}

// ---- threat-model guard --------------------------------------------------------

// Follows project includes from every attack source; none may reach the
// evaluation or experiment layers, and the attack target may not link them.
void check_guard(const fs::path& root) {
  const std::regex include_re(R"re(^\s*#\s*include\s*[<"]([^>"]+)[>"])re");
  std::vector<fs::path> pending;
  for (const auto& dir : {root / "src" / "attack", root / "include" / "nobox" / "attack"}) {
    for (const auto& e : fs::directory_iterator(dir)) pending.push_back(e.path());
  }
  std::set<fs::path> seen;
  std::vector<std::string> violations;
  while (!pending.empty()) {
    const auto file = pending.back();
    pending.pop_back();
    if (!seen.insert(file).second) continue;
    std::ifstream in(file);
    std::string line;
    while (std::getline(in, line)) {
      std::smatch m;
      if (!std::regex_search(line, m, include_re)) continue;
      const std::string inc = m[1];
      if (inc.starts_with("nobox/evaluation/") || inc.starts_with("nobox/experiment/") || inc == "httplib.h") {
        violations.push_back(file.filename().string() + " -> " + inc);
      }
      if (inc.starts_with("nobox/")) pending.push_back(root / "include" / inc);
    }
  }
  std::ifstream cmake(root / "src" / "CMakeLists.txt");
  std::stringstream text;
  text << cmake.rdbuf();
  std::smatch link;
  const std::string cm = text.str();
  const bool found = std::regex_search(cm, link, std::regex(R"(target_link_libraries\(nobox_attack([^)]*)\))"));
  if (!found) violations.push_back("no link rule for nobox_attack");
  if (found && (link[1].str().find("evaluation") != std::string::npos ||
                link[1].str().find("experiment") != std::string::npos)) {
    violations.push_back("nobox_attack links" + link[1].str());
  }
  std::string detail = fmt("%zu files scanned", seen.size());
  for (const auto& v : violations) detail += "; " + v;
  report("threat-model guard", violations.empty() && seen.size() > 4, detail);
}

// ---- toy-suite criteria -----------------------------------------------------------

struct MethodRuns {
  std::vector<double> averages;  // one per seed
  double mean() const {
    double s = 0.0;
    for (double a : averages) s += a;
    return s / static_cast<double>(averages.size());
  }
};

void check_suite(const experiment::SuiteConfig& config, const fs::path& cache) {
  using training::Mechanism;
  auto t0 = Clock::now();
  const auto zoo = experiment::build_victim_zoo(config, cache);
  std::printf("victim zoo ready in %.1fs, benign test accuracy vgg %.3f resnet %.3f wide %.3f\n", seconds_since(t0),
              zoo.benign_accuracy[0], zoo.benign_accuracy[1], zoo.benign_accuracy[2]);

  // Feasibility at the smaller budget: a dedicated run of 200 examples.
  t0 = Clock::now();
  auto small = config;
  small.attack.budget.epsilon = 0.08;
  small.sets_per_seed = kFeasibilityExamples / config.n;
  FeasibilityTally small_tally;
  const auto small_out = experiment::run_method(small, zoo, {"prototypical", Mechanism::kPrototypical, 1}, 77);
  small_tally.add(small_out.benign, small_out.adversarial, 0.08);
  const double small_seconds = seconds_since(t0);

  const std::vector<experiment::Method> methods{{"naive_ae", Mechanism::kNaiveAe, 1},
                                                {"jigsaw", Mechanism::kJigsaw, 1},
                                                {"rotation", Mechanism::kRotation, 1},
                                                {"naive_supervised", Mechanism::kNaiveSupervised, 1},
                                                {"prototypical", Mechanism::kPrototypical, 1},
                                                {"prototypical_k5", Mechanism::kPrototypical, 5}};
  auto pgd = config;
  pgd.attack.baseline = attack::Baseline::kPgd;

  t0 = Clock::now();
  std::map<std::string, MethodRuns> runs;
  FeasibilityTally tally;
  std::vector<data::LabeledImage> benign;
  for (int seed = 0; seed < kTransferSeeds; ++seed) {
    for (const auto& m : methods) {
      const auto out = experiment::run_method(config, zoo, m, seed);
      runs[m.name].averages.push_back(out.report.average());
      tally.add(out.benign, out.adversarial, config.attack.budget.epsilon);
      if (m.name == "naive_ae") benign.insert(benign.end(), out.benign.begin(), out.benign.end());
    }
    const auto out = experiment::run_method(pgd, zoo, {"prototypical_pgd", Mechanism::kPrototypical, 1}, seed);
    runs["prototypical_pgd"].averages.push_back(out.report.average());
    tally.add(out.benign, out.adversarial, config.attack.budget.epsilon);
    std::printf("seed %d done (%.0fs)\n", seed, seconds_since(t0));
    std::fflush(stdout);
  }
  const double suite_seconds = seconds_since(t0);
  std::printf("average victim accuracy over %d seeds (benign targets %.4f):\n", kTransferSeeds,
              experiment::evaluate(zoo, benign, "benign").average());
  for (const auto& [name, r] : runs) std::printf("  %-18s %.4f\n", name.c_str(), r.mean());

  const auto feasible = [](const FeasibilityTally& t) {
    return t.feasible == t.total && t.total >= static_cast<std::size_t>(kFeasibilityExamples);
  };
  report("feasibility", feasible(small_tally) && feasible(tally),
         fmt("eps=0.08: %zu/%zu feasible, max linf %.6f, %.0fs; eps=0.1: %zu/%zu feasible, max linf %.6f",
             small_tally.feasible, small_tally.total, small_tally.worst_linf, small_seconds, tally.feasible,
             tally.total, tally.worst_linf));

  // Lower victim accuracy means a stronger attack; `a < b` needs a gap of 3 points.
  const auto acc = [&](const std::string& m) { return runs.at(m).mean(); };
  const std::vector<std::pair<std::string, std::string>> order{
      {"prototypical", "rotation"},     {"prototypical", "jigsaw"},       {"rotation", "naive_ae"},
      {"jigsaw", "naive_ae"},           {"naive_ae", "naive_supervised"}, {"jigsaw", "naive_supervised"},
      {"rotation", "naive_supervised"}, {"prototypical", "naive_supervised"}};
  bool ordered = true;
  std::string detail;
  for (const auto& [a, b] : order) {
    const bool ok = acc(a) + kOrderingGap <= acc(b);
    ordered = ordered && ok;
    detail += fmt("%s %s<%s (%.1f vs %.1f); ", ok ? "ok" : "violated", a.c_str(), b.c_str(), 100 * acc(a),
                  100 * acc(b));
  }
  detail += fmt("%.0fs for all suite runs", suite_seconds);
  report("transfer ordering", ordered, detail);

  report("multi-decoder trend", acc("prototypical_k5") <= acc("prototypical") + kTrendSlack,
         fmt("K=5 %.2f%% vs K=1 %.2f%% (slack %.0f points)", 100 * acc("prototypical_k5"), 100 * acc("prototypical"),
             100 * kTrendSlack));
  report("PGD vs I-FGSM", acc("prototypical_pgd") <= acc("prototypical") + kTrendSlack,
         fmt("PGD+ILA %.2f%% vs I-FGSM+ILA %.2f%% (slack %.0f points)", 100 * acc("prototypical_pgd"),
             100 * acc("prototypical"), 100 * kTrendSlack));

  t0 = Clock::now();
  double proto_gap = 0.0, sup_gap = 0.0, proto_test = 0.0, sup_test = 0.0;
  for (int seed = 0; seed < kGapSeeds; ++seed) {
    const auto p = experiment::measure_gap(config, Mechanism::kPrototypical, 200 + seed, kGapTestPerClass);
    const auto s = experiment::measure_gap(config, Mechanism::kNaiveSupervised, 200 + seed, kGapTestPerClass);
    proto_gap += p.gap() / kGapSeeds;
    sup_gap += s.gap() / kGapSeeds;
    proto_test += p.test_accuracy / kGapSeeds;
    sup_test += s.test_accuracy / kGapSeeds;
  }
  report("overfitting gap", proto_gap < sup_gap,
         fmt("prototypical gap %.3f (test %.3f) vs naive_supervised gap %.3f (test %.3f) over %d seeds, %.0fs",
             proto_gap, proto_test, sup_gap, sup_test, kGapSeeds, seconds_since(t0)));
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path cache = argc > 1 ? fs::path(argv[1]) : fs::path("victim_cache");
  const auto t0 = Clock::now();
  const experiment::SuiteConfig config;

  check_closed_forms();
  check_gradients(config);
  check_roc();
  check_guard(NOBOX_SOURCE_DIR);
  check_agreement(config);
  check_suite(config, cache);

  int passed = 0;
  for (const auto& v : verdicts) passed += v.pass ? 1 : 0;
  std::printf("acceptance: %d/%zu criteria passed in %.0fs\n", passed, verdicts.size(), seconds_since(t0));
  return passed == static_cast<int>(verdicts.size()) ? 0 : 1;
}

#include "nobox/attack/attack.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nobox/core/hash.hpp"
#include "nobox/core/rng.hpp"

namespace nobox::attack {

using nlohmann::json;

std::string to_string(Baseline baseline) {
  switch (baseline) {
    case Baseline::kIfgsm: return "ifgsm";
    case Baseline::kPgd: return "pgd";
    case Baseline::kNone: return "none";
  }
  return "unknown";
}

Baseline baseline_from_string(const std::string& name) {
  if (name == "ifgsm") return Baseline::kIfgsm;
  if (name == "pgd") return Baseline::kPgd;
  if (name == "none") return Baseline::kNone;
  throw std::invalid_argument("baseline: unknown value '" + name + "' (expected ifgsm|pgd|none)");
}

std::string to_string(LossKind kind) { return kind == LossKind::kEuclidean ? "euclidean" : "cosine"; }

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "euclidean") return LossKind::kEuclidean;
  if (name == "cosine") return LossKind::kCosine;
  throw std::invalid_argument("loss_kind: unknown value '" + name + "' (expected euclidean|cosine)");
}

void AttackConfig::validate() const {
  budget.validate();
  if (baseline_iters < 0) throw std::invalid_argument("baseline_iters must be >= 0");
  if (ila_iters < 0) throw std::invalid_argument("ila_iters must be >= 0");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be > 0");
  if (num_negatives && *num_negatives < 1) throw std::invalid_argument("num_negatives must be >= 1");
}

std::string AttackConfig::to_json() const {
  json j = {{"norm", to_string(budget.norm)},
            {"epsilon", budget.epsilon},
            {"step_size", budget.step_size},
            {"baseline", to_string(baseline)},
            {"baseline_iters", baseline_iters},
            {"ila_iters", ila_iters},
            {"lambda", lambda},
            {"num_negatives", num_negatives ? json(*num_negatives) : json(nullptr)},
            {"loss_kind", to_string(loss_kind)},
            {"seed", seed}};
  return j.dump();
}

AttackConfig AttackConfig::from_json(const std::string& text) {
  const auto j = json::parse(text);
  AttackConfig c;
  c.budget.norm = norm_from_string(j.at("norm").get<std::string>());
  c.budget.epsilon = j.at("epsilon").get<double>();
  c.budget.step_size = j.at("step_size").get<double>();
  c.baseline = baseline_from_string(j.at("baseline").get<std::string>());
  c.baseline_iters = j.at("baseline_iters").get<int>();
  c.ila_iters = j.at("ila_iters").get<int>();
  c.lambda = j.at("lambda").get<double>();
  if (!j.at("num_negatives").is_null()) c.num_negatives = j.at("num_negatives").get<int>();
  c.loss_kind = loss_kind_from_string(j.at("loss_kind").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

std::string AttackConfig::hash() const { return sha256_hex(to_json()); }

std::string CraftRecord::to_json() const {
  const auto last = [](const std::vector<double>& v) { return v.empty() ? json(nullptr) : json(v.back()); };
  json j = {{"config_hash", config_hash},
            {"seed", seed},
            {"baseline_iterations", baseline_losses.empty() ? 0 : baseline_losses.size() - 1},
            {"baseline_final_loss", last(baseline_losses)},
            {"ila_iterations", ila_objective.empty() ? 0 : ila_objective.size() - 1},
            {"ila_final_objective", last(ila_objective)},
            {"final_loss", final_loss},
            {"zero_direction", zero_direction},
            {"used_guide", used_guide},
            {"linf", linf},
            {"l2", l2}};
  return j.dump(2);
}

namespace {

/// One ascent step: sign step under the max norm, a step of the same Euclidean
/// length along the normalized gradient under the l2 norm.
data::ImageTensor ascend(const data::ImageTensor& x0, const data::ImageTensor& x, const std::vector<double>& grad,
                         const Budget& budget) {
  std::vector<double> next = x.vector();
  if (budget.norm == Norm::kLinf) {
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] += budget.step_size * static_cast<double>((grad[i] > 0.0) - (grad[i] < 0.0));
    }
  } else {
    const double g = std::sqrt(std::inner_product(grad.begin(), grad.end(), grad.begin(), 0.0));
    if (g > 0.0) {
      const double scale = budget.step_size * std::sqrt(static_cast<double>(next.size())) / g;
      for (std::size_t i = 0; i < next.size(); ++i) next[i] += scale * grad[i];
    }
  }
  return project(x0, next, budget);
}

data::ImageTensor random_start(const data::ImageTensor& x0, const Budget& budget, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x = x0.vector();
  if (budget.norm == Norm::kLinf) {
    std::uniform_real_distribution<double> u(-budget.epsilon, budget.epsilon);
    for (auto& v : x) v += u(rng);
  } else {
    std::normal_distribution<double> gauss;
    std::vector<double> dir(x.size());
    double norm = 0.0;
    for (auto& d : dir) {
      d = gauss(rng);
      norm += d * d;
    }
    norm = std::sqrt(norm);
    const double radius =
        budget.epsilon * std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(rng), 1.0 / x.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += radius * dir[i] / norm;
  }
  return project(x0, x, budget);
}

}  // namespace

data::ImageTensor run_baseline(const Objective& objective, const data::ImageTensor& x0,
                               const data::ImageTensor& natural_guide, const AttackConfig& config,
                               std::vector<double>* losses) {
  if (config.baseline == Baseline::kNone) {
    if (!natural_guide.same_shape(x0)) throw std::invalid_argument("run_baseline: natural guide shape mismatch");
    return natural_guide;
  }
  data::ImageTensor x = config.baseline == Baseline::kPgd
                            ? random_start(x0, config.budget, derive_seed(config.seed, 21))
                            : x0;
  std::vector<double> grad;
  for (int it = 0; it < config.baseline_iters; ++it) {
    const double loss = objective.evaluate(x, &grad);
    if (losses != nullptr) losses->push_back(loss);
    x = ascend(x0, x, grad, config.budget);
  }
  if (losses != nullptr) losses->push_back(objective.evaluate(x, nullptr));
  return x;
}

IlaResult run_ila(const FeatureMap& features, const data::ImageTensor& x0, const data::ImageTensor& guide,
                  const AttackConfig& config) {
  IlaResult result{x0, false, {}};
  if (config.ila_iters == 0) return result;
  const auto f0 = features.features(x0);
  auto direction = features.features(guide);
  double norm = 0.0;
  for (std::size_t i = 0; i < direction.size(); ++i) {
    direction[i] -= f0[i];
    norm += direction[i] * direction[i];
  }
  if (norm == 0.0) {
    result.image = guide;
    result.zero_direction = true;
    return result;
  }
  const auto projection = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += (f[i] - f0[i]) * direction[i];
    return s;
  };
  data::ImageTensor x = x0;
  std::vector<double> f;
  for (int it = 0; it < config.ila_iters; ++it) {
    const auto grad = features.vjp(x, direction, &f);
    result.objective.push_back(projection(f));
    x = ascend(x0, x, grad, config.budget);
  }
  result.objective.push_back(projection(features.features(x)));
  result.image = std::move(x);
  return result;
}

std::vector<GuideSet> build_guides(const model::SubstituteModel& model, const data::AuxiliarySet& aux,
                                   const data::PrototypeBank* bank, const AttackConfig& config) {
  aux.validate();
  const int K = model.decoder_count();
  const int label = aux.target().label;
  const int opposite = 1 - label;
  std::vector<GuideSet> guides(K);
  if (bank != nullptr) {
    if (static_cast<int>(bank->decoder_count()) != K) {
      throw std::invalid_argument("build_guides: bank has " + std::to_string(bank->decoder_count()) +
                                  " pairs for a model with K=" + std::to_string(K));
    }
    const int m = config.num_negatives.value_or(K);
    for (int k = 0; k < K; ++k) {
      guides[k].positive = bank->pairs[k].of(label);
      for (int j = 0; j < m; ++j) guides[k].negatives.push_back(bank->pairs[(k + j) % K].of(opposite));
    }
    return guides;
  }
  auto pool = aux.indices_of(opposite);
  Rng rng(derive_seed(config.seed, 31));
  std::shuffle(pool.begin(), pool.end(), rng);
  const int m = config.num_negatives.value_or(1);
  GuideSet g;
  g.positive = aux.target().image;
  for (int j = 0; j < m; ++j) g.negatives.push_back(aux.examples[pool[j % pool.size()]].image);
  std::fill(guides.begin(), guides.end(), g);
  return guides;
}

CraftResult craft(const Objective& objective, const FeatureMap& features, const data::ImageTensor& x0,
                  const data::ImageTensor& natural_guide, const AttackConfig& config) {
  config.validate();
  CraftResult result;
  auto& rec = result.record;
  rec.config_hash = config.hash();
  rec.seed = config.seed;
  const auto guide = run_baseline(objective, x0, natural_guide, config, &rec.baseline_losses);
  if (config.ila_iters == 0) {
    result.image = project(x0, guide, config.budget);
    rec.used_guide = true;
  } else {
    auto ila = run_ila(features, x0, guide, config);
    rec.ila_objective = std::move(ila.objective);
    rec.zero_direction = ila.zero_direction;
    rec.used_guide = ila.zero_direction;
    result.image = ila.zero_direction ? project(x0, ila.image, config.budget) : std::move(ila.image);
  }
  if (!is_feasible(x0, result.image, config.budget)) {
    throw std::logic_error("craft: crafted example violates the perturbation budget");
  }
  rec.final_loss = objective.evaluate(result.image, nullptr);
  rec.linf = linf_distance(x0, result.image);
  rec.l2 = l2_distance(x0, result.image);
  return result;
}

CraftResult craft(const model::SubstituteModel& model, const data::AuxiliarySet& aux,
                  const data::PrototypeBank* bank, const AttackConfig& config) {
  config.validate();
  auto guides = build_guides(model, aux, bank, config);
  const auto natural = guides[0].negatives[0];
  const SubstituteObjective objective(model, std::move(guides), config.lambda, config.loss_kind);
  const EncoderFeatures features(model);
  return craft(objective, features, aux.target().image, natural, config);
}

CraftResult craft(const model::ClassifierNet& net, const data::AuxiliarySet& aux, const AttackConfig& config) {
  config.validate();
  aux.validate();
  const auto& target = aux.target();
  auto pool = aux.indices_of(1 - target.label);
  Rng rng(derive_seed(config.seed, 31));
  std::shuffle(pool.begin(), pool.end(), rng);
  const ClassifierObjective objective(net, target.label);
  const ClassifierFeatures features(net);
  return craft(objective, features, target.image, aux.examples[pool[0]].image, config);
}

}  // namespace nobox::attack

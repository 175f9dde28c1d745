#include "nobox/experiment/toy_suite.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "nobox/core/hash.hpp"
#include "nobox/core/rng.hpp"
#include "nobox/evaluation/prototype_classifier.hpp"
#include "nobox/model/checkpoint.hpp"

namespace nobox::experiment {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::vector<data::LabeledImage> labelled_split(const std::vector<data::ToyShape>& classes, const data::ToyStyle& style,
                                               int per_class, std::uint64_t seed) {
  auto ds = data::generate_toy_dataset(classes, per_class, style, seed);
  std::vector<data::LabeledImage> out;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    for (const auto& img : ds.at(data::to_string(classes[c]))) out.push_back({img, static_cast<int>(c)});
  }
  return out;
}

std::string zoo_key(const SuiteConfig& c, const model::ClassifierSpec& spec) {
  const auto& f = c.victim_fit;
  std::vector<std::string> classes;
  for (auto shape : c.victim_classes) classes.push_back(data::to_string(shape));
  nlohmann::json j = {{"spec", spec.to_json()},
                      {"classes", classes},
                      {"style", {c.style.size, c.style.channels, c.style.noise, c.style.distractors,
                                 c.style.min_contrast, c.style.position_jitter, c.style.min_radius,
                                 c.style.max_radius}},
                      {"data_seed", c.data_seed},
                      {"train_per_class", c.victim_train_per_class},
                      {"fit", {f.epochs, f.batch_size, f.learning_rate, f.weight_decay, f.augmentation.flip,
                               f.augmentation.crop_padding, f.augmentation.noise, f.seed}}};
  return sha256_hex(j.dump()).substr(0, 16);
}

}  // namespace

int SuiteConfig::victim_label(int aux_label) const {
  const auto shape = aux_label == 0 ? class0 : class1;
  const auto it = std::find(victim_classes.begin(), victim_classes.end(), shape);
  if (it == victim_classes.end()) {
    throw std::invalid_argument("suite: class '" + data::to_string(shape) + "' is not among the victim classes");
  }
  return static_cast<int>(it - victim_classes.begin());
}

VictimZoo build_victim_zoo(const SuiteConfig& config, const std::filesystem::path& cache_dir) {
  const auto train = labelled_split(config.victim_classes, config.style, config.victim_train_per_class,
                                    derive_seed(config.data_seed, 100));
  const auto test = labelled_split(config.victim_classes, config.style, config.victim_test_per_class,
                                   derive_seed(config.data_seed, 101));
  VictimZoo zoo;
  std::uint64_t stream = 0;
  for (auto arch : {model::ClassifierArch::kVgg, model::ClassifierArch::kResNet, model::ClassifierArch::kWide}) {
    model::ClassifierSpec spec;
    spec.input_shape = config.image_shape();
    spec.arch = arch;
    spec.width = config.victim_width;
    spec.num_classes = static_cast<int>(config.victim_classes.size());
    spec.dropout = config.victim_dropout;
    spec.seed = derive_seed(config.data_seed, 110 + stream++);
    const std::string key = zoo_key(config, spec);
    const auto path = cache_dir.empty() ? std::filesystem::path{} : cache_dir / ("victim_" + to_string(arch) + "_" + key + ".ckpt");
    std::optional<model::ClassifierNet> net;
    if (!path.empty() && std::filesystem::exists(path)) {
      net = model::load_classifier(path, spec.hash());
    } else {
      auto fit = config.victim_fit;
      fit.seed = derive_seed(spec.seed, 1);
      net = training::fit_classifier(model::ClassifierNet::build(spec), train, fit).net;
      if (!path.empty()) {
        std::filesystem::create_directories(cache_dir);
        model::save_classifier(path, *net, nlohmann::json{{"key", key}}.dump());
      }
    }
    zoo.victims.emplace_back(std::move(*net), eval::VictimInfo{to_string(arch), "toy-" + key});
    zoo.benign_accuracy.push_back(eval::accuracy_on(zoo.victims.back(), test));
  }
  return zoo;
}

std::vector<data::AuxiliarySet> auxiliary_sets(const SuiteConfig& config, std::uint64_t seed) {
  if (config.n < 2 || config.n % 2 != 0) throw std::invalid_argument("suite: n must be even and >= 2");
  const int half = config.n / 2;
  auto ds = data::generate_toy_dataset({config.class0, config.class1}, half * config.sets_per_seed, config.style,
                                       derive_seed(derive_seed(config.data_seed, 200), seed));
  const auto& c0 = ds.at(data::to_string(config.class0));
  const auto& c1 = ds.at(data::to_string(config.class1));
  std::vector<data::AuxiliarySet> sets;
  for (int s = 0; s < config.sets_per_seed; ++s) {
    data::AuxiliarySet aux;
    for (int i = 0; i < half; ++i) aux.examples.push_back({c0[s * half + i], 0});
    for (int i = 0; i < half; ++i) aux.examples.push_back({c1[s * half + i], 1});
    aux.validate();
    sets.push_back(std::move(aux));
  }
  return sets;
}

eval::EvalReport evaluate(const VictimZoo& zoo, std::span<const data::LabeledImage> examples,
                          const std::string& method) {
  eval::EvalReport report;
  report.method = method;
  for (const auto& v : zoo.victims) report.victims[v.info().name] = eval::count_correct(v, examples);
  return report;
}

SeedOutcome run_method(const SuiteConfig& config, const VictimZoo& zoo, const Method& method, std::uint64_t seed) {
  using training::Mechanism;
  SeedOutcome out;
  const auto sets = auxiliary_sets(config, seed);
  for (std::size_t s = 0; s < sets.size(); ++s) {
    const std::uint64_t set_seed = derive_seed(derive_seed(seed, 500), s);
    auto train = config.train;
    train.mechanism = method.mechanism;
    train.seed = derive_seed(set_seed, 1);
    auto attack = config.attack;

    auto t0 = Clock::now();
    std::optional<model::SubstituteModel> substitute;
    std::optional<model::ClassifierNet> supervised;
    std::optional<data::PrototypeBank> bank;
    if (method.mechanism == Mechanism::kNaiveSupervised) {
      model::ClassifierSpec spec;
      spec.input_shape = config.image_shape();
      spec.arch = config.supervised_arch;
      spec.width = config.supervised_width;
      spec.seed = derive_seed(set_seed, 2);
      auto r = training::train_naive_supervised(model::ClassifierNet::build(spec), sets[s], train);
      supervised = std::move(r.net);
      out.logs.push_back(std::move(r.log));
    } else {
      model::ModelSpec spec;
      spec.input_shape = config.image_shape();
      spec.base_width = config.substitute_width;
      spec.num_residual_blocks = config.residual_blocks;
      spec.decoders = method.decoders;
      spec.seed = derive_seed(set_seed, 2);
      auto r = training::train_substitute(model::SubstituteModel::build(spec), sets[s], train);
      substitute = std::move(r.model);
      bank = std::move(r.bank);
      out.logs.push_back(std::move(r.log));
    }
    out.train_seconds += seconds_since(t0);

    t0 = Clock::now();
    for (std::size_t t = 0; t < sets[s].size(); ++t) {
      auto aux = sets[s];
      aux.target_index = t;
      attack.seed = derive_seed(set_seed, 1000 + t);
      auto crafted = supervised ? attack::craft(*supervised, aux, attack)
                                : attack::craft(*substitute, aux, bank ? &*bank : nullptr, attack);
      const int label = config.victim_label(aux.target().label);
      out.benign.push_back({aux.target().image, label});
      out.adversarial.push_back({std::move(crafted.image), label});
      out.records.push_back(std::move(crafted.record));
    }
    out.craft_seconds += seconds_since(t0);
  }
  out.report = evaluate(zoo, out.adversarial, method.name);
  out.report.seed = seed;
  out.report.config_hash = config.attack.hash();
  return out;
}

GapMeasurement measure_gap(const SuiteConfig& config, training::Mechanism mechanism, std::uint64_t seed,
                           int test_per_class) {
  using training::Mechanism;
  const auto sets = auxiliary_sets(config, seed);
  const auto& aux = sets.front();
  const auto test = labelled_split({config.class0, config.class1}, config.style, test_per_class,
                                   derive_seed(derive_seed(config.data_seed, 300), seed));
  auto train = config.train;
  train.mechanism = mechanism;
  train.seed = derive_seed(seed, 7);

  std::function<int(const data::ImageTensor&)> classify;
  std::optional<training::SubstituteTrainResult> proto;
  std::optional<training::ClassifierTrainResult> sup;
  if (mechanism == Mechanism::kPrototypical) {
    model::ModelSpec spec;
    spec.input_shape = config.image_shape();
    spec.base_width = config.substitute_width;
    spec.num_residual_blocks = config.residual_blocks;
    spec.seed = derive_seed(seed, 8);
    proto = training::train_substitute(model::SubstituteModel::build(spec), aux, train);
    classify = [&](const data::ImageTensor& x) { return eval::prototype_classify(proto->model, x, *proto->bank); };
  } else if (mechanism == Mechanism::kNaiveSupervised) {
    model::ClassifierSpec spec;
    spec.input_shape = config.image_shape();
    spec.arch = config.supervised_arch;
    spec.width = config.supervised_width;
    spec.seed = derive_seed(seed, 8);
    sup = training::train_naive_supervised(model::ClassifierNet::build(spec), aux, train);
    classify = [&](const data::ImageTensor& x) { return sup->net.predict(std::span(&x, 1)).front(); };
  } else {
    throw std::invalid_argument("measure_gap: only prototypical and naive_supervised act as classifiers");
  }
  const auto acc = [&](const std::vector<data::LabeledImage>& xs) {
    int correct = 0;
    for (const auto& ex : xs) correct += classify(ex.image) == ex.label ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(xs.size());
  };
  return {acc(aux.examples), acc(test)};
}

}  // namespace nobox::experiment

#include "nobox/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "nobox/core/rng.hpp"
#include "nobox/data/sampling.hpp"
#include "nobox/evaluation/prototype_classifier.hpp"
#include "nobox/nn/optim.hpp"

namespace nobox::training {

void TrainConfig::validate() const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (plateau_patience < 1) throw std::invalid_argument("plateau_patience must be >= 1");
  if (plateau_tolerance < 0.0) throw std::invalid_argument("plateau_tolerance must be >= 0");
  if (check_interval < 1) throw std::invalid_argument("check_interval must be >= 1");
  if (smoothing < 0.0 || smoothing >= 1.0) throw std::invalid_argument("smoothing must be in [0, 1)");
  if (batch < 0) throw std::invalid_argument("batch must be >= 0 (0 = full batch)");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
}

std::string TrainLog::to_csv() const {
  std::ostringstream out;
  out.precision(10);
  const bool acc = !train_accuracy.empty();
  out << "iteration,loss" << (acc ? ",train_acc" : "") << '\n';
  for (std::size_t i = 0; i < loss.size(); ++i) {
    out << i + 1 << ',' << loss[i];
    if (acc) out << ',' << train_accuracy[i];
    out << '\n';
  }
  return out.str();
}

void TrainLog::write_csv(const std::filesystem::path& path) const {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << to_csv();
}

namespace {

struct StepOutcome {
  double loss = 0.0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
};

/// Runs Adam with plateau detection on a smoothed loss and returns the best
/// snapshot seen at a check.
/// `params` is updated in place and is the vector the model reads.
std::vector<double> optimize(std::vector<double>& params, const TrainConfig& config, double weight_decay,
                             const std::function<StepOutcome(std::span<double>)>& step, TrainLog& log) {
  nn::Adam adam(params.size(), {.learning_rate = config.learning_rate, .weight_decay = weight_decay});
  std::vector<double> grads(params.size());
  std::vector<double> best = params;
  double ema = 0.0;
  double best_ema = std::numeric_limits<double>::infinity();
  double plateau_ref = std::numeric_limits<double>::infinity();
  int stale = 0;

  for (int it = 0; it < config.max_iterations; ++it) {
    std::fill(grads.begin(), grads.end(), 0.0);
    const auto outcome = step(grads);
    if (!std::isfinite(outcome.loss)) throw std::runtime_error("training diverged: non-finite loss");
    adam.step(params, grads);
    log.loss.push_back(outcome.loss);
    if (!std::isnan(outcome.accuracy)) log.train_accuracy.push_back(outcome.accuracy);
    ema = it == 0 ? outcome.loss : config.smoothing * ema + (1.0 - config.smoothing) * outcome.loss;
    log.stopped_at = it + 1;

    const bool last = it + 1 == config.max_iterations;
    if ((it + 1) % config.check_interval != 0 && !last) continue;
    log.smoothed_at_checks.push_back(ema);
    if (ema < best_ema) {
      best_ema = ema;
      best = params;
      log.best_iteration = it + 1;
    }
    if (ema < plateau_ref * (1.0 - config.plateau_tolerance)) {
      plateau_ref = ema;
      stale = 0;
    } else if (++stale >= config.plateau_patience) {
      log.early_stopped = !last;
      break;
    }
  }
  log.best_smoothed_loss = best_ema;
  return best;
}

std::vector<data::LabeledImage> minibatch(const data::AuxiliarySet& aux, int batch, Rng& rng) {
  if (batch == 0 || batch >= static_cast<int>(aux.size())) return aux.examples;
  std::vector<std::size_t> idx(aux.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<data::LabeledImage> out;
  for (int i = 0; i < batch; ++i) out.push_back(aux.examples[idx[i]]);
  return out;
}

}  // namespace

SubstituteTrainResult train_substitute(model::SubstituteModel model, const data::AuxiliarySet& aux,
                                       const TrainConfig& config) {
  config.validate();
  aux.validate();
  if (!is_autoencoder(config.mechanism)) {
    throw std::invalid_argument("train_substitute: naive_supervised trains a classifier; use train_naive_supervised");
  }
  if (config.mechanism != Mechanism::kPrototypical && model.decoder_count() != 1) {
    throw std::invalid_argument("train_substitute: mechanism " + to_string(config.mechanism) +
                                " requires K=1, model has K=" + std::to_string(model.decoder_count()));
  }

  SubstituteTrainResult result{model, {}, std::nullopt};  // model is replaced after training
  if (config.mechanism == Mechanism::kPrototypical) {
    result.bank = data::sample_prototype_bank(aux, model.decoder_count(), derive_seed(config.seed, 1));
  }
  Rng batch_rng(derive_seed(config.seed, 3));
  int iteration = 0;

  auto step = [&](std::span<double> grads) -> StepOutcome {
    const auto batch = minibatch(aux, config.batch, batch_rng);
    std::vector<data::ImageTensor> images;
    for (const auto& ex : batch) images.push_back(ex.image);
    const std::uint64_t it_seed = derive_seed(derive_seed(config.seed, 2), static_cast<std::uint64_t>(iteration++));
    StepOutcome out;
    switch (config.mechanism) {
      case Mechanism::kRotation:
        out.loss = loss_chaos(model, images, data::ChaosKind::kRotation, it_seed, grads);
        break;
      case Mechanism::kJigsaw:
        out.loss = loss_chaos(model, images, data::ChaosKind::kJigsaw, it_seed, grads);
        break;
      case Mechanism::kNaiveAe:
        out.loss = loss_naive_ae(model, images, grads);
        break;
      case Mechanism::kPrototypical: {
        auto r = loss_prototypical(model, batch, *result.bank, grads, true);
        out.loss = r.value;
        int correct = 0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          std::vector<std::span<const double>> views;
          for (const auto& o : r.outputs) views.push_back(o.sample(static_cast<int>(i)));
          if (eval::classify_reconstructions(views, *result.bank) == batch[i].label) ++correct;
        }
        out.accuracy = static_cast<double>(correct) / static_cast<double>(batch.size());
        break;
      }
      case Mechanism::kNaiveSupervised: break;
    }
    return out;
  };

  auto best = optimize(model.parameters(), config, 0.0, step, result.log);
  model.parameters() = std::move(best);
  result.model = std::move(model);
  return result;
}

ClassifierTrainResult train_naive_supervised(model::ClassifierNet net, const data::AuxiliarySet& aux,
                                             const TrainConfig& config) {
  config.validate();
  aux.validate();
  if (config.mechanism != Mechanism::kNaiveSupervised) {
    throw std::invalid_argument("train_naive_supervised: mechanism must be naive_supervised");
  }
  Rng rng(derive_seed(config.seed, 4));
  const auto images = aux.images();

  auto step = [&](std::span<double> grads) -> StepOutcome {
    const auto batch = minibatch(aux, config.batch, rng);
    StepOutcome out;
    out.loss = loss_naive_supervised(net, batch, &config.augmentation, &rng, grads);
    // Clean accuracy on the full set, before this step's update.
    const auto predicted = net.predict(images);
    int correct = 0;
    for (std::size_t i = 0; i < predicted.size(); ++i) correct += predicted[i] == aux.examples[i].label ? 1 : 0;
    out.accuracy = static_cast<double>(correct) / static_cast<double>(predicted.size());
    return out;
  };

  TrainLog log;
  auto best = optimize(net.parameters(), config, config.weight_decay, step, log);
  net.parameters() = std::move(best);
  return {std::move(net), std::move(log)};
}

ClassifierTrainResult fit_classifier(model::ClassifierNet net, std::span<const data::LabeledImage> examples,
                                     const FitOptions& options) {
  if (examples.empty()) throw std::invalid_argument("fit_classifier: no examples");
  if (options.epochs < 1 || options.batch_size < 1) {
    throw std::invalid_argument("fit_classifier: epochs and batch_size must be >= 1");
  }
  Rng rng(options.seed);
  nn::Adam adam(net.param_count(),
                {.learning_rate = options.learning_rate, .weight_decay = options.weight_decay});
  std::vector<double> grads(net.param_count());
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  TrainLog log;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    int correct_total = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      std::vector<data::LabeledImage> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
      std::fill(grads.begin(), grads.end(), 0.0);
      int correct = 0;
      log.loss.push_back(loss_naive_supervised(net, batch, &options.augmentation, &rng, grads, &correct));
      correct_total += correct;
      adam.step(net.parameters(), grads);
      ++log.stopped_at;
    }
    log.train_accuracy.push_back(static_cast<double>(correct_total) / static_cast<double>(examples.size()));
  }
  log.best_iteration = log.stopped_at;
  return {std::move(net), std::move(log)};
}

}  // namespace nobox::training

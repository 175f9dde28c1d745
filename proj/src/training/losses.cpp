#include "nobox/training/losses.hpp"

#include <stdexcept>

#include "nobox/data/transforms.hpp"
#include "nobox/nn/functional.hpp"

namespace nobox::training {

std::string to_string(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kRotation: return "rotation";
    case Mechanism::kJigsaw: return "jigsaw";
    case Mechanism::kPrototypical: return "prototypical";
    case Mechanism::kNaiveAe: return "naive_ae";
    case Mechanism::kNaiveSupervised: return "naive_supervised";
  }
  return "unknown";
}

Mechanism mechanism_from_string(const std::string& name) {
  for (auto m : {Mechanism::kRotation, Mechanism::kJigsaw, Mechanism::kPrototypical, Mechanism::kNaiveAe,
                 Mechanism::kNaiveSupervised}) {
    if (to_string(m) == name) return m;
  }
  throw std::invalid_argument("mechanism: unknown value '" + name +
                              "' (expected rotation|jigsaw|prototypical|naive_ae|naive_supervised)");
}

bool is_autoencoder(Mechanism mechanism) { return mechanism != Mechanism::kNaiveSupervised; }

LossResult reconstruction_loss(const model::SubstituteModel& model, const Tensor& inputs,
                               const std::vector<Tensor>& targets, std::span<double> grad_params,
                               bool keep_outputs) {
  const int K = model.decoder_count();
  if (static_cast<int>(targets.size()) != K) {
    throw std::invalid_argument("reconstruction_loss: expected " + std::to_string(K) + " target tensors, got " +
                                std::to_string(targets.size()));
  }
  const int n = inputs.shape().n;
  if (n == 0) throw std::invalid_argument("reconstruction_loss: empty batch");
  const bool want_grad = !grad_params.empty();
  const double scale = 1.0 / (static_cast<double>(n) * K);

  auto enc = model.encode_pass(inputs);
  Tensor grad_code;
  if (want_grad) grad_code = Tensor(enc.code.shape());
  LossResult result;
  for (int k = 0; k < K; ++k) {
    if (!(targets[k].shape() == inputs.shape())) {
      throw std::invalid_argument("reconstruction_loss: target shape " + targets[k].shape().str() +
                                  " does not match input " + inputs.shape().str());
    }
    auto dec = model.decode_pass(enc.code, k);
    Tensor diff = dec.output - targets[k];
    result.value += diff.squared_norm() * scale;
    if (want_grad) {
      diff *= 2.0 * scale;
      grad_code += model.decoder_backward(k, dec, diff, grad_params);
    }
    if (keep_outputs) result.outputs.push_back(std::move(dec.output));
  }
  if (want_grad) model.encoder_backward(enc, grad_code, grad_params, false);
  return result;
}

namespace {

void require_single_decoder(const model::SubstituteModel& model, const char* what) {
  if (model.decoder_count() != 1) {
    throw std::invalid_argument(std::string(what) + ": requires a single-decoder model, got K=" +
                                std::to_string(model.decoder_count()));
  }
}

}  // namespace

double loss_chaos(const model::SubstituteModel& model, std::span<const data::ImageTensor> batch,
                  std::span<const data::ChaosDescriptor> transforms, std::span<double> grad_params) {
  require_single_decoder(model, "loss_chaos");
  if (transforms.size() != batch.size()) {
    throw std::invalid_argument("loss_chaos: one transform per image required");
  }
  std::vector<data::ImageTensor> inputs;
  inputs.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) inputs.push_back(data::apply_chaos(batch[i], transforms[i]));
  return reconstruction_loss(model, data::stack(inputs), {data::stack(batch)}, grad_params).value;
}

double loss_chaos(const model::SubstituteModel& model, std::span<const data::ImageTensor> batch,
                  data::ChaosKind kind, std::uint64_t seed, std::span<double> grad_params) {
  require_single_decoder(model, "loss_chaos");
  Rng rng(seed);
  std::vector<data::ChaosDescriptor> transforms;
  for (std::size_t i = 0; i < batch.size(); ++i) transforms.push_back(data::sample_chaos(kind, rng));
  return loss_chaos(model, batch, transforms, grad_params);
}

double loss_naive_ae(const model::SubstituteModel& model, std::span<const data::ImageTensor> batch,
                     std::span<double> grad_params) {
  require_single_decoder(model, "loss_naive_ae");
  const Tensor x = data::stack(batch);
  return reconstruction_loss(model, x, {x}, grad_params).value;
}

LossResult loss_prototypical(const model::SubstituteModel& model, std::span<const data::LabeledImage> batch,
                             const data::PrototypeBank& bank, std::span<double> grad_params, bool keep_outputs) {
  const int K = model.decoder_count();
  if (static_cast<int>(bank.decoder_count()) != K) {
    throw std::invalid_argument("loss_prototypical: model has " + std::to_string(K) + " decoders but the bank has " +
                                std::to_string(bank.decoder_count()) + " prototype pairs");
  }
  std::vector<data::ImageTensor> inputs;
  inputs.reserve(batch.size());
  for (const auto& ex : batch) {
    if (ex.label != 0 && ex.label != 1) {
      throw std::invalid_argument("loss_prototypical: label " + std::to_string(ex.label) + " is not 0 or 1");
    }
    inputs.push_back(ex.image);
  }
  std::vector<Tensor> targets;
  for (int k = 0; k < K; ++k) {
    std::vector<data::ImageTensor> t;
    t.reserve(batch.size());
    for (const auto& ex : batch) t.push_back(bank.pairs[k].of(ex.label));
    targets.push_back(data::stack(t));
  }
  return reconstruction_loss(model, data::stack(inputs), targets, grad_params, keep_outputs);
}

data::ImageTensor augment(const data::ImageTensor& image, const AugmentOptions& options, Rng& rng) {
  data::ImageTensor out = image;
  if (options.flip && std::bernoulli_distribution(0.5)(rng)) out = data::flip_horizontal(out);
  if (options.crop_padding > 0) {
    std::uniform_int_distribution<int> offset(0, 2 * options.crop_padding);
    const int dy = offset(rng), dx = offset(rng);
    out = data::padded_crop(out, options.crop_padding, dy, dx);
  }
  if (options.noise > 0.0) {
    std::uniform_real_distribution<double> u(-options.noise, options.noise);
    std::vector<double> px = out.vector();
    for (auto& v : px) v += u(rng);
    out = data::ImageTensor::clamped(out.channels(), out.height(), out.width(), std::move(px));
  }
  return out;
}

double loss_naive_supervised(const model::ClassifierNet& net, std::span<const data::LabeledImage> batch,
                             const AugmentOptions* augmentation, Rng* rng, std::span<double> grad_params,
                             int* correct) {
  if (batch.empty()) throw std::invalid_argument("loss_naive_supervised: empty batch");
  if (augmentation != nullptr && rng == nullptr) {
    throw std::invalid_argument("loss_naive_supervised: augmentation requires an rng");
  }
  std::vector<data::ImageTensor> inputs;
  std::vector<int> labels;
  inputs.reserve(batch.size());
  for (const auto& ex : batch) {
    if (ex.label < 0 || ex.label >= net.spec().num_classes) {
      throw std::invalid_argument("loss_naive_supervised: label " + std::to_string(ex.label) + " outside [0, " +
                                  std::to_string(net.spec().num_classes) + ")");
    }
    inputs.push_back(augmentation != nullptr ? augment(ex.image, *augmentation, *rng) : ex.image);
    labels.push_back(ex.label);
  }
  const nn::Context ctx{rng != nullptr ? nn::Mode::kTrain : nn::Mode::kEval, rng};
  auto pass = net.forward(data::stack(inputs), ctx);
  Tensor grad_logits;
  const double loss = nn::softmax_cross_entropy(pass.output, labels, grad_params.empty() ? nullptr : &grad_logits);
  if (!grad_params.empty()) net.backward(pass, grad_logits, grad_params, false);
  if (correct != nullptr) {
    *correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (nn::argmax(pass.output.sample(static_cast<int>(i))) == labels[i]) ++*correct;
    }
  }
  return loss;
}

}  // namespace nobox::training

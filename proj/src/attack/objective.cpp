#include "nobox/attack/objective.hpp"

#include <stdexcept>

#include "nobox/nn/functional.hpp"

namespace nobox::attack {

SubstituteObjective::SubstituteObjective(const model::SubstituteModel& model, std::vector<GuideSet> guides,
                                         double lambda, LossKind kind)
    : model_(model), guides_(std::move(guides)), lambda_(lambda), kind_(kind) {
  if (static_cast<int>(guides_.size()) != model_.decoder_count()) {
    throw std::invalid_argument("adversarial objective: one guide set per decoder required");
  }
  if (!(lambda_ > 0.0)) throw std::invalid_argument("adversarial objective: lambda must be > 0");
  for (const auto& g : guides_) g.validate(g.positive);
  if (kind_ == LossKind::kCosine) {
    for (int k = 0; k < model_.decoder_count(); ++k) {
      std::vector<std::vector<double>> e{model_.embedding(guides_[k].positive, k)};
      for (const auto& n : guides_[k].negatives) e.push_back(model_.embedding(n, k));
      embeddings_.push_back(std::move(e));
    }
  }
}

double SubstituteObjective::evaluate(const data::ImageTensor& x, std::vector<double>* grad) const {
  const int K = model_.decoder_count();
  auto enc = model_.encode_pass(x.as_tensor());
  Tensor grad_code;
  if (grad != nullptr) grad_code = Tensor(enc.code.shape());
  double total = 0.0;
  for (int k = 0; k < K; ++k) {
    const auto& g = guides_[k];
    auto dec = kind_ == LossKind::kEuclidean ? model_.decode_pass(enc.code, k) : model_.embedding_pass(enc.code, k);
    Tensor grad_out;
    std::span<double> gspan;
    if (grad != nullptr) {
      grad_out = Tensor(dec.output.shape());
      gspan = grad_out.values();
    }
    if (kind_ == LossKind::kEuclidean) {
      std::vector<std::span<const double>> negs;
      for (const auto& n : g.negatives) negs.push_back(n.pixels());
      total += softmax_prototype_loss(dec.output.values(), g.positive.pixels(), negs, lambda_, gspan);
    } else {
      const auto& e = embeddings_[k];
      std::vector<std::span<const double>> negs(e.begin() + 1, e.end());
      total += cosine_prototype_loss(dec.output.values(), e[0], negs, lambda_, gspan);
    }
    if (grad != nullptr) {
      grad_out *= 1.0 / K;
      grad_code += model_.decoder_backward(k, dec, grad_out, {});
    }
  }
  if (grad != nullptr) *grad = model_.encoder_backward(enc, grad_code, {}, true).vector();
  return total / K;
}

std::vector<double> EncoderFeatures::features(const data::ImageTensor& x) const {
  return model_.encode(x).values.vector();
}

std::vector<double> EncoderFeatures::vjp(const data::ImageTensor& x, std::span<const double> v,
                                         std::vector<double>* features) const {
  auto enc = model_.encode_pass(x.as_tensor());
  if (features != nullptr) *features = enc.code.vector();
  if (v.size() != enc.code.size()) throw std::invalid_argument("encoder vjp: direction size mismatch");
  Tensor dv(enc.code.shape(), std::vector<double>(v.begin(), v.end()));
  return model_.encoder_backward(enc, dv, {}, true).vector();
}

double ClassifierObjective::evaluate(const data::ImageTensor& x, std::vector<double>* grad) const {
  auto pass = net_.forward(x.as_tensor());
  const int labels[1] = {label_};
  Tensor grad_logits;
  const double loss = nn::softmax_cross_entropy(pass.output, labels, grad != nullptr ? &grad_logits : nullptr);
  if (grad != nullptr) *grad = net_.backward(pass, grad_logits, {}, true).vector();
  return loss;
}

ClassifierFeatures::ClassifierFeatures(const model::ClassifierNet& net) : net_(net), tap_(net.feature_tap()) {}

std::vector<double> ClassifierFeatures::features(const data::ImageTensor& x) const {
  return net_.forward(x.as_tensor(), {}, tap_).output.vector();
}

std::vector<double> ClassifierFeatures::vjp(const data::ImageTensor& x, std::span<const double> v,
                                            std::vector<double>* features) const {
  auto pass = net_.forward(x.as_tensor(), {}, tap_);
  if (features != nullptr) *features = pass.output.vector();
  if (v.size() != pass.output.size()) throw std::invalid_argument("classifier vjp: direction size mismatch");
  Tensor dv(pass.output.shape(), std::vector<double>(v.begin(), v.end()));
  return net_.backward(pass, dv, {}, true).vector();
}

}  // namespace nobox::attack

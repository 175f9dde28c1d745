#include "nobox/evaluation/prototype_classifier.hpp"

#include <cmath>
#include <stdexcept>

namespace nobox::eval {

namespace {

double euclidean(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

std::vector<double> prototype_distances(const std::vector<std::span<const double>>& reconstructions,
                                        const data::PrototypeBank& bank) {
  if (reconstructions.size() != bank.decoder_count()) {
    throw std::invalid_argument("prototype classifier: " + std::to_string(reconstructions.size()) +
                                " reconstructions for " + std::to_string(bank.decoder_count()) + " prototype pairs");
  }
  std::vector<double> d(2, 0.0);
  for (std::size_t k = 0; k < reconstructions.size(); ++k) {
    d[0] += euclidean(reconstructions[k], bank.pairs[k].class0.pixels());
    d[1] += euclidean(reconstructions[k], bank.pairs[k].class1.pixels());
  }
  d[0] /= static_cast<double>(reconstructions.size());
  d[1] /= static_cast<double>(reconstructions.size());
  return d;
}

int classify_reconstructions(const std::vector<std::span<const double>>& reconstructions,
                             const data::PrototypeBank& bank) {
  const auto d = prototype_distances(reconstructions, bank);
  return d[1] < d[0] ? 1 : 0;
}

int prototype_classify_multi(const model::SubstituteModel& model, const data::ImageTensor& x,
                             const data::PrototypeBank& bank) {
  if (bank.decoder_count() != static_cast<std::size_t>(model.decoder_count())) {
    throw std::invalid_argument("prototype_classify_multi: model has " + std::to_string(model.decoder_count()) +
                                " decoders but the bank has " + std::to_string(bank.decoder_count()) + " pairs");
  }
  const auto code = model.encode(x);
  std::vector<data::ImageTensor> outputs;
  for (int k = 0; k < model.decoder_count(); ++k) outputs.push_back(model.decode(code, k));
  std::vector<std::span<const double>> views;
  for (const auto& o : outputs) views.push_back(o.pixels());
  return classify_reconstructions(views, bank);
}

int prototype_classify(const model::SubstituteModel& model, const data::ImageTensor& x,
                       const data::PrototypeBank& bank) {
  if (model.decoder_count() != 1 || bank.decoder_count() != 1) {
    throw std::invalid_argument("prototype_classify: single-decoder model and bank required; use the multi variant");
  }
  const auto recon = model.reconstruct(x, 0);
  const double d0 = euclidean(recon.pixels(), bank.pairs[0].class0.pixels());
  const double d1 = euclidean(recon.pixels(), bank.pairs[0].class1.pixels());
  return d1 < d0 ? 1 : 0;
}

}  // namespace nobox::eval

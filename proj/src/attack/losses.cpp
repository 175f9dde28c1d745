#include "nobox/attack/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nobox::attack {

void GuideSet::validate(const data::ImageTensor& like) const {
  if (negatives.empty()) throw std::invalid_argument("guide set: at least one negative prototype is required");
  if (!positive.same_shape(like)) throw std::invalid_argument("guide set: positive shape does not match the input");
  for (const auto& n : negatives) {
    if (!n.same_shape(like)) throw std::invalid_argument("guide set: negative shape does not match the input");
  }
}

namespace {

/// L = -logit_pos + logsumexp(logits); returns L and the softmax weights.
double softmax_nll(const std::vector<double>& logits, std::vector<double>& probs) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  probs.resize(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) z += probs[j] = std::exp(logits[j] - m);
  for (auto& p : probs) p /= z;
  return -(logits[0] - m) + std::log(z);
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double softmax_prototype_loss(std::span<const double> r, std::span<const double> positive,
                              const std::vector<std::span<const double>>& negatives, double lambda,
                              std::span<double> grad) {
  if (negatives.empty()) throw std::invalid_argument("adversarial loss: no negative prototypes");
  if (!(lambda > 0.0)) throw std::invalid_argument("adversarial loss: lambda must be > 0");
  std::vector<std::span<const double>> guides{positive};
  guides.insert(guides.end(), negatives.begin(), negatives.end());
  std::vector<double> logits;
  for (const auto& g : guides) {
    if (g.size() != r.size()) throw std::invalid_argument("adversarial loss: prototype size mismatch");
    double d2 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) d2 += (r[i] - g[i]) * (r[i] - g[i]);
    logits.push_back(-lambda * d2);
  }
  std::vector<double> p;
  const double loss = softmax_nll(logits, p);
  if (!grad.empty()) {
    // dL/dr = 2 lambda [(r - g_pos) - sum_j p_j (r - g_j)]
    for (std::size_t j = 0; j < guides.size(); ++j) {
      const double w = 2.0 * lambda * ((j == 0 ? 1.0 : 0.0) - p[j]);
      for (std::size_t i = 0; i < r.size(); ++i) grad[i] += w * (r[i] - guides[j][i]);
    }
  }
  return loss;
}

double cosine_prototype_loss(std::span<const double> e, std::span<const double> positive,
                             const std::vector<std::span<const double>>& negatives, double lambda,
                             std::span<double> grad) {
  if (negatives.empty()) throw std::invalid_argument("adversarial loss: no negative prototypes");
  if (!(lambda > 0.0)) throw std::invalid_argument("adversarial loss: lambda must be > 0");
  const double ne = norm2(e);
  if (ne < kCosineNormGuard) throw std::domain_error("cosine loss: input embedding has zero norm");
  std::vector<std::span<const double>> guides{positive};
  guides.insert(guides.end(), negatives.begin(), negatives.end());
  std::vector<double> logits, cosines, norms;
  for (const auto& g : guides) {
    if (g.size() != e.size()) throw std::invalid_argument("cosine loss: embedding size mismatch");
    const double ng = norm2(g);
    if (ng < kCosineNormGuard) throw std::domain_error("cosine loss: prototype embedding has zero norm");
    double dot = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) dot += e[i] * g[i];
    const double c = dot / (ne * ng);
    cosines.push_back(c);
    norms.push_back(ng);
    logits.push_back(lambda * c);
  }
  std::vector<double> p;
  const double loss = softmax_nll(logits, p);
  if (!grad.empty()) {
    // d cos(e, g)/de = g / (|e||g|) - cos * e / |e|^2
    for (std::size_t j = 0; j < guides.size(); ++j) {
      const double w = lambda * (p[j] - (j == 0 ? 1.0 : 0.0));
      for (std::size_t i = 0; i < e.size(); ++i) {
        grad[i] += w * (guides[j][i] / (ne * norms[j]) - cosines[j] * e[i] / (ne * ne));
      }
    }
  }
  return loss;
}

namespace {

std::vector<std::span<const double>> negative_views(const GuideSet& guides) {
  std::vector<std::span<const double>> views;
  for (const auto& n : guides.negatives) views.push_back(n.pixels());
  return views;
}

}  // namespace

double adversarial_loss(const model::SubstituteModel& model, const data::ImageTensor& x, const GuideSet& guides,
                        double lambda, int k) {
  guides.validate(x);
  const auto recon = model.reconstruct(x, k);
  return softmax_prototype_loss(recon.pixels(), guides.positive.pixels(), negative_views(guides), lambda);
}

double adversarial_loss_cosine(const model::SubstituteModel& model, const data::ImageTensor& x,
                               const GuideSet& guides, double lambda, int k) {
  guides.validate(x);
  const auto e = model.embedding(x, k);
  const auto pos = model.embedding(guides.positive, k);
  std::vector<std::vector<double>> negs;
  for (const auto& n : guides.negatives) negs.push_back(model.embedding(n, k));
  std::vector<std::span<const double>> views(negs.begin(), negs.end());
  return cosine_prototype_loss(e, pos, views, lambda);
}

}  // namespace nobox::attack

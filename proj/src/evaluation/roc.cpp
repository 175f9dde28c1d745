#include "nobox/evaluation/roc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nobox::eval {

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double VerificationModel::similarity(std::span<const double> a, std::span<const double> b) const {
  return cosine_similarity(a, b);
}

RocCurve roc_from_scores(std::span<const double> genuine, std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty()) throw std::invalid_argument("roc_curve: both pair lists must be non-empty");
  std::vector<double> g(genuine.begin(), genuine.end()), im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  RocCurve roc;
  roc.thresholds.insert(roc.thresholds.end(), g.begin(), g.end());
  roc.thresholds.insert(roc.thresholds.end(), im.begin(), im.end());
  std::sort(roc.thresholds.begin(), roc.thresholds.end());
  roc.thresholds.erase(std::unique(roc.thresholds.begin(), roc.thresholds.end()), roc.thresholds.end());

  const auto rate_at_least = [](const std::vector<double>& sorted, double t) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
  };
  for (double t : roc.thresholds) {
    roc.tpr.push_back(rate_at_least(g, t));
    roc.fpr.push_back(rate_at_least(im, t));
  }
  // Trapezoid rule from (0, 0) through decreasing thresholds.
  double auc = 0.0, prev_tpr = 0.0, prev_fpr = 0.0;
  for (std::size_t i = roc.thresholds.size(); i-- > 0;) {
    auc += (roc.fpr[i] - prev_fpr) * (roc.tpr[i] + prev_tpr) / 2.0;
    prev_tpr = roc.tpr[i];
    prev_fpr = roc.fpr[i];
  }
  roc.auc = auc;
  return roc;
}

RocCurve roc_curve(const VerificationModel& model, std::span<const ImagePair> genuine_pairs,
                   std::span<const ImagePair> impostor_pairs) {
  if (genuine_pairs.empty() || impostor_pairs.empty()) {
    throw std::invalid_argument("roc_curve: both pair lists must be non-empty");
  }
  const auto score = [&](std::span<const ImagePair> pairs) {
    std::vector<double> s;
    for (const auto& [a, b] : pairs) s.push_back(model.similarity(model.embed(a), model.embed(b)));
    return s;
  };
  return roc_from_scores(score(genuine_pairs), score(impostor_pairs));
}

}  // namespace nobox::eval

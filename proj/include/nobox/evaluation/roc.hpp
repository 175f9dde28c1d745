#pragma once

#include <span>
#include <utility>
#include <vector>

#include "nobox/data/image.hpp"
#include "nobox/model/classifier.hpp"

namespace nobox::eval {

/// Embeds images for pairwise comparison.
class VerificationModel {
 public:
  virtual ~VerificationModel() = default;
  virtual std::vector<double> embed(const data::ImageTensor& x) const = 0;
  /// Cosine similarity; 0 when either vector is zero.
  virtual double similarity(std::span<const double> a, std::span<const double> b) const;
};

/// Uses a classifier's penultimate activation as the embedding.
class PenultimateVerifier final : public VerificationModel {
 public:
  explicit PenultimateVerifier(const model::ClassifierNet& net) : net_(net) {}
  std::vector<double> embed(const data::ImageTensor& x) const override { return net_.penultimate(x); }

 private:
  const model::ClassifierNet& net_;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Point i accepts every pair with score >= thresholds[i]. Thresholds are the
/// distinct scores in ascending order, so tpr and fpr are non-increasing along
/// them; the curve implicitly ends at (0, 0).
struct RocCurve {
  std::vector<double> thresholds;
  std::vector<double> tpr;
  std::vector<double> fpr;
  double auc = 0.5;
};

using ImagePair = std::pair<data::ImageTensor, data::ImageTensor>;

/// Throws std::invalid_argument when either list is empty.
RocCurve roc_from_scores(std::span<const double> genuine, std::span<const double> impostor);
RocCurve roc_curve(const VerificationModel& model, std::span<const ImagePair> genuine_pairs,
                   std::span<const ImagePair> impostor_pairs);

}  // namespace nobox::eval

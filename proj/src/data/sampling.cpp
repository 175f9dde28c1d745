#include "nobox/data/sampling.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "nobox/core/rng.hpp"

namespace nobox::data {

namespace {

std::vector<std::size_t> pick(std::size_t available, std::size_t count, std::size_t required,
                              bool has_required, Rng& rng) {
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < available; ++i) {
    if (!has_required || i != required) pool.push_back(i);
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  std::vector<std::size_t> chosen;
  if (has_required) chosen.push_back(required);
  for (std::size_t i = 0; chosen.size() < count; ++i) chosen.push_back(pool[i]);
  return chosen;
}

}  // namespace

AuxiliarySet sample_auxiliary_set(std::span<const ImageTensor> class0, std::span<const ImageTensor> class1,
                                  std::size_t n, TargetRef target, std::uint64_t seed) {
  if (n % 2 != 0 || n < AuxiliarySet::kMinSize || n > AuxiliarySet::kMaxSize) {
    throw DataError(DataErrorKind::kInvalidArgument,
                    "sample_auxiliary_set: n must be even and in [2, 40], got " + std::to_string(n));
  }
  const std::size_t half = n / 2;
  if (class0.size() < half || class1.size() < half) {
    throw DataError(DataErrorKind::kInsufficientImages,
                    "sample_auxiliary_set: each class needs at least " + std::to_string(half) + " images");
  }
  if (target.label != 0 && target.label != 1) {
    throw DataError(DataErrorKind::kInvalidTarget, "sample_auxiliary_set: target label must be 0 or 1");
  }
  if (target.index >= (target.label == 0 ? class0.size() : class1.size())) {
    throw DataError(DataErrorKind::kInvalidTarget, "sample_auxiliary_set: target index out of range");
  }

  Rng rng(seed);
  const auto idx0 = pick(class0.size(), half, target.index, target.label == 0, rng);
  const auto idx1 = pick(class1.size(), half, target.index, target.label == 1, rng);

  AuxiliarySet aux;
  for (auto i : idx0) aux.examples.push_back({class0[i], 0});
  for (auto i : idx1) aux.examples.push_back({class1[i], 1});
  aux.target_index = target.label == 0 ? 0 : half;
  aux.validate();
  return aux;
}

PrototypeBank sample_prototype_bank(const AuxiliarySet& aux, std::size_t decoders, std::uint64_t seed) {
  if (decoders == 0) {
    throw DataError(DataErrorKind::kInvalidArgument, "prototype bank: decoder count must be >= 1");
  }
  aux.validate();
  const auto idx0 = aux.indices_of(0);
  const auto idx1 = aux.indices_of(1);
  const std::size_t combos = idx0.size() * idx1.size();

  Rng rng(seed);
  std::vector<std::size_t> chosen;
  if (combos >= decoders) {
    std::vector<std::size_t> all(combos);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    chosen.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(decoders));
  } else {
    std::uniform_int_distribution<std::size_t> any(0, combos - 1);
    for (std::size_t k = 0; k < decoders; ++k) chosen.push_back(any(rng));
  }

  PrototypeBank bank;
  for (auto code : chosen) {
    PrototypePair pair;
    pair.class0_index = idx0[code / idx1.size()];
    pair.class1_index = idx1[code % idx1.size()];
    pair.class0 = aux.examples[pair.class0_index].image;
    pair.class1 = aux.examples[pair.class1_index].image;
    bank.pairs.push_back(std::move(pair));
  }
  return bank;
}

}  // namespace nobox::data

#include "cotrack/ransac.hpp"

#include <array>
#include <stdexcept>

#include "cotrack/rng.hpp"

namespace cotrack {

namespace {

std::vector<int> consensus(std::span<const PointPair> pairs,
                           const SimilarityTransform& T, double threshold) {
  std::vector<int> support;
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (residual(pairs[i], T) < threshold) {
      support.push_back(static_cast<int>(i));
    }
  }
  return support;
}

}  // namespace

RansacResult ransac_similarity(std::span<const PointPair> pairs,
                               const RansacParams& params, uint64_t seed) {
  RansacResult result;
  const size_t n = pairs.size();
  if (n < 2) {
    result.status = RansacResult::Status::TooFewPairs;
    return result;
  }

  Rng rng(seed);
  size_t best_count = 0;
  SimilarityTransform best_model;
  bool have_model = false;

  for (int iter = 0; iter < params.max_iters; ++iter) {
    const size_t i = rng.next_below(n);
    size_t j = rng.next_below(n - 1);
    if (j >= i) ++j;

    const std::array<PointPair, 2> sample = {pairs[i], pairs[j]};
    SimilarityTransform model;
    try {
      model = estimate_similarity(sample);
    } catch (const std::invalid_argument&) {
      continue;  // coincident sample
    }
    size_t count = 0;
    for (const auto& pr : pairs) {
      if (residual(pr, model) < params.inlier_threshold) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best_model = model;
      have_model = true;
    }
  }

  if (!have_model || best_count < 2 ||
      best_count < static_cast<size_t>(params.min_support)) {
    result.status = RansacResult::Status::LowSupport;
    return result;
  }

  // Re-fit on the full consensus of the best minimal model, then score the
  // refit transform.
  std::vector<int> base = consensus(pairs, best_model, params.inlier_threshold);
  std::vector<PointPair> subset;
  subset.reserve(base.size());
  for (int idx : base) subset.push_back(pairs[idx]);
  SimilarityTransform refit = best_model;
  try {
    refit = estimate_similarity(subset);
  } catch (const std::invalid_argument&) {
    // fall back to the minimal-sample model
  }
  std::vector<int> support = consensus(pairs, refit, params.inlier_threshold);
  if (support.size() < base.size()) {
    // Refit occasionally trades consensus breadth for least-squares fit;
    // keep whichever transform explains more pairs.
    refit = best_model;
    support = std::move(base);
  }
  if (support.size() < static_cast<size_t>(params.min_support)) {
    result.status = RansacResult::Status::LowSupport;
    return result;
  }
  result.status = RansacResult::Status::Ok;
  result.transform = refit;
  result.support = std::move(support);
  return result;
}

}  // namespace cotrack

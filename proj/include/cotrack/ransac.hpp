#ifndef COTRACK_RANSAC_HPP_
#define COTRACK_RANSAC_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "cotrack/geometry.hpp"

namespace cotrack {

struct RansacParams {
  double inlier_threshold = 2.0;  // px
  int max_iters = 200;
  int min_support = 5;
};

// Failure is an expected outcome here, not an exception: a frame where the
// flows cannot support a transform is normal tracker input.
struct RansacResult {
  enum class Status { Ok, TooFewPairs, LowSupport };

  Status status = Status::TooFewPairs;
  SimilarityTransform transform;
  std::vector<int> support;  // indices into the input pairs

  bool ok() const { return status == Status::Ok; }
};

// Standard RANSAC over 2-point minimal samples; consensus by residual
// below the threshold, final transform re-fit on the full consensus and
// its support recomputed. Bit-deterministic for a fixed seed.
RansacResult ransac_similarity(std::span<const PointPair> pairs,
                               const RansacParams& params, uint64_t seed);

}  // namespace cotrack

#endif  // COTRACK_RANSAC_HPP_

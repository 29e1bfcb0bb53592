#ifndef COTRACK_GEOMETRY_HPP_
#define COTRACK_GEOMETRY_HPP_

#include <array>
#include <span>
#include <utility>
#include <vector>

#include "cotrack/image.hpp"

namespace cotrack {

// 4-DOF similarity: T(p) = s * R(theta) * p + t. Closed under compose
// and invert; s must stay positive and finite.
struct SimilarityTransform {
  double scale = 1.0;
  double theta = 0.0;  // radians
  double tx = 0.0;
  double ty = 0.0;

  static SimilarityTransform identity() { return {}; }
};

using PointPair = std::pair<Point2, Point2>;

Point2 apply(const SimilarityTransform& T, const Point2& p);
SimilarityTransform compose(const SimilarityTransform& a,
                            const SimilarityTransform& b);  // a after b
SimilarityTransform invert(const SimilarityTransform& T);

// Rotated rectangle; corners() winds consistently (local corners
// (-w/2,-h/2), (w/2,-h/2), (w/2,h/2), (-w/2,h/2) mapped through the pose).
struct OrientedBox {
  Point2 center;
  double width = 0.0;
  double height = 0.0;
  double angle = 0.0;  // radians

  std::array<Point2, 4> corners() const;
  double area() const { return width * height; }
  double diagonal() const { return std::hypot(width, height); }
};

// center -> T(center), sides scaled by s, angle rotated by theta.
OrientedBox transform_box(const SimilarityTransform& T, const OrientedBox& b);

bool point_in_box(const OrientedBox& b, const Point2& p);

// Least-squares similarity minimizing sum |T(p_i) - q_i|^2 via centroid
// alignment and the cross-covariance of centered coordinates. Exact for
// noise-free consistent pairs. Throws std::invalid_argument on fewer than
// two pairs or when the source spread is below 1e-9.
SimilarityTransform estimate_similarity(std::span<const PointPair> pairs);

// |T(src) - dst|
double residual(const PointPair& pair, const SimilarityTransform& T);

struct ResidualStats {
  double variance = 0.0;  // px^2, biased estimator (divisor n)
  int count = 0;
};

ResidualStats residual_variance(std::span<const PointPair> pairs,
                                const SimilarityTransform& T);

// Mean displacement disagreement of two transforms over a point set.
double transform_distance(const SimilarityTransform& a,
                          const SimilarityTransform& b,
                          std::span<const Point2> points);

struct MahalanobisMotion {
  double lambda = 0.0;
  double d_star = 0.0;
  double pooled_sigma2 = 0.0;
  bool variance_clamped = false;
};

// lambda = d* / sigma*, where sigma*^2 pools the two residual variances
// with divisor n_in + n_out - 2. Exact-fit degeneracy is handled by
// clamping the pooled variance to sigma2_floor and flagging it.
MahalanobisMotion mahalanobis_motion(double d_star, const ResidualStats& in,
                                     const ResidualStats& out,
                                     double sigma2_floor = 0.25);

}  // namespace cotrack

#endif  // COTRACK_GEOMETRY_HPP_

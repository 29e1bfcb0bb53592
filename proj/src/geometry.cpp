#include "cotrack/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace cotrack {

Point2 apply(const SimilarityTransform& T, const Point2& p) {
  const double c = std::cos(T.theta);
  const double s = std::sin(T.theta);
  return {T.scale * (c * p.x - s * p.y) + T.tx,
          T.scale * (s * p.x + c * p.y) + T.ty};
}

SimilarityTransform compose(const SimilarityTransform& a,
                            const SimilarityTransform& b) {
  SimilarityTransform r;
  r.scale = a.scale * b.scale;
  r.theta = a.theta + b.theta;
  const Point2 t = apply(a, {b.tx, b.ty});
  r.tx = t.x;
  r.ty = t.y;
  return r;
}

SimilarityTransform invert(const SimilarityTransform& T) {
  SimilarityTransform r;
  r.scale = 1.0 / T.scale;
  r.theta = -T.theta;
  const double c = std::cos(r.theta);
  const double s = std::sin(r.theta);
  r.tx = -r.scale * (c * T.tx - s * T.ty);
  r.ty = -r.scale * (s * T.tx + c * T.ty);
  return r;
}

std::array<Point2, 4> OrientedBox::corners() const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const double hw = width / 2.0;
  const double hh = height / 2.0;
  auto map = [&](double lx, double ly) -> Point2 {
    return {center.x + c * lx - s * ly, center.y + s * lx + c * ly};
  };
  return {map(-hw, -hh), map(hw, -hh), map(hw, hh), map(-hw, hh)};
}

OrientedBox transform_box(const SimilarityTransform& T, const OrientedBox& b) {
  OrientedBox r;
  r.center = apply(T, b.center);
  r.width = T.scale * b.width;
  r.height = T.scale * b.height;
  r.angle = b.angle + T.theta;
  return r;
}

bool point_in_box(const OrientedBox& b, const Point2& p) {
  const double c = std::cos(b.angle);
  const double s = std::sin(b.angle);
  const double dx = p.x - b.center.x;
  const double dy = p.y - b.center.y;
  const double lx = c * dx + s * dy;
  const double ly = -s * dx + c * dy;
  return std::abs(lx) <= b.width / 2.0 && std::abs(ly) <= b.height / 2.0;
}

SimilarityTransform estimate_similarity(std::span<const PointPair> pairs) {
  const size_t n = pairs.size();
  if (n < 2) {
    throw std::invalid_argument("estimate_similarity: need at least 2 pairs");
  }
  double px = 0, py = 0, qx = 0, qy = 0;
  for (const auto& [p, q] : pairs) {
    px += p.x;
    py += p.y;
    qx += q.x;
    qy += q.y;
  }
  px /= static_cast<double>(n);
  py /= static_cast<double>(n);
  qx /= static_cast<double>(n);
  qy /= static_cast<double>(n);

  double dot = 0, cross = 0, spread = 0;
  for (const auto& [p, q] : pairs) {
    const double ax = p.x - px;
    const double ay = p.y - py;
    const double bx = q.x - qx;
    const double by = q.y - qy;
    dot += ax * bx + ay * by;
    cross += ax * by - ay * bx;
    spread += ax * ax + ay * ay;
  }
  if (std::sqrt(spread / static_cast<double>(n)) < 1e-9) {
    throw std::invalid_argument(
        "estimate_similarity: degenerate configuration (coincident sources)");
  }
  SimilarityTransform T;
  T.theta = std::atan2(cross, dot);
  T.scale = std::sqrt(dot * dot + cross * cross) / spread;
  if (!(T.scale > 0.0) || !std::isfinite(T.scale)) {
    throw std::invalid_argument(
        "estimate_similarity: degenerate configuration (zero scale)");
  }
  const double c = std::cos(T.theta);
  const double s = std::sin(T.theta);
  T.tx = qx - T.scale * (c * px - s * py);
  T.ty = qy - T.scale * (s * px + c * py);
  return T;
}

double residual(const PointPair& pair, const SimilarityTransform& T) {
  return distance(apply(T, pair.first), pair.second);
}

ResidualStats residual_variance(std::span<const PointPair> pairs,
                                const SimilarityTransform& T) {
  if (pairs.empty()) {
    throw std::invalid_argument("residual_variance: empty input");
  }
  double acc = 0.0;
  for (const auto& pr : pairs) {
    const double r = residual(pr, T);
    acc += r * r;
  }
  return {acc / static_cast<double>(pairs.size()),
          static_cast<int>(pairs.size())};
}

double transform_distance(const SimilarityTransform& a,
                          const SimilarityTransform& b,
                          std::span<const Point2> points) {
  if (points.empty()) {
    throw std::invalid_argument("transform_distance: empty point set");
  }
  double acc = 0.0;
  for (const auto& p : points) {
    acc += distance(apply(a, p), apply(b, p));
  }
  return acc / static_cast<double>(points.size());
}

MahalanobisMotion mahalanobis_motion(double d_star, const ResidualStats& in,
                                     const ResidualStats& out,
                                     double sigma2_floor) {
  const int dof = in.count + out.count - 2;
  if (dof <= 0) {
    throw std::invalid_argument(
        "mahalanobis_motion: need n_in + n_out > 2 for the pooled variance");
  }
  MahalanobisMotion r;
  r.d_star = d_star;
  r.pooled_sigma2 =
      (in.count * in.variance + out.count * out.variance) / dof;
  if (r.pooled_sigma2 <= sigma2_floor) {
    r.pooled_sigma2 = sigma2_floor;
    r.variance_clamped = true;
  }
  r.lambda = d_star / std::sqrt(r.pooled_sigma2);
  return r;
}

}  // namespace cotrack

#ifndef COTRACK_FLOW_HPP_
#define COTRACK_FLOW_HPP_

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cotrack/image.hpp"
#include "cotrack/pyramid.hpp"

namespace cotrack {

struct FlowParams {
  int pyramid_levels = 2;
  int window_half = 7;            // window is (2*window_half+1)^2
  int max_iterations = 20;
  double convergence_eps = 0.01;  // px
  double min_eigen_threshold = 1e-4;
  double fb_threshold = 1.5;      // px

  static constexpr int kMaxWindowHalf = 15;
};

// Pyramid plus per-level spatial gradients; built once per frame and
// shared by every point tracked against it.
struct FramePyramid {
  ImagePyramid images;
  std::vector<GrayImage> grad_x;
  std::vector<GrayImage> grad_y;

  int num_levels() const { return images.num_levels(); }
};

FramePyramid build_frame_pyramid(const GrayImage& img, int levels);

enum class LostReason { None, OutOfBounds, Degenerate, Diverged };

struct TrackPointResult {
  bool ok = false;
  Point2 dst;
  LostReason reason = LostReason::None;
};

// Coarse-to-fine iterative Lucas-Kanade. The spatial-gradient matrix is
// built once per level from the prev-frame window; each iteration
// re-samples the warped next-frame window. guess, when given, seeds the
// coarsest-level displacement (used for reference-model matching where
// the motion is large).
TrackPointResult track_point(const FramePyramid& prev, const FramePyramid& next,
                             const Point2& p, const FlowParams& params,
                             const Point2* guess = nullptr);

struct FlowMatch {
  Point2 src;
  Point2 dst;
  double fb_error = std::numeric_limits<double>::infinity();
  bool matched = false;
};

// Forward track p -> p_hat, backward track p_hat -> p_star (seeded at
// p_hat), fb_error = |p - p_star|. A point is unmatched when either
// direction is lost or the error exceeds the threshold; both causes are
// reported identically.
std::vector<FlowMatch> track_with_fb(const FramePyramid& prev,
                                     const FramePyramid& next,
                                     std::span<const Point2> points,
                                     const FlowParams& params,
                                     int threads = 1);

// Variant with explicit forward seeds and a backward-seed map; the FB
// criterion is unchanged.
std::vector<FlowMatch> track_with_fb_guided(
    const FramePyramid& from, const FramePyramid& to,
    std::span<const Point2> points, std::span<const Point2> forward_guesses,
    const std::function<Point2(const Point2&)>& backward_guess,
    const FlowParams& params, int threads = 1);

}  // namespace cotrack

#endif  // COTRACK_FLOW_HPP_

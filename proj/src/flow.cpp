#include "cotrack/flow.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "cotrack/parallel.hpp"

namespace cotrack {

namespace {

constexpr int kMaxWindowSide = 2 * FlowParams::kMaxWindowHalf + 1;
constexpr int kMaxWindowArea = kMaxWindowSide * kMaxWindowSide;

struct WindowBuffers {
  std::array<float, kMaxWindowArea> intensity;
  std::array<float, kMaxWindowArea> grad_x;
  std::array<float, kMaxWindowArea> grad_y;
};

// Gathers the (2h+1)^2 window centered at (cx, cy); all samples share one
// set of bilinear weights. Returns false when any sample would leave the
// image.
bool gather_window(const GrayImage& img, double cx, double cy, int h,
                   float* out) {
  const double x_lo = cx - h;
  const double y_lo = cy - h;
  const int bx = static_cast<int>(std::floor(x_lo));
  const int by = static_cast<int>(std::floor(y_lo));
  const int side = 2 * h + 1;
  if (bx < 0 || by < 0 || bx + side > img.width() - 1 ||
      by + side > img.height() - 1) {
    return false;
  }
  const float fx = static_cast<float>(x_lo - bx);
  const float fy = static_cast<float>(y_lo - by);
  const float w00 = (1.0f - fx) * (1.0f - fy);
  const float w01 = fx * (1.0f - fy);
  const float w10 = (1.0f - fx) * fy;
  const float w11 = fx * fy;
  for (int r = 0; r < side; ++r) {
    const float* r0 = img.row(by + r) + bx;
    const float* r1 = img.row(by + r + 1) + bx;
    float* dst = out + r * side;
    for (int c = 0; c < side; ++c) {
      dst[c] = w00 * r0[c] + w01 * r0[c + 1] + w10 * r1[c] + w11 * r1[c + 1];
    }
  }
  return true;
}

struct LevelTrack {
  bool ok = false;
  LostReason reason = LostReason::None;
  double dx = 0.0;
  double dy = 0.0;
};

LevelTrack track_level(const GrayImage& prev_img, const GrayImage& prev_gx,
                       const GrayImage& prev_gy, const GrayImage& next_img,
                       double px, double py, double dx, double dy,
                       const FlowParams& params, WindowBuffers& buf) {
  LevelTrack out;
  out.dx = dx;
  out.dy = dy;
  const int h = params.window_half;
  const int side = 2 * h + 1;
  const int area = side * side;

  if (!gather_window(prev_img, px, py, h, buf.intensity.data()) ||
      !gather_window(prev_gx, px, py, h, buf.grad_x.data()) ||
      !gather_window(prev_gy, px, py, h, buf.grad_y.data())) {
    out.reason = LostReason::OutOfBounds;
    return out;
  }

  double gxx = 0.0, gxy = 0.0, gyy = 0.0;
  for (int i = 0; i < area; ++i) {
    const double gx = buf.grad_x[i];
    const double gy = buf.grad_y[i];
    gxx += gx * gx;
    gxy += gx * gy;
    gyy += gy * gy;
  }
  const double norm = 1.0 / area;
  const double tr = (gxx + gyy) * norm;
  const double disc = std::sqrt(std::max(
      0.0, (gxx - gyy) * norm * (gxx - gyy) * norm + 4.0 * gxy * norm * gxy * norm));
  const double min_eig = 0.5 * (tr - disc);
  const double det = gxx * gyy - gxy * gxy;
  if (min_eig < params.min_eigen_threshold || det <= 0.0) {
    out.reason = LostReason::Degenerate;
    return out;
  }
  const double inv_det = 1.0 / det;

  std::array<float, kMaxWindowArea> next_win;
  for (int iter = 0; iter < params.max_iterations; ++iter) {
    if (!gather_window(next_img, px + out.dx, py + out.dy, h,
                       next_win.data())) {
      out.reason = LostReason::OutOfBounds;
      return out;
    }
    double bx = 0.0, by = 0.0;
    for (int i = 0; i < area; ++i) {
      const double diff = buf.intensity[i] - next_win[i];
      bx += diff * buf.grad_x[i];
      by += diff * buf.grad_y[i];
    }
    const double sx = (gyy * bx - gxy * by) * inv_det;
    const double sy = (gxx * by - gxy * bx) * inv_det;
    if (!std::isfinite(sx) || !std::isfinite(sy)) {
      out.reason = LostReason::Diverged;
      return out;
    }
    out.dx += sx;
    out.dy += sy;
    if (sx * sx + sy * sy <
        params.convergence_eps * params.convergence_eps) {
      break;
    }
  }
  if (!std::isfinite(out.dx) || !std::isfinite(out.dy)) {
    out.reason = LostReason::Diverged;
    return out;
  }
  out.ok = true;
  return out;
}

}  // namespace

FramePyramid build_frame_pyramid(const GrayImage& img, int levels) {
  FramePyramid fp;
  fp.images = build_pyramid(img, levels);
  fp.grad_x.reserve(levels);
  fp.grad_y.reserve(levels);
  for (const auto& lv : fp.images.levels) {
    auto [gx, gy] = gradient(lv);
    fp.grad_x.push_back(std::move(gx));
    fp.grad_y.push_back(std::move(gy));
  }
  return fp;
}

TrackPointResult track_point(const FramePyramid& prev, const FramePyramid& next,
                             const Point2& p, const FlowParams& params,
                             const Point2* guess) {
  TrackPointResult result;
  if (prev.num_levels() != next.num_levels() || prev.num_levels() < 1) {
    throw std::invalid_argument("track_point: mismatched pyramids");
  }
  if (params.window_half < 1 ||
      params.window_half > FlowParams::kMaxWindowHalf) {
    throw std::invalid_argument("track_point: window_half out of range");
  }
  const int top = prev.num_levels() - 1;
  const double top_scale = static_cast<double>(1 << top);
  double dx = 0.0, dy = 0.0;
  if (guess != nullptr) {
    dx = (guess->x - p.x) / top_scale;
    dy = (guess->y - p.y) / top_scale;
  }
  WindowBuffers buf;
  for (int level = top; level >= 0; --level) {
    const double s = static_cast<double>(1 << level);
    const LevelTrack lt =
        track_level(prev.images.level(level), prev.grad_x[level],
                    prev.grad_y[level], next.images.level(level), p.x / s,
                    p.y / s, dx, dy, params, buf);
    if (!lt.ok) {
      result.reason = lt.reason;
      return result;
    }
    if (level > 0) {
      dx = lt.dx * 2.0;
      dy = lt.dy * 2.0;
    } else {
      dx = lt.dx;
      dy = lt.dy;
    }
  }
  result.ok = true;
  result.dst = {p.x + dx, p.y + dy};
  return result;
}

std::vector<FlowMatch> track_with_fb_guided(
    const FramePyramid& from, const FramePyramid& to,
    std::span<const Point2> points, std::span<const Point2> forward_guesses,
    const std::function<Point2(const Point2&)>& backward_guess,
    const FlowParams& params, int threads) {
  if (forward_guesses.size() != points.size()) {
    throw std::invalid_argument("track_with_fb_guided: guess count mismatch");
  }
  std::vector<FlowMatch> matches(points.size());
  parallel_for(static_cast<int>(points.size()), threads, [&](int i) {
    FlowMatch& m = matches[i];
    m.src = points[i];
    const TrackPointResult fwd =
        track_point(from, to, points[i], params, &forward_guesses[i]);
    if (!fwd.ok) return;
    m.dst = fwd.dst;
    const Point2 seed = backward_guess(fwd.dst);
    const TrackPointResult bwd = track_point(to, from, fwd.dst, params, &seed);
    if (!bwd.ok) return;
    m.fb_error = distance(points[i], bwd.dst);
    m.matched = m.fb_error <= params.fb_threshold;
  });
  return matches;
}

std::vector<FlowMatch> track_with_fb(const FramePyramid& prev,
                                     const FramePyramid& next,
                                     std::span<const Point2> points,
                                     const FlowParams& params, int threads) {
  return track_with_fb_guided(
      prev, next, points, points, [](const Point2& q) { return q; }, params,
      threads);
}

}  // namespace cotrack

#include "cotrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cotrack/rng.hpp"

namespace cotrack {

int GridStates::count(PointState s) const {
  int n = 0;
  for (PointState v : states) {
    if (v == s) ++n;
  }
  return n;
}

int choose_grid_size(double min_side, int m_min, int m_max) {
  const double t = (min_side - 40.0) / 160.0;
  const int m = static_cast<int>(std::lround(m_min + t * (m_max - m_min)));
  return std::clamp(m, m_min, m_max);
}

std::vector<Point2> grid_points(const OrientedBox& box, int m) {
  std::vector<Point2> pts;
  pts.reserve(static_cast<size_t>(m) * m);
  const double c = std::cos(box.angle);
  const double s = std::sin(box.angle);
  for (int r = 0; r < m; ++r) {
    const double fy = ((r + 0.5) / m - 0.5) * box.height;
    for (int col = 0; col < m; ++col) {
      const double fx = ((col + 0.5) / m - 0.5) * box.width;
      pts.push_back({box.center.x + c * fx - s * fy,
                     box.center.y + s * fx + c * fy});
    }
  }
  return pts;
}

namespace {

inline int clampi(int v, int lo, int hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

std::vector<uint8_t> median3x3(const std::vector<uint8_t>& mask, int m) {
  std::vector<uint8_t> out(mask.size(), 0);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      int ones = 0;
      for (int dr = -1; dr <= 1; ++dr) {
        const int rr = clampi(r + dr, 0, m - 1);
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = clampi(c + dc, 0, m - 1);
          ones += mask[rr * m + cc] ? 1 : 0;
        }
      }
      out[r * m + c] = ones >= 5 ? 1 : 0;
    }
  }
  return out;
}

std::vector<uint8_t> dilate3x3(const std::vector<uint8_t>& mask, int m) {
  std::vector<uint8_t> out(mask.size(), 0);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      uint8_t any = 0;
      for (int dr = -1; dr <= 1 && !any; ++dr) {
        const int rr = clampi(r + dr, 0, m - 1);
        for (int dc = -1; dc <= 1; ++dc) {
          const int cc = clampi(c + dc, 0, m - 1);
          if (mask[rr * m + cc]) {
            any = 1;
            break;
          }
        }
      }
      out[r * m + c] = any;
    }
  }
  return out;
}

std::vector<int> filter_by_residual(std::span<const PointPair> flows,
                                    const SimilarityTransform& T, double k,
                                    double sigma, double sigma_floor) {
  const double gate = k * std::max(sigma, sigma_floor);
  std::vector<int> kept;
  for (size_t i = 0; i < flows.size(); ++i) {
    if (residual(flows[i], T) < gate) {
      kept.push_back(static_cast<int>(i));
    }
  }
  return kept;
}

GridStates update_states(int m, const std::vector<uint8_t>& in_star_mask,
                         const std::vector<uint8_t>& out_star_mask,
                         bool outlier_model_present) {
  const std::vector<uint8_t> in_smooth = dilate3x3(median3x3(in_star_mask, m), m);
  GridStates next(m, PointState::Outlier);
  if (outlier_model_present) {
    const std::vector<uint8_t> out_smooth = median3x3(out_star_mask, m);
    for (int i = 0; i < m * m; ++i) {
      if (out_smooth[i]) {
        next.states[i] = PointState::Outlier;
      } else if (in_smooth[i]) {
        next.states[i] = PointState::Inlier;
      }
    }
  } else {
    for (int i = 0; i < m * m; ++i) {
      if (in_smooth[i]) next.states[i] = PointState::Inlier;
    }
  }
  return next;
}

MotionRestoration restore_from_motion(GridStates& states,
                                      const SimilarityTransform& T_in,
                                      const SimilarityTransform& T_out,
                                      std::span<const Point2> grid_pts,
                                      std::span<const PointPair> matched_flows,
                                      std::span<const int> matched_grid_idx,
                                      const ResidualStats& stats_in,
                                      const ResidualStats& stats_out,
                                      const TrackerConfig& cfg) {
  MotionRestoration r;
  const double d_star = transform_distance(T_in, T_out, grid_pts);
  r.motion = mahalanobis_motion(d_star, stats_in, stats_out,
                                cfg.pooled_variance_floor);
  r.outlier_ratio =
      static_cast<double>(stats_out.count) / static_cast<double>(grid_pts.size());
  r.gate_met = r.motion.lambda > cfg.lambda_theta &&
               r.motion.d_star > cfg.d_theta && r.outlier_ratio > cfg.alpha;
  if (!r.gate_met) return r;

  const double sigma_in = std::max(std::sqrt(stats_in.variance), cfg.sigma_floor);
  const double sigma_out = std::max(std::sqrt(stats_out.variance), cfg.sigma_floor);
  for (size_t k = 0; k < matched_flows.size(); ++k) {
    const double li = residual(matched_flows[k], T_in) / sigma_in;
    const double lo = residual(matched_flows[k], T_out) / sigma_out;
    if (li < lo && li < cfg.restore_k_in) {
      PointState& st = states.states[matched_grid_idx[k]];
      if (st != PointState::Inlier) {
        st = PointState::Inlier;
        ++r.restored;
      }
    }
  }
  return r;
}

namespace {

SimilarityTransform box_to_box(const OrientedBox& from, const OrientedBox& to) {
  SimilarityTransform W;
  W.scale = to.width / from.width;
  W.theta = to.angle - from.angle;
  const double c = std::cos(W.theta);
  const double s = std::sin(W.theta);
  W.tx = to.center.x - W.scale * (c * from.center.x - s * from.center.y);
  W.ty = to.center.y - W.scale * (s * from.center.x + c * from.center.y);
  return W;
}

}  // namespace

ReferenceRestoreResult restore_from_reference(GridStates& states,
                                              const ReferenceModel& ref,
                                              const FramePyramid& current,
                                              const OrientedBox& current_box,
                                              const FlowParams& fp,
                                              int threads) {
  ReferenceRestoreResult result;
  if (ref.roi.empty() || ref.states.m != states.m) return result;

  const SimilarityTransform W = box_to_box(ref.box, current_box);
  const SimilarityTransform W_inv = invert(W);
  const std::vector<Point2> ref_pts = grid_points(ref.box, ref.states.m);

  std::vector<Point2> pts;
  std::vector<Point2> guesses;
  std::vector<int> grid_idx;
  for (int i = 0; i < ref.states.total(); ++i) {
    if (ref.states.states[i] != PointState::Inlier) continue;
    pts.push_back(ref_pts[i]);
    guesses.push_back(apply(W, ref_pts[i]));
    grid_idx.push_back(i);
  }
  if (pts.empty()) return result;

  const std::vector<FlowMatch> matches = track_with_fb_guided(
      ref.pyramid, current, pts, guesses,
      [&](const Point2& q) { return apply(W_inv, q); }, fp, threads);

  for (size_t k = 0; k < matches.size(); ++k) {
    if (!matches[k].matched) continue;
    ++result.matched;
    result.matches.push_back({matches[k].src, matches[k].dst});
    PointState& st = states.states[grid_idx[k]];
    if (st != PointState::Inlier) {
      st = PointState::Inlier;
      ++result.restored;
    }
  }
  return result;
}

DriftResult compensate_drift(const ReferenceModel& ref,
                             std::span<const PointPair> ref_matches,
                             const OrientedBox& current_box,
                             const TrackerConfig& cfg, uint64_t seed) {
  DriftResult r;
  r.box = current_box;
  const int ref_inliers = ref.states.count(PointState::Inlier);
  const int min_support = std::max(
      cfg.drift_min_support_abs,
      static_cast<int>(std::ceil(cfg.drift_min_support_frac * ref_inliers)));
  if (static_cast<int>(ref_matches.size()) < min_support) return r;

  RansacParams rp;
  rp.inlier_threshold = cfg.ransac_threshold;
  rp.max_iters = cfg.ransac_max_iters;
  rp.min_support = min_support;
  const RansacResult rr = ransac_similarity(ref_matches, rp, seed);
  if (!rr.ok()) return r;
  r.applied = true;
  r.box = transform_box(rr.transform, ref.box);
  return r;
}

double mean_region_intensity(const GrayImage& frame, const OrientedBox& box) {
  const auto cs = box.corners();
  double minx = cs[0].x, maxx = cs[0].x, miny = cs[0].y, maxy = cs[0].y;
  for (const auto& p : cs) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const int x0 = clampi(static_cast<int>(std::floor(minx)), 0, frame.width() - 1);
  const int x1 = clampi(static_cast<int>(std::ceil(maxx)), 0, frame.width() - 1);
  const int y0 = clampi(static_cast<int>(std::floor(miny)), 0, frame.height() - 1);
  const int y1 = clampi(static_cast<int>(std::ceil(maxy)), 0, frame.height() - 1);
  double acc = 0.0;
  long count = 0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (point_in_box(box, {static_cast<double>(x), static_cast<double>(y)})) {
        acc += frame.at(x, y);
        ++count;
      }
    }
  }
  return count > 0 ? acc / count : 0.0;
}

ReferenceModel capture_reference(const GrayImage& frame,
                                 const OrientedBox& box,
                                 const GridStates& states,
                                 const FlowParams& fp) {
  const auto cs = box.corners();
  double minx = cs[0].x, maxx = cs[0].x, miny = cs[0].y, maxy = cs[0].y;
  for (const auto& p : cs) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  const int margin = 2 * (fp.window_half + 2);
  const int x0 = clampi(static_cast<int>(std::floor(minx)) - margin, 0,
                        frame.width() - 1);
  const int x1 = clampi(static_cast<int>(std::ceil(maxx)) + margin, 0,
                        frame.width() - 1);
  const int y0 = clampi(static_cast<int>(std::floor(miny)) - margin, 0,
                        frame.height() - 1);
  const int y1 = clampi(static_cast<int>(std::ceil(maxy)) + margin, 0,
                        frame.height() - 1);
  const int cw = x1 - x0 + 1;
  const int ch = y1 - y0 + 1;
  if (cw < 8 || ch < 8) {
    throw std::invalid_argument("capture_reference: region too small");
  }
  ReferenceModel ref;
  ref.roi = GrayImage(cw, ch);
  for (int y = 0; y < ch; ++y) {
    for (int x = 0; x < cw; ++x) {
      ref.roi.at(x, y) = frame.at(x0 + x, y0 + y);
    }
  }
  ref.pyramid = build_frame_pyramid(ref.roi, fp.pyramid_levels);
  ref.box = box;
  ref.box.center = {box.center.x - x0, box.center.y - y0};
  ref.states = states;
  ref.mean_intensity = mean_region_intensity(frame, box);
  ref.scale = box.diagonal();
  return ref;
}

ConcurrentTracker::ConcurrentTracker(const GrayImage& frame,
                                     const OrientedBox& box,
                                     const TrackerConfig& cfg)
    : cfg_(cfg), box_(box) {
  if (!(box.width > 0) || !(box.height > 0)) {
    throw std::invalid_argument("tracker: box sides must be positive");
  }
  const double min_side = std::min(box.width, box.height);
  if (min_side < 2.0 * cfg.m_min) {
    throw std::invalid_argument(
        "tracker: box too small to host the tracking grid (needs >= 2 px "
        "point spacing)");
  }

  // Patch size follows one third of the initial target size.
  const int wh = static_cast<int>(std::lround(min_side / 3.0 / 2.0));
  flow_params_.window_half =
      std::clamp(wh, cfg.lk_window_half_min, cfg.lk_window_half_max);
  flow_params_.pyramid_levels = cfg.pyramid_levels;
  flow_params_.max_iterations = cfg.lk_max_iterations;
  flow_params_.convergence_eps = cfg.lk_convergence_eps;
  flow_params_.min_eigen_threshold = cfg.lk_min_eigen;
  flow_params_.fb_threshold = cfg.fb_threshold;

  const auto cs = box.corners();
  for (const auto& p : cs) {
    if (p.x - flow_params_.window_half < 0 ||
        p.y - flow_params_.window_half < 0 ||
        p.x + flow_params_.window_half > frame.width() - 1 ||
        p.y + flow_params_.window_half > frame.height() - 1) {
      throw std::invalid_argument(
          "tracker: box leaves no margin for the tracking window");
    }
  }

  const int m = choose_grid_size(min_side, cfg.m_min, cfg.m_max);
  states_ = GridStates(m, PointState::Inlier);
  reference_ = capture_reference(frame, box_, states_, flow_params_);
}

int ConcurrentTracker::ransac_min_support(size_t population) const {
  return std::max(cfg_.ransac_min_support_abs,
                  static_cast<int>(std::ceil(cfg_.ransac_min_support_frac *
                                             static_cast<double>(population))));
}

uint64_t ConcurrentTracker::stage_seed(int tag) const {
  return hash_combine(hash_combine(cfg_.rng_seed, static_cast<uint64_t>(frame_index_)),
                      static_cast<uint64_t>(tag));
}

void ConcurrentTracker::maybe_update_reference(const GrayImage& next_frame,
                                               const StepOutcome& outcome,
                                               std::vector<TrackEvent>& events) {
  const double mean_now = mean_region_intensity(next_frame, outcome.box);
  const double scale_now = outcome.box.diagonal();
  const double mean_change = std::abs(mean_now - reference_.mean_intensity) /
                             std::max(std::abs(reference_.mean_intensity), 1e-9);
  const double scale_change = std::abs(scale_now - reference_.scale) /
                              std::max(std::abs(reference_.scale), 1e-9);
  if (mean_change <= cfg_.reference_change_gate &&
      scale_change <= cfg_.reference_change_gate) {
    return;
  }
  const double outlier_ratio =
      static_cast<double>(outcome.states.count(PointState::Outlier)) /
      static_cast<double>(outcome.states.total());
  if (outlier_ratio >= cfg_.reference_outlier_gate) return;
  try {
    reference_ =
        capture_reference(next_frame, outcome.box, outcome.states, flow_params_);
  } catch (const std::invalid_argument&) {
    return;  // box ran off the frame; keep the old reference
  }
  TrackEvent ev;
  ev.kind = TrackEvent::Kind::ReferenceUpdated;
  events.push_back(ev);
}

StepOutcome ConcurrentTracker::step(const FramePyramid& prev,
                                    const FramePyramid& next) {
  if (prev.num_levels() != next.num_levels() ||
      prev.num_levels() != cfg_.pyramid_levels ||
      !prev.images.level(0).same_size(next.images.level(0))) {
    throw std::invalid_argument("step: frame pyramids do not match the config");
  }
  ++frame_index_;

  StepOutcome out;
  out.box = box_;
  out.states = states_;
  out.status = StepStatus::Failed;

  const int m = states_.m;
  const int total = m * m;
  const std::vector<Point2> pts = grid_points(box_, m);
  const std::vector<FlowMatch> flows =
      track_with_fb(prev, next, pts, flow_params_, cfg_.threads);

  const bool concurrent = cfg_.variant != Variant::BasicT;
  std::vector<PointPair> in_flows, out_flows, matched_flows;
  std::vector<int> in_idx, out_idx, matched_idx;
  for (int i = 0; i < total; ++i) {
    if (!flows[i].matched) continue;
    const PointPair pr{flows[i].src, flows[i].dst};
    matched_flows.push_back(pr);
    matched_idx.push_back(i);
    if (!concurrent || states_.states[i] == PointState::Inlier) {
      in_flows.push_back(pr);
      in_idx.push_back(i);
    } else {
      out_flows.push_back(pr);
      out_idx.push_back(i);
    }
  }

  if (static_cast<int>(in_flows.size()) < cfg_.min_matched_flows) {
    return out;  // failed: previous box and states pass through unchanged
  }
  RansacParams rp;
  rp.inlier_threshold = cfg_.ransac_threshold;
  rp.max_iters = cfg_.ransac_max_iters;
  rp.min_support = ransac_min_support(in_flows.size());
  const RansacResult rin = ransac_similarity(in_flows, rp, stage_seed(1));
  if (!rin.ok()) {
    return out;
  }
  const SimilarityTransform T_in = rin.transform;
  out.status = StepStatus::Ok;
  out.box = transform_box(T_in, box_);

  if (concurrent) {
    bool out_present = false;
    SimilarityTransform T_out;
    if (static_cast<int>(out_flows.size()) >= cfg_.min_matched_flows) {
      RansacParams rpo = rp;
      rpo.min_support = ransac_min_support(out_flows.size());
      const RansacResult rout =
          ransac_similarity(out_flows, rpo, stage_seed(2));
      if (rout.ok()) {
        out_present = true;
        T_out = rout.transform;
      }
    }

    const ResidualStats stats_in = residual_variance(in_flows, T_in);
    std::vector<uint8_t> in_mask(total, 0);
    for (int k : filter_by_residual(in_flows, T_in, cfg_.k_in,
                                    std::sqrt(stats_in.variance),
                                    cfg_.sigma_floor)) {
      in_mask[in_idx[k]] = 1;
    }
    ResidualStats stats_out;
    std::vector<uint8_t> out_mask(total, 0);
    if (out_present) {
      stats_out = residual_variance(out_flows, T_out);
      for (int k : filter_by_residual(out_flows, T_out, cfg_.k_out,
                                      std::sqrt(stats_out.variance),
                                      cfg_.sigma_floor)) {
        out_mask[out_idx[k]] = 1;
      }
    }

    out.states = update_states(m, in_mask, out_mask, out_present);

    if (out_present) {
      const MotionRestoration mr =
          restore_from_motion(out.states, T_in, T_out, pts, matched_flows,
                              matched_idx, stats_in, stats_out, cfg_);
      if (mr.gate_met) {
        TrackEvent ev;
        ev.kind = TrackEvent::Kind::MotionRestoration;
        ev.count = mr.restored;
        ev.lambda = mr.motion.lambda;
        ev.d_star = mr.motion.d_star;
        ev.variance_clamped = mr.motion.variance_clamped;
        out.events.push_back(ev);
      }
    } else {
      TrackEvent ev;
      ev.kind = TrackEvent::Kind::OutlierModelAbsent;
      out.events.push_back(ev);
    }

    if (cfg_.variant == Variant::CoT_MR) {
      const ReferenceRestoreResult rr = restore_from_reference(
          out.states, reference_, next, out.box, flow_params_, cfg_.threads);
      if (rr.restored > 0) {
        TrackEvent ev;
        ev.kind = TrackEvent::Kind::ReferenceRestoration;
        ev.count = rr.restored;
        out.events.push_back(ev);
      }
      const DriftResult dr = compensate_drift(reference_, rr.matches, out.box,
                                              cfg_, stage_seed(3));
      if (dr.applied) {
        out.box = dr.box;
        TrackEvent ev;
        ev.kind = TrackEvent::Kind::DriftCompensated;
        out.events.push_back(ev);
      }
      maybe_update_reference(next.images.level(0), out, out.events);
    }
  }

  box_ = out.box;
  states_ = out.states;
  return out;
}

StepOutcome ConcurrentTracker::step(const GrayImage& prev,
                                    const GrayImage& next) {
  const FramePyramid pp = build_frame_pyramid(prev, cfg_.pyramid_levels);
  const FramePyramid np = build_frame_pyramid(next, cfg_.pyramid_levels);
  return step(pp, np);
}

}  // namespace cotrack

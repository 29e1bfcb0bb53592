#ifndef COTRACK_TRACKER_HPP_
#define COTRACK_TRACKER_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "cotrack/flow.hpp"
#include "cotrack/geometry.hpp"
#include "cotrack/image.hpp"
#include "cotrack/ransac.hpp"

namespace cotrack {

enum class PointState : uint8_t { Outlier = 0, Inlier = 1 };

// m x m per-point labels, row-major in box-local grid coordinates. The
// grid topology is what median filtering and dilation act on, independent
// of the box rotation in image space.
struct GridStates {
  int m = 0;
  std::vector<PointState> states;

  GridStates() = default;
  GridStates(int m_, PointState fill)
      : m(m_), states(static_cast<size_t>(m_) * m_, fill) {}

  int total() const { return m * m; }
  int count(PointState s) const;
  bool operator==(const GridStates&) const = default;
};

enum class Variant { BasicT, CoT_M, CoT_MR };

struct TrackerConfig {
  Variant variant = Variant::CoT_MR;

  int m_min = 10;
  int m_max = 20;
  int pyramid_levels = 2;

  double fb_threshold = 1.5;  // px, FB filter delta

  // Residual gating and restoration constants.
  double k_in = 3.0;
  double k_out = 3.0;
  double lambda_theta = 3.0;
  double d_theta = 1.5;      // px
  double alpha = 0.3;        // outlier-ratio gate
  double restore_k_in = 3.0;
  double sigma_floor = 0.5;            // px, residual-gate floor
  double pooled_variance_floor = 0.25; // px^2

  // Reference model maintenance.
  double reference_outlier_gate = 0.2;  // gamma
  double reference_change_gate = 0.10;

  // Robust estimation.
  double ransac_threshold = 2.0;  // px
  int ransac_max_iters = 200;
  int ransac_min_support_abs = 5;
  double ransac_min_support_frac = 0.15;
  int min_matched_flows = 5;
  int drift_min_support_abs = 8;
  double drift_min_support_frac = 0.25;

  // Lucas-Kanade knobs.
  int lk_max_iterations = 20;
  double lk_convergence_eps = 0.01;
  double lk_min_eigen = 1e-4;
  int lk_window_half_min = 2;
  int lk_window_half_max = 15;

  uint64_t rng_seed = 1;
  int threads = 1;
};

// Appearance snapshot used for inlier restoration and drift compensation.
// Grid points and the stored box are in ROI-local coordinates.
struct ReferenceModel {
  GrayImage roi;
  FramePyramid pyramid;
  OrientedBox box;
  GridStates states;
  double mean_intensity = 0.0;
  double scale = 0.0;  // box diagonal at capture
};

struct TrackEvent {
  enum class Kind {
    MotionRestoration,
    ReferenceRestoration,
    DriftCompensated,
    ReferenceUpdated,
    OutlierModelAbsent,
  };

  Kind kind;
  int count = 0;
  double lambda = 0.0;
  double d_star = 0.0;
  bool variance_clamped = false;
};

enum class StepStatus { Ok, Failed };

struct StepOutcome {
  OrientedBox box;
  GridStates states;
  StepStatus status = StepStatus::Ok;
  std::vector<TrackEvent> events;
};

// --- grid helpers ---------------------------------------------------------

// Adaptive grid side from the target's smaller dimension: 40 px -> m_min,
// 200 px -> m_max, linear in between, clamped.
int choose_grid_size(double min_side, int m_min = 10, int m_max = 20);

// Uniform m x m points across the box, half-cell inset from the border,
// row-major to match GridStates indexing.
std::vector<Point2> grid_points(const OrientedBox& box, int m);

// 3x3 binary median / dilation on an m x m grid, borders replicated.
std::vector<uint8_t> median3x3(const std::vector<uint8_t>& mask, int m);
std::vector<uint8_t> dilate3x3(const std::vector<uint8_t>& mask, int m);

// --- pipeline stages (exposed for tests) ----------------------------------

// Indices of flows whose residual against T stays below k * sigma, with
// sigma floored so exact fits are not rejected wholesale.
std::vector<int> filter_by_residual(std::span<const PointPair> flows,
                                    const SimilarityTransform& T, double k,
                                    double sigma, double sigma_floor = 0.5);

// State-update rules over the gated masks. Outliers win overlaps; the
// inlier mask is median-filtered then dilated, the outlier mask only
// median-filtered. Without an outlier model the inlier mask alone decides.
GridStates update_states(int m, const std::vector<uint8_t>& in_star_mask,
                         const std::vector<uint8_t>& out_star_mask,
                         bool outlier_model_present);

struct MotionRestoration {
  bool gate_met = false;
  int restored = 0;
  MahalanobisMotion motion;
  double outlier_ratio = 0.0;
};

// Flips matched points back to Inlier when the inlier/outlier motions are
// statistically far apart (gate on lambda, d*, and outlier ratio) and the
// point sits closer to the inlier motion. No-op when the gate fails.
MotionRestoration restore_from_motion(GridStates& states,
                                      const SimilarityTransform& T_in,
                                      const SimilarityTransform& T_out,
                                      std::span<const Point2> grid_pts,
                                      std::span<const PointPair> matched_flows,
                                      std::span<const int> matched_grid_idx,
                                      const ResidualStats& stats_in,
                                      const ResidualStats& stats_out,
                                      const TrackerConfig& cfg);

struct ReferenceRestoreResult {
  int matched = 0;
  int restored = 0;
  std::vector<PointPair> matches;  // (reference point, current-frame point)
};

// FB-matches the reference model's inlier grid points against the current
// frame (seeded through the reference-to-current box similarity) and sets
// the corresponding current states to Inlier. Never demotes a point.
ReferenceRestoreResult restore_from_reference(GridStates& states,
                                              const ReferenceModel& ref,
                                              const FramePyramid& current,
                                              const OrientedBox& current_box,
                                              const FlowParams& fp,
                                              int threads);

struct DriftResult {
  bool applied = false;
  OrientedBox box;
};

// Re-anchors the box to the reference via a robust reference-to-current
// transform, when enough reference matches support one.
DriftResult compensate_drift(const ReferenceModel& ref,
                             std::span<const PointPair> ref_matches,
                             const OrientedBox& current_box,
                             const TrackerConfig& cfg, uint64_t seed);

ReferenceModel capture_reference(const GrayImage& frame,
                                 const OrientedBox& box,
                                 const GridStates& states,
                                 const FlowParams& fp);

// Mean intensity over the pixels covered by the oriented box.
double mean_region_intensity(const GrayImage& frame, const OrientedBox& box);

// --- the tracker -----------------------------------------------------------

class ConcurrentTracker {
 public:
  // Chooses the grid size from the box, sets every state to Inlier and
  // captures the appearance reference. Throws std::invalid_argument when
  // the box leaves no LK margin or is too small for the grid.
  ConcurrentTracker(const GrayImage& frame, const OrientedBox& box,
                    const TrackerConfig& cfg);

  StepOutcome step(const FramePyramid& prev, const FramePyramid& next);
  StepOutcome step(const GrayImage& prev, const GrayImage& next);

  const OrientedBox& box() const { return box_; }
  const GridStates& states() const { return states_; }
  const ReferenceModel& reference() const { return reference_; }
  const TrackerConfig& config() const { return cfg_; }
  const FlowParams& flow_params() const { return flow_params_; }
  int grid_size() const { return states_.m; }
  int frame_index() const { return frame_index_; }

 private:
  int ransac_min_support(size_t population) const;
  uint64_t stage_seed(int tag) const;
  void maybe_update_reference(const GrayImage& next_frame,
                              const StepOutcome& outcome,
                              std::vector<TrackEvent>& events);

  TrackerConfig cfg_;
  FlowParams flow_params_;
  OrientedBox box_;
  GridStates states_;
  ReferenceModel reference_;
  int frame_index_ = 0;
};

}  // namespace cotrack

#endif  // COTRACK_TRACKER_HPP_

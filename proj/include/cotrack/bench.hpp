#ifndef COTRACK_BENCH_HPP_
#define COTRACK_BENCH_HPP_

#include <optional>
#include <string>
#include <vector>

#include "cotrack/geometry.hpp"
#include "cotrack/tracker.hpp"

namespace cotrack {

struct AxisBox {
  double x = 0.0;  // top-left corner
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  OrientedBox oriented() const {
    return {{x + w / 2.0, y + h / 2.0}, w, h, 0.0};
  }
};

AxisBox axis_aligned_hull(const OrientedBox& b);

// Per-frame boxes; absent frames are explicit (NaN,NaN,NaN,NaN rows).
struct GroundTruth {
  std::vector<std::optional<AxisBox>> boxes;

  int frame_count() const { return static_cast<int>(boxes.size()); }
};

GroundTruth load_ground_truth(const std::string& path);
void save_ground_truth(const GroundTruth& gt, const std::string& path);

// VOC overlap: exact convex-polygon intersection over union. Throws on
// non-positive box areas.
double overlap(const OrientedBox& a, const OrientedBox& b);

// Fraction of evaluated frames with overlap strictly above 0.5; absent
// entries are excluded from the denominator. Throws when nothing is
// evaluated.
double success_rate(const std::vector<std::optional<double>>& overlaps);

struct FrameRecord {
  int frame = 0;
  OrientedBox box;
  StepStatus status = StepStatus::Ok;
  std::optional<double> accuracy;  // VOC overlap vs ground truth
  double step_ms = 0.0;
  std::vector<TrackEvent> events;
};

struct TrackReport {
  std::vector<FrameRecord> frames;
  double mean_accuracy = 0.0;
  double success = 0.0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
  double fps = 0.0;
  int evaluated_frames = 0;
  int failed_steps = 0;
};

// Initializes from the first ground-truth box and steps through the whole
// sequence with the variant selected in cfg. Step timing covers pyramid
// construction and tracking but not frame I/O. When annotate_dir is given,
// overlay PGMs with the box and per-point state marks are written there.
TrackReport run_benchmark(const std::string& sequence_dir,
                          const GroundTruth& gt, const TrackerConfig& cfg,
                          const std::string& annotate_dir = "");

// In-memory variant for preloaded frames (used by the synthetic suites).
TrackReport run_benchmark_frames(const std::vector<GrayImage>& frames,
                                 const GroundTruth& gt,
                                 const TrackerConfig& cfg,
                                 const std::string& annotate_dir = "");

// Per-frame CSV (timing column last, so determinism checks can strip it)
// and a key=value summary block.
void write_report_csv(const TrackReport& report, const std::string& path);
std::string summary_text(const TrackReport& report);

// Frame copy with box edges and grid-state marks at distinct gray levels
// (inliers bright, outliers dark).
GrayImage render_annotation(const GrayImage& frame, const OrientedBox& box,
                            const GridStates& states);

}  // namespace cotrack

#endif  // COTRACK_BENCH_HPP_

#include "cotrack/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cotrack/flow.hpp"

namespace cotrack {

AxisBox axis_aligned_hull(const OrientedBox& b) {
  const auto cs = b.corners();
  double minx = cs[0].x, maxx = cs[0].x, miny = cs[0].y, maxy = cs[0].y;
  for (const auto& p : cs) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
  return {minx, miny, maxx - minx, maxy - miny};
}

GroundTruth load_ground_truth(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open ground truth " + path);
  }
  GroundTruth gt;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    std::string tok[4];
    if (!(ss >> tok[0] >> tok[1] >> tok[2] >> tok[3])) {
      throw std::runtime_error("malformed ground truth at " + path + ":" +
                               std::to_string(line_no));
    }
    auto is_nan = [](const std::string& t) {
      return t == "NaN" || t == "nan" || t == "NAN";
    };
    if (is_nan(tok[0])) {
      gt.boxes.push_back(std::nullopt);
      continue;
    }
    AxisBox b;
    try {
      b.x = std::stod(tok[0]);
      b.y = std::stod(tok[1]);
      b.w = std::stod(tok[2]);
      b.h = std::stod(tok[3]);
    } catch (const std::exception&) {
      throw std::runtime_error("malformed ground truth at " + path + ":" +
                               std::to_string(line_no));
    }
    if (!(b.w > 0) || !(b.h > 0)) {
      throw std::runtime_error("non-positive ground-truth box at " + path +
                               ":" + std::to_string(line_no));
    }
    gt.boxes.push_back(b);
  }
  return gt;
}

void save_ground_truth(const GroundTruth& gt, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  char buf[160];
  for (const auto& b : gt.boxes) {
    if (b.has_value()) {
      std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f\n", b->x, b->y,
                    b->w, b->h);
      out << buf;
    } else {
      out << "NaN,NaN,NaN,NaN\n";
    }
  }
}

namespace {

double polygon_area(const std::vector<Point2>& poly) {
  double acc = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Point2& a = poly[i];
    const Point2& b = poly[(i + 1) % n];
    acc += a.x * b.y - b.x * a.y;
  }
  return 0.5 * acc;
}

// Sutherland-Hodgman clip of a convex subject polygon against the
// half-plane left of edge (e0, e1); box corners wind positively.
std::vector<Point2> clip_edge(const std::vector<Point2>& poly,
                              const Point2& e0, const Point2& e1) {
  std::vector<Point2> out;
  const size_t n = poly.size();
  if (n == 0) return out;
  const double ex = e1.x - e0.x;
  const double ey = e1.y - e0.y;
  auto side = [&](const Point2& p) {
    return ex * (p.y - e0.y) - ey * (p.x - e0.x);
  };
  for (size_t i = 0; i < n; ++i) {
    const Point2& cur = poly[i];
    const Point2& nxt = poly[(i + 1) % n];
    const double sc = side(cur);
    const double sn = side(nxt);
    if (sc >= 0) out.push_back(cur);
    if ((sc > 0 && sn < 0) || (sc < 0 && sn > 0)) {
      const double t = sc / (sc - sn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

}  // namespace

double overlap(const OrientedBox& a, const OrientedBox& b) {
  if (!(a.area() > 0) || !(b.area() > 0)) {
    throw std::invalid_argument("overlap: degenerate box");
  }
  const auto ca = a.corners();
  const auto cb = b.corners();
  std::vector<Point2> poly(ca.begin(), ca.end());
  for (int e = 0; e < 4 && !poly.empty(); ++e) {
    poly = clip_edge(poly, cb[e], cb[(e + 1) % 4]);
  }
  const double inter = poly.empty() ? 0.0 : std::abs(polygon_area(poly));
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

double success_rate(const std::vector<std::optional<double>>& overlaps) {
  int evaluated = 0;
  int correct = 0;
  for (const auto& v : overlaps) {
    if (!v.has_value()) continue;
    ++evaluated;
    if (*v > 0.5) ++correct;
  }
  if (evaluated == 0) {
    throw std::invalid_argument("success_rate: zero evaluated frames");
  }
  return static_cast<double>(correct) / evaluated;
}

namespace {

TrackReport run_loop(const std::vector<GrayImage>& frames,
                     const GroundTruth& gt, const TrackerConfig& cfg,
                     const std::string& annotate_dir) {
  if (frames.size() < 2) {
    throw std::invalid_argument("benchmark: need at least 2 frames");
  }
  if (gt.frame_count() != static_cast<int>(frames.size())) {
    throw std::invalid_argument(
        "benchmark: ground truth has " + std::to_string(gt.frame_count()) +
        " entries for " + std::to_string(frames.size()) + " frames");
  }
  if (!gt.boxes[0].has_value()) {
    throw std::invalid_argument("benchmark: no initial box in ground truth");
  }

  ConcurrentTracker tracker(frames[0], gt.boxes[0]->oriented(), cfg);
  TrackReport report;

  namespace fs = std::filesystem;
  if (!annotate_dir.empty()) {
    fs::create_directories(annotate_dir);
    save_frame(render_annotation(frames[0], tracker.box(), tracker.states()),
               (fs::path(annotate_dir) / "00000.pgm").string());
  }

  using clock = std::chrono::steady_clock;
  FramePyramid prev = build_frame_pyramid(frames[0], cfg.pyramid_levels);
  std::vector<std::optional<double>> overlaps;
  std::vector<double> times;
  double acc_sum = 0.0;

  for (size_t t = 1; t < frames.size(); ++t) {
    const auto t0 = clock::now();
    FramePyramid next = build_frame_pyramid(frames[t], cfg.pyramid_levels);
    StepOutcome outcome = tracker.step(prev, next);
    const auto t1 = clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    FrameRecord rec;
    rec.frame = static_cast<int>(t);
    rec.box = outcome.box;
    rec.status = outcome.status;
    rec.step_ms = ms;
    rec.events = outcome.events;
    if (gt.boxes[t].has_value()) {
      rec.accuracy = overlap(outcome.box, gt.boxes[t]->oriented());
      overlaps.push_back(rec.accuracy);
      acc_sum += *rec.accuracy;
    } else {
      overlaps.push_back(std::nullopt);
    }
    if (outcome.status == StepStatus::Failed) ++report.failed_steps;
    times.push_back(ms);
    report.frames.push_back(std::move(rec));

    if (!annotate_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof(name), "%05zu.pgm", t);
      save_frame(render_annotation(frames[t], outcome.box, outcome.states),
                 (fs::path(annotate_dir) / name).string());
    }
    prev = std::move(next);
  }

  report.evaluated_frames = 0;
  for (const auto& v : overlaps) {
    if (v.has_value()) ++report.evaluated_frames;
  }
  report.mean_accuracy =
      report.evaluated_frames > 0 ? acc_sum / report.evaluated_frames : 0.0;
  report.success = report.evaluated_frames > 0 ? success_rate(overlaps) : 0.0;
  if (!times.empty()) {
    report.mean_ms =
        std::accumulate(times.begin(), times.end(), 0.0) / times.size();
    std::vector<double> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    report.median_ms = sorted[sorted.size() / 2];
    report.fps = report.mean_ms > 0 ? 1000.0 / report.mean_ms : 0.0;
  }
  return report;
}

}  // namespace

TrackReport run_benchmark_frames(const std::vector<GrayImage>& frames,
                                 const GroundTruth& gt,
                                 const TrackerConfig& cfg,
                                 const std::string& annotate_dir) {
  return run_loop(frames, gt, cfg, annotate_dir);
}

TrackReport run_benchmark(const std::string& sequence_dir,
                          const GroundTruth& gt, const TrackerConfig& cfg,
                          const std::string& annotate_dir) {
  const std::vector<std::string> paths = list_frames(sequence_dir);
  if (paths.size() < 2) {
    throw std::runtime_error("sequence " + sequence_dir +
                             " has fewer than 2 frames");
  }
  std::vector<GrayImage> frames;
  frames.reserve(paths.size());
  for (const auto& p : paths) frames.push_back(load_frame(p));
  return run_loop(frames, gt, cfg, annotate_dir);
}

void write_report_csv(const TrackReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << "frame,cx,cy,w,h,angle,status,overlap,ms\n";
  char buf[256];
  for (const auto& r : report.frames) {
    char acc[32];
    if (r.accuracy.has_value()) {
      std::snprintf(acc, sizeof(acc), "%.6f", *r.accuracy);
    } else {
      std::snprintf(acc, sizeof(acc), "NaN");
    }
    std::snprintf(buf, sizeof(buf), "%d,%.4f,%.4f,%.4f,%.4f,%.6f,%s,%s,%.3f\n",
                  r.frame, r.box.center.x, r.box.center.y, r.box.width,
                  r.box.height, r.box.angle,
                  r.status == StepStatus::Ok ? "ok" : "failed", acc, r.step_ms);
    out << buf;
  }
}

std::string summary_text(const TrackReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "frames=%zu\nevaluated=%d\nmean_accuracy=%.6f\n"
                "success_rate=%.6f\nfailed_steps=%d\nmean_step_ms=%.3f\n"
                "median_step_ms=%.3f\nfps=%.1f\n",
                report.frames.size(), report.evaluated_frames,
                report.mean_accuracy, report.success, report.failed_steps,
                report.mean_ms, report.median_ms, report.fps);
  return buf;
}

namespace {

void draw_line(GrayImage& img, Point2 a, Point2 b, float level) {
  const double len = std::max(1.0, distance(a, b));
  const int steps = static_cast<int>(std::ceil(len * 2));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(a.x + t * (b.x - a.x)));
    const int y = static_cast<int>(std::lround(a.y + t * (b.y - a.y)));
    if (x >= 0 && y >= 0 && x < img.width() && y < img.height()) {
      img.at(x, y) = level;
    }
  }
}

void draw_mark(GrayImage& img, const Point2& p, float level) {
  const int cx = static_cast<int>(std::lround(p.x));
  const int cy = static_cast<int>(std::lround(p.y));
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const int x = cx + dx;
      const int y = cy + dy;
      if (x >= 0 && y >= 0 && x < img.width() && y < img.height()) {
        img.at(x, y) = level;
      }
    }
  }
}

}  // namespace

GrayImage render_annotation(const GrayImage& frame, const OrientedBox& box,
                            const GridStates& states) {
  GrayImage out = frame;
  const auto cs = box.corners();
  for (int e = 0; e < 4; ++e) {
    draw_line(out, cs[e], cs[(e + 1) % 4], 255.0f);
  }
  const std::vector<Point2> pts = grid_points(box, states.m);
  for (int i = 0; i < states.total(); ++i) {
    draw_mark(out, pts[i],
              states.states[i] == PointState::Inlier ? 255.0f : 0.0f);
  }
  return out;
}

}  // namespace cotrack

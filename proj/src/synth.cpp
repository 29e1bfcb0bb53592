#include "cotrack/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "cotrack/rng.hpp"
#include "cotrack/tracker.hpp"

namespace cotrack {

namespace {

double lattice(uint64_t seed, int64_t i, int64_t j) {
  return hash_uniform(seed, static_cast<uint64_t>(i) * 0x9E3779B97F4A7C15ULL,
                      static_cast<uint64_t>(j)) *
             2.0 -
         1.0;
}

double fade(double t) { return t * t * (3.0 - 2.0 * t); }

double octave(uint64_t seed, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const int64_t ix = static_cast<int64_t>(fx);
  const int64_t iy = static_cast<int64_t>(fy);
  const double tx = fade(x - fx);
  const double ty = fade(y - fy);
  const double v00 = lattice(seed, ix, iy);
  const double v10 = lattice(seed, ix + 1, iy);
  const double v01 = lattice(seed, ix, iy + 1);
  const double v11 = lattice(seed, ix + 1, iy + 1);
  const double top = v00 + tx * (v10 - v00);
  const double bot = v01 + tx * (v11 - v01);
  return top + ty * (bot - top);
}

}  // namespace

double texture_value(const TextureSpec& tex, double x, double y) {
  const double coarse = octave(tex.seed, x / tex.cell, y / tex.cell);
  const double fine = octave(tex.seed ^ 0xA5A5A5A5A5A5A5A5ULL,
                             x / (tex.cell * 0.31) + 13.7,
                             y / (tex.cell * 0.31) + 7.3);
  return tex.base + tex.amplitude * (0.65 * coarse + 0.35 * fine);
}

GrayImage render_texture(const TextureSpec& tex, int width, int height,
                         const Point2& origin) {
  GrayImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      img.at(x, y) =
          static_cast<float>(texture_value(tex, origin.x + x, origin.y + y));
    }
  }
  return img;
}

SimilarityTransform step_transform(const MotionStep& step, const Point2& c) {
  SimilarityTransform T;
  T.scale = step.ds;
  T.theta = step.dth;
  const double cc = std::cos(step.dth);
  const double ss = std::sin(step.dth);
  T.tx = c.x + step.dx - step.ds * (cc * c.x - ss * c.y);
  T.ty = c.y + step.dy - step.ds * (ss * c.x + cc * c.y);
  return T;
}

namespace {

struct ConvexPoly {
  std::vector<Point2> pts;
  double orient = 1.0;  // sign of the winding

  void init_orientation() {
    double acc = 0.0;
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i) {
      const Point2& a = pts[i];
      const Point2& b = pts[(i + 1) % n];
      acc += a.x * b.y - b.x * a.y;
    }
    orient = acc >= 0 ? 1.0 : -1.0;
  }

  bool contains(const Point2& p) const {
    const size_t n = pts.size();
    for (size_t i = 0; i < n; ++i) {
      const Point2& a = pts[i];
      const Point2& b = pts[(i + 1) % n];
      const double cr = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      if (cr * orient < 0) return false;
    }
    return true;
  }
};

struct RenderedOccluder {
  ConvexPoly poly;       // spawn coordinates
  GrayImage patch;       // texture over the spawn bounding rect (+margin)
  Point2 patch_origin;   // spawn coords of patch pixel (0,0)
  Point2 centroid;       // spawn centroid
  std::vector<SimilarityTransform> cumulative;  // world = T(spawn), per frame
};

void bounding_rect(const std::vector<Point2>& pts, double& minx, double& miny,
                   double& maxx, double& maxy) {
  minx = maxx = pts[0].x;
  miny = maxy = pts[0].y;
  for (const auto& p : pts) {
    minx = std::min(minx, p.x);
    maxx = std::max(maxx, p.x);
    miny = std::min(miny, p.y);
    maxy = std::max(maxy, p.y);
  }
}

}  // namespace

GeneratedSequence generate(const Scenario& sc) {
  if (sc.frames < 1 || sc.width < 8 || sc.height < 8) {
    throw std::invalid_argument("generate: bad scenario dimensions");
  }
  if (static_cast<int>(sc.target_steps.size()) != sc.frames) {
    throw std::invalid_argument(
        "generate: target script covers " +
        std::to_string(sc.target_steps.size()) + " frames, scenario has " +
        std::to_string(sc.frames));
  }
  for (size_t k = 0; k < sc.occluders.size(); ++k) {
    const auto& oc = sc.occluders[k];
    if (!oc.steps.empty() &&
        static_cast<int>(oc.steps.size()) != sc.frames) {
      throw std::invalid_argument("generate: occluder " + std::to_string(k) +
                                  " script length mismatch");
    }
    if (oc.polygon.size() < 3) {
      throw std::invalid_argument("generate: occluder " + std::to_string(k) +
                                  " polygon needs 3+ vertices");
    }
  }

  GeneratedSequence out;

  // Target texture patch over the initial box (+margin for bilinear taps).
  const int margin = 2;
  const AxisBox b0 = sc.target_box;
  const Point2 patch_origin{b0.x - margin, b0.y - margin};
  const GrayImage target_patch =
      render_texture(sc.target_texture, static_cast<int>(std::ceil(b0.w)) + 2 * margin,
                     static_cast<int>(std::ceil(b0.h)) + 2 * margin, patch_origin);
  const OrientedBox box0 = b0.oriented();

  // Cumulative target transforms and ground-truth boxes.
  std::vector<SimilarityTransform> target_cum(sc.frames);
  out.truth.boxes.resize(sc.frames);
  target_cum[0] = SimilarityTransform::identity();
  out.truth.boxes[0] = box0;
  for (int t = 1; t < sc.frames; ++t) {
    const SimilarityTransform step =
        step_transform(sc.target_steps[t], out.truth.boxes[t - 1].center);
    target_cum[t] = compose(step, target_cum[t - 1]);
    out.truth.boxes[t] = transform_box(step, out.truth.boxes[t - 1]);
  }

  // Occluder patches and cumulative transforms.
  std::vector<RenderedOccluder> occs;
  occs.reserve(sc.occluders.size());
  for (const auto& spec : sc.occluders) {
    RenderedOccluder ro;
    ro.poly.pts = spec.polygon;
    ro.poly.init_orientation();
    double minx, miny, maxx, maxy;
    bounding_rect(spec.polygon, minx, miny, maxx, maxy);
    ro.patch_origin = {minx - margin, miny - margin};
    ro.patch = render_texture(
        spec.texture, static_cast<int>(std::ceil(maxx - minx)) + 2 * margin,
        static_cast<int>(std::ceil(maxy - miny)) + 2 * margin, ro.patch_origin);
    double cx = 0, cy = 0;
    for (const auto& p : spec.polygon) {
      cx += p.x;
      cy += p.y;
    }
    ro.centroid = {cx / spec.polygon.size(), cy / spec.polygon.size()};
    ro.cumulative.resize(sc.frames);
    ro.cumulative[0] = SimilarityTransform::identity();
    Point2 c = ro.centroid;
    for (int t = 1; t < sc.frames; ++t) {
      const MotionStep step = spec.steps.empty() ? MotionStep{} : spec.steps[t];
      const SimilarityTransform st = step_transform(step, c);
      ro.cumulative[t] = compose(st, ro.cumulative[t - 1]);
      c = apply(st, c);
    }
    occs.push_back(std::move(ro));
  }

  const GrayImage background =
      render_texture(sc.background, sc.width, sc.height);

  // Nominal tracker grid for the occlusion masks.
  out.truth.grid_m = choose_grid_size(std::min(b0.w, b0.h));
  out.truth.occlusion.assign(
      sc.frames,
      std::vector<uint8_t>(static_cast<size_t>(out.truth.grid_m) *
                               out.truth.grid_m,
                           0));

  out.frames.reserve(sc.frames);
  for (int t = 0; t < sc.frames; ++t) {
    GrayImage frame = background;

    // Target, composited over the hull rect of its true box.
    {
      const SimilarityTransform inv = invert(target_cum[t]);
      const AxisBox hull = axis_aligned_hull(out.truth.boxes[t]);
      const int x0 = std::max(0, static_cast<int>(std::floor(hull.x)));
      const int x1 = std::min(sc.width - 1,
                              static_cast<int>(std::ceil(hull.x + hull.w)));
      const int y0 = std::max(0, static_cast<int>(std::floor(hull.y)));
      const int y1 = std::min(sc.height - 1,
                              static_cast<int>(std::ceil(hull.y + hull.h)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Point2 p0 = apply(inv, {static_cast<double>(x),
                                        static_cast<double>(y)});
          if (!point_in_box(box0, p0)) continue;
          const Point2 tp{p0.x - patch_origin.x, p0.y - patch_origin.y};
          const auto v = sample_bilinear(target_patch, tp);
          if (v.has_value()) frame.at(x, y) = static_cast<float>(*v);
        }
      }
    }

    // Active occluders, in list order.
    for (size_t k = 0; k < occs.size(); ++k) {
      const RenderedOccluder& ro = occs[k];
      const OccluderSpec& spec = sc.occluders[k];
      if (t < spec.active_begin || t >= spec.active_end) continue;
      const SimilarityTransform inv = invert(ro.cumulative[t]);
      std::vector<Point2> world_pts;
      world_pts.reserve(ro.poly.pts.size());
      for (const auto& p : ro.poly.pts) {
        world_pts.push_back(apply(ro.cumulative[t], p));
      }
      double minx, miny, maxx, maxy;
      bounding_rect(world_pts, minx, miny, maxx, maxy);
      const int x0 = std::max(0, static_cast<int>(std::floor(minx)));
      const int x1 = std::min(sc.width - 1, static_cast<int>(std::ceil(maxx)));
      const int y0 = std::max(0, static_cast<int>(std::floor(miny)));
      const int y1 = std::min(sc.height - 1, static_cast<int>(std::ceil(maxy)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const Point2 p0 = apply(inv, {static_cast<double>(x),
                                        static_cast<double>(y)});
          if (!ro.poly.contains(p0)) continue;
          const Point2 tp{p0.x - ro.patch_origin.x, p0.y - ro.patch_origin.y};
          const auto v = sample_bilinear(ro.patch, tp);
          if (v.has_value()) frame.at(x, y) = static_cast<float>(*v);
        }
      }
    }

    // Illumination ramp, then per-pixel noise.
    const double gain =
        sc.frames > 1
            ? 1.0 + sc.illumination_ramp * static_cast<double>(t) / (sc.frames - 1)
            : 1.0;
    const uint64_t noise_seed = hash_combine(sc.seed, 0x6E6F697365ULL);
    float* data = frame.data().data();
    const size_t npix = frame.data().size();
    for (size_t i = 0; i < npix; ++i) {
      double v = data[i] * gain;
      if (sc.noise_sigma > 0) {
        v += sc.noise_sigma *
             hash_gaussian(noise_seed, static_cast<uint64_t>(t), i);
      }
      data[i] = static_cast<float>(std::clamp(v, 0.0, 255.0));
    }

    // Occlusion mask at the true grid-cell centers.
    const std::vector<Point2> centers =
        grid_points(out.truth.boxes[t], out.truth.grid_m);
    for (size_t i = 0; i < centers.size(); ++i) {
      for (size_t k = 0; k < occs.size(); ++k) {
        const OccluderSpec& spec = sc.occluders[k];
        if (t < spec.active_begin || t >= spec.active_end) continue;
        const Point2 p0 = apply(invert(occs[k].cumulative[t]), centers[i]);
        if (occs[k].poly.contains(p0)) {
          out.truth.occlusion[t][i] = 1;
          break;
        }
      }
    }

    out.frames.push_back(std::move(frame));
  }
  return out;
}

GroundTruth truth_to_ground_truth(const SynthTruth& truth) {
  GroundTruth gt;
  gt.boxes.reserve(truth.boxes.size());
  for (const auto& b : truth.boxes) {
    gt.boxes.push_back(axis_aligned_hull(b));
  }
  return gt;
}

namespace {

std::vector<MotionStep> constant_steps(int frames, const MotionStep& s) {
  std::vector<MotionStep> steps(frames);
  for (int t = 1; t < frames; ++t) steps[t] = s;
  return steps;
}

std::vector<Point2> rect_poly(double x, double y, double w, double h) {
  return {{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}};
}

}  // namespace

std::vector<Scenario> standard_suite() {
  std::vector<Scenario> suite;

  {
    Scenario s;
    s.name = "S1_pure_translation";
    s.width = 480;
    s.height = 360;
    s.frames = 100;
    s.seed = 101;
    s.noise_sigma = 1.0;
    s.background = {11, 120.0, 40.0, 14.0};
    s.target_texture = {12, 135.0, 55.0, 5.0};
    s.target_box = {60, 130, 100, 100};
    s.target_steps = constant_steps(s.frames, {1.0, 0.0, 1.5, 0.35});
    suite.push_back(std::move(s));
  }
  {
    Scenario s;
    s.name = "S2_scale_rotation";
    s.width = 480;
    s.height = 360;
    s.frames = 120;
    s.seed = 102;
    s.noise_sigma = 1.0;
    s.background = {21, 118.0, 38.0, 13.0};
    s.target_texture = {22, 140.0, 52.0, 5.5};
    s.target_box = {185, 120, 110, 110};
    s.target_steps =
        constant_steps(s.frames, {1.0022, 0.15 * M_PI / 180.0, 0.25, 0.1});
    suite.push_back(std::move(s));
  }
  {
    Scenario s;
    s.name = "S3_partial_occlusion";
    s.width = 480;
    s.height = 360;
    s.frames = 150;
    s.seed = 103;
    s.noise_sigma = 1.0;
    s.background = {31, 120.0, 40.0, 14.0};
    s.target_texture = {32, 135.0, 55.0, 5.0};
    s.target_box = {120, 130, 100, 100};
    s.target_steps = constant_steps(s.frames, {1.0, 0.0, 0.8, 0.0});
    OccluderSpec oc;
    oc.texture = {37, 90.0, 60.0, 4.5};
    oc.polygon = rect_poly(330, 120, 42, 170);
    oc.active_begin = 25;
    oc.active_end = 150;
    oc.steps = constant_steps(s.frames, {1.0, 0.0, -2.0, 0.0});
    s.occluders.push_back(std::move(oc));
    suite.push_back(std::move(s));
  }
  {
    Scenario s;
    s.name = "S4_full_occlusion";
    s.width = 480;
    s.height = 360;
    s.frames = 100;
    s.seed = 104;
    s.noise_sigma = 1.0;
    s.background = {41, 122.0, 40.0, 14.0};
    s.target_texture = {42, 135.0, 55.0, 5.0};
    s.target_box = {190, 130, 100, 100};
    s.target_steps = constant_steps(s.frames, {});  // static target
    OccluderSpec oc;
    // Featureless panel: full coverage should starve the tracker rather
    // than feed it a consistent foreign motion.
    oc.texture = {47, 150.0, 3.0, 9.0};
    oc.polygon = rect_poly(-20, 115, 170, 160);
    oc.active_begin = 10;
    oc.active_end = 90;
    oc.steps = constant_steps(s.frames, {1.0, 0.0, 6.0, 0.0});
    s.occluders.push_back(std::move(oc));
    suite.push_back(std::move(s));
  }
  {
    Scenario s;
    s.name = "S5_illumination_drift";
    s.width = 480;
    s.height = 360;
    s.frames = 120;
    s.seed = 105;
    s.noise_sigma = 1.0;
    s.illumination_ramp = 0.2;
    s.background = {51, 112.0, 36.0, 14.0};
    s.target_texture = {52, 128.0, 48.0, 5.0};
    s.target_box = {110, 130, 100, 100};
    s.target_steps = constant_steps(s.frames, {1.0, 0.0, 0.5, 0.0});
    suite.push_back(std::move(s));
  }
  {
    Scenario s;
    s.name = "S6_static_occluder";
    s.width = 480;
    s.height = 360;
    s.frames = 150;
    s.seed = 106;
    s.noise_sigma = 1.0;
    s.background = {61, 120.0, 40.0, 14.0};
    s.target_texture = {62, 135.0, 55.0, 5.0};
    s.target_box = {150, 130, 100, 100};
    s.target_steps = constant_steps(s.frames, {1.0, 0.0, 1.2, 0.0});
    OccluderSpec oc;
    oc.texture = {67, 70.0, 45.0, 4.0};
    oc.polygon = rect_poly(280, 80, 16, 200);
    oc.active_begin = 0;
    oc.active_end = 150;
    s.occluders.push_back(std::move(oc));
    suite.push_back(std::move(s));
  }
  return suite;
}

Scenario noise_scenario() {
  Scenario s;
  s.name = "N1_noise_only";
  s.width = 320;
  s.height = 240;
  s.frames = 20;
  s.seed = 901;
  s.noise_sigma = 25.0;
  s.background = {91, 128.0, 0.0, 16.0};
  s.target_texture = {92, 128.0, 0.0, 16.0};
  s.target_box = {110, 70, 100, 100};
  s.target_steps = constant_steps(s.frames, {});
  return s;
}

Scenario performance_scenario() {
  Scenario s;
  s.name = "P1_runtime_640x480";
  s.width = 640;
  s.height = 480;
  s.frames = 150;
  s.seed = 701;
  s.noise_sigma = 1.0;
  s.background = {71, 120.0, 40.0, 14.0};
  s.target_texture = {72, 135.0, 55.0, 5.5};
  s.target_box = {140, 170, 120, 120};
  s.target_steps = constant_steps(s.frames, {1.0, 0.0, 1.0, 0.25});
  OccluderSpec oc;
  oc.texture = {77, 90.0, 60.0, 4.5};
  oc.polygon = rect_poly(420, 150, 50, 190);
  oc.active_begin = 20;
  oc.active_end = 150;
  oc.steps = constant_steps(s.frames, {1.0, 0.0, -2.2, 0.0});
  s.occluders.push_back(std::move(oc));
  return s;
}

// --- scenario file format ---------------------------------------------------
//
//   name S3_partial_occlusion
//   size 480 360
//   frames 150
//   seed 103
//   noise_sigma 1.0
//   illumination_ramp 0.0
//   background seed=31 base=120 amplitude=40 cell=14
//   target_texture seed=32 base=135 amplitude=55 cell=5
//   target_box 120 130 100 100
//   target_step 1..149 ds=1 dth=0 dx=0.8 dy=0
//   occluder seed=37 base=90 amplitude=60 cell=4.5 active=25..149 \
//            poly=330,120:372,120:372,290:330,290
//   occluder_step 0 25..149 ds=1 dth=0 dx=-2 dy=0
//
// Angles in the file are degrees; ranges are inclusive.

namespace {

struct KeyValues {
  std::vector<std::pair<std::string, std::string>> items;

  std::string get(const std::string& key, const std::string& where) const {
    for (const auto& [k, v] : items) {
      if (k == key) return v;
    }
    throw std::runtime_error("scenario: missing " + key + " in " + where);
  }
};

KeyValues parse_kv(std::istringstream& ss) {
  KeyValues kv;
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("scenario: expected key=value, got " + tok);
    }
    kv.items.push_back({tok.substr(0, eq), tok.substr(eq + 1)});
  }
  return kv;
}

TextureSpec parse_texture(const KeyValues& kv, const std::string& where) {
  TextureSpec t;
  t.seed = std::stoull(kv.get("seed", where));
  t.base = std::stod(kv.get("base", where));
  t.amplitude = std::stod(kv.get("amplitude", where));
  t.cell = std::stod(kv.get("cell", where));
  return t;
}

std::pair<int, int> parse_range(const std::string& s, int line_no) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const int v = std::stoi(s);
      return {v, v};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
  } catch (const std::exception&) {
    throw std::runtime_error("scenario: bad frame range '" + s + "' at line " +
                             std::to_string(line_no));
  }
}

MotionStep parse_step(const KeyValues& kv, const std::string& where) {
  MotionStep m;
  m.ds = std::stod(kv.get("ds", where));
  m.dth = std::stod(kv.get("dth", where)) * M_PI / 180.0;
  m.dx = std::stod(kv.get("dx", where));
  m.dy = std::stod(kv.get("dy", where));
  return m;
}

void assign_steps(std::vector<MotionStep>& steps, std::vector<uint8_t>& seen,
                  int lo, int hi, const MotionStep& m, int line_no) {
  if (lo < 1 || hi >= static_cast<int>(steps.size()) || lo > hi) {
    throw std::runtime_error("scenario: step range " + std::to_string(lo) +
                             ".." + std::to_string(hi) +
                             " out of bounds at line " +
                             std::to_string(line_no));
  }
  for (int t = lo; t <= hi; ++t) {
    if (seen[t]) {
      throw std::runtime_error("scenario: frame " + std::to_string(t) +
                               " scripted twice (line " +
                               std::to_string(line_no) + ")");
    }
    seen[t] = 1;
    steps[t] = m;
  }
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open scenario " + path);
  }
  Scenario sc;
  sc.frames = 0;
  std::string line;
  int line_no = 0;
  std::vector<uint8_t> target_seen;
  std::vector<std::vector<uint8_t>> occ_seen;
  bool have_target_box = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    const std::string where = path + ":" + std::to_string(line_no);
    if (key == "name") {
      ss >> sc.name;
    } else if (key == "size") {
      ss >> sc.width >> sc.height;
    } else if (key == "frames") {
      ss >> sc.frames;
      if (sc.frames < 1) {
        throw std::runtime_error("scenario: bad frame count at " + where);
      }
      sc.target_steps.assign(sc.frames, MotionStep{});
      target_seen.assign(sc.frames, 0);
    } else if (key == "seed") {
      ss >> sc.seed;
    } else if (key == "noise_sigma") {
      ss >> sc.noise_sigma;
    } else if (key == "illumination_ramp") {
      ss >> sc.illumination_ramp;
    } else if (key == "background") {
      sc.background = parse_texture(parse_kv(ss), where);
    } else if (key == "target_texture") {
      sc.target_texture = parse_texture(parse_kv(ss), where);
    } else if (key == "target_box") {
      ss >> sc.target_box.x >> sc.target_box.y >> sc.target_box.w >>
          sc.target_box.h;
      have_target_box = true;
    } else if (key == "target_step") {
      if (sc.frames == 0) {
        throw std::runtime_error("scenario: target_step before frames at " +
                                 where);
      }
      std::string range;
      ss >> range;
      const auto [lo, hi] = parse_range(range, line_no);
      const MotionStep m = parse_step(parse_kv(ss), where);
      assign_steps(sc.target_steps, target_seen, lo, hi, m, line_no);
    } else if (key == "occluder") {
      if (sc.frames == 0) {
        throw std::runtime_error("scenario: occluder before frames at " + where);
      }
      const KeyValues kv = parse_kv(ss);
      OccluderSpec oc;
      oc.texture = parse_texture(kv, where);
      const auto [ab, ae] = parse_range(kv.get("active", where), line_no);
      oc.active_begin = ab;
      oc.active_end = ae + 1;
      std::string poly = kv.get("poly", where);
      std::replace(poly.begin(), poly.end(), ':', ' ');
      std::istringstream ps(poly);
      std::string pt;
      while (ps >> pt) {
        const auto comma = pt.find(',');
        if (comma == std::string::npos) {
          throw std::runtime_error("scenario: bad polygon vertex at " + where);
        }
        oc.polygon.push_back({std::stod(pt.substr(0, comma)),
                              std::stod(pt.substr(comma + 1))});
      }
      if (oc.polygon.size() < 3) {
        throw std::runtime_error("scenario: polygon needs 3+ vertices at " +
                                 where);
      }
      oc.steps.assign(sc.frames, MotionStep{});
      sc.occluders.push_back(std::move(oc));
      occ_seen.push_back(std::vector<uint8_t>(sc.frames, 0));
    } else if (key == "occluder_step") {
      size_t idx = 0;
      std::string range;
      ss >> idx >> range;
      if (idx >= sc.occluders.size()) {
        throw std::runtime_error("scenario: occluder_step for unknown occluder at " +
                                 where);
      }
      const auto [lo, hi] = parse_range(range, line_no);
      const MotionStep m = parse_step(parse_kv(ss), where);
      assign_steps(sc.occluders[idx].steps, occ_seen[idx], lo, hi, m, line_no);
    } else {
      throw std::runtime_error("scenario: unknown key '" + key + "' at " +
                               where);
    }
  }
  if (sc.frames == 0 || !have_target_box) {
    throw std::runtime_error("scenario " + path +
                             ": frames and target_box are required");
  }
  for (int t = 1; t < sc.frames; ++t) {
    if (!target_seen[t]) {
      throw std::runtime_error("scenario " + path + ": frame " +
                               std::to_string(t) + " has no target_step");
    }
  }
  return sc;
}

namespace {

void write_steps(std::ofstream& out, const std::string& prefix,
                 const std::vector<MotionStep>& steps) {
  int t = 1;
  const int frames = static_cast<int>(steps.size());
  char buf[160];
  while (t < frames) {
    int end = t;
    while (end + 1 < frames && steps[end + 1] == steps[t]) ++end;
    std::snprintf(buf, sizeof(buf), "%s %d..%d ds=%.10g dth=%.10g dx=%.10g dy=%.10g\n",
                  prefix.c_str(), t, end, steps[t].ds,
                  steps[t].dth * 180.0 / M_PI, steps[t].dx, steps[t].dy);
    out << buf;
    t = end + 1;
  }
}

}  // namespace

void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  char buf[256];
  out << "# cotrack scenario\n";
  out << "name " << (sc.name.empty() ? "unnamed" : sc.name) << "\n";
  out << "size " << sc.width << " " << sc.height << "\n";
  out << "frames " << sc.frames << "\n";
  out << "seed " << sc.seed << "\n";
  std::snprintf(buf, sizeof(buf), "noise_sigma %.10g\n", sc.noise_sigma);
  out << buf;
  if (sc.illumination_ramp != 0.0) {
    std::snprintf(buf, sizeof(buf), "illumination_ramp %.10g\n",
                  sc.illumination_ramp);
    out << buf;
  }
  auto tex_line = [&](const char* key, const TextureSpec& t) {
    std::snprintf(buf, sizeof(buf),
                  "%s seed=%llu base=%.10g amplitude=%.10g cell=%.10g\n", key,
                  static_cast<unsigned long long>(t.seed), t.base, t.amplitude,
                  t.cell);
    out << buf;
  };
  tex_line("background", sc.background);
  tex_line("target_texture", sc.target_texture);
  std::snprintf(buf, sizeof(buf), "target_box %.10g %.10g %.10g %.10g\n",
                sc.target_box.x, sc.target_box.y, sc.target_box.w,
                sc.target_box.h);
  out << buf;
  write_steps(out, "target_step", sc.target_steps);
  for (size_t k = 0; k < sc.occluders.size(); ++k) {
    const auto& oc = sc.occluders[k];
    std::string poly;
    for (size_t i = 0; i < oc.polygon.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%s%.10g,%.10g", i ? ":" : "",
                    oc.polygon[i].x, oc.polygon[i].y);
      poly += buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "occluder seed=%llu base=%.10g amplitude=%.10g cell=%.10g "
                  "active=%d..%d poly=%s\n",
                  static_cast<unsigned long long>(oc.texture.seed),
                  oc.texture.base, oc.texture.amplitude, oc.texture.cell,
                  oc.active_begin, oc.active_end - 1, poly.c_str());
    out << buf;
    if (!oc.steps.empty()) {
      write_steps(out, ("occluder_step " + std::to_string(k)).c_str(),
                  oc.steps);
    }
  }
}

void write_sequence(const GeneratedSequence& seq, const Scenario& scenario,
                    const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  char name[32];
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    std::snprintf(name, sizeof(name), "%05zu.pgm", t);
    save_frame(seq.frames[t], (fs::path(dir) / name).string());
  }
  save_ground_truth(truth_to_ground_truth(seq.truth),
                    (fs::path(dir) / "gt.txt").string());
  save_scenario(scenario, (fs::path(dir) / "scenario.txt").string());

  std::ofstream mask((fs::path(dir) / "occlusion.txt").string());
  mask << seq.truth.grid_m << " " << seq.truth.occlusion.size() << "\n";
  for (const auto& row : seq.truth.occlusion) {
    for (uint8_t v : row) mask << (v ? '1' : '0');
    mask << "\n";
  }
}

}  // namespace cotrack

#ifndef COTRACK_SYNTH_HPP_
#define COTRACK_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "cotrack/bench.hpp"
#include "cotrack/geometry.hpp"
#include "cotrack/image.hpp"

namespace cotrack {

// Band-limited value noise: a seeded random lattice interpolated with a
// smoothstep fade, two octaves. Trackable gradients everywhere, no binary
// assets in the repo.
struct TextureSpec {
  uint64_t seed = 1;
  double base = 128.0;
  double amplitude = 50.0;
  double cell = 8.0;  // coarse lattice spacing, px
};

double texture_value(const TextureSpec& tex, double x, double y);

// Texture patch with pixel (i,j) sampled at origin + (i,j).
GrayImage render_texture(const TextureSpec& tex, int width, int height,
                         const Point2& origin = {0.0, 0.0});

// Per-frame incremental motion: scale by ds and rotate by dth about the
// current center, then translate the center by (dx, dy).
struct MotionStep {
  double ds = 1.0;
  double dth = 0.0;  // radians
  double dx = 0.0;
  double dy = 0.0;

  bool operator==(const MotionStep&) const = default;
};

// Absolute transform realizing the step for an object centered at c.
SimilarityTransform step_transform(const MotionStep& step, const Point2& c);

struct OccluderSpec {
  TextureSpec texture;
  std::vector<Point2> polygon;  // convex, spawn coordinates
  int active_begin = 0;         // inclusive
  int active_end = 0;           // exclusive
  std::vector<MotionStep> steps;  // per frame; empty means static
};

struct Scenario {
  std::string name;
  int width = 480;
  int height = 360;
  int frames = 100;
  uint64_t seed = 1;
  double noise_sigma = 1.0;
  double illumination_ramp = 0.0;  // total fractional gain over the sequence

  TextureSpec background;
  TextureSpec target_texture;
  AxisBox target_box;                  // initial box
  std::vector<MotionStep> target_steps;  // size == frames; index 0 unused
  std::vector<OccluderSpec> occluders;
};

struct SynthTruth {
  std::vector<OrientedBox> boxes;                // per frame
  int grid_m = 0;                                // nominal tracker grid
  std::vector<std::vector<uint8_t>> occlusion;   // per frame, m*m cell mask
};

struct GeneratedSequence {
  std::vector<GrayImage> frames;
  SynthTruth truth;
};

GeneratedSequence generate(const Scenario& scenario);

// The six fixed seeded scenarios: pure translation, scale+rotation,
// 40% opposing partial occlusion, temporary full occlusion, illumination
// drift, and a static occluder crossed by a moving target.
std::vector<Scenario> standard_suite();

// A box over untextured per-frame noise; every step should fail.
Scenario noise_scenario();

// 640x480 variant sized so the tracker picks m = 15; used for timing.
Scenario performance_scenario();

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& scenario, const std::string& path);

// Materializes frames (zero-padded PGMs), gt.txt (axis-aligned hulls of
// the true boxes), scenario.txt and occlusion.txt into dir.
void write_sequence(const GeneratedSequence& seq, const Scenario& scenario,
                    const std::string& dir);

GroundTruth truth_to_ground_truth(const SynthTruth& truth);

}  // namespace cotrack

#endif  // COTRACK_SYNTH_HPP_

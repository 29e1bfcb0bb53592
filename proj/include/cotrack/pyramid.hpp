#ifndef COTRACK_PYRAMID_HPP_
#define COTRACK_PYRAMID_HPP_

#include <vector>

#include "cotrack/image.hpp"

namespace cotrack {

// Coarse-to-fine image stack. Level 0 is full resolution; each further
// level is the previous one low-passed with the 5-tap binomial kernel
// [1,4,6,4,1]/16 (applied separably, borders replicated) and decimated 2x.
struct ImagePyramid {
  std::vector<GrayImage> levels;

  int num_levels() const { return static_cast<int>(levels.size()); }
  const GrayImage& level(int k) const { return levels[k]; }
};

// min_dim guards the smallest level; the caller knows its window size.
ImagePyramid build_pyramid(const GrayImage& img, int levels, int min_dim = 3);

// One smooth+decimate stage, exposed for pyramid construction tests.
GrayImage downsample_binomial(const GrayImage& img);

}  // namespace cotrack

#endif  // COTRACK_PYRAMID_HPP_

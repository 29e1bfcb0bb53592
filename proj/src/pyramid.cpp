#include "cotrack/pyramid.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace cotrack {

namespace {

inline int clampi(int v, int lo, int hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}

}  // namespace

GrayImage downsample_binomial(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  const int ow = w / 2;
  const int oh = h / 2;
  if (ow < 1 || oh < 1) {
    throw std::invalid_argument("downsample_binomial: image too small");
  }
  static const float k[5] = {1.0f / 16, 4.0f / 16, 6.0f / 16, 4.0f / 16, 1.0f / 16};

  // Horizontal pass, evaluated only at even columns.
  GrayImage tmp(ow, h);
  for (int y = 0; y < h; ++y) {
    const float* src = img.row(y);
    for (int ox = 0; ox < ow; ++ox) {
      const int cx = 2 * ox;
      float acc = 0.0f;
      for (int t = -2; t <= 2; ++t) {
        acc += k[t + 2] * src[clampi(cx + t, 0, w - 1)];
      }
      tmp.at(ox, y) = acc;
    }
  }
  // Vertical pass at even rows.
  GrayImage out(ow, oh);
  for (int oy = 0; oy < oh; ++oy) {
    const int cy = 2 * oy;
    for (int ox = 0; ox < ow; ++ox) {
      float acc = 0.0f;
      for (int t = -2; t <= 2; ++t) {
        acc += k[t + 2] * tmp.at(ox, clampi(cy + t, 0, h - 1));
      }
      out.at(ox, oy) = acc;
    }
  }
  return out;
}

ImagePyramid build_pyramid(const GrayImage& img, int levels, int min_dim) {
  if (levels < 1) {
    throw std::invalid_argument("build_pyramid: levels must be >= 1");
  }
  if (img.empty()) {
    throw std::invalid_argument("build_pyramid: empty image");
  }
  ImagePyramid pyr;
  pyr.levels.push_back(img);
  for (int k = 1; k < levels; ++k) {
    const GrayImage& prev = pyr.levels.back();
    if (prev.width() / 2 < min_dim || prev.height() / 2 < min_dim) {
      throw std::invalid_argument(
          "build_pyramid: " + std::to_string(levels) +
          " levels too deep for a " + std::to_string(img.width()) + "x" +
          std::to_string(img.height()) + " image");
    }
    pyr.levels.push_back(downsample_binomial(prev));
  }
  return pyr;
}

}  // namespace cotrack

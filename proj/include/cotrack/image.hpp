#ifndef COTRACK_IMAGE_HPP_
#define COTRACK_IMAGE_HPP_

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cotrack {

// Sub-pixel image coordinates. Origin at the top-left pixel center,
// x rightward, y downward.
struct Point2 {
  double x = 0.0;
  double y = 0.0;

  Point2() = default;
  Point2(double x_, double y_) : x(x_), y(y_) {}

  Point2 operator+(const Point2& o) const { return {x + o.x, y + o.y}; }
  Point2 operator-(const Point2& o) const { return {x - o.x, y - o.y}; }
  Point2 operator*(double k) const { return {x * k, y * k}; }
  double norm() const { return std::hypot(x, y); }
};

inline double distance(const Point2& a, const Point2& b) {
  return (a - b).norm();
}

// Single-channel intensity raster, row-major, nominal range [0, 255].
// Decoded once from 8-bit input and kept as float for the whole pipeline.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(int width, int height, float fill = 0.0f);

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  float at(int x, int y) const { return data_[static_cast<size_t>(y) * width_ + x]; }
  float& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  const float* row(int y) const { return data_.data() + static_cast<size_t>(y) * width_; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool same_size(const GrayImage& o) const {
    return width_ == o.width_ && height_ == o.height_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> data_;
};

// Reads a binary PGM (P5) frame; P6 color input is converted by averaging
// the three channels. Throws std::runtime_error naming the path on any
// format or I/O problem.
GrayImage load_frame(const std::string& path);

// Writes an 8-bit binary PGM (P5, maxval 255). Intensities are rounded and
// clamped to [0, 255]; the load/save round trip is lossless for 8-bit data.
void save_frame(const GrayImage& img, const std::string& path);

// All *.pgm / *.ppm files of a directory in lexicographic order.
std::vector<std::string> list_frames(const std::string& dir);

// Bilinear interpolation of the four surrounding pixel centers. Returns
// nullopt when p falls outside [0, w-1] x [0, h-1]; callers treat such
// points as lost.
std::optional<double> sample_bilinear(const GrayImage& img, const Point2& p);

// Unchecked variant for hot loops; p must already be validated in-bounds.
inline double sample_bilinear_unsafe(const GrayImage& img, double x, double y) {
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  if (x0 > img.width() - 2) x0 = img.width() - 2;
  if (y0 > img.height() - 2) y0 = img.height() - 2;
  const double fx = x - x0;
  const double fy = y - y0;
  const float* r0 = img.row(y0) + x0;
  const float* r1 = img.row(y0 + 1) + x0;
  const double top = r0[0] + fx * (r0[1] - r0[0]);
  const double bot = r1[0] + fx * (r1[1] - r1[0]);
  return top + fy * (bot - top);
}

// Central differences with 0.5 scale, borders replicated. Requires
// width, height >= 3.
std::pair<GrayImage, GrayImage> gradient(const GrayImage& img);

}  // namespace cotrack

#endif  // COTRACK_IMAGE_HPP_

#include "cotrack/image.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace cotrack {

GrayImage::GrayImage(int width, int height, float fill)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) {
    throw std::invalid_argument("GrayImage: dimensions must be >= 1");
  }
  data_.assign(static_cast<size_t>(width) * height, fill);
}

namespace {

// Skips whitespace and '#' comment lines between PNM header tokens.
int read_pnm_int(std::istream& in, const std::string& path) {
  int c = in.peek();
  while (c != EOF) {
    if (std::isspace(c)) {
      in.get();
    } else if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else {
      break;
    }
    c = in.peek();
  }
  int value = -1;
  if (!(in >> value)) {
    throw std::runtime_error("malformed PNM header in " + path);
  }
  return value;
}

}  // namespace

GrayImage load_frame(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != 'P' || (m1 != '5' && m1 != '6')) {
    throw std::runtime_error("unsupported raster format in " + path +
                             " (need binary PGM/PPM)");
  }
  const bool color = (m1 == '6');
  const int w = read_pnm_int(in, path);
  const int h = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (w < 1 || h < 1) {
    throw std::runtime_error("malformed PNM dimensions in " + path);
  }
  if (maxval != 255) {
    throw std::runtime_error("unsupported bit depth (maxval " +
                             std::to_string(maxval) + ") in " + path);
  }
  in.get();  // single whitespace after maxval
  const size_t n = static_cast<size_t>(w) * h;
  const size_t bytes = color ? n * 3 : n;
  std::vector<uint8_t> raw(bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<size_t>(in.gcount()) != bytes) {
    throw std::runtime_error("truncated pixel data in " + path);
  }
  GrayImage img(w, h);
  if (color) {
    for (size_t i = 0; i < n; ++i) {
      const int sum = raw[3 * i] + raw[3 * i + 1] + raw[3 * i + 2];
      img.data()[i] = static_cast<float>(sum) / 3.0f;
    }
  } else {
    for (size_t i = 0; i < n; ++i) {
      img.data()[i] = static_cast<float>(raw[i]);
    }
  }
  return img;
}

void save_frame(const GrayImage& img, const std::string& path) {
  if (img.empty()) {
    throw std::invalid_argument("save_frame: empty image");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write " + path);
  }
  out << "P5\n" << img.width() << " " << img.height() << "\n255\n";
  std::vector<uint8_t> raw(img.data().size());
  for (size_t i = 0; i < raw.size(); ++i) {
    const float v = std::round(img.data()[i]);
    raw[i] = static_cast<uint8_t>(std::clamp(v, 0.0f, 255.0f));
  }
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size()));
  if (!out) {
    throw std::runtime_error("write failed for " + path);
  }
}

std::vector<std::string> list_frames(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("not a directory: " + dir);
  }
  std::vector<std::string> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") {
      out.push_back(entry.path().string());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<double> sample_bilinear(const GrayImage& img, const Point2& p) {
  if (!(p.x >= 0.0 && p.y >= 0.0 && p.x <= img.width() - 1 &&
        p.y <= img.height() - 1)) {
    return std::nullopt;
  }
  if (img.width() == 1 && img.height() == 1) {
    return img.at(0, 0);
  }
  if (img.width() == 1) {
    const int y0 = std::min(static_cast<int>(p.y), img.height() - 2);
    const double fy = p.y - y0;
    return img.at(0, y0) + fy * (img.at(0, y0 + 1) - img.at(0, y0));
  }
  if (img.height() == 1) {
    const int x0 = std::min(static_cast<int>(p.x), img.width() - 2);
    const double fx = p.x - x0;
    return img.at(x0, 0) + fx * (img.at(x0 + 1, 0) - img.at(x0, 0));
  }
  return sample_bilinear_unsafe(img, p.x, p.y);
}

std::pair<GrayImage, GrayImage> gradient(const GrayImage& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw std::invalid_argument("gradient: image smaller than 3x3");
  }
  GrayImage gx(w, h);
  GrayImage gy(w, h);
  for (int y = 0; y < h; ++y) {
    const int ym = std::max(y - 1, 0);
    const int yp = std::min(y + 1, h - 1);
    for (int x = 0; x < w; ++x) {
      const int xm = std::max(x - 1, 0);
      const int xp = std::min(x + 1, w - 1);
      gx.at(x, y) = 0.5f * (img.at(xp, y) - img.at(xm, y));
      gy.at(x, y) = 0.5f * (img.at(x, yp) - img.at(x, ym));
    }
  }
  return {std::move(gx), std::move(gy)};
}

}  // namespace cotrack

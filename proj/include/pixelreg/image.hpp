// Copyright 2026 The pixelreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense float image with row-major, channel-minor storage:
//   data[(row * width + col) * channels + c]
// vec(.) of an image is exactly this storage order.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "pixelreg/error.hpp"

namespace pixelreg {

class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 3, double fill = 0.0)
      : width_(width), height_(height), channels_(channels) {
    if (width <= 0 || height <= 0 || channels <= 0) {
      throw InvalidArgument("image dimensions must be positive");
    }
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(int row, int col, int c = 0) const {
    return (static_cast<std::size_t>(row) * width_ + col) * channels_ + c;
  }
  double& at(int row, int col, int c = 0) { return data_[index(row, col, c)]; }
  double at(int row, int col, int c = 0) const {
    return data_[index(row, col, c)];
  }

  std::span<double> vec() { return data_; }
  std::span<const double> vec() const { return data_; }

  bool same_shape(const Image& o) const {
    return width_ == o.width_ && height_ == o.height_ &&
           channels_ == o.channels_;
  }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

inline void require_same_shape(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw DimensionMismatch("image dimensions differ");
}

// ||vec(a - b)||_2
inline double l2_distance(const Image& a, const Image& b) {
  require_same_shape(a, b);
  double acc = 0.0;
  auto va = a.vec();
  auto vb = b.vec();
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

inline double l2_norm(const Image& a) {
  double acc = 0.0;
  for (double v : a.vec()) acc += v * v;
  return std::sqrt(acc);
}

inline double max_abs_difference(const Image& a, const Image& b) {
  require_same_shape(a, b);
  double m = 0.0;
  auto va = a.vec();
  auto vb = b.vec();
  for (std::size_t i = 0; i < va.size(); ++i) {
    m = std::max(m, std::abs(va[i] - vb[i]));
  }
  return m;
}

inline std::uint8_t to_byte(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
}

// Binary PPM (P6, maxval 255). Values are clamped to [0,1] and rounded
// half-up.
inline void write_ppm(const Image& img, const std::string& path) {
  if (img.channels() != 3) throw InvalidArgument("PPM export needs 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<char> bytes(img.size());
  auto v = img.vec();
  for (std::size_t i = 0; i < v.size(); ++i) {
    bytes[i] = static_cast<char>(to_byte(v[i]));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing " + path);
}

inline Image read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw Error(path + ": unsupported PPM header");
  }
  in.get();
  Image img(w, h, 3);
  std::vector<char> bytes(img.size());
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!in) throw Error(path + ": truncated PPM payload");
  auto v = img.vec();
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = static_cast<std::uint8_t>(bytes[i]) / 255.0;
  }
  return img;
}

}  // namespace pixelreg

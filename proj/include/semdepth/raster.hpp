#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace semdepth {

// Row-major raster with an optional channel dimension. Pixel (u, v) is
// column u, row v; pixel centers sit at integer coordinates.
template <typename T>
class Raster {
 public:
  Raster() = default;
  Raster(int height, int width, int channels = 1, T fill = T{})
      : height_(height), width_(width), channels_(channels),
        data_(static_cast<size_t>(height) * width * channels, fill) {
    if (height < 0 || width < 0 || channels < 1)
      throw std::invalid_argument("Raster: bad dimensions");
  }

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  T& at(int v, int u, int c = 0) { return data_[index(v, u, c)]; }
  const T& at(int v, int u, int c = 0) const { return data_[index(v, u, c)]; }

  bool in_bounds(int v, int u) const {
    return u >= 0 && u < width_ && v >= 0 && v < height_;
  }

  bool same_shape(const Raster& o) const {
    return height_ == o.height_ && width_ == o.width_ && channels_ == o.channels_;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  void fill(T value) { data_.assign(data_.size(), value); }

 private:
  size_t index(int v, int u, int c) const {
    return (static_cast<size_t>(v) * width_ + u) * channels_ + c;
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

// Intensities in [0, 1], 3 channels.
using Image = Raster<double>;
// Strictly positive metric depth.
using DepthMap = Raster<double>;
// Semantic class ids 0..18; 255 marks ignore.
using LabelMap = Raster<uint8_t>;
// 1 = usable, 0 = excluded.
using Mask = Raster<uint8_t>;
// Per-pixel source selection; -1 where nothing was selected.
using IndexMap = Raster<int32_t>;

inline constexpr int kNumClasses = 19;
inline constexpr uint8_t kIgnoreLabel = 255;

inline Image make_image(int height, int width, double fill = 0.0) {
  return Image(height, width, 3, fill);
}

}  // namespace semdepth

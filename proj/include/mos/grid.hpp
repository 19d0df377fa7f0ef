#pragma once

#include <cassert>
#include <cstddef>
#include <vector>

namespace mos {

/// Dense row-major h x w buffer. Row index v (0 = top), column index u.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int height, int width, T fill = T{})
      : height_(height), width_(width),
        data_(static_cast<std::size_t>(height) * width, fill) {
    assert(height >= 0 && width >= 0);
  }

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int v, int u) {
    assert(in_bounds(v, u));
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }
  const T& operator()(int v, int u) const {
    assert(in_bounds(v, u));
    return data_[static_cast<std::size_t>(v) * width_ + u];
  }

  bool in_bounds(int v, int u) const {
    return v >= 0 && v < height_ && u >= 0 && u < width_;
  }

  template <typename U>
  bool same_shape(const Grid<U>& other) const {
    return height_ == other.height() && width_ == other.width();
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool operator==(const Grid&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<T> data_;
};

}  // namespace mos

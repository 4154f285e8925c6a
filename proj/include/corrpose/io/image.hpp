#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

namespace corrpose {

/// Dense row-major H x W x C plane stack.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, T fill = T())
        : height_(height), width_(width), channels_(channels),
          data_(static_cast<std::size_t>(height) * width * channels, fill) {}

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    bool empty() const { return data_.empty(); }
    std::size_t pixel_count() const { return static_cast<std::size_t>(height_) * width_; }

    T& at(int r, int c, int ch = 0) {
        return data_[(static_cast<std::size_t>(r) * width_ + c) * channels_ + ch];
    }
    const T& at(int r, int c, int ch = 0) const {
        return data_[(static_cast<std::size_t>(r) * width_ + c) * channels_ + ch];
    }

    bool in_bounds(int r, int c) const { return r >= 0 && r < height_ && c >= 0 && c < width_; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<T> data_;
};

using ImageF = Image<float>;
using ImageD = Image<double>;
using ImageB = Image<unsigned char>;
using ImageI = Image<int>;

}  // namespace corrpose

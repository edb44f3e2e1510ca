#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace leafgrasp {

// Row-major 2D buffer. Pixel (u, v) = column u, row v.
template <typename T>
class Image {
public:
    Image() = default;
    Image(int width, int height, T fill = T{})
        : width_(width), height_(height), v_(static_cast<size_t>(width) * height, fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    size_t size() const { return v_.size(); }
    bool empty() const { return v_.empty(); }

    bool in_bounds(int u, int v) const { return u >= 0 && u < width_ && v >= 0 && v < height_; }

    T& at(int u, int v) {
        assert(in_bounds(u, v));
        return v_[static_cast<size_t>(v) * width_ + u];
    }
    const T& at(int u, int v) const {
        assert(in_bounds(u, v));
        return v_[static_cast<size_t>(v) * width_ + u];
    }

    T* data() { return v_.data(); }
    const T* data() const { return v_.data(); }
    std::vector<T>& values() { return v_; }
    const std::vector<T>& values() const { return v_; }

    T* row(int v) { return v_.data() + static_cast<size_t>(v) * width_; }
    const T* row(int v) const { return v_.data() + static_cast<size_t>(v) * width_; }

    friend bool operator==(const Image& a, const Image& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.v_ == b.v_;
    }

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<T> v_;
};

using Mask = Image<uint8_t>;  // nonzero = set

inline int count_set(const Mask& m) {
    int n = 0;
    for (uint8_t p : m.values()) n += (p != 0);
    return n;
}

}  // namespace leafgrasp

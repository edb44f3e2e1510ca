#pragma once

#include <cassert>
#include <cstddef>
#include <string>
#include <vector>

#include "leafgrasp/util.hpp"

namespace leafgrasp::nn {

// Dense NCHW tensor. T is float for inference and double for training, where
// finite-difference gradient checks need the extra precision.
template <typename T>
struct Tensor4 {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor4() = default;
    Tensor4(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    size_t size() const { return v.size(); }
    size_t plane() const { return static_cast<size_t>(h) * w; }

    T& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T* slice(int in, int ic) { return v.data() + (static_cast<size_t>(in) * c + ic) * plane(); }
    const T* slice(int in, int ic) const { return v.data() + (static_cast<size_t>(in) * c + ic) * plane(); }

    std::string shape_str() const {
        return "[" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
               std::to_string(w) + "]";
    }
};

template <typename T>
void require_shape(const Tensor4<T>& t, int n, int c, int h, int w, const char* where) {
    if (t.n != n || t.c != c || t.h != h || t.w != w)
        throw InternalError(std::string(where) + ": shape mismatch, got " + t.shape_str() + ", want [" +
                            std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
                            std::to_string(w) + "]");
}

}  // namespace leafgrasp::nn

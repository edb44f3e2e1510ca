#include "leafgrasp/distance_field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace leafgrasp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Felzenszwalb & Huttenlocher 1D squared-distance transform under the
// lower-envelope-of-parabolas formulation.
void dt1d(const double* f, double* d, int n, int* v, double* z) {
    int k = 0;
    v[0] = 0;
    z[0] = -kInf;
    z[1] = kInf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == kInf) continue;
        double s;
        while (true) {
            if (f[v[k]] == kInf) {
                // No finite parabola yet; replace.
                if (k == 0) {
                    v[0] = q;
                    z[0] = -kInf;
                    z[1] = kInf;
                    break;
                }
                --k;
                continue;
            }
            s = ((f[q] + q * (double)q) - (f[v[k]] + v[k] * (double)v[k])) / (2.0 * q - 2.0 * v[k]);
            if (s <= z[k]) {
                --k;
            } else {
                ++k;
                v[k] = q;
                z[k] = s;
                z[k + 1] = kInf;
                break;
            }
        }
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        if (f[v[0]] == kInf) {
            d[q] = kInf;
            continue;
        }
        while (z[k + 1] < q) ++k;
        double dq = q - (double)v[k];
        d[q] = dq * dq + f[v[k]];
    }
}

// 2D squared EDT: column pass then row pass.
void dt2d(std::vector<double>& grid, int w, int h) {
    int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = grid[static_cast<size_t>(y) * w + x];
        dt1d(f.data(), d.data(), h, v.data(), z.data());
        for (int y = 0; y < h; ++y) grid[static_cast<size_t>(y) * w + x] = d[y];
    }
    for (int y = 0; y < h; ++y) {
        double* row = grid.data() + static_cast<size_t>(y) * w;
        std::copy(row, row + w, f.begin());
        dt1d(f.data(), d.data(), w, v.data(), z.data());
        std::copy(d.begin(), d.begin() + w, row);
    }
}

DistanceField sentinel_field(int w, int h) {
    DistanceField out;
    out.width = w;
    out.height = h;
    out.degenerate = true;
    out.values.assign(static_cast<size_t>(w) * h, static_cast<double>(std::max(w, h)));
    return out;
}

}  // namespace

DistanceField distance_to_nearest_set(const Mask& mask) {
    const int w = mask.width(), h = mask.height();
    int n_set = count_set(mask);
    if (n_set == 0) return sentinel_field(w, h);

    DistanceField out;
    out.width = w;
    out.height = h;
    out.values.resize(mask.size());
    for (size_t i = 0; i < mask.size(); ++i) out.values[i] = mask.values()[i] ? 0.0 : kInf;
    dt2d(out.values, w, h);
    for (auto& d : out.values) d = std::sqrt(d);
    return out;
}

DistanceField distance_transform(const Mask& mask) {
    const int w = mask.width(), h = mask.height();
    int n_set = count_set(mask);
    if (n_set == 0 || n_set == static_cast<int>(mask.size())) return sentinel_field(w, h);

    Mask inv(w, h);
    for (size_t i = 0; i < mask.size(); ++i) inv.values()[i] = mask.values()[i] ? 0 : 255;
    DistanceField out = distance_to_nearest_set(inv);
    // Unset pixels are their own nearest unset pixel, so they are already 0.
    return out;
}

DistanceField signed_distance_field(const Mask& occupancy) {
    const int w = occupancy.width(), h = occupancy.height();
    int n_set = count_set(occupancy);
    if (n_set == 0 || n_set == static_cast<int>(occupancy.size())) {
        DistanceField out = sentinel_field(w, h);
        if (n_set != 0)
            for (auto& d : out.values) d = -d;
        return out;
    }

    Mask inv(w, h);
    for (size_t i = 0; i < occupancy.size(); ++i) inv.values()[i] = occupancy.values()[i] ? 0 : 255;
    DistanceField to_free = distance_to_nearest_set(inv);
    DistanceField to_occ = distance_to_nearest_set(occupancy);

    DistanceField out;
    out.width = w;
    out.height = h;
    out.values.resize(occupancy.size());
    for (size_t i = 0; i < occupancy.size(); ++i)
        out.values[i] = occupancy.values()[i] ? -(to_free.values[i] - 0.5) : (to_occ.values[i] - 0.5);
    return out;
}

Mask morphological_dilate(const Mask& mask, double radius) {
    if (radius <= 0) return mask;
    if (count_set(mask) == 0) return mask;
    DistanceField d = distance_to_nearest_set(mask);
    Mask out(mask.width(), mask.height());
    for (size_t i = 0; i < out.size(); ++i) out.values()[i] = d.values[i] <= radius ? 255 : 0;
    return out;
}

Mask morphological_erode(const Mask& mask, double radius) {
    if (radius <= 0) return mask;
    const int w = mask.width(), h = mask.height();
    Mask inv(w, h);
    for (size_t i = 0; i < mask.size(); ++i) inv.values()[i] = mask.values()[i] ? 0 : 255;
    Mask grown = morphological_dilate(inv, radius);
    Mask out(w, h);
    for (size_t i = 0; i < mask.size(); ++i)
        out.values()[i] = (mask.values()[i] && !grown.values()[i]) ? 255 : 0;
    return out;
}

}  // namespace leafgrasp

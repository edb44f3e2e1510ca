#pragma once

#include "leafgrasp/image.hpp"

namespace leafgrasp {

// Per-pixel distances in pixels. Signed fields are negative inside occupied
// regions and positive in free space.
struct DistanceField {
    int width = 0, height = 0;
    std::vector<double> values;
    bool degenerate = false;  // all-set or all-unset input

    double at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
    double& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
};

// Exact Euclidean distance to the nearest set pixel, for every pixel.
// Set pixels are at distance 0. All-unset input yields the flagged
// max-dimension sentinel everywhere.
DistanceField distance_to_nearest_set(const Mask& mask);

// Interior distance transform: for set pixels, exact Euclidean distance to
// the nearest unset pixel; 0 on unset pixels. Degenerate (all-set or
// all-unset) masks yield the flagged sentinel.
DistanceField distance_transform(const Mask& mask);

// Signed field over an occupancy mask: negative inside, positive outside,
// magnitude = distance to the nearest opposite-class pixel minus 0.5, so the
// zero level sits on the pixel boundary and |value| <= 0.5 on boundary
// pixels. Degenerate occupancy is flagged.
DistanceField signed_distance_field(const Mask& occupancy);

// Disk-structuring-element morphology built on the exact transform.
Mask morphological_dilate(const Mask& mask, double radius);
Mask morphological_erode(const Mask& mask, double radius);

}  // namespace leafgrasp

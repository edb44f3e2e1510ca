#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leafgrasp/image.hpp"
#include "leafgrasp/util.hpp"

namespace leafgrasp {

struct CameraIntrinsics {
    double fx = 0, fy = 0;        // focal lengths, pixels
    double cx = 0, cy = 0;        // principal point, pixels
    double baseline = 0;          // stereo baseline, meters

    void validate(int width, int height) const {
        if (!(fx > 0) || !(fy > 0)) throw DataError("intrinsics: focal lengths must be positive");
        if (!(baseline > 0)) throw DataError("intrinsics: baseline must be positive");
        if (cx < 0 || cx >= width || cy < 0 || cy >= height)
            throw DataError("intrinsics: principal point outside image bounds");
    }

    friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// Depth in meters; non-positive or non-finite values mean "no depth here".
struct DepthMap {
    int width = 0, height = 0;
    std::vector<float> values;  // row-major, meters

    DepthMap() = default;
    DepthMap(int w, int h, float fill = 0.f)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    float at(int u, int v) const { return values[static_cast<size_t>(v) * width + u]; }
    float& at(int u, int v) { return values[static_cast<size_t>(v) * width + u]; }
    bool in_bounds(int u, int v) const { return u >= 0 && u < width && v >= 0 && v < height; }
    bool valid(int u, int v) const {
        float d = at(u, v);
        return std::isfinite(d) && d > 0.f;
    }

    void validate() const {
        if (values.size() != static_cast<size_t>(width) * height)
            throw DataError("depth map: value count does not match dimensions");
        for (float d : values)
            if (std::isinf(d) || std::isnan(d))
                throw DataError("depth map: non-finite depth value");
    }

    friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

struct InstanceMask {
    int id = 0;
    double confidence = 1.0;  // detection confidence in [0,1]
    Mask mask;

    friend bool operator==(const InstanceMask&, const InstanceMask&) = default;
};

struct InstanceMaskSet {
    int width = 0, height = 0;
    std::vector<InstanceMask> masks;

    const InstanceMask* find(int id) const {
        for (const auto& m : masks)
            if (m.id == id) return &m;
        return nullptr;
    }

    void validate() const {
        if (masks.empty()) throw DataError("instance set: scene must contain at least one leaf");
        std::map<int, int> seen;
        for (const auto& m : masks) {
            if (m.mask.width() != width || m.mask.height() != height)
                throw DataError("instance set: mask dimensions differ from scene dimensions");
            if (count_set(m.mask) < 1)
                throw DataError("instance set: empty mask for leaf " + std::to_string(m.id));
            if (m.confidence < 0.0 || m.confidence > 1.0)
                throw DataError("instance set: confidence out of [0,1] for leaf " + std::to_string(m.id));
            if (++seen[m.id] > 1)
                throw DataError("instance set: duplicate leaf id " + std::to_string(m.id));
        }
    }

    friend bool operator==(const InstanceMaskSet&, const InstanceMaskSet&) = default;
};

// Stem region annotation: a rotated rectangle strip anchored at the leaf
// base, described parametrically so it rasterizes the same way everywhere.
struct StemAnnotation {
    double base_u = 0, base_v = 0;   // strip start (leaf base end), pixels
    double dir_u = 0, dir_v = 0;     // unit direction from base toward leaf tip
    double length = 0;               // strip length along dir, pixels
    double width = 0;                // strip width across dir, pixels

    bool contains(double u, double v) const {
        double rx = u - base_u, ry = v - base_v;
        double along = rx * dir_u + ry * dir_v;
        double across = -rx * dir_v + ry * dir_u;
        return along >= 0.0 && along <= length && std::abs(across) <= width * 0.5;
    }

    friend bool operator==(const StemAnnotation&, const StemAnnotation&) = default;
};

// Ground truth attached to synthetic leaves. The graspable region is the set
// of mask pixels within `midrib_band_px` of the midrib segment, with interior
// edge distance >= `edge_safe_px`, and with view-ray slope <= `rho_max`
// (rho = tan of the angle between the camera ray and the optical axis;
// grasps are executed along the axis, so steep rays are infeasible).
struct LeafGroundTruth {
    int grasp_u = 0, grasp_v = 0;            // expert grasp pixel
    double midrib_u0 = 0, midrib_v0 = 0;     // midrib segment endpoints, pixels
    double midrib_u1 = 0, midrib_v1 = 0;
    double midrib_band_px = 0;               // region half-width around midrib
    double edge_safe_px = 0;                 // region minimum edge distance
    double rho_max = 0;                      // region maximum view-ray slope
    bool hard_occlusion = false;             // occlusion fraction > 0.2
    bool hard_eccentric = false;             // eccentricity > 0.9
    bool hard_rotated = false;               // major axis > 45 deg off horizontal

    bool hard() const { return hard_occlusion || hard_eccentric || hard_rotated; }

    friend bool operator==(const LeafGroundTruth&, const LeafGroundTruth&) = default;
};

struct Scene {
    CameraIntrinsics intrinsics;
    DepthMap depth;
    InstanceMaskSet instances;
    std::map<int, StemAnnotation> stems;        // by leaf id; optional per leaf
    std::map<int, LeafGroundTruth> ground_truth;  // synthetic scenes only

    void validate() const {
        depth.validate();
        instances.validate();
        if (depth.width != instances.width || depth.height != instances.height)
            throw DataError("scene: depth and instance dimensions differ");
        intrinsics.validate(depth.width, depth.height);
    }

    friend bool operator==(const Scene&, const Scene&) = default;
};

struct SynthesisParams {
    int width = 640, height = 480;
    double fx = 520, fy = 520;
    double cx = -1, cy = -1;            // < 0: image center
    double principal_jitter = 0;        // uniform +-jitter applied to cx, cy, pixels
    double baseline = 0.08;

    int leaf_count_min = 3, leaf_count_max = 6;
    double leaf_size_min = 70, leaf_size_max = 130;   // major axis diameter, pixels
    double ecc_min = 0.55, ecc_max = 0.85;            // ellipse eccentricity
    double overlap_probability = 0.35;                // chance a leaf is placed onto a neighbor
    double canopy_depth = 0.55;                       // base plane depth, meters
    double depth_jitter = 0.06;                       // per-leaf +- depth offset, meters
    double curvature_amplitude = 0.02;                // transverse bow, meters at the rim
    double tilt_max = 0.00025;                        // per-leaf plane slope, meters per pixel
    double stem_width = 6;                            // pixels
    double noise_sigma = 0.0;                         // depth noise, meters
    double background_offset = 0.25;                  // bg plane behind canopy, meters; < 0: no bg
    double occlusion_blob_probability = 0.12;         // chance of a dropout hole per leaf
    double border_probability = 0.0;                  // chance a leaf is pushed onto the border
    double placement_margin = 8;                      // min distance from border otherwise, pixels
    double rho_max = 0.45;                            // graspable view-ray slope bound
    uint64_t seed = 1;

    void validate() const {
        if (width <= 0 || height <= 0) throw DataError("synthesis: image dimensions must be positive");
        if (leaf_count_min < 1 || leaf_count_max < leaf_count_min)
            throw DataError("synthesis: bad leaf count range");
        if (leaf_size_min <= 4 || leaf_size_max < leaf_size_min)
            throw DataError("synthesis: bad leaf size range");
        if (leaf_size_max >= std::min(width, height))
            throw DataError("synthesis: leaf larger than image");
        if (ecc_min < 0 || ecc_max >= 1 || ecc_max < ecc_min)
            throw DataError("synthesis: bad eccentricity range");
        if (canopy_depth <= 0) throw DataError("synthesis: canopy depth must be positive");
    }
};

}  // namespace leafgrasp

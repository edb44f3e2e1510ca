#pragma once

#include <array>
#include <optional>
#include <vector>

#include "leafgrasp/scene.hpp"

namespace leafgrasp {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct PointCloud {
    std::vector<Vec3> points;          // meters, camera frame
    std::vector<std::array<int, 2>> pixels;  // source pixel (u, v) per point
};

struct LeafModel {
    int id = 0;
    const InstanceMask* instance = nullptr;  // mask reference into the scene
    PointCloud cloud;
    Vec3 centroid;                      // mean of cloud points, meters
    double centroid_u = 0, centroid_v = 0;  // mean of source pixels
    double d_mean = 0;                  // mean Euclidean camera distance, meters
    double surface_area = 0;            // m^2
    Image<uint8_t> normal_valid;        // 1 where a plane fit succeeded
    std::vector<Vec3> normals;          // per-pixel, row-major, unit where valid
    double occlusion_fraction = 0;      // invalid-depth pixels / mask pixels

    Vec3 normal_at(int u, int v) const { return normals[static_cast<size_t>(v) * normal_valid.width() + u]; }
};

// Pinhole back-projection: X = (u - cx) Z / fx, Y = (v - cy) Z / fy, Z = depth.
Vec3 back_project(double u, double v, double depth, const CameraIntrinsics& k);

// Inverse of back_project; returns (u, v, depth).
std::array<double, 3> project(const Vec3& p, const CameraIntrinsics& k);

struct DepthGradient {
    double gx = 0, gy = 0;    // meters per pixel
    bool one_sided = false;   // a one-sided difference was used on some axis
};

// Central differences with one-sided fallback next to invalid depth. Empty
// result when neither side of an axis has valid depth.
std::optional<DepthGradient> depth_gradients(const DepthMap& depth, int u, int v);

// Extracts the leaf's 3D structure: masked point cloud, centroid, mean camera
// distance, per-pixel area sum, and normals from 5x5 least-squares plane
// fits (at least 6 valid neighbors, z component oriented positive).
LeafModel build_leaf_model(const Scene& scene, int leaf_id);

}  // namespace leafgrasp

#include "leafgrasp/geometry.hpp"

#include <cmath>

namespace leafgrasp {

Vec3 back_project(double u, double v, double depth, const CameraIntrinsics& k) {
    if (!(depth > 0)) throw DataError("back_project: non-positive depth");
    return {(u - k.cx) * depth / k.fx, (v - k.cy) * depth / k.fy, depth};
}

std::array<double, 3> project(const Vec3& p, const CameraIntrinsics& k) {
    return {p.x * k.fx / p.z + k.cx, p.y * k.fy / p.z + k.cy, p.z};
}

std::optional<DepthGradient> depth_gradients(const DepthMap& depth, int u, int v) {
    if (!depth.in_bounds(u, v) || !depth.valid(u, v)) return std::nullopt;
    const double center = depth.at(u, v);

    auto axis = [&](int du, int dv, double& g, bool& one_sided) -> bool {
        bool has_m = depth.in_bounds(u - du, v - dv) && depth.valid(u - du, v - dv);
        bool has_p = depth.in_bounds(u + du, v + dv) && depth.valid(u + du, v + dv);
        if (has_m && has_p) {
            g = (depth.at(u + du, v + dv) - depth.at(u - du, v - dv)) * 0.5;
        } else if (has_p) {
            g = depth.at(u + du, v + dv) - center;
            one_sided = true;
        } else if (has_m) {
            g = center - depth.at(u - du, v - dv);
            one_sided = true;
        } else {
            return false;
        }
        return true;
    };

    DepthGradient out;
    if (!axis(1, 0, out.gx, out.one_sided)) return std::nullopt;
    if (!axis(0, 1, out.gy, out.one_sided)) return std::nullopt;
    return out;
}

namespace {

// Least-squares plane z = a x + b y + c over the 5x5 window of valid masked
// neighbors, in camera coordinates. Normal is (-a, -b, 1) normalized, which
// fixes the sign convention (z component positive).
std::optional<Vec3> fit_normal(const Scene& scene, const Mask& mask, int u, int v) {
    const auto& k = scene.intrinsics;
    double sx = 0, sy = 0, sz = 0, sxx = 0, sxy = 0, syy = 0, sxz = 0, syz = 0;
    int n = 0;
    for (int dv = -2; dv <= 2; ++dv)
        for (int du = -2; du <= 2; ++du) {
            int uu = u + du, vv = v + dv;
            if (!mask.in_bounds(uu, vv) || !mask.at(uu, vv) || !scene.depth.valid(uu, vv)) continue;
            Vec3 p = back_project(uu, vv, scene.depth.at(uu, vv), k);
            sx += p.x;
            sy += p.y;
            sz += p.z;
            sxx += p.x * p.x;
            sxy += p.x * p.y;
            syy += p.y * p.y;
            sxz += p.x * p.z;
            syz += p.y * p.z;
            ++n;
        }
    if (n < 6) return std::nullopt;

    // Normal equations for [a b c] with centered coordinates.
    double mx = sx / n, my = sy / n, mz = sz / n;
    double cxx = sxx / n - mx * mx;
    double cxy = sxy / n - mx * my;
    double cyy = syy / n - my * my;
    double cxz = sxz / n - mx * mz;
    double cyz = syz / n - my * mz;
    double det = cxx * cyy - cxy * cxy;
    if (std::abs(det) < 1e-18) return std::nullopt;
    double a = (cxz * cyy - cyz * cxy) / det;
    double b = (cyz * cxx - cxz * cxy) / det;
    double inv_len = 1.0 / std::sqrt(a * a + b * b + 1.0);
    return Vec3{-a * inv_len, -b * inv_len, inv_len};
}

}  // namespace

LeafModel build_leaf_model(const Scene& scene, int leaf_id) {
    const InstanceMask* inst = scene.instances.find(leaf_id);
    if (!inst) throw DataError("build_leaf_model: unknown leaf id " + std::to_string(leaf_id));
    const Mask& mask = inst->mask;
    const auto& k = scene.intrinsics;

    LeafModel model;
    model.id = leaf_id;
    model.instance = inst;
    model.normal_valid = Image<uint8_t>(mask.width(), mask.height());
    model.normals.resize(mask.size());

    int mask_pixels = 0, invalid_pixels = 0;
    double su = 0, sv = 0;
    Vec3 sum{};
    double dist_sum = 0, area_sum = 0;
    for (int v = 0; v < mask.height(); ++v)
        for (int u = 0; u < mask.width(); ++u) {
            if (!mask.at(u, v)) continue;
            ++mask_pixels;
            if (!scene.depth.valid(u, v)) {
                ++invalid_pixels;
                continue;
            }
            Vec3 p = back_project(u, v, scene.depth.at(u, v), k);
            model.cloud.points.push_back(p);
            model.cloud.pixels.push_back({u, v});
            sum.x += p.x;
            sum.y += p.y;
            sum.z += p.z;
            su += u;
            sv += v;
            dist_sum += p.norm();
            area_sum += p.z * p.z / (k.fx * k.fy);
            if (auto nrm = fit_normal(scene, mask, u, v)) {
                model.normal_valid.at(u, v) = 1;
                model.normals[static_cast<size_t>(v) * mask.width() + u] = *nrm;
            }
        }

    const size_t n = model.cloud.points.size();
    if (n == 0) throw DataError("build_leaf_model: degenerate leaf " + std::to_string(leaf_id) +
                                " (no valid depth inside mask)");
    model.centroid = {sum.x / n, sum.y / n, sum.z / n};
    model.centroid_u = su / static_cast<double>(n);
    model.centroid_v = sv / static_cast<double>(n);
    model.d_mean = dist_sum / static_cast<double>(n);
    model.surface_area = area_sum;
    model.occlusion_fraction = static_cast<double>(invalid_pixels) / mask_pixels;
    return model;
}

}  // namespace leafgrasp

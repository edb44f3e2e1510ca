#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "leafgrasp/distance_field.hpp"
#include "leafgrasp/scene_io.hpp"

namespace leafgrasp {

namespace {

struct LeafSpec {
    int id = 0;
    double cu = 0, cv = 0;       // center, pixels
    double a = 0, b = 0;         // semi-major / semi-minor, pixels
    double ecc = 0;
    double theta = 0;            // major-axis angle, radians in [0, pi)
    double z0 = 0;               // plane depth at center, meters
    double gx = 0, gy = 0;       // plane slope, meters per pixel
    double curvature = 0;        // transverse bow amplitude, meters
    double confidence = 1.0;
    bool on_border = false;

    // Along/across major-axis coordinates of a pixel.
    void axis_coords(double u, double v, double& along, double& across) const {
        double du = u - cu, dv = v - cv;
        double ct = std::cos(theta), st = std::sin(theta);
        along = du * ct + dv * st;
        across = -du * st + dv * ct;
    }

    bool inside(double u, double v) const {
        double s, t;
        axis_coords(u, v, s, t);
        return (s * s) / (a * a) + (t * t) / (b * b) <= 1.0;
    }

    // Noiseless surface depth and its analytic image-plane gradient.
    double surface(double u, double v) const {
        double s, t;
        axis_coords(u, v, s, t);
        return z0 + gx * (u - cu) + gy * (v - cv) + curvature * (t * t) / (b * b);
    }
    void surface_gradient(double u, double v, double& dzdu, double& dzdv) const {
        double s, t;
        axis_coords(u, v, s, t);
        double dt_du = -std::sin(theta), dt_dv = std::cos(theta);
        double common = 2.0 * curvature * t / (b * b);
        dzdu = gx + common * dt_du;
        dzdv = gy + common * dt_dv;
    }
};

double dist_point_segment(double px, double py, double x0, double y0, double x1, double y1) {
    double dx = x1 - x0, dy = y1 - y0;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - x0) * dx + (py - y0) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double qx = x0 + t * dx, qy = y0 + t * dy;
    return std::hypot(px - qx, py - qy);
}

}  // namespace

Scene synthesize_scene(const SynthesisParams& params) {
    params.validate();
    std::mt19937_64 rng(params.seed);
    auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

    const int W = params.width, H = params.height;
    Scene scene;
    scene.intrinsics.fx = params.fx;
    scene.intrinsics.fy = params.fy;
    scene.intrinsics.baseline = params.baseline;
    scene.intrinsics.cx = params.cx >= 0 ? params.cx : (W - 1) * 0.5;
    scene.intrinsics.cy = params.cy >= 0 ? params.cy : (H - 1) * 0.5;
    if (params.principal_jitter > 0) {
        scene.intrinsics.cx += uniform(-params.principal_jitter, params.principal_jitter);
        scene.intrinsics.cy += uniform(-params.principal_jitter, params.principal_jitter);
        scene.intrinsics.cx = std::clamp(scene.intrinsics.cx, 0.0, W - 1.0);
        scene.intrinsics.cy = std::clamp(scene.intrinsics.cy, 0.0, H - 1.0);
    }

    const int n_leaves =
        std::uniform_int_distribution<int>(params.leaf_count_min, params.leaf_count_max)(rng);

    std::vector<LeafSpec> leaves;
    for (int i = 0; i < n_leaves; ++i) {
        LeafSpec leaf;
        leaf.id = i + 1;
        double size = uniform(params.leaf_size_min, params.leaf_size_max);
        leaf.a = size * 0.5;
        leaf.ecc = uniform(params.ecc_min, params.ecc_max);
        leaf.b = leaf.a * std::sqrt(1.0 - leaf.ecc * leaf.ecc);
        leaf.theta = uniform(0.0, std::numbers::pi);
        leaf.z0 = params.canopy_depth + uniform(-params.depth_jitter, params.depth_jitter);
        leaf.gx = uniform(-params.tilt_max, params.tilt_max);
        leaf.gy = uniform(-params.tilt_max, params.tilt_max);
        leaf.curvature = params.curvature_amplitude;
        leaf.confidence = uniform(0.86, 0.99);

        bool want_border = uniform(0.0, 1.0) < params.border_probability;
        bool want_overlap = !leaves.empty() && uniform(0.0, 1.0) < params.overlap_probability;
        if (want_border) {
            // Push the center near a random border so the mask gets clipped.
            int side = std::uniform_int_distribution<int>(0, 3)(rng);
            double along = uniform(leaf.a, std::max(leaf.a + 1.0, (side < 2 ? H : W) - leaf.a));
            double inset = uniform(0.0, leaf.b * 0.5);
            if (side == 0) leaf.cu = inset, leaf.cv = along;
            if (side == 1) leaf.cu = W - 1 - inset, leaf.cv = along;
            if (side == 2) leaf.cv = inset, leaf.cu = along;
            if (side == 3) leaf.cv = H - 1 - inset, leaf.cu = along;
            leaf.on_border = true;
        } else if (want_overlap) {
            // Land on a neighbor: close enough that the ellipses must intersect.
            const LeafSpec& other = leaves[std::uniform_int_distribution<size_t>(0, leaves.size() - 1)(rng)];
            double dist = uniform(0.3, 0.5) * (leaf.a + other.a);
            double ang = uniform(0.0, 2.0 * std::numbers::pi);
            leaf.cu = std::clamp(other.cu + dist * std::cos(ang), leaf.a, W - 1 - leaf.a);
            leaf.cv = std::clamp(other.cv + dist * std::sin(ang), leaf.a, H - 1 - leaf.a);
        } else {
            double margin = params.placement_margin + leaf.a;
            double best_u = 0, best_v = 0, best_sep = -1;
            for (int attempt = 0; attempt < 12; ++attempt) {
                double u = uniform(margin, W - 1 - margin);
                double v = uniform(margin, H - 1 - margin);
                double sep = 1e18;
                for (const auto& other : leaves)
                    sep = std::min(sep, std::hypot(u - other.cu, v - other.cv) - (leaf.a + other.a));
                if (sep > best_sep) {
                    best_sep = sep;
                    best_u = u;
                    best_v = v;
                }
                if (sep > 0) break;
            }
            leaf.cu = best_u;
            leaf.cv = best_v;
        }
        leaves.push_back(leaf);
    }

    // Composite depth far-to-near. Pixels covered by more than one leaf are
    // stereo failures: depth invalid inside every covering mask.
    scene.depth = DepthMap(W, H, 0.f);
    const bool has_bg = params.background_offset >= 0;
    const float bg_depth = static_cast<float>(params.canopy_depth + params.background_offset);

    std::vector<int> cover(static_cast<size_t>(W) * H, 0);
    std::vector<int> owner(static_cast<size_t>(W) * H, -1);  // index into leaves
    std::vector<size_t> order(leaves.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t i, size_t j) { return leaves[i].z0 > leaves[j].z0; });

    for (size_t oi : order) {
        const LeafSpec& leaf = leaves[oi];
        int u0 = std::max(0, static_cast<int>(std::floor(leaf.cu - leaf.a)));
        int u1 = std::min(W - 1, static_cast<int>(std::ceil(leaf.cu + leaf.a)));
        int v0 = std::max(0, static_cast<int>(std::floor(leaf.cv - leaf.a)));
        int v1 = std::min(H - 1, static_cast<int>(std::ceil(leaf.cv + leaf.a)));
        for (int v = v0; v <= v1; ++v)
            for (int u = u0; u <= u1; ++u) {
                if (!leaf.inside(u, v)) continue;
                size_t idx = static_cast<size_t>(v) * W + u;
                ++cover[idx];
                owner[idx] = static_cast<int>(oi);
            }
    }

    for (int v = 0; v < H; ++v)
        for (int u = 0; u < W; ++u) {
            size_t idx = static_cast<size_t>(v) * W + u;
            if (cover[idx] > 1) {
                scene.depth.values[idx] = 0.f;  // occlusion: missing depth
            } else if (cover[idx] == 1) {
                scene.depth.values[idx] = static_cast<float>(leaves[owner[idx]].surface(u, v));
            } else if (has_bg) {
                scene.depth.values[idx] = bg_depth;
            }
        }

    // Sensor-dropout blobs inside random leaves.
    for (const auto& leaf : leaves) {
        if (uniform(0.0, 1.0) >= params.occlusion_blob_probability) continue;
        double r = uniform(0.2, 0.4) * leaf.b;
        double s = uniform(-0.5, 0.5) * leaf.a, t = uniform(-0.5, 0.5) * leaf.b;
        double ct = std::cos(leaf.theta), st = std::sin(leaf.theta);
        double hu = leaf.cu + s * ct - t * st, hv = leaf.cv + s * st + t * ct;
        int u0 = std::max(0, static_cast<int>(hu - r)), u1 = std::min(W - 1, static_cast<int>(hu + r));
        int v0 = std::max(0, static_cast<int>(hv - r)), v1 = std::min(H - 1, static_cast<int>(hv + r));
        for (int v = v0; v <= v1; ++v)
            for (int u = u0; u <= u1; ++u)
                if (std::hypot(u - hu, v - hv) <= r) scene.depth.at(u, v) = 0.f;
    }

    if (params.noise_sigma > 0) {
        std::normal_distribution<double> gauss(0.0, params.noise_sigma);
        for (auto& d : scene.depth.values)
            if (d > 0.f) d = static_cast<float>(std::max(1e-3, d + gauss(rng)));
    }

    // Masks, stems, ground truth.
    scene.instances.width = W;
    scene.instances.height = H;
    for (const auto& leaf : leaves) {
        InstanceMask inst;
        inst.id = leaf.id;
        inst.confidence = leaf.confidence;
        inst.mask = Mask(W, H);
        int u0 = std::max(0, static_cast<int>(std::floor(leaf.cu - leaf.a)));
        int u1 = std::min(W - 1, static_cast<int>(std::ceil(leaf.cu + leaf.a)));
        int v0 = std::max(0, static_cast<int>(std::floor(leaf.cv - leaf.a)));
        int v1 = std::min(H - 1, static_cast<int>(std::ceil(leaf.cv + leaf.a)));
        int set_count = 0;
        for (int v = v0; v <= v1; ++v)
            for (int u = u0; u <= u1; ++u)
                if (leaf.inside(u, v)) {
                    inst.mask.at(u, v) = 255;
                    ++set_count;
                }
        if (set_count == 0) {
            // Fully clipped away; keep the scene valid with the center pixel.
            int u = std::clamp(static_cast<int>(leaf.cu), 0, W - 1);
            int v = std::clamp(static_cast<int>(leaf.cv), 0, H - 1);
            inst.mask.at(u, v) = 255;
        }
        scene.instances.masks.push_back(std::move(inst));

        // Stem: strip along the major axis starting at the base endpoint.
        // Base = the lower (larger v) endpoint, matching downward petioles.
        double ct = std::cos(leaf.theta), st = std::sin(leaf.theta);
        double e0u = leaf.cu - leaf.a * ct, e0v = leaf.cv - leaf.a * st;
        double e1u = leaf.cu + leaf.a * ct, e1v = leaf.cv + leaf.a * st;
        bool base_is_e0 = e0v > e1v || (e0v == e1v && e0u > e1u);
        double bu = base_is_e0 ? e0u : e1u, bv = base_is_e0 ? e0v : e1v;
        double tu = base_is_e0 ? e1u : e0u, tv = base_is_e0 ? e1v : e0v;
        double axis_len = std::hypot(tu - bu, tv - bv);
        StemAnnotation stem;
        stem.base_u = bu;
        stem.base_v = bv;
        stem.dir_u = (tu - bu) / axis_len;
        stem.dir_v = (tv - bv) / axis_len;
        stem.length = 0.3 * axis_len;
        stem.width = params.stem_width;
        scene.stems[leaf.id] = stem;

        // Ground truth: midrib from just past the stem to near the tip.
        LeafGroundTruth gt;
        double m0 = stem.length + 2.0, m1 = axis_len - 3.0;
        if (m1 <= m0) {
            m0 = axis_len * 0.4;
            m1 = axis_len * 0.8;
        }
        gt.midrib_u0 = bu + stem.dir_u * m0;
        gt.midrib_v0 = bv + stem.dir_v * m0;
        gt.midrib_u1 = bu + stem.dir_u * m1;
        gt.midrib_v1 = bv + stem.dir_v * m1;

        double mm_to_px = scene.intrinsics.fx * 0.001 / leaf.z0;
        DistanceField interior = distance_transform(scene.instances.masks.back().mask);
        double dt_max = 0;
        for (double d : interior.values) dt_max = std::max(dt_max, d);
        gt.midrib_band_px = 10.0 * mm_to_px;
        gt.edge_safe_px = std::max(5.0, std::min(10.0 * mm_to_px, 0.5 * dt_max));
        gt.rho_max = params.rho_max;

        // Grasp pixel: flattest region pixel by the analytic surface gradient;
        // relax the view-ray bound, then the midrib band, if the region is empty.
        const Mask& mask = scene.instances.masks.back().mask;
        auto pick = [&](bool use_rho, bool use_band) {
            int best_u = -1, best_v = -1;
            double best_flat = -1, best_dt = -1;
            for (int v = v0; v <= v1; ++v)
                for (int u = u0; u <= u1; ++u) {
                    if (!mask.in_bounds(u, v) || !mask.at(u, v) || !scene.depth.valid(u, v)) continue;
                    if (interior.at(u, v) < gt.edge_safe_px) continue;
                    if (use_band &&
                        dist_point_segment(u, v, gt.midrib_u0, gt.midrib_v0, gt.midrib_u1, gt.midrib_v1) >
                            gt.midrib_band_px)
                        continue;
                    if (use_rho) {
                        double rho = std::hypot((u - scene.intrinsics.cx) / scene.intrinsics.fx,
                                                (v - scene.intrinsics.cy) / scene.intrinsics.fy);
                        if (rho > gt.rho_max) continue;
                    }
                    double dzdu, dzdv;
                    leaf.surface_gradient(u, v, dzdu, dzdv);
                    double flat = std::exp(-5.0 * std::hypot(dzdu, dzdv));
                    double dt = interior.at(u, v);
                    if (flat > best_flat + 1e-12 ||
                        (std::abs(flat - best_flat) <= 1e-12 && dt > best_dt)) {
                        best_flat = flat;
                        best_dt = dt;
                        best_u = u;
                        best_v = v;
                    }
                }
            return std::pair{best_u, best_v};
        };
        auto [gu, gv] = pick(true, true);
        if (gu < 0) {
            std::tie(gu, gv) = pick(false, true);
            if (gu >= 0) gt.rho_max = 1e9;
        }
        if (gu < 0) {
            std::tie(gu, gv) = pick(false, false);
            gt.rho_max = 1e9;
            gt.midrib_band_px = 1e9;
        }
        if (gu < 0) {
            // Last resort: deepest valid pixel, or any mask pixel.
            gt.edge_safe_px = 0;
            std::tie(gu, gv) = pick(false, false);
            if (gu < 0) {
                for (int v = v0; v <= v1 && gu < 0; ++v)
                    for (int u = u0; u <= u1 && gu < 0; ++u)
                        if (mask.in_bounds(u, v) && mask.at(u, v)) {
                            gu = u;
                            gv = v;
                        }
            }
        }
        gt.grasp_u = gu;
        gt.grasp_v = gv;

        int mask_px = count_set(mask), invalid_px = 0;
        for (int v = v0; v <= v1; ++v)
            for (int u = u0; u <= u1; ++u)
                if (mask.in_bounds(u, v) && mask.at(u, v) && !scene.depth.valid(u, v)) ++invalid_px;
        gt.hard_occlusion = invalid_px > 0.2 * mask_px;
        gt.hard_eccentric = leaf.ecc > 0.9;
        gt.hard_rotated = std::min(leaf.theta, std::numbers::pi - leaf.theta) > std::numbers::pi / 4;
        scene.ground_truth[leaf.id] = gt;
    }

    scene.validate();
    return scene;
}

}  // namespace leafgrasp

#include "leafgrasp/grasp_score.hpp"

#include <algorithm>
#include <cmath>

#include "leafgrasp/scene_io.hpp"

namespace leafgrasp {

std::array<double, 4> GraspScoreConfig::effective_weights() const {
    std::array<double, 4> w{drop_flatness ? 0.0 : w_flatness, drop_approach ? 0.0 : w_approach,
                            drop_edge ? 0.0 : w_edge, drop_accessibility ? 0.0 : w_accessibility};
    double sum = w[0] + w[1] + w[2] + w[3];
    if (sum <= 0) throw UsageError("grasp scoring: all features dropped");
    for (auto& x : w) x /= sum;
    return w;
}

double flatness_score(double grad_x, double grad_y, double alpha) {
    return std::exp(-alpha * std::sqrt(grad_x * grad_x + grad_y * grad_y));
}

double approach_score(const Vec3& v) {
    double n = v.norm();
    if (n <= 0) throw DataError("approach_score: zero-length view vector");
    return std::abs(v.z) / n;
}

double edge_score(double d_edge_px, double d_safe_px) {
    if (d_safe_px <= 0) return 1.0;
    return std::min(1.0, d_edge_px / d_safe_px);
}

double accessibility_score(double pixel_dist_to_center, double max_center_dist, double cos_theta) {
    return 0.7 * (1.0 - pixel_dist_to_center / max_center_dist) + 0.3 * cos_theta;
}

double stem_penalty(double d_stem_px, double alpha) {
    return std::exp(-alpha * d_stem_px);
}

double combine_grasp(double f, double a, double e, double acc, const std::array<double, 4>& w) {
    return w[0] * f + w[1] * a + w[2] * e + w[3] * acc;
}

double final_score(double s_grasp, double s_pen) {
    return s_grasp * (1.0 - s_pen);
}

Mask heuristic_stem_mask(const Mask& leaf_mask) {
    // PCA major axis of the mask; the base is the endpoint lower in the image.
    double su = 0, sv = 0;
    int n = 0;
    for (int v = 0; v < leaf_mask.height(); ++v)
        for (int u = 0; u < leaf_mask.width(); ++u)
            if (leaf_mask.at(u, v)) {
                su += u;
                sv += v;
                ++n;
            }
    Mask out(leaf_mask.width(), leaf_mask.height());
    if (n == 0) return out;
    double mu = su / n, mv = sv / n;
    double cuu = 0, cuv = 0, cvv = 0;
    for (int v = 0; v < leaf_mask.height(); ++v)
        for (int u = 0; u < leaf_mask.width(); ++u)
            if (leaf_mask.at(u, v)) {
                cuu += (u - mu) * (u - mu);
                cuv += (u - mu) * (v - mv);
                cvv += (v - mv) * (v - mv);
            }
    cuu /= n;
    cuv /= n;
    cvv /= n;
    double tr = cuu + cvv, det = cuu * cvv - cuv * cuv;
    double lam = tr * 0.5 + std::sqrt(std::max(0.0, tr * tr * 0.25 - det));
    double ax = (std::abs(cuv) > 1e-12) ? lam - cvv : 1.0;
    double ay = (std::abs(cuv) > 1e-12) ? cuv : 0.0;
    double len = std::hypot(ax, ay);
    ax /= len;
    ay /= len;

    // Project mask pixels onto the axis to find the extent.
    double lo = 1e18, hi = -1e18;
    for (int v = 0; v < leaf_mask.height(); ++v)
        for (int u = 0; u < leaf_mask.width(); ++u)
            if (leaf_mask.at(u, v)) {
                double t = (u - mu) * ax + (v - mv) * ay;
                lo = std::min(lo, t);
                hi = std::max(hi, t);
            }
    // Base endpoint = the one with the larger image v.
    double base_t = (ay >= 0) ? hi : lo;
    double band = 0.15 * (hi - lo);
    for (int v = 0; v < leaf_mask.height(); ++v)
        for (int u = 0; u < leaf_mask.width(); ++u)
            if (leaf_mask.at(u, v)) {
                double t = (u - mu) * ax + (v - mv) * ay;
                if (std::abs(t - base_t) <= band) out.at(u, v) = 255;
            }
    return out;
}

GraspScorer::GraspScorer(const Scene& scene, const LeafModel& leaf, const GraspScoreConfig& cfg)
    : scene_(scene), leaf_(leaf), cfg_(cfg), weights_(cfg.effective_weights()) {
    const Mask& mask = leaf.instance->mask;
    interior_ = distance_transform(mask);

    Mask stem;
    if (auto it = scene.stems.find(leaf.id); it != scene.stems.end()) {
        stem = stem_mask(it->second, mask.width(), mask.height());
        has_stem_ = count_set(stem) > 0;
    } else if (cfg.use_stem_heuristic) {
        stem = heuristic_stem_mask(mask);
        has_stem_ = count_set(stem) > 0;
    }
    if (has_stem_) stem_distance_ = distance_to_nearest_set(stem);

    image_center_u_ = (scene.depth.width - 1) * 0.5;
    image_center_v_ = (scene.depth.height - 1) * 0.5;
    center_d_max_ = std::hypot(image_center_u_, image_center_v_);

    for (int v = 0; v < mask.height(); ++v)
        for (int u = 0; u < mask.width(); ++u)
            if (mask.at(u, v)) {
                if (bbox_u1_ < 0) {
                    bbox_u0_ = bbox_u1_ = u;
                    bbox_v0_ = bbox_v1_ = v;
                }
                bbox_u0_ = std::min(bbox_u0_, u);
                bbox_u1_ = std::max(bbox_u1_, u);
                bbox_v0_ = std::min(bbox_v0_, v);
                bbox_v1_ = std::max(bbox_v1_, v);
            }
}

double GraspScorer::flatness_from_gradient(double gx, double gy) const {
    return flatness_score(gx, gy, cfg_.alpha_flatness);
}

double GraspScorer::stem_penalty_at(int u, int v) const {
    if (!has_stem_) return 0.0;
    return stem_penalty(stem_distance_.at(u, v), cfg_.alpha_stem);
}

std::optional<GraspCandidate> GraspScorer::score_pixel(int u, int v) const {
    const Mask& mask = leaf_.instance->mask;
    if (!mask.in_bounds(u, v) || !mask.at(u, v)) return std::nullopt;
    if (!scene_.depth.valid(u, v)) return std::nullopt;
    auto grad = depth_gradients(scene_.depth, u, v);
    if (!grad) return std::nullopt;

    GraspCandidate c;
    c.u = u;
    c.v = v;
    double z = scene_.depth.at(u, v);
    c.point = back_project(u, v, z, scene_.intrinsics);
    c.gradient_one_sided = grad->one_sided;

    c.flatness = flatness_score(grad->gx, grad->gy, cfg_.alpha_flatness);
    c.approach = approach_score(c.point);
    double d_safe_px = cfg_.d_safe_mm * 1e-3 * scene_.intrinsics.fx / z;
    c.edge = edge_score(interior_.at(u, v), d_safe_px);
    double d_center = std::hypot(u - image_center_u_, v - image_center_v_);
    double cos_theta = c.point.z / c.point.norm();
    c.accessibility = accessibility_score(d_center, center_d_max_, cos_theta);
    c.s_grasp = combine_grasp(c.flatness, c.approach, c.edge, c.accessibility, weights_);
    c.stem_missing = !has_stem_;
    c.stem_penalty = stem_penalty_at(u, v);
    c.s_final = final_score(c.s_grasp, c.stem_penalty);
    return c;
}

std::vector<GraspCandidate> GraspScorer::generate_candidates() const {
    std::vector<GraspCandidate> pool;
    const int stride = std::max(1, cfg_.candidate_stride);
    for (int v = bbox_v0_; v <= bbox_v1_; ++v) {
        if (v % stride) continue;
        for (int u = bbox_u0_; u <= bbox_u1_; ++u) {
            if (u % stride) continue;
            if (auto c = score_pixel(u, v)) pool.push_back(*c);
        }
    }
    if (pool.empty()) throw DataError("generate_candidates: leaf " + std::to_string(leaf_.id) +
                                      " has no scoreable pixel");

    std::stable_sort(pool.begin(), pool.end(), [](const GraspCandidate& a, const GraspCandidate& b) {
        if (a.s_final != b.s_final) return a.s_final > b.s_final;
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });

    std::vector<GraspCandidate> kept;
    const double min_sep2 = cfg_.candidate_min_sep * cfg_.candidate_min_sep;
    for (const auto& c : pool) {
        bool ok = true;
        for (const auto& k : kept) {
            double du = c.u - k.u, dv = c.v - k.v;
            if (du * du + dv * dv < min_sep2) {
                ok = false;
                break;
            }
        }
        if (ok) {
            kept.push_back(c);
            if (static_cast<int>(kept.size()) >= cfg_.candidate_count) break;
        }
    }
    return kept;
}

GraspCandidate GraspScorer::teacher_best() const {
    std::optional<GraspCandidate> best;
    for (int v = bbox_v0_; v <= bbox_v1_; ++v)
        for (int u = bbox_u0_; u <= bbox_u1_; ++u) {
            auto c = score_pixel(u, v);
            if (!c) continue;
            if (!best || c->s_final > best->s_final) best = c;
            // Tie rule: lexicographically smallest (u, v). The scan is
            // row-major, so this must be checked explicitly.
            else if (c->s_final == best->s_final &&
                     (c->u < best->u || (c->u == best->u && c->v < best->v)))
                best = c;
        }
    if (!best) throw DataError("teacher_best: leaf " + std::to_string(leaf_.id) + " has no scoreable pixel");
    return *best;
}

}  // namespace leafgrasp

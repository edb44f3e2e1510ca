#include "leafgrasp/leaf_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "leafgrasp/util.hpp"

namespace leafgrasp {

std::array<double, 3> LeafSelectConfig::effective_weights() const {
    std::array<double, 3> w{drop_clutter ? 0.0 : w_clutter, drop_distance ? 0.0 : w_distance,
                            drop_visibility ? 0.0 : w_visibility};
    double sum = w[0] + w[1] + w[2];
    if (sum <= 0) throw UsageError("leaf selection: all features dropped");
    for (auto& x : w) x /= sum;
    return w;
}

DistanceField leaf_context_sdf(const Scene& scene, int excluded_leaf_id, const LeafModel& leaf,
                               const LeafSelectConfig& cfg) {
    const int W = scene.depth.width, H = scene.depth.height;
    const int half = cfg.sdf_window / 2;
    // Pad beyond the search window so every in-window distance that can
    // matter (up to the window half-diagonal) is exact.
    const int pad = static_cast<int>(std::ceil(half * std::numbers::sqrt2)) + 2;
    int cu = static_cast<int>(std::lround(leaf.centroid_u));
    int cv = static_cast<int>(std::lround(leaf.centroid_v));
    int u0 = std::clamp(cu - half - pad, 0, W - 1);
    int u1 = std::clamp(cu + half + pad, 0, W - 1);
    int v0 = std::clamp(cv - half - pad, 0, H - 1);
    int v1 = std::clamp(cv + half + pad, 0, H - 1);

    Mask occupancy(u1 - u0 + 1, v1 - v0 + 1);
    for (const auto& m : scene.instances.masks) {
        if (m.id == excluded_leaf_id) continue;
        for (int v = v0; v <= v1; ++v)
            for (int u = u0; u <= u1; ++u)
                if (m.mask.at(u, v)) occupancy.at(u - u0, v - v0) = 255;
    }
    DistanceField sdf = signed_distance_field(occupancy);

    // Re-embed the crop at scene resolution so callers index scene pixels.
    DistanceField out;
    out.width = W;
    out.height = H;
    out.degenerate = sdf.degenerate;
    out.values.assign(static_cast<size_t>(W) * H, std::numeric_limits<double>::quiet_NaN());
    for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u) out.at(u, v) = sdf.at(u - u0, v - v0);
    return out;
}

double clutter_score(const LeafModel& leaf, const DistanceField& sdf, const LeafSelectConfig& cfg,
                     LeafScores* detail) {
    const int half = cfg.sdf_window / 2;
    int cu = static_cast<int>(std::lround(leaf.centroid_u));
    int cv = static_cast<int>(std::lround(leaf.centroid_v));
    int u0 = std::clamp(cu - half, 0, sdf.width - 1);
    int u1 = std::clamp(cu + half, 0, sdf.width - 1);
    int v0 = std::clamp(cv - half, 0, sdf.height - 1);
    int v1 = std::clamp(cv + half, 0, sdf.height - 1);

    double min_val = std::numeric_limits<double>::infinity();
    double max_val = -std::numeric_limits<double>::infinity();
    int min_u = cu, min_v = cv, max_u = cu, max_v = cv;
    for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u) {
            double s = sdf.at(u, v);
            if (std::isnan(s)) continue;
            if (s < min_val) {
                min_val = s;
                min_u = u;
                min_v = v;
            }
            if (s > max_val) {
                max_val = s;
                max_u = u;
                max_v = v;
            }
        }

    double d_min = std::hypot(min_u - leaf.centroid_u, min_v - leaf.centroid_v);
    double d_max = std::hypot(max_u - leaf.centroid_u, max_v - leaf.centroid_v);
    bool degenerate = (d_min + d_max) <= 0;
    double score = degenerate ? 0.5 : d_min / (d_min + d_max);
    if (detail) {
        detail->d_min = d_min;
        detail->d_max = d_max;
        detail->clutter_degenerate = degenerate;
    }
    return score;
}

double distance_score(const LeafModel& leaf, const LeafSelectConfig& cfg) {
    return std::exp(-leaf.d_mean / cfg.distance_scale);
}

double visibility_score(const LeafModel& leaf, int width, int height) {
    const Mask& mask = leaf.instance->mask;
    for (int u = 0; u < width; ++u)
        if (mask.at(u, 0) || mask.at(u, height - 1)) return 0.0;
    for (int v = 0; v < height; ++v)
        if (mask.at(0, v) || mask.at(width - 1, v)) return 0.0;

    double icu = (width - 1) * 0.5, icv = (height - 1) * 0.5;
    double d_center = std::hypot(leaf.centroid_u - icu, leaf.centroid_v - icv);
    double d_max = std::hypot(icu, icv);
    return 1.0 - d_center / d_max;
}

LeafSelection select_leaf(const Scene& scene, const LeafSelectConfig& cfg, unsigned threads) {
    scene.validate();
    const auto w = cfg.effective_weights();
    const size_t n = scene.instances.masks.size();

    std::vector<std::optional<LeafScores>> slots(n);
    std::vector<int> degenerate(n, 0);
    parallel_for(
        n,
        [&](size_t i) {
            int id = scene.instances.masks[i].id;
            LeafModel model;
            try {
                model = build_leaf_model(scene, id);
            } catch (const DataError&) {
                degenerate[i] = 1;
                return;
            }
            LeafScores s;
            s.id = id;
            DistanceField sdf = leaf_context_sdf(scene, id, model, cfg);
            s.clutter = clutter_score(model, sdf, cfg, &s);
            s.distance = distance_score(model, cfg);
            s.visibility = visibility_score(model, scene.depth.width, scene.depth.height);
            s.combined = w[0] * s.clutter + w[1] * s.distance + w[2] * s.visibility;
            slots[i] = s;
        },
        threads);

    LeafSelection out;
    for (size_t i = 0; i < n; ++i) {
        if (degenerate[i])
            out.degenerate_ids.push_back(scene.instances.masks[i].id);
        else
            out.scores.push_back(*slots[i]);
    }
    if (out.scores.empty()) throw DataError("select_leaf: no viable leaf (all degenerate)");
    std::sort(out.scores.begin(), out.scores.end(),
              [](const LeafScores& a, const LeafScores& b) { return a.id < b.id; });

    const LeafScores* best = &out.scores.front();
    for (const auto& s : out.scores)
        if (s.combined > best->combined) best = &s;  // ties keep the lowest id
    out.selected_id = best->id;
    return out;
}

}  // namespace leafgrasp

#pragma once

#include <optional>

#include "leafgrasp/distance_field.hpp"
#include "leafgrasp/geometry.hpp"

namespace leafgrasp {

struct LeafSelectConfig {
    double w_clutter = 0.35;
    double w_distance = 0.35;
    double w_visibility = 0.30;
    bool drop_clutter = false;     // ablation: zero the weight, renormalize the rest
    bool drop_distance = false;
    bool drop_visibility = false;
    double distance_scale = 0.3;   // meters
    int sdf_window = 201;          // extrema search window, pixels

    // Effective weights after drops, renormalized to sum 1.
    std::array<double, 3> effective_weights() const;
};

struct LeafScores {
    int id = 0;
    double clutter = 0;      // S_c
    double distance = 0;     // S_d
    double visibility = 0;   // S_v
    double combined = 0;     // S_leaf
    double d_min = 0, d_max = 0;  // pixel distances to SDF extrema locations
    bool clutter_degenerate = false;
};

// S_clutter = d_min / (d_min + d_max), where d_min/d_max are the pixel
// distances from the leaf centroid to the SDF minimum/maximum locations in
// the search window. The SDF must exclude this leaf from occupancy.
double clutter_score(const LeafModel& leaf, const DistanceField& sdf, const LeafSelectConfig& cfg,
                     LeafScores* detail = nullptr);

// S_distance = exp(-d_mean / 0.3)
double distance_score(const LeafModel& leaf, const LeafSelectConfig& cfg = {});

// 0 when the mask touches the image border, else 1 - d_center / d_half_diag.
double visibility_score(const LeafModel& leaf, int width, int height);

// Occupancy SDF for scoring one leaf: every other leaf's mask is occupied.
// Computed exactly on a window padded far enough for all in-window extrema.
DistanceField leaf_context_sdf(const Scene& scene, int excluded_leaf_id, const LeafModel& leaf,
                               const LeafSelectConfig& cfg);

struct LeafSelection {
    int selected_id = 0;
    std::vector<LeafScores> scores;            // all non-degenerate leaves, by id
    std::vector<int> degenerate_ids;           // excluded: no valid depth
};

// Weighted argmax over all non-degenerate leaves; ties break to lowest id.
LeafSelection select_leaf(const Scene& scene, const LeafSelectConfig& cfg = {}, unsigned threads = 0);

}  // namespace leafgrasp

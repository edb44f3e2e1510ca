#pragma once

#include <optional>

#include "leafgrasp/distance_field.hpp"
#include "leafgrasp/geometry.hpp"

namespace leafgrasp {

struct GraspScoreConfig {
    double w_flatness = 0.25;
    double w_approach = 0.40;
    double w_edge = 0.20;
    double w_accessibility = 0.15;
    bool drop_flatness = false;
    bool drop_approach = false;
    bool drop_edge = false;
    bool drop_accessibility = false;
    double alpha_flatness = 5.0;   // Eq. scale on |grad depth|, 1 / (m/px)
    double alpha_stem = 0.1;       // stem penalty decay, 1/px
    double d_safe_mm = 5.0;        // minimum safe edge distance
    int candidate_count = 20;
    double candidate_min_sep = 10; // pixels
    int candidate_stride = 2;
    bool use_stem_heuristic = false;  // fallback stem detection for unannotated scenes

    std::array<double, 4> effective_weights() const;
};

struct GraspCandidate {
    int u = 0, v = 0;
    Vec3 point;                  // back-projected 3D location
    double flatness = 0;         // F
    double approach = 0;         // A
    double edge = 0;             // E
    double accessibility = 0;    // Acc
    double s_grasp = 0;          // weighted combination
    double stem_penalty = 0;     // S_pen
    double s_final = 0;          // S_grasp * (1 - S_pen)
    bool gradient_one_sided = false;
    bool stem_missing = false;   // no stem region: penalty 0 with flag
};

// Per-pixel feature scorer over one selected leaf. Construction precomputes
// the interior distance transform and the stem distance field.
class GraspScorer {
public:
    GraspScorer(const Scene& scene, const LeafModel& leaf, const GraspScoreConfig& cfg = {});

    // Scores one pixel; empty when the pixel is outside the leaf, has no
    // valid depth, or gradients are unavailable (candidate discarded).
    std::optional<GraspCandidate> score_pixel(int u, int v) const;

    // Stride-grid scoring, sort by final score, greedy minimum-separation
    // keep until `candidate_count` kept or the pool is exhausted.
    std::vector<GraspCandidate> generate_candidates() const;

    // Full-resolution argmax of the final score; ties break to the
    // lexicographically smallest (u, v).
    GraspCandidate teacher_best() const;

    const DistanceField& interior_distance() const { return interior_; }
    bool has_stem() const { return has_stem_; }
    const Scene& scene() const { return scene_; }
    const LeafModel& leaf() const { return leaf_; }
    const GraspScoreConfig& config() const { return cfg_; }

    double flatness_from_gradient(double gx, double gy) const;
    double stem_penalty_at(int u, int v) const;

private:
    const Scene& scene_;
    const LeafModel& leaf_;
    GraspScoreConfig cfg_;
    std::array<double, 4> weights_;
    DistanceField interior_;
    DistanceField stem_distance_;
    bool has_stem_ = false;
    double image_center_u_ = 0, image_center_v_ = 0, center_d_max_ = 1;
    int bbox_u0_ = 0, bbox_u1_ = -1, bbox_v0_ = 0, bbox_v1_ = -1;
};

// Standalone formula kernels (also used by table-driven tests and the CLI).
double flatness_score(double grad_x, double grad_y, double alpha = 5.0);
double approach_score(const Vec3& camera_to_point);
double edge_score(double d_edge_px, double d_safe_px);
double accessibility_score(double pixel_dist_to_center, double max_center_dist, double cos_theta);
double stem_penalty(double d_stem_px, double alpha = 0.1);
double combine_grasp(double f, double a, double e, double acc, const std::array<double, 4>& w);
double final_score(double s_grasp, double s_pen);

// Heuristic stem region for scenes without annotations: the band of mask
// pixels within 15% of the major-axis length from the base endpoint.
Mask heuristic_stem_mask(const Mask& leaf_mask);

}  // namespace leafgrasp

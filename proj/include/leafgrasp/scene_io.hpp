#pragma once

#include <filesystem>
#include <string>

#include "leafgrasp/scene.hpp"

namespace leafgrasp {

inline constexpr int kSceneFormatVersion = 1;

// Scene directory layout:
//   manifest.json             dims, intrinsics, per-leaf metadata, ground truth
//   depth.pfm                 32-bit float PFM, meters, non-positive = invalid
//   disparity.pfm             alternative to depth.pfm; converted via Z = fx*b/d
//   mask_<id>.pgm             binary P5, 255 = leaf
Scene load_scene(const std::filesystem::path& dir);
void save_scene(const Scene& scene, const std::filesystem::path& dir);

Scene synthesize_scene(const SynthesisParams& params);

// PFM (grayscale, little-endian, bottom-up rows) and binary PGM helpers.
Image<float> read_pfm(const std::filesystem::path& path);
void write_pfm(const Image<float>& img, const std::filesystem::path& path);
Mask read_pgm_mask(const std::filesystem::path& path);
void write_pgm_mask(const Mask& mask, const std::filesystem::path& path);

// False-color PPM dump used by debug/overlay output.
void write_ppm(const Image<uint32_t>& rgb, const std::filesystem::path& path);

// Rasterizes a stem annotation onto the scene grid.
Mask stem_mask(const StemAnnotation& stem, int width, int height);

}  // namespace leafgrasp

#include "leafgrasp/scene_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace leafgrasp {

namespace {

std::string file_err(const fs::path& p, const std::string& what) {
    return p.string() + ": " + what;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError(file_err(p, "missing or unreadable file"));
    return f;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw DataError(file_err(p, "cannot open for writing"));
    return f;
}

// Reads one whitespace-delimited token, skipping comments, for PNM headers.
std::string next_token(std::istream& in) {
    std::string t;
    in >> t;
    while (!t.empty() && t[0] == '#') {
        std::string line;
        std::getline(in, line);
        in >> t;
    }
    return t;
}

}  // namespace

Image<float> read_pfm(const fs::path& path) {
    auto f = open_in(path);
    std::string magic = next_token(f);
    if (magic != "Pf") throw DataError(file_err(path, "malformed header: expected grayscale PFM magic 'Pf'"));
    int w = 0, h = 0;
    double scale = 0;
    try {
        w = std::stoi(next_token(f));
        h = std::stoi(next_token(f));
        scale = std::stod(next_token(f));
    } catch (const std::exception&) {
        throw DataError(file_err(path, "malformed header: bad dimensions or scale"));
    }
    if (w <= 0 || h <= 0) throw DataError(file_err(path, "malformed header: non-positive dimensions"));
    if (scale >= 0) throw DataError(file_err(path, "big-endian PFM not supported (scale must be negative)"));
    f.get();  // single whitespace byte after the scale line

    Image<float> img(w, h);
    std::vector<float> row(w);
    // PFM stores rows bottom-up.
    for (int v = h - 1; v >= 0; --v) {
        f.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w) * 4);
        if (!f) throw DataError(file_err(path, "truncated pixel data"));
        std::copy(row.begin(), row.end(), img.row(v));
    }
    return img;
}

void write_pfm(const Image<float>& img, const fs::path& path) {
    auto f = open_out(path);
    f << "Pf\n" << img.width() << " " << img.height() << "\n-1.0\n";
    for (int v = img.height() - 1; v >= 0; --v)
        f.write(reinterpret_cast<const char*>(img.row(v)), static_cast<std::streamsize>(img.width()) * 4);
    if (!f) throw DataError(file_err(path, "write failed"));
}

Mask read_pgm_mask(const fs::path& path) {
    auto f = open_in(path);
    if (next_token(f) != "P5") throw DataError(file_err(path, "malformed header: expected binary PGM magic 'P5'"));
    int w = 0, h = 0, maxval = 0;
    try {
        w = std::stoi(next_token(f));
        h = std::stoi(next_token(f));
        maxval = std::stoi(next_token(f));
    } catch (const std::exception&) {
        throw DataError(file_err(path, "malformed header"));
    }
    if (w <= 0 || h <= 0 || maxval != 255) throw DataError(file_err(path, "malformed header: bad dims or maxval"));
    f.get();
    Mask m(w, h);
    f.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size()));
    if (!f) throw DataError(file_err(path, "truncated pixel data"));
    for (auto& p : m.values()) p = p ? 255 : 0;
    return m;
}

void write_pgm_mask(const Mask& mask, const fs::path& path) {
    auto f = open_out(path);
    f << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
    std::vector<uint8_t> bytes(mask.values());
    for (auto& b : bytes) b = b ? 255 : 0;
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError(file_err(path, "write failed"));
}

void write_ppm(const Image<uint32_t>& rgb, const fs::path& path) {
    auto f = open_out(path);
    f << "P6\n" << rgb.width() << " " << rgb.height() << "\n255\n";
    std::vector<uint8_t> bytes;
    bytes.reserve(rgb.size() * 3);
    for (uint32_t p : rgb.values()) {
        bytes.push_back(static_cast<uint8_t>(p >> 16));
        bytes.push_back(static_cast<uint8_t>(p >> 8));
        bytes.push_back(static_cast<uint8_t>(p));
    }
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw DataError(file_err(path, "write failed"));
}

namespace {

json intrinsics_to_json(const CameraIntrinsics& k) {
    return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"baseline", k.baseline}};
}

CameraIntrinsics intrinsics_from_json(const json& j) {
    CameraIntrinsics k;
    k.fx = j.at("fx");
    k.fy = j.at("fy");
    k.cx = j.at("cx");
    k.cy = j.at("cy");
    k.baseline = j.at("baseline");
    return k;
}

json stem_to_json(const StemAnnotation& s) {
    return json{{"base_u", s.base_u}, {"base_v", s.base_v}, {"dir_u", s.dir_u},
                {"dir_v", s.dir_v},   {"length", s.length}, {"width", s.width}};
}

StemAnnotation stem_from_json(const json& j) {
    StemAnnotation s;
    s.base_u = j.at("base_u");
    s.base_v = j.at("base_v");
    s.dir_u = j.at("dir_u");
    s.dir_v = j.at("dir_v");
    s.length = j.at("length");
    s.width = j.at("width");
    return s;
}

json gt_to_json(const LeafGroundTruth& g) {
    return json{{"grasp_u", g.grasp_u},
                {"grasp_v", g.grasp_v},
                {"midrib_u0", g.midrib_u0},
                {"midrib_v0", g.midrib_v0},
                {"midrib_u1", g.midrib_u1},
                {"midrib_v1", g.midrib_v1},
                {"midrib_band_px", g.midrib_band_px},
                {"edge_safe_px", g.edge_safe_px},
                {"rho_max", g.rho_max},
                {"hard_occlusion", g.hard_occlusion},
                {"hard_eccentric", g.hard_eccentric},
                {"hard_rotated", g.hard_rotated}};
}

LeafGroundTruth gt_from_json(const json& j) {
    LeafGroundTruth g;
    g.grasp_u = j.at("grasp_u");
    g.grasp_v = j.at("grasp_v");
    g.midrib_u0 = j.at("midrib_u0");
    g.midrib_v0 = j.at("midrib_v0");
    g.midrib_u1 = j.at("midrib_u1");
    g.midrib_v1 = j.at("midrib_v1");
    g.midrib_band_px = j.at("midrib_band_px");
    g.edge_safe_px = j.at("edge_safe_px");
    g.rho_max = j.at("rho_max");
    g.hard_occlusion = j.at("hard_occlusion");
    g.hard_eccentric = j.at("hard_eccentric");
    g.hard_rotated = j.at("hard_rotated");
    return g;
}

}  // namespace

void save_scene(const Scene& scene, const fs::path& dir) {
    scene.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);

    json leaves = json::array();
    for (const auto& m : scene.instances.masks) {
        json leaf{{"id", m.id}, {"confidence", m.confidence}};
        if (auto it = scene.stems.find(m.id); it != scene.stems.end()) leaf["stem"] = stem_to_json(it->second);
        if (auto it = scene.ground_truth.find(m.id); it != scene.ground_truth.end())
            leaf["ground_truth"] = gt_to_json(it->second);
        leaves.push_back(leaf);
    }
    json manifest{{"format_version", kSceneFormatVersion},
                  {"width", scene.depth.width},
                  {"height", scene.depth.height},
                  {"intrinsics", intrinsics_to_json(scene.intrinsics)},
                  {"leaves", leaves}};

    {
        auto f = open_out(dir / "manifest.json");
        f << manifest.dump(2) << "\n";
        if (!f) throw DataError(file_err(dir / "manifest.json", "write failed"));
    }
    Image<float> depth_img(scene.depth.width, scene.depth.height);
    depth_img.values() = scene.depth.values;
    write_pfm(depth_img, dir / "depth.pfm");
    for (const auto& m : scene.instances.masks)
        write_pgm_mask(m.mask, dir / ("mask_" + std::to_string(m.id) + ".pgm"));
}

Scene load_scene(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    json manifest;
    {
        auto f = open_in(manifest_path);
        try {
            f >> manifest;
        } catch (const json::exception& e) {
            throw DataError(file_err(manifest_path, std::string("malformed manifest: ") + e.what()));
        }
    }

    Scene scene;
    int w, h;
    try {
        int version = manifest.at("format_version");
        if (version != kSceneFormatVersion)
            throw DataError(file_err(manifest_path, "unsupported format_version " + std::to_string(version)));
        w = manifest.at("width");
        h = manifest.at("height");
        scene.intrinsics = intrinsics_from_json(manifest.at("intrinsics"));
    } catch (const json::exception& e) {
        throw DataError(file_err(manifest_path, std::string("malformed manifest: ") + e.what()));
    }

    const fs::path depth_path = dir / "depth.pfm";
    const fs::path disp_path = dir / "disparity.pfm";
    Image<float> depth_img;
    if (fs::exists(depth_path)) {
        depth_img = read_pfm(depth_path);
    } else if (fs::exists(disp_path)) {
        // Disparity input: Z = fx * baseline / d, non-positive disparity = invalid.
        depth_img = read_pfm(disp_path);
        for (auto& d : depth_img.values())
            d = (std::isfinite(d) && d > 0.f)
                    ? static_cast<float>(scene.intrinsics.fx * scene.intrinsics.baseline / d)
                    : 0.f;
    } else {
        throw DataError(file_err(depth_path, "missing file (no depth.pfm or disparity.pfm)"));
    }
    if (depth_img.width() != w || depth_img.height() != h)
        throw DataError(file_err(depth_path, "dimension mismatch: manifest says " + std::to_string(w) + "x" +
                                                 std::to_string(h) + ", file is " + std::to_string(depth_img.width()) +
                                                 "x" + std::to_string(depth_img.height())));
    scene.depth.width = w;
    scene.depth.height = h;
    scene.depth.values = depth_img.values();

    scene.instances.width = w;
    scene.instances.height = h;
    try {
        for (const auto& leaf : manifest.at("leaves")) {
            InstanceMask m;
            m.id = leaf.at("id");
            m.confidence = leaf.at("confidence");
            const fs::path mask_path = dir / ("mask_" + std::to_string(m.id) + ".pgm");
            m.mask = read_pgm_mask(mask_path);
            if (m.mask.width() != w || m.mask.height() != h)
                throw DataError(file_err(mask_path, "dimension mismatch with manifest"));
            scene.instances.masks.push_back(std::move(m));
            if (leaf.contains("stem")) scene.stems[scene.instances.masks.back().id] = stem_from_json(leaf.at("stem"));
            if (leaf.contains("ground_truth"))
                scene.ground_truth[scene.instances.masks.back().id] = gt_from_json(leaf.at("ground_truth"));
        }
    } catch (const json::exception& e) {
        throw DataError(file_err(manifest_path, std::string("malformed manifest: ") + e.what()));
    }

    scene.validate();
    return scene;
}

Mask stem_mask(const StemAnnotation& stem, int width, int height) {
    Mask m(width, height);
    // Conservative bounding box, then exact parametric test per pixel.
    double r = stem.length + stem.width;
    int u0 = std::max(0, static_cast<int>(std::floor(stem.base_u - r)));
    int u1 = std::min(width - 1, static_cast<int>(std::ceil(stem.base_u + r)));
    int v0 = std::max(0, static_cast<int>(std::floor(stem.base_v - r)));
    int v1 = std::min(height - 1, static_cast<int>(std::ceil(stem.base_v + r)));
    for (int v = v0; v <= v1; ++v)
        for (int u = u0; u <= u1; ++u)
            if (stem.contains(u, v)) m.at(u, v) = 255;
    return m;
}

}  // namespace leafgrasp

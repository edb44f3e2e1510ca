#include "leafgrasp/nn/model.hpp"

#include <fstream>
#include <random>

#include "leafgrasp/nn/kernels.hpp"

namespace leafgrasp::nn {

namespace {

constexpr const char* kArchDescriptor =
    "in9x32x32|conv3x3:9-48,bn,relu,pool|conv3x3:48-96,bn,relu,pool|"
    "conv3x3:96-192,bn,relu,pool|satt:conv7x7:2-1|gap|fc:192-128,relu|"
    "fc:128-64,relu|fc:64-1|sigmoid";

}  // namespace

ParamBlock& ModelWeights::find(const std::string& name) {
    for (auto& b : blocks)
        if (b.name == name) return b;
    throw InternalError("model weights: no block named " + name);
}

const ParamBlock& ModelWeights::find(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw InternalError("model weights: no block named " + name);
}

size_t ModelWeights::parameter_count() const {
    size_t n = 0;
    for (const auto& b : blocks)
        if (b.trainable) n += b.count();
    return n;
}

uint64_t GraspPointCNN::architecture_hash() {
    return fnv1a64(std::string(kArchDescriptor));
}

ModelWeights GraspPointCNN::initialize(uint64_t seed) {
    ModelWeights weights;
    weights.init_seed = seed;
    std::mt19937_64 rng(seed);

    auto add = [&](const std::string& name, std::vector<int> shape, bool trainable) -> ParamBlock& {
        ParamBlock b;
        b.name = name;
        b.shape = std::move(shape);
        b.trainable = trainable;
        b.w.assign(b.count(), 0.f);
        if (trainable) {
            b.m.assign(b.count(), 0.0);
            b.v.assign(b.count(), 0.0);
        }
        weights.blocks.push_back(std::move(b));
        return weights.blocks.back();
    };

    // Kaiming-uniform with relu gain: U(-sqrt(6/fan_in), +sqrt(6/fan_in)).
    auto kaiming = [&](ParamBlock& b, int fan_in) {
        double bound = std::sqrt(6.0 / fan_in);
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto& x : b.w) x = static_cast<float>(dist(rng));
    };

    int in_c = kInputChannels;
    for (int i = 0; i < 3; ++i) {
        int out_c = kWidths[i];
        std::string idx = std::to_string(i + 1);
        kaiming(add("conv" + idx + ".w", {out_c, in_c, 3, 3}, true), in_c * 9);
        add("conv" + idx + ".b", {out_c}, true);
        auto& gamma = add("bn" + idx + ".gamma", {out_c}, true);
        std::fill(gamma.w.begin(), gamma.w.end(), 1.f);
        add("bn" + idx + ".beta", {out_c}, true);
        add("bn" + idx + ".rmean", {out_c}, false);
        auto& rvar = add("bn" + idx + ".rvar", {out_c}, false);
        std::fill(rvar.w.begin(), rvar.w.end(), 1.f);
        in_c = out_c;
    }
    kaiming(add("att.w", {1, 2, 7, 7}, true), 2 * 49);
    add("att.b", {1}, true);
    kaiming(add("fc1.w", {128, 192}, true), 192);
    add("fc1.b", {128}, true);
    kaiming(add("fc2.w", {64, 128}, true), 128);
    add("fc2.b", {64}, true);
    kaiming(add("fc3.w", {1, 64}, true), 64);
    add("fc3.b", {1}, true);
    return weights;
}

namespace {

template <typename T>
std::vector<T> typed(const ParamBlock& b) {
    return std::vector<T>(b.w.begin(), b.w.end());
}

}  // namespace

template <typename T>
std::vector<T> GraspPointCNN::predict(const ModelWeights& weights, const Tensor4<T>& patches,
                                      unsigned threads) {
    if (patches.c != kInputChannels || patches.h != kInputSize || patches.w != kInputSize)
        throw DataError("GraspPointCNN: input must be " + std::to_string(kInputChannels) + "x" +
                        std::to_string(kInputSize) + "x" + std::to_string(kInputSize) + ", got " +
                        patches.shape_str());

    if (threads > 1 && patches.n > 1) {
        // Samples are independent in eval mode; split the batch.
        std::vector<T> out(patches.n);
        unsigned parts = std::min<unsigned>(threads, patches.n);
        std::vector<std::thread> pool;
        size_t chunk = (patches.n + parts - 1) / parts;
        for (unsigned p = 0; p < parts; ++p) {
            pool.emplace_back([&, p] {
                size_t lo = p * chunk, hi = std::min<size_t>(lo + chunk, patches.n);
                if (lo >= hi) return;
                Tensor4<T> sub(static_cast<int>(hi - lo), patches.c, patches.h, patches.w);
                std::copy(patches.v.begin() + lo * patches.c * patches.plane(),
                          patches.v.begin() + hi * patches.c * patches.plane(), sub.v.begin());
                auto scores = predict(weights, sub, 1);
                std::copy(scores.begin(), scores.end(), out.begin() + lo);
            });
        }
        for (auto& t : pool) t.join();
        return out;
    }

    auto conv_block = [&](const Tensor4<T>& x, int i) {
        std::string idx = std::to_string(i);
        auto w = typed<T>(weights.find("conv" + idx + ".w"));
        auto b = typed<T>(weights.find("conv" + idx + ".b"));
        auto gamma = typed<T>(weights.find("bn" + idx + ".gamma"));
        auto beta = typed<T>(weights.find("bn" + idx + ".beta"));
        auto rmean = typed<T>(weights.find("bn" + idx + ".rmean"));
        auto rvar = typed<T>(weights.find("bn" + idx + ".rvar"));
        int out_c = kWidths[i - 1];
        auto y = conv2d_forward(x, w.data(), b.data(), out_c, 3, 1);
        y = batchnorm_eval(y, gamma.data(), beta.data(), rmean.data(), rvar.data());
        y = relu_forward(y);
        return maxpool2x2_forward(y);
    };

    Tensor4<T> f = conv_block(patches, 1);
    f = conv_block(f, 2);
    f = conv_block(f, 3);

    auto att_w = typed<T>(weights.find("att.w"));
    auto att_b = typed<T>(weights.find("att.b"));
    f = spatial_attention_forward(f, att_w.data(), att_b.data());
    f = global_avg_pool_forward(f);

    auto fc = [&](const Tensor4<T>& x, const char* name, int out_features, bool relu) {
        auto w = typed<T>(weights.find(std::string(name) + ".w"));
        auto b = typed<T>(weights.find(std::string(name) + ".b"));
        auto y = fully_connected_forward(x, w.data(), b.data(), out_features);
        return relu ? relu_forward(y) : y;
    };
    f = fc(f, "fc1", 128, true);
    f = fc(f, "fc2", 64, true);
    f = fc(f, "fc3", 1, false);

    std::vector<T> scores(f.n);
    for (int n = 0; n < f.n; ++n) scores[n] = sigmoid(f.at(n, 0, 0, 0));
    return scores;
}

template std::vector<float> GraspPointCNN::predict<float>(const ModelWeights&, const Tensor4<float>&, unsigned);
template std::vector<double> GraspPointCNN::predict<double>(const ModelWeights&, const Tensor4<double>&, unsigned);

// ---- serialization ----------------------------------------------------------

namespace {
constexpr char kMagic[4] = {'L', 'G', 'P', 'W'};
constexpr uint32_t kWeightsVersion = 1;
}  // namespace

void save_weights(const ModelWeights& weights, const std::filesystem::path& path) {
    std::vector<unsigned char> buf;
    buf.insert(buf.end(), kMagic, kMagic + 4);
    append_le(buf, kWeightsVersion);
    append_le(buf, GraspPointCNN::architecture_hash());
    append_le(buf, weights.init_seed);
    append_le(buf, weights.step);
    append_le(buf, static_cast<uint32_t>(weights.blocks.size()));
    for (const auto& b : weights.blocks) {
        append_le(buf, static_cast<uint16_t>(b.name.size()));
        buf.insert(buf.end(), b.name.begin(), b.name.end());
        append_le(buf, static_cast<uint8_t>(b.trainable ? 1 : 0));
        append_le(buf, static_cast<uint8_t>(b.shape.size()));
        for (int d : b.shape) append_le(buf, static_cast<uint32_t>(d));
        for (float x : b.w) append_le(buf, x);
        if (b.trainable) {
            for (double x : b.m) append_le(buf, x);
            for (double x : b.v) append_le(buf, x);
        }
    }
    append_le(buf, crc32(buf.data(), buf.size()));

    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": cannot open for writing");
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f) throw DataError(path.string() + ": write failed");
}

ModelWeights load_weights(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path.string() + ": missing or unreadable file");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (buf.size() < 4 + 4 + 8 + 8 + 8 + 4 + 4) throw DataError(path.string() + ": truncated weight file");

    const size_t body = buf.size() - 4;
    uint32_t stored_crc = read_le<uint32_t>(buf.data() + body);
    if (crc32(buf.data(), body) != stored_crc)
        throw DataError(path.string() + ": checksum failure (corrupt or truncated file)");

    size_t off = 0;
    auto take = [&](size_t n) {
        if (off + n > body) throw DataError(path.string() + ": truncated weight file");
        const unsigned char* p = buf.data() + off;
        off += n;
        return p;
    };
    if (std::memcmp(take(4), kMagic, 4) != 0) throw DataError(path.string() + ": not a weight file");
    uint32_t version = read_le<uint32_t>(take(4));
    if (version != kWeightsVersion)
        throw DataError(path.string() + ": unsupported weight format version " + std::to_string(version));
    uint64_t arch = read_le<uint64_t>(take(8));
    if (arch != GraspPointCNN::architecture_hash())
        throw DataError(path.string() + ": architecture hash mismatch");

    ModelWeights weights;
    weights.init_seed = read_le<uint64_t>(take(8));
    weights.step = read_le<uint64_t>(take(8));
    uint32_t n_blocks = read_le<uint32_t>(take(4));
    for (uint32_t i = 0; i < n_blocks; ++i) {
        ParamBlock b;
        uint16_t name_len = read_le<uint16_t>(take(2));
        const unsigned char* name = take(name_len);
        b.name.assign(reinterpret_cast<const char*>(name), name_len);
        b.trainable = read_le<uint8_t>(take(1)) != 0;
        uint8_t ndim = read_le<uint8_t>(take(1));
        for (uint8_t d = 0; d < ndim; ++d) b.shape.push_back(static_cast<int>(read_le<uint32_t>(take(4))));
        size_t count = b.count();
        b.w.resize(count);
        const unsigned char* data = take(count * 4);
        for (size_t j = 0; j < count; ++j) b.w[j] = read_le<float>(data + j * 4);
        if (b.trainable) {
            b.m.resize(count);
            b.v.resize(count);
            const unsigned char* md = take(count * 8);
            for (size_t j = 0; j < count; ++j) b.m[j] = read_le<double>(md + j * 8);
            const unsigned char* vd = take(count * 8);
            for (size_t j = 0; j < count; ++j) b.v[j] = read_le<double>(vd + j * 8);
        }
        weights.blocks.push_back(std::move(b));
    }
    if (off != body) throw DataError(path.string() + ": trailing bytes in weight file");
    return weights;
}

}  // namespace leafgrasp::nn

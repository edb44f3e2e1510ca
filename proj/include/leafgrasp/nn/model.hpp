#pragma once

#include <filesystem>

#include "leafgrasp/nn/tensor.hpp"

namespace leafgrasp::nn {

struct ParamBlock {
    std::string name;
    std::vector<int> shape;
    bool trainable = true;
    std::vector<float> w;    // stored single precision
    std::vector<double> m;   // AdamW first moment (trainable blocks)
    std::vector<double> v;   // AdamW second moment

    size_t count() const {
        size_t n = 1;
        for (int d : shape) n *= static_cast<size_t>(d);
        return n;
    }
};

// All learnable state of GraspPointCNN plus optimizer state.
struct ModelWeights {
    uint64_t init_seed = 0;
    uint64_t step = 0;  // optimizer steps taken
    std::vector<ParamBlock> blocks;

    ParamBlock& find(const std::string& name);
    const ParamBlock& find(const std::string& name) const;
    size_t parameter_count() const;  // learnable scalars only
};

// GraspPointCNN: 9x32x32 input, three conv/bn/relu/maxpool encoder blocks
// (48, 96, 192 channels), a 7x7 spatial attention gate, global average
// pooling, FC 128 -> FC 64 -> FC 1, sigmoid output.
class GraspPointCNN {
public:
    static constexpr int kInputChannels = 9;
    static constexpr int kInputSize = 32;
    static constexpr int kWidths[3] = {48, 96, 192};

    static ModelWeights initialize(uint64_t seed);
    static uint64_t architecture_hash();

    // Eval-mode forward (batchnorm running stats): scores in (0, 1).
    template <typename T>
    static std::vector<T> predict(const ModelWeights& weights, const Tensor4<T>& patches,
                                  unsigned threads = 1);
};

void save_weights(const ModelWeights& weights, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path);

}  // namespace leafgrasp::nn

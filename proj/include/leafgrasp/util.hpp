#pragma once

#include <cstdint>
#include <cstring>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace leafgrasp {

// Exit-code categories used by the CLI: usage = 1, data = 2, internal = 3.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// FNV-1a, used for config fingerprints, dataset content hashes and the
// architecture hash in the weight file header.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}
inline uint64_t fnv1a64(const std::string& s, uint64_t h = 0xcbf29ce484222325ull) {
    return fnv1a64(s.data(), s.size(), h);
}

// CRC-32 (IEEE 802.3 polynomial), used by binary file footers.
uint32_t crc32(const void* data, size_t n, uint32_t crc = 0);

// Little-endian scalar IO on byte buffers. The build targets little-endian
// hosts; this keeps the on-disk formats explicit about it.
template <typename T>
void append_le(std::vector<unsigned char>& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out.insert(out.end(), b, b + sizeof(T));
}

template <typename T>
T read_le(const unsigned char* p) {
    static_assert(std::is_trivially_copyable_v<T>);
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results must be
// written to disjoint slots so the schedule cannot affect the output.
void parallel_for(size_t n, const std::function<void(size_t)>& fn, unsigned threads = 0);

// Splitmix64; used to derive independent per-item seeds from a master seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
    uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace leafgrasp

#pragma once

#include <algorithm>
#include <cmath>

#include "leafgrasp/nn/tensor.hpp"

namespace leafgrasp::nn {

// ---- blocked matmul primitives (row-major) --------------------------------

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void mm_add(const T* A, const T* B, T* C, int M, int K, int N) {
    constexpr int MR = 4;
    int m = 0;
    for (; m + MR <= M; m += MR) {
        for (int k = 0; k < K; ++k) {
            const T a0 = A[(m + 0) * K + k], a1 = A[(m + 1) * K + k];
            const T a2 = A[(m + 2) * K + k], a3 = A[(m + 3) * K + k];
            const T* b = B + static_cast<size_t>(k) * N;
            T* c0 = C + static_cast<size_t>(m + 0) * N;
            T* c1 = C + static_cast<size_t>(m + 1) * N;
            T* c2 = C + static_cast<size_t>(m + 2) * N;
            T* c3 = C + static_cast<size_t>(m + 3) * N;
            for (int j = 0; j < N; ++j) {
                const T bj = b[j];
                c0[j] += a0 * bj;
                c1[j] += a1 * bj;
                c2[j] += a2 * bj;
                c3[j] += a3 * bj;
            }
        }
    }
    for (; m < M; ++m)
        for (int k = 0; k < K; ++k) {
            const T a = A[static_cast<size_t>(m) * K + k];
            const T* b = B + static_cast<size_t>(k) * N;
            T* c = C + static_cast<size_t>(m) * N;
            for (int j = 0; j < N; ++j) c[j] += a * b[j];
        }
}

// C[M,K] += A[M,N] * B[K,N]^T  (dot products over the shared N axis)
template <typename T>
void mm_abt(const T* A, const T* B, T* C, int M, int N, int K) {
    for (int m = 0; m < M; ++m) {
        const T* a = A + static_cast<size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const T* b = B + static_cast<size_t>(k) * N;
            T acc = 0;
            for (int j = 0; j < N; ++j) acc += a[j] * b[j];
            C[static_cast<size_t>(m) * K + k] += acc;
        }
    }
}

// C[K,N] += A[M,K]^T * B[M,N]
template <typename T>
void mm_atb(const T* A, const T* B, T* C, int M, int K, int N) {
    for (int m = 0; m < M; ++m) {
        const T* a = A + static_cast<size_t>(m) * K;
        const T* b = B + static_cast<size_t>(m) * N;
        for (int k = 0; k < K; ++k) {
            const T ak = a[k];
            T* c = C + static_cast<size_t>(k) * N;
            for (int j = 0; j < N; ++j) c[j] += ak * b[j];
        }
    }
}

// ---- conv2d (stride 1, square kernel, zero padding) -----------------------

// col[(C*K*K), (H*W)] for one sample.
template <typename T>
void im2col(const T* x, int C, int H, int W, int K, int pad, T* col) {
    const int HW = H * W;
    int row = 0;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < K; ++ky)
            for (int kx = 0; kx < K; ++kx, ++row) {
                T* out = col + static_cast<size_t>(row) * HW;
                const int dy = ky - pad, dx = kx - pad;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + dy;
                    T* o = out + static_cast<size_t>(y) * W;
                    if (sy < 0 || sy >= H) {
                        std::fill(o, o + W, T(0));
                        continue;
                    }
                    const T* src = x + (static_cast<size_t>(c) * H + sy) * W;
                    int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    for (int j = 0; j < x0; ++j) o[j] = T(0);
                    for (int j = x0; j < x1; ++j) o[j] = src[j + dx];
                    for (int j = x1; j < W; ++j) o[j] = T(0);
                }
            }
}

template <typename T>
void col2im_add(const T* col, int C, int H, int W, int K, int pad, T* x) {
    const int HW = H * W;
    int row = 0;
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < K; ++ky)
            for (int kx = 0; kx < K; ++kx, ++row) {
                const T* in = col + static_cast<size_t>(row) * HW;
                const int dy = ky - pad, dx = kx - pad;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + dy;
                    if (sy < 0 || sy >= H) continue;
                    T* dst = x + (static_cast<size_t>(c) * H + sy) * W;
                    const T* i = in + static_cast<size_t>(y) * W;
                    int x0 = std::max(0, -dx), x1 = std::min(W, W - dx);
                    for (int j = x0; j < x1; ++j) dst[j + dx] += i[j];
                }
            }
}

// w layout: [co][ci*K*K], bias [co].
template <typename T>
Tensor4<T> conv2d_forward(const Tensor4<T>& x, const T* w, const T* bias, int co, int k, int pad) {
    const int K = x.c * k * k, HW = x.h * x.w;
    Tensor4<T> y(x.n, co, x.h, x.w);
    std::vector<T> col(static_cast<size_t>(K) * HW);
    for (int n = 0; n < x.n; ++n) {
        im2col(x.slice(n, 0), x.c, x.h, x.w, k, pad, col.data());
        T* out = y.slice(n, 0);
        for (int c = 0; c < co; ++c) std::fill(out + static_cast<size_t>(c) * HW, out + (static_cast<size_t>(c) + 1) * HW, bias[c]);
        mm_add(w, col.data(), out, co, K, HW);
    }
    return y;
}

// Returns dx; accumulates dw, db.
inline Tensor4<double> conv2d_backward(const Tensor4<double>& x, const double* w, int co, int k, int pad,
                                       const Tensor4<double>& dy, double* dw, double* db) {
    const int K = x.c * k * k, HW = x.h * x.w;
    Tensor4<double> dx(x.n, x.c, x.h, x.w);
    std::vector<double> col(static_cast<size_t>(K) * HW);
    std::vector<double> dcol(static_cast<size_t>(K) * HW);
    std::vector<double> wt(static_cast<size_t>(K) * co, 0.0);
    for (int c = 0; c < co; ++c)
        for (int j = 0; j < K; ++j) wt[static_cast<size_t>(j) * co + c] = w[static_cast<size_t>(c) * K + j];

    for (int n = 0; n < x.n; ++n) {
        im2col(x.slice(n, 0), x.c, x.h, x.w, k, pad, col.data());
        const double* g = dy.slice(n, 0);
        // dw[co,K] += dy[co,HW] * col[K,HW]^T ; db += row sums of dy
        mm_abt(g, col.data(), dw, co, HW, K);
        for (int c = 0; c < co; ++c) {
            const double* gr = g + static_cast<size_t>(c) * HW;
            double acc = 0;
            for (int j = 0; j < HW; ++j) acc += gr[j];
            db[c] += acc;
        }
        // dcol[K,HW] = w^T[K,co] * dy[co,HW]
        std::fill(dcol.begin(), dcol.end(), 0.0);
        mm_add(wt.data(), g, dcol.data(), K, co, HW);
        col2im_add(dcol.data(), x.c, x.h, x.w, k, pad, dx.slice(n, 0));
    }
    return dx;
}

// ---- batchnorm -------------------------------------------------------------

inline constexpr double kBnEps = 1e-5;
inline constexpr double kBnMomentum = 0.1;

struct BatchNormCache {
    std::vector<double> mean, inv_std;  // per channel
    Tensor4<double> xhat;
};

template <typename T>
Tensor4<T> batchnorm_eval(const Tensor4<T>& x, const T* gamma, const T* beta, const T* rmean, const T* rvar) {
    Tensor4<T> y(x.n, x.c, x.h, x.w);
    const size_t plane = x.plane();
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T scale = gamma[c] / std::sqrt(rvar[c] + T(kBnEps));
            const T shift = beta[c] - rmean[c] * scale;
            const T* in = x.slice(n, c);
            T* out = y.slice(n, c);
            for (size_t j = 0; j < plane; ++j) out[j] = in[j] * scale + shift;
        }
    return y;
}

// Training mode: batch statistics (biased variance); optionally updates the
// running stats in place.
inline Tensor4<double> batchnorm_train(const Tensor4<double>& x, const double* gamma, const double* beta,
                                       double* rmean, double* rvar, bool update_running,
                                       BatchNormCache& cache) {
    const size_t plane = x.plane();
    const double m = static_cast<double>(x.n) * plane;
    cache.mean.assign(x.c, 0.0);
    cache.inv_std.assign(x.c, 0.0);
    cache.xhat = Tensor4<double>(x.n, x.c, x.h, x.w);
    Tensor4<double> y(x.n, x.c, x.h, x.w);

    for (int c = 0; c < x.c; ++c) {
        double sum = 0, sq = 0;
        for (int n = 0; n < x.n; ++n) {
            const double* in = x.slice(n, c);
            for (size_t j = 0; j < plane; ++j) {
                sum += in[j];
                sq += in[j] * in[j];
            }
        }
        const double mean = sum / m;
        const double var = std::max(0.0, sq / m - mean * mean);
        const double inv_std = 1.0 / std::sqrt(var + kBnEps);
        cache.mean[c] = mean;
        cache.inv_std[c] = inv_std;
        if (update_running) {
            rmean[c] = (1.0 - kBnMomentum) * rmean[c] + kBnMomentum * mean;
            rvar[c] = (1.0 - kBnMomentum) * rvar[c] + kBnMomentum * var;
        }
        for (int n = 0; n < x.n; ++n) {
            const double* in = x.slice(n, c);
            double* xh = cache.xhat.slice(n, c);
            double* out = y.slice(n, c);
            for (size_t j = 0; j < plane; ++j) {
                xh[j] = (in[j] - mean) * inv_std;
                out[j] = gamma[c] * xh[j] + beta[c];
            }
        }
    }
    return y;
}

inline Tensor4<double> batchnorm_backward(const Tensor4<double>& dy, const double* gamma,
                                          const BatchNormCache& cache, double* dgamma, double* dbeta) {
    const size_t plane = dy.plane();
    const double m = static_cast<double>(dy.n) * plane;
    Tensor4<double> dx(dy.n, dy.c, dy.h, dy.w);
    for (int c = 0; c < dy.c; ++c) {
        double sum_dy = 0, sum_dy_xhat = 0;
        for (int n = 0; n < dy.n; ++n) {
            const double* g = dy.slice(n, c);
            const double* xh = cache.xhat.slice(n, c);
            for (size_t j = 0; j < plane; ++j) {
                sum_dy += g[j];
                sum_dy_xhat += g[j] * xh[j];
            }
        }
        dgamma[c] += sum_dy_xhat;
        dbeta[c] += sum_dy;
        const double k = gamma[c] * cache.inv_std[c];
        for (int n = 0; n < dy.n; ++n) {
            const double* g = dy.slice(n, c);
            const double* xh = cache.xhat.slice(n, c);
            double* out = dx.slice(n, c);
            for (size_t j = 0; j < plane; ++j)
                out[j] = k * (g[j] - sum_dy / m - xh[j] * sum_dy_xhat / m);
        }
    }
    return dx;
}

// ---- relu / sigmoid --------------------------------------------------------

template <typename T>
Tensor4<T> relu_forward(const Tensor4<T>& x) {
    Tensor4<T> y = x;
    for (auto& v : y.v) v = std::max(v, T(0));
    return y;
}

inline Tensor4<double> relu_backward(const Tensor4<double>& x, const Tensor4<double>& dy) {
    Tensor4<double> dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] = x.v[i] > 0 ? dy.v[i] : 0.0;
    return dx;
}

template <typename T>
T sigmoid(T z) {
    return z >= 0 ? T(1) / (T(1) + std::exp(-z)) : std::exp(z) / (T(1) + std::exp(z));
}

// ---- max pooling 2x2 stride 2 ---------------------------------------------

// Ties route the gradient to the first maximal element in row-major window
// order.
template <typename T>
Tensor4<T> maxpool2x2_forward(const Tensor4<T>& x, std::vector<uint8_t>* argmax = nullptr) {
    if (x.h % 2 || x.w % 2) throw InternalError("maxpool2x2: odd input size " + x.shape_str());
    Tensor4<T> y(x.n, x.c, x.h / 2, x.w / 2);
    if (argmax) argmax->assign(y.size(), 0);
    size_t oi = 0;
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* in = x.slice(n, c);
            T* out = y.slice(n, c);
            for (int yo = 0; yo < y.h; ++yo)
                for (int xo = 0; xo < y.w; ++xo, ++oi) {
                    const T* p = in + (static_cast<size_t>(2 * yo) * x.w + 2 * xo);
                    T best = p[0];
                    uint8_t bi = 0;
                    const T cand[3] = {p[1], p[x.w], p[x.w + 1]};
                    for (uint8_t j = 0; j < 3; ++j)
                        if (cand[j] > best) {
                            best = cand[j];
                            bi = j + 1;
                        }
                    out[static_cast<size_t>(yo) * y.w + xo] = best;
                    if (argmax) (*argmax)[oi] = bi;
                }
        }
    return y;
}

inline Tensor4<double> maxpool2x2_backward(const Tensor4<double>& dy, const std::vector<uint8_t>& argmax,
                                           int in_h, int in_w) {
    Tensor4<double> dx(dy.n, dy.c, in_h, in_w);
    size_t oi = 0;
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            const double* g = dy.slice(n, c);
            double* out = dx.slice(n, c);
            for (int yo = 0; yo < dy.h; ++yo)
                for (int xo = 0; xo < dy.w; ++xo, ++oi) {
                    uint8_t bi = argmax[oi];
                    int dy_off = bi / 2, dx_off = bi % 2;
                    out[(static_cast<size_t>(2 * yo + dy_off)) * in_w + 2 * xo + dx_off] +=
                        g[static_cast<size_t>(yo) * dy.w + xo];
                }
        }
    return dx;
}

// ---- global average pooling -------------------------------------------------

template <typename T>
Tensor4<T> global_avg_pool_forward(const Tensor4<T>& x) {
    Tensor4<T> y(x.n, x.c, 1, 1);
    const size_t plane = x.plane();
    for (int n = 0; n < x.n; ++n)
        for (int c = 0; c < x.c; ++c) {
            const T* in = x.slice(n, c);
            T acc = 0;
            for (size_t j = 0; j < plane; ++j) acc += in[j];
            y.at(n, c, 0, 0) = acc / static_cast<T>(plane);
        }
    return y;
}

inline Tensor4<double> global_avg_pool_backward(const Tensor4<double>& dy, int in_h, int in_w) {
    Tensor4<double> dx(dy.n, dy.c, in_h, in_w);
    const double inv = 1.0 / (static_cast<double>(in_h) * in_w);
    for (int n = 0; n < dy.n; ++n)
        for (int c = 0; c < dy.c; ++c) {
            double g = dy.at(n, c, 0, 0) * inv;
            double* out = dx.slice(n, c);
            for (size_t j = 0; j < static_cast<size_t>(in_h) * in_w; ++j) out[j] = g;
        }
    return dx;
}

// ---- fully connected --------------------------------------------------------

// x: [N, D, 1, 1]; w: [out, D]; y: [N, out, 1, 1]
template <typename T>
Tensor4<T> fully_connected_forward(const Tensor4<T>& x, const T* w, const T* bias, int out_features) {
    const int D = x.c;
    Tensor4<T> y(x.n, out_features, 1, 1);
    for (int n = 0; n < x.n; ++n)
        for (int o = 0; o < out_features; ++o) y.at(n, o, 0, 0) = bias[o];
    mm_abt(x.v.data(), w, y.v.data(), x.n, D, out_features);
    return y;
}

inline Tensor4<double> fully_connected_backward(const Tensor4<double>& x, const double* w,
                                                int out_features, const Tensor4<double>& dy, double* dw,
                                                double* db) {
    const int D = x.c;
    Tensor4<double> dx(x.n, D, 1, 1);
    // dw[out,D] += dy^T x ; dx[N,D] += dy[N,out] * w[out,D]
    mm_atb(dy.v.data(), x.v.data(), dw, x.n, out_features, D);
    mm_add(dy.v.data(), w, dx.v.data(), x.n, out_features, D);
    for (int n = 0; n < x.n; ++n)
        for (int o = 0; o < out_features; ++o) db[o] += dy.at(n, o, 0, 0);
    return dx;
}

// ---- spatial attention ------------------------------------------------------
//
// F_spatial = sigmoid(Conv7x7(Concat[AvgPool_c(F), MaxPool_c(F)]))
// F_att     = F (*) F_spatial

struct AttentionCache {
    Tensor4<double> pooled;          // [N,2,H,W]
    Tensor4<double> gate;            // [N,1,H,W], after sigmoid
    std::vector<int> max_channel;    // argmax channel per (n, pixel); first max wins
};

template <typename T>
Tensor4<T> channel_pool_forward(const Tensor4<T>& x, std::vector<int>* max_channel = nullptr) {
    Tensor4<T> y(x.n, 2, x.h, x.w);
    const size_t plane = x.plane();
    if (max_channel) max_channel->assign(static_cast<size_t>(x.n) * plane, 0);
    for (int n = 0; n < x.n; ++n) {
        T* avg = y.slice(n, 0);
        T* mx = y.slice(n, 1);
        for (size_t j = 0; j < plane; ++j) {
            avg[j] = 0;
            mx[j] = x.slice(n, 0)[j];
        }
        for (int c = 0; c < x.c; ++c) {
            const T* in = x.slice(n, c);
            for (size_t j = 0; j < plane; ++j) {
                avg[j] += in[j];
                if (in[j] > mx[j]) {
                    mx[j] = in[j];
                    if (max_channel) (*max_channel)[static_cast<size_t>(n) * plane + j] = c;
                }
            }
        }
        for (size_t j = 0; j < plane; ++j) avg[j] /= static_cast<T>(x.c);
    }
    return y;
}

template <typename T>
Tensor4<T> spatial_attention_forward(const Tensor4<T>& x, const T* w7, const T* b7,
                                     AttentionCache* cache = nullptr) {
    if (x.c < 1) throw InternalError("spatial_attention: input must have at least one channel");
    std::vector<int> argmax;
    Tensor4<T> pooled = channel_pool_forward(x, cache ? &argmax : nullptr);
    Tensor4<T> gate = conv2d_forward(pooled, w7, b7, 1, 7, 3);
    for (auto& g : gate.v) g = sigmoid(g);

    Tensor4<T> y(x.n, x.c, x.h, x.w);
    const size_t plane = x.plane();
    for (int n = 0; n < x.n; ++n) {
        const T* g = gate.slice(n, 0);
        for (int c = 0; c < x.c; ++c) {
            const T* in = x.slice(n, c);
            T* out = y.slice(n, c);
            for (size_t j = 0; j < plane; ++j) out[j] = in[j] * g[j];
        }
    }
    if (cache) {
        if constexpr (std::is_same_v<T, double>) {
            cache->pooled = pooled;
            cache->gate = gate;
            cache->max_channel = std::move(argmax);
        }
    }
    return y;
}

inline Tensor4<double> spatial_attention_backward(const Tensor4<double>& x, const double* w7,
                                                  const Tensor4<double>& dy, const AttentionCache& cache,
                                                  double* dw7, double* db7) {
    const size_t plane = x.plane();
    // d_gate = sum_c dy * x ; dx (gate path applied later) = dy * gate
    Tensor4<double> dgate_post(x.n, 1, x.h, x.w);
    Tensor4<double> dx(x.n, x.c, x.h, x.w);
    for (int n = 0; n < x.n; ++n) {
        double* dgp = dgate_post.slice(n, 0);
        const double* g = cache.gate.slice(n, 0);
        for (int c = 0; c < x.c; ++c) {
            const double* in = x.slice(n, c);
            const double* gy = dy.slice(n, c);
            double* ox = dx.slice(n, c);
            for (size_t j = 0; j < plane; ++j) {
                dgp[j] += gy[j] * in[j];
                ox[j] = gy[j] * g[j];
            }
        }
        // through the sigmoid
        for (size_t j = 0; j < plane; ++j) dgp[j] *= g[j] * (1.0 - g[j]);
    }
    // through the 7x7 conv
    Tensor4<double> dpooled = conv2d_backward(cache.pooled, w7, 1, 7, 3, dgate_post, dw7, db7);
    // through the channel pools
    for (int n = 0; n < x.n; ++n) {
        const double* davg = dpooled.slice(n, 0);
        const double* dmax = dpooled.slice(n, 1);
        for (int c = 0; c < x.c; ++c) {
            double* ox = dx.slice(n, c);
            for (size_t j = 0; j < plane; ++j) ox[j] += davg[j] / x.c;
        }
        for (size_t j = 0; j < plane; ++j) {
            int c = cache.max_channel[static_cast<size_t>(n) * plane + j];
            dx.slice(n, c)[j] += dmax[j];
        }
    }
    return dx;
}

}  // namespace leafgrasp::nn

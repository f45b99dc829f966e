#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <cblas.h>

#include "softlab/error.hpp"
#include "softlab/labelkit.hpp"
#include "softlab/rng.hpp"
#include "softlab/synthgen.hpp"

namespace softlab {

// Row-major float tensor.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int d : shape) n *= static_cast<std::size_t>(d);
        data.assign(n, 0.0f);
    }

    std::size_t size() const { return data.size(); }
    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }
};

struct ConvLayer {
    int in_ch = 0, out_ch = 0;
    Tensor weight;  // [out_ch, in_ch*9]
    Tensor bias;    // [out_ch]
};

struct LinearLayer {
    int in_dim = 0, out_dim = 0;
    Tensor weight;  // [out_dim, in_dim]
    Tensor bias;    // [out_dim]
};

// Fixed family: N blocks of (3x3 conv pad 1, relu, 2x2 max pool), then
// global average pooling, then one linear head. The GAP output is the
// embedding probed for visualization.
struct Network {
    int in_h = 0, in_w = 0, in_ch = 3;
    std::vector<ConvLayer> convs;
    LinearLayer fc;

    int num_classes() const { return fc.out_dim; }
    int embedding_dim() const { return fc.in_dim; }
};

inline Network make_network(int in_h, int in_w, int in_ch,
                            const std::vector<int>& channels, int num_classes,
                            std::uint64_t seed) {
    if (in_h % (1 << channels.size()) != 0 || in_w % (1 << channels.size()) != 0)
        throw validation_error("input size must be divisible by 2^blocks");
    Network net;
    net.in_h = in_h;
    net.in_w = in_w;
    net.in_ch = in_ch;
    Rng rng(hash_combine(seed, 0x1417u));
    int c_in = in_ch;
    for (int c_out : channels) {
        ConvLayer conv;
        conv.in_ch = c_in;
        conv.out_ch = c_out;
        conv.weight = Tensor({c_out, c_in * 9});
        conv.bias = Tensor({c_out});
        const float limit = std::sqrt(6.0f / static_cast<float>(c_in * 9));
        for (float& w : conv.weight.data)
            w = static_cast<float>(rng.uniform(-limit, limit));
        net.convs.push_back(std::move(conv));
        c_in = c_out;
    }
    net.fc.in_dim = c_in;
    net.fc.out_dim = num_classes;
    net.fc.weight = Tensor({num_classes, c_in});
    net.fc.bias = Tensor({num_classes});
    const float limit = std::sqrt(6.0f / static_cast<float>(c_in));
    for (float& w : net.fc.weight.data)
        w = static_cast<float>(rng.uniform(-limit, limit));
    return net;
}

inline Network default_network(int image_size, std::uint64_t seed) {
    return make_network(image_size, image_size, 3, {16, 32, 64}, kNumClasses, seed);
}

namespace nn {

// im2col for a 3x3 kernel with pad 1: col is [C*9, H*W] row-major.
inline void im2col3x3(const float* in, int C, int H, int W, float* col) {
    const int HW = H * W;
    for (int c = 0; c < C; ++c) {
        const float* src = in + static_cast<std::ptrdiff_t>(c) * HW;
        for (int ky = -1; ky <= 1; ++ky) {
            for (int kx = -1; kx <= 1; ++kx) {
                float* dst = col + (static_cast<std::ptrdiff_t>(c) * 9 +
                                    (ky + 1) * 3 + (kx + 1)) * HW;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + ky;
                    float* row = dst + static_cast<std::ptrdiff_t>(y) * W;
                    if (sy < 0 || sy >= H) {
                        std::fill(row, row + W, 0.0f);
                        continue;
                    }
                    const float* srow = src + static_cast<std::ptrdiff_t>(sy) * W;
                    for (int x = 0; x < W; ++x) {
                        const int sx = x + kx;
                        row[x] = (sx < 0 || sx >= W) ? 0.0f : srow[sx];
                    }
                }
            }
        }
    }
}

// scatter-add transpose of im2col3x3
inline void col2im3x3(const float* col, int C, int H, int W, float* in) {
    const int HW = H * W;
    std::fill(in, in + static_cast<std::ptrdiff_t>(C) * HW, 0.0f);
    for (int c = 0; c < C; ++c) {
        float* dst = in + static_cast<std::ptrdiff_t>(c) * HW;
        for (int ky = -1; ky <= 1; ++ky) {
            for (int kx = -1; kx <= 1; ++kx) {
                const float* src = col + (static_cast<std::ptrdiff_t>(c) * 9 +
                                          (ky + 1) * 3 + (kx + 1)) * HW;
                for (int y = 0; y < H; ++y) {
                    const int sy = y + ky;
                    if (sy < 0 || sy >= H) continue;
                    const float* row = src + static_cast<std::ptrdiff_t>(y) * W;
                    float* drow = dst + static_cast<std::ptrdiff_t>(sy) * W;
                    for (int x = 0; x < W; ++x) {
                        const int sx = x + kx;
                        if (sx >= 0 && sx < W) drow[sx] += row[x];
                    }
                }
            }
        }
    }
}

}  // namespace nn

// Per-batch activation cache for backward.
struct ForwardCache {
    int batch = 0;
    // block_in[l]: input to conv l, [B, C, H, W]; conv_z[l]: pre-relu output
    std::vector<Tensor> block_in;
    std::vector<Tensor> conv_z;
    std::vector<std::vector<int>> pool_arg;  // argmax (flat spatial idx into relu map)
    std::vector<Tensor> pool_out;
    Tensor gap;     // [B, embed]
    Tensor logits;  // [B, k]
};

// Forward pass; logits plus GAP embeddings. The cache enables backward.
inline ForwardCache forward(const Network& net, const Tensor& batch) {
    if (batch.shape.size() != 4 || batch.shape[1] != net.in_ch ||
        batch.shape[2] != net.in_h || batch.shape[3] != net.in_w)
        throw validation_error("forward: input shape mismatch");
    const int B = batch.shape[0];
    const int n_blocks = static_cast<int>(net.convs.size());

    ForwardCache cache;
    cache.batch = B;
    cache.block_in.resize(static_cast<std::size_t>(n_blocks));
    cache.conv_z.resize(static_cast<std::size_t>(n_blocks));
    cache.pool_arg.resize(static_cast<std::size_t>(n_blocks));
    cache.pool_out.resize(static_cast<std::size_t>(n_blocks));

    Tensor cur = batch;
    int H = net.in_h, W = net.in_w;
    std::vector<float> col;
    for (int l = 0; l < n_blocks; ++l) {
        const ConvLayer& conv = net.convs[static_cast<std::size_t>(l)];
        const int C = conv.in_ch, OC = conv.out_ch, HW = H * W;
        cache.block_in[static_cast<std::size_t>(l)] = cur;
        Tensor z({B, OC, H, W});
        col.resize(static_cast<std::size_t>(C) * 9 * static_cast<std::size_t>(HW));
        for (int b = 0; b < B; ++b) {
            const float* in = cur.ptr() + static_cast<std::ptrdiff_t>(b) * C * HW;
            float* out = z.ptr() + static_cast<std::ptrdiff_t>(b) * OC * HW;
            nn::im2col3x3(in, C, H, W, col.data());
            cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, OC, HW, C * 9,
                        1.0f, conv.weight.ptr(), C * 9, col.data(), HW, 0.0f,
                        out, HW);
            for (int oc = 0; oc < OC; ++oc) {
                const float bias = conv.bias.data[static_cast<std::size_t>(oc)];
                float* ch = out + static_cast<std::ptrdiff_t>(oc) * HW;
                for (int i = 0; i < HW; ++i) ch[i] += bias;
            }
        }
        cache.conv_z[static_cast<std::size_t>(l)] = z;

        // relu + 2x2 max pool in one sweep
        const int PH = H / 2, PW = W / 2;
        Tensor pooled({B, OC, PH, PW});
        auto& arg = cache.pool_arg[static_cast<std::size_t>(l)];
        arg.assign(static_cast<std::size_t>(B) * OC * PH * PW, 0);
        for (int b = 0; b < B; ++b) {
            for (int oc = 0; oc < OC; ++oc) {
                const float* zc = cache.conv_z[static_cast<std::size_t>(l)].ptr() +
                                  (static_cast<std::ptrdiff_t>(b) * OC + oc) * HW;
                float* pc = pooled.ptr() +
                            (static_cast<std::ptrdiff_t>(b) * OC + oc) * PH * PW;
                int* ac = arg.data() +
                          (static_cast<std::ptrdiff_t>(b) * OC + oc) * PH * PW;
                for (int py = 0; py < PH; ++py) {
                    for (int px = 0; px < PW; ++px) {
                        int best_idx = (2 * py) * W + 2 * px;
                        float best = zc[best_idx];
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                int idx = (2 * py + dy) * W + 2 * px + dx;
                                if (zc[idx] > best) {
                                    best = zc[idx];
                                    best_idx = idx;
                                }
                            }
                        pc[py * PW + px] = best > 0.0f ? best : 0.0f;
                        ac[py * PW + px] = best_idx;
                    }
                }
            }
        }
        cache.pool_out[static_cast<std::size_t>(l)] = pooled;
        cur = cache.pool_out[static_cast<std::size_t>(l)];
        H = PH;
        W = PW;
    }

    // global average pooling over the remaining spatial extent
    const int embed = net.fc.in_dim;
    const int HW = H * W;
    cache.gap = Tensor({B, embed});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < embed; ++c) {
            const float* pc = cur.ptr() + (static_cast<std::ptrdiff_t>(b) * embed + c) * HW;
            double sum = 0.0;
            for (int i = 0; i < HW; ++i) sum += pc[i];
            cache.gap.data[static_cast<std::size_t>(b) * embed + c] =
                static_cast<float>(sum / HW);
        }

    const int K = net.fc.out_dim;
    cache.logits = Tensor({B, K});
    for (int b = 0; b < B; ++b)
        for (int k = 0; k < K; ++k) {
            double acc = net.fc.bias.data[static_cast<std::size_t>(k)];
            const float* wr = net.fc.weight.ptr() + static_cast<std::ptrdiff_t>(k) * embed;
            const float* g = cache.gap.ptr() + static_cast<std::ptrdiff_t>(b) * embed;
            for (int c = 0; c < embed; ++c) acc += static_cast<double>(wr[c]) * g[c];
            cache.logits.data[static_cast<std::size_t>(b) * K + k] =
                static_cast<float>(acc);
        }
    for (float v : cache.logits.data)
        if (!std::isfinite(v)) throw numeric_error("non-finite logits");
    return cache;
}

// Mean soft-target cross-entropy with its logit gradient:
// loss = mean_b -sum_k q_k log softmax(z)_k, dloss/dz = (softmax(z) - q)/B.
inline double soft_cross_entropy(const Tensor& logits,
                                 const std::vector<std::vector<float>>& targets,
                                 Tensor& dlogits) {
    const int B = logits.shape[0];
    const int K = logits.shape[1];
    if (static_cast<int>(targets.size()) != B)
        throw validation_error("target batch size mismatch");
    dlogits = Tensor({B, K});
    double loss = 0.0;
    for (int b = 0; b < B; ++b) {
        const float* z = logits.ptr() + static_cast<std::ptrdiff_t>(b) * K;
        for (int k = 0; k < K; ++k)
            if (!std::isfinite(z[k])) throw numeric_error("non-finite logits");
        double zmax = z[0];
        for (int k = 1; k < K; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(static_cast<double>(z[k]) - zmax);
        const double log_denom = std::log(denom);
        const auto& q = targets[static_cast<std::size_t>(b)];
        for (int k = 0; k < K; ++k) {
            const double logp = static_cast<double>(z[k]) - zmax - log_denom;
            const double p = std::exp(logp);
            loss -= static_cast<double>(q[static_cast<std::size_t>(k)]) * logp;
            dlogits.data[static_cast<std::size_t>(b) * K + k] = static_cast<float>(
                (p - static_cast<double>(q[static_cast<std::size_t>(k)])) / B);
        }
    }
    return loss / B;
}

struct Gradients {
    std::vector<Tensor> conv_w, conv_b;
    Tensor fc_w, fc_b;
};

inline Gradients zero_gradients(const Network& net) {
    Gradients g;
    for (const auto& conv : net.convs) {
        g.conv_w.emplace_back(conv.weight.shape);
        g.conv_b.emplace_back(conv.bias.shape);
    }
    g.fc_w = Tensor(net.fc.weight.shape);
    g.fc_b = Tensor(net.fc.bias.shape);
    return g;
}

// Reverse pass through linear / GAP / pool+relu / conv using the cache.
inline Gradients backward(const Network& net, const ForwardCache& cache,
                          const Tensor& dlogits) {
    if (cache.batch == 0) throw validation_error("backward: missing forward cache");
    if (dlogits.shape.size() != 2 || dlogits.shape[0] != cache.batch ||
        dlogits.shape[1] != net.fc.out_dim)
        throw validation_error("backward: dlogits shape mismatch");
    const int B = cache.batch;
    const int K = net.fc.out_dim;
    const int embed = net.fc.in_dim;
    const int n_blocks = static_cast<int>(net.convs.size());

    Gradients grads = zero_gradients(net);

    // linear head
    Tensor dgap({B, embed});
    for (int b = 0; b < B; ++b) {
        const float* dz = dlogits.ptr() + static_cast<std::ptrdiff_t>(b) * K;
        const float* g = cache.gap.ptr() + static_cast<std::ptrdiff_t>(b) * embed;
        float* dg = dgap.ptr() + static_cast<std::ptrdiff_t>(b) * embed;
        for (int k = 0; k < K; ++k) {
            grads.fc_b.data[static_cast<std::size_t>(k)] += dz[k];
            const float* wr = net.fc.weight.ptr() + static_cast<std::ptrdiff_t>(k) * embed;
            float* dwr = grads.fc_w.ptr() + static_cast<std::ptrdiff_t>(k) * embed;
            for (int c = 0; c < embed; ++c) {
                dwr[c] += dz[k] * g[c];
                dg[c] += dz[k] * wr[c];
            }
        }
    }

    // GAP: spread gradient uniformly over the final spatial extent
    int H = net.in_h >> n_blocks, W = net.in_w >> n_blocks;
    int HW = H * W;
    Tensor dcur({B, embed, H, W});
    for (int b = 0; b < B; ++b)
        for (int c = 0; c < embed; ++c) {
            const float dv =
                dgap.data[static_cast<std::size_t>(b) * embed + c] / HW;
            float* dst = dcur.ptr() + (static_cast<std::ptrdiff_t>(b) * embed + c) * HW;
            for (int i = 0; i < HW; ++i) dst[i] = dv;
        }

    std::vector<float> col, dcol;
    for (int l = n_blocks - 1; l >= 0; --l) {
        const ConvLayer& conv = net.convs[static_cast<std::size_t>(l)];
        const int OC = conv.out_ch, C = conv.in_ch;
        const int PH = H, PW = W;          // pooled extent at this block
        H *= 2; W *= 2;                    // conv extent at this block
        const int CHW = H * W;

        // pool + relu backward: route into the argmax cell where z > 0
        Tensor dz({B, OC, H, W});
        const auto& arg = cache.pool_arg[static_cast<std::size_t>(l)];
        const Tensor& z = cache.conv_z[static_cast<std::size_t>(l)];
        for (int b = 0; b < B; ++b)
            for (int oc = 0; oc < OC; ++oc) {
                const std::ptrdiff_t pbase =
                    (static_cast<std::ptrdiff_t>(b) * OC + oc) * PH * PW;
                const std::ptrdiff_t zbase =
                    (static_cast<std::ptrdiff_t>(b) * OC + oc) * CHW;
                for (int i = 0; i < PH * PW; ++i) {
                    const int idx = arg[static_cast<std::size_t>(pbase + i)];
                    if (z.data[static_cast<std::size_t>(zbase + idx)] > 0.0f)
                        dz.data[static_cast<std::size_t>(zbase + idx)] +=
                            dcur.data[static_cast<std::size_t>(pbase + i)];
                }
            }

        // conv backward
        const Tensor& in = cache.block_in[static_cast<std::size_t>(l)];
        Tensor din({B, C, H, W});
        col.resize(static_cast<std::size_t>(C) * 9 * static_cast<std::size_t>(CHW));
        dcol.resize(col.size());
        for (int b = 0; b < B; ++b) {
            const float* dout = dz.ptr() + static_cast<std::ptrdiff_t>(b) * OC * CHW;
            nn::im2col3x3(in.ptr() + static_cast<std::ptrdiff_t>(b) * C * CHW, C, H,
                          W, col.data());
            // dW += dOut * col^T
            cblas_sgemm(CblasRowMajor, CblasNoTrans, CblasTrans, OC, C * 9, CHW,
                        1.0f, dout, CHW, col.data(), CHW, 1.0f,
                        grads.conv_w[static_cast<std::size_t>(l)].ptr(), C * 9);
            // dcol = W^T * dOut
            cblas_sgemm(CblasRowMajor, CblasTrans, CblasNoTrans, C * 9, CHW, OC,
                        1.0f, conv.weight.ptr(), C * 9, dout, CHW, 0.0f,
                        dcol.data(), CHW);
            nn::col2im3x3(dcol.data(), C, H, W,
                          din.ptr() + static_cast<std::ptrdiff_t>(b) * C * CHW);
            for (int oc = 0; oc < OC; ++oc) {
                const float* dch = dout + static_cast<std::ptrdiff_t>(oc) * CHW;
                double s = 0.0;
                for (int i = 0; i < CHW; ++i) s += dch[i];
                grads.conv_b[static_cast<std::size_t>(l)]
                    .data[static_cast<std::size_t>(oc)] += static_cast<float>(s);
            }
        }
        dcur = std::move(din);
    }
    return grads;
}

// Cosine-annealed learning rate, stepped per iteration; optional warm
// restarts apply the same curve to (step mod period).
inline double cosine_lr(long step, long total_steps, double base_lr,
                        std::optional<long> restart_period = std::nullopt) {
    if (total_steps <= 0) throw validation_error("total_steps must be positive");
    if (step < 0 || step > total_steps)
        throw validation_error("step out of range");
    long num = step, den = total_steps;
    if (restart_period && *restart_period > 0) {
        num = step % *restart_period;
        den = *restart_period;
    }
    return base_lr * 0.5 *
           (1.0 + std::cos(std::numbers::pi * static_cast<double>(num) /
                           static_cast<double>(den)));
}

struct Velocity {
    std::vector<Tensor> conv_w, conv_b;
    Tensor fc_w, fc_b;
};

inline Velocity zero_velocity(const Network& net) {
    Velocity v;
    for (const auto& conv : net.convs) {
        v.conv_w.emplace_back(conv.weight.shape);
        v.conv_b.emplace_back(conv.bias.shape);
    }
    v.fc_w = Tensor(net.fc.weight.shape);
    v.fc_b = Tensor(net.fc.bias.shape);
    return v;
}

namespace nn {

inline void sgd_update(Tensor& param, const Tensor& grad, Tensor& vel, double lr,
                       double momentum, double weight_decay) {
    if (param.size() != grad.size() || param.size() != vel.size())
        throw validation_error("sgd_step: shape mismatch");
    for (std::size_t i = 0; i < param.size(); ++i) {
        // v <- m*v + g + wd*p ; p <- p - lr*v
        vel.data[i] = static_cast<float>(momentum * vel.data[i] + grad.data[i] +
                                         weight_decay * param.data[i]);
        param.data[i] -= static_cast<float>(lr * vel.data[i]);
    }
}

}  // namespace nn

inline void sgd_step(Network& net, const Gradients& grads, double lr,
                     double momentum, double weight_decay, Velocity& vel) {
    if (grads.conv_w.size() != net.convs.size())
        throw validation_error("sgd_step: gradient layer count mismatch");
    for (std::size_t l = 0; l < net.convs.size(); ++l) {
        nn::sgd_update(net.convs[l].weight, grads.conv_w[l], vel.conv_w[l], lr,
                       momentum, weight_decay);
        nn::sgd_update(net.convs[l].bias, grads.conv_b[l], vel.conv_b[l], lr,
                       momentum, weight_decay);
    }
    nn::sgd_update(net.fc.weight, grads.fc_w, vel.fc_w, lr, momentum, weight_decay);
    nn::sgd_update(net.fc.bias, grads.fc_b, vel.fc_b, lr, momentum, weight_decay);
}

// ---- training ----

enum class TargetMode { gt_soft, gt_hard, sim_soft, sim_hard };

inline std::string target_mode_name(TargetMode m) {
    switch (m) {
        case TargetMode::gt_soft: return "gt-soft";
        case TargetMode::gt_hard: return "gt-hard";
        case TargetMode::sim_soft: return "sim-soft";
        case TargetMode::sim_hard: return "sim-hard";
    }
    return "?";
}

inline TargetMode parse_target_mode(const std::string& s) {
    if (s == "gt-soft") return TargetMode::gt_soft;
    if (s == "gt-hard") return TargetMode::gt_hard;
    if (s == "sim-soft") return TargetMode::sim_soft;
    if (s == "sim-hard") return TargetMode::sim_hard;
    throw validation_error("unknown label mode: " + s);
}

struct TrainConfig {
    int epochs = 30;
    int batch_size = 128;
    double base_lr = 0.1;
    double weight_decay = 0.0005;
    double momentum = 0.9;
    bool warm_restarts = false;
    int restart_period_epochs = 0;  // used when warm_restarts
    std::uint64_t seed = 0;
    TargetMode target_mode = TargetMode::gt_soft;
    int annotators = 15;  // for sim-* modes

    void validate() const {
        if (epochs < 1 || batch_size < 1)
            throw validation_error("epochs and batch size must be positive");
        if (base_lr <= 0.0) throw validation_error("learning rate must be positive");
        if (weight_decay < 0.0 || momentum < 0.0)
            throw validation_error("rates must be non-negative");
    }
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_macro_acc = 0.0;
    double val_kl = 0.0;
    double lr = 0.0;
};

// Training target per sample, resolved from the label mode. The annotation
// stream for sim-* modes is seeded per item from (seed, item index).
inline std::vector<float> make_target(const SyntheticSample& sample,
                                      TargetMode mode, int annotators,
                                      std::uint64_t seed, int item_index) {
    const int k = sample.soft_label.num_classes();
    std::vector<float> t(static_cast<std::size_t>(k), 0.0f);
    switch (mode) {
        case TargetMode::gt_soft:
            for (int c = 0; c < k; ++c)
                t[static_cast<std::size_t>(c)] =
                    static_cast<float>(sample.soft_label.probs[static_cast<std::size_t>(c)]);
            break;
        case TargetMode::gt_hard:
            t[static_cast<std::size_t>(sample.soft_label.argmax())] = 1.0f;
            break;
        case TargetMode::sim_soft:
        case TargetMode::sim_hard: {
            auto set = simulate_annotations(
                sample.soft_label, annotators,
                hash_combine(hash_combine(seed, 0xA770u),
                             static_cast<std::uint64_t>(item_index)));
            if (mode == TargetMode::sim_soft) {
                auto avg = average(set);
                for (int c = 0; c < k; ++c)
                    t[static_cast<std::size_t>(c)] =
                        static_cast<float>(avg.probs[static_cast<std::size_t>(c)]);
            } else {
                t[static_cast<std::size_t>(majority_vote(set).class_index)] = 1.0f;
            }
            break;
        }
    }
    return t;
}

inline Tensor images_to_batch(const Dataset& ds, const std::vector<int>& indices,
                              int from, int to) {
    const int B = to - from;
    const int H = ds.manifest.image_height, W = ds.manifest.image_width;
    Tensor batch({B, 3, H, W});
    for (int b = 0; b < B; ++b) {
        const auto& img = ds.samples[static_cast<std::size_t>(
            indices[static_cast<std::size_t>(from + b)])].image;
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                for (int c = 0; c < 3; ++c)
                    batch.data[((static_cast<std::size_t>(b) * 3 + c) * H + y) * W + x] =
                        img[(static_cast<std::size_t>(y) * W + x) * 3 +
                            static_cast<std::size_t>(c)] / 255.0f;
    }
    return batch;
}

inline std::vector<int> split_indices(const Dataset& ds, SplitTag tag) {
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(ds.samples.size()); ++i)
        if (ds.samples[static_cast<std::size_t>(i)].split == tag) idx.push_back(i);
    return idx;
}

// Softmax predictions for a list of items, batched; also returns embeddings
// when a non-null pointer is given.
inline std::vector<SoftLabel> predict(const Network& net, const Dataset& ds,
                                      const std::vector<int>& indices,
                                      int batch_size = 128,
                                      std::vector<std::vector<float>>* embeddings = nullptr) {
    std::vector<SoftLabel> preds;
    preds.reserve(indices.size());
    const int n = static_cast<int>(indices.size());
    for (int from = 0; from < n; from += batch_size) {
        const int to = std::min(from + batch_size, n);
        Tensor batch = images_to_batch(ds, indices, from, to);
        ForwardCache cache = forward(net, batch);
        const int K = net.num_classes();
        for (int b = 0; b < to - from; ++b) {
            const float* z = cache.logits.ptr() + static_cast<std::ptrdiff_t>(b) * K;
            double zmax = z[0];
            for (int k = 1; k < K; ++k) zmax = std::max(zmax, static_cast<double>(z[k]));
            double denom = 0.0;
            std::vector<double> p(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) {
                p[static_cast<std::size_t>(k)] = std::exp(static_cast<double>(z[k]) - zmax);
                denom += p[static_cast<std::size_t>(k)];
            }
            for (double& v : p) v /= denom;
            preds.emplace_back(std::move(p));
            if (embeddings) {
                const float* g = cache.gap.ptr() +
                                 static_cast<std::ptrdiff_t>(b) * net.embedding_dim();
                embeddings->emplace_back(g, g + net.embedding_dim());
            }
        }
    }
    return preds;
}

}  // namespace softlab

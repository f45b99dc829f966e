#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "softlab/error.hpp"
#include "softlab/nnet.hpp"
#include "softlab/rng.hpp"

namespace softlab {

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 5000;
    double learning_rate = 200.0;
    double momentum_early = 0.5;
    double momentum_late = 0.8;
    int momentum_switch_iter = 250;
    double exaggeration_factor = 12.0;
    int exaggeration_duration = 250;
    std::uint64_t seed = 0;
};

struct Embedding2D {
    std::vector<std::array<double, 2>> points;
    std::vector<double> objective_trace;  // KL(P||Q) per iteration, unexaggerated P
};

namespace tsne_detail {

inline std::vector<double> squared_distances(const std::vector<std::vector<float>>& x) {
    const std::size_t n = x.size();
    std::vector<double> d2(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < x[i].size(); ++c) {
                const double diff = static_cast<double>(x[i][c]) - x[j][c];
                s += diff * diff;
            }
            d2[i * n + j] = s;
            d2[j * n + i] = s;
        }
    return d2;
}

// Row conditional distribution and its Shannon entropy (nats) for precision
// beta = 1/(2 sigma^2).
inline double row_entropy(const double* d2row, std::size_t n, std::size_t i,
                          double beta, double* out) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double p = (j == i) ? 0.0 : std::exp(-beta * d2row[j]);
        out[j] = p;
        sum += p;
    }
    if (sum < 1e-300) sum = 1e-300;
    double h = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] /= sum;
        if (out[j] > 1e-300) h -= out[j] * std::log(out[j]);
    }
    return h;
}

}  // namespace tsne_detail

// Per-row Gaussian affinities with bandwidth found by binary search so each
// row's perplexity (2^entropy in bits) matches the target. Rows sum to 1,
// diagonal zero.
inline std::vector<double> conditional_affinities(
    const std::vector<std::vector<float>>& features, double perplexity,
    int max_search_iters = 50, double entropy_tol = 1e-5) {
    const std::size_t n = features.size();
    // a row has n-1 neighbors, so n-1 is the largest reachable perplexity
    if (static_cast<double>(n) < perplexity + 1.0)
        throw validation_error("need perplexity <= n - 1");
    for (const auto& row : features)
        for (float v : row)
            if (!std::isfinite(v)) throw numeric_error("non-finite features");

    const auto d2 = tsne_detail::squared_distances(features);
    const double target_h = std::log(perplexity);  // entropy in nats
    std::vector<double> p(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0, beta_lo = 0.0,
               beta_hi = std::numeric_limits<double>::infinity();
        double* row = p.data() + i * n;
        for (int it = 0; it < max_search_iters; ++it) {
            const double h = tsne_detail::row_entropy(d2.data() + i * n, n, i, beta, row);
            const double diff = h - target_h;
            if (std::abs(diff) < entropy_tol) break;
            if (diff > 0.0) {  // too flat, raise beta
                beta_lo = beta;
                beta = std::isinf(beta_hi) ? beta * 2.0 : 0.5 * (beta + beta_hi);
            } else {
                beta_hi = beta;
                beta = beta_lo > 0.0 ? 0.5 * (beta + beta_lo) : beta / 2.0;
            }
        }
        // epsilon floor guards rows of duplicated points
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) row[j] = std::max(row[j], 1e-300);
            sum += row[j];
        }
        for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
    }
    return p;
}

// P = (P_c + P_c^T) / (2n)
inline std::vector<double> symmetrize(const std::vector<double>& p_cond,
                                      std::size_t n) {
    if (p_cond.size() != n * n) throw validation_error("symmetrize: not square");
    std::vector<double> p(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            p[i * n + j] = (p_cond[i * n + j] + p_cond[j * n + i]) /
                           (2.0 * static_cast<double>(n));
    return p;
}

// Exact O(n^2) T-SNE with Student-t (df=1) low-dimensional kernel, early
// exaggeration and a two-stage momentum schedule.
inline Embedding2D tsne(const std::vector<std::vector<float>>& features,
                        const TsneConfig& config) {
    if (config.iterations < 1) throw validation_error("iterations must be >= 1");
    const std::size_t n = features.size();
    auto p = symmetrize(conditional_affinities(features, config.perplexity), n);

    Embedding2D emb;
    emb.points.resize(n);
    Rng rng(hash_combine(config.seed, 0x75E3u));
    for (auto& pt : emb.points) {
        pt[0] = rng.normal() * 1e-4;
        pt[1] = rng.normal() * 1e-4;
    }
    std::vector<std::array<double, 2>> vel(n, {0.0, 0.0});
    std::vector<double> qnum(n * n, 0.0);
    emb.objective_trace.reserve(static_cast<std::size_t>(config.iterations));

    for (int iter = 0; iter < config.iterations; ++iter) {
        const bool exaggerate = iter < config.exaggeration_duration;
        const double p_scale = exaggerate ? config.exaggeration_factor : 1.0;
        const double momentum = iter < config.momentum_switch_iter
                                    ? config.momentum_early
                                    : config.momentum_late;

        // Student-t numerators and normalizer
        double qsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            qnum[i * n + i] = 0.0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = emb.points[i][0] - emb.points[j][0];
                const double dy = emb.points[i][1] - emb.points[j][1];
                const double num = 1.0 / (1.0 + dx * dx + dy * dy);
                qnum[i * n + j] = num;
                qnum[j * n + i] = num;
                qsum += 2.0 * num;
            }
        }
        if (qsum < 1e-300) qsum = 1e-300;

        // objective on the unexaggerated P, and the gradient step
        double kl = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0.0, gy = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) continue;
                const double pij = p[i * n + j];
                const double num = qnum[i * n + j];
                const double qij = std::max(num / qsum, 1e-300);
                if (pij > 1e-300 && j > i) kl += 2.0 * pij * std::log(pij / qij);
                const double coeff = 4.0 * (p_scale * pij - qij) * num;
                gx += coeff * (emb.points[i][0] - emb.points[j][0]);
                gy += coeff * (emb.points[i][1] - emb.points[j][1]);
            }
            vel[i][0] = momentum * vel[i][0] - config.learning_rate * gx;
            vel[i][1] = momentum * vel[i][1] - config.learning_rate * gy;
        }
        for (std::size_t i = 0; i < n; ++i) {
            emb.points[i][0] += vel[i][0];
            emb.points[i][1] += vel[i][1];
        }
        emb.objective_trace.push_back(kl);
    }
    return emb;
}

// GAP activations for one dataset split, order-preserving.
inline std::vector<std::vector<float>> extract_embeddings(
    const Network& net, const Dataset& ds, const std::vector<int>& indices,
    int batch_size = 128) {
    std::vector<std::vector<float>> features;
    features.reserve(indices.size());
    predict(net, ds, indices, batch_size, &features);
    return features;
}

}  // namespace softlab

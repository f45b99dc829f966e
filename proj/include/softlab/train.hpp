#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "softlab/error.hpp"
#include "softlab/metrics.hpp"
#include "softlab/nnet.hpp"
#include "softlab/synthgen.hpp"

namespace softlab {

struct TrainResult {
    Network net;
    std::vector<EpochLog> log;
};

// Mini-batch SGD: seeded shuffle per epoch, final partial batch kept, cosine
// schedule stepped per iteration over the total iteration count. Returns the
// final-epoch network.
inline TrainResult train(const Dataset& ds, const TrainConfig& config) {
    config.validate();
    auto train_idx = split_indices(ds, SplitTag::train);
    auto val_idx = split_indices(ds, SplitTag::val);
    if (train_idx.empty()) throw validation_error("empty training split");

    const int n = static_cast<int>(train_idx.size());
    const long batches_per_epoch = (n + config.batch_size - 1) / config.batch_size;
    const long total_steps = batches_per_epoch * config.epochs;
    std::optional<long> restart;
    if (config.warm_restarts && config.restart_period_epochs > 0)
        restart = batches_per_epoch * config.restart_period_epochs;

    // resolve training targets once, up front
    std::vector<std::vector<float>> targets(ds.samples.size());
    for (int i : train_idx)
        targets[static_cast<std::size_t>(i)] =
            make_target(ds.samples[static_cast<std::size_t>(i)], config.target_mode,
                        config.annotators, config.seed, i);

    std::vector<SoftLabel> val_truth;
    val_truth.reserve(val_idx.size());
    for (int i : val_idx) val_truth.push_back(ds.samples[static_cast<std::size_t>(i)].soft_label);

    TrainResult result;
    result.net = default_network(ds.manifest.image_height, config.seed);
    Velocity vel = zero_velocity(result.net);

    long step = 0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        auto order = detail::seeded_permutation(
            hash_combine(hash_combine(config.seed, 0xE90Cu),
                         static_cast<std::uint64_t>(epoch)), n);
        std::vector<int> shuffled(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i)
            shuffled[static_cast<std::size_t>(i)] =
                train_idx[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];

        double epoch_loss = 0.0;
        double last_lr = 0.0;
        for (int from = 0; from < n; from += config.batch_size) {
            const int to = std::min(from + config.batch_size, n);
            Tensor batch = images_to_batch(ds, shuffled, from, to);
            std::vector<std::vector<float>> batch_targets;
            batch_targets.reserve(static_cast<std::size_t>(to - from));
            for (int b = from; b < to; ++b)
                batch_targets.push_back(
                    targets[static_cast<std::size_t>(shuffled[static_cast<std::size_t>(b)])]);

            ForwardCache cache = forward(result.net, batch);
            Tensor dlogits;
            const double loss = soft_cross_entropy(cache.logits, batch_targets, dlogits);
            Gradients grads = backward(result.net, cache, dlogits);
            const double lr = cosine_lr(step, total_steps, config.base_lr, restart);
            sgd_step(result.net, grads, lr, config.momentum, config.weight_decay, vel);
            epoch_loss += loss * (to - from);
            last_lr = lr;
            ++step;
        }

        EpochLog entry;
        entry.epoch = epoch;
        entry.train_loss = epoch_loss / n;
        entry.lr = last_lr;
        if (!val_idx.empty()) {
            auto preds = predict(result.net, ds, val_idx, config.batch_size);
            entry.val_macro_acc = macro_accuracy(preds, val_truth);
            entry.val_kl = mean_kl(val_truth, preds);
        }
        result.log.push_back(entry);
    }
    return result;
}

// Text-table training log: epoch,train_loss,val_macro_acc,val_kl,lr.
inline void write_train_log(const std::string& path,
                            const std::vector<EpochLog>& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "epoch,train_loss,val_macro_acc,val_kl,lr\n";
    char buf[160];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f\n", e.epoch,
                      e.train_loss, e.val_macro_acc, e.val_kl, e.lr);
        out << buf;
    }
    if (!out) throw io_error("write failed: " + path);
}

inline std::vector<SoftLabel> ground_truth_labels(const Dataset& ds,
                                                  const std::vector<int>& indices) {
    std::vector<SoftLabel> out;
    out.reserve(indices.size());
    for (int i : indices) out.push_back(ds.samples[static_cast<std::size_t>(i)].soft_label);
    return out;
}

}  // namespace softlab

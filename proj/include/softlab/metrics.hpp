#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "softlab/error.hpp"
#include "softlab/labelkit.hpp"

namespace softlab {

struct EvalReport {
    double macro_acc = 0.0;
    double mean_kl = 0.0;
    double ece = 0.0;
    std::vector<double> per_class_recall;
    int n_items = 0;
};

// Unweighted mean over classes of per-class recall. Item class membership is
// the argmax of its ground-truth distribution, lowest index on ties; classes
// without samples are excluded from the mean.
inline double macro_accuracy(const std::vector<SoftLabel>& predictions,
                             const std::vector<SoftLabel>& truths,
                             std::vector<double>* per_class_recall = nullptr) {
    if (predictions.empty()) throw validation_error("empty input");
    if (predictions.size() != truths.size())
        throw validation_error("prediction/truth length mismatch");
    const int k = truths[0].num_classes();
    std::vector<long> total(static_cast<std::size_t>(k), 0);
    std::vector<long> correct(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const int t = truths[i].argmax();
        ++total[static_cast<std::size_t>(t)];
        if (predictions[i].argmax() == t) ++correct[static_cast<std::size_t>(t)];
    }
    if (per_class_recall) per_class_recall->assign(static_cast<std::size_t>(k), 0.0);
    double sum = 0.0;
    int populated = 0;
    for (int c = 0; c < k; ++c) {
        if (total[static_cast<std::size_t>(c)] == 0) continue;
        const double recall = static_cast<double>(correct[static_cast<std::size_t>(c)]) /
                              static_cast<double>(total[static_cast<std::size_t>(c)]);
        if (per_class_recall) (*per_class_recall)[static_cast<std::size_t>(c)] = recall;
        sum += recall;
        ++populated;
    }
    return sum / populated;
}

// Mean over items of sum_k q_k ln(q_k / max(p_k, 1e-12)) in nats; q is the
// ground truth, p the prediction.
inline double mean_kl(const std::vector<SoftLabel>& truths,
                      const std::vector<SoftLabel>& predictions) {
    if (truths.size() != predictions.size())
        throw validation_error("truth/prediction length mismatch");
    if (truths.empty()) throw validation_error("empty input");
    double total = 0.0;
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const auto& q = truths[i].probs;
        const auto& p = predictions[i].probs;
        if (q.size() != p.size())
            throw validation_error("class count mismatch in KL");
        double kl = 0.0;
        for (std::size_t c = 0; c < q.size(); ++c) {
            if (q[c] <= 0.0) continue;  // 0 * ln(0/.) = 0
            kl += q[c] * std::log(q[c] / std::max(p[c], 1e-12));
        }
        total += kl;
    }
    return total / static_cast<double>(truths.size());
}

// Equal-width confidence bins on max predicted probability over (1/k, 1];
// ECE = sum_bins (|bin|/n) * |bin accuracy - bin mean confidence|.
inline double expected_calibration_error(const std::vector<SoftLabel>& predictions,
                                         const std::vector<SoftLabel>& truths,
                                         int n_bins = 10) {
    if (n_bins < 1) throw validation_error("n_bins must be >= 1");
    if (predictions.empty()) throw validation_error("empty input");
    if (predictions.size() != truths.size())
        throw validation_error("prediction/truth length mismatch");
    const int k = predictions[0].num_classes();
    const double lo = 1.0 / k;
    const double width = (1.0 - lo) / n_bins;
    std::vector<long> count(static_cast<std::size_t>(n_bins), 0);
    std::vector<double> conf_sum(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<long> correct(static_cast<std::size_t>(n_bins), 0);
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int pred = predictions[i].argmax();
        const double conf = predictions[i].probs[static_cast<std::size_t>(pred)];
        int bin = static_cast<int>((conf - lo) / width);
        bin = std::max(0, std::min(n_bins - 1, bin));
        ++count[static_cast<std::size_t>(bin)];
        conf_sum[static_cast<std::size_t>(bin)] += conf;
        if (pred == truths[i].argmax()) ++correct[static_cast<std::size_t>(bin)];
    }
    const double n = static_cast<double>(predictions.size());
    double ece = 0.0;
    for (int b = 0; b < n_bins; ++b) {
        if (count[static_cast<std::size_t>(b)] == 0) continue;
        const double cnt = static_cast<double>(count[static_cast<std::size_t>(b)]);
        const double acc = static_cast<double>(correct[static_cast<std::size_t>(b)]) / cnt;
        const double conf = conf_sum[static_cast<std::size_t>(b)] / cnt;
        ece += (cnt / n) * std::abs(acc - conf);
    }
    return ece;
}

inline EvalReport evaluate(const std::vector<SoftLabel>& predictions,
                           const std::vector<SoftLabel>& truths, int n_bins = 10) {
    EvalReport r;
    r.macro_acc = macro_accuracy(predictions, truths, &r.per_class_recall);
    r.mean_kl = mean_kl(truths, predictions);
    r.ece = expected_calibration_error(predictions, truths, n_bins);
    r.n_items = static_cast<int>(predictions.size());
    return r;
}

}  // namespace softlab

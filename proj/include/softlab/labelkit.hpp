#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "softlab/error.hpp"
#include "softlab/rng.hpp"

namespace softlab {

// Probability distribution over k classes.
struct SoftLabel {
    std::vector<double> probs;

    SoftLabel() = default;
    explicit SoftLabel(std::vector<double> p) : probs(std::move(p)) { validate(); }

    static SoftLabel one_hot(int class_index, int k) {
        std::vector<double> p(static_cast<std::size_t>(k), 0.0);
        p[static_cast<std::size_t>(class_index)] = 1.0;
        return SoftLabel(std::move(p));
    }

    int num_classes() const { return static_cast<int>(probs.size()); }

    // argmax with lowest-index tie-break
    int argmax() const {
        int best = 0;
        for (int i = 1; i < num_classes(); ++i)
            if (probs[static_cast<std::size_t>(i)] >
                probs[static_cast<std::size_t>(best)])
                best = i;
        return best;
    }

    void validate() const {
        if (probs.size() < 2) throw validation_error("soft label needs k >= 2");
        double sum = 0.0;
        for (double p : probs) {
            if (!(p >= 0.0)) throw validation_error("soft label entry negative");
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw validation_error("soft label does not sum to 1");
    }
};

struct Annotation {
    int class_index = 0;
};

struct HardLabel {
    int class_index = 0;
};

// Multiset of one-hot annotations for a single item.
struct AnnotationSet {
    std::vector<Annotation> annotations;
    int k = 0;
};

// Relative majority vote, ties broken by lowest class index.
inline HardLabel majority_vote(const AnnotationSet& set) {
    if (set.annotations.empty()) throw validation_error("no annotations");
    std::vector<int> counts(static_cast<std::size_t>(set.k), 0);
    for (const auto& a : set.annotations) {
        if (a.class_index < 0 || a.class_index >= set.k)
            throw validation_error("annotation class index out of range");
        ++counts[static_cast<std::size_t>(a.class_index)];
    }
    int best = 0;
    for (int i = 1; i < set.k; ++i)
        if (counts[static_cast<std::size_t>(i)] >
            counts[static_cast<std::size_t>(best)])
            best = i;
    return HardLabel{best};
}

// Per-class annotation frequency.
inline SoftLabel average(const AnnotationSet& set) {
    if (set.annotations.empty()) throw validation_error("no annotations");
    std::vector<double> p(static_cast<std::size_t>(set.k), 0.0);
    for (const auto& a : set.annotations) {
        if (a.class_index < 0 || a.class_index >= set.k)
            throw validation_error("annotation class index out of range");
        p[static_cast<std::size_t>(a.class_index)] += 1.0;
    }
    const double n = static_cast<double>(set.annotations.size());
    for (double& v : p) v /= n;
    return SoftLabel(std::move(p));
}

// Draw one class index from a distribution by inverse CDF.
inline int categorical_draw(const SoftLabel& dist, Rng& rng) {
    double u = rng.uniform();
    double acc = 0.0;
    const int k = dist.num_classes();
    for (int i = 0; i < k; ++i) {
        acc += dist.probs[static_cast<std::size_t>(i)];
        if (u < acc) return i;
    }
    return k - 1;
}

// n_annotators iid categorical draws from the ground-truth distribution.
// flip_rate (default 0) replaces each draw with a uniform class with that
// probability, for noise experiments.
inline AnnotationSet simulate_annotations(const SoftLabel& truth,
                                          int n_annotators,
                                          std::uint64_t rng_seed,
                                          double flip_rate = 0.0) {
    truth.validate();
    if (n_annotators < 1) throw validation_error("need at least one annotator");
    Rng rng(rng_seed);
    AnnotationSet set;
    set.k = truth.num_classes();
    set.annotations.reserve(static_cast<std::size_t>(n_annotators));
    for (int i = 0; i < n_annotators; ++i) {
        int c = categorical_draw(truth, rng);
        if (flip_rate > 0.0 && rng.uniform() < flip_rate)
            c = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(set.k)));
        set.annotations.push_back(Annotation{c});
    }
    return set;
}

// Simplex sampler emulating an imbalanced real-world label profile: with
// probability pure_prob a one-hot draw from class_priors, otherwise a
// Dirichlet draw with parameter concentration * priors * k.
inline SoftLabel sample_prior_soft_label(const std::vector<double>& class_priors,
                                         double concentration, double pure_prob,
                                         std::uint64_t rng_seed) {
    SoftLabel prior(class_priors);  // validates
    if (!(concentration > 0.0))
        throw validation_error("concentration must be positive");
    if (pure_prob < 0.0 || pure_prob > 1.0)
        throw validation_error("pure_prob must be in [0,1]");
    Rng rng(rng_seed);
    const int k = prior.num_classes();
    if (rng.uniform() < pure_prob)
        return SoftLabel::one_hot(categorical_draw(prior, rng), k);
    std::vector<double> draw(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (int i = 0; i < k; ++i) {
        double alpha = concentration * class_priors[static_cast<std::size_t>(i)] *
                       static_cast<double>(k);
        double g = rng.gamma(std::max(alpha, 1e-9));
        draw[static_cast<std::size_t>(i)] = g;
        sum += g;
    }
    if (sum <= 0.0) return SoftLabel::one_hot(0, k);
    for (double& v : draw) v /= sum;
    return SoftLabel(std::move(draw));
}

// Text-table serialization: one line per annotation,
// item_index,annotator_index,class_index with a header row.
inline void write_annotation_table(const std::string& path,
                                   const std::vector<AnnotationSet>& sets) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "item_index,annotator_index,class_index\n";
    for (std::size_t item = 0; item < sets.size(); ++item)
        for (std::size_t j = 0; j < sets[item].annotations.size(); ++j)
            out << item << ',' << j << ','
                << sets[item].annotations[j].class_index << '\n';
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace softlab

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "softlab/labelkit.hpp"

using namespace softlab;

namespace {

AnnotationSet make_set(std::initializer_list<int> classes, int k) {
    AnnotationSet set;
    set.k = k;
    for (int c : classes) set.annotations.push_back(Annotation{c});
    return set;
}

}  // namespace

TEST_CASE("majority_vote basics") {
    CHECK(majority_vote(make_set({0, 0, 1}, 3)).class_index == 0);
    // tie broken by lowest class index
    CHECK(majority_vote(make_set({0, 1}, 2)).class_index == 0);
    CHECK(majority_vote(make_set({1, 0}, 2)).class_index == 0);

    AnnotationSet unanimous;
    unanimous.k = 3;
    for (int i = 0; i < 15; ++i) unanimous.annotations.push_back(Annotation{2});
    CHECK(majority_vote(unanimous).class_index == 2);

    CHECK_THROWS_WITH_AS(majority_vote(AnnotationSet{{}, 3}), "no annotations",
                         Error);
}

TEST_CASE("average basics") {
    auto l = average(make_set({0, 1}, 3));
    CHECK(l.probs[0] == doctest::Approx(0.5));
    CHECK(l.probs[1] == doctest::Approx(0.5));
    CHECK(l.probs[2] == doctest::Approx(0.0));

    auto l2 = average(make_set({0, 0, 1}, 2));
    CHECK(l2.probs[0] == doctest::Approx(2.0 / 3.0));
    CHECK(l2.probs[1] == doctest::Approx(1.0 / 3.0));

    AnnotationSet unanimous;
    unanimous.k = 3;
    for (int i = 0; i < 15; ++i) unanimous.annotations.push_back(Annotation{1});
    auto l3 = average(unanimous);
    CHECK(l3.probs == std::vector<double>{0.0, 1.0, 0.0});

    CHECK_THROWS_AS(average(AnnotationSet{{}, 2}), Error);
}

TEST_CASE("average is permutation invariant") {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(5));
        const int n = 1 + static_cast<int>(rng.uniform_index(25));
        AnnotationSet set;
        set.k = k;
        for (int i = 0; i < n; ++i)
            set.annotations.push_back(
                Annotation{static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k)))});
        auto shuffled = set;
        for (int i = n - 1; i > 0; --i)
            std::swap(shuffled.annotations[static_cast<std::size_t>(i)],
                      shuffled.annotations[rng.uniform_index(static_cast<std::uint64_t>(i) + 1)]);
        CHECK(average(set).probs == average(shuffled).probs);
    }
}

TEST_CASE("aggregation law: majority vote equals argmax of average") {
    Rng rng(99);
    for (int trial = 0; trial < 10000; ++trial) {
        const int k = 2 + static_cast<int>(rng.uniform_index(5));
        const int n = 1 + static_cast<int>(rng.uniform_index(25));
        AnnotationSet set;
        set.k = k;
        for (int i = 0; i < n; ++i)
            set.annotations.push_back(
                Annotation{static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(k)))});
        REQUIRE(majority_vote(set).class_index == average(set).argmax());
    }
}

TEST_CASE("simulate_annotations") {
    auto pure = SoftLabel::one_hot(0, 3);
    auto set = simulate_annotations(pure, 20, 5);
    for (const auto& a : set.annotations) CHECK(a.class_index == 0);

    // determinism
    auto a1 = simulate_annotations(SoftLabel({0.3, 0.7}), 50, 123);
    auto a2 = simulate_annotations(SoftLabel({0.3, 0.7}), 50, 123);
    for (std::size_t i = 0; i < a1.annotations.size(); ++i)
        CHECK(a1.annotations[i].class_index == a2.annotations[i].class_index);

    // law of large numbers
    auto big = simulate_annotations(SoftLabel({0.5, 0.5}), 10000, 7);
    int zeros = 0;
    for (const auto& a : big.annotations) zeros += a.class_index == 0;
    CHECK(std::abs(zeros / 10000.0 - 0.5) < 0.02);

    CHECK_THROWS_AS(simulate_annotations(pure, 0, 1), Error);
}

TEST_CASE("simulate then average converges to the truth") {
    SoftLabel q({0.6, 0.25, 0.1, 0.05});
    auto avg = average(simulate_annotations(q, 100000, 31));
    for (int c = 0; c < 4; ++c)
        CHECK(std::abs(avg.probs[static_cast<std::size_t>(c)] -
                       q.probs[static_cast<std::size_t>(c)]) <= 0.01);
}

TEST_CASE("one-hot is a fixed point of simulate then average") {
    for (int n : {1, 5, 15, 100}) {
        auto q = SoftLabel::one_hot(2, 4);
        auto avg = average(simulate_annotations(q, n, static_cast<std::uint64_t>(n)));
        CHECK(avg.probs == q.probs);
    }
}

TEST_CASE("sample_prior_soft_label") {
    std::vector<double> priors{0.7, 0.15, 0.15};

    SUBCASE("pure_prob 1 gives one-hot draws matching the priors") {
        std::vector<int> counts(3, 0);
        for (int i = 0; i < 10000; ++i) {
            auto l = sample_prior_soft_label(priors, 1.0, 1.0,
                                             static_cast<std::uint64_t>(i));
            int nonzero = 0, cls = -1;
            for (int c = 0; c < 3; ++c)
                if (l.probs[static_cast<std::size_t>(c)] > 0) {
                    ++nonzero;
                    cls = c;
                }
            REQUIRE(nonzero == 1);
            ++counts[static_cast<std::size_t>(cls)];
        }
        for (int c = 0; c < 3; ++c)
            CHECK(std::abs(counts[static_cast<std::size_t>(c)] / 10000.0 -
                           priors[static_cast<std::size_t>(c)]) < 0.02);
    }

    SUBCASE("larger concentration pulls draws toward the priors") {
        auto max_dev = [&](double conc) {
            double worst = 0.0;
            for (int i = 0; i < 1000; ++i) {
                auto l = sample_prior_soft_label(priors, conc, 0.0,
                                                 static_cast<std::uint64_t>(i));
                for (int c = 0; c < 3; ++c)
                    worst = std::max(worst,
                                     std::abs(l.probs[static_cast<std::size_t>(c)] -
                                              priors[static_cast<std::size_t>(c)]));
            }
            return worst;
        };
        CHECK(max_dev(1000.0) < max_dev(10.0));
        CHECK(max_dev(10000.0) < max_dev(100.0));
    }

    SUBCASE("every draw lives on the simplex") {
        for (int i = 0; i < 200; ++i) {
            auto l = sample_prior_soft_label({0.5, 0.5}, 2.0, 0.3,
                                             static_cast<std::uint64_t>(i));
            double sum = 0.0;
            for (double p : l.probs) {
                CHECK(p >= 0.0);
                sum += p;
            }
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        }
    }

    CHECK_THROWS_AS(sample_prior_soft_label({0.5, 0.6}, 1.0, 0.5, 1), Error);
    CHECK_THROWS_AS(sample_prior_soft_label(priors, 0.0, 0.5, 1), Error);
}

TEST_CASE("annotation table format") {
    std::vector<AnnotationSet> sets{make_set({1, 0}, 3), make_set({2}, 3)};
    const std::string path = "test_annotations.csv";
    write_annotation_table(path, sets);
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "item_index,annotator_index,class_index");
    std::getline(in, line);
    CHECK(line == "0,0,1");
    std::getline(in, line);
    CHECK(line == "0,1,0");
    std::getline(in, line);
    CHECK(line == "1,0,2");
    std::remove(path.c_str());
}

TEST_CASE("soft label validation") {
    CHECK_THROWS_AS(SoftLabel({0.5}), Error);
    CHECK_THROWS_AS(SoftLabel({0.5, 0.6}), Error);
    CHECK_THROWS_AS(SoftLabel({-0.1, 1.1}), Error);
    CHECK(SoftLabel({0.25, 0.75}).argmax() == 1);
    CHECK(SoftLabel({0.5, 0.5}).argmax() == 0);  // lowest-index tie-break
}

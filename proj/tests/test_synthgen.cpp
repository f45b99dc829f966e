#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "softlab/synthgen.hpp"

using namespace softlab;

TEST_CASE("soft_label_of hand cases") {
    // pure red circle
    InterpolationState pure{0, 0.0, 0.0};
    auto l = soft_label_of(pure);
    CHECK(l.probs == std::vector<double>{1, 0, 0, 0, 0, 0});

    // half red/green, circle
    auto l2 = soft_label_of({0, 0.5, 0.0});
    CHECK(l2.probs[0] == doctest::Approx(0.5));
    CHECK(l2.probs[2] == doctest::Approx(0.5));
    CHECK(l2.probs[1] == 0.0);
    CHECK(l2.probs[3] == 0.0);

    // half red/green, half circle/ellipse
    auto l3 = soft_label_of({0, 0.5, 0.5});
    for (int c = 0; c < 4; ++c)
        CHECK(l3.probs[static_cast<std::size_t>(c)] == doctest::Approx(0.25));
    CHECK(l3.probs[4] == 0.0);
    CHECK(l3.probs[5] == 0.0);
}

TEST_CASE("soft labels sum to 1 with support <= 4") {
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) {
        InterpolationState st{static_cast<int>(rng.uniform_index(3)),
                              rng.uniform(), rng.uniform()};
        auto l = soft_label_of(st);
        double sum = 0.0;
        int support = 0;
        for (double p : l.probs) {
            sum += p;
            support += p > 0.0;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(support <= 4);
    }
}

TEST_CASE("pure states are one-hot, interpolated are not") {
    for (int cls = 0; cls < 6; ++cls) {
        InterpolationState st{cls / 2, 0.0, static_cast<double>(cls % 2)};
        CHECK(soft_label_of(st).probs[static_cast<std::size_t>(cls)] == 1.0);
    }
    auto interp = soft_label_of({1, 0.3, 0.0});
    double maxp = *std::max_element(interp.probs.begin(), interp.probs.end());
    CHECK(maxp < 1.0);
}

TEST_CASE("sample_state composition and determinism") {
    const int count = 600;
    int pure = 0;
    for (int i = 0; i < count; ++i) {
        auto st = sample_state(9, i, count, 0.4);
        bool is_pure = (st.t_color == 0.0 || st.t_color == 1.0) &&
                       (st.t_shape == 0.0 || st.t_shape == 1.0);
        pure += is_pure;
    }
    CHECK(pure >= static_cast<int>(0.4 * count));  // interp families can also sit at endpoints only w.p. 0

    // exact count via the labels: one-hot iff pure by construction
    int one_hot = 0;
    for (int i = 0; i < count; ++i) {
        auto l = soft_label_of(sample_state(9, i, count, 0.4));
        one_hot += *std::max_element(l.probs.begin(), l.probs.end()) == 1.0;
    }
    CHECK(one_hot == 240);

    // pure_fraction 1 gives only one-hot labels
    for (int i = 0; i < 60; ++i) {
        auto l = soft_label_of(sample_state(9, i, 60, 1.0));
        CHECK(*std::max_element(l.probs.begin(), l.probs.end()) == 1.0);
    }

    auto s1 = sample_state(9, 17, count, 0.4);
    auto s2 = sample_state(9, 17, count, 0.4);
    CHECK(s1.edge == s2.edge);
    CHECK(s1.t_color == s2.t_color);
    CHECK(s1.t_shape == s2.t_shape);
}

TEST_CASE("render: circle extent, pure color, coverage area") {
    SUBCASE("pure circle is round") {
        InterpolationState st{0, 0.0, 0.0};
        auto img = render(st, 32, 32, 4);
        int min_x = 32, max_x = -1, min_y = 32, max_y = -1;
        for (int y = 0; y < 32; ++y)
            for (int x = 0; x < 32; ++x)
                if (img[(static_cast<std::size_t>(y) * 32 + x) * 3] > 0) {
                    min_x = std::min(min_x, x);
                    max_x = std::max(max_x, x);
                    min_y = std::min(min_y, y);
                    max_y = std::max(max_y, y);
                }
        const double rx = max_x - min_x + 1, ry = max_y - min_y + 1;
        CHECK(std::abs(rx / ry - 1.0) < 0.15);  // anti-aliasing tolerance
    }

    SUBCASE("pure red fill has zero G and B everywhere") {
        InterpolationState st{0, 0.0, 0.0};
        auto img = render(st, 32, 32, 11);
        bool any_fg = false;
        for (std::size_t p = 0; p < img.size(); p += 3) {
            CHECK(img[p + 1] == 0);
            CHECK(img[p + 2] == 0);
            any_fg = any_fg || img[p] > 0;
        }
        CHECK(any_fg);
    }

    SUBCASE("coverage mass matches the ellipse area formula") {
        // average over seeds; a ~ U(8,12), b = a for circles
        InterpolationState st{0, 0.0, 0.0};
        for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
            Rng probe(seed);  // replicate the renderer's geometry draws
            probe.uniform(-3.0, 3.0);
            probe.uniform(-3.0, 3.0);
            const double a = probe.uniform(8.0, 12.0);
            auto img = render(st, 48, 48, seed);
            double coverage = 0.0;
            for (std::size_t p = 0; p < img.size(); p += 3)
                coverage += img[p] / 255.0;
            const double expected = std::numbers::pi * a * a;
            CHECK(std::abs(coverage - expected) / expected < 0.05);
        }
    }

    CHECK_THROWS_AS(render({0, 0.0, 0.0}, 8, 32, 1), Error);
}

TEST_CASE("generate_dataset composition") {
    DatasetManifest m;
    m.seed = 5;
    m.count = 300;
    auto ds = generate_dataset(m);
    int n_train = 0, n_val = 0, n_test = 0;
    for (const auto& s : ds.samples) {
        n_train += s.split == SplitTag::train;
        n_val += s.split == SplitTag::val;
        n_test += s.split == SplitTag::test;
    }
    CHECK(n_train == 180);
    CHECK(n_val == 60);
    CHECK(n_test == 60);

    SUBCASE("small-count split exactness") {
        DatasetManifest m10 = m;
        m10.count = 10;
        auto sizes = split_sizes(10, m10.split_fractions);
        CHECK(sizes == std::array<int, 3>{6, 2, 2});
    }

    SUBCASE("bad fractions rejected") {
        DatasetManifest bad = m;
        bad.split_fractions = {0.5, 0.2, 0.2};
        CHECK_THROWS_AS(generate_dataset(bad), Error);
    }
}

TEST_CASE("SLD1 round trip is bit-exact") {
    DatasetManifest m;
    m.seed = 21;
    m.count = 40;
    auto ds = generate_dataset(m);
    const std::string path = "test_roundtrip.sld";
    write_dataset(path, ds);
    auto back = read_dataset(path);
    REQUIRE(back.samples.size() == ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        CHECK(back.samples[i].image == ds.samples[i].image);
        CHECK(back.samples[i].split == ds.samples[i].split);
        CHECK(back.samples[i].soft_label.probs == ds.samples[i].soft_label.probs);
    }
    CHECK(back.manifest.seed == m.seed);

    // rewriting the read dataset reproduces the file byte-for-byte
    write_dataset("test_roundtrip2.sld", back);
    std::ifstream f1(path, std::ios::binary), f2("test_roundtrip2.sld", std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(b1 == b2);
    for (const char* p : {"test_roundtrip.sld", "test_roundtrip.sld.manifest.json",
                          "test_roundtrip2.sld", "test_roundtrip2.sld.manifest.json"})
        std::remove(p);
}

TEST_CASE("dataset generation is deterministic") {
    DatasetManifest m;
    m.seed = 77;
    m.count = 50;
    write_dataset("det_a.sld", generate_dataset(m));
    write_dataset("det_b.sld", generate_dataset(m));
    std::ifstream f1("det_a.sld", std::ios::binary), f2("det_b.sld", std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), {});
    std::string b2((std::istreambuf_iterator<char>(f2)), {});
    CHECK(!b1.empty());
    CHECK(b1 == b2);
    for (const char* p : {"det_a.sld", "det_a.sld.manifest.json", "det_b.sld",
                          "det_b.sld.manifest.json"})
        std::remove(p);
}

TEST_CASE("SLD1 corruption errors") {
    DatasetManifest m;
    m.seed = 1;
    m.count = 5;
    auto ds = generate_dataset(m);
    write_dataset("corrupt.sld", ds);

    SUBCASE("bad magic") {
        std::fstream f("corrupt.sld", std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
        f.close();
        CHECK_THROWS_WITH_AS(read_dataset("corrupt.sld"),
                             "bad magic: not an SLD1 file", Error);
    }

    SUBCASE("header count larger than payload") {
        std::fstream f("corrupt.sld", std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        std::uint32_t big = 10000;
        f.write(reinterpret_cast<const char*>(&big), 4);
        f.close();
        try {
            read_dataset("corrupt.sld");
            FAIL("expected truncation error");
        } catch (const Error& e) {
            CHECK(std::string(e.what()).starts_with("truncated file"));
        }
    }

    std::remove("corrupt.sld");
    std::remove("corrupt.sld.manifest.json");
}

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "softlab/error.hpp"
#include "softlab/labelkit.hpp"
#include "softlab/rng.hpp"

namespace softlab {

inline constexpr int kNumClasses = 6;

// Class layout: index = color*2 + shape with colors {0=red,1=green,2=blue}
// and shapes {0=circle,1=ellipse}.
enum class SplitTag : std::uint8_t { train = 0, val = 1, test = 2 };

// Color edges follow the cyclic adjacency red->green->blue->red.
inline constexpr std::array<std::array<int, 2>, 3> kColorEdges{
    {{0, 1}, {1, 2}, {2, 0}}};

struct InterpolationState {
    int edge = 0;          // index into kColorEdges
    double t_color = 0.0;  // 0 = edge color A, 1 = edge color B
    double t_shape = 0.0;  // 0 = circle, 1 = ellipse
};

struct DatasetManifest {
    std::uint64_t seed = 0;
    int count = 15000;
    double pure_fraction = 0.4;
    std::array<double, 3> split_fractions{0.6, 0.2, 0.2};
    int image_height = 32;
    int image_width = 32;
    std::string generator_version = "sld-1";

    void validate() const {
        if (count < 1) throw validation_error("count must be positive");
        if (pure_fraction < 0.0 || pure_fraction > 1.0)
            throw validation_error("pure fraction must be in [0,1]");
        double s = split_fractions[0] + split_fractions[1] + split_fractions[2];
        if (std::abs(s - 1.0) > 1e-9)
            throw validation_error("split fractions must sum to 1");
        if (image_height < 16 || image_width < 16)
            throw validation_error("image size must be at least 16");
    }
};

struct SyntheticSample {
    InterpolationState state;
    std::vector<std::uint8_t> image;  // H*W*3 row-major RGB
    SoftLabel soft_label;
    SplitTag split = SplitTag::train;
};

struct Dataset {
    DatasetManifest manifest;
    std::vector<SyntheticSample> samples;
};

// Bilinear mix of the color and shape interpolation weights; support <= 4.
inline SoftLabel soft_label_of(const InterpolationState& state) {
    std::vector<double> p(kNumClasses, 0.0);
    const auto& edge = kColorEdges[static_cast<std::size_t>(state.edge)];
    const double wc[2] = {1.0 - state.t_color, state.t_color};
    const double ws[2] = {1.0 - state.t_shape, state.t_shape};
    for (int c = 0; c < 2; ++c)
        for (int s = 0; s < 2; ++s)
            p[static_cast<std::size_t>(edge[static_cast<std::size_t>(c)] * 2 + s)] +=
                wc[c] * ws[s];
    return SoftLabel(std::move(p));
}

namespace detail {

// Seeded Fisher-Yates permutation of [0, n).
inline std::vector<int> seeded_permutation(std::uint64_t seed, int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    return perm;
}

// Rank of each index in the seeded category permutation; rank < n_pure
// means pure, interpolated otherwise.
inline std::vector<int> category_ranks(std::uint64_t seed, int count) {
    auto perm = seeded_permutation(hash_combine(seed, 0xCA7u), count);
    std::vector<int> rank(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r)
        rank[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] = r;
    return rank;
}

// State for a sample given its category rank. Pure ranks cycle through the
// six classes, interpolated ranks cycle through color-only / shape-only /
// joint families, so composition is count-exact.
inline InterpolationState state_for_rank(std::uint64_t seed, int index, int rank,
                                         int n_pure) {
    Rng rng(hash_combine(hash_combine(seed, 0x57A7Eu),
                         static_cast<std::uint64_t>(index)));
    InterpolationState st;
    if (rank < n_pure) {
        int cls = rank % kNumClasses;
        st.edge = cls / 2;  // edge (color, next) with t_color = 0
        st.t_color = 0.0;
        st.t_shape = static_cast<double>(cls % 2);
        return st;
    }
    int family = (rank - n_pure) % 3;
    switch (family) {
        case 0:  // color interpolation, pure shape
            st.edge = static_cast<int>(rng.uniform_index(3));
            st.t_color = rng.uniform();
            st.t_shape = static_cast<double>(rng.uniform_index(2));
            break;
        case 1:  // shape interpolation, pure color
            st.edge = static_cast<int>(rng.uniform_index(3));
            st.t_color = 0.0;
            st.t_shape = rng.uniform();
            break;
        default:  // joint interpolation
            st.edge = static_cast<int>(rng.uniform_index(3));
            st.t_color = rng.uniform();
            st.t_shape = rng.uniform();
            break;
    }
    return st;
}

}  // namespace detail

inline int pure_count(int count, double pure_fraction) {
    return static_cast<int>(std::llround(pure_fraction * count));
}

// Deterministic in (seed, index); pure/interpolated assignment is
// count-exact over [0, count).
inline InterpolationState sample_state(std::uint64_t rng_seed, int index,
                                       int count, double pure_fraction) {
    if (pure_fraction < 0.0 || pure_fraction > 1.0)
        throw validation_error("pure fraction must be in [0,1]");
    if (index < 0 || index >= count)
        throw validation_error("sample index out of range");
    auto ranks = detail::category_ranks(rng_seed, count);
    return detail::state_for_rank(rng_seed, index,
                                  ranks[static_cast<std::size_t>(index)],
                                  pure_count(count, pure_fraction));
}

// One filled rotated ellipse on a black background, anti-aliased by a
// deterministic 4x4 supersampled coverage mask.
inline std::vector<std::uint8_t> render(const InterpolationState& state,
                                        int height, int width,
                                        std::uint64_t rng_seed) {
    if (height < 16 || width < 16)
        throw validation_error("render needs height, width >= 16");
    Rng rng(rng_seed);
    const double cx = width / 2.0 + rng.uniform(-3.0, 3.0);
    const double cy = height / 2.0 + rng.uniform(-3.0, 3.0);
    const double a = rng.uniform(8.0, 12.0);
    const double theta = rng.uniform(0.0, std::numbers::pi);
    const double b = a * (1.0 - 0.5 * state.t_shape);
    const double ct = std::cos(theta), st = std::sin(theta);

    static constexpr std::array<std::array<int, 3>, 3> kAnchors{
        {{255, 0, 0}, {0, 255, 0}, {0, 0, 255}}};
    const auto& edge = kColorEdges[static_cast<std::size_t>(state.edge)];
    const auto& ca = kAnchors[static_cast<std::size_t>(edge[0])];
    const auto& cb = kAnchors[static_cast<std::size_t>(edge[1])];
    double fill[3];
    for (int ch = 0; ch < 3; ++ch)
        fill[ch] = (1.0 - state.t_color) * ca[static_cast<std::size_t>(ch)] +
                   state.t_color * cb[static_cast<std::size_t>(ch)];

    std::vector<std::uint8_t> img(
        static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * 3, 0);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            int inside = 0;
            for (int sy = 0; sy < 4; ++sy) {
                for (int sx = 0; sx < 4; ++sx) {
                    double px = x + (sx + 0.5) / 4.0 - cx;
                    double py = y + (sy + 0.5) / 4.0 - cy;
                    double u = px * ct + py * st;
                    double v = -px * st + py * ct;
                    if ((u * u) / (a * a) + (v * v) / (b * b) <= 1.0) ++inside;
                }
            }
            if (inside == 0) continue;
            const double cov = inside / 16.0;
            std::size_t base =
                (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                 static_cast<std::size_t>(x)) * 3;
            for (int ch = 0; ch < 3; ++ch)
                img[base + static_cast<std::size_t>(ch)] = static_cast<std::uint8_t>(
                    std::llround(cov * fill[ch]));
        }
    }
    return img;
}

// Count-exact split sizes for the given fractions.
inline std::array<int, 3> split_sizes(int count,
                                      const std::array<double, 3>& fractions) {
    int n_train = static_cast<int>(std::llround(fractions[0] * count));
    int n_val = static_cast<int>(std::llround(fractions[1] * count));
    int n_test = count - n_train - n_val;
    if (n_train < 0 || n_val < 0 || n_test < 0)
        throw validation_error("split sizes must be non-negative");
    return {n_train, n_val, n_test};
}

// Count-exact split assignment via a seeded permutation.
inline std::vector<SplitTag> assign_splits(std::uint64_t seed, int count,
                                           const std::array<double, 3>& fractions) {
    auto sizes = split_sizes(count, fractions);
    auto perm = detail::seeded_permutation(hash_combine(seed, 0x5B117u), count);
    std::vector<SplitTag> tags(static_cast<std::size_t>(count));
    for (int r = 0; r < count; ++r) {
        SplitTag tag = r < sizes[0]                ? SplitTag::train
                       : r < sizes[0] + sizes[1]   ? SplitTag::val
                                                   : SplitTag::test;
        tags[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] = tag;
    }
    return tags;
}

inline Dataset generate_dataset(const DatasetManifest& manifest) {
    manifest.validate();
    Dataset ds;
    ds.manifest = manifest;
    const int n = manifest.count;
    auto ranks = detail::category_ranks(manifest.seed, n);
    auto splits = assign_splits(manifest.seed, n, manifest.split_fractions);
    const int n_pure = pure_count(n, manifest.pure_fraction);
    ds.samples.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& s = ds.samples[static_cast<std::size_t>(i)];
        s.state = detail::state_for_rank(manifest.seed, i,
                                         ranks[static_cast<std::size_t>(i)], n_pure);
        s.soft_label = soft_label_of(s.state);
        // quantize to f32 so in-memory labels match the on-disk format exactly
        for (double& p : s.soft_label.probs) p = static_cast<float>(p);
        s.image = render(s.state, manifest.image_height, manifest.image_width,
                         hash_combine(hash_combine(manifest.seed, 0x9E0u),
                                      static_cast<std::uint64_t>(i)));
        s.split = splits[static_cast<std::size_t>(i)];
    }
    return ds;
}

// ---- SLD1 on-disk format (little-endian) ----
// magic "SLD1"; u32 count, height, width, channels(=3), num_classes(=6);
// per sample: u8 split, H*W*3 u8 pixels, num_classes f32 soft label.

namespace detail {

template <typename T>
void write_le(std::ostream& out, T v) {
    static_assert(sizeof(T) <= 8);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));  // host is little-endian x86
    out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const char* what) {
    T v;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw io_error(std::string("truncated file: ") + what);
    return v;
}

}  // namespace detail

inline void write_manifest_json(const std::string& path,
                                const DatasetManifest& m) {
    nlohmann::json j;
    j["seed"] = m.seed;
    j["count"] = m.count;
    j["pure_fraction"] = m.pure_fraction;
    j["split_fractions"] = m.split_fractions;
    j["image_height"] = m.image_height;
    j["image_width"] = m.image_width;
    j["generator_version"] = m.generator_version;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << j.dump(2) << '\n';
}

inline DatasetManifest read_manifest_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("bad manifest json: " + std::string(e.what()));
    }
    DatasetManifest m;
    m.seed = j.at("seed").get<std::uint64_t>();
    m.count = j.at("count").get<int>();
    m.pure_fraction = j.at("pure_fraction").get<double>();
    m.split_fractions = j.at("split_fractions").get<std::array<double, 3>>();
    m.image_height = j.at("image_height").get<int>();
    m.image_width = j.at("image_width").get<int>();
    m.generator_version = j.at("generator_version").get<std::string>();
    return m;
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write("SLD1", 4);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.samples.size()));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.manifest.image_height));
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ds.manifest.image_width));
    detail::write_le<std::uint32_t>(out, 3u);
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(kNumClasses));
    for (const auto& s : ds.samples) {
        detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(s.split));
        out.write(reinterpret_cast<const char*>(s.image.data()),
                  static_cast<std::streamsize>(s.image.size()));
        for (int c = 0; c < kNumClasses; ++c)
            detail::write_le<float>(out,
                static_cast<float>(s.soft_label.probs[static_cast<std::size_t>(c)]));
    }
    if (!out) throw io_error("write failed: " + path);
    write_manifest_json(path + ".manifest.json", ds.manifest);
}

inline Dataset read_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "SLD1", 4) != 0)
        throw io_error("bad magic: not an SLD1 file");
    auto count = detail::read_le<std::uint32_t>(in, "count");
    auto height = detail::read_le<std::uint32_t>(in, "height");
    auto width = detail::read_le<std::uint32_t>(in, "width");
    auto channels = detail::read_le<std::uint32_t>(in, "channels");
    auto classes = detail::read_le<std::uint32_t>(in, "num_classes");
    if (channels != 3)
        throw io_error("dimension mismatch: expected 3 channels");
    if (classes != static_cast<std::uint32_t>(kNumClasses))
        throw io_error("dimension mismatch: expected 6 classes");
    if (height < 16 || width < 16)
        throw io_error("dimension mismatch: image size below minimum");

    Dataset ds;
    ds.manifest.count = static_cast<int>(count);
    ds.manifest.image_height = static_cast<int>(height);
    ds.manifest.image_width = static_cast<int>(width);
    const std::size_t pixels = static_cast<std::size_t>(height) * width * 3;
    ds.samples.resize(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        auto& s = ds.samples[i];
        auto tag = detail::read_le<std::uint8_t>(in, "split tag");
        if (tag > 2) throw io_error("invalid split tag");
        s.split = static_cast<SplitTag>(tag);
        s.image.resize(pixels);
        if (!in.read(reinterpret_cast<char*>(s.image.data()),
                     static_cast<std::streamsize>(pixels)))
            throw io_error("truncated file: pixels");
        std::vector<double> p(kNumClasses);
        for (int c = 0; c < kNumClasses; ++c)
            p[static_cast<std::size_t>(c)] =
                detail::read_le<float>(in, "soft label");
        s.soft_label = SoftLabel(std::move(p));
    }
    // sidecar manifest is optional on read; header fields are authoritative
    std::ifstream mf(path + ".manifest.json");
    if (mf) {
        mf.close();
        auto m = read_manifest_json(path + ".manifest.json");
        if (m.count == static_cast<int>(count) &&
            m.image_height == static_cast<int>(height) &&
            m.image_width == static_cast<int>(width))
            ds.manifest = m;
    }
    return ds;
}

}  // namespace softlab

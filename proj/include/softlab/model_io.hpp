#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "softlab/error.hpp"
#include "softlab/nnet.hpp"

namespace softlab {

// ---- SLM1 model format (little-endian) ----
// magic "SLM1"; u32 layer count; per layer: u8 kind tag + 4 u32 dims;
// then every parameter tensor as f32 in declaration order.
// Kinds: 0 = input descriptor (h, w, ch, 0), 1 = conv block
// (in_ch, out_ch, 3, 3), 2 = linear (in_dim, out_dim, 0, 0).

namespace detail {

inline void write_tensor(std::ostream& out, const Tensor& t) {
    out.write(reinterpret_cast<const char*>(t.ptr()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
}

inline void read_tensor(std::istream& in, Tensor& t) {
    if (!in.read(reinterpret_cast<char*>(t.ptr()),
                 static_cast<std::streamsize>(t.size() * sizeof(float))))
        throw io_error("truncated file: parameters");
}

}  // namespace detail

inline void save_model(const std::string& path, const Network& net) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out.write("SLM1", 4);
    detail::write_le<std::uint32_t>(out,
        static_cast<std::uint32_t>(net.convs.size() + 2));
    auto layer = [&](std::uint8_t kind, std::uint32_t a, std::uint32_t b,
                     std::uint32_t c, std::uint32_t d) {
        detail::write_le<std::uint8_t>(out, kind);
        detail::write_le<std::uint32_t>(out, a);
        detail::write_le<std::uint32_t>(out, b);
        detail::write_le<std::uint32_t>(out, c);
        detail::write_le<std::uint32_t>(out, d);
    };
    layer(0, static_cast<std::uint32_t>(net.in_h),
          static_cast<std::uint32_t>(net.in_w),
          static_cast<std::uint32_t>(net.in_ch), 0);
    for (const auto& conv : net.convs)
        layer(1, static_cast<std::uint32_t>(conv.in_ch),
              static_cast<std::uint32_t>(conv.out_ch), 3, 3);
    layer(2, static_cast<std::uint32_t>(net.fc.in_dim),
          static_cast<std::uint32_t>(net.fc.out_dim), 0, 0);
    for (const auto& conv : net.convs) {
        detail::write_tensor(out, conv.weight);
        detail::write_tensor(out, conv.bias);
    }
    detail::write_tensor(out, net.fc.weight);
    detail::write_tensor(out, net.fc.bias);
    if (!out) throw io_error("write failed: " + path);
}

inline Network load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open for reading: " + path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "SLM1", 4) != 0)
        throw io_error("bad magic: not an SLM1 file");
    const auto layers = detail::read_le<std::uint32_t>(in, "layer count");
    if (layers < 2) throw io_error("invalid layer count");
    Network net;
    bool have_input = false, have_linear = false;
    for (std::uint32_t l = 0; l < layers; ++l) {
        const auto kind = detail::read_le<std::uint8_t>(in, "layer kind");
        std::uint32_t dims[4];
        for (auto& d : dims) d = detail::read_le<std::uint32_t>(in, "layer dims");
        switch (kind) {
            case 0:
                net.in_h = static_cast<int>(dims[0]);
                net.in_w = static_cast<int>(dims[1]);
                net.in_ch = static_cast<int>(dims[2]);
                have_input = true;
                break;
            case 1: {
                ConvLayer conv;
                conv.in_ch = static_cast<int>(dims[0]);
                conv.out_ch = static_cast<int>(dims[1]);
                if (dims[2] != 3 || dims[3] != 3)
                    throw io_error("unsupported kernel size");
                conv.weight = Tensor({conv.out_ch, conv.in_ch * 9});
                conv.bias = Tensor({conv.out_ch});
                net.convs.push_back(std::move(conv));
                break;
            }
            case 2:
                net.fc.in_dim = static_cast<int>(dims[0]);
                net.fc.out_dim = static_cast<int>(dims[1]);
                net.fc.weight = Tensor({net.fc.out_dim, net.fc.in_dim});
                net.fc.bias = Tensor({net.fc.out_dim});
                have_linear = true;
                break;
            default:
                throw io_error("unknown layer kind");
        }
    }
    if (!have_input || !have_linear)
        throw io_error("model file missing input or linear descriptor");
    for (auto& conv : net.convs) {
        detail::read_tensor(in, conv.weight);
        detail::read_tensor(in, conv.bias);
    }
    detail::read_tensor(in, net.fc.weight);
    detail::read_tensor(in, net.fc.bias);
    return net;
}

}  // namespace softlab

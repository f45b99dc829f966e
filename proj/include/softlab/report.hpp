#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "softlab/error.hpp"
#include "softlab/labelkit.hpp"
#include "softlab/metrics.hpp"

namespace softlab {

// Fixed anchor colors for the six classes, index = color*2 + shape. Circle
// variants are the saturated hue, ellipse variants the lighter one.
inline constexpr std::array<std::array<int, 3>, 6> kClassAnchorColors{{
    {204, 0, 0},     // red circle
    {255, 102, 102}, // red ellipse
    {0, 153, 0},     // green circle
    {102, 255, 102}, // green ellipse
    {0, 0, 204},     // blue circle
    {102, 102, 255}, // blue ellipse
}};

// Soft-label-weighted blend of the class anchor colors.
inline std::array<int, 3> blend_class_color(const SoftLabel& label) {
    double rgb[3] = {0.0, 0.0, 0.0};
    for (int c = 0; c < label.num_classes() && c < 6; ++c)
        for (int ch = 0; ch < 3; ++ch)
            rgb[ch] += label.probs[static_cast<std::size_t>(c)] *
                       kClassAnchorColors[static_cast<std::size_t>(c)]
                                         [static_cast<std::size_t>(ch)];
    return {static_cast<int>(std::lround(rgb[0])),
            static_cast<int>(std::lround(rgb[1])),
            static_cast<int>(std::lround(rgb[2]))};
}

inline void append_eval_row(const std::string& path, const std::string& run_id,
                            std::uint64_t seed, const std::string& label_mode,
                            const EvalReport& report) {
    bool exists = static_cast<bool>(std::ifstream(path));
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw io_error("cannot open for writing: " + path);
    if (!exists) out << "run_id,seed,label_mode,macro_acc,mean_kl,ece,n_items\n";
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%llu,%s,%.6f,%.6f,%.6f,%d\n",
                  run_id.c_str(), static_cast<unsigned long long>(seed),
                  label_mode.c_str(), report.macro_acc, report.mean_kl,
                  report.ece, report.n_items);
    out << buf;
    if (!out) throw io_error("write failed: " + path);
}

// Embedding table: item_index,x,y,q0..q5 (ground-truth label for coloring).
inline void write_embedding_table(
    const std::string& path, const std::vector<int>& item_indices,
    const std::vector<std::array<double, 2>>& points,
    const std::vector<SoftLabel>& truths) {
    if (item_indices.size() != points.size() || points.size() != truths.size())
        throw validation_error("embedding table length mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    out << "item_index,x,y,q0,q1,q2,q3,q4,q5\n";
    char buf[320];
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& q = truths[i].probs;
        std::snprintf(buf, sizeof(buf),
                      "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n",
                      item_indices[i], points[i][0], points[i][1], q[0], q[1],
                      q[2], q[3], q[4], q[5]);
        out << buf;
    }
    if (!out) throw io_error("write failed: " + path);
}

// Standalone SVG scatter; point fill = soft-label blend of anchor colors.
inline void write_scatter_svg(const std::string& path,
                              const std::vector<std::array<double, 2>>& points,
                              const std::vector<SoftLabel>& truths,
                              int size = 800) {
    if (points.size() != truths.size())
        throw validation_error("scatter length mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot open for writing: " + path);
    double lo_x = 0, hi_x = 1, lo_y = 0, hi_y = 1;
    if (!points.empty()) {
        lo_x = hi_x = points[0][0];
        lo_y = hi_y = points[0][1];
        for (const auto& p : points) {
            lo_x = std::min(lo_x, p[0]); hi_x = std::max(hi_x, p[0]);
            lo_y = std::min(lo_y, p[1]); hi_y = std::max(hi_y, p[1]);
        }
    }
    const double span_x = std::max(hi_x - lo_x, 1e-12);
    const double span_y = std::max(hi_y - lo_y, 1e-12);
    const double margin = 20.0;
    const double scale = (size - 2 * margin);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size
        << "\" height=\"" << size << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    char buf[256];
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double x = margin + (points[i][0] - lo_x) / span_x * scale;
        const double y = margin + (points[i][1] - lo_y) / span_y * scale;
        const auto rgb = blend_class_color(truths[i]);
        std::snprintf(buf, sizeof(buf),
                      "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" "
                      "fill=\"rgb(%d,%d,%d)\"/>\n",
                      x, y, rgb[0], rgb[1], rgb[2]);
        out << buf;
    }
    out << "</svg>\n";
    if (!out) throw io_error("write failed: " + path);
}

}  // namespace softlab

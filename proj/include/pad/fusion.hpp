#pragma once

// Heat-map fusion, quantile thresholding and binary morphology producing the
// patch localization mask H_p.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pad/image.hpp"

namespace pad {

struct FusionConfig {
    /// Weight of the (inverted) mutual-information map.
    double r_mi = 0.5;
    /// Quantile of the fused map used as threshold.
    double p = 0.8;
    /// Kernel divisor: base side k = max(1, round(min(w, h) / delta)).
    int delta = 80;
    /// Explicit morphology sides; 0 means derived (2k, k, 3k).
    int open1_side = 0;
    int close_side = 0;
    int open2_side = 0;

    void validate() const {
        if (!(r_mi >= 0.0 && r_mi <= 1.0)) throw InvalidArgument("r_mi must be in [0, 1]");
        if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("p must be in [0, 1)");
        if (delta < 1) throw InvalidArgument("delta must be >= 1");
        if (open1_side < 0 || close_side < 0 || open2_side < 0) throw InvalidArgument("morphology sides must be >= 0");
    }
};

struct StructuringElement {
    int side = 1;
};

struct MorphologySides {
    int open1 = 1;
    int close = 1;
    int open2 = 1;
};

inline int base_kernel_side(int width, int height, int delta) {
    if (delta < 1) throw InvalidArgument("delta must be >= 1");
    return std::max(1, static_cast<int>(std::lround(static_cast<double>(std::min(width, height)) / delta)));
}

inline MorphologySides morphology_sides(const FusionConfig& cfg, int width, int height) {
    const int k = base_kernel_side(width, height, cfg.delta);
    return {cfg.open1_side ? cfg.open1_side : 2 * k, cfg.close_side ? cfg.close_side : k,
            cfg.open2_side ? cfg.open2_side : 3 * k};
}

/// Min-max scaling to [0, 255]; a constant map becomes all zeros.
inline HeatMap normalize_heatmap(const HeatMap& h) {
    HeatMap out(h.width(), h.height(), 0.0);
    const auto [lo_it, hi_it] = std::minmax_element(h.values().begin(), h.values().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) return out;
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = (h[i] - lo) / (hi - lo) * 255.0;
    return out;
}

/// 255 - v, for maps already on the [0, 255] scale.
inline HeatMap invert_heatmap(const HeatMap& h) {
    HeatMap out(h.width(), h.height());
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = 255.0 - h[i];
    return out;
}

inline HeatMap fuse(const HeatMap& mi_norm, const HeatMap& cd_norm, double r_mi) {
    require_same_shape(mi_norm, cd_norm, "fuse");
    if (!(r_mi >= 0.0 && r_mi <= 1.0)) throw InvalidArgument("fuse: r_mi must be in [0, 1]");
    HeatMap out(mi_norm.width(), mi_norm.height());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r_mi * mi_norm[i] + (1.0 - r_mi) * cd_norm[i];
    return out;
}

/// Linear-interpolation quantile of the ascending-sorted values:
/// i = floor((n-1) p), j = (n-1) p - i, result (1-j) S[i] + j S[i+1].
inline double adaptive_threshold(std::span<const double> values, double p) {
    if (values.empty()) throw InvalidArgument("adaptive_threshold: empty map");
    if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("adaptive_threshold: p must be in [0, 1)");
    std::vector<double> s(values.begin(), values.end());
    std::sort(s.begin(), s.end());
    const double pos = static_cast<double>(s.size() - 1) * p;
    const auto i = static_cast<std::size_t>(std::floor(pos));
    const double j = pos - static_cast<double>(i);
    if (i + 1 >= s.size()) return s.back();
    return (1.0 - j) * s[i] + j * s[i + 1];
}

inline double adaptive_threshold(const HeatMap& h, double p) { return adaptive_threshold(h.values(), p); }

/// Values at or above the threshold are kept.
inline BinaryMask binarize(const HeatMap& h, double thresh) {
    BinaryMask m(h.width(), h.height());
    for (std::size_t i = 0; i < h.size(); ++i) m[i] = h[i] >= thresh ? 1 : 0;
    return m;
}

namespace detail {

// One separable pass of a square structuring element along rows (horizontal)
// or columns. The SE covers offsets [-a, side-1-a] with a = side/2. Erosion
// tests p + o; dilation tests p - o (reflected SE), which makes the pair an
// adjunction so opening and closing are idempotent. Out-of-image cells are
// ignored by both.
inline BinaryMask morph_pass(const BinaryMask& m, int side, bool erode, bool horizontal) {
    const int w = m.width();
    const int h = m.height();
    const int lines = horizontal ? h : w;
    const int len = horizontal ? w : h;
    const int a = side / 2;
    const int before = erode ? a : side - 1 - a;
    const int after = erode ? side - 1 - a : a;

    BinaryMask out(w, h);
    std::vector<int> prefix(static_cast<std::size_t>(len) + 1);
    for (int line = 0; line < lines; ++line) {
        auto cell = [&](int i) -> std::uint8_t { return horizontal ? m.at(i, line) : m.at(line, i); };
        prefix[0] = 0;
        for (int i = 0; i < len; ++i) prefix[i + 1] = prefix[i] + (cell(i) != 0);
        for (int i = 0; i < len; ++i) {
            const int lo = std::max(0, i - before);
            const int hi = std::min(len - 1, i + after);
            const int ones = prefix[hi + 1] - prefix[lo];
            const bool v = erode ? ones == hi - lo + 1 : ones > 0;
            (horizontal ? out.at(i, line) : out.at(line, i)) = v ? 1 : 0;
        }
    }
    return out;
}

}  // namespace detail

inline BinaryMask erode(const BinaryMask& m, StructuringElement se) {
    if (se.side < 1) throw InvalidArgument("structuring element side must be >= 1");
    if (se.side == 1) return m;
    return detail::morph_pass(detail::morph_pass(m, se.side, true, true), se.side, true, false);
}

inline BinaryMask dilate(const BinaryMask& m, StructuringElement se) {
    if (se.side < 1) throw InvalidArgument("structuring element side must be >= 1");
    if (se.side == 1) return m;
    return detail::morph_pass(detail::morph_pass(m, se.side, false, true), se.side, false, false);
}

inline BinaryMask morph_open(const BinaryMask& m, StructuringElement se) { return dilate(erode(m, se), se); }
inline BinaryMask morph_close(const BinaryMask& m, StructuringElement se) { return erode(dilate(m, se), se); }

/// Every intermediate of the fusion block, kept for debug export.
struct Localization {
    HeatMap mi_norm;  ///< 255 - normalized H_mi (high = independent)
    HeatMap cd_norm;
    HeatMap fused;
    double threshold = 0.0;
    BinaryMask thresholded;
    MorphologySides sides;
    BinaryMask patch_map;  ///< H_p
    /// The fused map is constant, so the threshold selects every pixel.
    bool flat = false;
};

inline Localization localize_detailed(const HeatMap& h_mi, const HeatMap& h_cd, const FusionConfig& cfg) {
    cfg.validate();
    require_same_shape(h_mi, h_cd, "localize");
    Localization out;
    out.mi_norm = invert_heatmap(normalize_heatmap(h_mi));
    out.cd_norm = normalize_heatmap(h_cd);
    out.fused = fuse(out.mi_norm, out.cd_norm, cfg.r_mi);
    out.threshold = adaptive_threshold(out.fused, cfg.p);
    const auto [lo, hi] = std::minmax_element(out.fused.values().begin(), out.fused.values().end());
    out.flat = *lo == *hi;
    out.thresholded = binarize(out.fused, out.threshold);
    out.sides = morphology_sides(cfg, h_mi.width(), h_mi.height());
    auto m = morph_open(out.thresholded, {out.sides.open1});
    m = morph_close(m, {out.sides.close});
    out.patch_map = morph_open(m, {out.sides.open2});
    return out;
}

inline BinaryMask localize(const HeatMap& h_mi, const HeatMap& h_cd, const FusionConfig& cfg) {
    return localize_detailed(h_mi, h_cd, cfg).patch_map;
}

}  // namespace pad

#pragma once

// Spatial-heterogeneity heat map from JPEG recompression residuals.

#include <algorithm>
#include <string>
#include <vector>

#include "pad/codec.hpp"
#include "pad/image.hpp"

namespace pad {

struct CdConfig {
    /// Recompression qualities, strictly increasing, each in [1, 100].
    std::vector<int> sweep{30, 40, 50, 60, 70, 80, 90};
    /// Residual smoothing side; 0 derives it from the image size and delta.
    int smooth_side = 0;

    void validate() const {
        if (sweep.empty()) throw InvalidArgument("quality sweep must not be empty");
        for (std::size_t i = 0; i < sweep.size(); ++i) {
            if (sweep[i] < 1 || sweep[i] > 100) {
                throw InvalidArgument("quality " + std::to_string(sweep[i]) + " outside [1, 100]");
            }
            if (i > 0 && sweep[i] <= sweep[i - 1]) throw InvalidArgument("quality sweep must be strictly increasing");
        }
        if (smooth_side != 0 && (smooth_side < 3 || smooth_side % 2 == 0)) {
            throw InvalidArgument("smooth side must be odd and >= 3");
        }
    }
};

/// 2 * floor(min(w, h) / delta) + 1, at least 3.
inline int derived_smooth_side(int width, int height, int delta) {
    if (delta < 1) throw InvalidArgument("delta must be >= 1");
    return std::max(3, 2 * (std::min(width, height) / delta) + 1);
}

inline int resolve_smooth_side(const CdConfig& cfg, int width, int height, int delta) {
    return cfg.smooth_side != 0 ? cfg.smooth_side : derived_smooth_side(width, height, delta);
}

/// JPEG round trip at `quality` (baseline, 4:4:4).
inline ImageBuffer recompress(const ImageBuffer& img, int quality) {
    return codec::decode_jpeg(codec::encode_jpeg(img, quality));
}

/// Per-pixel squared difference averaged over the three channels.
inline HeatMap residual_map(const ImageBuffer& orig, const ImageBuffer& rec) {
    require_same_shape(orig, rec, "residual_map");
    HeatMap out(orig.width(), orig.height());
    auto a = orig.bytes();
    auto b = rec.bytes();
    for (std::size_t i = 0; i < out.size(); ++i) {
        int sum = 0;
        for (int c = 0; c < 3; ++c) {
            const int d = static_cast<int>(a[3 * i + c]) - static_cast<int>(b[3 * i + c]);
            sum += d * d;
        }
        out[i] = sum / 3.0;
    }
    return out;
}

/// Median over all values; even counts average the two middle elements.
inline double median_of(std::span<const double> values) {
    if (values.empty()) throw InvalidArgument("median of empty range");
    std::vector<double> v(values.begin(), values.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double upper = v[mid];
    if (v.size() % 2 == 1) return upper;
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return (lower + upper) / 2.0;
}

struct QualityScore {
    int quality = 0;
    double median_residual = 0.0;
};

struct CdAnalysis {
    /// The sweep entry whose smoothed residual has the lowest median.
    int quality = 0;
    int smooth_side = 0;
    std::vector<QualityScore> scores;
    /// Smoothed residual at `quality`: the raw H_cd.
    HeatMap heat;
};

inline CdAnalysis analyze_recompression(const ImageBuffer& img, const CdConfig& cfg, int smooth_side) {
    cfg.validate();
    CdAnalysis out;
    out.smooth_side = smooth_side;
    double best = 0.0;
    for (int q : cfg.sweep) {
        auto smoothed = box_smooth(residual_map(img, recompress(img, q)), smooth_side);
        const double med = median_of(smoothed.values());
        out.scores.push_back({q, med});
        // Ascending sweep with <= breaks ties toward the highest quality.
        if (out.scores.size() == 1 || med <= best) {
            best = med;
            out.quality = q;
            out.heat = std::move(smoothed);
        }
    }
    return out;
}

inline int estimate_global_quality(const ImageBuffer& img, const CdConfig& cfg, int delta = 80) {
    return analyze_recompression(img, cfg, resolve_smooth_side(cfg, img.width(), img.height(), delta)).quality;
}

/// Raw H_cd: smoothed residual at the estimated global quality.
inline HeatMap cd_heatmap(const ImageBuffer& img, const CdConfig& cfg, int delta = 80) {
    return analyze_recompression(img, cfg, resolve_smooth_side(cfg, img.width(), img.height(), delta)).heat;
}

}  // namespace pad

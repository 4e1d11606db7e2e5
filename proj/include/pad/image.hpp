#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pad/errors.hpp"

namespace pad {

/// Axis-aligned pixel rectangle; (x, y) is the top-left corner.
struct Rect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    std::size_t area() const { return static_cast<std::size_t>(w) * static_cast<std::size_t>(h); }
    bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
    friend bool operator==(const Rect&, const Rect&) = default;
};

namespace detail {

inline void check_dims(int width, int height) {
    if (width < 1 || height < 1) {
        throw InvalidArgument("raster dimensions must be positive, got " + std::to_string(width) + "x" +
                              std::to_string(height));
    }
    constexpr long long kMaxPixels = 1LL << 28;
    if (static_cast<long long>(width) * height > kMaxPixels) {
        throw InvalidArgument("raster dimensions overflow: " + std::to_string(width) + "x" + std::to_string(height));
    }
}

}  // namespace detail

/// Single-plane row-major raster. `Tag` keeps planes with the same sample
/// type (gray pixels vs. mask bits) from converting into each other.
template <class T, class Tag>
class Plane {
public:
    using value_type = T;

    Plane() = default;
    Plane(int width, int height, T fill = T{}) : width_(width), height_(height) {
        detail::check_dims(width, height);
        data_.assign(static_cast<std::size_t>(width) * height, fill);
    }
    Plane(int width, int height, std::vector<T> data) : width_(width), height_(height), data_(std::move(data)) {
        detail::check_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width) * height) {
            throw InvalidArgument("plane data length does not match dimensions");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::span<T> values() { return data_; }
    std::span<const T> values() const { return data_; }
    const std::vector<T>& data() const { return data_; }

    bool same_shape(const auto& other) const { return width_ == other.width() && height_ == other.height(); }

    friend bool operator==(const Plane&, const Plane&) = default;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

struct GrayTag {};
struct HeatTag {};
struct MaskTag {};

using GrayBuffer = Plane<std::uint8_t, GrayTag>;
/// Nonnegative per-pixel scores.
using HeatMap = Plane<double, HeatTag>;
/// One byte per pixel, 0 or 1.
using BinaryMask = Plane<std::uint8_t, MaskTag>;

/// 8-bit RGB raster, row-major, channel-interleaved.
class ImageBuffer {
public:
    static constexpr int kChannels = 3;

    ImageBuffer() = default;
    ImageBuffer(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
        detail::check_dims(width, height);
        data_.assign(static_cast<std::size_t>(width) * height * kChannels, fill);
    }
    ImageBuffer(int width, int height, std::vector<std::uint8_t> data)
        : width_(width), height_(height), data_(std::move(data)) {
        detail::check_dims(width, height);
        if (data_.size() != static_cast<std::size_t>(width) * height * kChannels) {
            throw InvalidArgument("image data length does not match dimensions");
        }
    }

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return kChannels; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    std::uint8_t& at(int x, int y, int c) { return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c]; }
    std::uint8_t at(int x, int y, int c) const {
        return data_[(static_cast<std::size_t>(y) * width_ + x) * kChannels + c];
    }

    std::span<std::uint8_t> bytes() { return data_; }
    std::span<const std::uint8_t> bytes() const { return data_; }
    const std::vector<std::uint8_t>& data() const { return data_; }

    bool same_shape(const auto& other) const { return width_ == other.width() && height_ == other.height(); }

    friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint8_t> data_;
};

template <class A, class B>
void require_same_shape(const A& a, const B& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height()) {
        throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a.width()) + "x" +
                              std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                              std::to_string(b.height()) + ")");
    }
}

/// BT.601 luma, rounded half away from zero.
inline GrayBuffer to_grayscale(const ImageBuffer& img) {
    GrayBuffer out(img.width(), img.height());
    auto src = img.bytes();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] + 0.114 * src[3 * i + 2];
        out[i] = static_cast<std::uint8_t>(std::clamp(std::round(y), 0.0, 255.0));
    }
    return out;
}

/// Mean over the side x side window centered on each pixel. Windows are
/// clipped at the border and averaged over in-image cells only.
inline HeatMap box_smooth(const HeatMap& h, int side) {
    if (side < 1 || side % 2 == 0) {
        throw InvalidArgument("box_smooth: side must be odd and >= 1, got " + std::to_string(side));
    }
    if (side == 1) return h;
    const int w = h.width();
    const int ht = h.height();
    const int r = side / 2;

    // Horizontal window sums, then vertical sums of those; each output is a
    // direct (non-running) sum so results do not depend on scan order.
    std::vector<double> rows(h.size());
    for (int y = 0; y < ht; ++y) {
        for (int x = 0; x < w; ++x) {
            const int x0 = std::max(0, x - r);
            const int x1 = std::min(w - 1, x + r);
            double s = 0.0;
            for (int k = x0; k <= x1; ++k) s += h.at(k, y);
            rows[static_cast<std::size_t>(y) * w + x] = s;
        }
    }

    const auto [lo_it, hi_it] = std::minmax_element(h.values().begin(), h.values().end());
    const double lo = *lo_it;
    const double hi = *hi_it;

    HeatMap out(w, ht);
    for (int y = 0; y < ht; ++y) {
        const int y0 = std::max(0, y - r);
        const int y1 = std::min(ht - 1, y + r);
        for (int x = 0; x < w; ++x) {
            const int cols = std::min(w - 1, x + r) - std::max(0, x - r) + 1;
            double s = 0.0;
            for (int k = y0; k <= y1; ++k) s += rows[static_cast<std::size_t>(k) * w + x];
            const double mean = s / (static_cast<double>(cols) * (y1 - y0 + 1));
            out.at(x, y) = std::clamp(mean, lo, hi);
        }
    }
    return out;
}

inline std::size_t count_set(const BinaryMask& m) {
    return static_cast<std::size_t>(std::count_if(m.values().begin(), m.values().end(), [](auto v) { return v != 0; }));
}

inline BinaryMask rect_mask(int width, int height, const Rect& r) {
    BinaryMask m(width, height);
    for (int y = std::max(0, r.y); y < std::min(height, r.y + r.h); ++y) {
        for (int x = std::max(0, r.x); x < std::min(width, r.x + r.w); ++x) m.at(x, y) = 1;
    }
    return m;
}

}  // namespace pad

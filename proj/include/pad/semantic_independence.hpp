#pragma once

// Semantic-independence heat map: every tile of a non-overlapping grid is
// scored by its average mutual information with its 4-neighborhood.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pad/image.hpp"

namespace pad {

struct MiConfig {
    int window = 32;
    int bins = 32;
    /// Tiles whose own entropy (bits) is below this are treated as flat.
    double flat_entropy_floor = 0.05;

    void validate() const {
        if (window < 2) throw InvalidArgument("window must be >= 2");
        if (bins < 2 || bins > 256) throw InvalidArgument("bins must be in [2, 256]");
        if (!(flat_entropy_floor >= 0.0)) throw InvalidArgument("flat entropy floor must be >= 0");
    }
};

enum class Side : int { Up = 0, Down = 1, Left = 2, Right = 3 };

struct WindowGrid {
    int window = 0;
    int cols = 0;
    int rows = 0;
    /// Row-major tiles; the last column/row may be narrower/shorter.
    std::vector<Rect> tiles;
    /// neighbors[t][side] is the index of the adjacent tile, if any.
    std::vector<std::array<std::optional<std::size_t>, 4>> neighbors;

    std::size_t neighbor_count(std::size_t t) const {
        std::size_t n = 0;
        for (const auto& nb : neighbors[t]) n += nb.has_value();
        return n;
    }
};

inline WindowGrid tile_grid(int width, int height, int window) {
    if (window < 2) throw InvalidArgument("tile_grid: window must be >= 2");
    if (width < window || height < window) {
        throw InvalidArgument("tile_grid: window " + std::to_string(window) + " exceeds image " +
                              std::to_string(width) + "x" + std::to_string(height));
    }
    WindowGrid g;
    g.window = window;
    g.cols = (width + window - 1) / window;
    g.rows = (height + window - 1) / window;
    g.tiles.reserve(static_cast<std::size_t>(g.cols) * g.rows);
    g.neighbors.resize(static_cast<std::size_t>(g.cols) * g.rows);
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            const int x = c * window;
            const int y = r * window;
            g.tiles.push_back(Rect{x, y, std::min(window, width - x), std::min(window, height - y)});
            auto& nb = g.neighbors[static_cast<std::size_t>(r) * g.cols + c];
            auto idx = [&](int rr, int cc) { return static_cast<std::size_t>(rr) * g.cols + cc; };
            if (r > 0) nb[static_cast<int>(Side::Up)] = idx(r - 1, c);
            if (r + 1 < g.rows) nb[static_cast<int>(Side::Down)] = idx(r + 1, c);
            if (c > 0) nb[static_cast<int>(Side::Left)] = idx(r, c - 1);
            if (c + 1 < g.cols) nb[static_cast<int>(Side::Right)] = idx(r, c + 1);
        }
    }
    return g;
}

/// B x B co-occurrence counts; cell (i, j) pairs bin i of window A with bin j of window B.
struct JointHistogram {
    int bins = 0;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    std::uint64_t at(int a, int b) const { return counts[static_cast<std::size_t>(a) * bins + b]; }
};

inline int bin_of(std::uint8_t v, int bins) { return (static_cast<int>(v) * bins) >> 8; }

/// Pixels of `a` and `b` are paired at identical offsets after cropping both
/// to their common width and height.
inline JointHistogram joint_histogram(const GrayBuffer& g, const Rect& a, const Rect& b, int bins) {
    if (bins < 2 || bins > 256) throw InvalidArgument("joint_histogram: bins must be in [2, 256]");
    auto inside = [&](const Rect& r) {
        return r.x >= 0 && r.y >= 0 && r.w >= 0 && r.h >= 0 && r.x + r.w <= g.width() && r.y + r.h <= g.height();
    };
    if (!inside(a) || !inside(b)) throw InvalidArgument("joint_histogram: window outside image");
    const int w = std::min(a.w, b.w);
    const int h = std::min(a.h, b.h);
    if (w == 0 || h == 0) throw EmptyWindow("joint_histogram: windows have no common area");

    JointHistogram jh;
    jh.bins = bins;
    jh.counts.assign(static_cast<std::size_t>(bins) * bins, 0);
    for (int dy = 0; dy < h; ++dy) {
        for (int dx = 0; dx < w; ++dx) {
            const int ia = bin_of(g.at(a.x + dx, a.y + dy), bins);
            const int ib = bin_of(g.at(b.x + dx, b.y + dy), bins);
            ++jh.counts[static_cast<std::size_t>(ia) * bins + ib];
        }
    }
    jh.total = static_cast<std::uint64_t>(w) * h;
    return jh;
}

/// Plug-in mutual information in bits.
inline double mutual_information(const JointHistogram& jh) {
    const int n = jh.bins;
    std::vector<std::uint64_t> row(n, 0);
    std::vector<std::uint64_t> col(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            row[i] += jh.at(i, j);
            col[j] += jh.at(i, j);
        }
    }
    const double total = static_cast<double>(jh.total);
    double mi = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const auto c = jh.at(i, j);
            if (c == 0) continue;
            // p(a,b) / (p(a) p(b)) == c N / (row col), evaluated on exact integers.
            const double ratio = (static_cast<double>(c) * total) / (static_cast<double>(row[i]) * col[j]);
            mi += static_cast<double>(c) / total * std::log2(ratio);
        }
    }
    return std::max(0.0, mi);
}

/// Shannon entropy (bits) of the `bins`-bin histogram of one window.
inline double window_entropy(const GrayBuffer& g, const Rect& r, int bins) {
    std::vector<std::uint64_t> hist(bins, 0);
    for (int y = r.y; y < r.y + r.h; ++y) {
        for (int x = r.x; x < r.x + r.w; ++x) ++hist[bin_of(g.at(x, y), bins)];
    }
    const double total = static_cast<double>(r.area());
    double h = 0.0;
    for (auto c : hist) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / total;
        h -= p * std::log2(p);
    }
    return h;
}

/// Per-tile scores behind the heat map, exposed for diagnostics and tests.
struct TileScores {
    WindowGrid grid;
    std::vector<double> mean_mi;
    std::vector<bool> flat;
};

inline TileScores mi_tile_scores(const GrayBuffer& g, const MiConfig& cfg) {
    cfg.validate();
    TileScores s{tile_grid(g.width(), g.height(), cfg.window), {}, {}};
    const auto& grid = s.grid;
    if (grid.tiles.size() < 2) {
        throw DegenerateGrid("mi_heatmap: image " + std::to_string(g.width()) + "x" + std::to_string(g.height()) +
                             " yields a single " + std::to_string(cfg.window) + "px tile");
    }
    const std::size_t n = grid.tiles.size();

    // MI is symmetric under pairing, so each adjacency is evaluated once.
    std::vector<double> right_mi(n, 0.0);
    std::vector<double> down_mi(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        if (auto r = grid.neighbors[t][static_cast<int>(Side::Right)]) {
            right_mi[t] = mutual_information(joint_histogram(g, grid.tiles[*r], grid.tiles[t], cfg.bins));
        }
        if (auto d = grid.neighbors[t][static_cast<int>(Side::Down)]) {
            down_mi[t] = mutual_information(joint_histogram(g, grid.tiles[*d], grid.tiles[t], cfg.bins));
        }
    }

    s.mean_mi.resize(n);
    s.flat.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        const auto& nb = grid.neighbors[t];
        double sum = 0.0;
        if (nb[static_cast<int>(Side::Up)]) sum += down_mi[*nb[static_cast<int>(Side::Up)]];
        if (nb[static_cast<int>(Side::Down)]) sum += down_mi[t];
        if (nb[static_cast<int>(Side::Left)]) sum += right_mi[*nb[static_cast<int>(Side::Left)]];
        if (nb[static_cast<int>(Side::Right)]) sum += right_mi[t];
        s.mean_mi[t] = sum / static_cast<double>(grid.neighbor_count(t));
        s.flat[t] = window_entropy(g, grid.tiles[t], cfg.bins) < cfg.flat_entropy_floor;
    }
    return s;
}

/// Raw H_mi: each tile holds the mean MI against its neighbors. Flat tiles
/// take the largest mean observed on non-flat tiles (0 if every tile is flat).
inline HeatMap mi_heatmap(const GrayBuffer& g, const MiConfig& cfg) {
    const auto s = mi_tile_scores(g, cfg);
    double max_mi = 0.0;
    for (std::size_t t = 0; t < s.mean_mi.size(); ++t) {
        if (!s.flat[t]) max_mi = std::max(max_mi, s.mean_mi[t]);
    }
    HeatMap out(g.width(), g.height());
    for (std::size_t t = 0; t < s.grid.tiles.size(); ++t) {
        const double v = s.flat[t] ? max_mi : s.mean_mi[t];
        const auto& r = s.grid.tiles[t];
        for (int y = r.y; y < r.y + r.h; ++y) {
            for (int x = r.x; x < r.x + r.w; ++x) out.at(x, y) = v;
        }
    }
    return out;
}

inline HeatMap mi_heatmap(const ImageBuffer& img, const MiConfig& cfg) { return mi_heatmap(to_grayscale(img), cfg); }

}  // namespace pad

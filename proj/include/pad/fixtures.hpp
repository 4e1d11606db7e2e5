#pragma once

// Synthetic adversarial images: a rectangular patch fully replaces the base
// image at location l, after an optional nearest-neighbor scale and quarter
// turn. The ground-truth mask is the placed rectangle.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "pad/codec.hpp"
#include "pad/spatial_heterogeneity.hpp"

namespace pad {

/// Deterministic generator: mt19937_64 plus integer/real mappings that do
/// not depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v = 0;
        do {
            v = engine_();
        } while (v >= limit);
        return v % n;
    }
    int range(int lo, int hi_inclusive) {
        return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi_inclusive - lo) + 1));
    }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer, for per-fixture seeds derived from a run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

enum class PatchKind { Noise, Crop, Quality };

inline const char* to_string(PatchKind k) {
    switch (k) {
        case PatchKind::Noise: return "noise";
        case PatchKind::Crop: return "crop";
        case PatchKind::Quality: return "quality";
    }
    return "noise";
}

inline PatchKind parse_patch_kind(const std::string& s) {
    if (s == "noise") return PatchKind::Noise;
    if (s == "crop") return PatchKind::Crop;
    if (s == "quality") return PatchKind::Quality;
    throw InvalidArgument("unknown patch kind '" + s + "'");
}

/// I.i.d. uniform RGB noise of the given (pre-transform) size.
struct NoiseSource {
    std::uint64_t seed = 0;
    int width = 0;
    int height = 0;
};

/// A rectangle cut from another image.
struct CropSource {
    ImageBuffer image;
    Rect rect;
};

/// The base's own pixels under `rect`, round-tripped through JPEG at `quality`.
struct QualitySource {
    Rect rect;
    int quality = 30;
};

using PatchSource = std::variant<NoiseSource, CropSource, QualitySource>;

struct PatchTransform {
    /// 0.5, 1 or 2.
    double scale = 1.0;
    /// Clockwise quarter turns, 0..3.
    int quarter_turns = 0;
};

struct PatchSpec {
    PatchSource source;
    int x = 0;
    int y = 0;
    PatchTransform transform;
};

struct Fixture {
    ImageBuffer adversarial;
    BinaryMask gt_mask;
    PatchKind kind = PatchKind::Noise;
    Rect placed;
    PatchTransform transform;
    std::size_t base_index = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline ImageBuffer crop(const ImageBuffer& img, const Rect& r) {
    if (r.w < 1 || r.h < 1 || r.x < 0 || r.y < 0 || r.x + r.w > img.width() || r.y + r.h > img.height()) {
        throw InvalidArgument("crop rectangle outside image");
    }
    ImageBuffer out(r.w, r.h);
    for (int y = 0; y < r.h; ++y) {
        for (int x = 0; x < r.w; ++x) {
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(r.x + x, r.y + y, c);
        }
    }
    return out;
}

inline int scaled_extent(int n, double scale) {
    if (scale == 2.0) return 2 * n;
    if (scale == 1.0) return n;
    if (scale == 0.5) return n / 2;
    throw InvalidArgument("patch scale must be 0.5, 1 or 2");
}

inline ImageBuffer scale_nearest(const ImageBuffer& src, double scale) {
    const int w = scaled_extent(src.width(), scale);
    const int h = scaled_extent(src.height(), scale);
    if (w < 1 || h < 1) throw InvalidArgument("scaled patch is empty");
    if (scale == 1.0) return src;
    ImageBuffer out(w, h);
    for (int y = 0; y < h; ++y) {
        const int sy = std::min(src.height() - 1, static_cast<int>(std::floor((y + 0.5) / scale)));
        for (int x = 0; x < w; ++x) {
            const int sx = std::min(src.width() - 1, static_cast<int>(std::floor((x + 0.5) / scale)));
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = src.at(sx, sy, c);
        }
    }
    return out;
}

inline ImageBuffer rotate_quarter(const ImageBuffer& src, int turns) {
    turns = ((turns % 4) + 4) % 4;
    if (turns == 0) return src;
    const int w = src.width();
    const int h = src.height();
    const bool swap = turns % 2 == 1;
    ImageBuffer out(swap ? h : w, swap ? w : h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            int dx = x;
            int dy = y;
            if (turns == 1) {
                dx = h - 1 - y;
                dy = x;
            } else if (turns == 2) {
                dx = w - 1 - x;
                dy = h - 1 - y;
            } else {
                dx = y;
                dy = w - 1 - x;
            }
            for (int c = 0; c < 3; ++c) out.at(dx, dy, c) = src.at(x, y, c);
        }
    }
    return out;
}

inline ImageBuffer noise_patch(const NoiseSource& n) {
    if (n.width < 1 || n.height < 1) throw InvalidArgument("noise patch must be non-empty");
    ImageBuffer out(n.width, n.height);
    Rng rng(n.seed);
    for (auto& v : out.bytes()) v = static_cast<std::uint8_t>(rng.next() >> 56);
    return out;
}

}  // namespace detail

inline ImageBuffer render_patch(const ImageBuffer& base, const PatchSpec& spec) {
    ImageBuffer raw = std::visit(
        [&](const auto& src) -> ImageBuffer {
            using T = std::decay_t<decltype(src)>;
            if constexpr (std::is_same_v<T, NoiseSource>) {
                return detail::noise_patch(src);
            } else if constexpr (std::is_same_v<T, CropSource>) {
                return detail::crop(src.image, src.rect);
            } else {
                return recompress(detail::crop(base, src.rect), src.quality);
            }
        },
        spec.source);
    return detail::rotate_quarter(detail::scale_nearest(raw, spec.transform.scale), spec.transform.quarter_turns);
}

/// Replaces base pixels under the placed, transformed patch.
inline Fixture compose_adversarial(const ImageBuffer& base, const PatchSpec& spec) {
    const ImageBuffer patch = render_patch(base, spec);
    const Rect placed{spec.x, spec.y, patch.width(), patch.height()};
    if (placed.x < 0 || placed.y < 0 || placed.x + placed.w > base.width() || placed.y + placed.h > base.height()) {
        throw InvalidArgument("patch does not fit inside the base image");
    }
    Fixture f;
    f.adversarial = base;
    for (int y = 0; y < placed.h; ++y) {
        for (int x = 0; x < placed.w; ++x) {
            for (int c = 0; c < 3; ++c) f.adversarial.at(placed.x + x, placed.y + y, c) = patch.at(x, y, c);
        }
    }
    f.gt_mask = rect_mask(base.width(), base.height(), placed);
    f.placed = placed;
    f.transform = spec.transform;
    f.kind = std::visit(
        [](const auto& src) {
            using T = std::decay_t<decltype(src)>;
            if constexpr (std::is_same_v<T, NoiseSource>) return PatchKind::Noise;
            else if constexpr (std::is_same_v<T, CropSource>) return PatchKind::Crop;
            else return PatchKind::Quality;
        },
        spec.source);
    return f;
}

struct FixtureOptions {
    /// Kinds cycled across the set, in order.
    std::vector<PatchKind> kinds{PatchKind::Noise, PatchKind::Crop, PatchKind::Quality};
    /// Bases are JPEG round-tripped at this quality first; 0 keeps them as given.
    int base_quality = 80;
    int patch_quality = 30;
    double min_area = 0.10;
    double max_area = 0.20;
};

namespace detail {

// Placed size with an area fraction in [min_area, max_area] and aspect in
// [3/4, 4/3]; both sides divisible by `multiple` so a 2x upscale can hit them.
inline std::pair<int, int> draw_patch_size(Rng& rng, int W, int H, const FixtureOptions& opt, int multiple) {
    const double image_area = static_cast<double>(W) * H;
    for (int attempt = 0; attempt < 10000; ++attempt) {
        const double area = rng.uniform(opt.min_area, opt.max_area) * image_area;
        const double aspect = rng.uniform(0.75, 4.0 / 3.0);
        int w = static_cast<int>(std::lround(std::sqrt(area * aspect)));
        int h = static_cast<int>(std::lround(area / std::max(1, w)));
        w -= w % multiple;
        h -= h % multiple;
        const double frac = static_cast<double>(w) * h / image_area;
        if (w >= multiple && h >= multiple && w <= W && h <= H && frac >= opt.min_area && frac <= opt.max_area) {
            return {w, h};
        }
    }
    throw InvalidArgument("cannot draw a patch size for a " + std::to_string(W) + "x" + std::to_string(H) + " base");
}

}  // namespace detail

/// Deterministic in (bases, n, seed, options). Fixture i uses base i mod |bases|
/// and kind i mod |kinds|; crops come from the next base in the list.
inline std::vector<Fixture> make_fixture_set(const std::vector<ImageBuffer>& bases, std::size_t n, std::uint64_t seed,
                                             const FixtureOptions& opt = {}) {
    if (n < 1) throw InvalidArgument("fixture count must be >= 1");
    if (bases.empty()) throw InvalidArgument("at least one base image is required");
    if (opt.kinds.empty()) throw InvalidArgument("at least one patch kind is required");

    std::vector<ImageBuffer> prepared;
    prepared.reserve(bases.size());
    for (const auto& b : bases) prepared.push_back(opt.base_quality > 0 ? recompress(b, opt.base_quality) : b);

    std::vector<Fixture> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint64_t fseed = derive_seed(seed, i);
        Rng rng(fseed);
        const std::size_t bi = i % prepared.size();
        const ImageBuffer& base = prepared[bi];
        const int W = base.width();
        const int H = base.height();
        const PatchKind kind = opt.kinds[i % opt.kinds.size()];

        PatchSpec spec;
        if (kind == PatchKind::Quality) {
            const auto [w, h] = detail::draw_patch_size(rng, W, H, opt, 1);
            spec.x = rng.range(0, W - w);
            spec.y = rng.range(0, H - h);
            spec.source = QualitySource{Rect{spec.x, spec.y, w, h}, opt.patch_quality};
        } else {
            static constexpr double kScales[] = {0.5, 1.0, 2.0};
            spec.transform.scale = kScales[rng.below(3)];
            spec.transform.quarter_turns = static_cast<int>(rng.below(4));
            const auto [w, h] = detail::draw_patch_size(rng, W, H, opt, 2);
            spec.x = rng.range(0, W - w);
            spec.y = rng.range(0, H - h);
            // Pre-transform source size that lands exactly on w x h.
            const bool swap = spec.transform.quarter_turns % 2 == 1;
            const int pw = swap ? h : w;
            const int ph = swap ? w : h;
            const int sw = spec.transform.scale == 2.0 ? pw / 2 : spec.transform.scale == 0.5 ? pw * 2 : pw;
            const int sh = spec.transform.scale == 2.0 ? ph / 2 : spec.transform.scale == 0.5 ? ph * 2 : ph;
            if (kind == PatchKind::Noise) {
                spec.source = NoiseSource{rng.next(), sw, sh};
            } else {
                const ImageBuffer& donor = prepared[(bi + 1) % prepared.size()];
                if (sw > donor.width() || sh > donor.height()) {
                    // Donor too small for a 2x-downscaled crop; take it at 1:1.
                    spec.transform.scale = 1.0;
                    spec.source = CropSource{donor, Rect{0, 0, std::min(pw, donor.width()), std::min(ph, donor.height())}};
                    if (pw > donor.width() || ph > donor.height()) {
                        throw InvalidArgument("crop donor smaller than the patch");
                    }
                } else {
                    spec.source = CropSource{donor, Rect{rng.range(0, donor.width() - sw),
                                                         rng.range(0, donor.height() - sh), sw, sh}};
                }
                if (spec.transform.scale == 1.0) {
                    auto& c = std::get<CropSource>(spec.source);
                    c.rect.w = pw;
                    c.rect.h = ph;
                    c.rect.x = std::min(c.rect.x, donor.width() - pw);
                    c.rect.y = std::min(c.rect.y, donor.height() - ph);
                }
            }
        }
        Fixture f = compose_adversarial(base, spec);
        f.base_index = bi;
        f.seed = fseed;
        out.push_back(std::move(f));
    }
    return out;
}

struct ManifestEntry {
    std::string image;               ///< relative to the manifest's directory
    std::vector<std::string> masks;  ///< one ground-truth mask per patch
    std::string kind;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const ManifestEntry& e) {
    return {{"image", e.image}, {"masks", e.masks}, {"kind", e.kind}, {"seed", e.seed}};
}

inline std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest: " + path.string());
    std::vector<ManifestEntry> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = nlohmann::json::parse(line);
            ManifestEntry e;
            e.image = j.at("image").get<std::string>();
            e.masks = j.at("masks").get<std::vector<std::string>>();
            e.kind = j.value("kind", std::string{});
            e.seed = j.value("seed", std::uint64_t{0});
            out.push_back(std::move(e));
        } catch (const nlohmann::json::exception& ex) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad manifest record: " + ex.what());
        }
    }
    return out;
}

inline void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    for (const auto& e : entries) out << to_json(e).dump() << '\n';
    if (!out) throw IoError("error writing manifest: " + path.string());
}

/// Writes fixture_NNNN.png, fixture_NNNN.gt.png and manifest.jsonl into `dir`.
inline std::vector<ManifestEntry> write_fixture_set(const std::vector<Fixture>& fixtures,
                                                    const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < fixtures.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "fixture_%04zu", i);
        ManifestEntry e{std::string(stem) + ".png", {std::string(stem) + ".gt.png"}, to_string(fixtures[i].kind),
                        fixtures[i].seed};
        save_image(fixtures[i].adversarial, dir / e.image);
        save_mask(fixtures[i].gt_mask, dir / e.masks.front());
        entries.push_back(std::move(e));
    }
    write_manifest(dir / "manifest.jsonl", entries);
    return entries;
}

}  // namespace pad

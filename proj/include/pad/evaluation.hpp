#pragma once

// Patch Localization Recall and pixel-overlap diagnostics over a manifest.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "pad/config.hpp"
#include "pad/fixtures.hpp"
#include "pad/pipeline.hpp"

namespace pad {

/// 1 iff ioa(gt, defense) >= 0.5.
inline int patch_flag(const BinaryMask& gt, const BinaryMask& defense) {
    if (count_set(gt) == 0) throw InvalidArgument("patch_flag: ground-truth mask is empty");
    return ioa(gt, defense) >= 0.5 ? 1 : 0;
}

/// Mean of the flags pooled over every patch of every image.
inline double recall_patch(std::span<const int> flags) {
    if (flags.empty()) throw InvalidArgument("recall_patch: no patches");
    std::size_t hits = 0;
    for (int f : flags) hits += f != 0;
    return static_cast<double>(hits) / static_cast<double>(flags.size());
}

struct PixelMetrics {
    double precision = 1.0;
    double recall = 1.0;
    double iou = 1.0;
};

/// Empty denominators: precision 1 if defense is empty, recall 1 if gt is
/// empty, IoU 1 if both are.
inline PixelMetrics pixel_metrics(const BinaryMask& gt, const BinaryMask& defense) {
    require_same_shape(gt, defense, "pixel_metrics");
    std::size_t g = 0;
    std::size_t d = 0;
    std::size_t both = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        g += gt[i] != 0;
        d += defense[i] != 0;
        both += gt[i] != 0 && defense[i] != 0;
    }
    const std::size_t uni = g + d - both;
    PixelMetrics m;
    m.precision = d == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(d);
    m.recall = g == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(g);
    m.iou = uni == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(uni);
    return m;
}

struct EvalRecord {
    std::string image;
    std::vector<int> flags;
    PixelMetrics pixels;
    double masked_fraction = 0.0;
    std::optional<int> estimated_quality;
    bool fell_back = false;
    std::optional<std::string> error;
};

struct EvalReport {
    std::vector<EvalRecord> records;
    double recall_patch = 0.0;
    std::size_t patches = 0;
    double mean_precision = 0.0;
    double mean_recall = 0.0;
    double mean_iou = 0.0;
    double mean_masked_fraction = 0.0;
    std::size_t failures = 0;
    nlohmann::json config;
};

struct EvalOptions {
    /// Score precomputed `<stem>.mask.png` files from this directory instead of running the pipeline.
    std::optional<std::filesystem::path> defense_dir;
};

/// Scores one image's final mask against its ground-truth patches.
inline EvalRecord score_image(const std::string& name, const std::vector<BinaryMask>& gts, const BinaryMask& defense) {
    EvalRecord r;
    r.image = name;
    if (gts.empty()) throw InvalidArgument(name + ": no ground-truth masks");
    BinaryMask gt_union(defense.width(), defense.height());
    for (const auto& g : gts) {
        require_same_shape(g, defense, "score_image");
        r.flags.push_back(patch_flag(g, defense));
        for (std::size_t i = 0; i < g.size(); ++i) gt_union[i] |= g[i];
    }
    r.pixels = pixel_metrics(gt_union, defense);
    r.masked_fraction = static_cast<double>(count_set(defense)) / static_cast<double>(defense.size());
    return r;
}

inline EvalRecord evaluate_entry(const ManifestEntry& e, const std::filesystem::path& root, const RunConfig& cfg,
                                 const EvalOptions& opt) {
    const auto image_path = root / e.image;
    std::vector<BinaryMask> gts;
    for (const auto& m : e.masks) gts.push_back(load_mask(root / m));
    const auto stem = std::filesystem::path(e.image).stem().string();
    if (opt.defense_dir) {
        const auto defense = load_mask(*opt.defense_dir / (stem + ".mask.png"));
        return score_image(e.image, gts, defense);
    }
    const auto img = load_image(image_path);
    const auto res = defend(img, cfg.pipeline, cfg.provider, stem);
    auto rec = score_image(e.image, gts, res.final_mask());
    rec.estimated_quality = res.maps.cd.quality;
    rec.fell_back = res.match.fell_back;
    return rec;
}

inline void aggregate(EvalReport& rep) {
    std::vector<int> flags;
    double p = 0.0;
    double r = 0.0;
    double iou = 0.0;
    double frac = 0.0;
    std::size_t scored = 0;
    rep.failures = 0;
    for (const auto& rec : rep.records) {
        flags.insert(flags.end(), rec.flags.begin(), rec.flags.end());
        if (rec.error) {
            ++rep.failures;
            continue;
        }
        p += rec.pixels.precision;
        r += rec.pixels.recall;
        iou += rec.pixels.iou;
        frac += rec.masked_fraction;
        ++scored;
    }
    rep.patches = flags.size();
    rep.recall_patch = flags.empty() ? 0.0 : recall_patch(flags);
    const double n = scored ? static_cast<double>(scored) : 1.0;
    rep.mean_precision = p / n;
    rep.mean_recall = r / n;
    rep.mean_iou = iou / n;
    rep.mean_masked_fraction = frac / n;
}

/// Per-image failures are recorded, with every listed patch counted as missed.
inline EvalReport run_eval(const std::vector<ManifestEntry>& entries, const std::filesystem::path& root,
                           const RunConfig& cfg, const EvalOptions& opt = {}) {
    cfg.validate();
    if (entries.empty()) throw InvalidArgument("run_eval: manifest has no entries");
    EvalReport rep;
    rep.config = to_json(cfg);
    rep.records.resize(entries.size());

    auto work = [&](std::size_t i) {
        try {
            rep.records[i] = evaluate_entry(entries[i], root, cfg, opt);
        } catch (const std::exception& ex) {
            EvalRecord r;
            r.image = entries[i].image;
            r.flags.assign(std::max<std::size_t>(1, entries[i].masks.size()), 0);
            r.error = ex.what();
            rep.records[i] = std::move(r);
        }
    };

    const auto workers = static_cast<std::size_t>(std::min<int>(cfg.jobs, static_cast<int>(entries.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < entries.size(); ++i) work(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < entries.size(); i = next++) work(i);
            });
        }
    }
    aggregate(rep);
    return rep;
}

inline EvalReport run_eval(const std::filesystem::path& manifest, const RunConfig& cfg, const EvalOptions& opt = {}) {
    return run_eval(read_manifest(manifest), manifest.parent_path(), cfg, opt);
}

inline nlohmann::json to_json(const EvalReport& rep) {
    auto records = nlohmann::json::array();
    for (const auto& r : rep.records) {
        nlohmann::json j{{"image", r.image}, {"flags", r.flags}};
        if (r.error) {
            j["error"] = *r.error;
        } else {
            j["pixel_precision"] = r.pixels.precision;
            j["pixel_recall"] = r.pixels.recall;
            j["pixel_iou"] = r.pixels.iou;
            j["masked_fraction"] = r.masked_fraction;
            if (r.estimated_quality) j["estimated_quality"] = *r.estimated_quality;
            j["fallback_to_hp"] = r.fell_back;
        }
        records.push_back(std::move(j));
    }
    return {{"config", rep.config},
            {"images", rep.records.size()},
            {"patches", rep.patches},
            {"recall_patch", rep.recall_patch},
            {"mean_pixel_precision", rep.mean_precision},
            {"mean_pixel_recall", rep.mean_recall},
            {"mean_pixel_iou", rep.mean_iou},
            {"mean_masked_fraction", rep.mean_masked_fraction},
            {"failures", rep.failures},
            {"records", std::move(records)}};
}

inline std::string to_text(const EvalReport& rep) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof line, "%-28s %7s %9s %9s %9s %9s\n", "image", "flags", "precision", "recall", "iou",
                  "masked");
    out += line;
    for (const auto& r : rep.records) {
        std::string flags;
        for (int f : r.flags) flags += f ? '1' : '0';
        if (r.error) {
            std::snprintf(line, sizeof line, "%-28s %7s  FAILED: %s\n", r.image.c_str(), flags.c_str(),
                          r.error->c_str());
        } else {
            std::snprintf(line, sizeof line, "%-28s %7s %9.4f %9.4f %9.4f %9.4f\n", r.image.c_str(), flags.c_str(),
                          r.pixels.precision, r.pixels.recall, r.pixels.iou, r.masked_fraction);
        }
        out += line;
    }
    std::snprintf(line, sizeof line, "\nimages %zu  patches %zu  failures %zu\n", rep.records.size(), rep.patches,
                  rep.failures);
    out += line;
    std::snprintf(line, sizeof line, "Recall_patch %.4f\nmean pixel precision %.4f  recall %.4f  iou %.4f  masked %.4f\n",
                  rep.recall_patch, rep.mean_precision, rep.mean_recall, rep.mean_iou, rep.mean_masked_fraction);
    out += line;
    return out;
}

}  // namespace pad

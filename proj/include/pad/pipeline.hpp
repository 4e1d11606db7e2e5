#pragma once

// End-to-end defense: localize, refine with region proposals, inpaint.

#include <optional>
#include <string>

#include "pad/fusion.hpp"
#include "pad/mask_refinement.hpp"
#include "pad/region_provider.hpp"
#include "pad/semantic_independence.hpp"
#include "pad/spatial_heterogeneity.hpp"

namespace pad {

struct PipelineConfig {
    MiConfig mi;
    CdConfig cd;
    FusionConfig fusion;
    /// IoA threshold for accepting a region proposal.
    double t_m = 0.5;

    void validate() const {
        mi.validate();
        cd.validate();
        fusion.validate();
        if (!(t_m >= 0.0 && t_m <= 1.0)) throw InvalidArgument("t_m must be in [0, 1]");
    }
};

struct HeatMaps {
    HeatMap mi;  ///< raw H_mi
    CdAnalysis cd;
    Localization loc;
};

inline HeatMaps compute_heatmaps(const ImageBuffer& img, const PipelineConfig& cfg) {
    cfg.validate();
    HeatMaps h;
    h.mi = mi_heatmap(img, cfg.mi);
    h.cd = analyze_recompression(img, cfg.cd,
                                 resolve_smooth_side(cfg.cd, img.width(), img.height(), cfg.fusion.delta));
    h.loc = localize_detailed(h.mi, h.cd.heat, cfg.fusion);
    return h;
}

struct DefenseResult {
    HeatMaps maps;
    RegionProposalSet proposals;
    MatchResult match;
    ImageBuffer defended;
    /// Set when the configured provider failed and connected components were used.
    std::optional<std::string> provider_error;

    const BinaryMask& final_mask() const { return match.mask; }
};

inline DefenseResult defend(const ImageBuffer& img, const PipelineConfig& cfg, const RegionProviderSpec& provider,
                            const std::string& stem) {
    DefenseResult r;
    r.maps = compute_heatmaps(img, cfg);
    if (r.maps.loc.flat) {
        // No contrast anywhere: nothing is localized.
        r.match = MatchResult{BinaryMask(img.width(), img.height()), {}, false};
        r.defended = img;
        return r;
    }
    const auto& h_p = r.maps.loc.patch_map;
    try {
        r.proposals = provide_regions(provider, img, h_p, stem);
    } catch (const ProviderError& e) {
        r.provider_error = e.what();
        r.proposals = connected_components(h_p);
    }
    r.match = match_masks_detailed(r.proposals, h_p, cfg.t_m);
    r.defended = inpaint_black(img, r.match.mask);
    return r;
}

inline DefenseResult defend(const ImageBuffer& img, const PipelineConfig& cfg = {}) {
    return defend(img, cfg, RegionProviderSpec{}, "");
}

}  // namespace pad

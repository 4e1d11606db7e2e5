#pragma once

// Region proposals, IoA matching and black-fill inpainting.

#include <string>
#include <vector>

#include "pad/image.hpp"

namespace pad {

enum class ProviderKind { Components, Directory, Sidecar };

inline const char* to_string(ProviderKind k) {
    switch (k) {
        case ProviderKind::Components: return "components";
        case ProviderKind::Directory: return "directory";
        case ProviderKind::Sidecar: return "sidecar";
    }
    return "unknown";
}

struct RegionProposalSet {
    std::vector<BinaryMask> masks;
    ProviderKind source = ProviderKind::Components;
};

/// 8-connected components, each as a full-size mask, ordered by the raster
/// position of their first pixel (top row first, then leftmost).
inline RegionProposalSet connected_components(const BinaryMask& m) {
    RegionProposalSet out;
    out.source = ProviderKind::Components;
    const int w = m.width();
    const int h = m.height();
    std::vector<std::uint8_t> seen(m.size(), 0);
    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < m.size(); ++start) {
        if (!m[start] || seen[start]) continue;
        BinaryMask comp(w, h);
        seen[start] = 1;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            comp[i] = 1;
            const int x = static_cast<int>(i % w);
            const int y = static_cast<int>(i / w);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx;
                    const int ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                    if (m[j] && !seen[j]) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                }
            }
        }
        out.masks.push_back(std::move(comp));
    }
    return out;
}

/// Intersection over the area of `mask`: |mask ∩ other| / |mask|.
inline double ioa(const BinaryMask& mask, const BinaryMask& other) {
    require_same_shape(mask, other, "ioa");
    std::size_t area = 0;
    std::size_t inter = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++area;
        inter += other[i] != 0;
    }
    if (area == 0) throw InvalidArgument("ioa: mask is empty");
    return static_cast<double>(inter) / static_cast<double>(area);
}

struct MatchResult {
    BinaryMask mask;
    std::vector<std::size_t> matched;  ///< indices into the proposal list
    bool fell_back = false;            ///< no proposal matched; mask == H_p
};

/// Union of proposals with ioa(proposal, H_p) >= t_m. When nothing matches
/// the localization map itself is returned.
inline MatchResult match_masks_detailed(const RegionProposalSet& proposals, const BinaryMask& h_p, double t_m) {
    MatchResult r{BinaryMask(h_p.width(), h_p.height()), {}, false};
    for (std::size_t k = 0; k < proposals.masks.size(); ++k) {
        const auto& pm = proposals.masks[k];
        require_same_shape(pm, h_p, "match_masks");
        if (count_set(pm) == 0) continue;
        if (ioa(pm, h_p) >= t_m) {
            r.matched.push_back(k);
            for (std::size_t i = 0; i < pm.size(); ++i) r.mask[i] |= pm[i];
        }
    }
    if (r.matched.empty()) {
        r.mask = h_p;
        r.fell_back = true;
    }
    return r;
}

inline BinaryMask match_masks(const RegionProposalSet& proposals, const BinaryMask& h_p, double t_m) {
    return match_masks_detailed(proposals, h_p, t_m).mask;
}

inline ImageBuffer inpaint_black(const ImageBuffer& img, const BinaryMask& mask) {
    require_same_shape(img, mask, "inpaint_black");
    ImageBuffer out = img;
    auto px = out.bytes();
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) px[3 * i] = px[3 * i + 1] = px[3 * i + 2] = 0;
    }
    return out;
}

}  // namespace pad

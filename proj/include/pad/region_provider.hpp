#pragma once

// Sources of region proposals used to refine H_p boundaries.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <filesystem>
#include <string>

#include <httplib.h>

#include "pad/codec.hpp"
#include "pad/mask_refinement.hpp"
#include "pad/protocol.hpp"

namespace pad {

struct RegionProviderSpec {
    ProviderKind kind = ProviderKind::Components;
    std::filesystem::path directory;  ///< Directory kind
    std::string endpoint;             ///< Sidecar kind, e.g. "http://127.0.0.1:8765"
    double timeout_s = 30.0;

    /// "components", "dir:PATH" or "sidecar:URL".
    static RegionProviderSpec parse(const std::string& text, double timeout_s = 30.0) {
        RegionProviderSpec s;
        s.timeout_s = timeout_s;
        if (text == "components") return s;
        if (text.rfind("dir:", 0) == 0 && text.size() > 4) {
            s.kind = ProviderKind::Directory;
            s.directory = text.substr(4);
            return s;
        }
        if (text.rfind("sidecar:", 0) == 0 && text.size() > 8) {
            s.kind = ProviderKind::Sidecar;
            s.endpoint = text.substr(8);
            return s;
        }
        throw InvalidArgument("provider must be components, dir:PATH or sidecar:URL, got '" + text + "'");
    }

    std::string to_string() const {
        switch (kind) {
            case ProviderKind::Components: return "components";
            case ProviderKind::Directory: return "dir:" + directory.string();
            case ProviderKind::Sidecar: return "sidecar:" + endpoint;
        }
        return "components";
    }
};

/// `<stem>.mask.<N>.png` files in `dir`, ordered by N.
inline RegionProposalSet directory_regions(const std::filesystem::path& dir, const std::string& stem,
                                           const ImageBuffer& img) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw ProviderError("directory", "not a readable directory: " + dir.string());

    std::vector<std::pair<unsigned long, fs::path>> found;
    const std::string prefix = stem + ".mask.";
    for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        const auto name = it->path().filename().string();
        if (name.size() <= prefix.size() + 4 || name.rfind(prefix, 0) != 0 || !name.ends_with(".png")) continue;
        const auto digits = std::string_view(name).substr(prefix.size(), name.size() - prefix.size() - 4);
        unsigned long n = 0;
        const auto [ptr, err] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (err != std::errc{} || ptr != digits.data() + digits.size()) continue;
        found.emplace_back(n, it->path());
    }
    if (ec) throw ProviderError("directory", "cannot list " + dir.string() + ": " + ec.message());
    std::sort(found.begin(), found.end());

    RegionProposalSet out;
    out.source = ProviderKind::Directory;
    for (const auto& [n, path] : found) {
        BinaryMask m;
        try {
            m = load_mask(path);
        } catch (const Error& e) {
            throw ProviderError("directory", e.what());
        }
        if (!m.same_shape(img)) throw ProviderError("directory", path.string() + ": mask size differs from image");
        if (count_set(m) > 0) out.masks.push_back(std::move(m));
    }
    return out;
}

/// One blocking POST /segment round trip.
inline RegionProposalSet sidecar_regions(const std::string& endpoint, const ImageBuffer& img, double timeout_s) {
    httplib::Client client(endpoint);
    if (!client.is_valid()) throw ProviderError("sidecar", "invalid endpoint '" + endpoint + "'");
    const auto usec = std::chrono::microseconds(static_cast<long long>(timeout_s * 1e6));
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                                  static_cast<long>(usec.count() % 1000000));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                            static_cast<long>(usec.count() % 1000000));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(usec).count(),
                             static_cast<long>(usec.count() % 1000000));

    const auto body = protocol::make_segment_request(img).dump();
    auto res = client.Post("/segment", body, "application/json");
    if (!res) throw ProviderError("sidecar", "unreachable: " + httplib::to_string(res.error()));
    if (res->status != 200) {
        throw ProviderError("sidecar", "HTTP " + std::to_string(res->status) + " from /segment");
    }
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolViolation(std::string("response is not JSON: ") + e.what());
    }
    RegionProposalSet out;
    out.source = ProviderKind::Sidecar;
    out.masks = protocol::parse_segment_response(parsed, img.width(), img.height());
    return out;
}

/// `stem` names the image for the directory provider.
inline RegionProposalSet provide_regions(const RegionProviderSpec& spec, const ImageBuffer& img,
                                         const BinaryMask& h_p, const std::string& stem) {
    switch (spec.kind) {
        case ProviderKind::Components: return connected_components(h_p);
        case ProviderKind::Directory: return directory_regions(spec.directory, stem, img);
        case ProviderKind::Sidecar: return sidecar_regions(spec.endpoint, img, spec.timeout_s);
    }
    return connected_components(h_p);
}

}  // namespace pad

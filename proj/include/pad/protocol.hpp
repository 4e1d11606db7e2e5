#pragma once

// Wire format shared with the segmentation sidecar.
//
//   POST /segment  {"width":W,"height":H,"image_b64":"<base64 PNG>"}
//   200            {"masks":[{"rle":[[start,len],...]}, ...]}
//
// Runs index row-major pixels, are sorted ascending and never overlap.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pad/codec.hpp"
#include "pad/errors.hpp"
#include "pad/image.hpp"

namespace pad::protocol {

using Run = std::pair<std::uint64_t, std::uint64_t>;  // (start, length)

inline std::string base64_encode(std::span<const std::uint8_t> bytes) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < bytes.size(); i += 3) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += kAlphabet[v & 63];
    }
    if (i + 1 == bytes.size()) {
        const std::uint32_t v = bytes[i] << 16;
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == bytes.size()) {
        const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out += kAlphabet[(v >> 18) & 63];
        out += kAlphabet[(v >> 12) & 63];
        out += kAlphabet[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text) {
    auto value = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw InvalidArgument("base64: length not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::array<int, 4> v{};
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            const char c = text[i + k];
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                v[k] = 0;
                ++pad;
            } else {
                if (pad > 0 || (v[k] = value(c)) < 0) throw InvalidArgument("base64: invalid character");
            }
        }
        const std::uint32_t word = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
        out.push_back(static_cast<std::uint8_t>(word >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(word >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(word));
    }
    return out;
}

inline std::vector<Run> rle_encode(const BinaryMask& m) {
    std::vector<Run> runs;
    std::size_t i = 0;
    while (i < m.size()) {
        if (!m[i]) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < m.size() && m[i]) ++i;
        runs.emplace_back(start, i - start);
    }
    return runs;
}

/// Throws ProtocolViolation for unsorted, overlapping, empty or out-of-range runs.
inline BinaryMask rle_decode(const std::vector<Run>& runs, int width, int height) {
    BinaryMask m(width, height);
    const std::uint64_t n = m.size();
    std::uint64_t next_free = 0;
    for (const auto& [start, len] : runs) {
        if (len == 0) throw ProtocolViolation("zero-length run");
        if (start < next_free) throw ProtocolViolation("runs unsorted or overlapping");
        if (start >= n || len > n - start) {
            throw ProtocolViolation("run [" + std::to_string(start) + "," + std::to_string(len) +
                                    "] exceeds " + std::to_string(width) + "x" + std::to_string(height) + " mask");
        }
        for (std::uint64_t i = start; i < start + len; ++i) m[i] = 1;
        next_free = start + len;
    }
    return m;
}

inline nlohmann::json make_segment_request(const ImageBuffer& img) {
    return {{"width", img.width()}, {"height", img.height()}, {"image_b64", base64_encode(codec::encode_png(img))}};
}

inline nlohmann::json make_segment_response(const std::vector<BinaryMask>& masks) {
    auto arr = nlohmann::json::array();
    for (const auto& m : masks) {
        auto runs = nlohmann::json::array();
        for (const auto& [s, l] : rle_encode(m)) runs.push_back({s, l});
        arr.push_back({{"rle", std::move(runs)}});
    }
    return {{"masks", std::move(arr)}};
}

/// Decodes a request body back into an image (the sidecar side of the contract).
inline ImageBuffer parse_segment_request(const nlohmann::json& body) {
    if (!body.is_object() || !body.contains("width") || !body.contains("height") || !body.contains("image_b64")) {
        throw InvalidArgument("segment request: missing width/height/image_b64");
    }
    const auto bytes = base64_decode(body.at("image_b64").get<std::string>());
    auto img = codec::decode_png(bytes);
    if (img.width() != body.at("width").get<int>() || img.height() != body.at("height").get<int>()) {
        throw InvalidArgument("segment request: declared size does not match image");
    }
    return img;
}

/// Masks with no runs are dropped; anything else malformed is a ProtocolViolation.
inline std::vector<BinaryMask> parse_segment_response(const nlohmann::json& body, int width, int height) {
    if (!body.is_object() || !body.contains("masks") || !body.at("masks").is_array()) {
        throw ProtocolViolation("response lacks a 'masks' array");
    }
    std::vector<BinaryMask> out;
    for (const auto& entry : body.at("masks")) {
        if (!entry.is_object() || !entry.contains("rle") || !entry.at("rle").is_array()) {
            throw ProtocolViolation("mask entry lacks an 'rle' array");
        }
        if ((entry.contains("width") && entry.at("width") != width) ||
            (entry.contains("height") && entry.at("height") != height)) {
            throw ProtocolViolation("mask dimensions differ from the request");
        }
        std::vector<Run> runs;
        for (const auto& run : entry.at("rle")) {
            if (!run.is_array() || run.size() != 2 || !run[0].is_number_unsigned() || !run[1].is_number_unsigned()) {
                throw ProtocolViolation("run must be [start, len] with nonnegative integers");
            }
            runs.emplace_back(run[0].get<std::uint64_t>(), run[1].get<std::uint64_t>());
        }
        if (runs.empty()) continue;
        out.push_back(rle_decode(runs, width, height));
    }
    return out;
}

}  // namespace pad::protocol

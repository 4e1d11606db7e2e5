#pragma once

// PNG and baseline JPEG encode/decode on top of libpng and libjpeg.

#include <png.h>

#include <csetjmp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

// jpeglib.h needs size_t and FILE declared first.
#include <jpeglib.h>

#include "pad/image.hpp"

namespace pad {

enum class FileFormat { Png, Jpeg };

namespace codec {

namespace detail {

struct JpegErrorManager {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

extern "C" inline void jpeg_error_exit_cb(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

extern "C" inline void jpeg_silent_cb(j_common_ptr, int) {}

// The setjmp frames below hold only trivially destructible locals; every
// owning object lives in the caller.
inline bool encode_jpeg_raw(const std::uint8_t* rgb, int width, int height, int quality, unsigned char** out,
                            unsigned long* out_size, char* message) {
    jpeg_compress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit_cb;
    err.pub.emit_message = jpeg_silent_cb;
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::snprintf(message, JMSG_LENGTH_MAX, "%s", err.message);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, out, out_size);
    cinfo.image_width = static_cast<JDIMENSION>(width);
    cinfo.image_height = static_cast<JDIMENSION>(height);
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    cinfo.dct_method = JDCT_ISLOW;
    cinfo.optimize_coding = FALSE;
    for (int c = 0; c < cinfo.num_components; ++c) {
        cinfo.comp_info[c].h_samp_factor = 1;
        cinfo.comp_info[c].v_samp_factor = 1;
    }
    jpeg_start_compress(&cinfo, TRUE);
    const auto stride = static_cast<std::size_t>(width) * 3;
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(rgb + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

inline bool decode_jpeg_raw(const unsigned char* data, unsigned long size, std::vector<std::uint8_t>& rgb,
                            int& width, int& height, char* message) {
    jpeg_decompress_struct cinfo{};
    JpegErrorManager err{};
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit_cb;
    err.pub.emit_message = jpeg_silent_cb;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        std::snprintf(message, JMSG_LENGTH_MAX, "%s", err.message);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, data, size);
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    cinfo.dct_method = JDCT_ISLOW;
    jpeg_start_decompress(&cinfo);
    width = static_cast<int>(cinfo.output_width);
    height = static_cast<int>(cinfo.output_height);
    const long long pixels = static_cast<long long>(width) * height;
    if (width < 1 || height < 1 || pixels > (1LL << 28)) {
        jpeg_destroy_decompress(&cinfo);
        std::snprintf(message, JMSG_LENGTH_MAX, "unsupported dimensions %dx%d", width, height);
        return false;
    }
    rgb.resize(static_cast<std::size_t>(pixels) * 3);
    const auto stride = static_cast<std::size_t>(width) * 3;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = rgb.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

}  // namespace detail

/// Baseline JPEG, 4:4:4, integer DCT, fixed Huffman tables.
inline std::vector<std::uint8_t> encode_jpeg(const ImageBuffer& img, int quality) {
    if (quality < 1 || quality > 100) {
        throw InvalidArgument("JPEG quality must be in [1, 100], got " + std::to_string(quality));
    }
    unsigned char* buf = nullptr;
    unsigned long size = 0;
    char message[JMSG_LENGTH_MAX] = {};
    const bool ok = detail::encode_jpeg_raw(img.bytes().data(), img.width(), img.height(), quality, &buf, &size,
                                            message);
    std::vector<std::uint8_t> out;
    if (ok) out.assign(buf, buf + size);
    std::free(buf);
    if (!ok) throw CodecError(std::string("JPEG encode failed: ") + message);
    return out;
}

inline ImageBuffer decode_jpeg(std::span<const std::uint8_t> bytes) {
    std::vector<std::uint8_t> rgb;
    int w = 0;
    int h = 0;
    char message[JMSG_LENGTH_MAX] = {};
    if (!detail::decode_jpeg_raw(bytes.data(), static_cast<unsigned long>(bytes.size()), rgb, w, h, message)) {
        throw CodecError(std::string("JPEG decode failed: ") + message);
    }
    return ImageBuffer(w, h, std::move(rgb));
}

namespace detail {

struct PngImage {
    png_image image{};
    PngImage() { image.version = PNG_IMAGE_VERSION; }
    ~PngImage() { png_image_free(&image); }
    PngImage(const PngImage&) = delete;
    PngImage& operator=(const PngImage&) = delete;
};

inline std::vector<std::uint8_t> decode_png_as(std::span<const std::uint8_t> bytes, png_uint_32 format, int& width,
                                               int& height) {
    PngImage png;
    if (!png_image_begin_read_from_memory(&png.image, bytes.data(), bytes.size())) {
        throw CodecError(std::string("PNG decode failed: ") + png.image.message);
    }
    width = static_cast<int>(png.image.width);
    height = static_cast<int>(png.image.height);
    if (width < 1 || height < 1 || static_cast<long long>(width) * height > (1LL << 28)) {
        throw CodecError("PNG dimensions unsupported: " + std::to_string(width) + "x" + std::to_string(height));
    }
    png.image.format = format;
    std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(png.image));
    // Alpha, if any, is composited over black.
    png_color black{0, 0, 0};
    if (!png_image_finish_read(&png.image, &black, pixels.data(), 0, nullptr)) {
        throw CodecError(std::string("PNG decode failed: ") + png.image.message);
    }
    return pixels;
}

inline std::vector<std::uint8_t> encode_png_as(const std::uint8_t* pixels, int width, int height,
                                               png_uint_32 format) {
    PngImage png;
    png.image.width = static_cast<png_uint_32>(width);
    png.image.height = static_cast<png_uint_32>(height);
    png.image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&png.image, nullptr, &size, 0, pixels, 0, nullptr)) {
        throw CodecError(std::string("PNG encode failed: ") + png.image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&png.image, out.data(), &size, 0, pixels, 0, nullptr)) {
        throw CodecError(std::string("PNG encode failed: ") + png.image.message);
    }
    out.resize(size);
    return out;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const ImageBuffer& img) {
    return detail::encode_png_as(img.bytes().data(), img.width(), img.height(), PNG_FORMAT_RGB);
}

inline std::vector<std::uint8_t> encode_png(const GrayBuffer& g) {
    return detail::encode_png_as(g.values().data(), g.width(), g.height(), PNG_FORMAT_GRAY);
}

/// Grayscale and alpha inputs are converted to RGB.
inline ImageBuffer decode_png(std::span<const std::uint8_t> bytes) {
    int w = 0;
    int h = 0;
    auto px = detail::decode_png_as(bytes, PNG_FORMAT_RGB, w, h);
    return ImageBuffer(w, h, std::move(px));
}

inline GrayBuffer decode_png_gray(std::span<const std::uint8_t> bytes) {
    int w = 0;
    int h = 0;
    auto px = detail::decode_png_as(bytes, PNG_FORMAT_GRAY, w, h);
    return GrayBuffer(w, h, std::move(px));
}

inline bool is_png(std::span<const std::uint8_t> b) {
    static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    return b.size() >= 8 && std::equal(std::begin(sig), std::end(sig), b.begin());
}

inline bool is_jpeg(std::span<const std::uint8_t> b) {
    return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

}  // namespace codec

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading file: " + path.string());
    return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write file: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("error writing file: " + path.string());
}

inline ImageBuffer decode_image(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>") {
    try {
        if (codec::is_png(bytes)) return codec::decode_png(bytes);
        if (codec::is_jpeg(bytes)) return codec::decode_jpeg(bytes);
    } catch (const CodecError& e) {
        throw IoError(name + ": " + e.what());
    }
    throw UnsupportedFormat(name + ": unsupported image format (expected PNG or JPEG)");
}

/// Format is sniffed from content, not the extension.
inline ImageBuffer load_image(const std::filesystem::path& path) {
    return decode_image(read_file(path), path.string());
}

/// Format from extension: .png (lossless) or .jpg/.jpeg at `jpeg_quality`.
inline void save_image(const ImageBuffer& img, const std::filesystem::path& path, int jpeg_quality = 95) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") {
        write_file(path, codec::encode_png(img));
    } else if (ext == ".jpg" || ext == ".jpeg") {
        write_file(path, codec::encode_jpeg(img, jpeg_quality));
    } else {
        throw UnsupportedFormat(path.string() + ": unsupported output extension '" + ext + "'");
    }
}

/// Single-channel PNG, 0 = background, 255 = set.
inline void save_mask(const BinaryMask& m, const std::filesystem::path& path) {
    GrayBuffer g(m.width(), m.height());
    for (std::size_t i = 0; i < m.size(); ++i) g[i] = m[i] ? 255 : 0;
    write_file(path, codec::encode_png(g));
}

inline BinaryMask decode_mask(std::span<const std::uint8_t> bytes, const std::string& name = "<memory>") {
    if (!codec::is_png(bytes)) throw UnsupportedFormat(name + ": masks must be PNG");
    GrayBuffer g;
    try {
        g = codec::decode_png_gray(bytes);
    } catch (const CodecError& e) {
        throw IoError(name + ": " + e.what());
    }
    BinaryMask m(g.width(), g.height());
    for (std::size_t i = 0; i < g.size(); ++i) m[i] = g[i] != 0 ? 1 : 0;
    return m;
}

inline BinaryMask load_mask(const std::filesystem::path& path) { return decode_mask(read_file(path), path.string()); }

/// Heat maps are exported min-max scaled to 8-bit grayscale.
inline void save_heatmap(const HeatMap& h, const std::filesystem::path& path) {
    GrayBuffer g(h.width(), h.height());
    const auto [lo, hi] = std::minmax_element(h.values().begin(), h.values().end());
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double v = range > 0.0 ? (h[i] - *lo) / range * 255.0 : 0.0;
        g[i] = static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
    }
    write_file(path, codec::encode_png(g));
}

}  // namespace pad

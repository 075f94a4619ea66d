#pragma once

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "ccplan/error.hpp"
#include "ccplan/raster.hpp"

namespace ccplan {

namespace detail {

struct jpeg_error_ctx {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

inline void jpeg_error_trampoline(j_common_ptr cinfo) {
    auto* ctx = reinterpret_cast<jpeg_error_ctx*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, ctx->message);
    std::longjmp(ctx->jump, 1);
}

inline void jpeg_silence_message(j_common_ptr, int) {}
inline void jpeg_silence_output(j_common_ptr) {}

inline void install_jpeg_error_handler(jpeg_error_ctx& ctx, jpeg_error_mgr*& err_field) {
    err_field = jpeg_std_error(&ctx.mgr);
    ctx.mgr.error_exit = jpeg_error_trampoline;
    ctx.mgr.emit_message = jpeg_silence_message;
    ctx.mgr.output_message = jpeg_silence_output;
    ctx.message[0] = '\0';
}

struct png_mem_cursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t offset;
};

inline void png_mem_read(png_structp png, png_bytep out, png_size_t len) {
    auto* cur = static_cast<png_mem_cursor*>(png_get_io_ptr(png));
    if (cur->offset + len > cur->size)
        png_error(png, "unexpected end of stream");
    std::memcpy(out, cur->data + cur->offset, len);
    cur->offset += len;
}

inline bool looks_like_png(std::span<const std::uint8_t> bytes) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    return bytes.size() >= 8 && std::memcmp(bytes.data(), sig, 8) == 0;
}

inline bool looks_like_jpeg(std::span<const std::uint8_t> bytes) {
    return bytes.size() >= 2 && bytes[0] == 0xff && bytes[1] == 0xd8;
}

inline RasterImage decode_png(std::span<const std::uint8_t> bytes) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png)
        throw decode_error("png: failed to allocate read struct");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw decode_error("png: failed to allocate info struct");
    }

    RasterImage img;
    std::vector<png_bytep> rows;
    png_mem_cursor cursor{bytes.data(), bytes.size(), 0};

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw decode_error("png: malformed stream");
    }

    png_set_read_fn(png, &cursor, png_mem_read);
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int bit_depth = png_get_bit_depth(png, info);
    int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS))
        png_set_tRNS_to_alpha(png);
    if (bit_depth == 16)
        png_set_scale_16(png); // 16-bit sources rescaled to 8-bit
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    int out_channels = static_cast<int>(png_get_channels(png, info));
    if (out_channels != 1 && out_channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw decode_error("png: unsupported channel count " + std::to_string(out_channels));
    }

    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.channels = out_channels;
    img.pixels.resize(static_cast<std::size_t>(w) * h * out_channels);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.pixels.data() + static_cast<std::size_t>(y) * w * out_channels;

    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

inline RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
    jpeg_decompress_struct cinfo;
    jpeg_error_ctx err;
    install_jpeg_error_handler(err, cinfo.err);

    RasterImage img;

    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        throw decode_error(std::string("jpeg: ") + err.message);
    }

    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = (cinfo.num_components == 1) ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);

    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.channels = cinfo.output_components;
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height * img.channels);

    std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.pixels.data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);

    if (!img.valid())
        throw decode_error("jpeg: decoded image has unsupported layout");
    return img;
}

} // namespace detail

/// Decodes a PNG or JPEG byte stream (format sniffed from the signature).
inline RasterImage decode_image(std::span<const std::uint8_t> bytes) {
    if (detail::looks_like_png(bytes))
        return detail::decode_png(bytes);
    if (detail::looks_like_jpeg(bytes))
        return detail::decode_jpeg(bytes);
    throw decode_error("unrecognized image signature (expected PNG or JPEG)");
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw validation_error("cannot open file: " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

inline RasterImage decode_image_file(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    try {
        return decode_image(bytes);
    } catch (const decode_error& e) {
        throw decode_error(path.string() + ": " + e.what());
    }
}

/// Baseline sequential JPEG at quality 25 (libjpeg 1-100 scale, Annex K
/// tables rescaled). RGB input is encoded as YCbCr with 4:2:0 chroma
/// subsampling, grayscale as a single component. Deterministic.
inline std::vector<std::uint8_t> jpeg_encode_q25(const RasterImage& img) {
    detail::require_valid(img, "jpeg_encode_q25");

    jpeg_compress_struct cinfo;
    detail::jpeg_error_ctx err;
    detail::install_jpeg_error_handler(err, cinfo.err);

    unsigned char* buffer = nullptr;
    unsigned long buffer_size = 0;

    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        if (buffer)
            std::free(buffer);
        throw decode_error(std::string("jpeg encode: ") + err.message);
    }

    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &buffer_size);

    cinfo.image_width = static_cast<JDIMENSION>(img.width);
    cinfo.image_height = static_cast<JDIMENSION>(img.height);
    cinfo.input_components = img.channels;
    cinfo.in_color_space = (img.channels == 1) ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_set_defaults(&cinfo); // baseline sequential, 4:2:0 for YCbCr
    jpeg_set_quality(&cinfo, 25, TRUE);
    cinfo.optimize_coding = TRUE; // per-image Huffman tables; deterministic

    jpeg_start_compress(&cinfo, TRUE);
    std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(img.pixels.data() + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);

    std::vector<std::uint8_t> out(buffer, buffer + buffer_size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

} // namespace ccplan

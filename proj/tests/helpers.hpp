#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <png.h>

#include "ccplan/raster.hpp"

namespace testutil {

inline ccplan::RasterImage constant_image(int w, int h, std::uint8_t value, int channels = 1) {
    ccplan::RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.pixels.assign(static_cast<std::size_t>(w) * h * channels, value);
    return img;
}

// White noise. Raw generator bits keep this reproducible across library
// implementations.
inline ccplan::RasterImage noise_image(int w, int h, std::uint32_t seed, int channels = 1) {
    std::mt19937 gen(seed);
    ccplan::RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = channels;
    img.pixels.resize(static_cast<std::size_t>(w) * h * channels);
    for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(gen() & 0xff);
    return img;
}

// Smooth blobby content, loosely shaped like a biomedical image: a bright
// elliptical structure over a graded background with mild texture.
inline ccplan::RasterImage blob_image(int w, int h, std::uint32_t seed) {
    std::mt19937 gen(seed);
    auto unit = [&]() { return (gen() & 0xffff) / 65535.0; };
    double cx = (0.3 + 0.4 * unit()) * w;
    double cy = (0.3 + 0.4 * unit()) * h;
    double rx = (0.15 + 0.2 * unit()) * w;
    double ry = (0.15 + 0.2 * unit()) * h;

    ccplan::RasterImage img;
    img.width = w;
    img.height = h;
    img.channels = 1;
    img.pixels.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double dx = (x - cx) / rx;
            double dy = (y - cy) / ry;
            double d2 = dx * dx + dy * dy;
            double v = 60.0 + 40.0 * (static_cast<double>(x) / w) +
                       120.0 * std::exp(-d2) + 10.0 * ((gen() & 0xff) / 255.0);
            img.pixels[static_cast<std::size_t>(y) * w + x] =
                static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
        }
    }
    return img;
}

inline ccplan::MaskImage blob_mask(int w, int h, std::uint32_t seed) {
    std::mt19937 gen(seed);
    auto unit = [&]() { return (gen() & 0xffff) / 65535.0; };
    double cx = (0.3 + 0.4 * unit()) * w;
    double cy = (0.3 + 0.4 * unit()) * h;
    double rx = (0.15 + 0.2 * unit()) * w;
    double ry = (0.15 + 0.2 * unit()) * h;

    ccplan::MaskImage mask;
    mask.width = w;
    mask.height = h;
    mask.pixels.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double dx = (x - cx) / rx;
            double dy = (y - cy) / ry;
            mask.pixels[static_cast<std::size_t>(y) * w + x] = (dx * dx + dy * dy <= 1.0) ? 1 : 0;
        }
    return mask;
}

inline ccplan::RasterImage rotate90(const ccplan::RasterImage& img) {
    ccplan::RasterImage out;
    out.width = img.height;
    out.height = img.width;
    out.channels = img.channels;
    out.pixels.resize(img.pixels.size());
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(img.height - 1 - y, x, c) = img.at(x, y, c);
    return out;
}

inline ccplan::RasterImage flip_horizontal(const ccplan::RasterImage& img) {
    ccplan::RasterImage out = img;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                out.at(img.width - 1 - x, y, c) = img.at(x, y, c);
    return out;
}

namespace detail {

inline void png_vector_write(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

inline void png_vector_flush(png_structp) {}

} // namespace detail

/// In-memory PNG encoder for decode-path tests (8-bit gray or RGB).
inline std::vector<std::uint8_t> png_encode(const ccplan::RasterImage& img) {
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png_encode failed");
    }
    png_set_write_fn(png, &out, detail::png_vector_write, detail::png_vector_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::size_t stride = static_cast<std::size_t>(img.width) * img.channels;
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, const_cast<png_bytep>(img.pixels.data() + y * stride));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

/// RGBA PNG encoder (tests alpha stripping on decode).
inline std::vector<std::uint8_t> png_encode_rgba(int w, int h,
                                                 const std::vector<std::uint8_t>& rgba) {
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png_encode_rgba failed");
    }
    png_set_write_fn(png, &out, detail::png_vector_write, detail::png_vector_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB_ALPHA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h; ++y)
        png_write_row(png, const_cast<png_bytep>(rgba.data() + static_cast<std::size_t>(y) * w * 4));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

/// 16-bit grayscale PNG encoder (tests the 8-bit rescale on decode).
inline std::vector<std::uint8_t> png_encode_gray16(int w, int h,
                                                   const std::vector<std::uint16_t>& samples) {
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("png_encode_gray16 failed");
    }
    png_set_write_fn(png, &out, detail::png_vector_write, detail::png_vector_flush);
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 16,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 2);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            std::uint16_t v = samples[static_cast<std::size_t>(y) * w + x];
            row[static_cast<std::size_t>(x) * 2] = static_cast<std::uint8_t>(v >> 8);
            row[static_cast<std::size_t>(x) * 2 + 1] = static_cast<std::uint8_t>(v & 0xff);
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline std::filesystem::path source_dir() { return std::filesystem::path(CCPLAN_SOURCE_DIR); }

} // namespace testutil

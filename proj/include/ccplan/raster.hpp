#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ccplan/error.hpp"

namespace ccplan {

/// Decoded 8-bit pixel grid, row-major, interleaved channels (1 or 3).
struct RasterImage {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    bool valid() const {
        return width >= 1 && height >= 1 && (channels == 1 || channels == 3) &&
               pixels.size() == static_cast<std::size_t>(width) * height * channels;
    }

    std::uint8_t at(int x, int y, int c = 0) const {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }

    std::uint8_t& at(int x, int y, int c = 0) {
        return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
    }
};

/// Binary segmentation mask paired with a RasterImage. Samples are 0 or 1.
struct MaskImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    bool valid() const {
        if (width < 1 || height < 1 ||
            pixels.size() != static_cast<std::size_t>(width) * height)
            return false;
        return std::all_of(pixels.begin(), pixels.end(),
                           [](std::uint8_t p) { return p <= 1; });
    }

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

namespace detail {

inline std::uint8_t round_half_up_u8(double v) {
    double r = std::floor(v + 0.5);
    return static_cast<std::uint8_t>(std::clamp(r, 0.0, 255.0));
}

inline void require_valid(const RasterImage& img, const char* op) {
    if (!img.valid())
        throw validation_error(std::string(op) + ": invalid raster image");
}

inline void require_scale_factor(const RasterImage& img, int factor, const char* op) {
    if (factor != 1 && factor != 2 && factor != 4 && factor != 8 && factor != 16)
        throw validation_error(std::string(op) + ": factor must be one of {1,2,4,8,16}, got " +
                               std::to_string(factor));
    if (factor > std::min(img.width, img.height))
        throw validation_error(std::string(op) + ": factor " + std::to_string(factor) +
                               " exceeds min image dimension " +
                               std::to_string(std::min(img.width, img.height)));
}

} // namespace detail

/// Uncompressed size in bytes: one byte per 8-bit sample.
inline std::size_t raw_size(const RasterImage& img) {
    detail::require_valid(img, "raw_size");
    return static_cast<std::size_t>(img.width) * img.height * img.channels;
}

/// BT.601 luma conversion, rounded half up. Grayscale input passes through.
inline RasterImage to_grayscale(const RasterImage& img) {
    detail::require_valid(img, "to_grayscale");
    if (img.channels == 1)
        return img;
    RasterImage out;
    out.width = img.width;
    out.height = img.height;
    out.channels = 1;
    out.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    const std::uint8_t* src = img.pixels.data();
    for (std::size_t i = 0; i < out.pixels.size(); ++i, src += 3) {
        double luma = 0.299 * src[0] + 0.587 * src[1] + 0.114 * src[2];
        out.pixels[i] = detail::round_half_up_u8(luma);
    }
    return out;
}

/// Box-average downsampling by a power-of-two factor.
/// Output dimensions are ceil(dim / factor); edge blocks are clipped.
inline RasterImage downsample(const RasterImage& img, int factor) {
    detail::require_valid(img, "downsample");
    detail::require_scale_factor(img, factor, "downsample");
    if (factor == 1)
        return img;

    RasterImage out;
    out.width = (img.width + factor - 1) / factor;
    out.height = (img.height + factor - 1) / factor;
    out.channels = img.channels;
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);

    for (int oy = 0; oy < out.height; ++oy) {
        int y0 = oy * factor;
        int y1 = std::min(y0 + factor, img.height);
        for (int ox = 0; ox < out.width; ++ox) {
            int x0 = ox * factor;
            int x1 = std::min(x0 + factor, img.width);
            int count = (x1 - x0) * (y1 - y0);
            for (int c = 0; c < img.channels; ++c) {
                std::uint64_t sum = 0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x)
                        sum += img.at(x, y, c);
                out.at(ox, oy, c) =
                    detail::round_half_up_u8(static_cast<double>(sum) / count);
            }
        }
    }
    return out;
}

/// Bilinear resampling to an arbitrary target size (pixel-center alignment).
inline RasterImage bilinear_resize(const RasterImage& img, int target_w, int target_h) {
    detail::require_valid(img, "bilinear_resize");
    if (target_w < 1 || target_h < 1)
        throw validation_error("bilinear_resize: target dimensions must be positive");
    if (target_w == img.width && target_h == img.height)
        return img;

    RasterImage out;
    out.width = target_w;
    out.height = target_h;
    out.channels = img.channels;
    out.pixels.resize(static_cast<std::size_t>(target_w) * target_h * img.channels);

    const double sx = static_cast<double>(img.width) / target_w;
    const double sy = static_cast<double>(img.height) / target_h;
    for (int oy = 0; oy < target_h; ++oy) {
        double fy = (oy + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
        int y0 = static_cast<int>(fy);
        int y1 = std::min(y0 + 1, img.height - 1);
        double wy = fy - y0;
        for (int ox = 0; ox < target_w; ++ox) {
            double fx = (ox + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
            int x0 = static_cast<int>(fx);
            int x1 = std::min(x0 + 1, img.width - 1);
            double wx = fx - x0;
            for (int c = 0; c < img.channels; ++c) {
                double v = (1.0 - wy) * ((1.0 - wx) * img.at(x0, y0, c) + wx * img.at(x1, y0, c)) +
                           wy * ((1.0 - wx) * img.at(x0, y1, c) + wx * img.at(x1, y1, c));
                out.at(ox, oy, c) = detail::round_half_up_u8(v);
            }
        }
    }
    return out;
}

/// Bilinear upsampling back to the pre-downsample dimensions.
/// The factor must be consistent with the target: ceil(target / factor) == input dim.
inline RasterImage upsample(const RasterImage& img, int factor, int target_w, int target_h) {
    detail::require_valid(img, "upsample");
    if (factor != 1 && factor != 2 && factor != 4 && factor != 8 && factor != 16)
        throw validation_error("upsample: factor must be one of {1,2,4,8,16}");
    if (target_w < img.width || target_h < img.height)
        throw validation_error("upsample: target " + std::to_string(target_w) + "x" +
                               std::to_string(target_h) + " smaller than input " +
                               std::to_string(img.width) + "x" + std::to_string(img.height));
    if ((target_w + factor - 1) / factor != img.width ||
        (target_h + factor - 1) / factor != img.height)
        throw validation_error("upsample: target dimensions do not match factor " +
                               std::to_string(factor) + " applied to input dimensions");
    return bilinear_resize(img, target_w, target_h);
}

/// Majority-pooled mask downsampling; ties count as foreground.
inline MaskImage downsample_mask(const MaskImage& mask, int factor) {
    if (!mask.valid())
        throw validation_error("downsample_mask: invalid mask");
    if (factor != 1 && factor != 2 && factor != 4 && factor != 8 && factor != 16)
        throw validation_error("downsample_mask: factor must be one of {1,2,4,8,16}");
    if (factor > std::min(mask.width, mask.height))
        throw validation_error("downsample_mask: factor exceeds min mask dimension");
    if (factor == 1)
        return mask;

    MaskImage out;
    out.width = (mask.width + factor - 1) / factor;
    out.height = (mask.height + factor - 1) / factor;
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);

    for (int oy = 0; oy < out.height; ++oy) {
        int y0 = oy * factor;
        int y1 = std::min(y0 + factor, mask.height);
        for (int ox = 0; ox < out.width; ++ox) {
            int x0 = ox * factor;
            int x1 = std::min(x0 + factor, mask.width);
            int total = (x1 - x0) * (y1 - y0);
            int fg = 0;
            for (int y = y0; y < y1; ++y)
                for (int x = x0; x < x1; ++x)
                    fg += mask.at(x, y);
            out.pixels[static_cast<std::size_t>(oy) * out.width + ox] =
                (2 * fg >= total) ? 1 : 0;
        }
    }
    return out;
}

/// Nearest-neighbor mask upsampling to explicit target dimensions.
inline MaskImage upsample_mask_nearest(const MaskImage& mask, int target_w, int target_h) {
    if (!mask.valid())
        throw validation_error("upsample_mask_nearest: invalid mask");
    if (target_w < mask.width || target_h < mask.height)
        throw validation_error("upsample_mask_nearest: target smaller than input");
    if (target_w == mask.width && target_h == mask.height)
        return mask;

    MaskImage out;
    out.width = target_w;
    out.height = target_h;
    out.pixels.resize(static_cast<std::size_t>(target_w) * target_h);
    for (int oy = 0; oy < target_h; ++oy) {
        int sy = std::min(static_cast<int>((static_cast<std::int64_t>(oy) * mask.height) / target_h),
                          mask.height - 1);
        for (int ox = 0; ox < target_w; ++ox) {
            int sx = std::min(static_cast<int>((static_cast<std::int64_t>(ox) * mask.width) / target_w),
                              mask.width - 1);
            out.pixels[static_cast<std::size_t>(oy) * target_w + ox] = mask.at(sx, sy);
        }
    }
    return out;
}

} // namespace ccplan

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "ccplan/codec.hpp"
#include "ccplan/raster.hpp"

namespace ccplan {

/// Inverse JPEG compression ratio at quality 25: compressed size over raw
/// 8-bit sample count. Close to 0 for redundant images, up to ~1 for noise.
inline double jpeg_complexity(const RasterImage& img) {
    return static_cast<double>(jpeg_encode_q25(img).size()) /
           static_cast<double>(raw_size(img));
}

/// Scale-k variant: subsample by 2^k, JPEG round-trip, upsample back to the
/// original frame, and measure the re-encoded size against the raw original.
/// The upsample keeps every scale measured against the same reference frame.
inline double layer_wise_jpeg_complexity(const RasterImage& img, int scale_index) {
    detail::require_valid(img, "layer_wise_jpeg_complexity");
    if (scale_index < 0)
        throw validation_error("layer_wise_jpeg_complexity: negative scale index");
    int factor = 1 << scale_index;
    detail::require_scale_factor(img, factor, "layer_wise_jpeg_complexity");

    RasterImage down = downsample(img, factor);
    RasterImage round_tripped = decode_image(jpeg_encode_q25(down));
    RasterImage up = upsample(round_tripped, factor, img.width, img.height);
    return static_cast<double>(jpeg_encode_q25(up).size()) /
           static_cast<double>(raw_size(img));
}

/// Fraction of mask samples labeled foreground.
inline double foreground_density(const MaskImage& mask) {
    if (!mask.valid())
        throw validation_error("foreground_density: invalid mask");
    std::uint64_t fg = std::accumulate(mask.pixels.begin(), mask.pixels.end(),
                                       std::uint64_t{0});
    return static_cast<double>(fg) /
           (static_cast<double>(mask.width) * mask.height);
}

/// Scale-k foreground density: majority-pool down by 2^k (ties foreground),
/// nearest-neighbor back up, then measure the fraction in the original frame.
inline double layer_wise_foreground_density(const MaskImage& mask, int scale_index) {
    if (scale_index < 0)
        throw validation_error("layer_wise_foreground_density: negative scale index");
    int factor = 1 << scale_index;
    MaskImage down = downsample_mask(mask, factor);
    MaskImage up = upsample_mask_nearest(down, mask.width, mask.height);
    return foreground_density(up);
}

/// Mean squared spectral magnitude, computed in the spatial domain via
/// Parseval's identity on [0,1]-normalized pixels: equals (1/N)*sum |F|^2.
inline double signal_energy(const RasterImage& img) {
    detail::require_valid(img, "signal_energy");
    if (img.channels != 1)
        throw validation_error("signal_energy: expects a grayscale image");
    double sum = 0.0;
    for (std::uint8_t p : img.pixels) {
        double v = p / 255.0;
        sum += v * v;
    }
    return sum;
}

namespace detail {

/// Mean Sobel gradient magnitude over the image, replicate border,
/// pixels normalized to [0,1].
inline double sobel_mean_magnitude(const RasterImage& img) {
    require_valid(img, "sobel_mean_magnitude");
    if (img.channels != 1)
        throw validation_error("sobel_mean_magnitude: expects a grayscale image");

    auto sample = [&](int x, int y) {
        x = std::clamp(x, 0, img.width - 1);
        y = std::clamp(y, 0, img.height - 1);
        return img.at(x, y) / 255.0;
    };

    double total = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double tl = sample(x - 1, y - 1), tc = sample(x, y - 1), tr = sample(x + 1, y - 1);
            double ml = sample(x - 1, y), mr = sample(x + 1, y);
            double bl = sample(x - 1, y + 1), bc = sample(x, y + 1), br = sample(x + 1, y + 1);
            double gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            double gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
            total += std::sqrt(gx * gx + gy * gy);
        }
    }
    return total / (static_cast<double>(img.width) * img.height);
}

/// Permutation-invariant mean: sums in sorted order so the aggregate does
/// not depend on input ordering.
inline double stable_mean(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return sum / static_cast<double>(values.size());
}

} // namespace detail

/// Multi-scale Sobel edge content: mean gradient magnitude per scale
/// (box-downsampled by 2^k), averaged over num_scales scales.
inline double edge_information(const RasterImage& img, int num_scales) {
    detail::require_valid(img, "edge_information");
    if (img.channels != 1)
        throw validation_error("edge_information: expects a grayscale image");
    if (num_scales < 1)
        throw validation_error("edge_information: num_scales must be >= 1");
    int deepest = 1 << (num_scales - 1);
    detail::require_scale_factor(img, deepest, "edge_information");

    double sum = 0.0;
    for (int k = 0; k < num_scales; ++k)
        sum += detail::sobel_mean_magnitude(downsample(img, 1 << k));
    return sum / num_scales;
}

/// Convex combination of JPEG complexity and foreground density.
inline double jb_complexity(double j, double b, double omega) {
    if (!(omega >= 0.0 && omega <= 1.0))
        throw validation_error("jb_complexity: omega must lie in [0,1], got " +
                               std::to_string(omega));
    return omega * j + (1.0 - omega) * b;
}

inline std::vector<double> min_max_normalize(const std::vector<double>& values) {
    if (values.size() < 2)
        throw validation_error("min_max_normalize: need at least 2 values");
    auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    if (!(hi > lo))
        throw validation_error("min_max_normalize: constant input has no spread");
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values)
        out.push_back((v - lo) / (hi - lo));
    return out;
}

/// Complexity aggregates at one pyramid scale (scale = input / 2^scale_index).
struct ScaleComplexity {
    int scale_index = 0;
    double j = 0.0;                 // layer-wise JPEG complexity
    std::optional<double> b;        // layer-wise foreground density (needs masks)
    std::optional<double> energy;   // signal energy of the downsampled plane
    std::optional<double> edge;     // Sobel mean magnitude at this scale
};

/// Per-scale complexity means over a training set, with per-image values
/// retained for variance reporting. Indexing: per_image_*[image][scale].
struct DatasetProfile {
    std::string name;
    int num_images = 0;
    int num_scales = 0;
    int working_resolution = 0; // 0 = images profiled at their native size
    std::vector<ScaleComplexity> scales;

    std::vector<std::string> image_names; // may be empty for handcrafted profiles
    std::vector<std::vector<double>> per_image_j;
    std::vector<std::vector<double>> per_image_b;
    std::vector<std::vector<double>> per_image_energy;
    std::vector<std::vector<double>> per_image_edge;

    bool has_masks() const { return !scales.empty() && scales.front().b.has_value(); }

    double input_j() const { return scales.at(0).j; }

    std::optional<double> input_b() const { return scales.at(0).b; }

    double j_at(int scale_index) const { return scales.at(static_cast<std::size_t>(scale_index)).j; }
};

/// Profiles a dataset: per-image layer-wise metrics at every scale, then
/// per-scale arithmetic means. Masks, when given, must pair 1:1 with images.
inline DatasetProfile profile_dataset(const std::vector<RasterImage>& images,
                                      const std::vector<MaskImage>* masks,
                                      int num_scales,
                                      const std::string& name = "") {
    if (images.empty())
        throw validation_error("profile_dataset: empty image list");
    if (num_scales < 1)
        throw validation_error("profile_dataset: num_scales must be >= 1");
    if (masks && masks->size() != images.size())
        throw validation_error("profile_dataset: " + std::to_string(masks->size()) +
                               " masks for " + std::to_string(images.size()) + " images");

    DatasetProfile profile;
    profile.name = name;
    profile.num_images = static_cast<int>(images.size());
    profile.num_scales = num_scales;

    for (std::size_t i = 0; i < images.size(); ++i) {
        const RasterImage& img = images[i];
        detail::require_valid(img, "profile_dataset");
        int deepest = 1 << (num_scales - 1);
        if (deepest > std::min(img.width, img.height))
            throw validation_error("profile_dataset: image " + std::to_string(i) +
                                   " too small for " + std::to_string(num_scales) + " scales");
        if (masks) {
            const MaskImage& m = (*masks)[i];
            if (m.width != img.width || m.height != img.height)
                throw validation_error("profile_dataset: mask " + std::to_string(i) +
                                       " dimensions do not match its image");
        }

        RasterImage gray = to_grayscale(img);
        std::vector<double> js, bs, energies, edges;
        for (int k = 0; k < num_scales; ++k) {
            // scale 0 is the plain measure; deeper scales go through the
            // subsample/compress/upsample pipeline
            js.push_back(k == 0 ? jpeg_complexity(img)
                                : layer_wise_jpeg_complexity(img, k));
            RasterImage down = downsample(gray, 1 << k);
            energies.push_back(signal_energy(down));
            edges.push_back(detail::sobel_mean_magnitude(down));
            if (masks)
                bs.push_back(layer_wise_foreground_density((*masks)[i], k));
        }
        profile.per_image_j.push_back(std::move(js));
        profile.per_image_energy.push_back(std::move(energies));
        profile.per_image_edge.push_back(std::move(edges));
        if (masks)
            profile.per_image_b.push_back(std::move(bs));
    }

    for (int k = 0; k < num_scales; ++k) {
        auto column = [&](const std::vector<std::vector<double>>& rows) {
            std::vector<double> col;
            col.reserve(rows.size());
            for (const auto& row : rows)
                col.push_back(row[static_cast<std::size_t>(k)]);
            return col;
        };
        ScaleComplexity sc;
        sc.scale_index = k;
        sc.j = detail::stable_mean(column(profile.per_image_j));
        sc.energy = detail::stable_mean(column(profile.per_image_energy));
        sc.edge = detail::stable_mean(column(profile.per_image_edge));
        if (masks)
            sc.b = detail::stable_mean(column(profile.per_image_b));
        profile.scales.push_back(sc);
    }
    return profile;
}

} // namespace ccplan

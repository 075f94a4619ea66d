#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ccplan/error.hpp"

namespace ccplan {

/// One convolutional layer. scale_index binds the layer to the complexity of
/// the image pyramid level it extracts features from (input / 2^scale_index).
/// Frozen layers (e.g. a final 1x1 classifier) keep their filter count under
/// any multiplier assignment.
struct ConvLayer {
    int index = 0;
    int in_channels = 1;
    int out_channels = 1;
    int kernel_w = 3;
    int kernel_h = 3;
    int scale_index = 0;
    bool frozen = false;

    std::int64_t weights() const {
        return static_cast<std::int64_t>(in_channels) * kernel_w * kernel_h * out_channels;
    }
};

/// Ordered layer list. Chaining rule: a layer's in_channels must be >= its
/// predecessor's out_channels; any excess is treated as concatenated skip
/// channels arriving from an earlier stage at the same scale (encoder-decoder
/// style). Biases are ignored throughout.
struct ArchitectureSpec {
    std::string name;
    int bytes_per_weight = 4;
    std::vector<ConvLayer> layers;
};

/// Per-layer channel multipliers in (0,1]. Keyed by scale index, with
/// optional per-layer overrides.
struct MultiplierAssignment {
    std::map<int, double> by_scale;
    std::map<int, double> by_layer;

    double alpha_for(const ConvLayer& layer) const {
        if (auto it = by_layer.find(layer.index); it != by_layer.end())
            return it->second;
        if (auto it = by_scale.find(layer.scale_index); it != by_scale.end())
            return it->second;
        throw validation_error("no multiplier for layer " + std::to_string(layer.index) +
                               " (scale " + std::to_string(layer.scale_index) + ")");
    }

    void validate() const {
        auto check = [](double a, const std::string& key) {
            if (!(a > 0.0 && a <= 1.0))
                throw validation_error("multiplier " + key + "=" + std::to_string(a) +
                                       " outside (0,1]");
        };
        for (const auto& [k, a] : by_scale)
            check(a, "scale " + std::to_string(k));
        for (const auto& [k, a] : by_layer)
            check(a, "layer " + std::to_string(k));
    }

    static MultiplierAssignment uniform(const ArchitectureSpec& spec, double alpha) {
        MultiplierAssignment m;
        for (const auto& layer : spec.layers)
            m.by_scale[layer.scale_index] = alpha;
        return m;
    }
};

inline std::int64_t total_weights(const ArchitectureSpec& spec) {
    std::int64_t sum = 0;
    for (const auto& layer : spec.layers)
        sum += layer.weights();
    return sum;
}

inline double log10_weights(const ArchitectureSpec& spec) {
    return std::log10(static_cast<double>(total_weights(spec)));
}

/// Base weights grouped by scale index, frozen layers included.
inline std::map<int, std::int64_t> weights_by_scale(const ArchitectureSpec& spec) {
    std::map<int, std::int64_t> out;
    for (const auto& layer : spec.layers)
        out[layer.scale_index] += layer.weights();
    return out;
}

namespace detail {

inline int scaled_channels(double alpha, int channels) {
    double v = std::floor(alpha * channels + 0.5); // round half up, floor of 1
    return std::max(1, static_cast<int>(v));
}

} // namespace detail

/// Applies channel multipliers with round-half-up and a floor of one channel.
/// A layer's filter count (out_channels) scales by its own alpha unless
/// frozen; its in_channels follows the producer's new out_channels, with any
/// concatenated skip channels scaled by the layer's own alpha. The network
/// input channel count is preserved.
inline ArchitectureSpec apply_multipliers(const ArchitectureSpec& spec,
                                          const MultiplierAssignment& m) {
    m.validate();
    ArchitectureSpec out = spec;
    if (spec.layers.empty())
        return out;

    int base_prev_out = spec.layers.front().in_channels; // network input plane
    int new_prev_out = base_prev_out;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const ConvLayer& layer = spec.layers[i];
        ConvLayer& updated = out.layers[i];

        int skip = layer.in_channels - base_prev_out;
        if (skip < 0)
            throw validation_error(
                "apply_multipliers: layer " + std::to_string(layer.index) + " consumes " +
                std::to_string(layer.in_channels) + " channels but its producer (layer " +
                std::to_string(i == 0 ? -1 : spec.layers[i - 1].index) + ") emits " +
                std::to_string(base_prev_out));

        if (layer.frozen) {
            updated.in_channels = new_prev_out + skip;
            updated.out_channels = layer.out_channels;
        } else {
            double alpha = m.alpha_for(layer);
            updated.in_channels =
                new_prev_out + (skip > 0 ? detail::scaled_channels(alpha, skip) : 0);
            updated.out_channels = detail::scaled_channels(alpha, layer.out_channels);
        }

        base_prev_out = layer.out_channels;
        new_prev_out = updated.out_channels;
    }
    return out;
}

/// Smallest reachable weight count: every non-frozen filter count at its
/// floor of one channel.
inline std::int64_t min_total_weights(const ArchitectureSpec& spec) {
    if (spec.layers.empty())
        return 0;
    std::int64_t sum = 0;
    int base_prev_out = spec.layers.front().in_channels;
    int new_prev_out = base_prev_out;
    for (const auto& layer : spec.layers) {
        int skip = layer.in_channels - base_prev_out;
        int in = new_prev_out + (skip > 0 ? (layer.frozen ? skip : 1) : 0);
        int outc = layer.frozen ? layer.out_channels : 1;
        sum += static_cast<std::int64_t>(in) * layer.kernel_w * layer.kernel_h * outc;
        base_prev_out = layer.out_channels;
        new_prev_out = outc;
    }
    return sum;
}

inline std::int64_t disk_budget_to_weights(std::int64_t budget_bytes, int bytes_per_weight) {
    if (budget_bytes <= 0)
        throw validation_error("budget must be positive");
    if (bytes_per_weight <= 0)
        throw validation_error("bytes_per_weight must be positive");
    return budget_bytes / bytes_per_weight;
}

/// Parses the architecture file format:
///   arch <name> bytes_per_weight=<n>
///   conv <in> <out> <kw> <kh> scale=<k> [frozen]
/// Lines starting with '#' and blank lines are ignored.
inline ArchitectureSpec parse_architecture(const std::string& text,
                                           const std::string& source_name = "<string>") {
    ArchitectureSpec spec;
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    bool have_header = false;

    auto fail = [&](const std::string& msg) -> void {
        throw parse_error(source_name + ":" + std::to_string(line_no) + ": " + msg);
    };

    while (std::getline(stream, line)) {
        ++line_no;
        if (auto pos = line.find('#'); pos != std::string::npos)
            line.erase(pos);
        std::istringstream tokens(line);
        std::string keyword;
        if (!(tokens >> keyword))
            continue;

        if (keyword == "arch") {
            if (have_header)
                fail("duplicate arch header");
            std::string bpw_field;
            if (!(tokens >> spec.name >> bpw_field))
                fail("expected: arch <name> bytes_per_weight=<n>");
            if (bpw_field.rfind("bytes_per_weight=", 0) != 0)
                fail("expected bytes_per_weight=<n>, got '" + bpw_field + "'");
            try {
                spec.bytes_per_weight = std::stoi(bpw_field.substr(17));
            } catch (const std::exception&) {
                fail("bytes_per_weight is not an integer");
            }
            if (spec.bytes_per_weight < 1)
                fail("bytes_per_weight must be >= 1");
            have_header = true;
        } else if (keyword == "conv") {
            if (!have_header)
                fail("conv line before arch header");
            ConvLayer layer;
            std::string scale_field;
            if (!(tokens >> layer.in_channels >> layer.out_channels >> layer.kernel_w >>
                  layer.kernel_h >> scale_field))
                fail("expected: conv <in> <out> <kw> <kh> scale=<k> [frozen]");
            if (scale_field.rfind("scale=", 0) != 0)
                fail("expected scale=<k>, got '" + scale_field + "'");
            try {
                layer.scale_index = std::stoi(scale_field.substr(6));
            } catch (const std::exception&) {
                fail("scale index is not an integer");
            }
            std::string tail;
            if (tokens >> tail) {
                if (tail == "frozen")
                    layer.frozen = true;
                else
                    fail("unexpected token '" + tail + "'");
            }
            if (layer.in_channels < 1 || layer.out_channels < 1 || layer.kernel_w < 1 ||
                layer.kernel_h < 1 || layer.scale_index < 0)
                fail("layer fields must be positive (scale >= 0)");
            layer.index = static_cast<int>(spec.layers.size());
            spec.layers.push_back(layer);
        } else {
            fail("unknown keyword '" + keyword + "'");
        }
    }

    if (!have_header)
        throw parse_error(source_name + ": missing arch header line");

    // Chaining: in >= producer out; excess channels are concat skips.
    for (std::size_t i = 1; i < spec.layers.size(); ++i) {
        if (spec.layers[i].in_channels < spec.layers[i - 1].out_channels)
            throw parse_error(source_name + ": chaining violation between layers " +
                              std::to_string(i - 1) + " and " + std::to_string(i) +
                              " (in " + std::to_string(spec.layers[i].in_channels) +
                              " < producer out " +
                              std::to_string(spec.layers[i - 1].out_channels) + ")");
    }
    return spec;
}

inline std::string serialize_architecture(const ArchitectureSpec& spec,
                                          const std::string& trailing_comment = "") {
    std::ostringstream out;
    out << "arch " << spec.name << " bytes_per_weight=" << spec.bytes_per_weight << "\n";
    for (const auto& layer : spec.layers) {
        out << "conv " << layer.in_channels << " " << layer.out_channels << " "
            << layer.kernel_w << " " << layer.kernel_h << " scale=" << layer.scale_index;
        if (layer.frozen)
            out << " frozen";
        out << "\n";
    }
    if (!trailing_comment.empty()) {
        std::istringstream lines(trailing_comment);
        std::string line;
        while (std::getline(lines, line))
            out << "# " << line << "\n";
    }
    return out.str();
}

} // namespace ccplan

#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ccplan/arch.hpp"
#include "ccplan/codec.hpp"
#include "ccplan/complexity.hpp"
#include "ccplan/degradation.hpp"
#include "ccplan/error.hpp"
#include "ccplan/hash.hpp"
#include "ccplan/planner.hpp"

namespace ccplan {

using ordered_json = nlohmann::ordered_json;

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw validation_error("cannot write file: " + path.string());
    out << content;
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw validation_error("cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::string hash_file(const std::filesystem::path& path) {
    auto bytes = read_file_bytes(path);
    return fnv1a64_hex(std::span<const std::uint8_t>(bytes.data(), bytes.size()));
}

// ---------------------------------------------------------------------------
// Dataset directory ingestion
// ---------------------------------------------------------------------------

struct LoadedDataset {
    std::string name;
    std::vector<std::string> stems; // sorted for deterministic aggregation
    std::vector<RasterImage> images;
    std::vector<MaskImage> masks; // empty when no mask directory given
    std::map<std::string, std::string> input_hashes;
    int working_resolution = 0;
};

namespace detail {

inline bool has_image_extension(const std::filesystem::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline MaskImage decode_mask_file(const std::filesystem::path& path) {
    RasterImage img = to_grayscale(decode_image_file(path));
    MaskImage mask;
    mask.width = img.width;
    mask.height = img.height;
    mask.pixels.resize(img.pixels.size());
    for (std::size_t i = 0; i < img.pixels.size(); ++i)
        mask.pixels[i] = img.pixels[i] >= 128 ? 1 : 0;
    return mask;
}

} // namespace detail

/// Loads `<dir>/*.{png,jpg,jpeg}` sorted by filename, with optional masks
/// matched by stem from the mask directory. resolution > 0 resizes every
/// image (bilinear) and mask (nearest) to resolution x resolution.
inline LoadedDataset load_dataset(const std::filesystem::path& dir,
                                  const std::optional<std::filesystem::path>& mask_dir,
                                  int resolution) {
    if (!std::filesystem::is_directory(dir))
        throw validation_error("not a directory: " + dir.string());

    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && detail::has_image_extension(entry.path()))
            files.push_back(entry.path());
    if (files.empty())
        throw validation_error("no images (*.png, *.jpg) in " + dir.string());
    std::sort(files.begin(), files.end());

    LoadedDataset ds;
    ds.name = dir.filename().string();
    if (ds.name.empty())
        ds.name = dir.parent_path().filename().string();
    ds.working_resolution = resolution;

    for (const auto& file : files) {
        RasterImage img = decode_image_file(file);
        if (resolution > 0)
            img = bilinear_resize(img, resolution, resolution);
        ds.stems.push_back(file.stem().string());
        ds.images.push_back(std::move(img));
        ds.input_hashes[file.filename().string()] = hash_file(file);

        if (mask_dir) {
            std::filesystem::path mask_path = *mask_dir / (file.stem().string() + ".png");
            if (!std::filesystem::exists(mask_path))
                throw validation_error("no mask for image '" + file.filename().string() +
                                       "' (expected " + mask_path.string() + ")");
            MaskImage mask = detail::decode_mask_file(mask_path);
            if (resolution > 0) {
                if (resolution < mask.width || resolution < mask.height) {
                    // nearest-neighbor shrink via the same index mapping
                    MaskImage shrunk;
                    shrunk.width = resolution;
                    shrunk.height = resolution;
                    shrunk.pixels.resize(static_cast<std::size_t>(resolution) * resolution);
                    for (int y = 0; y < resolution; ++y) {
                        int sy = std::min(static_cast<int>(
                                              (static_cast<std::int64_t>(y) * mask.height) / resolution),
                                          mask.height - 1);
                        for (int x = 0; x < resolution; ++x) {
                            int sx = std::min(static_cast<int>(
                                                  (static_cast<std::int64_t>(x) * mask.width) / resolution),
                                              mask.width - 1);
                            shrunk.pixels[static_cast<std::size_t>(y) * resolution + x] =
                                mask.at(sx, sy);
                        }
                    }
                    mask = std::move(shrunk);
                } else {
                    mask = upsample_mask_nearest(mask, resolution, resolution);
                }
            }
            ds.masks.push_back(std::move(mask));
            ds.input_hashes["masks/" + mask_path.filename().string()] = hash_file(mask_path);
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Profile JSON
// ---------------------------------------------------------------------------

inline ordered_json profile_to_json(const DatasetProfile& profile,
                                    const std::map<std::string, std::string>& input_hashes = {}) {
    ordered_json j;
    j["format"] = "ccplan.profile/1";
    j["name"] = profile.name;
    j["num_images"] = profile.num_images;
    j["num_scales"] = profile.num_scales;
    j["working_resolution"] = profile.working_resolution;

    ordered_json scales = ordered_json::array();
    for (const auto& sc : profile.scales) {
        ordered_json s;
        s["scale_index"] = sc.scale_index;
        s["j"] = sc.j;
        if (sc.b)
            s["b"] = *sc.b;
        if (sc.energy)
            s["energy"] = *sc.energy;
        if (sc.edge)
            s["edge"] = *sc.edge;
        scales.push_back(s);
    }
    j["scales"] = scales;

    if (!profile.per_image_j.empty()) {
        ordered_json per_image = ordered_json::array();
        for (std::size_t i = 0; i < profile.per_image_j.size(); ++i) {
            ordered_json row;
            if (i < profile.image_names.size())
                row["name"] = profile.image_names[i];
            row["j"] = profile.per_image_j[i];
            if (i < profile.per_image_b.size())
                row["b"] = profile.per_image_b[i];
            if (i < profile.per_image_energy.size())
                row["energy"] = profile.per_image_energy[i];
            if (i < profile.per_image_edge.size())
                row["edge"] = profile.per_image_edge[i];
            per_image.push_back(row);
        }
        j["per_image"] = per_image;
    }

    if (!input_hashes.empty()) {
        ordered_json inputs;
        for (const auto& [name, hash] : input_hashes)
            inputs[name] = hash;
        j["provenance"]["inputs"] = inputs;
    }
    return j;
}

inline DatasetProfile profile_from_json(const ordered_json& j, const std::string& source = "") {
    auto fail = [&](const std::string& msg) -> void {
        throw parse_error((source.empty() ? "profile" : source) + ": " + msg);
    };
    if (!j.is_object() || j.value("format", "") != std::string("ccplan.profile/1"))
        fail("missing or unknown format marker (want ccplan.profile/1)");

    DatasetProfile profile;
    profile.name = j.value("name", "");
    profile.num_images = j.value("num_images", 0);
    profile.num_scales = j.value("num_scales", 0);
    profile.working_resolution = j.value("working_resolution", 0);
    if (profile.num_images < 1)
        fail("num_images must be >= 1");
    if (!j.contains("scales") || !j["scales"].is_array() || j["scales"].empty())
        fail("missing scales array");

    for (const auto& s : j["scales"]) {
        ScaleComplexity sc;
        sc.scale_index = s.value("scale_index", static_cast<int>(profile.scales.size()));
        if (!s.contains("j"))
            fail("scale entry missing j");
        sc.j = s["j"].get<double>();
        if (s.contains("b") && !s["b"].is_null())
            sc.b = s["b"].get<double>();
        if (s.contains("energy") && !s["energy"].is_null())
            sc.energy = s["energy"].get<double>();
        if (s.contains("edge") && !s["edge"].is_null())
            sc.edge = s["edge"].get<double>();
        profile.scales.push_back(sc);
    }
    if (profile.num_scales == 0)
        profile.num_scales = static_cast<int>(profile.scales.size());
    if (profile.num_scales != static_cast<int>(profile.scales.size()))
        fail("num_scales does not match the scales array length");

    if (j.contains("per_image")) {
        for (const auto& row : j["per_image"]) {
            if (row.contains("name"))
                profile.image_names.push_back(row["name"].get<std::string>());
            profile.per_image_j.push_back(row.value("j", std::vector<double>{}));
            if (row.contains("b"))
                profile.per_image_b.push_back(row["b"].get<std::vector<double>>());
            if (row.contains("energy"))
                profile.per_image_energy.push_back(row["energy"].get<std::vector<double>>());
            if (row.contains("edge"))
                profile.per_image_edge.push_back(row["edge"].get<std::vector<double>>());
        }
    }
    return profile;
}

inline DatasetProfile load_profile(const std::filesystem::path& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
    return profile_from_json(j, path.string());
}

// ---------------------------------------------------------------------------
// Observations CSV: header `dataset,alpha,theta,metric,value`
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ','))
        fields.push_back(field);
    if (!line.empty() && line.back() == ',')
        fields.push_back("");
    return fields;
}

inline std::string trim(const std::string& s) {
    auto begin = s.find_first_not_of(" \t\r");
    auto end = s.find_last_not_of(" \t\r");
    if (begin == std::string::npos)
        return "";
    return s.substr(begin, end - begin + 1);
}

} // namespace detail

inline std::vector<AccuracyObservation> parse_observations_csv(const std::string& text,
                                                               const std::string& source =
                                                                   "<csv>") {
    std::istringstream stream(text);
    std::string line;
    int line_no = 0;
    std::vector<AccuracyObservation> rows;

    auto fail = [&](const std::string& msg) -> void {
        throw parse_error(source + ":" + std::to_string(line_no) + ": " + msg);
    };

    if (!std::getline(stream, line))
        throw parse_error(source + ": empty file");
    ++line_no;
    {
        auto header = detail::split_csv_row(detail::trim(line));
        const std::vector<std::string> expected = {"dataset", "alpha", "theta", "metric",
                                                   "value"};
        if (header.size() != expected.size())
            fail("expected header dataset,alpha,theta,metric,value");
        for (std::size_t i = 0; i < expected.size(); ++i) {
            std::string got = detail::trim(header[i]);
            std::transform(got.begin(), got.end(), got.begin(), ::tolower);
            if (got != expected[i])
                fail("expected header column '" + expected[i] + "', got '" + header[i] + "'");
        }
    }

    while (std::getline(stream, line)) {
        ++line_no;
        std::string trimmed = detail::trim(line);
        if (trimmed.empty())
            continue;
        auto fields = detail::split_csv_row(trimmed);
        if (fields.size() != 5)
            fail("expected 5 fields, got " + std::to_string(fields.size()));

        AccuracyObservation obs;
        obs.dataset = detail::trim(fields[0]);
        if (obs.dataset.empty())
            fail("empty dataset name");
        try {
            obs.alpha = std::stod(detail::trim(fields[1]));
        } catch (const std::exception&) {
            fail("alpha is not a number: '" + fields[1] + "'");
        }
        std::string theta_field = detail::trim(fields[2]);
        if (!theta_field.empty()) {
            try {
                obs.theta = std::stod(theta_field);
            } catch (const std::exception&) {
                fail("theta is not a number: '" + fields[2] + "'");
            }
        }
        try {
            obs.metric = metric_from_string(detail::trim(fields[3]));
        } catch (const validation_error& e) {
            fail(e.what());
        }
        try {
            obs.value = std::stod(detail::trim(fields[4]));
        } catch (const std::exception&) {
            fail("value is not a number: '" + fields[4] + "'");
        }
        if (!(obs.value >= 0.0 && obs.value <= 1.0))
            fail("value " + std::to_string(obs.value) + " outside [0,1]");
        if (!(obs.alpha > 0.0 && obs.alpha <= 1.0))
            fail("alpha " + std::to_string(obs.alpha) + " outside (0,1]");
        rows.push_back(std::move(obs));
    }
    if (rows.empty())
        throw parse_error(source + ": no observation rows");
    return rows;
}

/// Groups rows of one metric by dataset, preserving row order inside groups.
inline std::map<std::string, std::vector<AccuracyObservation>> group_observations(
    const std::vector<AccuracyObservation>& rows, AccuracyMetric metric) {
    std::map<std::string, std::vector<AccuracyObservation>> groups;
    for (const auto& row : rows)
        if (row.metric == metric)
            groups[row.dataset].push_back(row);
    if (groups.empty())
        throw validation_error("no observation rows for metric " + to_string(metric));
    return groups;
}

// ---------------------------------------------------------------------------
// Model JSON
// ---------------------------------------------------------------------------

inline ordered_json model_to_json(const DegradationModel& model,
                                  const ordered_json& provenance = {}) {
    ordered_json j;
    j["format"] = "ccplan.model/1";
    j["architecture"] = model.architecture;
    j["metric"] = to_string(model.metric);
    j["complexity_kind"] = to_string(model.complexity_kind);
    j["lambda"] = model.lambda;
    j["delta"] = model.delta;
    if (model.omega)
        j["omega"] = *model.omega;
    j["r2"] = model.r2;
    j["base_log_theta"] = model.base_log_theta;
    j["fast"] = model.fast;
    j["degenerate_warning"] = model.degenerate_warning;
    if (!provenance.is_null() && !provenance.empty())
        j["provenance"] = provenance;
    return j;
}

inline DegradationModel model_from_json(const ordered_json& j, const std::string& source = "") {
    auto fail = [&](const std::string& msg) -> void {
        throw parse_error((source.empty() ? "model" : source) + ": " + msg);
    };
    if (!j.is_object() || j.value("format", "") != std::string("ccplan.model/1"))
        fail("missing or unknown format marker (want ccplan.model/1)");

    DegradationModel model;
    model.architecture = j.value("architecture", "");
    model.metric = metric_from_string(j.value("metric", "f1"));
    model.complexity_kind = complexity_kind_from_string(j.value("complexity_kind", "j"));
    if (!j.contains("lambda") || !j.contains("delta"))
        fail("missing lambda/delta");
    model.lambda = j["lambda"].get<double>();
    model.delta = j["delta"].get<double>();
    if (j.contains("omega") && !j["omega"].is_null())
        model.omega = j["omega"].get<double>();
    model.r2 = j.value("r2", 0.0);
    model.base_log_theta = j.value("base_log_theta", 0.0);
    model.fast = j.value("fast", false);
    model.degenerate_warning = j.value("degenerate_warning", false);
    return model;
}

inline DegradationModel load_model(const std::filesystem::path& path) {
    ordered_json j;
    try {
        j = ordered_json::parse(read_text_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
    return model_from_json(j, path.string());
}

// ---------------------------------------------------------------------------
// Plan serialization: archmodel text plus a JSON sidecar
// ---------------------------------------------------------------------------

/// Per-scale complexities driving a plan, derived from the profile according
/// to the model's complexity kind.
inline std::map<int, double> scale_complexities(const DatasetProfile& profile,
                                                const DegradationModel& model) {
    std::map<int, double> out;
    for (const auto& sc : profile.scales) {
        if (model.complexity_kind == ComplexityKind::j) {
            out[sc.scale_index] = sc.j;
        } else {
            if (!model.omega)
                throw validation_error("model of kind jb is missing omega");
            if (!sc.b)
                throw degenerate_model_error(
                    "profile '" + profile.name + "' has no foreground density at scale " +
                    std::to_string(sc.scale_index) + " required for JB complexity");
            out[sc.scale_index] = jb_complexity(sc.j, *sc.b, *model.omega);
        }
    }
    return out;
}

inline std::string plan_to_arch_text(const CompressionPlan& plan) {
    std::ostringstream comment;
    comment.precision(6);
    comment << "theta_star_achieved=" << plan.theta_star_achieved
            << " log10=" << std::log10(static_cast<double>(plan.theta_star_achieved)) << "\n";
    for (const auto& [scale, alpha] : plan.assignment.by_scale)
        comment << "alpha[scale=" << scale << "]=" << alpha << "\n";
    comment << "predicted_relative_accuracy=" << plan.predicted_relative_accuracy;
    return serialize_architecture(plan.compressed, comment.str());
}

inline ordered_json plan_to_json(const CompressionPlan& plan,
                                 const ordered_json& provenance = {}) {
    ordered_json j;
    j["format"] = "ccplan.plan/1";
    j["architecture"] = plan.base.name;

    ordered_json c;
    c["kind"] = to_string(plan.constraint.kind);
    c["mode"] = to_string(plan.constraint.mode);
    if (plan.constraint.kind == ConstraintKind::accuracy_floor)
        c["min_accuracy_fraction"] = plan.constraint.min_accuracy_fraction;
    else
        c["budget_bytes"] = plan.constraint.budget_bytes;
    j["constraint"] = c;

    ordered_json alphas;
    for (const auto& [scale, alpha] : plan.assignment.by_scale)
        alphas[std::to_string(scale)] = alpha;
    j["alpha_by_scale"] = alphas;

    std::int64_t theta_base = total_weights(plan.base);
    j["theta_base"] = theta_base;
    j["log10_theta_base"] = std::log10(static_cast<double>(theta_base));
    j["theta_star_target"] = plan.theta_star_target;
    j["log10_theta_star_target"] = std::log10(plan.theta_star_target);
    j["theta_star_achieved"] = plan.theta_star_achieved;
    j["log10_theta_star_achieved"] =
        std::log10(static_cast<double>(plan.theta_star_achieved));
    j["predicted_relative_accuracy"] = plan.predicted_relative_accuracy;
    j["predicted_accuracy_is_estimate"] = plan.prediction_is_estimate;
    j["reduction"] = reduction_report(plan.base, plan);

    ordered_json diag;
    diag["iterations"] = plan.diagnostics.iterations;
    diag["residual"] = plan.diagnostics.residual;
    diag["tightening_rounds"] = plan.diagnostics.tightening_rounds;
    diag["warnings"] = plan.diagnostics.warnings;
    j["diagnostics"] = diag;

    if (!provenance.is_null() && !provenance.empty())
        j["provenance"] = provenance;
    return j;
}

} // namespace ccplan

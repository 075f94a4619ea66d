// ccplan: image-complexity-guided compression planning for segmentation CNNs.
//
// Subcommands:
//   complexity  profile a dataset directory (per-scale JPEG complexity etc.)
//   fit         fit the degradation law from an accuracy-observation CSV
//   plan        solve a size or accuracy constraint into channel multipliers
//   predict     tabulate predicted relative accuracy for candidate sizes

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ccplan/complexity.hpp"
#include "ccplan/degradation.hpp"
#include "ccplan/io.hpp"
#include "ccplan/planner.hpp"

namespace fs = std::filesystem;
using namespace ccplan;

namespace {

// All report numbers go through this: 6 significant digits, locale-free.
std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

int default_resolution_for(const std::string& dataset_name) {
    std::string lower = dataset_name;
    std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
    auto contains = [&](const char* needle) { return lower.find(needle) != std::string::npos; };
    if (contains("chase"))
        return 976;
    if (contains("drive"))
        return 512;
    if (contains("melanoma") || contains("isic"))
        return 320;
    if (contains("lymph"))
        return 224;
    if (contains("wing"))
        return 320;
    return 512;
}

struct ComplexityArgs {
    std::string dataset_dir;
    std::string masks_dir;
    int scales = 5;
    int resize = -1; // -1: pick by dataset name; 0: keep native size
    std::string name;
    std::string out = "profile.json";
};

int run_complexity(const ComplexityArgs& args) {
    std::optional<fs::path> masks;
    if (!args.masks_dir.empty())
        masks = fs::path(args.masks_dir);

    std::string dataset_name =
        args.name.empty() ? fs::path(args.dataset_dir).filename().string() : args.name;
    if (dataset_name.empty())
        dataset_name = fs::path(args.dataset_dir).parent_path().filename().string();
    int resolution = args.resize >= 0 ? args.resize : default_resolution_for(dataset_name);

    LoadedDataset ds = load_dataset(args.dataset_dir, masks, resolution);
    ds.name = dataset_name;

    DatasetProfile profile = profile_dataset(
        ds.images, ds.masks.empty() ? nullptr : &ds.masks, args.scales, ds.name);
    profile.working_resolution = resolution;
    profile.image_names = ds.stems;

    ordered_json j = profile_to_json(profile, ds.input_hashes);
    j["config"] = {{"num_scales", args.scales},
                   {"working_resolution", resolution},
                   {"masks", !ds.masks.empty()}};
    write_text_file(args.out, j.dump(2) + "\n");

    std::cout << "dataset " << profile.name << " (" << profile.num_images << " images";
    if (resolution > 0)
        std::cout << ", resized to " << resolution << "x" << resolution;
    std::cout << ")\n";
    std::cout << "scale        j";
    if (profile.has_masks())
        std::cout << "            b";
    std::cout << "\n";
    for (const auto& sc : profile.scales) {
        std::string label = sc.scale_index == 0
                                ? "input"
                                : "input/" + std::to_string(1 << sc.scale_index);
        std::printf("%-12s %-12s", label.c_str(), fmt6(sc.j).c_str());
        if (sc.b)
            std::printf(" %-12s", fmt6(*sc.b).c_str());
        std::printf("\n");
    }
    std::cout << "profile written to " << args.out << "\n";
    return 0;
}

struct FitArgs {
    std::string csv;
    std::vector<std::string> profiles;
    std::string metric = "f1";
    std::string complexity = "j";
    bool fast = false;
    double omega_step = 0.025;
    std::string arch_name = "unspecified";
    std::string out = "model.json";
};

int run_fit(const FitArgs& args) {
    AccuracyMetric metric = metric_from_string(args.metric);
    ComplexityKind kind = complexity_kind_from_string(args.complexity);

    std::string csv_text = read_text_file(args.csv);
    auto rows = parse_observations_csv(csv_text, args.csv);
    auto groups = group_observations(rows, metric);

    if (args.fast) {
        // Reduced protocol: keep only the {1, 0.25, 0.0625} sweep points.
        for (auto& [dataset, observations] : groups) {
            std::vector<AccuracyObservation> kept;
            for (const auto& obs : observations) {
                long key = std::lround(obs.alpha * 10000.0);
                if (key == 10000 || key == 2500 || key == 625)
                    kept.push_back(obs);
            }
            observations = std::move(kept);
        }
    }

    std::map<std::string, DatasetProfile> profiles;
    ordered_json profile_hashes;
    for (const auto& path : args.profiles) {
        DatasetProfile p = load_profile(path);
        profile_hashes[p.name] = hash_file(path);
        profiles.emplace(p.name, std::move(p));
    }
    for (const auto& [dataset, observations] : groups)
        if (!profiles.count(dataset))
            throw validation_error("no profile provided for dataset '" + dataset + "'");

    std::map<std::string, double> complexity_of;
    std::optional<double> omega;
    if (kind == ComplexityKind::j) {
        for (const auto& [dataset, observations] : groups)
            complexity_of[dataset] = profiles.at(dataset).input_j();
    } else {
        std::vector<std::tuple<double, double, double>> j_b_slope;
        for (const auto& [dataset, observations] : groups) {
            const DatasetProfile& p = profiles.at(dataset);
            if (!p.input_b())
                throw validation_error("profile '" + dataset +
                                       "' lacks foreground density required for JB");
            SlopeFit fit = fit_slope(relative_accuracy(observations), dataset);
            j_b_slope.emplace_back(p.input_j(), *p.input_b(), fit.slope);
        }
        omega = select_omega(j_b_slope, args.omega_step);
        for (const auto& [dataset, observations] : groups) {
            const DatasetProfile& p = profiles.at(dataset);
            complexity_of[dataset] = jb_complexity(p.input_j(), *p.input_b(), *omega);
        }
    }

    DegradationModel model =
        args.fast ? fit_fast(groups, complexity_of) : fit_model(groups, complexity_of);
    model.architecture = args.arch_name;
    model.metric = metric;
    model.complexity_kind = kind;
    model.omega = omega;

    ordered_json provenance;
    provenance["observations"] = hash_file(args.csv);
    provenance["profiles"] = profile_hashes;
    provenance["config"] = {{"metric", args.metric},
                            {"complexity", args.complexity},
                            {"fast", args.fast},
                            {"omega_step", args.omega_step}};
    ordered_json per_dataset = ordered_json::array();
    for (const auto& [dataset, observations] : groups) {
        SlopeFit fit = fit_slope(relative_accuracy(observations), dataset);
        per_dataset.push_back({{"dataset", dataset},
                               {"complexity", complexity_of.at(dataset)},
                               {"slope", fit.slope},
                               {"r2", fit.r2},
                               {"points_used", fit.points_used}});
    }

    ordered_json j = model_to_json(model, provenance);
    j["datasets"] = per_dataset;
    write_text_file(args.out, j.dump(2) + "\n");

    std::cout << "lambda " << fmt6(model.lambda) << "  delta " << fmt6(model.delta);
    if (model.omega)
        std::cout << "  omega " << fmt6(*model.omega);
    std::cout << "  r2 " << fmt6(model.r2) << (model.fast ? "  (fast)" : "") << "\n";
    if (model.degenerate_warning)
        std::cout << "warning: fitted drop rate is not positive over all inputs\n";
    std::cout << "model written to " << args.out << "\n";
    return 0;
}

struct PlanArgs {
    std::string arch;
    std::string profile;
    std::string model;
    std::optional<std::int64_t> disk_budget;
    std::optional<std::int64_t> memory_budget;
    std::optional<double> min_accuracy;
    std::string mode = "uniform";
    std::string out = "plan";
};

int run_plan(const PlanArgs& args) {
    ArchitectureSpec spec = parse_architecture(read_text_file(args.arch), args.arch);
    DatasetProfile profile = load_profile(args.profile);
    DegradationModel model = load_model(args.model);

    Constraint constraint;
    if (args.mode == "uniform")
        constraint.mode = MultiplierMode::uniform;
    else if (args.mode == "layer-wise" || args.mode == "layer_wise")
        constraint.mode = MultiplierMode::layer_wise;
    else
        throw validation_error("unknown mode '" + args.mode + "' (uniform or layer-wise)");

    int kinds = (args.disk_budget ? 1 : 0) + (args.memory_budget ? 1 : 0) +
                (args.min_accuracy ? 1 : 0);
    if (kinds != 1)
        throw validation_error(
            "exactly one of --disk-budget, --memory-budget, --min-accuracy is required");
    if (args.disk_budget) {
        constraint.kind = ConstraintKind::disk_budget;
        constraint.budget_bytes = *args.disk_budget;
    } else if (args.memory_budget) {
        constraint.kind = ConstraintKind::memory_budget;
        constraint.budget_bytes = *args.memory_budget;
    } else {
        constraint.kind = ConstraintKind::accuracy_floor;
        constraint.min_accuracy_fraction = *args.min_accuracy;
        if (!(constraint.min_accuracy_fraction > 0.0 &&
              constraint.min_accuracy_fraction < 1.0))
            throw validation_error("--min-accuracy must lie in (0,1), got " +
                                   std::to_string(constraint.min_accuracy_fraction));
    }

    auto scale_c = scale_complexities(profile, model);
    CompressionPlan plan = build_plan(spec, scale_c, model, constraint);

    ordered_json provenance;
    provenance["architecture"] = hash_file(args.arch);
    provenance["profile"] = hash_file(args.profile);
    provenance["model"] = hash_file(args.model);

    fs::path arch_out = args.out + ".arch";
    fs::path json_out = args.out + ".plan.json";
    write_text_file(arch_out, plan_to_arch_text(plan));
    write_text_file(json_out, plan_to_json(plan, provenance).dump(2) + "\n");

    double log_base = std::log10(static_cast<double>(total_weights(spec)));
    double log_achieved = std::log10(static_cast<double>(plan.theta_star_achieved));
    std::printf("%-24s %-20s %-12s\n", "method", "predicted_rel_acc", "log10_theta");
    std::printf("%-24s %-20s %-12s\n", "base", "1", fmt6(log_base).c_str());
    std::string method = constraint.mode == MultiplierMode::uniform
                             ? "uniform multiplier"
                             : "layer-wise multiplier";
    std::printf("%-24s %-20s %-12s\n", method.c_str(),
                fmt6(plan.predicted_relative_accuracy).c_str(), fmt6(log_achieved).c_str());
    for (const auto& warning : plan.diagnostics.warnings)
        std::cout << "warning: " << warning << "\n";
    std::cout << "plan written to " << arch_out.string() << " and " << json_out.string()
              << "\n";
    return 0;
}

struct PredictArgs {
    std::string model;
    std::string profile;
    std::vector<double> log_thetas;
    std::optional<double> base_log_theta;
};

int run_predict(const PredictArgs& args) {
    DegradationModel model = load_model(args.model);
    DatasetProfile profile = load_profile(args.profile);

    double base = args.base_log_theta.value_or(model.base_log_theta);
    if (!(base > 0.0))
        throw validation_error(
            "model has no base size on record; pass --base-log-theta explicitly");

    auto scale_c = scale_complexities(profile, model);
    double c = scale_c.begin()->second; // input-scale complexity

    std::printf("%-14s %-20s\n", "log10_theta", "predicted_rel_acc");
    for (double target : args.log_thetas) {
        Prediction p = predict_accuracy(model, c, base, target, 1.0);
        std::printf("%-14s %-20s%s\n", fmt6(target).c_str(), fmt6(p.value).c_str(),
                    p.clamped ? " (clamped)" : "");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"image-complexity-guided compression planner"};
    app.require_subcommand(1);

    ComplexityArgs cx;
    auto* cmd_cx = app.add_subcommand("complexity", "profile a dataset directory");
    cmd_cx->add_option("dir", cx.dataset_dir, "directory with *.png / *.jpg images")
        ->required();
    cmd_cx->add_option("--masks", cx.masks_dir, "directory with <stem>.png binary masks");
    cmd_cx->add_option("--scales", cx.scales, "number of pyramid scales (default 5)");
    cmd_cx->add_option("--resize", cx.resize,
                       "square working resolution; 0 keeps native size "
                       "(default: chosen from the dataset name)");
    cmd_cx->add_option("--name", cx.name, "dataset name (default: directory name)");
    cmd_cx->add_option("--out", cx.out, "output profile path (default profile.json)");

    FitArgs fit;
    auto* cmd_fit = app.add_subcommand("fit", "fit the degradation law from observations");
    cmd_fit->add_option("csv", fit.csv, "observations CSV (dataset,alpha,theta,metric,value)")
        ->required();
    cmd_fit->add_option("--profiles", fit.profiles, "profile JSON per dataset")
        ->required()
        ->expected(-1);
    cmd_fit->add_option("--metric", fit.metric, "f1 or iu")->required();
    cmd_fit->add_option("--complexity", fit.complexity, "j or jb")->required();
    cmd_fit->add_flag("--fast", fit.fast, "two datasets, alphas {1, 0.25, 0.0625}");
    cmd_fit->add_option("--omega-step", fit.omega_step, "omega grid step (default 0.025)");
    cmd_fit->add_option("--arch-name", fit.arch_name, "architecture label for the model");
    cmd_fit->add_option("--out", fit.out, "output model path (default model.json)");

    PlanArgs plan;
    auto* cmd_plan = app.add_subcommand("plan", "solve a constraint into multipliers");
    cmd_plan->add_option("arch", plan.arch, "architecture file")->required();
    cmd_plan->add_option("profile", plan.profile, "dataset profile JSON")->required();
    cmd_plan->add_option("model", plan.model, "degradation model JSON")->required();
    cmd_plan->add_option("--disk-budget", plan.disk_budget, "disk budget in bytes");
    cmd_plan->add_option("--memory-budget", plan.memory_budget, "memory budget in bytes");
    cmd_plan->add_option("--min-accuracy", plan.min_accuracy,
                         "accuracy floor as a fraction of baseline, in (0,1)");
    cmd_plan->add_option("--mode", plan.mode, "uniform or layer-wise")->required();
    cmd_plan->add_option("--out", plan.out, "output basename (default 'plan')");

    PredictArgs predict;
    auto* cmd_predict = app.add_subcommand("predict", "predict accuracy for candidate sizes");
    cmd_predict->add_option("model", predict.model, "degradation model JSON")->required();
    cmd_predict->add_option("profile", predict.profile, "dataset profile JSON")->required();
    cmd_predict->add_option("--log-theta", predict.log_thetas, "target log10 weight counts")
        ->required()
        ->delimiter(',');
    cmd_predict->add_option("--base-log-theta", predict.base_log_theta,
                            "override the model's base log10 weight count");

    try {
        app.parse(argc, argv);
        if (cmd_cx->parsed())
            return run_complexity(cx);
        if (cmd_fit->parsed())
            return run_fit(fit);
        if (cmd_plan->parsed())
            return run_plan(plan);
        if (cmd_predict->parsed())
            return run_predict(predict);
        return 2;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const degenerate_model_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const infeasible_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

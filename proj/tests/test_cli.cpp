#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ccplan/io.hpp"
#include "helpers.hpp"

using namespace ccplan;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args, const fs::path& workdir) {
    fs::path out_file = workdir / "cli_output.txt";
    std::string cmd = "cd '" + workdir.string() + "' && '" + CCPLAN_CLI_PATH + "' " + args +
                      " > '" + out_file.string() + "' 2>&1";
    int status = std::system(cmd.c_str());
    CliResult result;
    result.exit_code = (status >= 0) ? ((status >> 8) & 0xff) : -1;
    if (fs::exists(out_file))
        result.output = read_text_file(out_file);
    return result;
}

fs::path fixtures() { return testutil::source_dir() / "testdata" / "fixtures"; }

fs::path make_workdir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("ccplan_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("cli: complexity command is deterministic") {
    fs::path dir = make_workdir("complexity");

    std::string images = (testutil::source_dir() / "testdata" / "synth" / "images").string();
    std::string masks = (testutil::source_dir() / "testdata" / "synth" / "masks").string();

    auto first = run_cli("complexity '" + images + "' --masks '" + masks +
                             "' --resize 64 --scales 5 --name synth --out p1.json",
                         dir);
    REQUIRE(first.exit_code == 0);
    INFO(first.output);
    CHECK(first.output.find("input/16") != std::string::npos);

    auto second = run_cli("complexity '" + images + "' --masks '" + masks +
                              "' --resize 64 --scales 5 --name synth --out p2.json",
                          dir);
    REQUIRE(second.exit_code == 0);
    CHECK(read_text_file(dir / "p1.json") == read_text_file(dir / "p2.json"));

    DatasetProfile profile = load_profile(dir / "p1.json");
    CHECK(profile.name == "synth");
    CHECK(profile.num_images >= 1);
    CHECK(profile.num_scales == 5);
    CHECK(profile.has_masks());
    CHECK(profile.working_resolution == 64);

    auto missing = run_cli("complexity '" + (dir / "nonexistent").string() + "'", dir);
    CHECK(missing.exit_code == 2);
}

TEST_CASE("cli: fit errors") {
    fs::path dir = make_workdir("fit_errors");

    // missing baseline row
    write_text_file(dir / "bad.csv", "dataset,alpha,theta,metric,value\n"
                                     "lymph,0.5,100,f1,0.5\n"
                                     "drive,0.5,100,f1,0.5\n");
    auto res = run_cli("fit bad.csv --profiles '" +
                           (fixtures() / "lymph.profile.json").string() +
                           "' --metric f1 --complexity j",
                       dir);
    CHECK(res.exit_code == 2);

    auto nofile = run_cli("fit missing.csv --profiles x.json --metric f1 --complexity j", dir);
    CHECK(nofile.exit_code == 2);
}

TEST_CASE("cli: full chain reproduces the reference planning numbers") {
    fs::path dir = make_workdir("chain");

    std::string arch = (testutil::source_dir() / "presets" / "unet.arch").string();
    std::string lymph = (fixtures() / "lymph.profile.json").string();
    std::string csv = (fixtures() / "unet_f1_synthetic.csv").string();
    std::string profile_args;
    for (const char* name : {"wing_disk", "drive", "melanoma", "lymph", "chase_db1"})
        profile_args += " '" + (fixtures() / (std::string(name) + ".profile.json")).string() + "'";

    // fit: the synthetic sweep is noiseless, so the law comes back exactly
    auto fit = run_cli("fit '" + csv + "' --profiles" + profile_args +
                           " --metric f1 --complexity j --arch-name unet --out model.json",
                       dir);
    REQUIRE(fit.exit_code == 0);
    DegradationModel model = load_model(dir / "model.json");
    CHECK(std::abs(model.lambda - 0.437) < 1e-9);
    CHECK(std::abs(model.delta - 0.0103) < 1e-9);
    CHECK(model.base_log_theta == doctest::Approx(7.491695).epsilon(1e-5));

    // plan, uniform accuracy floor
    auto plan_uf = run_cli("plan '" + arch + "' '" + lymph +
                               "' model.json --min-accuracy 0.95 --mode uniform --out uf",
                           dir);
    REQUIRE(plan_uf.exit_code == 0);
    ordered_json uf = ordered_json::parse(read_text_file(dir / "uf.plan.json"));
    CHECK(uf["log10_theta_star_target"].get<double>() > 6.83);
    CHECK(uf["log10_theta_star_target"].get<double>() < 6.85);

    // plan, layer-wise accuracy floor
    auto plan_lf = run_cli("plan '" + arch + "' '" + lymph +
                               "' model.json --min-accuracy 0.95 --mode layer-wise --out lf",
                           dir);
    REQUIRE(plan_lf.exit_code == 0);
    ordered_json lf = ordered_json::parse(read_text_file(dir / "lf.plan.json"));
    double lf_log = lf["log10_theta_star_achieved"].get<double>();
    CHECK(lf_log > 5.87);
    CHECK(lf_log < 5.98);
    CHECK(lf["predicted_relative_accuracy"].get<double>() >= 0.95 - 1e-9);

    ArchitectureSpec lf_arch = parse_architecture(read_text_file(dir / "lf.arch"), "lf.arch");
    const int floor_channels[10] = {30, 30, 39, 39, 59, 59, 85, 85, 119, 119};
    for (int i = 0; i < 10; ++i)
        CHECK(std::abs(lf_arch.layers[i].out_channels - floor_channels[i]) <= 1);

    // plan, uniform disk budget at the reference operating point
    auto plan_ub = run_cli("plan '" + arch + "' '" + lymph +
                               "' model.json --disk-budget 490976 --mode uniform --out ub",
                           dir);
    REQUIRE(plan_ub.exit_code == 0);
    ordered_json ub = ordered_json::parse(read_text_file(dir / "ub.plan.json"));
    double ub_log = ub["log10_theta_star_achieved"].get<double>();
    CHECK(ub_log > 5.04);
    CHECK(ub_log < 5.14);

    // plan, layer-wise disk budget
    auto plan_lb = run_cli("plan '" + arch + "' '" + lymph +
                               "' model.json --disk-budget 492108 --mode layer-wise --out lb",
                           dir);
    REQUIRE(plan_lb.exit_code == 0);
    ordered_json lb = ordered_json::parse(read_text_file(dir / "lb.plan.json"));
    CHECK(lb["theta_star_achieved"].get<double>() <=
          lb["theta_star_target"].get<double>() * 1.01);
    ArchitectureSpec lb_arch = parse_architecture(read_text_file(dir / "lb.arch"), "lb.arch");
    const int budget_channels[10] = {20, 20, 19, 19, 25, 25, 29, 29, 33, 33};
    for (int i = 0; i < 10; ++i)
        CHECK(std::abs(lb_arch.layers[i].out_channels - budget_channels[i]) <= 1);

    // predict at the uniform-floor operating point
    auto predict = run_cli("predict model.json '" + lymph + "' --log-theta 6.834", dir);
    REQUIRE(predict.exit_code == 0);
    INFO(predict.output);
    CHECK(predict.output.find("0.9495") != std::string::npos);

    // planning is deterministic down to the bytes
    auto rerun = run_cli("plan '" + arch + "' '" + lymph +
                             "' model.json --min-accuracy 0.95 --mode layer-wise --out lf2",
                         dir);
    REQUIRE(rerun.exit_code == 0);
    CHECK(read_text_file(dir / "lf.arch") == read_text_file(dir / "lf2.arch"));
    CHECK(read_text_file(dir / "lf.plan.json") == read_text_file(dir / "lf2.plan.json"));
}

TEST_CASE("cli: fit on the measured sweep (blank theta, --fast, determinism)") {
    fs::path dir = make_workdir("fit_measured");
    std::string csv = (fixtures() / "unet_f1_measured.csv").string();
    std::string profile_args = " '" + (fixtures() / "chase_db1.profile.json").string() +
                               "' '" + (fixtures() / "drive.profile.json").string() + "'";

    auto fit = run_cli("fit '" + csv + "' --profiles" + profile_args +
                           " --metric f1 --complexity j --out m1.json",
                       dir);
    REQUIRE(fit.exit_code == 0);
    DegradationModel model = load_model(dir / "m1.json");
    CHECK(std::isfinite(model.lambda));
    CHECK(std::isfinite(model.delta));
    CHECK(model.lambda > 0.0);
    CHECK(!model.fast);

    auto again = run_cli("fit '" + csv + "' --profiles" + profile_args +
                             " --metric f1 --complexity j --out m2.json",
                         dir);
    REQUIRE(again.exit_code == 0);
    CHECK(read_text_file(dir / "m1.json") == read_text_file(dir / "m2.json"));

    auto fast = run_cli("fit '" + csv + "' --profiles" + profile_args +
                            " --metric f1 --complexity j --fast --out fast.json",
                        dir);
    REQUIRE(fast.exit_code == 0);
    DegradationModel fast_model = load_model(dir / "fast.json");
    CHECK(fast_model.fast);
    CHECK(std::abs(fast_model.lambda - model.lambda) / model.lambda < 0.5);
}

TEST_CASE("cli: exit codes") {
    fs::path dir = make_workdir("exit_codes");
    std::string arch = (testutil::source_dir() / "presets" / "unet.arch").string();
    std::string lymph = (fixtures() / "lymph.profile.json").string();
    std::string model = (fixtures() / "unet_f1.model.json").string();

    auto bad_floor = run_cli(
        "plan '" + arch + "' '" + lymph + "' '" + model + "' --min-accuracy 1.5 --mode uniform",
        dir);
    CHECK(bad_floor.exit_code == 2);

    auto infeasible = run_cli(
        "plan '" + arch + "' '" + lymph + "' '" + model + "' --disk-budget 40 --mode uniform",
        dir);
    CHECK(infeasible.exit_code == 3);

    auto degenerate = run_cli("predict '" + (fixtures() / "degenerate.model.json").string() +
                                  "' '" + lymph + "' --log-theta 6.0",
                              dir);
    CHECK(degenerate.exit_code == 4);

    auto no_constraint =
        run_cli("plan '" + arch + "' '" + lymph + "' '" + model + "' --mode uniform", dir);
    CHECK(no_constraint.exit_code == 2);

    auto identity = run_cli("plan '" + arch + "' '" + lymph + "' '" + model +
                                "' --disk-budget 124095232 --mode uniform --out id",
                            dir);
    CHECK(identity.exit_code == 0);
    ordered_json id = ordered_json::parse(read_text_file(dir / "id.plan.json"));
    CHECK(id["theta_star_achieved"].get<std::int64_t>() == 31023808);
}

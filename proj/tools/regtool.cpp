// regtool: synthesize phantoms, run registrations, warp volumes, score
// metrics and export slice images.
//
// Exit codes: 0 success, 1 I/O or data error, 2 usage error,
// 3 optimisation divergence.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "reg/core.hpp"
#include "reg/io.hpp"
#include "reg/losses.hpp"
#include "reg/optimize.hpp"
#include "reg/resample.hpp"
#include "reg/transform.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

reg::Shape3 parse_shape(const std::string& text) {
    reg::Shape3 shape{};
    int d1, d2, d3;
    char extra;
    if (std::sscanf(text.c_str(), "%d,%d,%d%c", &d1, &d2, &d3, &extra) != 3) {
        throw CLI::ValidationError("--shape", "expected D1,D2,D3");
    }
    shape = {d1, d2, d3};
    return shape;
}

struct WarpFlag {
    std::optional<reg::RandomTransformSpec> affine;
    std::optional<reg::SmoothDdfSpec> ddf;
};

WarpFlag parse_warp(const std::string& text, std::uint64_t seed) {
    WarpFlag out;
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw CLI::ValidationError("--warp", "expected affine:SCALE or ddf:AMP");
    }
    const std::string kind = text.substr(0, colon);
    double value = 0.0;
    try {
        value = std::stod(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--warp", "bad numeric value in " + text);
    }
    if (value < 0.0) {
        throw CLI::ValidationError("--warp", "magnitude must be >= 0");
    }
    if (kind == "affine") {
        out.affine = reg::RandomTransformSpec{value, seed};
    } else if (kind == "ddf") {
        out.ddf = reg::SmoothDdfSpec{value};
    } else {
        throw CLI::ValidationError("--warp", "unknown warp kind '" + kind + "'");
    }
    return out;
}

void write_trace_csv(const reg::OptimRun& run, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw reg::IoError(reg::IoErrorCode::write_failure,
                           "cannot open " + path);
    }
    out << "iteration,total,image,deform\n";
    char buf[128];
    for (const auto& row : run.trace) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(row.iteration), row.total,
                      row.image, row.deform);
        out << buf;
    }
    if (!out) {
        throw reg::IoError(reg::IoErrorCode::write_failure,
                           "failed writing " + path);
    }
}

// Fails on unknown keys so config typos surface immediately.
void check_config_keys(const json& j, std::initializer_list<const char*> known,
                       const std::string& path) {
    for (const auto& item : j.items()) {
        bool ok = false;
        for (const char* key : known) {
            if (item.key() == key) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw CLI::ValidationError("--config", path + ": unknown key '" +
                                                       item.key() + "'");
        }
    }
}

json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw reg::IoError(reg::IoErrorCode::missing_file, "missing " + path);
    }
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw CLI::ValidationError("--config", path + ": " + e.what());
    }
}

int run_synth(const std::string& shape_text, std::uint64_t seed, int blobs,
              const std::string& warp_text, const std::string& out_dir) {
    reg::PhantomSpec spec;
    spec.shape = parse_shape(shape_text);
    spec.seed = seed;
    spec.n_blobs = blobs;
    const WarpFlag warp = parse_warp(warp_text, seed);
    spec.affine_warp = warp.affine;
    spec.ddf_warp = warp.ddf;

    const reg::Phantom phantom = reg::make_phantom(spec);
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    reg::save_volume(phantom.image, (dir / "fixed_image").string(),
                     reg::VolumeKind::image);
    reg::save_volume(phantom.labels, (dir / "fixed_labels").string(),
                     reg::VolumeKind::label);
    reg::save_volume(*phantom.moving_image, (dir / "moving_image").string(),
                     reg::VolumeKind::image);
    reg::save_volume(*phantom.moving_labels, (dir / "moving_labels").string(),
                     reg::VolumeKind::label);
    std::string truth;
    if (phantom.truth_affine) {
        truth = (dir / "truth_affine.json").string();
        reg::save_affine(*phantom.truth_affine, truth);
    } else {
        truth = (dir / "truth_ddf").string();
        reg::save_volume(reg::ddf_to_volume(*phantom.truth_ddf), truth,
                         reg::VolumeKind::ddf);
    }
    std::cout << "synth: fixed_image fixed_labels moving_image moving_labels "
              << fs::path(truth).filename().string() << " -> " << out_dir
              << "\n";
    return 0;
}

int run_register(const std::string& mode, const std::string& moving_path,
                 const std::string& fixed_path, const std::string& config_path,
                 std::uint64_t seed, const std::string& out_dir) {
    const reg::Volume3 moving = reg::load_volume(moving_path).volume;
    const reg::Volume3 fixed = reg::load_volume(fixed_path).volume;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    reg::OptimRun run{reg::AffineRegConfig{}, {},
                      reg::AffineParams::identity(), 0.0};
    if (mode == "affine") {
        reg::AffineRegConfig cfg;
        if (!config_path.empty()) {
            const json j = load_config(config_path);
            check_config_keys(j, {"lr", "iters", "log_every", "early_stop"},
                              config_path);
            cfg.lr = j.value("lr", cfg.lr);
            cfg.iters = j.value("iters", cfg.iters);
            cfg.log_every = j.value("log_every", cfg.log_every);
            cfg.early_stop = j.value("early_stop", cfg.early_stop);
        }
        run = reg::register_affine(moving, fixed, cfg);
        reg::save_affine(std::get<reg::AffineParams>(run.params),
                         (dir / "params.json").string());
    } else if (mode == "ddf") {
        reg::DdfRegConfig cfg;
        cfg.seed = seed;
        if (!config_path.empty()) {
            const json j = load_config(config_path);
            check_config_keys(j,
                              {"window", "eps", "weight_deform_loss", "lr",
                               "iters", "ddf_init_std", "log_every",
                               "early_stop"},
                              config_path);
            cfg.lncc.window = j.value("window", cfg.lncc.window);
            cfg.lncc.eps = j.value("eps", cfg.lncc.eps);
            cfg.weight_deform_loss =
                j.value("weight_deform_loss", cfg.weight_deform_loss);
            cfg.lr = j.value("lr", cfg.lr);
            cfg.iters = j.value("iters", cfg.iters);
            cfg.ddf_init_std = j.value("ddf_init_std", cfg.ddf_init_std);
            cfg.log_every = j.value("log_every", cfg.log_every);
            cfg.early_stop = j.value("early_stop", cfg.early_stop);
        }
        run = reg::register_ddf(moving, fixed, cfg);
        reg::save_volume(
            reg::ddf_to_volume(std::get<reg::DisplacementField>(run.params)),
            (dir / "ddf").string(), reg::VolumeKind::ddf);
    } else {
        throw CLI::ValidationError("--mode", "expected affine or ddf");
    }

    write_trace_csv(run, (dir / "trace.csv").string());
    const reg::Grid3 grid_ref = reg::reference_grid(fixed.shape());
    reg::save_volume(reg::warp_with_result(run, moving, grid_ref),
                     (dir / "warped_moving").string(), reg::VolumeKind::image);
    const auto& last = run.trace.back();
    std::cout << "register " << mode << ": " << run.trace.size()
              << " logged iterations, final total " << last.total << " -> "
              << out_dir << "\n";
    return 0;
}

int run_warp(const std::string& input_path, const std::string& params_path,
             const std::string& out_path) {
    const reg::LoadedVolume input = reg::load_volume(input_path);
    const reg::Grid3 grid_ref = reg::reference_grid(input.volume.shape());

    fs::path raw_sibling(params_path);
    raw_sibling.replace_extension(".raw");
    reg::Volume3 warped = input.volume;
    if (fs::path(params_path).extension() == ".json" &&
        !fs::exists(raw_sibling)) {
        const reg::AffineParams theta = reg::load_affine(params_path);
        warped = reg::resample(input.volume,
                               reg::warp_grid_affine(grid_ref, theta));
    } else {
        const reg::LoadedVolume params = reg::load_volume(params_path);
        const reg::DisplacementField ddf = reg::volume_to_ddf(params.volume);
        warped =
            reg::resample(input.volume, reg::apply_ddf(grid_ref, ddf));
    }
    reg::save_volume(warped, out_path, input.kind);
    return 0;
}

int run_eval(const std::string& a_path, const std::string& b_path,
             const std::string& metric, int window) {
    const reg::Volume3 a = reg::load_volume(a_path).volume;
    const reg::Volume3 b = reg::load_volume(b_path).volume;
    double value = 0.0;
    if (metric == "ssd") {
        value = reg::ssd(a, b).value;
    } else if (metric == "lncc") {
        reg::LnccConfig cfg;
        cfg.window = window;
        value = reg::lncc(a, b, cfg).value;
    } else if (metric == "dice") {
        value = reg::dice_score(a, b).value;
    } else {
        throw CLI::ValidationError("--metric", "expected ssd, lncc or dice");
    }
    std::printf("%.9g\n", value);
    return 0;
}

int run_compare(const std::string& pred_path, const std::string& truth_path,
                double thresh, int axis, int index,
                const std::string& out_path) {
    const reg::Volume3 pred = reg::load_volume(pred_path).volume;
    const reg::Volume3 truth = reg::load_volume(truth_path).volume;
    const reg::Volume3 map = reg::label_comparison_map(pred, truth, thresh);
    reg::export_comparison(map, axis, index, out_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"3D image registration toolkit"};
    app.require_subcommand(1);

    std::string shape_text = "32,32,32";
    std::uint64_t seed = 0;
    int blobs = 5;
    std::string warp_text = "affine:0";
    std::string out_dir;
    auto* synth = app.add_subcommand("synth", "generate a phantom pair");
    synth->add_option("--shape", shape_text, "volume shape D1,D2,D3");
    synth->add_option("--seed", seed, "RNG seed");
    synth->add_option("--blobs", blobs, "number of intensity blobs");
    synth->add_option("--warp", warp_text, "affine:SCALE or ddf:AMP");
    synth->add_option("--out", out_dir, "output directory")->required();

    std::string mode, moving_path, fixed_path, config_path;
    auto* reg_cmd = app.add_subcommand("register", "run a registration");
    reg_cmd->add_option("--mode", mode, "affine or ddf")->required();
    reg_cmd->add_option("--moving", moving_path, "moving volume")->required();
    reg_cmd->add_option("--fixed", fixed_path, "fixed volume")->required();
    reg_cmd->add_option("--config", config_path, "JSON config overrides");
    reg_cmd->add_option("--seed", seed, "DDF init seed");
    reg_cmd->add_option("--out", out_dir, "output directory")->required();

    std::string input_path, params_path, out_path;
    auto* warp = app.add_subcommand("warp", "apply saved parameters");
    warp->add_option("--input", input_path, "input volume")->required();
    warp->add_option("--params", params_path, "affine JSON or ddf volume")
        ->required();
    warp->add_option("--out", out_path, "output volume base path")->required();

    std::string a_path, b_path, metric = "ssd";
    int window = 9;
    auto* eval = app.add_subcommand("eval", "score a volume pair");
    eval->add_option("--a", a_path, "first volume")->required();
    eval->add_option("--b", b_path, "second volume")->required();
    eval->add_option("--metric", metric, "ssd, lncc or dice");
    eval->add_option("--window", window, "lncc window");

    std::string pred_path, truth_path;
    double thresh = 0.5;
    int axis = 0, index = 0;
    auto* compare = app.add_subcommand("compare", "export a TP/FP/FN slice");
    compare->add_option("--pred", pred_path, "predicted label")->required();
    compare->add_option("--truth", truth_path, "ground-truth label")
        ->required();
    compare->add_option("--thresh", thresh, "prediction threshold");
    compare->add_option("--axis", axis, "slice axis");
    compare->add_option("--index", index, "slice index");
    compare->add_option("--out", out_path, "output .ppm path")->required();

    try {
        app.parse(argc, argv);
        if (synth->parsed()) {
            return run_synth(shape_text, seed, blobs, warp_text, out_dir);
        }
        if (reg_cmd->parsed()) {
            return run_register(mode, moving_path, fixed_path, config_path,
                                seed, out_dir);
        }
        if (warp->parsed()) {
            return run_warp(input_path, params_path, out_path);
        }
        if (eval->parsed()) {
            return run_eval(a_path, b_path, metric, window);
        }
        if (compare->parsed()) {
            return run_compare(pred_path, truth_path, thresh, axis, index,
                               out_path);
        }
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const reg::DivergenceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const reg::ValueError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

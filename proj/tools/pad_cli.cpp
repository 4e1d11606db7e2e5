// pad: patch localization and removal from the command line.
//
//   pad defend  IMAGE... --out DIR
//   pad heatmap IMAGE... --out DIR
//   pad synth   BASE...  --n 50 --seed 7 --out DIR
//   pad eval    MANIFEST [--out DIR] [--defense-dir DIR]

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "pad/pad.hpp"

namespace fs = std::filesystem;

namespace {

struct PipelineFlags {
    std::optional<double> r_mi, p, t_m, timeout_s, flat_floor;
    std::optional<int> delta, window, bins, smooth_side, jobs;
    std::optional<std::string> qualities, provider, heatmaps_dir;
    std::optional<std::uint64_t> seed;
    std::string config;

    void add_to(CLI::App* app) {
        app->add_option("--r-mi", r_mi, "Weight of the mutual-information map in [0,1] (default 0.5)");
        app->add_option("--p", p, "Threshold quantile in [0,1) (default 0.8)");
        app->add_option("--t-m", t_m, "IoA threshold for region proposals (default 0.5)");
        app->add_option("--delta", delta, "Morphology kernel divisor (default 80)");
        app->add_option("--window", window, "MI window side in pixels (default 32)");
        app->add_option("--bins", bins, "MI histogram bins (default 32)");
        app->add_option("--flat-floor", flat_floor, "Entropy (bits) below which a tile counts as flat (default 0.05)");
        app->add_option("--qualities", qualities, "Recompression sweep, e.g. 30,40,50,60,70,80,90");
        app->add_option("--smooth-side", smooth_side, "Residual smoothing side (default derived from delta)");
        app->add_option("--provider", provider, "components | dir:PATH | sidecar:URL");
        app->add_option("--timeout-s", timeout_s, "Sidecar timeout in seconds (default 30)");
        app->add_option("--heatmaps-dir", heatmaps_dir, "Export intermediate heat maps here");
        app->add_option("--jobs", jobs, "Images processed in parallel (default 1)");
        app->add_option("--seed", seed, "Seed for synthetic fixtures");
        app->add_option("--config", config, "Flat JSON config file (default $PAD_CONFIG)");
    }

    pad::RunConfig resolve() const {
        pad::RunConfig cfg;
        if (auto path = pad::resolve_config_path(config)) cfg = pad::load_config_file(*path, cfg);
        nlohmann::json overrides = nlohmann::json::object();
        auto put = [&](const char* key, const auto& v) {
            if (v) overrides[key] = *v;
        };
        put("r-mi", r_mi);
        put("p", p);
        put("t-m", t_m);
        put("delta", delta);
        put("window", window);
        put("bins", bins);
        put("flat-floor", flat_floor);
        put("qualities", qualities);
        put("smooth-side", smooth_side);
        put("timeout-s", timeout_s);
        put("provider", provider);
        put("heatmaps-dir", heatmaps_dir);
        put("jobs", jobs);
        put("seed", seed);
        // timeout-s is applied before provider so a sidecar spec picks it up.
        pad::apply_json(cfg, overrides);
        if (timeout_s) cfg.provider.timeout_s = *timeout_s;
        cfg.validate();
        return cfg;
    }
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads. Returns the number of failures.
template <class Fn>
int parallel_for(std::size_t n, int jobs, Fn fn) {
    std::atomic<int> failures{0};
    std::mutex log_mutex;
    auto guarded = [&](std::size_t i) {
        try {
            fn(i);
        } catch (const std::exception& e) {
            std::lock_guard lock(log_mutex);
            std::cerr << "error: " << e.what() << "\n";
            ++failures;
        }
    };
    const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(jobs, static_cast<int>(n))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) guarded(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) guarded(i);
            });
        }
    }
    return failures.load();
}

pad::ImageBuffer load_input(const fs::path& p) {
    if (!fs::exists(p)) throw pad::IoError("input not found: " + p.string());
    return pad::load_image(p);
}

void export_heatmaps(const pad::HeatMaps& maps, const fs::path& dir, const std::string& stem) {
    fs::create_directories(dir);
    pad::save_heatmap(maps.mi, dir / (stem + ".h_mi.png"));
    pad::save_heatmap(maps.cd.heat, dir / (stem + ".h_cd.png"));
    pad::save_heatmap(maps.loc.fused, dir / (stem + ".h_fuse.png"));
    pad::save_mask(maps.loc.patch_map, dir / (stem + ".h_p.png"));
}

int cmd_defend(const std::vector<std::string>& inputs, const fs::path& out, const pad::RunConfig& cfg) {
    fs::create_directories(out);
    return parallel_for(inputs.size(), cfg.jobs, [&](std::size_t i) {
        const fs::path in = inputs[i];
        const auto img = load_input(in);
        const auto stem = in.stem().string();
        const auto res = pad::defend(img, cfg.pipeline, cfg.provider, stem);
        if (res.provider_error) std::cerr << "warning: " << *res.provider_error << "; used connected components\n";
        pad::save_image(res.defended, out / (stem + ".defended.png"));
        pad::save_mask(res.final_mask(), out / (stem + ".mask.png"));
        if (cfg.heatmaps_dir) export_heatmaps(res.maps, *cfg.heatmaps_dir, stem);
    });
}

int cmd_heatmap(const std::vector<std::string>& inputs, const fs::path& out, const pad::RunConfig& cfg) {
    return parallel_for(inputs.size(), cfg.jobs, [&](std::size_t i) {
        const fs::path in = inputs[i];
        const auto img = load_input(in);
        export_heatmaps(pad::compute_heatmaps(img, cfg.pipeline), cfg.heatmaps_dir.value_or(out), in.stem().string());
    });
}

int cmd_synth(const std::vector<std::string>& base_paths, std::size_t n, const std::string& kinds,
              int base_quality, int patch_quality, const fs::path& out, const pad::RunConfig& cfg) {
    std::vector<pad::ImageBuffer> bases;
    for (const auto& b : base_paths) bases.push_back(load_input(b));
    pad::FixtureOptions opt;
    opt.base_quality = base_quality;
    opt.patch_quality = patch_quality;
    if (!kinds.empty()) {
        opt.kinds.clear();
        std::stringstream ss(kinds);
        std::string k;
        while (std::getline(ss, k, ',')) opt.kinds.push_back(pad::parse_patch_kind(k));
    }
    const auto fixtures = pad::make_fixture_set(bases, n, cfg.seed, opt);
    pad::write_fixture_set(fixtures, out);
    std::cout << "wrote " << fixtures.size() << " fixtures and " << (out / "manifest.jsonl").string() << "\n";
    return 0;
}

int cmd_eval(const fs::path& manifest, const std::optional<std::string>& out_dir,
             const std::optional<std::string>& defense_dir, const pad::RunConfig& cfg) {
    if (!fs::exists(manifest)) throw pad::IoError("manifest not found: " + manifest.string());
    pad::EvalOptions opt;
    if (defense_dir) opt.defense_dir = *defense_dir;
    const auto report = pad::run_eval(manifest, cfg, opt);
    const fs::path out = out_dir ? fs::path(*out_dir) : manifest.parent_path();
    fs::create_directories(out);
    {
        std::ofstream js(out / "report.json", std::ios::trunc);
        js << pad::to_json(report).dump(2) << "\n";
        if (!js) throw pad::IoError("cannot write " + (out / "report.json").string());
    }
    const auto text = pad::to_text(report);
    {
        std::ofstream txt(out / "report.txt", std::ios::trunc);
        txt << text;
    }
    std::cout << text;
    return report.failures > 0 ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Training-free adversarial patch localization and removal"};
    app.require_subcommand(1);

    PipelineFlags flags;
    std::vector<std::string> inputs;
    std::string out = ".";

    auto* defend = app.add_subcommand("defend", "Localize and black out patches; writes <stem>.defended.png and <stem>.mask.png");
    defend->add_option("inputs", inputs, "Input images (PNG or JPEG)")->required();
    defend->add_option("--out", out, "Output directory");
    flags.add_to(defend);

    auto* heatmap = app.add_subcommand("heatmap", "Export H_mi, H_cd, H_fuse and H_p for each input");
    heatmap->add_option("inputs", inputs, "Input images")->required();
    heatmap->add_option("--out", out, "Output directory (unless --heatmaps-dir is given)");
    flags.add_to(heatmap);

    std::size_t count = 0;
    std::string kinds;
    int base_quality = 80;
    int patch_quality = 30;
    auto* synth = app.add_subcommand("synth", "Write a synthetic fixture set with ground-truth masks and a manifest");
    synth->add_option("bases", inputs, "Base images")->required();
    synth->add_option("--n", count, "Number of fixtures")->required();
    synth->add_option("--out", out, "Output directory")->required();
    synth->add_option("--kinds", kinds, "Comma list of noise,crop,quality cycled across fixtures");
    synth->add_option("--base-quality", base_quality, "JPEG quality applied to bases first; 0 keeps them");
    synth->add_option("--patch-quality", patch_quality, "JPEG quality of quality-mismatch patches");
    flags.add_to(synth);

    std::string manifest;
    std::optional<std::string> eval_out;
    std::optional<std::string> defense_dir;
    auto* eval = app.add_subcommand("eval", "Run the defense over a manifest and report Patch Localization Recall");
    eval->add_option("manifest", manifest, "manifest.jsonl")->required();
    eval->add_option("--out", eval_out, "Report directory (default: the manifest's directory)");
    eval->add_option("--defense-dir", defense_dir, "Score existing <stem>.mask.png files instead of running the defense");
    flags.add_to(eval);

    CLI11_PARSE(app, argc, argv);

    try {
        const auto cfg = flags.resolve();
        int failures = 0;
        if (*defend) failures = cmd_defend(inputs, out, cfg);
        else if (*heatmap) failures = cmd_heatmap(inputs, out, cfg);
        else if (*synth) failures = cmd_synth(inputs, count, kinds, base_quality, patch_quality, out, cfg);
        else if (*eval) failures = cmd_eval(manifest, eval_out, defense_dir, cfg);
        return failures > 0 ? 1 : 0;
    } catch (const pad::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

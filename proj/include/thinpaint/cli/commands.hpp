#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "thinpaint/cli/run_config.hpp"
#include "thinpaint/mask/augment.hpp"
#include "thinpaint/metrics/metrics.hpp"
#include "thinpaint/train/trainer.hpp"

namespace thinpaint::cli {

// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric abort.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

namespace detail {

namespace fs = std::filesystem;

struct CommonOpts {
    RunConfig config;
    std::string out = "out";
    bool force = false;
    int threads = 1;
};

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("THIN_INPAINT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    return 1;
}

/// Deterministic parallel map over [0, count): work(i) must only touch state for
/// index i. The result never depends on the thread count.
inline void parallel_for(int count, int threads, const std::function<void(int)>& work) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) work(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            try {
                work(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline void ensure_out_dir(const CommonOpts& opts) {
    if (fs::exists(opts.out) && !fs::is_directory(opts.out))
        throw ConfigError("output path '" + opts.out + "' exists and is not a directory");
    if (fs::is_directory(opts.out) && !fs::is_empty(opts.out) && !opts.force)
        throw ConfigError("output directory '" + opts.out +
                          "' is not empty (use --force to write anyway)");
    fs::create_directories(opts.out);
}

inline void echo_config(const CommonOpts& opts) {
    std::ofstream f(fs::path(opts.out) / "config_resolved.cfg", std::ios::trunc);
    f << "# resolved configuration\n" << opts.config.echo();
    f << "# threads = " << opts.threads << "\n";
}

inline std::vector<std::string> list_pngs(const std::string& input) {
    std::vector<std::string> files;
    if (fs::is_directory(input)) {
        for (const auto& e : fs::directory_iterator(input))
            if (e.is_regular_file() && e.path().extension() == ".png")
                files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
    } else if (fs::is_regular_file(input)) {
        files.push_back(input);
    } else {
        throw DataError("input '" + input + "' is neither a file nor a directory");
    }
    if (files.empty()) throw DataError("no PNG files found under '" + input + "'");
    return files;
}

inline std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

inline int cmd_synth(const CommonOpts& opts) {
    ensure_out_dir(opts);
    const auto& rc = opts.config;
    const std::uint64_t seed = static_cast<std::uint64_t>(rc.get_int("seed"));
    const int count = static_cast<int>(rc.get_int("synth.count"));
    if (count < 1) throw ConfigError("synth.count must be >= 1");
    const double f_train = rc.get_real("synth.split_train");
    const double f_val = rc.get_real("synth.split_val");
    const double f_test = rc.get_real("synth.split_test");
    if (f_train < 0 || f_val < 0 || f_test < 0 || f_train + f_val + f_test > 1.0 + 1e-9)
        throw ConfigError("synth split fractions must be >= 0 and sum to at most 1");

    const int n_train = static_cast<int>(count * f_train + 0.5);
    const int n_val = static_cast<int>(count * f_val + 0.5);
    for (const char* split : {"train", "val", "test"})
        fs::create_directories(fs::path(opts.out) / split);

    const int dilate_r = static_cast<int>(rc.get_int("synth.dilate"));
    const double rot = rc.get_real("synth.rotate");
    const double noise_p = rc.get_real("synth.noise");

    parallel_for(count, opts.threads, [&](int i) {
        SynthConfig sc = synth_config_from(rc, seed + static_cast<std::uint64_t>(i));
        BinaryMask mask = generate_structure(sc);
        std::vector<AugmentOp> ops;
        if (dilate_r > 0) ops.push_back(DilateOp{dilate_r});
        if (rot != 0.0) ops.push_back(RotateOp{rot});
        if (noise_p > 0.0) ops.push_back(NoiseOp{noise_p, seed + 7919ull * (i + 1)});
        if (!ops.empty()) mask = augment(mask, ops);

        const char* split = i < n_train ? "train" : i < n_train + n_val ? "val" : "test";
        char name[32];
        std::snprintf(name, sizeof name, "mask_%04d.png", i);
        save_mask(mask, (fs::path(opts.out) / split / name).string());
    });
    echo_config(opts);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// corrupt
// ---------------------------------------------------------------------------

inline int cmd_corrupt(const CommonOpts& opts, const std::string& input) {
    ensure_out_dir(opts);
    const auto files = list_pngs(input);
    const GapConfig gc = gap_config_from(opts.config);
    const BlobLibrary lib =
        make_blob_library(gc.seed ^ 0xb10bb10bull,
                          static_cast<int>(opts.config.get_int("gap.blob_library")));
    const GapSampler sampler(gc, lib);

    parallel_for(static_cast<int>(files.size()), opts.threads, [&](int i) {
        const BinaryMask mask = load_mask(files[i]);
        Rng rng = Rng::stream(gc.seed, static_cast<std::uint64_t>(i));
        const BinaryMask gaps = sampler.sample(mask.height(), mask.width(), rng);
        const BinaryMask corrupted = corrupt(mask, gaps);
        const std::string stem = stem_of(files[i]);
        save_mask(corrupted, (fs::path(opts.out) / (stem + "_corrupt.png")).string());
        save_mask(gaps, (fs::path(opts.out) / (stem + "_gaps.png")).string());
    });
    echo_config(opts);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline int cmd_train(const CommonOpts& opts) {
    ensure_out_dir(opts);
    const TrainConfig cfg = train_config_from(opts.config);
    if (cfg.data_dir.empty()) throw ConfigError("train.data must point at a dataset directory");
    const Dataset synth = load_dataset(cfg.data_dir);
    if (synth.size() < 2)
        throw DataError("training dataset '" + cfg.data_dir + "' has fewer than 2 masks");
    std::optional<Dataset> real;
    if (cfg.variant == Variant::gan_gl_m) {
        real = load_dataset(cfg.real_data_dir);
        if (real->size() < 2)
            throw DataError("real dataset '" + cfg.real_data_dir + "' has fewer than 2 masks");
    }
    echo_config(opts);
    TrainState state = init_train_state(cfg);
    run_training(state, cfg, synth, real ? &*real : nullptr, opts.out);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// infer
// ---------------------------------------------------------------------------

inline int cmd_infer(const CommonOpts& opts, const std::string& checkpoint,
                     const std::string& input) {
    ensure_out_dir(opts);
    const TrainConfig cfg = train_config_from(opts.config);
    TrainState state = load_checkpoint(checkpoint, cfg);
    const double threshold = opts.config.get_real("infer.threshold");
    const auto files = list_pngs(input);
    for (const auto& file : files) {
        const BinaryMask mask = load_mask(file);
        const InferResult res = infer(state.gen, mask, cfg.patch_size, threshold);
        const std::string stem = stem_of(file);
        save_mask(res.inpainted, (fs::path(opts.out) / (stem + "_inpainted.png")).string());
        save_overlay(mask, res.filled, (fs::path(opts.out) / (stem + "_overlay.png")).string());
    }
    echo_config(opts);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

inline std::string find_counterpart(const std::string& dir, const std::string& stem,
                                    const std::vector<std::string>& suffixes) {
    for (const auto& suffix : suffixes) {
        const fs::path candidate = fs::path(dir) / (stem + suffix);
        if (fs::exists(candidate)) return candidate.string();
    }
    throw DataError("missing counterpart for '" + stem + "' under '" + dir + "' (tried " +
                    suffixes.front() + " ...)");
}

inline void write_report(const MetricsReport& report, const CommonOpts& opts,
                         bool with_traits) {
    auto put = [](std::ostream& os, const char* name, const Aggregate& a) {
        os << name << ".mean = " << (a.mean ? std::to_string(*a.mean) : "absent") << "\n";
        os << name << ".std = " << (a.stddev ? std::to_string(*a.stddev) : "absent") << "\n";
        os << name << ".excluded = " << a.excluded << "\n";
    };
    std::ofstream txt(fs::path(opts.out) / "report.txt", std::ios::trunc);
    txt << std::setprecision(9);
    put(txt, "mse_overall", report.mse_overall);
    put(txt, "mse_within_gaps", report.mse_within_gaps);
    put(txt, "rel_pixel_diff", report.rel_pixel_diff);
    put(txt, "rel_comp_diff", report.rel_comp_diff);
    txt << "images = " << report.per_image.size() << "\n";

    std::ofstream csv(fs::path(opts.out) / "report.csv", std::ios::trunc);
    csv << std::setprecision(9);
    csv << "name,mse_overall,mse_within_gaps,rel_pixel_diff,rel_comp_diff,components_before,"
           "components_after";
    if (with_traits) csv << ",length_before,length_after,tips_before,tips_after,hull_before,hull_after";
    csv << "\n";
    auto opt = [](const std::optional<double>& v) {
        return v ? std::to_string(*v) : std::string();
    };
    for (const auto& im : report.per_image) {
        csv << im.name << ',' << im.mse_overall << ',' << opt(im.mse_within_gaps) << ','
            << opt(im.rel_pixel_diff) << ',' << opt(im.rel_comp_diff) << ','
            << im.components_before << ',' << im.components_after;
        if (with_traits)
            csv << ',' << im.traits_before.length << ',' << im.traits_after.length << ','
                << im.traits_before.tips << ',' << im.traits_after.tips << ','
                << im.traits_before.hull_area << ',' << im.traits_after.hull_area;
        csv << "\n";
    }
}

inline int cmd_eval(const CommonOpts& opts, const std::string& gt_dir,
                    const std::string& corrupted_dir, const std::string& inpainted_dir) {
    ensure_out_dir(opts);
    const auto gt_files = list_pngs(gt_dir);

    struct Loaded {
        BinaryMask truth, corrupted, inpainted;
        std::optional<BinaryMask> gaps;
        std::string name;
    };
    std::vector<Loaded> loaded(gt_files.size());
    parallel_for(static_cast<int>(gt_files.size()), opts.threads, [&](int i) {
        Loaded& l = loaded[i];
        const std::string stem = stem_of(gt_files[i]);
        l.name = stem;
        l.truth = load_mask(gt_files[i]);
        l.corrupted =
            load_mask(find_counterpart(corrupted_dir, stem, {"_corrupt.png", ".png"}));
        l.inpainted = load_mask(find_counterpart(
            inpainted_dir, stem,
            {"_inpainted.png", "_corrupt_inpainted.png", ".png"}));
        const fs::path gaps = fs::path(corrupted_dir) / (stem + "_gaps.png");
        if (fs::exists(gaps)) l.gaps = load_mask(gaps.string());
    });

    std::vector<EvalTriple> triples;
    triples.reserve(loaded.size());
    for (const auto& l : loaded)
        triples.push_back(
            {l.name, &l.truth, &l.corrupted, &l.inpainted, l.gaps ? &*l.gaps : nullptr});

    EvalOptions eo;
    eo.pixel_diff_within_gaps = !opts.config.get_bool("eval.pixel_diff_whole_image");
    eo.with_traits = opts.config.get_bool("eval.traits");
    const MetricsReport report = evaluate(triples, eo);
    write_report(report, opts, eo.with_traits);
    echo_config(opts);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// traits
// ---------------------------------------------------------------------------

inline int cmd_traits(const CommonOpts& opts, const std::string& input) {
    ensure_out_dir(opts);
    const auto files = list_pngs(input);
    std::vector<TraitSet> traits(files.size());
    std::vector<int> comps(files.size());
    parallel_for(static_cast<int>(files.size()), opts.threads, [&](int i) {
        const BinaryMask mask = load_mask(files[i]);
        traits[i] = root_traits(mask);
        comps[i] = connected_components(mask);
    });
    std::ofstream csv(fs::path(opts.out) / "traits.csv", std::ios::trunc);
    csv << std::setprecision(9) << "file,length,tips,hull_area,components\n";
    for (std::size_t i = 0; i < files.size(); ++i)
        csv << fs::path(files[i]).filename().string() << ',' << traits[i].length << ','
            << traits[i].tips << ',' << traits[i].hull_area << ',' << comps[i] << "\n";
    echo_config(opts);
    return kExitOk;
}

} // namespace detail

/// Entry point shared by main() and the tests. Returns the process exit code.
inline int run(const std::vector<std::string>& args) {
    CLI::App app{"thinpaint: blind gap filling for binary masks of thin structures"};
    app.require_subcommand(1);

    detail::CommonOpts opts;
    std::string config_path;
    std::vector<std::string> overrides;
    std::int64_t seed_override = -1;
    int threads_flag = 0;

    app.add_option("--config", config_path, "configuration file (key = value lines)");
    app.add_option("--seed", seed_override, "override the seed key");
    app.add_option("--out", opts.out, "output directory");
    app.add_flag("--force", opts.force, "write into a non-empty output directory");
    app.add_option("--threads", threads_flag,
                   "worker threads (default: THIN_INPAINT_THREADS or 1)");
    app.add_option("--set", overrides, "override a config key (key=value, repeatable)");

    auto* synth = app.add_subcommand("synth", "generate a synthetic mask dataset");
    std::string corrupt_input;
    auto* corrupt = app.add_subcommand("corrupt", "introduce artificial gaps into masks");
    corrupt->add_option("input", corrupt_input, "mask PNG or directory")->required();
    auto* train = app.add_subcommand("train", "train an inpainting model");
    std::string infer_checkpoint, infer_input;
    auto* infer = app.add_subcommand("infer", "inpaint masks with a trained model");
    infer->add_option("checkpoint", infer_checkpoint, "checkpoint file")->required();
    infer->add_option("input", infer_input, "mask PNG or directory")->required();
    std::string eval_gt, eval_corrupted, eval_inpainted;
    auto* eval = app.add_subcommand("eval", "score inpainted masks against ground truth");
    eval->add_option("truth", eval_gt, "ground-truth directory")->required();
    eval->add_option("corrupted", eval_corrupted, "corrupted directory")->required();
    eval->add_option("inpainted", eval_inpainted, "inpainted directory")->required();
    std::string traits_input;
    auto* traits = app.add_subcommand("traits", "extract structure traits from masks");
    traits->add_option("input", traits_input, "mask PNG or directory")->required();

    // Global options may follow the subcommand on the command line.
    for (auto* sub : {synth, corrupt, train, infer, eval, traits}) sub->fallthrough();

    std::vector<const char*> argv;
    argv.push_back("thinpaint");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (!config_path.empty()) opts.config.load_file(config_path);
        for (const auto& pair : overrides) opts.config.set_pair(pair);
        if (seed_override >= 0) opts.config.set("seed", std::to_string(seed_override));
        if (threads_flag > 0) opts.config.set("threads", std::to_string(threads_flag));
        opts.threads =
            detail::resolve_threads(static_cast<int>(opts.config.get_int("threads")));

        if (synth->parsed()) return detail::cmd_synth(opts);
        if (corrupt->parsed()) return detail::cmd_corrupt(opts, corrupt_input);
        if (train->parsed()) return detail::cmd_train(opts);
        if (infer->parsed()) return detail::cmd_infer(opts, infer_checkpoint, infer_input);
        if (eval->parsed()) return detail::cmd_eval(opts, eval_gt, eval_corrupted, eval_inpainted);
        if (traits->parsed()) return detail::cmd_traits(opts, traits_input);
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace thinpaint::cli

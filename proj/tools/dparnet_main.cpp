// dparnet command line: dataset synthesis, training, evaluation, ablation
// and curve plotting. Exit codes: 0 ok, 2 configuration error, 3 I/O
// error, 4 numeric failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "dparnet/dataset.hpp"
#include "dparnet/errors.hpp"
#include "dparnet/evaluate.hpp"
#include "dparnet/plot.hpp"
#include "dparnet/run_config.hpp"
#include "dparnet/train.hpp"

namespace fs = std::filesystem;
using namespace dparnet;

namespace {

struct TeeLog {
    std::ofstream file;
    explicit TeeLog(const std::string& path) : file(path) {}
    template <typename T>
    TeeLog& operator<<(const T& v) {
        std::cout << v;
        if (file) file << v;
        return *this;
    }
};

// std::ostream adapter so train loops can log into the tee
class TeeBuf : public std::streambuf {
public:
    explicit TeeBuf(std::ofstream& file) : file_(file) {}

protected:
    int overflow(int c) override {
        if (c != EOF) {
            std::cout.put(static_cast<char>(c));
            if (file_) file_.put(static_cast<char>(c));
        }
        return c;
    }

private:
    std::ofstream& file_;
};

ModelConfig model_config_from(const RunConfig& cfg, int data_channels) {
    ModelConfig mc;
    mc.base_channels = cfg.base_channels;
    mc.rdb_count = cfg.rdb_count;
    mc.rdb_growth = cfg.rdb_growth > 0 ? cfg.rdb_growth : std::max(4, cfg.base_channels / 2);
    mc.wide_channels = cfg.wide_channels;
    mc.in_channels = cfg.in_channels > 0 ? cfg.in_channels : data_channels;
    mc.variant = variant_from_name(cfg.variant);
    mc.validate();
    return mc;
}

TrainConfig train_config_from(const RunConfig& cfg) {
    TrainConfig tc;
    tc.lr = cfg.lr;
    tc.epochs = cfg.epochs;
    tc.alpha1 = cfg.alpha1;
    tc.alpha2 = cfg.alpha2;
    tc.batch_size = cfg.batch_size;
    tc.seed = cfg.seed;
    tc.crop = cfg.crop;
    tc.val_every = cfg.val_every;
    tc.extractor_path = cfg.extractor;
    tc.use_oracle_pmap = cfg.oracle_pmap;
    tc.validate();
    return tc;
}

DegradationSpec degradation_template(const RunConfig& cfg) {
    DegradationSpec spec;
    spec.kind = task_kind(task_from_name(cfg.task));
    spec.field.length_scale = cfg.length_scale;
    spec.max_disp = cfg.max_disp;
    spec.max_blur_sigma = cfg.max_blur_sigma;
    spec.warp_scale = cfg.warp_scale;
    return spec;
}

int cmd_simulate(RunConfig& cfg) {
    if (cfg.out.empty()) throw ConfigError("simulate needs --out");
    const Task task = task_from_name(cfg.task);
    cfg.echo(cfg.out);

    std::string clean = cfg.clean_root;
    if (cfg.synth_sequences > 0) {
        clean = (fs::path(cfg.out) / "_clean").string();
        const int frames = cfg.synth_frames > 0 ? cfg.synth_frames : task_train_frames(task);
        make_synthetic_corpus(clean, cfg.synth_sequences, frames, cfg.synth_height,
                              cfg.synth_width, cfg.synth_channels, cfg.seed);
        std::cout << "synthesized " << cfg.synth_sequences << " clean sequences under " << clean
                  << "\n";
    }
    if (clean.empty()) throw ConfigError("simulate needs --clean or --synth");

    DatasetManifest m = build_dataset(clean, task, degradation_template(cfg), cfg.out, cfg.seed);
    std::cout << "dataset: " << m.entries.size() << " sequences, manifest at "
              << (fs::path(cfg.out) / "manifest.json").string() << "\n";
    return 0;
}

int cmd_train(RunConfig& cfg) {
    if (cfg.out.empty() || cfg.data.empty()) throw ConfigError("train needs --out and --data");
    if (cfg.stage != "param" && cfg.stage != "restore" && cfg.stage != "both")
        throw ConfigError("--stage must be param, restore or both");
    const DatasetManifest manifest = read_manifest(cfg.data);
    const int data_channels = manifest.entries.empty() ? 1 : manifest.entries.front().C;
    cfg.echo(cfg.out);

    const ModelConfig mc = model_config_from(cfg, data_channels);
    const TrainConfig tc = train_config_from(cfg);

    std::string param_ckpt_dir = cfg.param_ckpt;
    if (cfg.stage == "param" || cfg.stage == "both") {
        std::ofstream log_file((fs::path(cfg.out) / "train_param.log").string());
        TeeBuf buf(log_file);
        std::ostream log(&buf);
        ParamNet net(mc.in_channels, mc.param_net_width(), cfg.seed);
        TrainResult r = train_param_net(net, manifest, tc, &log);
        param_ckpt_dir = (fs::path(cfg.out) / "param_net").string();
        save_param_net_checkpoint(net, param_ckpt_dir, r.best_epoch, r.curve, r.opt_state);
        std::cout << "param net checkpoint: " << param_ckpt_dir << " (best val MAE "
                  << r.best_val << " at epoch " << r.best_epoch << ")\n";
    }

    if (cfg.stage == "restore" || cfg.stage == "both") {
        DparNet model(mc, cfg.seed);
        ParamNet pnet;
        const ParamNet* pnet_ptr = nullptr;
        if (mc.wants_pmap() && !tc.use_oracle_pmap) {
            if (param_ckpt_dir.empty())
                throw ConfigError("variant " + cfg.variant +
                                  " needs --param-ckpt, --oracle-pmap, or --stage both");
            pnet = load_param_net_checkpoint(param_ckpt_dir);
            pnet.freeze();
            pnet_ptr = &pnet;
        }
        std::ofstream log_file((fs::path(cfg.out) / "train_restore.log").string());
        TeeBuf buf(log_file);
        std::ostream log(&buf);
        TrainResult r = train_dparnet(model, manifest, tc, pnet_ptr, &log);
        const std::string dir = (fs::path(cfg.out) / "dparnet").string();
        save_dparnet_checkpoint(model, dir, r.best_epoch, r.curve, r.opt_state);
        std::cout << "dparnet checkpoint: " << dir << " (best val PSNR " << r.best_val
                  << " dB at epoch " << r.best_epoch << ")\n";
    }
    return 0;
}

int cmd_eval(RunConfig& cfg) {
    if (cfg.out.empty()) throw ConfigError("eval needs --out");
    if (cfg.model_ckpt.empty()) throw ConfigError("eval needs --model");
    cfg.echo(cfg.out);

    DparNet model = load_dparnet_checkpoint(cfg.model_ckpt);

    if (cfg.efficiency) {
        EfficiencyReport er = benchmark_efficiency(model, cfg.bench_rounds);
        write_efficiency_report(er, (fs::path(cfg.out) / "efficiency.json").string());
        std::cout << "params(1e6) " << er.params_millions << "  flops(1e10) " << er.flops_e10
                  << "  time(s) " << er.time_s << "\n";
        return 0;
    }

    if (cfg.data.empty()) throw ConfigError("eval needs --data");
    const DatasetManifest manifest = read_manifest(cfg.data);

    ParamNet pnet;
    const ParamNet* pnet_ptr = nullptr;
    if (model.config.wants_pmap() && !cfg.oracle_pmap) {
        if (cfg.param_ckpt.empty())
            throw ConfigError("variant needs --param-ckpt or --oracle-pmap for evaluation");
        pnet = load_param_net_checkpoint(cfg.param_ckpt);
        pnet.freeze();
        pnet_ptr = &pnet;
    }

    std::vector<Sequence> restored;
    MetricsReport report = evaluate(model, pnet_ptr, cfg.oracle_pmap, manifest, cfg.split,
                                    cfg.model_ckpt, cfg.timestamp, &restored);
    write_metrics_report(report, (fs::path(cfg.out) / "metrics.json").string());
    std::cout << format_metrics_table(report);

    const std::vector<std::string> ids = manifest.ids_in_split(cfg.split);
    for (size_t i = 0; i < ids.size(); ++i) {
        save_sequence(restored[i], (fs::path(cfg.out) / "restored" / ids[i]).string());
        if (cfg.profile_column >= 0) {
            Sample s = load_sample(manifest, ids[i], 0);
            fs::create_directories(fs::path(cfg.out) / "profiles");
            save_frame(temporal_profile(restored[i], cfg.profile_column),
                       (fs::path(cfg.out) / "profiles" / (ids[i] + "_restored.png")).string());
            save_frame(temporal_profile(s.degraded, cfg.profile_column),
                       (fs::path(cfg.out) / "profiles" / (ids[i] + "_degraded.png")).string());
        }
    }
    return 0;
}

int cmd_ablate(RunConfig& cfg) {
    if (cfg.out.empty() || cfg.data.empty()) throw ConfigError("ablate needs --out and --data");
    const DatasetManifest manifest = read_manifest(cfg.data);
    const int data_channels = manifest.entries.empty() ? 1 : manifest.entries.front().C;
    cfg.echo(cfg.out);
    TrainConfig tc = train_config_from(cfg);

    // the parameter source for full/v2: explicit checkpoint > oracle maps >
    // a parameter net trained here first
    ParamNet pnet;
    const ParamNet* pnet_ptr = nullptr;
    if (!tc.use_oracle_pmap) {
        if (!cfg.param_ckpt.empty()) {
            pnet = load_param_net_checkpoint(cfg.param_ckpt);
        } else {
            std::cout << "training parameter net for the ablation...\n";
            ModelConfig probe = model_config_from(cfg, data_channels);
            pnet = ParamNet(probe.in_channels, probe.param_net_width(), cfg.seed);
            TrainResult r = train_param_net(pnet, manifest, tc, &std::cout);
            save_param_net_checkpoint(pnet, (fs::path(cfg.out) / "param_net").string(),
                                      r.best_epoch, r.curve, r.opt_state);
        }
        pnet.freeze();
        pnet_ptr = &pnet;
    }

    const Variant variants[] = {Variant::v1_deep_only, Variant::v2_param_as_input,
                                Variant::v3_wide_no_param, Variant::full};
    nlohmann::json rows = nlohmann::json::array();
    std::cout << "\nModel              Params(1e6)  FLOPs(1e10)  Time(s)   PSNR     SSIM    "
                 "NRMSE     VI\n";
    for (Variant v : variants) {
        RunConfig vcfg = cfg;
        vcfg.variant = variant_name(v);
        ModelConfig mc = model_config_from(vcfg, data_channels);

        double psnr_sum = 0, ssim_sum = 0, nrmse_sum = 0, vi_sum = 0;
        MetricsReport last_report;
        for (int s = 0; s < cfg.ablate_seeds; ++s) {
            DparNet model(mc, mix_seed(cfg.seed, static_cast<uint64_t>(s)));
            TrainConfig stc = tc;
            stc.seed = mix_seed(cfg.seed, static_cast<uint64_t>(s), 0x74726e00ULL);
            std::ofstream log_file(
                (fs::path(cfg.out) / ("train_" + vcfg.variant + "_s" + std::to_string(s) + ".log"))
                    .string());
            TeeBuf buf(log_file);
            std::ostream log(&buf);
            TrainResult r = train_dparnet(model, manifest, stc, pnet_ptr, &log);
            const std::string dir =
                (fs::path(cfg.out) / (vcfg.variant + "_s" + std::to_string(s))).string();
            save_dparnet_checkpoint(model, dir, r.best_epoch, r.curve, r.opt_state);
            last_report = evaluate(model, pnet_ptr, tc.use_oracle_pmap, manifest, "test",
                                   vcfg.variant, cfg.timestamp);
            psnr_sum += last_report.aggregate.psnr;
            ssim_sum += last_report.aggregate.ssim;
            nrmse_sum += last_report.aggregate.nrmse;
            vi_sum += last_report.aggregate.vi;
        }
        const double n = cfg.ablate_seeds;
        DparNet probe(mc, 0);
        EfficiencyReport er = benchmark_efficiency(probe, cfg.bench_rounds);

        char line[200];
        std::snprintf(line, sizeof(line),
                      "%-18s %11.4f %12.4f %8.4f %8.4f %8.4f %8.4f %8.4f\n",
                      vcfg.variant.c_str(), er.params_millions, er.flops_e10, er.time_s,
                      psnr_sum / n, ssim_sum / n, nrmse_sum / n, vi_sum / n);
        std::cout << line;
        rows.push_back({{"variant", vcfg.variant},
                        {"params_millions", er.params_millions},
                        {"flops_e10", er.flops_e10},
                        {"time_s", er.time_s},
                        {"psnr", psnr_sum / n},
                        {"ssim", ssim_sum / n},
                        {"nrmse", nrmse_sum / n},
                        {"vi", vi_sum / n}});
    }
    std::ofstream f((fs::path(cfg.out) / "ablation.json").string());
    if (!f) throw IoError("cannot write ablation report");
    f << rows.dump(2) << "\n";
    return 0;
}

int cmd_plot(RunConfig& cfg, const std::vector<std::string>& curve_files) {
    if (cfg.out.empty()) throw ConfigError("plot needs --out");
    if (curve_files.empty()) throw ConfigError("plot needs at least one curve file");
    std::vector<PlotCurve> curves;
    for (const std::string& path : curve_files) {
        PlotCurve c;
        c.label = fs::path(path).stem().string();
        c.points = read_curve_csv(path);
        curves.push_back(std::move(c));
    }
    cfg.echo(cfg.out);
    const std::string out_png = (fs::path(cfg.out) / "curves.png").string();
    render_curves(curves, out_png);
    std::cout << "plot: " << out_png << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    RunConfig cfg;

    // --config loads first so explicit flags can override file values
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            try {
                cfg.load_file(argv[i + 1]);
            } catch (const ConfigError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            } catch (const IoError& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 3;
            }
        }
    }

    CLI::App app{"degradation-parameter-assisted wide & deep video restoration toolkit"};
    app.require_subcommand(1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file (flags override its values)");

    auto add_global = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--seed", cfg.seed, "RNG seed");
        sub->add_option("--task", cfg.task, "deturbulence | denoise");
        sub->add_option("--config", config_path, "JSON config file");
    };

    CLI::App* sim = app.add_subcommand("simulate", "synthesize a degraded/clean dataset");
    add_global(sim);
    sim->add_option("--clean", cfg.clean_root, "directory of clean PNG sequences");
    sim->add_option("--synth", cfg.synth_sequences, "generate N synthetic clean sequences");
    sim->add_option("--synth-frames", cfg.synth_frames, "frames per synthetic sequence");
    sim->add_option("--synth-height", cfg.synth_height, "synthetic frame height");
    sim->add_option("--synth-width", cfg.synth_width, "synthetic frame width");
    sim->add_option("--synth-channels", cfg.synth_channels, "1 or 3");
    sim->add_option("--length-scale", cfg.length_scale, "parameter field smoothness (px)");
    sim->add_option("--max-disp", cfg.max_disp, "turbulence: max displacement (px)");
    sim->add_option("--max-blur-sigma", cfg.max_blur_sigma, "turbulence: max blur std (px)");
    sim->add_option("--warp-scale", cfg.warp_scale, "turbulence: warp field smoothness (px)");

    CLI::App* train = app.add_subcommand("train", "train the parameter net and/or DparNet");
    add_global(train);
    train->add_option("--data", cfg.data, "dataset manifest.json");
    train->add_option("--stage", cfg.stage, "param | restore | both");
    train->add_option("--variant", cfg.variant, "full | v1 | v2 | v3");
    train->add_option("--lr", cfg.lr, "learning rate");
    train->add_option("--epochs", cfg.epochs, "training epochs");
    train->add_option("--alpha1", cfg.alpha1, "pixel loss weight");
    train->add_option("--alpha2", cfg.alpha2, "perceptual loss weight");
    train->add_option("--batch", cfg.batch_size, "batch size");
    train->add_option("--crop", cfg.crop, "training crop size");
    train->add_option("--val-every", cfg.val_every, "validate every N epochs");
    train->add_option("--extractor", cfg.extractor, "perceptual extractor weights");
    train->add_option("--param-ckpt", cfg.param_ckpt, "frozen parameter net checkpoint");
    train->add_flag("--oracle-pmap", cfg.oracle_pmap, "use ground-truth parameter maps");
    train->add_option("--base-channels", cfg.base_channels, "deep model width");
    train->add_option("--rdb-count", cfg.rdb_count, "residual dense blocks per direction");
    train->add_option("--rdb-growth", cfg.rdb_growth, "RDB growth (0 = base/2)");
    train->add_option("--wide-channels", cfg.wide_channels, "wide model width");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    add_global(eval_cmd);
    eval_cmd->add_option("--data", cfg.data, "dataset manifest.json");
    eval_cmd->add_option("--model", cfg.model_ckpt, "dparnet checkpoint dir");
    eval_cmd->add_option("--param-ckpt", cfg.param_ckpt, "parameter net checkpoint dir");
    eval_cmd->add_flag("--oracle-pmap", cfg.oracle_pmap, "use ground-truth parameter maps");
    eval_cmd->add_option("--split", cfg.split, "train | val | test");
    eval_cmd->add_option("--profile-column", cfg.profile_column,
                         "emit temporal profile images for this column");
    eval_cmd->add_flag("--efficiency", cfg.efficiency,
                       "skip restoration, emit the efficiency report only");
    eval_cmd->add_option("--bench-rounds", cfg.bench_rounds, "timing rounds");
    eval_cmd->add_option("--timestamp", cfg.timestamp, "fixed report timestamp");

    CLI::App* ablate = app.add_subcommand("ablate", "train and compare all four variants");
    add_global(ablate);
    ablate->add_option("--data", cfg.data, "dataset manifest.json");
    ablate->add_option("--epochs", cfg.epochs, "training epochs per variant");
    ablate->add_option("--lr", cfg.lr, "learning rate");
    ablate->add_option("--batch", cfg.batch_size, "batch size");
    ablate->add_option("--crop", cfg.crop, "training crop size");
    ablate->add_option("--alpha2", cfg.alpha2, "perceptual loss weight");
    ablate->add_option("--extractor", cfg.extractor, "perceptual extractor weights");
    ablate->add_option("--param-ckpt", cfg.param_ckpt, "frozen parameter net checkpoint");
    ablate->add_flag("--oracle-pmap", cfg.oracle_pmap, "use ground-truth parameter maps");
    ablate->add_option("--seeds", cfg.ablate_seeds, "training seeds per variant");
    ablate->add_option("--base-channels", cfg.base_channels, "deep model width");
    ablate->add_option("--rdb-count", cfg.rdb_count, "residual dense blocks per direction");
    ablate->add_option("--wide-channels", cfg.wide_channels, "wide model width");
    ablate->add_option("--bench-rounds", cfg.bench_rounds, "timing rounds");
    ablate->add_option("--timestamp", cfg.timestamp, "fixed report timestamp");

    CLI::App* plot = app.add_subcommand("plot", "render training curves");
    add_global(plot);
    std::vector<std::string> curve_files;
    plot->add_option("curves", curve_files, "curve CSV files")->expected(-1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (sim->parsed()) return cmd_simulate(cfg);
        if (train->parsed()) return cmd_train(cfg);
        if (eval_cmd->parsed()) return cmd_eval(cfg);
        if (ablate->parsed()) return cmd_ablate(cfg);
        if (plot->parsed()) return cmd_plot(cfg, curve_files);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

#include "pg/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "pg/data_io.hpp"

namespace fs = std::filesystem;

namespace pg::cli {

namespace {

std::string cloud_file_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "cloud_%03zu.xyzl", index);
    return buf;
}

double pothole_fraction(const PointCloud& cloud) {
    std::size_t hits = 0;
    for (int l : cloud.labels) hits += (l != 0);
    return static_cast<double>(hits) / static_cast<double>(cloud.n);
}

SegmentationNetwork net_from_checkpoint(const CheckpointContents& ckpt, RunConfig* out_cfg) {
    RunConfig cfg = RunConfig::from_text(ckpt.config_text, "<checkpoint config>");
    SegmentationNetwork net(cfg.net, cfg.seed);
    apply_checkpoint(ckpt, net.registry());
    if (out_cfg) *out_cfg = cfg;
    return net;
}

CheckpointContents load_checkpoint_or_data_error(const std::string& path) {
    try {
        return load_checkpoint(path);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
}

struct TrainRunResult {
    std::vector<EpochLog> log;
    std::size_t param_count = 0;
};

// Shared by cmd_train and cmd_ablate: one resumable training run into `out`.
TrainRunResult run_training(const RunConfig& cfg, const std::string& out) {
    fs::create_directories(out);
    std::vector<PointCloud> train_set;
    std::vector<PointCloud> val_set;
    try {
        train_set = load_dataset(cfg.train_dir);
        if (!cfg.val_dir.empty()) val_set = load_dataset(cfg.val_dir);
    } catch (const DataError&) {
        throw;
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    if (train_set.empty()) throw DataError("no training clouds in " + cfg.train_dir);
    for (const auto& c : train_set)
        if (!c.has_labels()) throw DataError("training cloud without labels");

    SegmentationNetwork net(cfg.net, cfg.seed);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    AdamOptimizer opt(tc);
    const std::string echo_text = cfg.echo();
    write_file_atomic(out + "/config.echo.txt", echo_text);

    const std::string last_path = out + "/ckpt_last.pgck";
    const std::string best_path = out + "/ckpt_best.pgck";
    const std::string csv_path = out + "/train_log.csv";
    std::size_t start_epoch = 0;
    std::vector<std::string> csv_rows;
    if (fs::exists(last_path)) {
        CheckpointContents ckpt = load_checkpoint_or_data_error(last_path);
        apply_checkpoint(ckpt, net.registry(), ckpt.has_optimizer ? &opt : nullptr);
        start_epoch = ckpt.epoch_cursor;
        if (fs::exists(csv_path)) {
            std::ifstream in(csv_path);
            std::string line;
            std::getline(in, line); // header
            while (std::getline(in, line) && csv_rows.size() < start_epoch)
                if (!line.empty()) csv_rows.push_back(line);
        }
        std::cout << "resuming from epoch " << start_epoch << "\n";
    }

    std::cout << "trainable parameters: " << net.registry().total_count() << "\n";

    double best_metric = -1.0;
    auto flush_csv = [&]() {
        std::ostringstream os;
        os << train_log_csv_header() << "\n";
        for (const auto& r : csv_rows) os << r << "\n";
        write_file_atomic(csv_path, os.str());
    };
    auto on_epoch = [&](const EpochLog& row) {
        csv_rows.push_back(train_log_csv_row(row));
        flush_csv();
        const bool last = row.epoch + 1 == tc.epochs;
        if (last || (tc.checkpoint_every > 0 && (row.epoch + 1) % tc.checkpoint_every == 0))
            save_checkpoint(last_path, net.registry(), echo_text, row.epoch + 1, &opt);
        const double metric = std::isnan(row.val_miou) ? row.train_oa : row.val_miou;
        if (metric > best_metric) {
            best_metric = metric;
            save_checkpoint(best_path, net.registry(), echo_text, row.epoch + 1, nullptr);
        }
    };

    TrainResult res = train(net, opt, train_set, tc, val_set.empty() ? nullptr : &val_set,
                            start_epoch, on_epoch);
    return TrainRunResult{res.log, net.registry().total_count()};
}

} // namespace

std::vector<PointCloud> load_dataset(const std::string& dir) {
    if (dir.empty() || !fs::is_directory(dir)) throw DataError("not a dataset directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string ext = entry.path().extension().string();
        if (ext == ".xyzl" || ext == ".ply") files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
    std::vector<PointCloud> out;
    for (const auto& f : files) {
        try {
            out.push_back(read_cloud(f));
        } catch (const std::exception& e) {
            throw DataError(e.what());
        }
    }
    return out;
}

void cmd_gen(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::ostringstream manifest;
    manifest << "file\tseed\tpoints\tpothole_fraction\n";
    for (std::size_t i = 0; i < cfg.gen_count; ++i) {
        SyntheticSceneSpec spec = cfg.scene;
        spec.seed = cfg.seed + i;
        PointCloud cloud = generate_scene(spec);
        const std::string name = cloud_file_name(i);
        write_cloud(cloud, cfg.out_dir + "/" + name, CloudFormat::Xyzl);
        manifest << name << "\t" << spec.seed << "\t" << cloud.n << "\t";
        manifest.precision(17);
        manifest << pothole_fraction(cloud) << "\n";
    }
    write_file_atomic(cfg.out_dir + "/manifest.tsv", manifest.str());
    write_file_atomic(cfg.out_dir + "/config.echo.txt", cfg.echo());
    std::cout << "wrote " << cfg.gen_count << " clouds to " << cfg.out_dir << "\n";
}

void cmd_train(const RunConfig& cfg) {
    TrainRunResult res = run_training(cfg, cfg.out_dir);
    if (!res.log.empty())
        std::cout << "final epoch " << res.log.back().epoch << " mean_loss " << res.log.back().mean_loss
                  << " train_oa " << res.log.back().train_oa << "\n";
}

void cmd_eval(const std::string& checkpoint_path, const std::string& data_dir,
              const std::string& out_dir) {
    CheckpointContents ckpt = load_checkpoint_or_data_error(checkpoint_path);
    RunConfig cfg;
    SegmentationNetwork net = net_from_checkpoint(ckpt, &cfg);
    std::vector<PointCloud> dataset = load_dataset(data_dir);
    if (dataset.empty()) throw DataError("no clouds in " + data_dir);
    for (const auto& c : dataset) c.validate(net.config().num_classes);
    EvalReport rep = evaluate(net, dataset);

    std::cout.precision(6);
    std::cout << "OA    " << rep.oa << "\n";
    std::cout << "mAcc  " << rep.macc << "\n";
    std::cout << "mIoU  " << rep.miou << "\n";
    for (std::size_t c = 0; c < rep.num_classes; ++c)
        std::cout << "IoU[" << c << "] " << rep.per_class_iou[c] << "\n";

    nlohmann::json rec;
    rec["checkpoint"] = checkpoint_path;
    rec["dataset"] = data_dir;
    rec["oa"] = rep.oa;
    rec["macc"] = rep.macc;
    rec["miou"] = rep.miou;
    rec["per_class_iou"] = rep.per_class_iou;
    fs::create_directories(out_dir);
    std::ofstream jl(out_dir + "/eval_records.jsonl", std::ios::app);
    jl << rec.dump() << "\n";
}

void cmd_segment(const std::string& checkpoint_path, const std::string& cloud_in,
                 const std::string& cloud_out) {
    CheckpointContents ckpt = load_checkpoint_or_data_error(checkpoint_path);
    RunConfig cfg;
    SegmentationNetwork net = net_from_checkpoint(ckpt, &cfg);
    PointCloud cloud;
    try {
        cloud = read_cloud(cloud_in);
    } catch (const std::exception& e) {
        throw DataError(e.what());
    }
    if (cloud.n < net.config().min_points())
        throw DataError("cloud has " + std::to_string(cloud.n) + " points, fewer than the x" +
                        std::to_string(net.config().total_downsample()) +
                        " ladder needs; use a test-mode config");
    std::mt19937_64 rng(cfg.seed);
    Tape tape;
    auto fwd = net.forward(tape, cloud, /*training=*/false, rng);
    cloud.labels = argmax_rows(fwd.logits);
    write_cloud(cloud, cloud_out, format_for_path(cloud_out));
    std::cout << "wrote " << cloud_out << "\n";
}

void cmd_ablate(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    RunConfig on = cfg;
    on.net.use_feature_augmenter = true;
    on.out_dir = cfg.out_dir + "/fa_on";
    RunConfig off = cfg;
    off.net.use_feature_augmenter = false;
    off.out_dir = cfg.out_dir + "/fa_off";

    TrainRunResult r_on = run_training(on, on.out_dir);
    TrainRunResult r_off = run_training(off, off.out_dir);
    if (r_on.log.size() != r_off.log.size())
        throw std::runtime_error("ablation runs produced different epoch counts");

    std::ostringstream csv, dat;
    csv << "# params_fa_on=" << r_on.param_count << " params_fa_off=" << r_off.param_count << "\n";
    csv << "epoch,fa_on_loss,fa_off_loss,fa_on_train_oa,fa_off_train_oa\n";
    csv.precision(17);
    dat << "# epoch  fa_on_train_oa  fa_off_train_oa\n";
    dat.precision(17);
    for (std::size_t i = 0; i < r_on.log.size(); ++i) {
        csv << r_on.log[i].epoch << "," << r_on.log[i].mean_loss << "," << r_off.log[i].mean_loss
            << "," << r_on.log[i].train_oa << "," << r_off.log[i].train_oa << "\n";
        dat << r_on.log[i].epoch << " " << r_on.log[i].train_oa << " " << r_off.log[i].train_oa << "\n";
    }
    write_file_atomic(cfg.out_dir + "/ablate.csv", csv.str());
    write_file_atomic(cfg.out_dir + "/ablate.dat", dat.str());
    std::cout << "params with FA: " << r_on.param_count << ", without: " << r_off.param_count << "\n";
}

int run(int argc, const char* const* argv) {
    CLI::App app{"Point-cloud pothole segmentation toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_override, checkpoint, data_dir, cloud_in, cloud_out;
    std::uint64_t seed_override = 0;
    bool has_seed = false, test_mode = false, no_fa = false;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "run config file");
        if (needs_config) opt->required();
        sub->add_option("--seed", seed_override, "override config seed")->each([&](const std::string&) {
            has_seed = true;
        });
        sub->add_option("--out", out_override, "override output directory");
        sub->add_flag("--test-mode", test_mode, "relax the 5-stage/512x strict ladder");
    };

    CLI::App* gen = app.add_subcommand("gen", "generate labeled synthetic clouds");
    add_common(gen, true);
    gen->add_option("--count", "number of clouds (overrides gen.count)");

    CLI::App* tr = app.add_subcommand("train", "train a segmentation network");
    add_common(tr, true);
    tr->add_flag("--no-feature-augmenter", no_fa, "ablate the feature augmenter blocks");

    CLI::App* ev = app.add_subcommand("eval", "evaluate a checkpoint on a labeled dataset");
    ev->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    ev->add_option("--data", data_dir, "labeled cloud directory")->required();
    ev->add_option("--out", out_override, "directory for eval_records.jsonl");

    CLI::App* seg = app.add_subcommand("segment", "label a cloud with a trained checkpoint");
    seg->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    seg->add_option("--in", cloud_in, "input cloud file")->required();
    seg->add_option("--out-file", cloud_out, "output labeled cloud file")->required();

    CLI::App* ab = app.add_subcommand("ablate", "paired trainings with/without the feature augmenter");
    add_common(ab, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        auto make_cfg = [&]() {
            RunConfig cfg = RunConfig::from_file(config_path);
            if (has_seed) cfg.seed = seed_override;
            if (!out_override.empty()) cfg.out_dir = out_override;
            if (test_mode) cfg.net.test_mode = true;
            return cfg;
        };
        if (gen->parsed()) {
            RunConfig cfg = make_cfg();
            if (gen->count("--count")) cfg.gen_count = gen->get_option("--count")->as<std::size_t>();
            cmd_gen(cfg);
        } else if (tr->parsed()) {
            RunConfig cfg = make_cfg();
            if (no_fa) cfg.net.use_feature_augmenter = false;
            cmd_train(cfg);
        } else if (ev->parsed()) {
            cmd_eval(checkpoint, data_dir, out_override.empty() ? "." : out_override);
        } else if (seg->parsed()) {
            cmd_segment(checkpoint, cloud_in, cloud_out);
        } else if (ab->parsed()) {
            cmd_ablate(make_cfg());
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return kExitOk;
}

} // namespace pg::cli

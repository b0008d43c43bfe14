#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "pg/cli.hpp"
#include "pg/data_io.hpp"

using namespace pg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("pgcli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(bool(in), path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned{"pothole_seg"};
    owned.insert(owned.end(), args);
    std::vector<const char*> argv;
    for (const auto& a : owned) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

// Tiny test-mode run: 2-stage ladder, small synthetic scenes.
std::string smoke_config_text() {
    return "net.test_mode = true\n"
           "net.k = 4\n"
           "net.encoder_widths = 4,6\n"
           "net.downsample_ratios = 2,2\n"
           "net.fa_depth_input = 1\n"
           "net.fa_depth_bottleneck = 1\n"
           "net.head_widths = 5,4\n"
           "net.dropout_rate = 0.0\n"
           "train.epochs = 3\n"
           "train.lr0 = 0.01\n"
           "train.checkpoint_every = 1\n"
           "scene.extent = 2.0\n"
           "scene.point_density = 32\n"
           "scene.radius_min = 0.3\n"
           "scene.radius_max = 0.5\n"
           "seed = 11\n";
}

std::string write_smoke_config(const TempDir& dir, const std::string& extra = "") {
    const std::string path = dir.file("run.cfg");
    std::ofstream out(path);
    out << smoke_config_text() << extra;
    out.close();
    return path;
}

std::size_t csv_data_rows(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line); // header
    while (std::getline(in, line))
        if (!line.empty()) ++rows;
    return rows;
}

} // namespace

TEST_CASE("run config round trips through its echo and rejects unknown keys") {
    RunConfig cfg = RunConfig::from_text(smoke_config_text());
    CHECK(cfg.net.test_mode);
    CHECK(cfg.net.encoder_widths == std::vector<std::size_t>{4, 6});
    CHECK(cfg.train.epochs == 3);
    CHECK(cfg.seed == 11);

    RunConfig again = RunConfig::from_text(cfg.echo());
    CHECK(again.echo() == cfg.echo());

    CHECK_THROWS_WITH_AS(RunConfig::from_text("net.typo_key = 3\n"), doctest::Contains("unknown key"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(RunConfig::from_text("net.k\n"), doctest::Contains("key = value"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(RunConfig::from_text("net.k = banana\n"), doctest::Contains("banana"),
                         ConfigError);
}

TEST_CASE("gen writes clouds plus a manifest whose fractions recount") {
    TempDir dir;
    const std::string cfg_path = write_smoke_config(dir);
    const std::string out = dir.file("gen_out");
    CHECK(run_cli({"gen", "--config", cfg_path, "--count", "3", "--out", out}) == cli::kExitOk);

    std::size_t rows = 0;
    std::ifstream manifest(out + "/manifest.tsv");
    std::string line;
    std::getline(manifest, line); // header
    while (std::getline(manifest, line)) {
        if (line.empty()) continue;
        ++rows;
        std::istringstream ls(line);
        std::string name;
        std::uint64_t seed, points;
        double fraction;
        ls >> name >> seed >> points >> fraction;
        PointCloud c = read_cloud(out + "/" + name);
        CHECK(c.n == points);
        std::size_t hits = 0;
        for (int l : c.labels) hits += (l != 0);
        CHECK(fraction == doctest::Approx(static_cast<double>(hits) / c.n).epsilon(1e-12));
    }
    CHECK(rows == 3);

    // same seed, second directory: identical bytes
    const std::string out2 = dir.file("gen_out2");
    CHECK(run_cli({"gen", "--config", cfg_path, "--count", "3", "--out", out2}) == cli::kExitOk);
    for (const char* f : {"cloud_000.xyzl", "cloud_001.xyzl", "cloud_002.xyzl", "manifest.tsv"})
        CHECK(slurp(out + "/" + f) == slurp(out2 + "/" + f));
}

TEST_CASE("bad config and missing files exit with the documented codes") {
    TempDir dir;
    const std::string bad_cfg = dir.file("bad.cfg");
    std::ofstream(bad_cfg) << "definitely.not.a.key = 1\n";
    CHECK(run_cli({"gen", "--config", bad_cfg, "--out", dir.file("x")}) == cli::kExitConfig);
    CHECK(run_cli({"gen", "--config", dir.file("absent.cfg"), "--out", dir.file("x")}) ==
          cli::kExitConfig);
    CHECK(run_cli({"eval", "--checkpoint", dir.file("absent.pgck"), "--data", dir.file("nodir")}) ==
          cli::kExitData);
    const std::string cfg_path = write_smoke_config(dir, "data.train_dir = " + dir.file("nodir") + "\n");
    CHECK(run_cli({"train", "--config", cfg_path, "--out", dir.file("t")}) == cli::kExitData);
}

TEST_CASE("gen + train + eval + segment smoke run") {
    TempDir dir;
    const std::string data = dir.file("data");
    const std::string cfg_path = write_smoke_config(dir, "data.train_dir = " + data + "\n");
    REQUIRE(run_cli({"gen", "--config", cfg_path, "--count", "4", "--out", data}) == cli::kExitOk);

    const std::string run_out = dir.file("run");
    REQUIRE(run_cli({"train", "--config", cfg_path, "--out", run_out}) == cli::kExitOk);
    CHECK(csv_data_rows(run_out + "/train_log.csv") == 3);
    CHECK(fs::exists(run_out + "/ckpt_last.pgck"));
    CHECK(fs::exists(run_out + "/ckpt_best.pgck"));
    CHECK(fs::exists(run_out + "/config.echo.txt"));

    // eval: exit ok, jsonl record matches a direct evaluate() call
    const std::string eval_out = dir.file("eval");
    REQUIRE(run_cli({"eval", "--checkpoint", run_out + "/ckpt_last.pgck", "--data", data, "--out",
                     eval_out}) == cli::kExitOk);
    std::ifstream jl(eval_out + "/eval_records.jsonl");
    std::string rec_line;
    REQUIRE(std::getline(jl, rec_line));
    auto rec = nlohmann::json::parse(rec_line);

    CheckpointContents ckpt = load_checkpoint(run_out + "/ckpt_last.pgck");
    RunConfig ck_cfg = RunConfig::from_text(ckpt.config_text);
    SegmentationNetwork net(ck_cfg.net, ck_cfg.seed);
    apply_checkpoint(ckpt, net.registry());
    EvalReport rep = evaluate(net, cli::load_dataset(data));
    CHECK(rec["oa"].get<double>() == doctest::Approx(rep.oa).epsilon(1e-12));
    CHECK(rec["miou"].get<double>() == doctest::Approx(rep.miou).epsilon(1e-12));

    // segment: full-resolution labels, deterministic reruns
    const std::string seg1 = dir.file("seg1.xyzl");
    const std::string seg2 = dir.file("seg2.xyzl");
    const std::string input = data + "/cloud_000.xyzl";
    REQUIRE(run_cli({"segment", "--checkpoint", run_out + "/ckpt_last.pgck", "--in", input,
                     "--out-file", seg1}) == cli::kExitOk);
    REQUIRE(run_cli({"segment", "--checkpoint", run_out + "/ckpt_last.pgck", "--in", input,
                     "--out-file", seg2}) == cli::kExitOk);
    PointCloud in_cloud = read_cloud(input);
    PointCloud seg_cloud = read_cloud(seg1);
    CHECK(seg_cloud.n == in_cloud.n);
    CHECK(seg_cloud.positions == in_cloud.positions);
    for (int l : seg_cloud.labels) CHECK((l == 0 || l == 1));
    CHECK(slurp(seg1) == slurp(seg2));
}

TEST_CASE("gen + train is byte-reproducible from the seed") {
    TempDir dir;
    auto one_run = [&](const std::string& tag) {
        const std::string data = dir.file("data_" + tag);
        const std::string cfg_path = dir.file("cfg_" + tag);
        std::ofstream(cfg_path) << smoke_config_text() << "data.train_dir = " << data << "\n"
                                << "train.epochs = 2\n";
        REQUIRE(run_cli({"gen", "--config", cfg_path, "--count", "3", "--out", data}) == cli::kExitOk);
        const std::string out = dir.file("run_" + tag);
        REQUIRE(run_cli({"train", "--config", cfg_path, "--out", out}) == cli::kExitOk);
        return std::pair{slurp(out + "/train_log.csv"), out + "/ckpt_last.pgck"};
    };
    auto a = one_run("a");
    auto b = one_run("b");
    CHECK(a.first == b.first);
    // checkpoint bytes differ only in the embedded data-directory path, so
    // compare the parameter payloads instead
    CheckpointContents ca = load_checkpoint(a.second);
    CheckpointContents cb = load_checkpoint(b.second);
    CHECK(ca.names == cb.names);
    CHECK(ca.values == cb.values);
}

TEST_CASE("interrupted training resumes with continuous epoch numbering") {
    TempDir dir;
    const std::string data = dir.file("data");
    const std::string cfg2 = dir.file("two.cfg");
    const std::string cfg5 = dir.file("five.cfg");
    std::ofstream(cfg2) << smoke_config_text() << "data.train_dir = " << data << "\ntrain.epochs = 2\n";
    std::ofstream(cfg5) << smoke_config_text() << "data.train_dir = " << data << "\ntrain.epochs = 5\n";
    REQUIRE(run_cli({"gen", "--config", cfg2, "--count", "3", "--out", data}) == cli::kExitOk);

    const std::string out = dir.file("run");
    REQUIRE(run_cli({"train", "--config", cfg2, "--out", out}) == cli::kExitOk);
    CHECK(csv_data_rows(out + "/train_log.csv") == 2);
    REQUIRE(run_cli({"train", "--config", cfg5, "--out", out}) == cli::kExitOk);

    std::ifstream csv(out + "/train_log.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == train_log_csv_header());
    std::size_t expect_epoch = 0;
    while (std::getline(csv, line)) {
        if (line.empty()) continue;
        CHECK(line.rfind(std::to_string(expect_epoch) + ",", 0) == 0);
        ++expect_epoch;
    }
    CHECK(expect_epoch == 5);
    CheckpointContents ckpt = load_checkpoint(out + "/ckpt_last.pgck");
    CHECK(ckpt.epoch_cursor == 5);
}

TEST_CASE("--no-feature-augmenter trains a strictly smaller network") {
    TempDir dir;
    const std::string data = dir.file("data");
    const std::string cfg_path = write_smoke_config(
        dir, "data.train_dir = " + data + "\ntrain.epochs = 1\n");
    REQUIRE(run_cli({"gen", "--config", cfg_path, "--count", "2", "--out", data}) == cli::kExitOk);

    const std::string with_fa = dir.file("with_fa");
    const std::string without_fa = dir.file("without_fa");
    REQUIRE(run_cli({"train", "--config", cfg_path, "--out", with_fa}) == cli::kExitOk);
    REQUIRE(run_cli({"train", "--config", cfg_path, "--out", without_fa,
                     "--no-feature-augmenter"}) == cli::kExitOk);

    auto param_total = [](const std::string& ckpt_path) {
        CheckpointContents c = load_checkpoint(ckpt_path);
        std::size_t total = 0;
        for (const auto& v : c.values) total += v.size();
        return total;
    };
    CHECK(param_total(without_fa + "/ckpt_last.pgck") < param_total(with_fa + "/ckpt_last.pgck"));
}

TEST_CASE("ablate emits paired logs and a larger FA-on parameter count") {
    TempDir dir;
    const std::string data = dir.file("data");
    const std::string cfg_path = write_smoke_config(
        dir, "data.train_dir = " + data + "\ntrain.epochs = 2\n");
    REQUIRE(run_cli({"gen", "--config", cfg_path, "--count", "2", "--out", data}) == cli::kExitOk);

    const std::string out = dir.file("ablate");
    REQUIRE(run_cli({"ablate", "--config", cfg_path, "--out", out}) == cli::kExitOk);
    REQUIRE(fs::exists(out + "/ablate.csv"));
    REQUIRE(fs::exists(out + "/ablate.dat"));
    CHECK(csv_data_rows(out + "/fa_on/train_log.csv") == 2);
    CHECK(csv_data_rows(out + "/fa_off/train_log.csv") == 2);

    std::ifstream csv(out + "/ablate.csv");
    std::string header;
    std::getline(csv, header);
    std::size_t on = 0, off = 0;
    REQUIRE(std::sscanf(header.c_str(), "# params_fa_on=%zu params_fa_off=%zu", &on, &off) == 2);
    CHECK(on > off);
    std::string col_header;
    std::getline(csv, col_header);
    std::size_t rows = 0;
    std::string line;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    CHECK(rows == 2);
}

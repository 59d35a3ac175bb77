#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "dsd_cli_test";

int run(const std::string& args, std::string* out = nullptr) {
    fs::path log = kWork / "cmd.log";
    std::string cmd = std::string(DSD_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    if (out) {
        std::ifstream is(log);
        std::stringstream ss;
        ss << is.rdbuf();
        *out = ss.str();
    }
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

struct WorkDir {
    WorkDir() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
    }
};

}  // namespace

TEST_CASE("unknown subcommand and unknown flag fail with exit 1 and no artifacts") {
    WorkDir wd;
    CHECK(run("frobnicate") == 1);
    fs::path out = kWork / "never";
    CHECK(run("synth-data --no-such-flag --out " + out.string()) == 1);
    CHECK(!fs::exists(out));
}

TEST_CASE("--help exits 0") {
    WorkDir wd;
    std::string out;
    CHECK(run("--help", &out) == 0);
    CHECK(out.find("synth-data") != std::string::npos);
    CHECK(run("transfer --help") == 0);
}

TEST_CASE("synth-data layout and byte-identical reruns") {
    WorkDir wd;
    fs::path a = kWork / "corpus_a", b = kWork / "corpus_b";
    CHECK(run("synth-data --clips 3 --seed 5 --out " + a.string()) == 0);
    CHECK(run("synth-data --clips 3 --seed 5 --out " + b.string()) == 0);

    CHECK(fs::exists(a / "corpus.json"));
    json idx = json::parse(slurp(a / "corpus.json"));
    REQUIRE(idx.at("clips").size() == 3);

    for (int i = 0; i < 3; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "clip_%04d", i);
        fs::path clip = a / name;
        CHECK(fs::exists(clip / "manifest.json"));
        CHECK(fs::exists(clip / "flow.bin"));
        CHECK(fs::exists(clip / "frame_00000.png"));
        CHECK(fs::exists(clip / "mask_00000.png"));
    }

    // identical seeds give byte-identical corpora (config.resolved records the
    // output path itself, so it necessarily differs between directories)
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), a);
        if (rel == "config.resolved") continue;
        CHECK(slurp(entry.path()) == slurp(b / rel));
    }
}

TEST_CASE("cop-preview prints the routing table with correct counts") {
    WorkDir wd;
    std::string out;
    CHECK(run("cop-preview", &out) == 0);
    CHECK(out.find("step,stage,weight,prompt") != std::string::npos);
    CHECK(out.find("# counts coarse=16 mid=20 fine=14") != std::string::npos);

    // row spot checks at the boundaries
    CHECK(out.find("35,coarse,1.5") != std::string::npos);
    CHECK(out.find("34,mid,2") != std::string::npos);
    CHECK(out.find("14,fine,1") != std::string::npos);

    std::string custom;
    CHECK(run("cop-preview --steps 10 --t1 7 --t2 3", &custom) == 0);
    CHECK(custom.find("# counts coarse=4 mid=4 fine=2") != std::string::npos);
}

TEST_CASE("cop-preview rejects an invalid partition") {
    WorkDir wd;
    CHECK(run("cop-preview --steps 10 --t1 3 --t2 7") == 1);
}

TEST_CASE("mask-demo writes the four images and reports coverage") {
    WorkDir wd;
    fs::path out = kWork / "maskdemo";
    std::string log;
    CHECK(run("mask-demo --seed 3 --coverage 0.5 --out " + out.string(), &log) == 0);
    for (const char* f : {"input.png", "foreground.png", "background.png", "mask.png"})
        CHECK(fs::exists(out / f));
    CHECK(log.find("coverage") != std::string::npos);
    CHECK(log.find("iterations") != std::string::npos);
    CHECK(log.find("cap_hit") != std::string::npos);
}

TEST_CASE("config file, --set and explicit flags compose with flag priority") {
    WorkDir wd;
    fs::path cfg_path = kWork / "cfg.json";
    {
        std::ofstream os(cfg_path);
        os << R"({"clips": 2, "seed": 42})";
    }
    fs::path out = kWork / "cfgrun";
    // file sets clips=2 seed=42; --set overrides seed; explicit flag wins for out
    CHECK(run("synth-data --config " + cfg_path.string() + " --set seed=9 --out " +
              out.string()) == 0);
    json resolved = json::parse(slurp(out / "config.resolved"));
    CHECK(resolved.at("clips") == 2);
    CHECK(resolved.at("seed") == 9);
    CHECK(resolved.at("out") == out.string());

    // explicit flag beats both file and --set
    fs::path out2 = kWork / "cfgrun2";
    CHECK(run("synth-data --config " + cfg_path.string() + " --set clips=5 --clips 1 --out " +
              out2.string()) == 0);
    json r2 = json::parse(slurp(out2 / "config.resolved"));
    CHECK(r2.at("clips") == 1);
}

TEST_CASE("unknown config keys are rejected") {
    WorkDir wd;
    fs::path cfg_path = kWork / "bad.json";
    {
        std::ofstream os(cfg_path);
        os << R"({"clipz": 2})";
    }
    CHECK(run("synth-data --config " + cfg_path.string()) == 1);
    CHECK(run("synth-data --set no.such.key=1") == 1);
}

TEST_CASE("train/transfer/eval pipeline smoke") {
    WorkDir wd;
    fs::path corpus = kWork / "corpus";
    CHECK(run("synth-data --clips 2 --seed 11 --out " + corpus.string()) == 0);

    // tiny model dims keep this fast
    std::string dims = " --set dims.width=16 --set dims.heads=2 --set dims.depth=1"
                       " --set dims.mlp_hidden=16";
    fs::path pre = kWork / "pre";
    CHECK(run("pretrain --steps 3 --seed 1 --corpus " + corpus.string() + " --out " +
              pre.string() + dims) == 0);
    CHECK(fs::exists(pre / "loss.csv"));
    CHECK(fs::exists(pre / "checkpoints" / "final.ckpt"));
    CHECK(fs::exists(pre / "config.resolved"));
    {
        std::ifstream is(pre / "loss.csv");
        std::string header;
        std::getline(is, header);
        CHECK(header == "step,raw_loss,smoothed_loss");
        int rows = 0;
        std::string line;
        while (std::getline(is, line))
            if (!line.empty()) ++rows;
        CHECK(rows == 3);
    }

    fs::path ft = kWork / "ft";
    CHECK(run("finetune --steps 3 --seed 2 --corpus " + corpus.string() + " --out " +
              ft.string() + " --init-checkpoint " + (pre / "checkpoints" / "final.ckpt").string() +
              dims) == 0);
    CHECK(fs::exists(ft / "checkpoints" / "final.ckpt"));

    fs::path tr = kWork / "tr";
    CHECK(run("transfer --task reconstruction --source " + (corpus / "clip_0000").string() +
              " --reference " + (corpus / "clip_0001").string() + " --checkpoint " +
              (ft / "checkpoints" / "final.ckpt").string() + " --out " + tr.string() +
              " --seed 3 --set stage.T_sample=5 --set stage.T1=4 --set stage.T2=2") == 0);
    CHECK(fs::exists(tr / "metrics.csv"));
    CHECK(fs::exists(tr / "samples" / "frame_00000.png"));

    fs::path ev = kWork / "ev";
    CHECK(run("eval --samples " + (tr / "samples").string() + " --reference " +
              (corpus / "clip_0000").string() + " --out " + ev.string()) == 0);
    CHECK(fs::exists(ev / "metrics.csv"));
    std::string metrics = slurp(ev / "metrics.csv");
    CHECK(metrics.find("psnr") != std::string::npos);

    // contradictory ablation toggles fail fast
    CHECK(run("finetune --steps 1 --corpus " + corpus.string() + " --out " +
              (kWork / "bad").string() + " --set toggles.no_cop=true --set cop_enabled=true" +
              dims) == 1);

    // transfer with a missing checkpoint is an I/O error (exit 2)
    CHECK(run("transfer --task reconstruction --source " + (corpus / "clip_0000").string() +
              " --reference " + (corpus / "clip_0001").string() + " --checkpoint " +
              (kWork / "nope.ckpt").string() + " --out " + (kWork / "trx").string()) == 2);
}

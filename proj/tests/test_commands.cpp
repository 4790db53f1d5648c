// Drives the rfimp executable end to end on a tiny configuration.

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "rfimp/binary_io.hpp"
#include "rfimp/commands.hpp"
#include "rfimp/trainlab.hpp"

using namespace rfimp;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string output;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(RFIMP_CLI_PATH) + " " + args + " 2>&1";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 4096> buf{};
    while (std::fgets(buf.data(), buf.size(), p)) r.output += buf.data();
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

bool contains(const std::string& s, const std::string& needle) { return s.find(needle) != std::string::npos; }

std::string slurp(const fs::path& p) {
    const auto b = read_file(p);
    return std::string(b.begin(), b.end());
}

// Shared tiny run: 2/1/1 records per SNR at two SNRs, 2 epochs.
struct TinyRun {
    fs::path root;
    fs::path config;
    fs::path out;

    TinyRun() {
        root = fs::temp_directory_path() / "rfimp_test_commands";
        fs::remove_all(root);
        fs::create_directories(root);
        config = root / "tiny.json";
        out = root / "run";
        std::ofstream(config) << R"({
  "split": {"train_per_snr": 2, "val_per_snr": 1, "test_per_snr": 1, "snr_grid": [0, 20]},
  "train": {"epochs": 2, "max_retuning_rounds": 0},
  "master_seed": 5
})";
    }
    std::string common() const { return "--config " + config.string() + " --output-dir " + out.string(); }
};

TinyRun& tiny() {
    static TinyRun t;
    return t;
}

}  // namespace

TEST_CASE("help documents the flags and unknown flags are fatal") {
    const auto gen = run("generate --help");
    CHECK(gen.code == 0);
    for (const char* flag : {"--config", "--desk-scale", "--seed-override", "--output-dir"}) CHECK(contains(gen.output, flag));
    CHECK(contains(run("train --help").output, "--kind"));
    const auto inf = run("infer --help");
    CHECK(contains(inf.output, "--checkpoint"));
    CHECK(contains(inf.output, "--waveform"));
    CHECK(run("eval --help").code == 0);
    CHECK(run("generate --bogus").code != 0);
    CHECK(run("").code != 0);
    CHECK(run("frobnicate").code != 0);
}

TEST_CASE("generate, train, eval, synth and infer on a tiny run") {
    auto& t = tiny();
    const auto gen = run("generate " + t.common());
    REQUIRE(gen.code == 0);
    CHECK(contains(gen.output, "train: 4 records"));
    CHECK(contains(gen.output, "val: 2 records"));
    CHECK(contains(gen.output, "test: 2 records"));
    CHECK(contains(gen.output, "input normalizer"));
    for (const char* f : {"data/train.rfd", "data/val.rfd", "data/test.rfd", "data/test.rfd.json", "config.json"})
        CHECK(fs::exists(t.out / f));

    const auto tr = run("train --kind all " + t.common());
    CHECK((tr.code == kExitOk || tr.code == kExitNotConverged));
    CHECK(contains(tr.output, "epoch 2/2"));
    int ckpts = 0;
    for (const auto& e : fs::directory_iterator(t.out / "models")) ckpts += e.path().extension() == ".ckpt";
    CHECK(ckpts == 7);
    CHECK(fs::exists(t.out / "models" / "single_quad_offset.ckpt"));
    const std::string loss_joint = slurp(t.out / "reports" / "loss_joint.csv");
    const std::string ckpt_joint = slurp(t.out / "models" / "joint.ckpt");
    CHECK(parse_loss_history(t.out / "reports" / "loss_joint.csv").size() == 2);

    // Same seeds: byte-identical outputs.
    const auto again = run("train --kind joint " + t.common());
    CHECK(again.code == tr.code);
    CHECK(slurp(t.out / "reports" / "loss_joint.csv") == loss_joint);
    CHECK(slurp(t.out / "models" / "joint.ckpt") == ckpt_joint);

    const auto ev = run("eval " + t.common());
    REQUIRE(ev.code == 0);
    CHECK(contains(ev.output, "average at 20 dB"));
    const auto rows = parse_mse_table(t.out / "reports" / "mse_vs_snr.csv");
    int data_rows = 0;
    for (const auto& r : rows) data_rows += r.model != "mean_predictor";
    CHECK(data_rows == 2 * 6 * 2);
    CHECK(parse_loss_history(t.out / "reports" / "loss_history.csv").size() == 2);

    const auto wave = t.root / "frame.iq";
    const auto syn = run("synth --waveform " + wave.string() + " --params 1.3,0.8,0.9,1.047,0.21,-0.15 --snr 20 " + t.common());
    REQUIRE(syn.code == 0);
    CHECK(contains(syn.output, "i_offset 0.21"));
    const auto inf_args = "infer --checkpoint " + (t.out / "models" / "joint.ckpt").string() + " --waveform " + wave.string() + " " + t.common();
    const auto inf1 = run(inf_args);
    const auto inf2 = run(inf_args);
    REQUIRE(inf1.code == 0);
    CHECK(inf1.output == inf2.output);
    for (auto name : kImpairmentNames) CHECK(contains(inf1.output, std::string(name) + " "));

    const auto single = run("infer --checkpoint " + (t.out / "models" / "single_phase.ckpt").string() + " --waveform " + wave.string() + " " + t.common());
    CHECK(single.code == 0);
    CHECK(contains(single.output, "phase "));
    CHECK(!contains(single.output, "i_gain "));

    // A waveform that is not whole I/Q pairs, and one that is too short.
    const auto bytes = read_file(wave);
    write_file(t.root / "odd.iq", std::span(bytes).first(bytes.size() - 3));
    const auto odd = run("infer --checkpoint " + (t.out / "models" / "joint.ckpt").string() + " --waveform " + (t.root / "odd.iq").string());
    CHECK(odd.code == kExitError);
    CHECK(contains(odd.output, "truncated"));
    write_file(t.root / "short.iq", std::span(bytes).first(800));
    const auto shrt = run("infer --checkpoint " + (t.out / "models" / "joint.ckpt").string() + " --waveform " + (t.root / "short.iq").string());
    CHECK(shrt.code == kExitError);
    CHECK(contains(shrt.output, "samples"));
}

TEST_CASE("cross-stage mismatches are refused") {
    auto& t = tiny();
    REQUIRE(fs::exists(t.out / "data" / "train.rfd"));
    const auto other = t.root / "other.json";
    std::ofstream(other) << R"({
  "frame": {"rrc_rolloff": 0.25},
  "split": {"train_per_snr": 2, "val_per_snr": 1, "test_per_snr": 1, "snr_grid": [0, 20]},
  "train": {"epochs": 2, "max_retuning_rounds": 0},
  "master_seed": 5
})";
    const auto tr = run("train --kind joint --config " + other.string() + " --output-dir " + t.out.string());
    CHECK(tr.code == kExitError);
    CHECK(contains(tr.output, "digest mismatch"));
    const auto seed = run("eval " + t.common() + " --seed-override 6");
    CHECK(seed.code == kExitError);
    CHECK(contains(seed.output, "digest mismatch"));

    fs::rename(t.out / "models" / "single_q_gain.ckpt", t.root / "moved.ckpt");
    const auto ev = run("eval " + t.common());
    CHECK(ev.code == kExitError);
    CHECK(contains(ev.output, "q_gain"));
    fs::rename(t.root / "moved.ckpt", t.out / "models" / "single_q_gain.ckpt");

    CHECK(run("train --kind single:nope " + t.common()).code == kExitError);
    CHECK(run("train --kind double " + t.common()).code == kExitError);
}

TEST_CASE("configuration errors and output directories") {
    auto& t = tiny();
    const auto bad = t.root / "bad.json";
    std::ofstream(bad) << R"({"frame": {"n_blockz": 3}})";
    const auto r = run("generate --config " + bad.string());
    CHECK(r.code == kExitError);
    CHECK(contains(r.output, "frame.n_blockz"));

    const auto nested = t.root / "a" / "b" / "c";
    const auto ok = run("generate --config " + t.config.string() + " --output-dir " + nested.string());
    CHECK(ok.code == 0);
    CHECK(fs::exists(nested / "data" / "val.rfd"));
    CHECK(slurp(nested / "data" / "train.rfd") == slurp(t.out / "data" / "train.rfd"));

    const auto blocked = t.root / "blocked";
    std::ofstream(blocked) << "file, not a directory";
    const auto unwritable = run("generate --config " + t.config.string() + " --output-dir " + (blocked / "x").string());
    CHECK(unwritable.code == kExitError);
}

TEST_CASE("worker count comes from the environment") {
    auto& t = tiny();
    const auto r = run("generate " + t.common());
    REQUIRE(r.code == 0);
    const std::string cmd = "RFIMP_WORKERS=zero " + std::string(RFIMP_CLI_PATH) + " generate " + t.common() + " > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(cmd.c_str())) == kExitError);
    const std::string ok = "RFIMP_WORKERS=2 " + std::string(RFIMP_CLI_PATH) + " generate " + t.common() + " > /dev/null 2>&1";
    CHECK(WEXITSTATUS(std::system(ok.c_str())) == 0);
}

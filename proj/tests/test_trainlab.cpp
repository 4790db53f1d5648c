#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "rfimp/binary_io.hpp"
#include "rfimp/error.hpp"
#include "rfimp/rng.hpp"
#include "rfimp/trainlab.hpp"

using namespace rfimp;
namespace fs = std::filesystem;

namespace {

// Random inputs with labels drawn from the default ranges.
Dataset toy_dataset(std::size_t n, std::size_t input_len, std::uint64_t seed, std::vector<double> grid = {0.0, 20.0}) {
    Rng rng(seed);
    const ImpairmentRanges ranges;
    std::vector<DatasetRecord> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
        recs[i].input.resize(input_len);
        for (auto& v : recs[i].input) v = static_cast<float>(rng.normal());
        for (std::size_t k = 0; k < kNumImpairments; ++k)
            recs[i].label[k] = static_cast<float>(rng.uniform(ranges.bounds[k].low, ranges.bounds[k].high));
        recs[i].snr_db = grid[i % grid.size()];
        recs[i].seed = i;
    }
    Dataset ds = to_dataset(recs, 1.0);
    ds.header.snr_grid = grid;
    return ds;
}

LossHistory history(std::vector<std::pair<double, double>> v) {
    LossHistory h;
    for (auto [t, val] : v) h.epochs.push_back({t, val});
    return h;
}

Digest param_digest(const Mlp<float>& m) {
    return sha256(std::string_view(reinterpret_cast<const char*>(m.params().data()), m.params().size() * sizeof(float)));
}

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "rfimp_test_trainlab" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("training memorizes a 32-record toy set") {
    const auto ds = toy_dataset(32, 64, 1);
    auto model = init_model<float>(joint_architecture(64), 2);
    AdamHyper h;
    h.lr = 1e-3;
    AdamState<float> opt(model.param_count(), h);
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.epochs = 1000;  // 2 steps per epoch
    cfg.lr = h.lr;
    const auto hist = train(model, opt, ds, ds, cfg);
    CHECK(opt.step == 2000);
    CHECK(hist.size() == 1000);
    CHECK(hist.epochs.back().val_loss < 1e-3);
    CHECK(dataset_loss(model, ds) < 1e-3);
}

TEST_CASE("zero epochs leaves the model unchanged") {
    const auto ds = toy_dataset(8, 16, 3);
    auto model = init_model<float>(joint_architecture(16), 4);
    const auto before = param_digest(model);
    AdamState<float> opt(model.param_count(), {});
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK(train(model, opt, ds, ds, cfg).empty());
    CHECK(param_digest(model) == before);
    CHECK(opt.step == 0);
}

TEST_CASE("training is deterministic, and the short last batch is used") {
    const auto ds = toy_dataset(21, 16, 5);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 8;
    const auto run = [&] {
        auto model = init_model<float>(single_architecture(16, 2), 6);
        AdamState<float> opt(model.param_count(), {});
        auto h = train(model, opt, ds, ds, cfg);
        CHECK(opt.step == 9);
        return std::make_pair(h, param_digest(model));
    };
    const auto a = run();
    const auto b = run();
    CHECK(a.first == b.first);
    CHECK(a.second == b.second);
    cfg.shuffle_seed = 99;
    CHECK(!(run().second == a.second));
}

TEST_CASE("train checks shapes") {
    const auto ds = toy_dataset(4, 16, 7);
    auto model = init_model<float>(joint_architecture(17), 1);
    AdamState<float> opt(model.param_count(), {});
    CHECK_THROWS_AS(train(model, opt, ds, ds, TrainConfig{}), Error);
    auto ok = init_model<float>(joint_architecture(16), 1);
    AdamState<float> wrong(3, {});
    CHECK_THROWS_AS(train(ok, wrong, ds, ds, TrainConfig{}), Error);
}

TEST_CASE("validation is forward only") {
    const auto ds = toy_dataset(10, 16, 8);
    const auto model = init_model<float>(joint_architecture(16), 9);
    const auto before = param_digest(model);
    const double l1 = dataset_loss(model, ds);
    CHECK(param_digest(model) == before);
    CHECK(dataset_loss(model, ds) == l1);
}

TEST_CASE("converged() examples") {
    TrainConfig cfg;
    CHECK(converged(history({{1.0, 1.0}, {0.5, 0.5}, {0.3, 0.3}, {0.2, 0.2}}), cfg));
    CHECK(converged(history({{0.2, 0.2}, {0.2, 0.2}, {0.2, 0.2}, {0.2, 0.2}}), cfg));
    CHECK(!converged(history({{1.0, 2.0}, {0.5, 1.0}, {0.3, 0.6}, {0.2, 0.4}}), cfg));
    CHECK(!converged(history({{0.5, 0.1}, {0.4, 0.2}, {0.3, 0.3}, {0.3, 0.31}}), cfg));
    CHECK(converged(history({{0.3, 0.32}}), cfg));
    CHECK(!converged(history({{0.3, 0.34}}), cfg));
    CHECK(!converged(LossHistory{}, cfg));
    CHECK(!converged(history({{std::nan(""), 0.1}}), cfg));
}

TEST_CASE("retune loop") {
    const auto ds = toy_dataset(32, 32, 10);
    TrainConfig cfg;
    cfg.epochs = 8;
    cfg.lr = 1e-3;
    cfg.max_retuning_rounds = 0;
    const auto once = retune_loop(joint_architecture(32), ds, ds, cfg);
    CHECK(once.rounds_used == 1);
    CHECK(once.converged == converged(once.history, cfg));
    CHECK(once.converged);  // identical train and val sets

    // Held-out validation at an absurd learning rate does not converge.
    const auto val = toy_dataset(32, 32, 11);
    cfg.lr = 1.0;
    cfg.max_retuning_rounds = 2;
    const auto hot = retune_loop(joint_architecture(32), ds, val, cfg);
    CHECK(hot.rounds_used >= 2);
    CHECK(hot.final_lr == 1.0 / std::pow(2.0, hot.rounds_used - 1));
    CHECK(hot.history.size() == 8);
}

TEST_CASE("mean-predictor references") {
    const auto ref = reference_mse(ImpairmentRanges{});
    CHECK(ref[3] == doctest::Approx(0.2056).epsilon(1e-3));
    CHECK(ref[3] == doctest::Approx(std::numbers::pi * std::numbers::pi / 48.0).epsilon(1e-14));
    CHECK(ref[4] == doctest::Approx(0.0833).epsilon(1e-3));
    CHECK(ref[0] == doctest::Approx(1.5 * 1.5 / 12.0));
    CHECK(ref[2] == doctest::Approx(4.0 / 12.0));
}

TEST_CASE("perfect predictions score zero; empty buckets are rejected") {
    const auto ds = toy_dataset(20, 4, 12, {0.0, 5.0, 10.0, 15.0, 20.0});
    EvalReport rep;
    std::array<std::size_t, kNumImpairments> cols{0, 1, 2, 3, 4, 5};
    add_rows(rep, "joint", cols, std::span(ds.labels), ds);
    CHECK(rep.rows.size() == 30);
    for (const auto& r : rep.rows) CHECK(r.mse == 0.0);

    // Constant prediction of 0: mse equals the mean squared label per bucket.
    std::vector<float> zeros(ds.size());
    const std::array<std::size_t, 1> c3{3};
    EvalReport rep2;
    add_rows(rep2, "single", c3, zeros, ds);
    double want = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.snr_db[i] == 10.0) {
            want += static_cast<double>(ds.label(i)[3]) * ds.label(i)[3];
            ++n;
        }
    CHECK(rep2.mse("single", "phase", 10.0) == doctest::Approx(want / n).epsilon(1e-12));

    EvalReport rep3;
    rep3.snr_grid = {0.0, 5.0, 10.0, 15.0, 20.0, 25.0};
    CHECK_THROWS_AS(add_rows(rep3, "joint", cols, std::span(ds.labels), ds), Error);
}

TEST_CASE("evaluate covers both kinds and every parameter") {
    const auto ds = toy_dataset(25, 8, 13, {0.0, 5.0, 10.0, 15.0, 20.0});
    const auto joint = init_model<float>(joint_architecture(8), 1);
    std::vector<Mlp<float>> singles;
    for (std::size_t t = 0; t < 6; ++t) singles.push_back(init_model<float>(single_architecture(8, t), 2 + t));
    std::vector<const Mlp<float>*> ptrs;
    for (const auto& s : singles) ptrs.push_back(&s);
    const auto rep = evaluate(joint, ptrs, ds, ImpairmentRanges{});
    CHECK(rep.rows.size() == 60 + 30);

    const auto pred = predict(singles[4], ds);
    double want = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.snr_db[i] == 15.0) {
            const double e = static_cast<double>(pred[i]) - ds.label(i)[4];
            want += e * e;
            ++n;
        }
    CHECK(rep.mse("single", "i_offset", 15.0) == doctest::Approx(want / n).epsilon(1e-12));
    CHECK(rep.mse("mean_predictor", "phase", 0.0) == rep.reference_mse[3]);
    CHECK(rep.average_mse("joint", 20.0) > 0.0);
    CHECK_THROWS_AS(rep.mse("joint", "phase", 7.0), Error);
}

TEST_CASE("report export and parse round trip") {
    const auto dir = temp_dir("export");
    const auto ds = toy_dataset(25, 8, 14, {0.0, 5.0, 10.0, 15.0, 20.0});
    const auto joint = init_model<float>(joint_architecture(8), 1);
    std::vector<Mlp<float>> singles;
    for (std::size_t t = 0; t < 6; ++t) singles.push_back(init_model<float>(single_architecture(8, t), 2 + t));
    std::vector<const Mlp<float>*> ptrs;
    for (const auto& s : singles) ptrs.push_back(&s);
    const auto rep = evaluate(joint, ptrs, ds, ImpairmentRanges{});
    const auto hist = history({{0.123456789012345, 0.2}, {1.0 / 3.0, 1e-300}});
    const auto files = export_report(rep, hist, (dir / "run_").string());
    CHECK(files.mse_table == dir / "run_mse_vs_snr.csv");

    const auto rows = parse_mse_table(files.mse_table);
    CHECK(rows == rep.rows);
    int data_rows = 0;
    for (const auto& r : rows) data_rows += r.model != "mean_predictor";
    CHECK(data_rows == 60);
    CHECK(parse_loss_history(files.loss_table) == hist);

    const auto empty = dir / "empty.csv";
    write_loss_history(empty, LossHistory{});
    const auto bytes = read_file(empty);
    CHECK(std::string(bytes.begin(), bytes.end()) == "epoch,train_loss,val_loss\n");
    CHECK(parse_loss_history(empty).empty());

    std::ofstream(dir / "bad.csv") << "nope\n";
    CHECK_THROWS_AS(parse_loss_history(dir / "bad.csv"), Error);
}

#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "rfimp/binary_io.hpp"
#include "rfimp/dataset.hpp"
#include "rfimp/error.hpp"
#include "rfimp/rng.hpp"

using namespace rfimp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / "rfimp_test_dataset" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::config;
}

SplitSpec tiny_spec() {
    SplitSpec s;
    s.train_per_snr = 3;
    s.val_per_snr = 2;
    s.test_per_snr = 1;
    s.snr_grid = {0.0, 20.0};
    return s;
}

DatasetHeader header_for(std::uint32_t input_len) {
    DatasetHeader h;
    h.input_len = input_len;
    h.snr_grid = {0.0, 10.0};
    h.config_digest = sha256("cfg");
    return h;
}

DatasetRecord fake_record(std::uint32_t input_len, std::uint64_t seed) {
    DatasetRecord r;
    r.input.resize(input_len);
    for (std::uint32_t i = 0; i < input_len; ++i) r.input[i] = static_cast<float>(seed) + 0.25f * static_cast<float>(i);
    for (std::size_t k = 0; k < kNumImpairments; ++k) r.label[k] = static_cast<float>(k) * 0.1f;
    r.snr_db = seed % 2 ? 10.0 : 0.0;
    r.seed = seed;
    return r;
}

}  // namespace

TEST_CASE("split sizes") {
    const SplitSpec paper;
    CHECK(paper.train_per_snr * paper.snr_grid.size() == 30000);
    CHECK(paper.val_per_snr * paper.snr_grid.size() == 50000);
    CHECK(paper.test_per_snr * paper.snr_grid.size() == 50000);
    const auto desk = SplitSpec::desk_scale();
    CHECK(desk.train_per_snr * desk.snr_grid.size() == 3000);
    CHECK(desk.val_per_snr * desk.snr_grid.size() == 1000);
    CHECK(desk.test_per_snr * desk.snr_grid.size() == 1000);
    SplitSpec bad;
    bad.snr_grid.clear();
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::config);
}

TEST_CASE("generate_record is deterministic and labels lie in range") {
    GeneratorConfig cfg;
    const auto a = generate_record(cfg, 10.0, 123);
    const auto b = generate_record(cfg, 10.0, 123);
    const auto c = generate_record(cfg, 10.0, 124);
    CHECK(a == b);
    CHECK(!(a == c));
    CHECK(a.input.size() == 8176);
    CHECK(a.snr_db == 10.0);
    CHECK(a.seed == 123);
    std::array<double, kNumImpairments> v{};
    for (std::size_t k = 0; k < kNumImpairments; ++k) v[k] = a.label[k];
    CHECK(cfg.ranges.contains(ImpairmentParams::from_array(v)));
    for (float x : a.input) CHECK(std::isfinite(x));

    const ImpairmentParams forced{1.3, 0.8, 0.9, 1.0471975511965976, 0.21, -0.15};
    const auto f = generate_record(cfg, 20.0, 5, forced);
    const auto fv = forced.to_array();
    for (std::size_t k = 0; k < kNumImpairments; ++k) CHECK(f.label[k] == static_cast<float>(fv[k]));
}

TEST_CASE("synthesize_received reports the impairments it applied") {
    GeneratorConfig cfg;
    ImpairmentParams used;
    const auto rx = synthesize_received(cfg, 15.0, 9, std::nullopt, &used);
    CHECK(used.to_array() == sample_params(cfg.ranges, derive_seed(9, 2)).to_array());
    CHECK(rx.size() == cfg.frame.frame_samples() + 7 * 4);
    CHECK(synthesize_received(cfg, 15.0, 9).samples == rx.samples);
}

TEST_CASE("writer and reader round trip") {
    const auto dir = temp_dir("roundtrip");
    const auto path = dir / "x.rfd";
    const auto h = header_for(10);
    std::vector<DatasetRecord> recs;
    {
        DatasetWriter w(path, h);
        for (std::uint64_t i = 0; i < 5; ++i) {
            recs.push_back(fake_record(10, i));
            w.append(recs.back());
        }
        CHECK(!fs::exists(path));
        w.finish(2.0);
    }
    CHECK(fs::exists(path));
    CHECK(!fs::exists(fs::path(path.string() + ".partial")));
    const auto hh = read_header(path);
    CHECK(hh.record_count == 5);
    CHECK(hh.normalizer == 2.0);
    CHECK(hh.snr_grid == h.snr_grid);
    CHECK(hh.config_digest == h.config_digest);
    CHECK(fs::file_size(path) == hh.encoded_size() + 5 * hh.record_size());
    CHECK(read_records(path) == recs);
    const auto mid = read_records(path, {1, 3});
    REQUIRE(mid.size() == 3);
    CHECK(mid[0] == recs[1]);
    CHECK(mid[2] == recs[3]);
    CHECK(read_records(path, {5, 0}).empty());

    const auto ds = load_dataset(path, h.config_digest);
    CHECK(ds.size() == 5);
    CHECK(ds.input_len == 10);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 10; ++j) CHECK(ds.input(i)[j] == static_cast<float>(recs[i].input[j] / 2.0));
    CHECK(ds.label(2)[5] == recs[2].label[5]);
    CHECK(ds.snr_db[1] == 10.0);
    CHECK(ds.seeds[4] == 4);
}

TEST_CASE("reader error kinds") {
    const auto dir = temp_dir("errors");
    const auto path = dir / "x.rfd";
    {
        DatasetWriter w(path, header_for(4));
        for (std::uint64_t i = 0; i < 3; ++i) w.append(fake_record(4, i));
        w.finish(1.0);
    }
    const auto good = read_file(path);
    CHECK(kind_of([&] { read_records(path, {}, sha256("other")); }) == ErrorKind::digest_mismatch);
    CHECK(kind_of([&] { read_records(path, {2, 2}); }) == ErrorKind::out_of_range);
    CHECK(kind_of([&] { read_records(dir / "missing.rfd"); }) == ErrorKind::io);

    auto cut = good;
    cut.resize(good.size() - 1);
    write_file(path, cut);
    CHECK(kind_of([&] { read_records(path); }) == ErrorKind::truncated);
    cut.resize(10);
    write_file(path, cut);
    CHECK(kind_of([&] { read_header(path); }) == ErrorKind::truncated);

    auto bad = good;
    bad[3] = '?';
    write_file(path, bad);
    CHECK(kind_of([&] { read_header(path); }) == ErrorKind::bad_magic);

    auto ver = good;
    ver[8] = 2;
    write_file(path, ver);
    CHECK(kind_of([&] { read_header(path); }) == ErrorKind::version_mismatch);
}

TEST_CASE("unfinished writer leaves nothing behind") {
    const auto dir = temp_dir("partial");
    const auto path = dir / "x.rfd";
    {
        DatasetWriter w(path, header_for(4));
        w.append(fake_record(4, 1));
        CHECK(fs::exists(fs::path(path.string() + ".partial")));
        CHECK(kind_of([&] { w.append(fake_record(5, 1)); }) == ErrorKind::shape_mismatch);
    }
    CHECK(!fs::exists(path));
    CHECK(!fs::exists(fs::path(path.string() + ".partial")));
}

TEST_CASE("record seeds are distinct across splits and indices") {
    const SplitSpec s = tiny_spec();
    std::set<std::uint64_t> seen;
    for (Split sp : {Split::train, Split::val, Split::test}) {
        const std::size_t per = sp == Split::train ? s.train_per_snr : sp == Split::val ? s.val_per_snr : s.test_per_snr;
        for (std::size_t i = 0; i < per * s.snr_grid.size(); ++i) seen.insert(record_seed(7, s, sp, i));
    }
    CHECK(seen.size() == (3 + 2 + 1) * 2);
    CHECK(record_seed(7, s, Split::val, 0) != record_seed(8, s, Split::val, 0));
}

TEST_CASE("generate_split writes three files with a shared train normalizer") {
    const auto dir = temp_dir("split");
    const SplitSpec spec = tiny_spec();
    const GeneratorConfig cfg;
    const Digest d = sha256("split-config");
    const auto files = generate_split(spec, cfg, 11, dir, d, R"({"note":1})");
    CHECK(files.counts == std::array<std::uint64_t, 3>{6, 4, 2});
    for (const auto& p : {files.train, files.val, files.test}) {
        CHECK(fs::exists(p));
        CHECK(fs::exists(fs::path(p.string() + ".json")));
        CHECK(read_header(p).normalizer == files.normalizer);
        CHECK(read_header(p).config_digest == d);
    }
    const auto train = read_records(files.train);
    double s2 = 0.0;
    std::size_t n = 0;
    for (const auto& r : train) {
        for (float v : r.input) s2 += static_cast<double>(v) * v;
        n += r.input.size();
    }
    CHECK(files.normalizer == doctest::Approx(std::sqrt(s2 / static_cast<double>(n))).epsilon(1e-12));
    for (std::size_t i = 0; i < train.size(); ++i) {
        CHECK(train[i].seed == record_seed(11, spec, Split::train, i));
        CHECK(train[i].snr_db == spec.snr_grid[i / spec.train_per_snr]);
        CHECK(train[i] == generate_record(cfg, train[i].snr_db, train[i].seed));
    }
    const auto test = read_records(files.test);
    CHECK(test[1].snr_db == 20.0);

    const auto dir2 = temp_dir("split2");
    generate_split(spec, cfg, 11, dir2, d, R"({"note":1})");
    for (const char* name : {"train.rfd", "val.rfd", "test.rfd", "train.rfd.json"})
        CHECK(read_file(dir / name) == read_file(dir2 / name));
}

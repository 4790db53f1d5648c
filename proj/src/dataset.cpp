#include "rfimp/dataset.hpp"

#include <omp.h>

#include <cmath>
#include <cstring>
#include <exception>

#include "json.hpp"
#include "rfimp/binary_io.hpp"
#include "rfimp/error.hpp"
#include "rfimp/receiver.hpp"
#include "rfimp/rng.hpp"

namespace rfimp {

namespace {

enum SubStream : std::uint64_t { kBits = 1, kImpairments = 2, kChannel = 3, kNoise = 4, kRetry = 1000 };

constexpr std::size_t kGenerateChunk = 64;

void encode_header(ByteWriter& w, const DatasetHeader& h) {
    w.bytes(std::string_view(kDatasetMagic, sizeof kDatasetMagic));
    w.u32(h.version);
    w.u32(h.input_len);
    w.u32(h.label_len);
    w.u64(h.record_count);
    w.u32(static_cast<std::uint32_t>(h.snr_grid.size()));
    for (double s : h.snr_grid) w.f64(s);
    w.f64(h.normalizer);
    w.bytes(h.config_digest);
}

DatasetHeader decode_header(ByteReader& r, const std::string& where) {
    const auto magic = r.bytes(sizeof kDatasetMagic);
    if (std::memcmp(magic.data(), kDatasetMagic, sizeof kDatasetMagic) != 0)
        fail(ErrorKind::bad_magic, where + ": bad magic");
    DatasetHeader h;
    h.version = r.u32();
    if (h.version != kDatasetVersion)
        fail(ErrorKind::version_mismatch, where + ": version " + std::to_string(h.version) + ", expected " +
                                              std::to_string(kDatasetVersion));
    h.input_len = r.u32();
    h.label_len = r.u32();
    h.record_count = r.u64();
    const auto n_snr = r.u32();
    require(n_snr <= 4096, ErrorKind::bad_magic, where + ": implausible SNR grid size");
    h.snr_grid.resize(n_snr);
    for (double& s : h.snr_grid) s = r.f64();
    h.normalizer = r.f64();
    const auto d = r.bytes(h.config_digest.size());
    std::copy(d.begin(), d.end(), h.config_digest.begin());
    return h;
}

void encode_record(ByteWriter& w, const DatasetRecord& rec) {
    w.f32_array(rec.input);
    w.f32_array(rec.label);
    w.f64(rec.snr_db);
    w.u64(rec.seed);
}

DatasetRecord decode_record(ByteReader& r, const DatasetHeader& h) {
    DatasetRecord rec;
    rec.input.resize(h.input_len);
    r.f32_array(rec.input);
    r.f32_array(rec.label);
    rec.snr_db = r.f64();
    rec.seed = r.u64();
    return rec;
}

std::size_t header_prefix_size() {
    return sizeof kDatasetMagic + 4 + 4 + 4 + 8 + 4;
}

// Reads the header and confirms the body length matches record_count.
DatasetHeader open_checked(std::ifstream& in, const std::filesystem::path& path,
                           const std::optional<Digest>& expected) {
    const std::string where = "dataset '" + path.string() + "'";
    std::error_code ec;
    const auto file_size = std::filesystem::file_size(path, ec);
    if (ec) fail(ErrorKind::io, where + ": " + ec.message());

    std::vector<std::uint8_t> prefix(header_prefix_size());
    in.read(reinterpret_cast<char*>(prefix.data()), static_cast<std::streamsize>(prefix.size()));
    prefix.resize(static_cast<std::size_t>(in.gcount()));
    std::uint32_t n_snr = 0;
    if (prefix.size() == header_prefix_size())
        std::memcpy(&n_snr, prefix.data() + header_prefix_size() - 4, 4);  // little-endian host
    std::vector<std::uint8_t> rest(std::min<std::size_t>(8u * n_snr + 8 + 32, 1u << 20));
    in.read(reinterpret_cast<char*>(rest.data()), static_cast<std::streamsize>(rest.size()));
    rest.resize(static_cast<std::size_t>(in.gcount()));
    prefix.insert(prefix.end(), rest.begin(), rest.end());

    ByteReader r(prefix, where);
    DatasetHeader h = decode_header(r, where);
    if (expected && *expected != h.config_digest)
        fail(ErrorKind::digest_mismatch, where + " was generated under config " + to_hex(h.config_digest) +
                                             ", expected " + to_hex(*expected));
    const std::uintmax_t want = h.encoded_size() + h.record_count * h.record_size();
    if (file_size < want)
        fail(ErrorKind::truncated, where + ": body holds " +
                                       std::to_string((file_size - std::min<std::uintmax_t>(file_size, h.encoded_size())) /
                                                      h.record_size()) +
                                       " of " + std::to_string(h.record_count) + " records");
    return h;
}

}  // namespace

static_assert(std::endian::native == std::endian::little,
              "dataset header parsing assumes a little-endian host");

void GeneratorConfig::validate() const {
    frame.validate();
    ranges.validate();
    channel.validate(frame.cp_len());
}

SampleBuffer synthesize_received(const GeneratorConfig& cfg, double snr_db, std::uint64_t seed,
                                 const std::optional<ImpairmentParams>& forced, ImpairmentParams* used) {
    const FrameConfig& fc = cfg.frame;
    const std::size_t active_len = static_cast<std::size_t>(fc.frame_symbols() - fc.guard_len) *
                                   static_cast<std::size_t>(fc.oversample);
    const auto bits = random_payload_bits(static_cast<std::size_t>(fc.payload_bits()), derive_seed(seed, kBits));
    const ImpairmentParams params = forced ? *forced : sample_params(cfg.ranges, derive_seed(seed, kImpairments));
    if (used) *used = params;
    const auto frame = build_frame(bits, fc);
    const auto tx = apply_all(frame.samples, params, cfg.ranges);
    const auto ch = draw_channel(cfg.channel, fc.cp_len(), derive_seed(seed, kChannel));
    return add_awgn(apply_channel(tx, ch, fc.oversample), snr_db, derive_seed(seed, kNoise), active_len);
}

DatasetRecord generate_record(const GeneratorConfig& cfg, double snr_db, std::uint64_t seed,
                              const std::optional<ImpairmentParams>& forced) {
    cfg.validate();
    const FrameConfig& fc = cfg.frame;
    for (int attempt = 0; attempt < kMaxSyncAttempts; ++attempt) {
        const std::uint64_t s =
            attempt == 0 ? seed : derive_seed(seed, kRetry + static_cast<std::uint64_t>(attempt));
        ImpairmentParams params;
        const auto mf = matched_filter(synthesize_received(cfg, snr_db, s, forced, &params), fc);
        SyncResult sync;
        try {
            sync = coarse_sync(mf, fc);
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::sync_not_found) continue;
            throw;
        }
        const auto features = extract_nn_input(mf, sync, fc);
        DatasetRecord rec;
        rec.input.assign(features.begin(), features.end());
        const auto v = params.to_array();
        for (std::size_t i = 0; i < v.size(); ++i) rec.label[i] = static_cast<float>(v[i]);
        rec.snr_db = snr_db;
        rec.seed = seed;
        return rec;
    }
    fail(ErrorKind::sync_not_found, "generate_record: sync failed " + std::to_string(kMaxSyncAttempts) +
                                        " times for seed " + std::to_string(seed));
}

void SplitSpec::validate() const {
    if (train_per_snr < 1) fail(ErrorKind::config, "split.train_per_snr: must be >= 1");
    if (val_per_snr < 1) fail(ErrorKind::config, "split.val_per_snr: must be >= 1");
    if (test_per_snr < 1) fail(ErrorKind::config, "split.test_per_snr: must be >= 1");
    if (snr_grid.empty()) fail(ErrorKind::config, "split.snr_grid: must not be empty");
    for (double s : snr_grid)
        if (!std::isfinite(s)) fail(ErrorKind::config, "split.snr_grid: entries must be finite");
}

SplitSpec SplitSpec::desk_scale() {
    SplitSpec s;
    s.train_per_snr = 600;
    s.val_per_snr = 200;
    s.test_per_snr = 200;
    return s;
}

const char* to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

std::size_t DatasetHeader::encoded_size() const {
    return header_prefix_size() + 8 * snr_grid.size() + 8 + config_digest.size();
}

DatasetWriter::DatasetWriter(std::filesystem::path path, DatasetHeader header)
    : path_(std::move(path)), header_(std::move(header)) {
    partial_ = path_;
    partial_ += ".partial";
    header_.record_count = 0;
    out_.open(partial_, std::ios::binary | std::ios::trunc);
    if (!out_) fail(ErrorKind::io, "cannot open '" + partial_.string() + "' for writing");
    write_header();
}

DatasetWriter::~DatasetWriter() {
    if (!finished_) {
        out_.close();
        std::error_code ec;
        std::filesystem::remove(partial_, ec);
    }
}

void DatasetWriter::write_header() {
    ByteWriter w;
    encode_header(w, header_);
    out_.seekp(0);
    out_.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
    if (!out_) fail(ErrorKind::io, "write error on '" + partial_.string() + "'");
}

void DatasetWriter::append(const DatasetRecord& rec) {
    require(!finished_, ErrorKind::invalid_argument, "DatasetWriter: append after finish");
    require(rec.input.size() == header_.input_len, ErrorKind::shape_mismatch,
            "DatasetWriter: record input length " + std::to_string(rec.input.size()) + " != header " +
                std::to_string(header_.input_len));
    ByteWriter w;
    encode_record(w, rec);
    out_.write(reinterpret_cast<const char*>(w.data().data()), static_cast<std::streamsize>(w.data().size()));
    if (!out_) fail(ErrorKind::io, "write error on '" + partial_.string() + "'");
    ++header_.record_count;
}

void DatasetWriter::finish(double normalizer) {
    header_.normalizer = normalizer;
    write_header();
    out_.close();
    if (!out_) fail(ErrorKind::io, "close failed on '" + partial_.string() + "'");
    std::error_code ec;
    std::filesystem::rename(partial_, path_, ec);
    if (ec) fail(ErrorKind::io, "cannot rename '" + partial_.string() + "': " + ec.message());
    finished_ = true;
}

DatasetHeader read_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open dataset '" + path.string() + "'");
    return open_checked(in, path, std::nullopt);
}

std::vector<DatasetRecord> read_records(const std::filesystem::path& path, RecordRange range,
                                        const std::optional<Digest>& expected) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::io, "cannot open dataset '" + path.string() + "'");
    const DatasetHeader h = open_checked(in, path, expected);
    if (range.count == std::numeric_limits<std::size_t>::max())
        range.count = range.first <= h.record_count ? h.record_count - range.first : 0;
    if (range.first > h.record_count || range.count > h.record_count - range.first)
        fail(ErrorKind::out_of_range, "dataset '" + path.string() + "': records [" + std::to_string(range.first) +
                                          ", " + std::to_string(range.first + range.count) + ") requested, file has " +
                                          std::to_string(h.record_count));

    std::vector<DatasetRecord> out;
    out.reserve(range.count);
    std::vector<std::uint8_t> buf(h.record_size());
    in.seekg(static_cast<std::streamoff>(h.encoded_size() + range.first * h.record_size()));
    for (std::size_t i = 0; i < range.count; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        if (in.gcount() != static_cast<std::streamsize>(buf.size()))
            fail(ErrorKind::truncated, "dataset '" + path.string() + "': short read at record " +
                                           std::to_string(range.first + i));
        ByteReader r(buf, "dataset record");
        out.push_back(decode_record(r, h));
    }
    return out;
}

Dataset to_dataset(const std::vector<DatasetRecord>& records, double normalizer) {
    require(normalizer > 0.0, ErrorKind::invalid_argument, "to_dataset: normalizer must be > 0");
    Dataset ds;
    ds.input_len = records.empty() ? 0 : records.front().input.size();
    ds.header.input_len = static_cast<std::uint32_t>(ds.input_len);
    ds.header.record_count = records.size();
    ds.header.normalizer = normalizer;
    ds.inputs.resize(records.size() * ds.input_len);
    ds.labels.resize(records.size() * kNumImpairments);
    const double scale = 1.0 / normalizer;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& rec = records[i];
        require(rec.input.size() == ds.input_len, ErrorKind::shape_mismatch, "to_dataset: ragged inputs");
        float* dst = ds.inputs.data() + i * ds.input_len;
        for (std::size_t j = 0; j < ds.input_len; ++j)
            dst[j] = static_cast<float>(static_cast<double>(rec.input[j]) * scale);
        std::copy(rec.label.begin(), rec.label.end(), ds.labels.begin() + static_cast<std::ptrdiff_t>(i * kNumImpairments));
        ds.snr_db.push_back(rec.snr_db);
        ds.seeds.push_back(rec.seed);
    }
    return ds;
}

Dataset load_dataset(const std::filesystem::path& path, const std::optional<Digest>& expected) {
    const auto records = read_records(path, {}, expected);
    const DatasetHeader h = read_header(path);
    Dataset ds = to_dataset(records, h.normalizer);
    ds.header = h;
    ds.input_len = h.input_len;
    return ds;
}

std::uint64_t record_seed(std::uint64_t master_seed, const SplitSpec& spec, Split split, std::size_t index) {
    const std::size_t n_snr = spec.snr_grid.size();
    const std::uint64_t n_train = spec.train_per_snr * n_snr;
    const std::uint64_t n_val = spec.val_per_snr * n_snr;
    std::uint64_t offset = 0;
    if (split == Split::val) offset = n_train;
    if (split == Split::test) offset = n_train + n_val;
    return mix64(master_seed + offset + index);
}

std::filesystem::path split_path(const std::filesystem::path& dir, Split s) {
    return dir / (std::string(to_string(s)) + ".rfd");
}

namespace {

void write_manifest(const std::filesystem::path& file, const DatasetHeader& h, Split split, std::size_t per_snr,
                    std::uint64_t master_seed, const std::string& config_json) {
    nlohmann::ordered_json m;
    m["magic"] = std::string(kDatasetMagic, sizeof kDatasetMagic);
    m["version"] = h.version;
    m["input_len"] = h.input_len;
    m["label_len"] = h.label_len;
    m["record_count"] = h.record_count;
    m["snr_grid"] = h.snr_grid;
    m["normalizer"] = h.normalizer;
    m["generator_config_digest"] = to_hex(h.config_digest);
    m["split"] = to_string(split);
    m["per_snr_count"] = per_snr;
    m["master_seed"] = master_seed;
    m["label_order"] = std::vector<std::string>(kImpairmentNames.begin(), kImpairmentNames.end());
    m["generator_config"] = nlohmann::ordered_json::parse(config_json);
    auto path = file;
    path += ".json";
    write_text_file(path, m.dump(2) + "\n");
}

// Generates one split in index order; returns the sum of squared inputs.
double write_split(const std::filesystem::path& path, DatasetHeader header, const SplitSpec& spec,
                   const GeneratorConfig& cfg, std::uint64_t master_seed, Split split, std::size_t per_snr,
                   std::optional<double> normalizer, const std::string& config_json) {
    DatasetWriter writer(path, header);
    const std::size_t total = per_snr * spec.snr_grid.size();
    double sum_sq = 0.0;
    std::vector<DatasetRecord> chunk;
    for (std::size_t first = 0; first < total; first += kGenerateChunk) {
        const std::size_t n = std::min(kGenerateChunk, total - first);
        chunk.assign(n, DatasetRecord{});
        std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
        for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(n); ++k) {
            const std::size_t index = first + static_cast<std::size_t>(k);
            try {
                const double snr = spec.snr_grid[index / per_snr];
                chunk[static_cast<std::size_t>(k)] =
                    generate_record(cfg, snr, record_seed(master_seed, spec, split, index));
            } catch (...) {
#pragma omp critical
                if (!error) error = std::current_exception();
            }
        }
        if (error) std::rethrow_exception(error);
        for (const auto& rec : chunk) {
            for (float v : rec.input) sum_sq += static_cast<double>(v) * static_cast<double>(v);
            writer.append(rec);
        }
    }
    const double rms = std::sqrt(sum_sq / static_cast<double>(total * header.input_len));
    const double norm = normalizer.value_or(rms > 0.0 ? rms : 1.0);
    writer.finish(norm);
    header.record_count = total;
    header.normalizer = norm;
    write_manifest(path, header, split, per_snr, master_seed, config_json);
    return sum_sq;
}

}  // namespace

SplitFiles generate_split(const SplitSpec& spec, const GeneratorConfig& cfg, std::uint64_t master_seed,
                          const std::filesystem::path& out_dir, const Digest& digest,
                          const std::string& config_json) {
    spec.validate();
    cfg.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) fail(ErrorKind::io, "cannot create output directory '" + out_dir.string() + "': " + ec.message());

    DatasetHeader header;
    header.input_len = static_cast<std::uint32_t>(cfg.frame.nn_input_len());
    header.snr_grid = spec.snr_grid;
    header.config_digest = digest;

    SplitFiles files;
    files.train = split_path(out_dir, Split::train);
    files.val = split_path(out_dir, Split::val);
    files.test = split_path(out_dir, Split::test);
    try {
        write_split(files.train, header, spec, cfg, master_seed, Split::train, spec.train_per_snr, std::nullopt,
                    config_json);
        files.normalizer = read_header(files.train).normalizer;
        write_split(files.val, header, spec, cfg, master_seed, Split::val, spec.val_per_snr, files.normalizer,
                    config_json);
        write_split(files.test, header, spec, cfg, master_seed, Split::test, spec.test_per_snr, files.normalizer,
                    config_json);
    } catch (...) {
        for (const auto& p : {files.train, files.val, files.test}) {
            std::filesystem::remove(p, ec);
            auto manifest = p;
            manifest += ".json";
            std::filesystem::remove(manifest, ec);
        }
        throw;
    }
    const std::size_t n_snr = spec.snr_grid.size();
    files.counts = {spec.train_per_snr * n_snr, spec.val_per_snr * n_snr, spec.test_per_snr * n_snr};
    return files;
}

}  // namespace rfimp

#pragma once

// Labeled record generation, the binary dataset format and its readers.
//
// File layout (little-endian):
//   magic "RFIMPR01" | version u32 | input_len u32 | label_len u32 |
//   record_count u64 | snr_count u32 | snr_grid f64[snr_count] |
//   normalizer f64 | config digest [32]
// followed by record_count records of
//   input f32[input_len] | label f32[label_len] | snr_db f64 | seed u64
//
// Inputs are stored unscaled; `normalizer` is the RMS of all training inputs
// and is applied when loading.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfimp/channel.hpp"
#include "rfimp/digest.hpp"
#include "rfimp/impairments.hpp"
#include "rfimp/sigproc.hpp"

namespace rfimp {

struct GeneratorConfig {
    FrameConfig frame;
    ImpairmentRanges ranges;
    ChannelConfig channel;

    void validate() const;
};

struct DatasetRecord {
    std::vector<float> input;
    std::array<float, kNumImpairments> label{};
    double snr_db = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const DatasetRecord&) const = default;
};

inline constexpr int kMaxSyncAttempts = 8;

// Received waveform for one frame: random payload, impairments (sampled from
// cfg.ranges unless `forced`), channel and noise, all derived from `seed`.
// The impairments applied are stored in `*used` when given.
SampleBuffer synthesize_received(const GeneratorConfig& cfg, double snr_db, std::uint64_t seed,
                                 const std::optional<ImpairmentParams>& forced = std::nullopt,
                                 ImpairmentParams* used = nullptr);

// Sub-seeds for payload bits, impairments, channel and noise all derive from
// `seed`; a sync failure retries with a derived seed up to kMaxSyncAttempts
// times. `forced` replaces the sampled impairments.
DatasetRecord generate_record(const GeneratorConfig& cfg, double snr_db, std::uint64_t seed,
                              const std::optional<ImpairmentParams>& forced = std::nullopt);

struct SplitSpec {
    std::size_t train_per_snr = 6000;
    std::size_t val_per_snr = 10000;
    std::size_t test_per_snr = 10000;
    std::vector<double> snr_grid = {0.0, 5.0, 10.0, 15.0, 20.0};

    void validate() const;
    static SplitSpec desk_scale();
};

enum class Split { train, val, test };
const char* to_string(Split s);

inline constexpr char kDatasetMagic[8] = {'R', 'F', 'I', 'M', 'P', 'R', '0', '1'};
inline constexpr std::uint32_t kDatasetVersion = 1;

struct DatasetHeader {
    std::uint32_t version = kDatasetVersion;
    std::uint32_t input_len = 0;
    std::uint32_t label_len = kNumImpairments;
    std::uint64_t record_count = 0;
    std::vector<double> snr_grid;
    double normalizer = 1.0;
    Digest config_digest{};

    std::size_t encoded_size() const;
    std::size_t record_size() const { return 4 * (std::size_t{input_len} + label_len) + 16; }
};

// Streams records to `<path>.partial` and renames on finish(). An unfinished
// writer deletes its partial file.
class DatasetWriter {
public:
    DatasetWriter(std::filesystem::path path, DatasetHeader header);
    ~DatasetWriter();
    DatasetWriter(const DatasetWriter&) = delete;
    DatasetWriter& operator=(const DatasetWriter&) = delete;

    void append(const DatasetRecord& rec);
    void finish(double normalizer);
    std::uint64_t count() const { return header_.record_count; }

private:
    void write_header();

    std::filesystem::path path_;
    std::filesystem::path partial_;
    DatasetHeader header_;
    std::ofstream out_;
    bool finished_ = false;
};

DatasetHeader read_header(const std::filesystem::path& path);

struct RecordRange {
    std::size_t first = 0;
    std::size_t count = std::numeric_limits<std::size_t>::max();  // to the end
};

// Throws bad_magic, version_mismatch, truncated, digest_mismatch (when
// `expected` is given) or out_of_range for a range past record_count.
std::vector<DatasetRecord> read_records(const std::filesystem::path& path, RecordRange range = {},
                                        const std::optional<Digest>& expected = std::nullopt);

// Records held as contiguous, normalized matrices for training.
struct Dataset {
    DatasetHeader header;
    std::size_t input_len = 0;
    std::vector<float> inputs;  // size() x input_len, divided by header.normalizer
    std::vector<float> labels;  // size() x kNumImpairments
    std::vector<double> snr_db;
    std::vector<std::uint64_t> seeds;

    std::size_t size() const { return snr_db.size(); }
    std::span<const float> input(std::size_t i) const {
        return std::span(inputs).subspan(i * input_len, input_len);
    }
    std::span<const float> label(std::size_t i) const {
        return std::span(labels).subspan(i * kNumImpairments, kNumImpairments);
    }
};

Dataset load_dataset(const std::filesystem::path& path,
                     const std::optional<Digest>& expected = std::nullopt);
Dataset to_dataset(const std::vector<DatasetRecord>& records, double normalizer);

// Seed of record `index` within a split; distinct for every (split, index).
std::uint64_t record_seed(std::uint64_t master_seed, const SplitSpec& spec, Split split,
                          std::size_t index);

struct SplitFiles {
    std::filesystem::path train;
    std::filesystem::path val;
    std::filesystem::path test;
    double normalizer = 1.0;
    std::array<std::uint64_t, 3> counts{};
};

std::filesystem::path split_path(const std::filesystem::path& dir, Split s);

// Writes train/val/test files plus JSON manifests into `out_dir`.
// `config_json` is embedded verbatim in each manifest.
SplitFiles generate_split(const SplitSpec& spec, const GeneratorConfig& cfg, std::uint64_t master_seed,
                          const std::filesystem::path& out_dir, const Digest& digest,
                          const std::string& config_json = "{}");

}  // namespace rfimp

#include "rfimp/config.hpp"

#include <set>

#include "json.hpp"
#include "rfimp/binary_io.hpp"
#include "rfimp/error.hpp"

namespace rfimp {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
    fail(ErrorKind::config, field + ": " + why);
}

// Walks one JSON object, rejecting keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) bad(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const ordered_json* get(const std::string& key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void read(const std::string& key, int& out) {
        if (const auto* v = get(key)) {
            if (!v->is_number_integer()) bad(field(key), "expected an integer");
            const auto x = v->get<std::int64_t>();
            if (x < INT32_MIN || x > INT32_MAX) bad(field(key), "out of range");
            out = static_cast<int>(x);
        }
    }
    void read(const std::string& key, std::size_t& out) {
        if (const auto* v = get(key)) {
            if (!v->is_number_unsigned())
                bad(field(key), "expected a non-negative integer");
            out = v->get<std::size_t>();
        }
    }
    void read(const std::string& key, std::uint64_t& out, bool) {
        if (const auto* v = get(key)) {
            if (!v->is_number_unsigned()) bad(field(key), "expected a non-negative integer");
            out = v->get<std::uint64_t>();
        }
    }
    void read(const std::string& key, double& out) {
        if (const auto* v = get(key)) {
            if (!v->is_number()) bad(field(key), "expected a number");
            out = v->get<double>();
        }
    }
    void read(const std::string& key, bool& out) {
        if (const auto* v = get(key)) {
            if (!v->is_boolean()) bad(field(key), "expected true or false");
            out = v->get<bool>();
        }
    }
    void read(const std::string& key, std::vector<int>& out) {
        if (const auto* v = get(key)) {
            if (!v->is_array()) bad(field(key), "expected an array of integers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number_integer()) bad(field(key), "expected an array of integers");
                out.push_back(e.get<int>());
            }
        }
    }
    void read(const std::string& key, std::vector<double>& out) {
        if (const auto* v = get(key)) {
            if (!v->is_array()) bad(field(key), "expected an array of numbers");
            out.clear();
            for (const auto& e : *v) {
                if (!e.is_number()) bad(field(key), "expected an array of numbers");
                out.push_back(e.get<double>());
            }
        }
    }
    std::optional<std::string> read_string(const std::string& key) {
        if (const auto* v = get(key)) {
            if (!v->is_string()) bad(field(key), "expected a string");
            return v->get<std::string>();
        }
        return std::nullopt;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) bad(field(it.key()), "unknown field");
    }

private:
    const ordered_json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

const char* layout_name(PreambleLayout l) { return l == PreambleLayout::bpsk ? "bpsk" : "alternate_iq"; }
const char* model_name(ChannelModel m) { return m == ChannelModel::identity ? "identity" : "rayleigh"; }

void parse_frame(ObjectReader r, FrameConfig& f) {
    r.read("n_blocks", f.n_blocks);
    r.read("block_len", f.block_len);
    r.read("cp_ratio", f.cp_ratio);
    r.read("oversample", f.oversample);
    r.read("mseq_degree", f.mseq_degree);
    r.read("mseq_taps", f.mseq_taps);
    r.read("preamble_reps", f.preamble_reps);
    if (auto s = r.read_string("preamble_layout")) {
        if (*s == "bpsk") f.preamble_layout = PreambleLayout::bpsk;
        else if (*s == "alternate_iq") f.preamble_layout = PreambleLayout::alternate_iq;
        else bad(r.field("preamble_layout"), "expected \"alternate_iq\" or \"bpsk\"");
    }
    r.read("guard_len", f.guard_len);
    r.read("rrc_rolloff", f.rrc_rolloff);
    r.read("rrc_span_symbols", f.rrc_span_symbols);
    r.read("sample_rate_hz", f.sample_rate_hz);
    r.finish();
}

void parse_ranges(ObjectReader r, ImpairmentRanges& ranges) {
    for (std::size_t i = 0; i < kNumImpairments; ++i) {
        const std::string key(kImpairmentNames[i]);
        if (const auto* v = r.get(key)) {
            if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() || !(*v)[1].is_number())
                bad(r.field(key), "expected [low, high]");
            ranges.bounds[i] = {(*v)[0].get<double>(), (*v)[1].get<double>()};
        }
    }
    r.finish();
}

void parse_split(ObjectReader r, SplitSpec& s) {
    r.read("train_per_snr", s.train_per_snr);
    r.read("val_per_snr", s.val_per_snr);
    r.read("test_per_snr", s.test_per_snr);
    r.read("snr_grid", s.snr_grid);
    r.finish();
}

void parse_train(ObjectReader r, TrainConfig& t) {
    r.read("batch_size", t.batch_size);
    r.read("epochs", t.epochs);
    r.read("lr", t.lr);
    r.read("shuffle_seed", t.shuffle_seed, true);
    r.read("convergence_gap", t.convergence_gap);
    r.read("max_retuning_rounds", t.max_retuning_rounds);
    r.read("init_seed", t.init_seed, true);
    r.finish();
}

void parse_channel(ObjectReader r, ChannelConfig& c) {
    if (auto s = r.read_string("model")) {
        if (*s == "rayleigh") c.model = ChannelModel::rayleigh;
        else if (*s == "identity") c.model = ChannelModel::identity;
        else bad(r.field("model"), "expected \"rayleigh\" or \"identity\"");
    }
    r.read("n_taps", c.n_taps);
    r.read("decay_db_per_tap", c.decay_db_per_tap);
    r.read("phase_reference", c.phase_reference);
    r.finish();
}

ordered_json frame_json(const FrameConfig& f) {
    return {{"n_blocks", f.n_blocks},
            {"block_len", f.block_len},
            {"cp_ratio", f.cp_ratio},
            {"oversample", f.oversample},
            {"mseq_degree", f.mseq_degree},
            {"mseq_taps", f.mseq_taps},
            {"preamble_reps", f.preamble_reps},
            {"preamble_layout", layout_name(f.preamble_layout)},
            {"guard_len", f.guard_len},
            {"rrc_rolloff", f.rrc_rolloff},
            {"rrc_span_symbols", f.rrc_span_symbols},
            {"sample_rate_hz", f.sample_rate_hz}};
}

ordered_json ranges_json(const ImpairmentRanges& r) {
    ordered_json j = ordered_json::object();
    for (std::size_t i = 0; i < kNumImpairments; ++i)
        j[std::string(kImpairmentNames[i])] = {r.bounds[i].low, r.bounds[i].high};
    return j;
}

ordered_json split_json(const SplitSpec& s) {
    return {{"train_per_snr", s.train_per_snr},
            {"val_per_snr", s.val_per_snr},
            {"test_per_snr", s.test_per_snr},
            {"snr_grid", s.snr_grid}};
}

ordered_json channel_json(const ChannelConfig& c) {
    return {{"model", model_name(c.model)},
            {"n_taps", c.n_taps},
            {"decay_db_per_tap", c.decay_db_per_tap},
            {"phase_reference", c.phase_reference}};
}

ordered_json train_json(const TrainConfig& t) {
    return {{"batch_size", t.batch_size},
            {"epochs", t.epochs},
            {"lr", t.lr},
            {"shuffle_seed", t.shuffle_seed},
            {"convergence_gap", t.convergence_gap},
            {"max_retuning_rounds", t.max_retuning_rounds},
            {"init_seed", t.init_seed}};
}

}  // namespace

void RunConfig::validate() const {
    frame.validate();
    ranges.validate();
    split.validate();
    train.validate();
    channel.validate(frame.cp_len());
}

RunConfig parse_config(std::string_view json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const ordered_json::parse_error& e) {
        fail(ErrorKind::config, std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig cfg;
    ObjectReader root(j, "");
    if (const auto* v = root.get("frame")) parse_frame(ObjectReader(*v, "frame"), cfg.frame);
    if (const auto* v = root.get("ranges")) parse_ranges(ObjectReader(*v, "ranges"), cfg.ranges);
    if (const auto* v = root.get("split")) parse_split(ObjectReader(*v, "split"), cfg.split);
    if (const auto* v = root.get("train")) parse_train(ObjectReader(*v, "train"), cfg.train);
    if (const auto* v = root.get("channel")) parse_channel(ObjectReader(*v, "channel"), cfg.channel);
    root.read("master_seed", cfg.master_seed, true);
    if (auto s = root.read_string("output_dir")) cfg.output_dir = *s;
    root.finish();
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_config(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::string config_to_json(const RunConfig& cfg) {
    ordered_json j = {{"frame", frame_json(cfg.frame)},   {"ranges", ranges_json(cfg.ranges)},
                      {"split", split_json(cfg.split)},   {"train", train_json(cfg.train)},
                      {"channel", channel_json(cfg.channel)}, {"master_seed", cfg.master_seed},
                      {"output_dir", cfg.output_dir.string()}};
    return j.dump(2) + "\n";
}

std::string generator_json(const RunConfig& cfg) {
    ordered_json j = {{"frame", frame_json(cfg.frame)},
                      {"ranges", ranges_json(cfg.ranges)},
                      {"channel", channel_json(cfg.channel)},
                      {"split", split_json(cfg.split)},
                      {"master_seed", cfg.master_seed}};
    return j.dump();
}

Digest config_digest(const RunConfig& cfg) {
    return sha256(generator_json(cfg));
}

void apply_desk_scale(RunConfig& cfg) {
    const auto desk = SplitSpec::desk_scale();
    cfg.split.train_per_snr = desk.train_per_snr;
    cfg.split.val_per_snr = desk.val_per_snr;
    cfg.split.test_per_snr = desk.test_per_snr;
}

}  // namespace rfimp

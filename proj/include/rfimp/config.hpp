#pragma once

// Run configuration: one JSON file gathering the waveform, impairment,
// channel, split and training settings.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "rfimp/dataset.hpp"
#include "rfimp/digest.hpp"
#include "rfimp/trainlab.hpp"

namespace rfimp {

struct RunConfig {
    FrameConfig frame;
    ImpairmentRanges ranges;
    SplitSpec split;
    TrainConfig train;
    ChannelConfig channel;
    std::uint64_t master_seed = 20240601;
    std::filesystem::path output_dir = "run";

    void validate() const;
    GeneratorConfig generator() const { return {frame, ranges, channel}; }
};

// Missing fields keep their defaults. Unknown fields, wrong types and invalid
// values throw Error(config) whose message starts with the dotted field name.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);

// Full config as pretty-printed JSON; parse_config(config_to_json(c)) == c.
std::string config_to_json(const RunConfig& cfg);

// Compact, key-ordered JSON of everything that determines dataset contents
// (frame, ranges, channel, split, master_seed).
std::string generator_json(const RunConfig& cfg);

// SHA-256 of generator_json; embedded in datasets and checkpoints.
Digest config_digest(const RunConfig& cfg);

// 600 / 200 / 200 records per SNR.
void apply_desk_scale(RunConfig& cfg);

}  // namespace rfimp

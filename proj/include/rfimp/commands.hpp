#pragma once

// Subcommand implementations behind the rfimp executable. Each returns the
// process exit code: 0 success, 2 trained but not converged. Failures throw
// Error and map to exit code 1 in main().

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rfimp/config.hpp"

namespace rfimp {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNotConverged = 2;

struct CommandOptions {
    std::optional<std::filesystem::path> config_path;
    bool desk_scale = false;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::filesystem::path> output_dir;
    std::string kind = "all";  // joint | single:<param> | all
    std::optional<std::filesystem::path> checkpoint;
    std::optional<std::filesystem::path> waveform;
    // synth only
    std::optional<std::vector<double>> params;
    double snr_db = 20.0;
    std::uint64_t synth_seed = 1;
};

// Config file (or defaults) with the command-line overrides applied.
RunConfig resolve_config(const CommandOptions& opts);

// Paths inside an output directory.
struct RunLayout {
    std::filesystem::path root;

    std::filesystem::path data_dir() const { return root / "data"; }
    std::filesystem::path model_dir() const { return root / "models"; }
    std::filesystem::path report_dir() const { return root / "reports"; }
    std::filesystem::path checkpoint(const Architecture& arch) const { return model_dir() / (arch.name() + ".ckpt"); }
    std::filesystem::path loss_table(const Architecture& arch) const {
        return report_dir() / ("loss_" + arch.name() + ".csv");
    }
};

// Parses --kind into the architectures to train.
std::vector<Architecture> parse_kind(const std::string& kind, std::size_t input_len);

// Applies RFIMP_WORKERS (if set) as the OpenMP thread count.
void apply_worker_env();

int cmd_generate(const CommandOptions& opts, std::ostream& out);
int cmd_train(const CommandOptions& opts, std::ostream& out);
int cmd_eval(const CommandOptions& opts, std::ostream& out);
int cmd_infer(const CommandOptions& opts, std::ostream& out);
// Writes one received frame with known impairments to opts.waveform.
int cmd_synth(const CommandOptions& opts, std::ostream& out);

// Waveform files: little-endian interleaved float32 I/Q pairs.
void write_waveform(const std::filesystem::path& path, const SampleBuffer& x);
SampleBuffer read_waveform(const std::filesystem::path& path, double sample_rate_hz);

}  // namespace rfimp

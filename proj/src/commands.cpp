#include "rfimp/commands.hpp"

#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <iomanip>
#include <ostream>

#include "rfimp/binary_io.hpp"
#include "rfimp/error.hpp"
#include "rfimp/receiver.hpp"

namespace rfimp {

namespace {

std::string fmt(double v, int precision = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

void write_resolved_config(const RunConfig& cfg, const RunLayout& layout) {
    std::error_code ec;
    std::filesystem::create_directories(layout.root, ec);
    if (ec) fail(ErrorKind::io, "cannot create output directory '" + layout.root.string() + "': " + ec.message());
    write_text_file(layout.root / "config.json", config_to_json(cfg));
}

}  // namespace

RunConfig resolve_config(const CommandOptions& opts) {
    RunConfig cfg = opts.config_path ? load_config(*opts.config_path) : RunConfig{};
    if (opts.desk_scale) apply_desk_scale(cfg);
    if (opts.seed_override) cfg.master_seed = *opts.seed_override;
    if (opts.output_dir) cfg.output_dir = *opts.output_dir;
    cfg.validate();
    return cfg;
}

std::vector<Architecture> parse_kind(const std::string& kind, std::size_t input_len) {
    std::vector<Architecture> out;
    if (kind == "joint" || kind == "all") out.push_back(joint_architecture(input_len));
    if (kind == "all")
        for (std::size_t t = 0; t < kNumImpairments; ++t) out.push_back(single_architecture(input_len, t));
    if (kind.rfind("single:", 0) == 0) out.push_back(single_architecture(input_len, impairment_index(kind.substr(7))));
    if (out.empty())
        fail(ErrorKind::invalid_argument, "--kind: expected joint, single:<param> or all, got '" + kind + "'");
    return out;
}

void apply_worker_env() {
    const char* env = std::getenv("RFIMP_WORKERS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1 || n > 4096)
        fail(ErrorKind::config, "RFIMP_WORKERS: expected a positive integer, got '" + std::string(env) + "'");
    omp_set_num_threads(static_cast<int>(n));
}

int cmd_generate(const CommandOptions& opts, std::ostream& out) {
    const RunConfig cfg = resolve_config(opts);
    const RunLayout layout{cfg.output_dir};
    write_resolved_config(cfg, layout);
    const Digest digest = config_digest(cfg);
    out << "config digest " << to_hex(digest) << "\n";
    const auto files = generate_split(cfg.split, cfg.generator(), cfg.master_seed, layout.data_dir(), digest,
                                      generator_json(cfg));
    const std::array<std::size_t, 3> per_snr{cfg.split.train_per_snr, cfg.split.val_per_snr, cfg.split.test_per_snr};
    const std::array<Split, 3> splits{Split::train, Split::val, Split::test};
    for (std::size_t i = 0; i < 3; ++i) {
        out << to_string(splits[i]) << ": " << files.counts[i] << " records (" << per_snr[i] << " per SNR at";
        for (double s : cfg.split.snr_grid) out << " " << fmt(s) << "dB";
        out << ") -> " << split_path(layout.data_dir(), splits[i]).string() << "\n";
    }
    out << "input normalizer " << fmt(files.normalizer, 9) << "\n";
    return kExitOk;
}

int cmd_train(const CommandOptions& opts, std::ostream& out) {
    const RunConfig cfg = resolve_config(opts);
    const RunLayout layout{cfg.output_dir};
    const auto archs = parse_kind(opts.kind, cfg.frame.nn_input_len());
    const Digest digest = config_digest(cfg);
    const Dataset train_set = load_dataset(split_path(layout.data_dir(), Split::train), digest);
    const Dataset val_set = load_dataset(split_path(layout.data_dir(), Split::val), digest);
    out << "loaded " << train_set.size() << " train / " << val_set.size() << " val records\n";

    std::error_code ec;
    std::filesystem::create_directories(layout.model_dir(), ec);
    std::filesystem::create_directories(layout.report_dir(), ec);
    if (ec) fail(ErrorKind::io, "cannot create '" + layout.root.string() + "' subdirectories: " + ec.message());

    bool all_converged = true;
    for (const auto& arch : archs) {
        out << "training " << arch.name() << " (" << expected_param_count(arch) << " parameters)\n";
        const auto progress = [&](int epoch, const EpochLoss& e) {
            out << "  " << arch.name() << " epoch " << epoch << "/" << cfg.train.epochs << " train "
                << fmt(e.train_loss) << " val " << fmt(e.val_loss) << "\n"
                << std::flush;
        };
        const TrainOutcome r = retune_loop(arch, train_set, val_set, cfg.train, progress);
        save_checkpoint(layout.checkpoint(arch), r.model, r.optimizer, train_set.header.normalizer, digest);
        write_loss_history(layout.loss_table(arch), r.history);
        out << arch.name() << ": " << (r.converged ? "converged" : "NOT converged") << " after " << r.rounds_used
            << " round(s), lr " << fmt(r.final_lr) << "\n";
        all_converged = all_converged && r.converged;
    }
    return all_converged ? kExitOk : kExitNotConverged;
}

int cmd_eval(const CommandOptions& opts, std::ostream& out) {
    const RunConfig cfg = resolve_config(opts);
    const RunLayout layout{cfg.output_dir};
    const Digest digest = config_digest(cfg);
    const std::size_t input_len = cfg.frame.nn_input_len();

    const auto joint_arch = joint_architecture(input_len);
    const auto load = [&](const Architecture& arch, const std::string& what) {
        const auto path = layout.checkpoint(arch);
        if (!std::filesystem::exists(path))
            fail(ErrorKind::io, "missing " + what + " checkpoint '" + path.string() + "'");
        Checkpoint c = load_checkpoint(path, digest);
        if (!(c.model.architecture() == arch))
            fail(ErrorKind::shape_mismatch, "checkpoint '" + path.string() + "' holds a different architecture");
        return c;
    };
    const Checkpoint joint = load(joint_arch, "joint-model");
    std::vector<Checkpoint> singles;
    for (std::size_t t = 0; t < kNumImpairments; ++t)
        singles.push_back(load(single_architecture(input_len, t),
                               "single-task for parameter '" + std::string(kImpairmentNames[t]) + "'"));

    const Dataset test_set = load_dataset(split_path(layout.data_dir(), Split::test), digest);
    std::vector<const Mlp<float>*> single_ptrs;
    for (const auto& c : singles) single_ptrs.push_back(&c.model);
    const EvalReport report = evaluate(joint.model, single_ptrs, test_set, cfg.ranges);

    LossHistory history;
    if (std::filesystem::exists(layout.loss_table(joint_arch))) history = parse_loss_history(layout.loss_table(joint_arch));
    std::filesystem::create_directories(layout.report_dir());
    const auto files = export_report(report, history, (layout.report_dir() / "").string());

    out << "test records " << test_set.size() << "\n";
    out << std::left << std::setw(12) << "parameter" << std::setw(8) << "snr_db" << std::setw(14) << "joint"
        << std::setw(14) << "single" << "reference\n";
    for (std::size_t t = 0; t < kNumImpairments; ++t) {
        const std::string name(kImpairmentNames[t]);
        for (double snr : report.snr_grid)
            out << std::setw(12) << name << std::setw(8) << fmt(snr) << std::setw(14)
                << fmt(report.mse("joint", name, snr)) << std::setw(14) << fmt(report.mse("single", name, snr))
                << fmt(report.reference_mse[t]) << "\n";
    }
    for (double snr : report.snr_grid)
        out << "average at " << fmt(snr) << " dB: joint " << fmt(report.average_mse("joint", snr)) << " single "
            << fmt(report.average_mse("single", snr)) << "\n";
    out << "wrote " << files.mse_table.string() << " and " << files.loss_table.string() << "\n";
    return kExitOk;
}

void write_waveform(const std::filesystem::path& path, const SampleBuffer& x) {
    ByteWriter w;
    for (const Complex& c : x.samples) {
        w.f32(static_cast<float>(c.real()));
        w.f32(static_cast<float>(c.imag()));
    }
    write_file(path, w.data());
}

SampleBuffer read_waveform(const std::filesystem::path& path, double sample_rate_hz) {
    const auto bytes = read_file(path);
    if (bytes.size() % 8 != 0)
        fail(ErrorKind::truncated, "waveform '" + path.string() + "': " + std::to_string(bytes.size()) +
                                       " bytes is not a whole number of float32 I/Q pairs");
    ByteReader r(bytes, "waveform '" + path.string() + "'");
    SampleBuffer x;
    x.sample_rate_hz = sample_rate_hz;
    x.samples.resize(bytes.size() / 8);
    for (auto& c : x.samples) {
        const float re = r.f32();
        const float im = r.f32();
        c = Complex(re, im);
    }
    return x;
}

int cmd_infer(const CommandOptions& opts, std::ostream& out) {
    require(opts.checkpoint.has_value(), ErrorKind::invalid_argument, "infer: --checkpoint is required");
    require(opts.waveform.has_value(), ErrorKind::invalid_argument, "infer: --waveform is required");
    const RunConfig cfg = resolve_config(opts);
    const FrameConfig& fc = cfg.frame;
    const Checkpoint ckpt = load_checkpoint(*opts.checkpoint);
    const auto& arch = ckpt.model.architecture();
    if (arch.input_len != fc.nn_input_len())
        fail(ErrorKind::shape_mismatch, "checkpoint expects " + std::to_string(arch.input_len) +
                                            " inputs but the frame config gives " + std::to_string(fc.nn_input_len()));

    const SampleBuffer x = read_waveform(*opts.waveform, fc.sample_rate_hz);
    const std::size_t needed = static_cast<std::size_t>(fc.preamble_len() * fc.oversample);
    if (x.size() < needed)
        fail(ErrorKind::out_of_range, "waveform '" + opts.waveform->string() + "' holds " + std::to_string(x.size()) +
                                          " samples; at least " + std::to_string(needed) + " are needed");
    const SampleBuffer mf = matched_filter(x, fc);
    const SyncResult sync = coarse_sync(mf, fc);
    const auto features = extract_nn_input(mf, sync, fc);
    std::vector<float> input(features.size());
    for (std::size_t i = 0; i < features.size(); ++i) input[i] = static_cast<float>(features[i] / ckpt.normalizer);
    const auto y = ckpt.model.forward(input, 1);

    out << "sync start " << sync.start_index << " metric " << fmt(sync.peak_metric) << "\n";
    for (std::size_t k = 0; k < y.size(); ++k)
        out << kImpairmentNames[arch.label_column(k)] << " " << fmt(y[k], 9) << "\n";
    return kExitOk;
}

int cmd_synth(const CommandOptions& opts, std::ostream& out) {
    require(opts.waveform.has_value(), ErrorKind::invalid_argument, "synth: --waveform is required");
    const RunConfig cfg = resolve_config(opts);
    std::optional<ImpairmentParams> forced;
    if (opts.params) {
        if (opts.params->size() != kNumImpairments)
            fail(ErrorKind::invalid_argument, "--params: expected 6 comma-separated values");
        std::array<double, kNumImpairments> v{};
        std::copy(opts.params->begin(), opts.params->end(), v.begin());
        forced = ImpairmentParams::from_array(v);
    }
    ImpairmentParams used;
    const SampleBuffer rx = synthesize_received(cfg.generator(), opts.snr_db, opts.synth_seed, forced, &used);
    write_waveform(*opts.waveform, rx);
    const auto v = used.to_array();
    out << "wrote " << rx.size() << " samples to " << opts.waveform->string() << "\n";
    for (std::size_t k = 0; k < kNumImpairments; ++k) out << kImpairmentNames[k] << " " << fmt(v[k], 9) << "\n";
    return kExitOk;
}

}  // namespace rfimp

// rfimp: generate datasets, train the estimators, evaluate them and run
// inference on recorded waveforms.

#include <iostream>

#include "CLI11.hpp"
#include "rfimp/commands.hpp"
#include "rfimp/error.hpp"

namespace {

void add_common(CLI::App* sub, rfimp::CommandOptions& o) {
    sub->add_option("--config", o.config_path, "JSON run configuration (defaults when omitted)")
        ->check(CLI::ExistingFile);
    sub->add_flag("--desk-scale", o.desk_scale, "Use 600/200/200 records per SNR instead of the configured split");
    sub->add_option("--seed-override", o.seed_override, "Replace the configured master seed");
    sub->add_option("--output-dir", o.output_dir, "Replace the configured output directory");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"RF impairment estimation: dataset generation, training and evaluation"};
    app.require_subcommand(1);
    rfimp::CommandOptions opts;

    auto* gen = app.add_subcommand("generate", "Write train/val/test datasets and their manifests");
    add_common(gen, opts);

    auto* train = app.add_subcommand("train", "Train models on a generated dataset");
    add_common(train, opts);
    train->add_option("--kind", opts.kind, "joint, single:<param> or all")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "Evaluate all trained models on the test split");
    add_common(eval, opts);

    auto* infer = app.add_subcommand("infer", "Estimate impairments from a waveform file");
    add_common(infer, opts);
    infer->add_option("--checkpoint", opts.checkpoint, "Model checkpoint")->required()->check(CLI::ExistingFile);
    infer->add_option("--waveform", opts.waveform, "Little-endian interleaved float32 I/Q samples")
        ->required()
        ->check(CLI::ExistingFile);

    auto* synth = app.add_subcommand("synth", "Write one received frame with known impairments");
    add_common(synth, opts);
    synth->add_option("--waveform", opts.waveform, "Output file")->required();
    synth->add_option("--params", opts.params, "i_gain,q_gain,quad_offset,phase,i_offset,q_offset")
        ->delimiter(',')
        ->expected(6);
    synth->add_option("--snr", opts.snr_db, "SNR in dB")->capture_default_str();
    synth->add_option("--seed", opts.synth_seed, "Frame seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        rfimp::apply_worker_env();
        if (gen->parsed()) return rfimp::cmd_generate(opts, std::cout);
        if (train->parsed()) return rfimp::cmd_train(opts, std::cout);
        if (eval->parsed()) return rfimp::cmd_eval(opts, std::cout);
        if (infer->parsed()) return rfimp::cmd_infer(opts, std::cout);
        if (synth->parsed()) return rfimp::cmd_synth(opts, std::cout);
    } catch (const rfimp::Error& e) {
        std::cerr << "error (" << rfimp::to_string(e.kind()) << "): " << e.what() << "\n";
        return rfimp::kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return rfimp::kExitError;
    }
    return rfimp::kExitError;
}

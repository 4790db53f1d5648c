#pragma once

// Training loop with convergence check and learning-rate retuning, and the
// MSE-vs-SNR evaluation suite with its CSV export.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rfimp/dataset.hpp"
#include "rfimp/impairments.hpp"
#include "rfimp/neuralnet.hpp"

namespace rfimp {

struct TrainConfig {
    std::size_t batch_size = 16;
    int epochs = 40;
    double lr = 1e-5;
    std::uint64_t shuffle_seed = 1;
    double convergence_gap = 0.10;
    int max_retuning_rounds = 3;
    std::uint64_t init_seed = 2;

    void validate() const;
};

struct EpochLoss {
    double train_loss = 0.0;
    double val_loss = 0.0;
    bool operator==(const EpochLoss&) const = default;
};

struct LossHistory {
    std::vector<EpochLoss> epochs;

    std::size_t size() const { return epochs.size(); }
    bool empty() const { return epochs.empty(); }
    bool operator==(const LossHistory&) const = default;
};

// Called after every epoch with the 1-based epoch number.
using EpochCallback = std::function<void(int, const EpochLoss&)>;

// Mean squared error of `model` over `ds`, forward only.
double dataset_loss(const Mlp<float>& model, const Dataset& ds);

// Runs cfg.epochs epochs of shuffled mini-batch Adam updates. The last batch
// of an epoch may be short. `optimizer` must match the model size.
LossHistory train(Mlp<float>& model, AdamState<float>& optimizer, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// Final val loss within (1 + gap) of final train loss, and val loss at the end
// not above its value one quartile of the epochs earlier.
bool converged(const LossHistory& history, const TrainConfig& cfg);

struct TrainOutcome {
    Mlp<float> model;
    AdamState<float> optimizer;
    LossHistory history;
    int rounds_used = 0;
    bool converged = false;
    double final_lr = 0.0;
};

// Trains from a fresh init; when not converged, halves the learning rate and
// starts over, at most cfg.max_retuning_rounds more times.
TrainOutcome retune_loop(const Architecture& arch, const Dataset& train_set, const Dataset& val_set,
                         const TrainConfig& cfg, const EpochCallback& on_epoch = {});

// predictions: ds.size() x model.n_outputs().
std::vector<float> predict(const Mlp<float>& model, const Dataset& ds);

struct MseRow {
    std::string model;      // "joint", "single" or "mean_predictor"
    std::string parameter;  // one of kImpairmentNames
    double snr_db = 0.0;
    double mse = 0.0;
    bool operator==(const MseRow&) const = default;
};

struct EvalReport {
    std::vector<double> snr_grid;
    std::vector<MseRow> rows;
    std::array<double, kNumImpairments> reference_mse{};

    // Throws Error(out_of_range) when no such row exists.
    double mse(std::string_view model, std::string_view parameter, double snr_db) const;
    // Mean over the six parameters.
    double average_mse(std::string_view model, double snr_db) const;
};

std::array<double, kNumImpairments> reference_mse(const ImpairmentRanges& ranges);

// Groups squared errors of `predictions` (n x columns.size(), output k
// regressing label column columns[k]) by SNR and appends one row per
// (column, SNR) under `model_name`. Throws if an SNR of the grid has no records.
void add_rows(EvalReport& report, const std::string& model_name, std::span<const std::size_t> columns,
              std::span<const float> predictions, const Dataset& ds);

// Joint model plus single-task models (any order, at most one per parameter).
EvalReport evaluate(const Mlp<float>& joint, const std::vector<const Mlp<float>*>& singles,
                    const Dataset& test_set, const ImpairmentRanges& ranges);

struct ReportFiles {
    std::filesystem::path mse_table;
    std::filesystem::path loss_table;
};

// Writes `<prefix>mse_vs_snr.csv` and `<prefix>loss_history.csv`.
ReportFiles export_report(const EvalReport& report, const LossHistory& history, const std::string& prefix);
void write_loss_history(const std::filesystem::path& path, const LossHistory& history);

std::vector<MseRow> parse_mse_table(const std::filesystem::path& path);
LossHistory parse_loss_history(const std::filesystem::path& path);

}  // namespace rfimp

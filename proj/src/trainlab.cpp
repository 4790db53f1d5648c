#include "rfimp/trainlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rfimp/binary_io.hpp"
#include "rfimp/error.hpp"
#include "rfimp/rng.hpp"

namespace rfimp {

namespace {

constexpr std::size_t kEvalChunk = 256;

void check_shapes(const Mlp<float>& model, const Dataset& ds, const char* what) {
    if (ds.input_len != model.architecture().input_len)
        fail(ErrorKind::shape_mismatch, std::string(what) + ": dataset input length " + std::to_string(ds.input_len) +
                                            " != model input length " +
                                            std::to_string(model.architecture().input_len));
}

// Copies rows `idx` of ds into batch-major input and label buffers.
void gather(const Dataset& ds, const Architecture& arch, std::span<const std::size_t> idx, std::vector<float>& x,
            std::vector<float>& y) {
    const std::size_t n_out = arch.n_outputs();
    x.resize(idx.size() * ds.input_len);
    y.resize(idx.size() * n_out);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const auto in = ds.input(idx[r]);
        std::copy(in.begin(), in.end(), x.begin() + static_cast<std::ptrdiff_t>(r * ds.input_len));
        const auto lab = ds.label(idx[r]);
        for (std::size_t k = 0; k < n_out; ++k) y[r * n_out + k] = lab[arch.label_column(k)];
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::string& header) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::io, "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != header)
        fail(ErrorKind::bad_magic, "'" + path.string() + "': expected header '" + header + "'");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || s.empty()) fail(ErrorKind::invalid_argument, "'" + path.string() + "': bad number '" + s + "'");
    return v;
}

}  // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) fail(ErrorKind::config, "train.batch_size: must be >= 1");
    if (epochs < 0) fail(ErrorKind::config, "train.epochs: must be >= 0");
    if (!(lr > 0.0) || !std::isfinite(lr)) fail(ErrorKind::config, "train.lr: must be positive and finite");
    if (!(convergence_gap >= 0.0)) fail(ErrorKind::config, "train.convergence_gap: must be >= 0");
    if (max_retuning_rounds < 0) fail(ErrorKind::config, "train.max_retuning_rounds: must be >= 0");
}

double dataset_loss(const Mlp<float>& model, const Dataset& ds) {
    check_shapes(model, ds, "dataset_loss");
    require(ds.size() > 0, ErrorKind::invalid_argument, "dataset_loss: empty dataset");
    const auto& arch = model.architecture();
    const std::size_t n_out = arch.n_outputs();
    Workspace<float> ws;
    std::vector<std::size_t> idx;
    std::vector<float> x, y;
    double sum = 0.0;
    for (std::size_t first = 0; first < ds.size(); first += kEvalChunk) {
        const std::size_t n = std::min(kEvalChunk, ds.size() - first);
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), first);
        gather(ds, arch, idx, x, y);
        model.forward(x, n, ws);
        for (std::size_t i = 0; i < n * n_out; ++i) {
            const double e = static_cast<double>(ws.outputs[i]) - static_cast<double>(y[i]);
            sum += e * e;
        }
    }
    return sum / static_cast<double>(ds.size() * n_out);
}

LossHistory train(Mlp<float>& model, AdamState<float>& optimizer, const Dataset& train_set,
                  const Dataset& val_set, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    check_shapes(model, train_set, "train");
    check_shapes(model, val_set, "train (validation set)");
    require(train_set.size() > 0, ErrorKind::invalid_argument, "train: empty training set");
    require(optimizer.m.size() == model.param_count() && optimizer.v.size() == model.param_count(),
            ErrorKind::shape_mismatch, "train: optimizer state does not match the model");

    const auto& arch = model.architecture();
    std::vector<std::size_t> order(train_set.size());
    std::vector<float> grads(model.param_count());
    std::vector<float> x, y;
    Workspace<float> ws;
    LossHistory history;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(derive_seed(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

        double weighted = 0.0;
        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const std::size_t n = std::min(cfg.batch_size, order.size() - first);
            gather(train_set, arch, std::span(order).subspan(first, n), x, y);
            const double loss = model.loss_and_grads(x, y, n, grads, ws);
            adam_step(model, std::span<const float>(grads), optimizer);
            weighted += loss * static_cast<double>(n);
        }
        EpochLoss e;
        e.train_loss = weighted / static_cast<double>(order.size());
        e.val_loss = val_set.size() > 0 ? dataset_loss(model, val_set) : std::nan("");
        history.epochs.push_back(e);
        if (on_epoch) on_epoch(epoch + 1, e);
    }
    return history;
}

bool converged(const LossHistory& history, const TrainConfig& cfg) {
    if (history.empty()) return false;
    const auto& last = history.epochs.back();
    if (!std::isfinite(last.train_loss) || !std::isfinite(last.val_loss)) return false;
    if (last.val_loss > (1.0 + cfg.convergence_gap) * last.train_loss) return false;
    const std::size_t n = history.size();
    if (n < 2) return true;
    const std::size_t quartile = std::max<std::size_t>(1, n / 4);
    return last.val_loss <= history.epochs[n - 1 - quartile].val_loss;
}

TrainOutcome retune_loop(const Architecture& arch, const Dataset& train_set, const Dataset& val_set,
                         const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    TrainConfig round_cfg = cfg;
    TrainOutcome out{Mlp<float>(arch), {}, {}, 0, false, cfg.lr};
    for (int round = 0; round <= cfg.max_retuning_rounds; ++round) {
        Mlp<float> model = init_model<float>(arch, cfg.init_seed);
        AdamHyper hyper;
        hyper.lr = round_cfg.lr;
        AdamState<float> opt(model.param_count(), hyper);
        LossHistory hist = train(model, opt, train_set, val_set, round_cfg, on_epoch);
        out.model = std::move(model);
        out.optimizer = std::move(opt);
        out.history = std::move(hist);
        out.rounds_used = round + 1;
        out.final_lr = round_cfg.lr;
        out.converged = converged(out.history, round_cfg);
        if (out.converged) break;
        round_cfg.lr *= 0.5;
    }
    return out;
}

std::vector<float> predict(const Mlp<float>& model, const Dataset& ds) {
    check_shapes(model, ds, "predict");
    const std::size_t n_out = model.n_outputs();
    std::vector<float> out(ds.size() * n_out);
    Workspace<float> ws;
    std::vector<std::size_t> idx;
    std::vector<float> x, y;
    for (std::size_t first = 0; first < ds.size(); first += kEvalChunk) {
        const std::size_t n = std::min(kEvalChunk, ds.size() - first);
        idx.resize(n);
        std::iota(idx.begin(), idx.end(), first);
        gather(ds, model.architecture(), idx, x, y);
        model.forward(x, n, ws);
        std::copy_n(ws.outputs.begin(), n * n_out, out.begin() + static_cast<std::ptrdiff_t>(first * n_out));
    }
    return out;
}

double EvalReport::mse(std::string_view model, std::string_view parameter, double snr_db) const {
    for (const auto& r : rows)
        if (r.model == model && r.parameter == parameter && r.snr_db == snr_db) return r.mse;
    fail(ErrorKind::out_of_range, "no MSE row for model '" + std::string(model) + "', parameter '" +
                                      std::string(parameter) + "', SNR " + format_double(snr_db));
}

double EvalReport::average_mse(std::string_view model, double snr_db) const {
    double sum = 0.0;
    for (auto name : kImpairmentNames) sum += mse(model, name, snr_db);
    return sum / static_cast<double>(kNumImpairments);
}

std::array<double, kNumImpairments> reference_mse(const ImpairmentRanges& ranges) {
    std::array<double, kNumImpairments> out{};
    for (std::size_t k = 0; k < kNumImpairments; ++k) out[k] = ranges.bounds[k].variance();
    return out;
}

void add_rows(EvalReport& report, const std::string& model_name, std::span<const std::size_t> columns,
              std::span<const float> predictions, const Dataset& ds) {
    const std::size_t n_out = columns.size();
    require(predictions.size() == ds.size() * n_out, ErrorKind::shape_mismatch,
            "add_rows: predictions do not match the dataset size");
    if (report.snr_grid.empty()) report.snr_grid = ds.header.snr_grid;
    const std::size_t n_snr = report.snr_grid.size();
    std::vector<double> sum(n_snr * n_out, 0.0);
    std::vector<std::size_t> count(n_snr, 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto it = std::find(report.snr_grid.begin(), report.snr_grid.end(), ds.snr_db[i]);
        if (it == report.snr_grid.end())
            fail(ErrorKind::out_of_range, "record " + std::to_string(i) + " has SNR " + format_double(ds.snr_db[i]) +
                                              " outside the report grid");
        const auto s = static_cast<std::size_t>(it - report.snr_grid.begin());
        ++count[s];
        const auto lab = ds.label(i);
        for (std::size_t k = 0; k < n_out; ++k) {
            const double e = static_cast<double>(predictions[i * n_out + k]) - static_cast<double>(lab[columns[k]]);
            sum[s * n_out + k] += e * e;
        }
    }
    for (std::size_t k = 0; k < n_out; ++k) {
        for (std::size_t s = 0; s < n_snr; ++s) {
            if (count[s] == 0)
                fail(ErrorKind::invalid_argument, "no test records at SNR " + format_double(report.snr_grid[s]) + " dB");
            report.rows.push_back({model_name, std::string(kImpairmentNames[columns[k]]), report.snr_grid[s],
                                   sum[s * n_out + k] / static_cast<double>(count[s])});
        }
    }
}

EvalReport evaluate(const Mlp<float>& joint, const std::vector<const Mlp<float>*>& singles, const Dataset& test_set,
                    const ImpairmentRanges& ranges) {
    require(joint.architecture().kind == ModelKind::joint, ErrorKind::invalid_argument,
            "evaluate: first model must be the joint model");
    EvalReport report;
    report.snr_grid = test_set.header.snr_grid;
    report.reference_mse = reference_mse(ranges);

    std::array<std::size_t, kNumImpairments> all{};
    std::iota(all.begin(), all.end(), std::size_t{0});
    add_rows(report, "joint", all, predict(joint, test_set), test_set);

    std::vector<const Mlp<float>*> by_task(kNumImpairments, nullptr);
    for (const auto* m : singles) {
        require(m != nullptr && m->architecture().kind == ModelKind::single, ErrorKind::invalid_argument,
                "evaluate: expected single-task models");
        const auto t = static_cast<std::size_t>(m->architecture().task_index);
        require(by_task[t] == nullptr, ErrorKind::invalid_argument,
                "evaluate: duplicate single-task model for " + std::string(kImpairmentNames[t]));
        by_task[t] = m;
    }
    for (std::size_t t = 0; t < kNumImpairments; ++t) {
        if (!by_task[t]) continue;
        const std::array<std::size_t, 1> col{t};
        add_rows(report, "single", col, predict(*by_task[t], test_set), test_set);
    }
    for (std::size_t t = 0; t < kNumImpairments; ++t)
        for (double snr : report.snr_grid)
            report.rows.push_back({"mean_predictor", std::string(kImpairmentNames[t]), snr, report.reference_mse[t]});
    return report;
}

void write_loss_history(const std::filesystem::path& path, const LossHistory& history) {
    std::string text = "epoch,train_loss,val_loss\n";
    for (std::size_t e = 0; e < history.size(); ++e)
        text += std::to_string(e + 1) + "," + format_double(history.epochs[e].train_loss) + "," +
                format_double(history.epochs[e].val_loss) + "\n";
    write_text_file(path, text);
}

ReportFiles export_report(const EvalReport& report, const LossHistory& history, const std::string& prefix) {
    ReportFiles files{prefix + "mse_vs_snr.csv", prefix + "loss_history.csv"};
    std::string text = "model,parameter,snr_db,mse\n";
    for (const auto& r : report.rows)
        text += r.model + "," + r.parameter + "," + format_double(r.snr_db) + "," + format_double(r.mse) + "\n";
    write_text_file(files.mse_table, text);
    write_loss_history(files.loss_table, history);
    return files;
}

std::vector<MseRow> parse_mse_table(const std::filesystem::path& path) {
    std::vector<MseRow> out;
    for (const auto& cells : read_csv(path, "model,parameter,snr_db,mse")) {
        if (cells.size() != 4) fail(ErrorKind::invalid_argument, "'" + path.string() + "': expected 4 columns");
        out.push_back({cells[0], cells[1], parse_double(cells[2], path), parse_double(cells[3], path)});
    }
    return out;
}

LossHistory parse_loss_history(const std::filesystem::path& path) {
    LossHistory h;
    for (const auto& cells : read_csv(path, "epoch,train_loss,val_loss")) {
        if (cells.size() != 3) fail(ErrorKind::invalid_argument, "'" + path.string() + "': expected 3 columns");
        h.epochs.push_back({parse_double(cells[1], path), parse_double(cells[2], path)});
    }
    return h;
}

}  // namespace rfimp

#pragma once

// Dense multi-task regressor: one shared ReLU trunk layer feeding one
// independent ReLU chain per estimated parameter, each ending in a linear
// scalar head. The single-task baseline is the same topology with one branch.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfimp/digest.hpp"
#include "rfimp/impairments.hpp"
#include "rfimp/kernels.hpp"

namespace rfimp {

enum class ModelKind { joint, single };

struct Architecture {
    ModelKind kind = ModelKind::joint;
    std::size_t input_len = 8176;
    std::size_t trunk_width = 128;
    std::vector<std::size_t> branch_widths = {64, 32, 16};
    int task_index = -1;  // label column regressed by a single-task model

    std::size_t n_outputs() const { return kind == ModelKind::joint ? kNumImpairments : 1; }
    // Label column feeding output `k`.
    std::size_t label_column(std::size_t k) const {
        return kind == ModelKind::joint ? k : static_cast<std::size_t>(task_index);
    }
    std::string name() const;
    void validate() const;
    bool operator==(const Architecture&) const = default;
};

Architecture joint_architecture(std::size_t input_len);
Architecture single_architecture(std::size_t input_len, std::size_t task_index);

struct LayerShape {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    bool relu = true;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    std::size_t param_count() const { return fan_in * fan_out + fan_out; }
};

// Scratch buffers for forward/backward; one per concurrent caller.
template <typename T>
struct Workspace {
    std::vector<T> trunk_out;
    std::vector<std::vector<std::vector<T>>> branch_acts;  // [branch][layer]
    std::vector<T> outputs;
    std::vector<T> d_trunk;
    std::vector<T> d_a;
    std::vector<T> d_b;
};

template <typename T>
class Mlp {
public:
    // All parameters zero.
    explicit Mlp(Architecture arch);

    const Architecture& architecture() const { return arch_; }
    std::size_t param_count() const { return params_.size(); }
    std::size_t n_outputs() const { return arch_.n_outputs(); }
    std::span<T> params() { return params_; }
    std::span<const T> params() const { return params_; }
    const LayerShape& trunk() const { return trunk_; }
    const std::vector<LayerShape>& branch(std::size_t k) const { return branches_[k]; }
    std::size_t n_branches() const { return branches_.size(); }

    std::span<T> weights(const LayerShape& l) { return std::span(params_).subspan(l.weight_offset, l.fan_in * l.fan_out); }
    std::span<T> biases(const LayerShape& l) { return std::span(params_).subspan(l.bias_offset, l.fan_out); }
    std::span<const T> weights(const LayerShape& l) const { return std::span(params_).subspan(l.weight_offset, l.fan_in * l.fan_out); }
    std::span<const T> biases(const LayerShape& l) const { return std::span(params_).subspan(l.bias_offset, l.fan_out); }

    // inputs: batch x input_len. Returns batch x n_outputs.
    std::vector<T> forward(std::span<const T> inputs, std::size_t batch) const;
    void forward(std::span<const T> inputs, std::size_t batch, Workspace<T>& ws) const;

    // Mean over batch and outputs of the squared error; `grads` (param_count
    // entries) is overwritten with d loss / d params. labels: batch x n_outputs.
    double loss_and_grads(std::span<const T> inputs, std::span<const T> labels, std::size_t batch,
                          std::span<T> grads, Workspace<T>& ws) const;
    double loss_and_grads(std::span<const T> inputs, std::span<const T> labels, std::size_t batch,
                          std::span<T> grads) const;

    template <typename U>
    Mlp<U> cast() const {
        Mlp<U> out(arch_);
        for (std::size_t i = 0; i < params_.size(); ++i) out.params()[i] = static_cast<U>(params_[i]);
        return out;
    }

private:
    void check_inputs(std::span<const T> inputs, std::size_t batch) const;

    Architecture arch_;
    LayerShape trunk_;
    std::vector<std::vector<LayerShape>> branches_;
    std::vector<T> params_;
};

// He-normal weights (variance 2 / fan_in) for ReLU layers, variance 1 / fan_in
// for the linear heads, zero biases.
template <typename T>
Mlp<T> init_model(const Architecture& arch, std::uint64_t seed);

template <typename T>
std::size_t count_params(const Mlp<T>& model) {
    return model.param_count();
}

// Closed form for the default topology.
std::size_t expected_param_count(const Architecture& arch);

struct AdamHyper {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    AdamHyper hyper;
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t step = 0;

    AdamState() = default;
    AdamState(std::size_t n, AdamHyper h) : hyper(h), m(n, T(0)), v(n, T(0)) {}
};

template <typename T>
void adam_step(Mlp<T>& model, std::span<const T> grads, AdamState<T>& state);

struct Checkpoint {
    Mlp<float> model;
    AdamState<float> optimizer;
    double normalizer = 1.0;
    Digest config_digest{};
};

inline constexpr char kCheckpointMagic[8] = {'R', 'F', 'M', 'L', 'P', '0', '0', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Mlp<float>& model,
                     const AdamState<float>& optimizer, double normalizer, const Digest& digest);

// Throws Error(io) if unreadable, bad_magic / version_mismatch / truncated for
// malformed files and digest_mismatch when `expected` is given and differs.
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           const std::optional<Digest>& expected = std::nullopt);

}  // namespace rfimp

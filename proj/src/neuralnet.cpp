#include "rfimp/neuralnet.hpp"

#include <cmath>
#include <cstring>

#include "rfimp/binary_io.hpp"
#include "rfimp/error.hpp"
#include "rfimp/rng.hpp"

namespace rfimp {

std::string Architecture::name() const {
    if (kind == ModelKind::joint) return "joint";
    return "single_" + std::string(kImpairmentNames.at(static_cast<std::size_t>(task_index)));
}

void Architecture::validate() const {
    require(input_len >= 1, ErrorKind::invalid_argument, "architecture: input_len must be >= 1");
    require(trunk_width >= 1, ErrorKind::invalid_argument, "architecture: trunk_width must be >= 1");
    for (std::size_t w : branch_widths)
        require(w >= 1, ErrorKind::invalid_argument, "architecture: branch widths must be >= 1");
    if (kind == ModelKind::single)
        require(task_index >= 0 && task_index < static_cast<int>(kNumImpairments),
                ErrorKind::invalid_argument, "architecture: single-task model needs task_index in [0, 6)");
}

Architecture joint_architecture(std::size_t input_len) {
    Architecture a;
    a.kind = ModelKind::joint;
    a.input_len = input_len;
    return a;
}

Architecture single_architecture(std::size_t input_len, std::size_t task_index) {
    Architecture a;
    a.kind = ModelKind::single;
    a.input_len = input_len;
    a.task_index = static_cast<int>(task_index);
    return a;
}

std::size_t expected_param_count(const Architecture& arch) {
    std::size_t branch = 0;
    std::size_t prev = arch.trunk_width;
    for (std::size_t w : arch.branch_widths) {
        branch += (prev + 1) * w;
        prev = w;
    }
    branch += prev + 1;
    return (arch.input_len + 1) * arch.trunk_width + arch.n_outputs() * branch;
}

template <typename T>
Mlp<T>::Mlp(Architecture arch) : arch_(std::move(arch)) {
    arch_.validate();
    std::size_t offset = 0;
    auto make = [&offset](std::size_t in, std::size_t out, bool relu) {
        LayerShape l{in, out, relu, offset, offset + in * out};
        offset += l.param_count();
        return l;
    };
    trunk_ = make(arch_.input_len, arch_.trunk_width, true);
    branches_.resize(arch_.n_outputs());
    for (auto& chain : branches_) {
        std::size_t prev = arch_.trunk_width;
        for (std::size_t w : arch_.branch_widths) {
            chain.push_back(make(prev, w, true));
            prev = w;
        }
        chain.push_back(make(prev, 1, false));
    }
    params_.assign(offset, T(0));
}

template <typename T>
void Mlp<T>::check_inputs(std::span<const T> inputs, std::size_t batch) const {
    if (inputs.size() != batch * arch_.input_len)
        fail(ErrorKind::shape_mismatch, "forward: expected " + std::to_string(batch) + " x " +
                                            std::to_string(arch_.input_len) + " inputs, got " +
                                            std::to_string(inputs.size()) + " values");
}

template <typename T>
void Mlp<T>::forward(std::span<const T> inputs, std::size_t batch, Workspace<T>& ws) const {
    check_inputs(inputs, batch);
    const std::size_t k_out = n_outputs();
    ws.trunk_out.resize(batch * trunk_.fan_out);
    kernels::parallel::dense_forward<T>(inputs, batch, trunk_.fan_in, weights(trunk_), biases(trunk_),
                                        trunk_.fan_out, ws.trunk_out, trunk_.relu);
    ws.branch_acts.resize(branches_.size());
    ws.outputs.resize(batch * k_out);
    for (std::size_t k = 0; k < branches_.size(); ++k) {
        const auto& chain = branches_[k];
        auto& acts = ws.branch_acts[k];
        acts.resize(chain.size());
        std::span<const T> prev = ws.trunk_out;
        for (std::size_t j = 0; j < chain.size(); ++j) {
            const LayerShape& l = chain[j];
            acts[j].resize(batch * l.fan_out);
            kernels::parallel::dense_forward<T>(prev, batch, l.fan_in, weights(l), biases(l), l.fan_out,
                                                acts[j], l.relu);
            prev = acts[j];
        }
        for (std::size_t r = 0; r < batch; ++r) ws.outputs[r * k_out + k] = acts.back()[r];
    }
}

template <typename T>
std::vector<T> Mlp<T>::forward(std::span<const T> inputs, std::size_t batch) const {
    Workspace<T> ws;
    forward(inputs, batch, ws);
    return std::move(ws.outputs);
}

template <typename T>
double Mlp<T>::loss_and_grads(std::span<const T> inputs, std::span<const T> labels, std::size_t batch,
                              std::span<T> grads, Workspace<T>& ws) const {
    const std::size_t k_out = n_outputs();
    if (labels.size() != batch * k_out)
        fail(ErrorKind::shape_mismatch, "loss_and_grads: expected " + std::to_string(batch * k_out) +
                                            " labels, got " + std::to_string(labels.size()));
    if (grads.size() != params_.size())
        fail(ErrorKind::shape_mismatch, "loss_and_grads: gradient buffer has wrong size");
    forward(inputs, batch, ws);

    const double scale = 1.0 / static_cast<double>(batch * k_out);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch * k_out; ++i) {
        const double e = static_cast<double>(ws.outputs[i]) - static_cast<double>(labels[i]);
        loss += e * e;
    }
    loss *= scale;

    auto grad_w = [&](const LayerShape& l) { return grads.subspan(l.weight_offset, l.fan_in * l.fan_out); };
    auto grad_b = [&](const LayerShape& l) { return grads.subspan(l.bias_offset, l.fan_out); };

    ws.d_trunk.assign(batch * trunk_.fan_out, T(0));
    for (std::size_t k = 0; k < branches_.size(); ++k) {
        const auto& chain = branches_[k];
        const auto& acts = ws.branch_acts[k];
        // d loss / d head pre-activation (linear head)
        ws.d_a.resize(batch);
        for (std::size_t r = 0; r < batch; ++r) {
            const double e = static_cast<double>(ws.outputs[r * k_out + k]) -
                             static_cast<double>(labels[r * k_out + k]);
            ws.d_a[r] = static_cast<T>(2.0 * e * scale);
        }
        for (std::size_t jj = chain.size(); jj-- > 0;) {
            const LayerShape& l = chain[jj];
            std::span<const T> input = jj == 0 ? std::span<const T>(ws.trunk_out) : std::span<const T>(acts[jj - 1]);
            kernels::parallel::dense_backward_params<T>(input, batch, l.fan_in, ws.d_a, l.fan_out,
                                                        grad_w(l), grad_b(l));
            ws.d_b.resize(batch * l.fan_in);
            kernels::parallel::dense_backward_input<T>(ws.d_a, batch, l.fan_out, weights(l), l.fan_in, ws.d_b);
            // ReLU derivative of the layer below, read from its activations.
            for (std::size_t i = 0; i < ws.d_b.size(); ++i)
                if (!(input[i] > T(0))) ws.d_b[i] = T(0);
            if (jj == 0) {
                for (std::size_t i = 0; i < ws.d_b.size(); ++i) ws.d_trunk[i] += ws.d_b[i];
            } else {
                std::swap(ws.d_a, ws.d_b);
            }
        }
    }
    kernels::parallel::dense_backward_params<T>(inputs, batch, trunk_.fan_in, ws.d_trunk, trunk_.fan_out,
                                                grad_w(trunk_), grad_b(trunk_));
    return loss;
}

template <typename T>
double Mlp<T>::loss_and_grads(std::span<const T> inputs, std::span<const T> labels, std::size_t batch,
                              std::span<T> grads) const {
    Workspace<T> ws;
    return loss_and_grads(inputs, labels, batch, grads, ws);
}

template <typename T>
Mlp<T> init_model(const Architecture& arch, std::uint64_t seed) {
    Mlp<T> model(arch);
    Rng rng(seed);
    auto fill = [&](const LayerShape& l) {
        const double sd = std::sqrt((l.relu ? 2.0 : 1.0) / static_cast<double>(l.fan_in));
        for (T& w : model.weights(l)) w = static_cast<T>(sd * rng.normal());
    };
    fill(model.trunk());
    for (std::size_t k = 0; k < model.n_branches(); ++k)
        for (const auto& l : model.branch(k)) fill(l);
    return model;
}

template <typename T>
void adam_step(Mlp<T>& model, std::span<const T> grads, AdamState<T>& state) {
    if (grads.size() != model.param_count() || state.m.size() != model.param_count() ||
        state.v.size() != model.param_count())
        fail(ErrorKind::shape_mismatch, "adam_step: parameter, gradient and moment sizes differ");
    ++state.step;
    const kernels::AdamCoefficients c{state.hyper.lr, state.hyper.beta1, state.hyper.beta2,
                                      state.hyper.epsilon, state.step};
    kernels::parallel::adam_update<T>(model.params(), grads, state.m, state.v, c);
}

template class Mlp<float>;
template class Mlp<double>;
template Mlp<float> init_model<float>(const Architecture&, std::uint64_t);
template Mlp<double> init_model<double>(const Architecture&, std::uint64_t);
template void adam_step<float>(Mlp<float>&, std::span<const float>, AdamState<float>&);
template void adam_step<double>(Mlp<double>&, std::span<const double>, AdamState<double>&);

void save_checkpoint(const std::filesystem::path& path, const Mlp<float>& model,
                     const AdamState<float>& optimizer, double normalizer, const Digest& digest) {
    const Architecture& a = model.architecture();
    require(optimizer.m.size() == model.param_count() && optimizer.v.size() == model.param_count(),
            ErrorKind::shape_mismatch, "save_checkpoint: optimizer state does not match model");
    ByteWriter w;
    w.bytes(std::string_view(kCheckpointMagic, sizeof kCheckpointMagic));
    w.u32(kCheckpointVersion);
    w.u32(a.kind == ModelKind::joint ? 0u : 1u);
    w.u32(static_cast<std::uint32_t>(a.input_len));
    w.u32(static_cast<std::uint32_t>(a.trunk_width));
    w.u32(static_cast<std::uint32_t>(a.branch_widths.size()));
    for (std::size_t bw : a.branch_widths) w.u32(static_cast<std::uint32_t>(bw));
    w.i32(a.task_index);
    w.f64(normalizer);
    w.bytes(digest);
    w.f64(optimizer.hyper.lr);
    w.f64(optimizer.hyper.beta1);
    w.f64(optimizer.hyper.beta2);
    w.f64(optimizer.hyper.epsilon);
    w.u64(optimizer.step);
    w.u64(model.param_count());
    w.f32_array(model.params());
    w.f32_array(optimizer.m);
    w.f32_array(optimizer.v);
    write_file(path, w.data());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<Digest>& expected) {
    const auto bytes = read_file(path);
    ByteReader r(bytes, "checkpoint '" + path.string() + "'");
    const auto magic = r.bytes(sizeof kCheckpointMagic);
    if (std::memcmp(magic.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        fail(ErrorKind::bad_magic, "checkpoint '" + path.string() + "': bad magic");
    const auto version = r.u32();
    if (version != kCheckpointVersion)
        fail(ErrorKind::version_mismatch, "checkpoint '" + path.string() + "': version " +
                                              std::to_string(version) + ", expected " +
                                              std::to_string(kCheckpointVersion));
    Architecture a;
    const auto kind = r.u32();
    require(kind <= 1, ErrorKind::bad_magic, "checkpoint: unknown model kind");
    a.kind = kind == 0 ? ModelKind::joint : ModelKind::single;
    a.input_len = r.u32();
    a.trunk_width = r.u32();
    const auto n_widths = r.u32();
    require(n_widths <= 64, ErrorKind::bad_magic, "checkpoint: implausible branch depth");
    a.branch_widths.resize(n_widths);
    for (auto& bw : a.branch_widths) bw = r.u32();
    a.task_index = r.i32();
    const double normalizer = r.f64();
    Digest digest{};
    const auto d = r.bytes(digest.size());
    std::copy(d.begin(), d.end(), digest.begin());
    if (expected && *expected != digest)
        fail(ErrorKind::digest_mismatch, "checkpoint '" + path.string() + "' was trained under config " +
                                             to_hex(digest) + ", expected " + to_hex(*expected));
    AdamHyper hyper;
    hyper.lr = r.f64();
    hyper.beta1 = r.f64();
    hyper.beta2 = r.f64();
    hyper.epsilon = r.f64();
    const auto step = r.u64();
    const auto count = r.u64();
    try {
        a.validate();
    } catch (const Error& e) {
        fail(ErrorKind::bad_magic, "checkpoint '" + path.string() + "': " + e.what());
    }
    require(count == expected_param_count(a), ErrorKind::shape_mismatch,
            "checkpoint: parameter count does not match architecture");
    // Size check before allocating anything from header fields.
    if (r.remaining() / 12 < count)
        fail(ErrorKind::truncated, "checkpoint '" + path.string() + "': tensors truncated");

    Checkpoint ck{Mlp<float>(a), AdamState<float>(), normalizer, digest};
    ck.optimizer = AdamState<float>(count, hyper);
    ck.optimizer.step = step;
    r.f32_array(ck.model.params());
    r.f32_array(ck.optimizer.m);
    r.f32_array(ck.optimizer.v);
    return ck;
}

}  // namespace rfimp

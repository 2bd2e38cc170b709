#pragma once

// Minimal dense-network numerics: affine layers, activations, softmax
// cross-entropy, hand-written backward passes and Adam. Everything is float64
// and single-threaded so results are bitwise reproducible for a fixed seed.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stepgan/matrix.hpp"
#include "stepgan/rng.hpp"

namespace stepgan {

enum class Activation { Identity, PReLU, LeakyReLU, Tanh, Softmax };

inline constexpr double kLeakyReluSlope = 0.01;
inline constexpr double kPreluInitialSlope = 0.25;

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

// Elementwise activation (row-wise for Softmax). `slopes` must be non-empty
// exactly when kind == PReLU, one slope per column.
Matrix2 activation_eval(Activation kind, const Matrix2& pre, std::span<const double> slopes = {});

struct ActivationGrad {
    Matrix2 pre_grad;
    std::vector<double> slope_grad;  // PReLU only
};

// Chain rule through the activation: given dL/d(out), returns dL/d(pre) and,
// for PReLU, dL/d(slope). The ReLU family uses the positive branch at 0.
ActivationGrad activation_grad(Activation kind, const Matrix2& pre, const Matrix2& out,
                               const Matrix2& upstream, std::span<const double> slopes = {});

Matrix2 softmax_rows(const Matrix2& logits);

struct LossGrad {
    double loss = 0.0;
    Matrix2 logit_grads;
};

// Mean over rows of -log softmax(logits)[row, target[row]], with gradient
// softmax - onehot (divided by the row count). Targets are 0-based.
LossGrad softmax_cross_entropy(const Matrix2& logits, std::span<const std::size_t> targets);

struct AdamState {
    std::uint64_t step_count = 0;
    std::vector<double> first_moment;
    std::vector<double> second_moment;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n = 0) : first_moment(n, 0.0), second_moment(n, 0.0) {}

    // One bias-corrected Adam update of `param` with `grad`.
    void apply(std::span<double> param, std::span<const double> grad, double learning_rate);
};

// Non-owning view over one parameter tensor of a layer.
struct ParamView {
    std::string name;
    std::span<double> value;
    std::span<double> grad;
    AdamState* adam;
};

class DenseLayer {
public:
    DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation activation, RandomStream& init);

    std::size_t in_dim() const noexcept { return weights_.rows(); }
    std::size_t out_dim() const noexcept { return weights_.cols(); }
    Activation activation() const noexcept { return activation_; }

    Matrix2& weights() noexcept { return weights_; }
    const Matrix2& weights() const noexcept { return weights_; }
    std::vector<double>& bias() noexcept { return bias_; }
    const std::vector<double>& bias() const noexcept { return bias_; }
    std::vector<double>& prelu_slopes() noexcept { return slopes_; }
    const std::vector<double>& prelu_slopes() const noexcept { return slopes_; }

    const Matrix2& grad_weights() const noexcept { return grad_weights_; }
    const std::vector<double>& grad_bias() const noexcept { return grad_bias_; }
    const std::vector<double>& grad_slopes() const noexcept { return grad_slopes_; }

    const Matrix2& forward(const Matrix2& input);
    // Forward without touching the backward cache.
    Matrix2 infer(const Matrix2& input) const;
    Matrix2 infer_pre(const Matrix2& input) const;
    // Pre-activation from the most recent forward.
    const Matrix2& pre_activation() const noexcept { return pre_; }
    const Matrix2& output() const noexcept { return out_; }
    bool has_cache() const noexcept { return has_cache_; }

    // dL/d(out) -> dL/d(input); accumulates parameter grads when asked.
    Matrix2 backward(const Matrix2& upstream, bool param_grads);
    // Same, starting from dL/d(pre-activation), skipping the activation.
    Matrix2 backward_pre(const Matrix2& pre_grad, bool param_grads);

    std::vector<ParamView> parameters();
    void zero_grad();

private:
    Activation activation_;
    Matrix2 weights_;
    std::vector<double> bias_;
    std::vector<double> slopes_;

    Matrix2 grad_weights_;
    std::vector<double> grad_bias_;
    std::vector<double> grad_slopes_;

    AdamState adam_weights_;
    AdamState adam_bias_;
    AdamState adam_slopes_;

    Matrix2 input_;
    Matrix2 pre_;
    Matrix2 out_;
    bool has_cache_ = false;
};

struct LayerSpec {
    std::size_t out_dim;
    Activation activation;
};

enum class GradMode {
    Accumulate,  // fill parameter grad buffers
    InputOnly,   // propagate to the input only, leave grad buffers untouched
};

class DenseNet {
public:
    DenseNet() = default;
    DenseNet(std::size_t input_dim, std::span<const LayerSpec> layers, RandomStream& init);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept {
        return layers_.empty() ? input_dim_ : layers_.back().out_dim();
    }
    std::vector<DenseLayer>& layers() noexcept { return layers_; }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    // (in_dim, out_dim) per layer, in order.
    std::vector<std::pair<std::size_t, std::size_t>> layer_shapes() const;

    const Matrix2& forward(const Matrix2& batch);
    // Read-only forward: same arithmetic as forward(), no cached state, safe
    // for concurrent readers.
    Matrix2 infer(const Matrix2& batch) const;
    // Read-only forward that stops at the final layer's pre-activation.
    Matrix2 infer_logits(const Matrix2& batch) const;
    // Final layer pre-activation from the most recent forward.
    const Matrix2& logits() const;

    Matrix2 backward(const Matrix2& upstream, GradMode mode = GradMode::Accumulate);
    // Backward from dL/d(final pre-activation); used with softmax folded into the loss.
    Matrix2 backward_from_logits(const Matrix2& logit_grads, GradMode mode = GradMode::Accumulate);

    bool grads_populated() const noexcept { return grads_populated_; }
    // Applies Adam to every parameter, then zeroes the grad buffers.
    // Throws StateError when no backward populated the grads since the last step.
    void adam_step(double learning_rate);
    void zero_grad();

    std::vector<ParamView> parameters();

private:
    Matrix2 backward_impl(Matrix2 grad, bool from_logits, GradMode mode);

    std::size_t input_dim_ = 0;
    std::vector<DenseLayer> layers_;
    bool has_forward_ = false;
    bool grads_populated_ = false;
};

}  // namespace stepgan

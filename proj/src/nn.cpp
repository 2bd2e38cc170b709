#include "stepgan/nn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stepgan/error.hpp"

namespace stepgan {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::Identity: return "identity";
        case Activation::PReLU: return "prelu";
        case Activation::LeakyReLU: return "leaky_relu";
        case Activation::Tanh: return "tanh";
        case Activation::Softmax: return "softmax";
    }
    return "unknown";
}

Activation activation_from_string(std::string_view name) {
    for (auto a : {Activation::Identity, Activation::PReLU, Activation::LeakyReLU, Activation::Tanh,
                   Activation::Softmax}) {
        if (to_string(a) == name) return a;
    }
    throw DataError("unknown activation '" + std::string(name) + "'");
}

namespace {

const double kTanhBound = std::nextafter(1.0, 0.0);

void check_slopes(Activation kind, const Matrix2& pre, std::span<const double> slopes) {
    if (kind == Activation::PReLU) {
        if (slopes.size() != pre.cols()) throw ShapeError("PReLU: one slope per column required");
    } else if (!slopes.empty()) {
        throw ShapeError("slopes supplied for a non-PReLU activation");
    }
}

}  // namespace

Matrix2 softmax_rows(const Matrix2& logits) {
    Matrix2 out(logits.rows(), logits.cols());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        auto in = logits.row(r);
        auto o = out.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            o[c] = std::exp(in[c] - mx);
            sum += o[c];
        }
        for (double& v : o) v /= sum;
    }
    return out;
}

Matrix2 activation_eval(Activation kind, const Matrix2& pre, std::span<const double> slopes) {
    check_slopes(kind, pre, slopes);
    if (kind == Activation::Softmax) return softmax_rows(pre);
    Matrix2 out(pre.rows(), pre.cols());
    const std::size_t cols = pre.cols();
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        auto x = pre.row(r);
        auto y = out.row(r);
        switch (kind) {
            case Activation::Identity:
                std::copy(x.begin(), x.end(), y.begin());
                break;
            case Activation::PReLU:
                for (std::size_t c = 0; c < cols; ++c) y[c] = x[c] >= 0.0 ? x[c] : slopes[c] * x[c];
                break;
            case Activation::LeakyReLU:
                for (std::size_t c = 0; c < cols; ++c) y[c] = x[c] >= 0.0 ? x[c] : kLeakyReluSlope * x[c];
                break;
            case Activation::Tanh:
                // Saturated tanh rounds to +-1 in double; keep the open interval.
                for (std::size_t c = 0; c < cols; ++c) y[c] = std::clamp(std::tanh(x[c]), -kTanhBound, kTanhBound);
                break;
            case Activation::Softmax:
                break;
        }
    }
    return out;
}

ActivationGrad activation_grad(Activation kind, const Matrix2& pre, const Matrix2& out,
                               const Matrix2& upstream, std::span<const double> slopes) {
    check_slopes(kind, pre, slopes);
    require_same_shape(pre, upstream, "activation_grad");
    require_same_shape(pre, out, "activation_grad");
    ActivationGrad g{Matrix2(pre.rows(), pre.cols()), {}};
    const std::size_t cols = pre.cols();
    if (kind == Activation::PReLU) g.slope_grad.assign(cols, 0.0);
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        auto x = pre.row(r);
        auto y = out.row(r);
        auto u = upstream.row(r);
        auto d = g.pre_grad.row(r);
        switch (kind) {
            case Activation::Identity:
                std::copy(u.begin(), u.end(), d.begin());
                break;
            case Activation::PReLU:
                for (std::size_t c = 0; c < cols; ++c) {
                    if (x[c] >= 0.0) {
                        d[c] = u[c];
                    } else {
                        d[c] = slopes[c] * u[c];
                        g.slope_grad[c] += x[c] * u[c];
                    }
                }
                break;
            case Activation::LeakyReLU:
                for (std::size_t c = 0; c < cols; ++c) d[c] = x[c] >= 0.0 ? u[c] : kLeakyReluSlope * u[c];
                break;
            case Activation::Tanh:
                for (std::size_t c = 0; c < cols; ++c) d[c] = u[c] * (1.0 - y[c] * y[c]);
                break;
            case Activation::Softmax: {
                double dot = 0.0;
                for (std::size_t c = 0; c < cols; ++c) dot += u[c] * y[c];
                for (std::size_t c = 0; c < cols; ++c) d[c] = y[c] * (u[c] - dot);
                break;
            }
        }
    }
    return g;
}

LossGrad softmax_cross_entropy(const Matrix2& logits, std::span<const std::size_t> targets) {
    if (targets.size() != logits.rows()) throw ShapeError("softmax_cross_entropy: target count mismatch");
    if (logits.rows() == 0) throw ShapeError("softmax_cross_entropy: empty batch");
    logits.require_finite("softmax_cross_entropy logits");
    LossGrad lg{0.0, Matrix2(logits.rows(), logits.cols())};
    const double inv_rows = 1.0 / static_cast<double>(logits.rows());
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const std::size_t t = targets[r];
        if (t >= logits.cols()) throw ShapeError("softmax_cross_entropy: class index out of range");
        auto in = logits.row(r);
        auto g = lg.logit_grads.row(r);
        const double mx = *std::max_element(in.begin(), in.end());
        double sum = 0.0;
        for (std::size_t c = 0; c < in.size(); ++c) {
            g[c] = std::exp(in[c] - mx);
            sum += g[c];
        }
        // -log p_t = log(sum) - (z_t - max)
        lg.loss += std::log(sum) - (in[t] - mx);
        for (std::size_t c = 0; c < in.size(); ++c) g[c] = g[c] / sum * inv_rows;
        g[t] -= inv_rows;
    }
    lg.loss *= inv_rows;
    return lg;
}

void AdamState::apply(std::span<double> param, std::span<const double> grad, double learning_rate) {
    if (param.size() != grad.size() || param.size() != first_moment.size()) {
        throw ShapeError("adam: parameter/grad/state size mismatch");
    }
    ++step_count;
    const double t = static_cast<double>(step_count);
    const double c1 = 1.0 - std::pow(beta1, t);
    const double c2 = 1.0 - std::pow(beta2, t);
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double g = grad[i];
        first_moment[i] = beta1 * first_moment[i] + (1.0 - beta1) * g;
        second_moment[i] = beta2 * second_moment[i] + (1.0 - beta2) * g * g;
        const double m_hat = first_moment[i] / c1;
        const double v_hat = second_moment[i] / c2;
        param[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

DenseLayer::DenseLayer(std::size_t in_dim, std::size_t out_dim, Activation activation,
                       RandomStream& init)
    : activation_(activation),
      weights_(in_dim, out_dim),
      bias_(out_dim, 0.0),
      grad_weights_(in_dim, out_dim),
      grad_bias_(out_dim, 0.0),
      adam_weights_(in_dim * out_dim),
      adam_bias_(out_dim) {
    if (in_dim == 0 || out_dim == 0) throw ShapeError("DenseLayer: zero dimension");
    const double limit = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
    for (double& w : weights_.values()) w = init.uniform(-limit, limit);
    if (activation == Activation::PReLU) {
        slopes_.assign(out_dim, kPreluInitialSlope);
        grad_slopes_.assign(out_dim, 0.0);
        adam_slopes_ = AdamState(out_dim);
    }
}

namespace {

void affine(const Matrix2& input, const Matrix2& weights, const std::vector<double>& bias,
            Matrix2& pre) {
    if (input.cols() != weights.rows()) {
        throw ShapeError("DenseLayer: expected " + std::to_string(weights.rows()) +
                         " input columns, got " + std::to_string(input.cols()));
    }
    matmul(input, weights, pre);
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        auto p = pre.row(r);
        for (std::size_t c = 0; c < p.size(); ++c) p[c] += bias[c];
    }
}

}  // namespace

const Matrix2& DenseLayer::forward(const Matrix2& input) {
    affine(input, weights_, bias_, pre_);
    input_ = input;
    out_ = activation_eval(activation_, pre_, slopes_);
    has_cache_ = true;
    return out_;
}

Matrix2 DenseLayer::infer(const Matrix2& input) const {
    return activation_eval(activation_, infer_pre(input), slopes_);
}

Matrix2 DenseLayer::infer_pre(const Matrix2& input) const {
    Matrix2 pre;
    affine(input, weights_, bias_, pre);
    return pre;
}

Matrix2 DenseLayer::backward(const Matrix2& upstream, bool param_grads) {
    if (!has_cache_) throw StateError("DenseLayer::backward called before forward");
    require_same_shape(upstream, out_, "DenseLayer::backward");
    ActivationGrad ag = activation_grad(activation_, pre_, out_, upstream, slopes_);
    if (param_grads && activation_ == Activation::PReLU) {
        for (std::size_t c = 0; c < grad_slopes_.size(); ++c) grad_slopes_[c] += ag.slope_grad[c];
    }
    return backward_pre(ag.pre_grad, param_grads);
}

Matrix2 DenseLayer::backward_pre(const Matrix2& pre_grad, bool param_grads) {
    if (!has_cache_) throw StateError("DenseLayer::backward called before forward");
    require_same_shape(pre_grad, pre_, "DenseLayer::backward_pre");
    if (param_grads) {
        matmul_at_b(input_, pre_grad, grad_weights_, /*accumulate=*/true);
        for (std::size_t r = 0; r < pre_grad.rows(); ++r) {
            auto g = pre_grad.row(r);
            for (std::size_t c = 0; c < g.size(); ++c) grad_bias_[c] += g[c];
        }
    }
    Matrix2 input_grad;
    matmul_a_bt(pre_grad, weights_, input_grad);
    return input_grad;
}

std::vector<ParamView> DenseLayer::parameters() {
    std::vector<ParamView> p;
    p.push_back({"weights", weights_.values(), grad_weights_.values(), &adam_weights_});
    p.push_back({"bias", bias_, grad_bias_, &adam_bias_});
    if (activation_ == Activation::PReLU) {
        p.push_back({"prelu_slopes", slopes_, grad_slopes_, &adam_slopes_});
    }
    return p;
}

void DenseLayer::zero_grad() {
    grad_weights_.fill(0.0);
    std::fill(grad_bias_.begin(), grad_bias_.end(), 0.0);
    std::fill(grad_slopes_.begin(), grad_slopes_.end(), 0.0);
}

DenseNet::DenseNet(std::size_t input_dim, std::span<const LayerSpec> layers, RandomStream& init)
    : input_dim_(input_dim) {
    std::size_t in = input_dim;
    layers_.reserve(layers.size());
    for (const auto& spec : layers) {
        layers_.emplace_back(in, spec.out_dim, spec.activation, init);
        in = spec.out_dim;
    }
}

std::vector<std::pair<std::size_t, std::size_t>> DenseNet::layer_shapes() const {
    std::vector<std::pair<std::size_t, std::size_t>> shapes;
    for (const auto& l : layers_) shapes.emplace_back(l.in_dim(), l.out_dim());
    return shapes;
}

const Matrix2& DenseNet::forward(const Matrix2& batch) {
    if (layers_.empty()) throw StateError("DenseNet::forward on an empty network");
    if (batch.cols() != input_dim_) {
        throw ShapeError("DenseNet::forward: expected " + std::to_string(input_dim_) +
                         " columns, got " + std::to_string(batch.cols()));
    }
    batch.require_finite("DenseNet::forward input");
    const Matrix2* x = &batch;
    for (auto& layer : layers_) x = &layer.forward(*x);
    x->require_finite("DenseNet::forward output");
    has_forward_ = true;
    return *x;
}

Matrix2 DenseNet::infer(const Matrix2& batch) const {
    Matrix2 pre = infer_logits(batch);
    Matrix2 out = activation_eval(layers_.back().activation(), pre, layers_.back().prelu_slopes());
    out.require_finite("DenseNet::infer output");
    return out;
}

Matrix2 DenseNet::infer_logits(const Matrix2& batch) const {
    if (layers_.empty()) throw StateError("DenseNet::infer on an empty network");
    if (batch.cols() != input_dim_) {
        throw ShapeError("DenseNet::infer: expected " + std::to_string(input_dim_) +
                         " columns, got " + std::to_string(batch.cols()));
    }
    batch.require_finite("DenseNet::infer input");
    if (layers_.size() == 1) return layers_.front().infer_pre(batch);
    Matrix2 x = layers_.front().infer(batch);
    for (std::size_t k = 1; k + 1 < layers_.size(); ++k) x = layers_[k].infer(x);
    return layers_.back().infer_pre(x);
}

const Matrix2& DenseNet::logits() const {
    if (!has_forward_) throw StateError("DenseNet::logits before forward");
    return layers_.back().pre_activation();
}

Matrix2 DenseNet::backward(const Matrix2& upstream, GradMode mode) {
    return backward_impl(upstream, false, mode);
}

Matrix2 DenseNet::backward_from_logits(const Matrix2& logit_grads, GradMode mode) {
    return backward_impl(logit_grads, true, mode);
}

Matrix2 DenseNet::backward_impl(Matrix2 grad, bool from_logits, GradMode mode) {
    if (!has_forward_) throw StateError("DenseNet::backward called before forward");
    grad.require_finite("DenseNet::backward upstream");
    const bool param_grads = mode == GradMode::Accumulate;
    for (std::size_t k = layers_.size(); k-- > 0;) {
        auto& layer = layers_[k];
        if (from_logits && k + 1 == layers_.size()) grad = layer.backward_pre(grad, param_grads);
        else grad = layer.backward(grad, param_grads);
    }
    if (param_grads) grads_populated_ = true;
    return grad;
}

void DenseNet::adam_step(double learning_rate) {
    if (!(learning_rate > 0.0)) throw StateError("adam_step: learning rate must be positive");
    if (!grads_populated_) throw StateError("adam_step: gradients were never populated by backward");
    for (auto& layer : layers_) {
        for (auto& p : layer.parameters()) p.adam->apply(p.value, p.grad, learning_rate);
        for (auto& p : layer.parameters()) {
            for (double v : p.value) {
                if (!std::isfinite(v)) throw NumericError("adam_step produced a non-finite " + p.name);
            }
        }
    }
    zero_grad();
}

void DenseNet::zero_grad() {
    for (auto& layer : layers_) layer.zero_grad();
    grads_populated_ = false;
}

std::vector<ParamView> DenseNet::parameters() {
    std::vector<ParamView> all;
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        for (auto& p : layers_[k].parameters()) {
            p.name = "layer" + std::to_string(k) + "." + p.name;
            all.push_back(std::move(p));
        }
    }
    return all;
}

}  // namespace stepgan

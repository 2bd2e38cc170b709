#pragma once

// Central finite-difference check of DenseNet gradients.
//
// The probe loss is L = sum(out * R) for a fixed random R, so backward(R)
// yields dL/d(parameters) and dL/d(input). Coordinates whose +-h evaluations
// put some ReLU-family pre-activation on opposite sides of zero straddle a
// kink; those are skipped and counted.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "stepgan/matrix.hpp"
#include "stepgan/nn.hpp"
#include "stepgan/rng.hpp"

namespace stepgan::testing {

struct GradCheckResult {
    std::size_t checked = 0;
    std::size_t skipped_kinks = 0;
    double worst_relative_error = 0.0;
    std::string worst_name;
};

inline double probe_loss(const DenseNet& net, const Matrix2& x, const Matrix2& r) {
    const Matrix2 out = net.infer(x);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out.values()[i] * r.values()[i];
    return s;
}

// Sign pattern of every ReLU-family pre-activation.
inline std::vector<bool> kink_signature(const DenseNet& net, const Matrix2& x) {
    std::vector<bool> sig;
    Matrix2 h = x;
    for (const auto& layer : net.layers()) {
        const Matrix2 pre = layer.infer_pre(h);
        if (layer.activation() == Activation::PReLU || layer.activation() == Activation::LeakyReLU) {
            for (double v : pre.values()) sig.push_back(v >= 0.0);
        }
        h = layer.infer(h);
    }
    return sig;
}

inline double relative_error(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-7});
    return std::abs(a - b) / scale;
}

inline GradCheckResult check_gradients(DenseNet& net, const Matrix2& x, const Matrix2& r, double h = 1e-5) {
    GradCheckResult res;
    auto note = [&](double analytic, double numeric, const std::string& name) {
        const double e = relative_error(analytic, numeric);
        ++res.checked;
        if (e > res.worst_relative_error) {
            res.worst_relative_error = e;
            res.worst_name = name;
        }
    };

    net.zero_grad();
    net.forward(x);
    const Matrix2 input_grad = net.backward(r);

    for (auto& p : net.parameters()) {
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + h;
            const auto sig_plus = kink_signature(net, x);
            const double lp = probe_loss(net, x, r);
            p.value[i] = saved - h;
            const auto sig_minus = kink_signature(net, x);
            const double lm = probe_loss(net, x, r);
            p.value[i] = saved;
            if (sig_plus != sig_minus) {
                ++res.skipped_kinks;
                continue;
            }
            note(p.grad[i], (lp - lm) / (2.0 * h), p.name + "[" + std::to_string(i) + "]");
        }
    }

    Matrix2 xp = x;
    for (std::size_t i = 0; i < xp.size(); ++i) {
        const double saved = xp.values()[i];
        xp.values()[i] = saved + h;
        const auto sig_plus = kink_signature(net, xp);
        const double lp = probe_loss(net, xp, r);
        xp.values()[i] = saved - h;
        const auto sig_minus = kink_signature(net, xp);
        const double lm = probe_loss(net, xp, r);
        xp.values()[i] = saved;
        if (sig_plus != sig_minus) {
            ++res.skipped_kinks;
            continue;
        }
        note(input_grad.values()[i], (lp - lm) / (2.0 * h), "input[" + std::to_string(i) + "]");
    }
    return res;
}

struct RandomNetCase {
    DenseNet net;
    Matrix2 x;
    Matrix2 r;
};

// Random net with 1..max_depth layers of width 1..max_dim and random
// activations (Softmax only last), plus a random batch and probe weights.
// PReLU slopes are randomized so the negative branch is exercised.
inline RandomNetCase random_net_case(RandomStream& rng, std::size_t max_dim = 16, std::size_t max_depth = 4) {
    const Activation hidden[] = {Activation::PReLU, Activation::LeakyReLU, Activation::Tanh, Activation::Identity};
    const Activation last[] = {Activation::PReLU, Activation::LeakyReLU, Activation::Tanh, Activation::Identity,
                               Activation::Softmax};
    const std::size_t depth = 1 + rng.index(max_depth);
    const std::size_t in_dim = 1 + rng.index(max_dim);
    std::vector<LayerSpec> specs;
    for (std::size_t k = 0; k < depth; ++k) {
        const bool final_layer = k + 1 == depth;
        const std::size_t out = 1 + rng.index(max_dim);
        const Activation a = final_layer ? last[rng.index(5)] : hidden[rng.index(4)];
        specs.push_back({a == Activation::Softmax ? std::max<std::size_t>(out, 2) : out, a});
    }
    RandomStream init(rng.engine()(), "gradcheck.init");
    RandomNetCase c{DenseNet(in_dim, specs, init), Matrix2(), Matrix2()};
    for (auto& layer : c.net.layers()) {
        for (double& b : layer.bias()) b = rng.uniform(-0.5, 0.5);
        for (double& a : layer.prelu_slopes()) a = rng.uniform(0.05, 0.5);
    }
    const std::size_t batch = 1 + rng.index(4);
    c.x = Matrix2(batch, in_dim);
    for (double& v : c.x.values()) v = rng.uniform(-1.5, 1.5);
    c.r = Matrix2(batch, c.net.output_dim());
    for (double& v : c.r.values()) v = rng.uniform(-1.0, 1.0);
    return c;
}

}  // namespace stepgan::testing

#include <doctest.h>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "stepgan/error.hpp"
#include "stepgan/nn.hpp"

using namespace stepgan;

namespace {

DenseNet single_layer(std::size_t in, std::size_t out, Activation a) {
    RandomStream init(1, "test.init");
    const LayerSpec spec{out, a};
    return DenseNet(in, std::span<const LayerSpec>(&spec, 1), init);
}

}  // namespace

TEST_CASE("identity layer with identity weights passes the batch through") {
    DenseNet net = single_layer(3, 3, Activation::Identity);
    net.layers()[0].weights() = Matrix2::identity(3);
    const Matrix2 x = Matrix2::from_rows({{1.0, -2.0, 3.5}, {0.0, 0.25, -7.0}});
    CHECK(net.forward(x) == x);
}

TEST_CASE("tanh layer with zero weights outputs zeros") {
    DenseNet net = single_layer(4, 2, Activation::Tanh);
    net.layers()[0].weights().fill(0.0);
    const Matrix2 x = Matrix2::from_rows({{1.0, 2.0, 3.0, 4.0}, {-9.0, 0.5, 0.0, 1e3}});
    for (double v : net.forward(x).values()) CHECK(v == 0.0);
}

TEST_CASE("softmax of (0, ln 3) is (1/4, 3/4)") {
    const Matrix2 p = softmax_rows(Matrix2::from_rows({{0.0, std::log(3.0)}}));
    // Independent evaluation in extended precision.
    const long double e0 = 1.0L, e1 = std::exp(std::log(3.0L));
    CHECK(p(0, 0) == doctest::Approx(static_cast<double>(e0 / (e0 + e1))).epsilon(1e-15));
    CHECK(p(0, 1) == doctest::Approx(static_cast<double>(e1 / (e0 + e1))).epsilon(1e-15));
    CHECK(std::abs(p(0, 0) - 0.25) < 1e-15);
    CHECK(std::abs(p(0, 1) - 0.75) < 1e-15);
}

TEST_CASE("softmax rows sum to one with entries strictly inside (0, 1)") {
    RandomStream rng(3, "test.softmax");
    Matrix2 logits(50, 7);
    for (double& v : logits.values()) v = rng.uniform(-20.0, 20.0);
    const Matrix2 p = softmax_rows(logits);
    for (std::size_t r = 0; r < p.rows(); ++r) {
        double s = 0.0;
        for (double v : p.row(r)) {
            CHECK(v > 0.0);
            CHECK(v < 1.0);
            s += v;
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("forward is pure and checks its input") {
    RandomStream rng(5, "test.pure");
    auto c = testing::random_net_case(rng);
    const Matrix2 a = c.net.forward(c.x);
    const Matrix2 b = c.net.forward(c.x);
    CHECK(a == b);
    CHECK(c.net.infer(c.x) == a);

    CHECK_THROWS_AS(c.net.forward(Matrix2(2, c.net.input_dim() + 1)), ShapeError);
    Matrix2 bad = c.x;
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(c.net.forward(bad), NumericError);
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(c.net.forward(bad), NumericError);
}

TEST_CASE("forward then backward leaves parameter values unchanged") {
    RandomStream rng(6, "test.values");
    auto c = testing::random_net_case(rng);
    std::vector<double> before;
    for (auto& p : c.net.parameters()) before.insert(before.end(), p.value.begin(), p.value.end());
    c.net.forward(c.x);
    c.net.backward(c.r);
    std::vector<double> after;
    for (auto& p : c.net.parameters()) after.insert(after.end(), p.value.begin(), p.value.end());
    CHECK(before == after);
}

TEST_CASE("zero upstream gradient gives zero parameter and input gradients") {
    RandomStream rng(7, "test.zero");
    auto c = testing::random_net_case(rng);
    c.net.forward(c.x);
    const Matrix2 g = c.net.backward(Matrix2(c.x.rows(), c.net.output_dim()));
    for (double v : g.values()) CHECK(v == 0.0);
    for (auto& p : c.net.parameters()) {
        for (double v : p.grad) CHECK(v == 0.0);
    }
}

TEST_CASE("1x1 affine layer gradients") {
    DenseNet net = single_layer(1, 1, Activation::Identity);
    net.layers()[0].weights()(0, 0) = 2.0;
    net.forward(Matrix2::from_rows({{3.0}}));
    const Matrix2 g = net.backward(Matrix2::from_rows({{1.0}}));
    CHECK(net.layers()[0].grad_weights()(0, 0) == 3.0);
    CHECK(net.layers()[0].grad_bias()[0] == 1.0);
    CHECK(g(0, 0) == 2.0);
}

TEST_CASE("backward preconditions") {
    DenseNet net = single_layer(2, 3, Activation::Tanh);
    CHECK_THROWS_AS(net.backward(Matrix2(1, 3)), StateError);
    net.forward(Matrix2(4, 2, 0.5));
    CHECK_THROWS_AS(net.backward(Matrix2(4, 2)), ShapeError);
    CHECK_THROWS_AS(net.backward(Matrix2(3, 3)), ShapeError);
}

TEST_CASE("random three-layer net matches central finite differences") {
    RandomStream rng(11, "test.fd3");
    for (int trial = 0; trial < 5; ++trial) {
        const LayerSpec specs[] = {{6, Activation::PReLU}, {5, Activation::Tanh}, {4, Activation::Softmax}};
        RandomStream init(100 + static_cast<std::uint64_t>(trial), "test.fd3.init");
        DenseNet net(3, specs, init);
        for (auto& layer : net.layers()) {
            for (double& b : layer.bias()) b = rng.uniform(-0.3, 0.3);
        }
        Matrix2 x(4, 3), r(4, 4);
        for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
        for (double& v : r.values()) v = rng.uniform(-1.0, 1.0);
        const auto res = testing::check_gradients(net, x, r);
        CHECK(res.checked > 0);
        CHECK_MESSAGE(res.worst_relative_error < 1e-4, res.worst_name);
    }
}

TEST_CASE("random small nets of depth <= 4 and width <= 16 pass the gradient check") {
    RandomStream rng(12, "test.fd.random");
    std::size_t checked = 0, skipped = 0;
    for (int trial = 0; trial < 40; ++trial) {
        auto c = testing::random_net_case(rng);
        const auto res = testing::check_gradients(c.net, c.x, c.r);
        checked += res.checked;
        skipped += res.skipped_kinks;
        CHECK_MESSAGE(res.worst_relative_error < 1e-4, "trial ", trial, ": ", res.worst_name);
    }
    CHECK(skipped * 100 < checked);
}

TEST_CASE("softmax cross-entropy") {
    SUBCASE("saturated logits stay finite") {
        const std::size_t t[] = {0};
        const auto lg = softmax_cross_entropy(Matrix2::from_rows({{1e9, 0.0}}), t);
        CHECK(std::isfinite(lg.loss));
        CHECK(lg.loss == doctest::Approx(0.0));
        CHECK(std::abs(lg.logit_grads(0, 0)) < 1e-12);
        CHECK(std::abs(lg.logit_grads(0, 1)) < 1e-12);
    }
    SUBCASE("logits of magnitude 1e3 do not overflow") {
        const std::size_t t[] = {1, 0};
        const auto lg = softmax_cross_entropy(Matrix2::from_rows({{1e3, -1e3, 5e2}, {-1e3, 1e3, 0.0}}), t);
        CHECK(std::isfinite(lg.loss));
        CHECK(lg.logit_grads.all_finite());
        CHECK(lg.loss == doctest::Approx(2e3));
    }
    SUBCASE("uniform logits give ln k") {
        const std::size_t t[] = {2};
        const auto lg = softmax_cross_entropy(Matrix2::from_rows({{0.0, 0.0, 0.0, 0.0}}), t);
        CHECK(lg.loss == std::log(4.0));
        CHECK(lg.loss == doctest::Approx(1.3862943611198906));
    }
    SUBCASE("(0, ln 3) against the second class") {
        const std::size_t t[] = {1};
        const auto lg = softmax_cross_entropy(Matrix2::from_rows({{0.0, std::log(3.0)}}), t);
        CHECK(lg.loss == doctest::Approx(-std::log(0.75)).epsilon(1e-14));
        CHECK(lg.loss == doctest::Approx(0.2876821).epsilon(1e-7));
        CHECK(lg.logit_grads(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
        CHECK(lg.logit_grads(0, 1) == doctest::Approx(-0.25).epsilon(1e-14));
    }
    SUBCASE("loss and gradient are averaged over rows") {
        const std::size_t t[] = {0, 1};
        const Matrix2 logits = Matrix2::from_rows({{0.3, -0.2}, {1.0, 2.0}});
        const auto lg = softmax_cross_entropy(logits, t);
        const std::size_t t0[] = {0}, t1[] = {1};
        const auto a = softmax_cross_entropy(Matrix2::from_rows({{0.3, -0.2}}), t0);
        const auto b = softmax_cross_entropy(Matrix2::from_rows({{1.0, 2.0}}), t1);
        CHECK(lg.loss == doctest::Approx((a.loss + b.loss) / 2.0).epsilon(1e-15));
        CHECK(lg.logit_grads(1, 1) == doctest::Approx(b.logit_grads(0, 1) / 2.0).epsilon(1e-15));
    }
    SUBCASE("target index out of range") {
        const std::size_t t[] = {2};
        CHECK_THROWS_AS(softmax_cross_entropy(Matrix2::from_rows({{0.0, 1.0}}), t), ShapeError);
    }
    SUBCASE("loss tends to zero as the target logit gap grows") {
        const std::size_t t[] = {0};
        double prev = INFINITY;
        for (double gap : {1.0, 5.0, 20.0, 50.0}) {
            const double l = softmax_cross_entropy(Matrix2::from_rows({{gap, 0.0, -1.0}}), t).loss;
            CHECK(l < prev);
            prev = l;
        }
        CHECK(prev < 1e-20);
    }
}

TEST_CASE("activations") {
    const double slope[] = {0.25};
    SUBCASE("PReLU negative branch") {
        const Matrix2 pre = Matrix2::from_rows({{-2.0}});
        const Matrix2 out = activation_eval(Activation::PReLU, pre, slope);
        CHECK(out(0, 0) == -0.5);
        const auto g = activation_grad(Activation::PReLU, pre, out, Matrix2::from_rows({{1.0}}), slope);
        CHECK(g.pre_grad(0, 0) == 0.25);
        CHECK(g.slope_grad[0] == -2.0);
    }
    SUBCASE("LeakyReLU") {
        const Matrix2 out = activation_eval(Activation::LeakyReLU, Matrix2::from_rows({{-1.0, 5.0}}));
        CHECK(out(0, 0) == -0.01);
        CHECK(out(0, 1) == 5.0);
    }
    SUBCASE("ReLU family takes the positive branch at zero") {
        const Matrix2 zero = Matrix2::from_rows({{0.0}});
        const Matrix2 one = Matrix2::from_rows({{1.0}});
        for (auto kind : {Activation::PReLU, Activation::LeakyReLU}) {
            std::span<const double> s = kind == Activation::PReLU ? std::span<const double>(slope) : std::span<const double>();
            const Matrix2 out = activation_eval(kind, zero, s);
            CHECK(activation_grad(kind, zero, out, one, s).pre_grad(0, 0) == 1.0);
        }
    }
    SUBCASE("tanh derivative matches finite differences") {
        RandomStream rng(21, "test.tanh");
        const double h = 1e-5;
        for (int i = 0; i < 200; ++i) {
            const double x = rng.uniform(-3.0, 3.0);
            const Matrix2 pre = Matrix2::from_rows({{x}});
            const Matrix2 out = activation_eval(Activation::Tanh, pre);
            const double analytic = activation_grad(Activation::Tanh, pre, out, Matrix2::from_rows({{1.0}})).pre_grad(0, 0);
            const double numeric = (std::tanh(x + h) - std::tanh(x - h)) / (2.0 * h);
            CHECK(testing::relative_error(analytic, numeric) < 1e-6);
            CHECK(analytic == doctest::Approx(1.0 - std::tanh(x) * std::tanh(x)).epsilon(1e-15));
        }
    }
    SUBCASE("slopes are required exactly for PReLU") {
        const Matrix2 pre = Matrix2::from_rows({{1.0, -1.0}});
        CHECK_THROWS_AS(activation_eval(Activation::PReLU, pre), ShapeError);
        CHECK_THROWS_AS(activation_eval(Activation::Tanh, pre, slope), ShapeError);
    }
    SUBCASE("PReLU slopes exist only on PReLU layers") {
        RandomStream init(2, "test.layers");
        DenseLayer p(3, 4, Activation::PReLU, init);
        DenseLayer l(3, 4, Activation::LeakyReLU, init);
        CHECK(p.prelu_slopes().size() == 4);
        for (double a : p.prelu_slopes()) CHECK(a == kPreluInitialSlope);
        CHECK(l.prelu_slopes().empty());
        CHECK(p.grad_slopes().size() == 4);
        CHECK(p.grad_weights().rows() == p.weights().rows());
        CHECK(p.grad_weights().cols() == p.weights().cols());
        CHECK(p.grad_bias().size() == p.bias().size());
    }
}

TEST_CASE("weight initialization is uniform in +-sqrt(6/(in+out)) with zero bias") {
    RandomStream init(4, "test.xavier");
    DenseLayer layer(30, 20, Activation::Tanh, init);
    const double bound = std::sqrt(6.0 / 50.0);
    double lo = INFINITY, hi = -INFINITY;
    for (double w : layer.weights().values()) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
    }
    CHECK(lo >= -bound);
    CHECK(hi <= bound);
    CHECK(hi - lo > 1.8 * bound);
    for (double b : layer.bias()) CHECK(b == 0.0);
}

TEST_CASE("Adam") {
    SUBCASE("zero gradient on the first step leaves parameters unchanged") {
        AdamState s(1);
        double w[] = {0.7};
        const double g[] = {0.0};
        s.apply(w, g, 0.1);
        CHECK(w[0] == 0.7);
        CHECK(s.step_count == 1);
    }
    SUBCASE("two steps with constant unit gradient match the hand-iterated recurrences") {
        AdamState s(1);
        double w[] = {0.0};
        const double g[] = {1.0};
        double m = 0.0, v = 0.0, ref = 0.0;
        for (int t = 1; t <= 2; ++t) {
            s.apply(w, g, 0.1);
            m = 0.9 * m + 0.1 * 1.0;
            v = 0.999 * v + 0.001 * 1.0;
            const double mhat = m / (1.0 - std::pow(0.9, t));
            const double vhat = v / (1.0 - std::pow(0.999, t));
            ref -= 0.1 * mhat / (std::sqrt(vhat) + 1e-8);
            CHECK(w[0] == doctest::Approx(ref).epsilon(1e-14));
            CHECK(s.step_count == static_cast<std::uint64_t>(t));
            CHECK(s.second_moment[0] >= 0.0);
        }
        CHECK(std::abs(w[0] + 0.2) < 1e-7);
    }
    SUBCASE("identical nets with identical gradients stay bitwise identical") {
        RandomStream ra(9, "test.adam"), rb(9, "test.adam");
        const LayerSpec specs[] = {{5, Activation::PReLU}, {3, Activation::Softmax}};
        DenseNet a(4, specs, ra), b(4, specs, rb);
        RandomStream data(10, "test.adam.data");
        for (int k = 0; k < 7; ++k) {
            Matrix2 x(3, 4), r(3, 3);
            for (double& v : x.values()) v = data.normal();
            for (double& v : r.values()) v = data.normal();
            a.forward(x);
            a.backward(r);
            a.adam_step(1e-2);
            b.forward(x);
            b.backward(r);
            b.adam_step(1e-2);
        }
        auto pa = a.parameters(), pb = b.parameters();
        for (std::size_t i = 0; i < pa.size(); ++i) {
            CHECK(std::equal(pa[i].value.begin(), pa[i].value.end(), pb[i].value.begin()));
        }
    }
    SUBCASE("stepping without populated gradients is an error") {
        DenseNet net = single_layer(2, 2, Activation::Tanh);
        CHECK_THROWS_AS(net.adam_step(1e-3), StateError);
        net.forward(Matrix2(1, 2, 0.3));
        net.backward(Matrix2(1, 2, 1.0));
        net.adam_step(1e-3);
        CHECK_THROWS_AS(net.adam_step(1e-3), StateError);
    }
    SUBCASE("zero gradients on fresh state leave every parameter of a net unchanged") {
        DenseNet net = single_layer(2, 2, Activation::Identity);
        net.forward(Matrix2(1, 2, 0.0));
        net.backward(Matrix2(1, 2, 0.0));
        std::vector<double> before;
        for (auto& p : net.parameters()) before.insert(before.end(), p.value.begin(), p.value.end());
        net.adam_step(1e-2);
        std::vector<double> after;
        for (auto& p : net.parameters()) after.insert(after.end(), p.value.begin(), p.value.end());
        CHECK(before == after);
    }
}

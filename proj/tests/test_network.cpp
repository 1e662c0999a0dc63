#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include <spdnn/network.hpp>
#include <spdnn/rng.hpp>

using namespace spdnn;

TEST_CASE("matrix storage is column-major") {
    Matrix M(2, 3);
    M(1, 2) = 7.0;
    CHECK(M.data[1 + 2 * 2] == 7.0);
    M(0, 1) = -2.5;
    CHECK(M.data[2] == -2.5);
}

TEST_CASE("param_count sums layer blocks") {
    CHECK(param_count({1, 2, 1}) == 7);
    CHECK(param_count({2, 3, 1}) == 13);
    CHECK(param_count({1, 4, 4, 4, 1}) == 53);
    CHECK_THROWS_AS(param_count({5}), invalid_argument_error);
    CHECK_THROWS_AS(param_count({2, 0, 1}), invalid_argument_error);
}

TEST_CASE("architecture validation") {
    CHECK_NOTHROW(Architecture({3, 5, 1}));
    CHECK_THROWS_AS(Architecture({1, 2, 2}), invalid_argument_error);
    CHECK_THROWS_AS(Architecture({1, 0, 1}), invalid_argument_error);
    CHECK_THROWS_AS(Architecture({2, 2, 1}, "swish"), invalid_argument_error);

    Architecture a = make_architecture(3, 2, 5);
    CHECK(a.widths == Widths{3, 5, 5, 1});
    CHECK(a.depth() == 2);
    CHECK(a.input_dim() == 3);

    Architecture shallow = make_architecture(2, 0, 9);
    CHECK(shallow.widths == Widths{2, 1});
}

TEST_CASE("vectorize lays out columns then biases") {
    Matrix W(2, 2);
    W(0, 0) = 1.0;
    W(0, 1) = 2.0;
    W(1, 0) = 3.0;
    W(1, 1) = 4.0;
    std::vector<double> b{5.0, 6.0};

    std::vector<double> theta = vectorize({W}, {b});
    CHECK(theta == std::vector<double>{1.0, 3.0, 2.0, 4.0, 5.0, 6.0});

    std::vector<double> short_bias{5.0};
    CHECK_THROWS_AS(vectorize({W}, {short_bias}), invalid_argument_error);
    CHECK_THROWS_AS(vectorize({W}, {}), invalid_argument_error);
}

TEST_CASE("devectorize inverts vectorize") {
    Widths w{2, 3, 1};
    std::vector<double> theta(param_count(w));
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] = static_cast<double>(i + 1);

    LayerParams lp = devectorize(theta, w);
    REQUIRE(lp.weights.size() == 2);
    CHECK(lp.weights[0].rows == 3);
    CHECK(lp.weights[0].cols == 2);
    CHECK(lp.weights[0](1, 0) == 2.0);
    CHECK(lp.weights[0](0, 1) == 4.0);
    CHECK(lp.biases[0] == std::vector<double>{7.0, 8.0, 9.0});
    CHECK(vectorize(lp.weights, lp.biases) == theta);

    theta.pop_back();
    CHECK_THROWS_AS(devectorize(theta, w), invalid_argument_error);
}

namespace {

// One hidden layer, all preactivations positive on [0.1, 0.9], so the
// relu net is the affine map 0.23 x + 0.32 there.
NetworkParams affine_regime_net() {
    Architecture arch({1, 2, 1});
    std::vector<double> theta{0.3, 0.2, 0.2, 0.3, 0.5, 0.4, 0.1};
    return NetworkParams(arch, theta);
}

} // namespace

TEST_CASE("forward matches a hand-computed affine map") {
    NetworkParams params = affine_regime_net();
    for (double x : {0.1, 0.37, 0.5, 0.9})
        CHECK_THAT(forward(params, {x}), Catch::Matchers::WithinAbs(0.23 * x + 0.32, 1e-14));

    SECTION("clamp truncates the output") {
        CHECK(forward(params, {0.5}, 0.4) == 0.4);
        CHECK_THAT(forward(params, {0.5}, 2.0), Catch::Matchers::WithinAbs(0.435, 1e-14));
    }
    SECTION("dimension mismatch throws") {
        CHECK_THROWS_AS(forward(params, {0.5, 0.5}), invalid_argument_error);
    }
    SECTION("overflow names the offending layer") {
        NetworkParams bad(Architecture({1, 1, 1}), {1e308, 1e308, 1.0, 0.0});
        CHECK_THROWS_WITH(forward(bad, {1.0}), Catch::Matchers::ContainsSubstring("layer 1"));
    }
}

TEST_CASE("grad matches the hand-derived backprop on the affine net") {
    NetworkParams params = affine_regime_net();
    std::vector<double> g = grad(params, {{0.5}}, {0.0}, LossSpec::squared());
    std::vector<double> expect{0.2175, 0.174, 0.435, 0.348, 0.3045, 0.348, 0.87};
    REQUIRE(g.size() == expect.size());
    for (std::size_t k = 0; k < g.size(); ++k)
        CHECK_THAT(g[k], Catch::Matchers::WithinAbs(expect[k], 1e-12));
}

TEST_CASE("grad is zero where the clamp is active") {
    NetworkParams params = affine_regime_net();
    // raw output 0.435 exceeds the clamp, so the chain rule gives zero
    std::vector<double> g = grad(params, {{0.5}}, {0.0}, LossSpec::squared(), 0.4);
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("grad agrees with central differences on a smooth net") {
    std::mt19937_64 gen = make_stream(11, 0);
    Architecture arch = make_architecture(2, 2, 4, "tanh");
    std::vector<double> theta(arch.params());
    for (double& v : theta) v = uniform_in(gen, -0.7, 0.7);
    NetworkParams params(arch, theta);

    std::vector<std::vector<double>> xs;
    std::vector<double> ys;
    for (int i = 0; i < 6; ++i) {
        xs.push_back({uniform_in(gen, -1.0, 1.0), uniform_in(gen, -1.0, 1.0)});
        ys.push_back(uniform_in(gen, -1.5, 1.5));
    }

    LossSpec loss = LossSpec::huber(1.0);
    std::vector<double> bp = grad(params, xs, ys, loss);
    double h = 1e-6;
    for (std::size_t k = 0; k < theta.size(); ++k) {
        NetworkParams up = params, dn = params;
        up.theta[k] += h;
        dn.theta[k] -= h;
        double fu = 0.0, fd = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            fu += loss_eval(loss, forward(up, xs[i]), ys[i]);
            fd += loss_eval(loss, forward(dn, xs[i]), ys[i]);
        }
        double num = (fu - fd) / (2.0 * h) / static_cast<double>(xs.size());
        CHECK_THAT(bp[k], Catch::Matchers::WithinAbs(num, 1e-7));
    }

    CHECK_THROWS_AS(grad(params, {}, {}, loss), invalid_argument_error);
    CHECK_THROWS_AS(grad(params, {{0.1, 0.2}}, {0.5, 0.6}, loss), invalid_argument_error);
}

TEST_CASE("project_class clips then keeps the largest magnitudes") {
    Architecture arch({1, 2, 1});
    NetworkParams params(arch, {3.0, -1.0, 0.5, -2.0, 0.1, 0.0, 2.6});

    ClassConstraints c;
    c.max_width = 2;
    c.weight_bound = 2.5;

    SECTION("clip only") {
        NetworkParams out = project_class(params, c);
        CHECK(out.theta == std::vector<double>{2.5, -1.0, 0.5, -2.0, 0.1, 0.0, 2.5});
    }
    SECTION("sparsity keeps the top magnitudes after clipping") {
        c.sparsity = 3;
        NetworkParams out = project_class(params, c);
        CHECK(out.theta == std::vector<double>{2.5, 0.0, 0.0, -2.0, 0.0, 0.0, 2.5});
        CHECK(count_nonzero(out.theta) == 3);
    }
    SECTION("ties keep the lowest index") {
        NetworkParams tied(arch, {1.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0});
        c.sparsity = 2;
        NetworkParams out = project_class(tied, c);
        CHECK(out.theta == std::vector<double>{1.0, -1.0, 0.0, 0.0, 0.0, 0.0, 0.0});
    }
    SECTION("sparsity at or above the parameter count is a no-op") {
        c.sparsity = params.theta.size();
        c.weight_bound = 10.0;
        CHECK(project_class(params, c).theta == params.theta);
    }
    SECTION("idempotent") {
        c.sparsity = 3;
        NetworkParams once = project_class(params, c);
        CHECK(project_class(once, c).theta == once.theta);
    }
    SECTION("hidden width beyond the constraint throws") {
        NetworkParams wide(Architecture({1, 3, 1}), std::vector<double>(10, 0.1));
        CHECK_THROWS_AS(project_class(wide, c), invalid_argument_error);
    }
}

TEST_CASE("count_nonzero and sup_norm") {
    std::vector<double> theta{0.0, 1e-13, 0.5, -0.2};
    CHECK(count_nonzero(theta) == 3);
    CHECK(count_nonzero(theta, 1e-12) == 2);
    CHECK(count_nonzero(theta, 0.5) == 0);
    CHECK(sup_norm(theta) == 0.5);
    CHECK(sup_norm({}) == 0.0);
}

TEST_CASE("activations expose ids, derivatives and fixed segments") {
    CHECK(relu_activation().fn(-2.0) == 0.0);
    CHECK(relu_activation().fn(3.0) == 3.0);
    CHECK(relu_activation().deriv(0.0) == 0.0);
    CHECK(relu_activation().deriv(1.0) == 1.0);
    CHECK(sigmoid_activation().lipschitz == 0.25);
    CHECK(tanh_activation().lipschitz == 1.0);
    CHECK(activation_by_id("relu").id == "relu");
    CHECK_THROWS_AS(activation_by_id("swish"), invalid_argument_error);

    CHECK(check_fixed_segment(relu_activation(), 0.0, 1.0));
    CHECK(check_fixed_segment(identity_activation(), 0.0, 1.0));
    CHECK_FALSE(check_fixed_segment(sigmoid_activation(), 0.0, 1.0));
}

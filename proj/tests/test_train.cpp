#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <limits>

#include <spdnn/checkpoint.hpp>
#include <spdnn/datagen.hpp>
#include <spdnn/train.hpp>

using namespace spdnn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NetworkParams constant_net(double c) {
    return NetworkParams(Architecture({1, 1, 1}), {0.0, 0.0, 0.0, c});
}

Dataset sine_data(std::size_t n, std::uint64_t seed) {
    return simulate_iid(target_by_id("sine_1d"), NoiseSpec::gaussian(0.3), n, seed);
}

Schedule small_schedule() {
    Schedule sch;
    sch.depth = 1;
    sch.width = 4;
    sch.sparsity = 8;
    sch.weight_bound = 10.0;
    sch.output_bound = 2.0;
    return sch;
}

} // namespace

TEST_CASE("empirical_risk averages the loss over the dataset") {
    Dataset data{{{0.0}, 1.0}, {{0.0}, -1.0}};
    CHECK(empirical_risk(constant_net(0.0), data, LossSpec::squared()) == 1.0);
    CHECK_THAT(empirical_risk(constant_net(0.5), data, LossSpec::huber(1.0)),
               WithinRel(0.5625, 1e-15));
    CHECK_THROWS_AS(empirical_risk(constant_net(0.0), {}, LossSpec::squared()),
                    invalid_argument_error);

    SECTION("clamped evaluation truncates the prediction") {
        Dataset at_zero{{{0.0}, 0.0}};
        CHECK(empirical_risk(constant_net(2.0), at_zero, LossSpec::squared(), 1.0) == 1.0);
        CHECK(empirical_risk(constant_net(2.0), at_zero, LossSpec::squared()) == 4.0);
    }
}

TEST_CASE("init_theta bounds each layer by its fan-in") {
    Architecture arch({2, 3, 1});
    std::mt19937_64 g = make_stream(5, 0);
    std::vector<double> theta = init_theta(arch, g, 0.0);
    REQUIRE(theta.size() == 13);
    for (std::size_t k = 0; k < 9; ++k) CHECK(std::fabs(theta[k]) <= 1.0 / std::sqrt(2.0));
    for (std::size_t k = 9; k < 13; ++k) CHECK(std::fabs(theta[k]) <= 1.0 / std::sqrt(3.0));

    std::mt19937_64 g2 = make_stream(5, 0);
    CHECK(init_theta(arch, g2, 0.0) == theta);

    std::mt19937_64 g3 = make_stream(5, 0);
    for (double v : init_theta(arch, g3, 0.25)) CHECK(std::fabs(v) <= 0.25);
}

TEST_CASE("penalty_from_tuning materializes lambda and tau") {
    std::vector<std::string> warnings;
    SpTuning t;
    t.lambda = 0.3;
    t.log_tau_max = -10.0;
    PenaltyConfig pen = penalty_from_tuning(t, &warnings, PenaltyKind::scad);
    CHECK(pen.kind == PenaltyKind::scad);
    CHECK(pen.lambda == 0.3);
    CHECK_THAT(pen.tau, WithinRel(std::exp(-10.0), 1e-15));
    CHECK(warnings.empty());

    t.log_tau_max = -800.0;
    pen = penalty_from_tuning(t, &warnings);
    CHECK(pen.tau == std::numeric_limits<double>::min());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("underflow") != std::string::npos);
}

TEST_CASE("train config validation") {
    TrainConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto expect_throw = [](auto mutate) {
        TrainConfig c;
        mutate(c);
        CHECK_THROWS_AS(c.validate(), invalid_argument_error);
    };
    expect_throw([](TrainConfig& c) { c.max_epochs = 0; });
    expect_throw([](TrainConfig& c) { c.batch_size = 0; });
    expect_throw([](TrainConfig& c) { c.step_size = 0.0; });
    expect_throw([](TrainConfig& c) { c.shrink = 1.0; });
    expect_throw([](TrainConfig& c) { c.shrink = 0.0; });
    expect_throw([](TrainConfig& c) { c.projection_cadence = 0; });
    expect_throw([](TrainConfig& c) { c.restarts = 0; });
    expect_throw([](TrainConfig& c) { c.init_scale = -0.1; });
    expect_throw([](TrainConfig& c) { c.tol = -1.0; });
    expect_throw([](TrainConfig& c) { c.prune_warmup = 1.0; });
    expect_throw([](TrainConfig& c) { c.prune_warmup = 0.6; c.prune_taper = 0.5; });
}

TEST_CASE("constrained training returns a feasible improving fit") {
    Dataset data = sine_data(128, 2);
    Schedule sch = small_schedule();
    TrainConfig cfg;
    cfg.max_epochs = 40;
    cfg.batch_size = 32;
    cfg.step_size = 0.1;
    cfg.seed = 3;

    FitResult fit = train_npdnn(data, sch, LossSpec::huber(1.0), cfg);

    CHECK(fit.flags.respects_bound);
    CHECK(fit.flags.respects_sparsity);
    CHECK(fit.flags.output_clamped);
    CHECK(count_nonzero(fit.params.theta) <= sch.sparsity);
    CHECK(sup_norm(fit.params.theta) <= sch.weight_bound);

    REQUIRE(fit.objective.size() == 41);
    REQUIRE(fit.best_objective.size() == fit.objective.size());
    for (std::size_t i = 1; i < fit.best_objective.size(); ++i)
        CHECK(fit.best_objective[i] <= fit.best_objective[i - 1]);
    CHECK(fit.final_objective == fit.best_objective.back());
    CHECK(fit.final_risk == fit.final_objective);
    CHECK(fit.final_penalty == 0.0);
    CHECK(fit.final_risk < fit.objective.front());
    CHECK(fit.seconds >= 0.0);

    SECTION("bit-deterministic per seed") {
        FitResult again = train_npdnn(data, sch, LossSpec::huber(1.0), cfg);
        CHECK(again.params.theta == fit.params.theta);
        CHECK(again.final_objective == fit.final_objective);
    }
    SECTION("a different seed moves the fit") {
        TrainConfig other = cfg;
        other.seed = 4;
        CHECK(train_npdnn(data, sch, LossSpec::huber(1.0), other).params.theta !=
              fit.params.theta);
    }
    SECTION("restarts can only improve the objective") {
        TrainConfig multi = cfg;
        multi.restarts = 3;
        CHECK(train_npdnn(data, sch, LossSpec::huber(1.0), multi).final_objective <=
              fit.final_objective);
    }
    SECTION("empty dataset throws") {
        CHECK_THROWS_AS(train_npdnn({}, sch, LossSpec::huber(1.0), cfg),
                        invalid_argument_error);
    }
}

TEST_CASE("step budget fixes the total optimization effort") {
    Dataset data = sine_data(64, 6);
    Schedule sch = small_schedule();
    TrainConfig cfg;
    cfg.step_budget = 100;
    cfg.batch_size = 32;
    cfg.seed = 1;

    // 64 records at batch 32 is 2 steps per epoch, so 100 steps is 50 epochs
    FitResult fit = train_npdnn(data, sch, LossSpec::huber(1.0), cfg);
    CHECK(fit.objective.size() == 51);

    SECTION("large tolerance stops after one epoch") {
        TrainConfig lazy = cfg;
        lazy.tol = 1e9;
        CHECK(train_npdnn(data, sch, LossSpec::huber(1.0), lazy).objective.size() == 2);
    }
}

TEST_CASE("penalized training descends its composite objective") {
    Dataset data = sine_data(128, 2);
    Schedule sch = small_schedule();
    sch.weight_bound = 0.4;

    PenaltyConfig pen;
    pen.lambda = 0.05;
    pen.tau = 0.1;

    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.step_size = 0.1;
    cfg.seed = 3;

    FitResult fit = train_spdnn(data, sch, LossSpec::huber(1.0), pen, cfg);

    REQUIRE(fit.objective.size() == 61);
    for (std::size_t i = 1; i < fit.objective.size(); ++i)
        CHECK(fit.objective[i] <= fit.objective[i - 1] + 1e-12);
    CHECK_THAT(fit.final_objective, WithinAbs(fit.final_risk + fit.final_penalty, 1e-12));
    CHECK(fit.flags.respects_bound);
    CHECK(sup_norm(fit.params.theta) <= sch.weight_bound);

    SECTION("bit-deterministic per seed") {
        FitResult again = train_spdnn(data, sch, LossSpec::huber(1.0), pen, cfg);
        CHECK(again.params.theta == fit.params.theta);
    }
    SECTION("zero lambda pays no penalty") {
        PenaltyConfig free = pen;
        free.lambda = 0.0;
        FitResult f = train_spdnn(data, sch, LossSpec::huber(1.0), free, cfg);
        CHECK(f.final_penalty == 0.0);
        CHECK(f.final_objective == f.final_risk);
    }
    SECTION("heavier penalties keep fewer active coordinates") {
        PenaltyConfig light = pen, heavy = pen;
        light.lambda = 0.01;
        light.tau = 0.5;
        heavy.lambda = 2.0;
        heavy.tau = 0.5;
        FitResult fl = train_spdnn(data, sch, LossSpec::huber(1.0), light, cfg);
        FitResult fh = train_spdnn(data, sch, LossSpec::huber(1.0), heavy, cfg);
        CHECK(count_nonzero(fh.params.theta, heavy.tau) <=
              count_nonzero(fl.params.theta, light.tau));
    }
    SECTION("iteration count follows the step budget") {
        TrainConfig budgeted = cfg;
        budgeted.max_epochs = 200;
        budgeted.step_budget = 7;
        CHECK(train_spdnn(data, sch, LossSpec::huber(1.0), pen, budgeted).objective.size() == 8);
    }
    SECTION("empty dataset throws") {
        CHECK_THROWS_AS(train_spdnn({}, sch, LossSpec::huber(1.0), pen, cfg),
                        invalid_argument_error);
    }
}

TEST_CASE("checkpoint encoding round-trips") {
    Checkpoint ck;
    ck.params = NetworkParams(Architecture({2, 3, 1}, "tanh"),
                              {0.1, -0.2, 0.3, 0.0, 1.5, -1.5, 0.25, 0.125, 2.0, -0.75, 0.5,
                               1.0 / 3.0, 7.0});
    ck.constraints.max_width = 3;
    ck.constraints.weight_bound = 2.0;
    ck.constraints.output_bound = 1.5;
    ck.constraints.sparsity = 9;
    ck.metadata = "{\"loss\":\"huber\",\"n\":128}";

    std::string buf = encode_checkpoint(ck);
    Checkpoint back = decode_checkpoint(buf);
    CHECK(back.params.arch.widths == ck.params.arch.widths);
    CHECK(back.params.arch.activation == "tanh");
    CHECK(back.params.theta == ck.params.theta);
    CHECK(back.constraints.max_width == 3);
    CHECK(back.constraints.weight_bound == 2.0);
    CHECK(back.constraints.output_bound == 1.5);
    CHECK(back.constraints.sparsity == 9);
    CHECK(back.metadata == ck.metadata);

    SECTION("absent sparsity stays absent") {
        ck.constraints.sparsity.reset();
        CHECK_FALSE(decode_checkpoint(encode_checkpoint(ck)).constraints.sparsity.has_value());
    }
    SECTION("bad magic") {
        std::string bad = buf;
        bad[0] = 'X';
        CHECK_THROWS_WITH(decode_checkpoint(bad), Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("unsupported version") {
        std::string bad = buf;
        bad[8] = 2;
        CHECK_THROWS_WITH(decode_checkpoint(bad),
                          Catch::Matchers::ContainsSubstring("version"));
    }
    SECTION("truncation") {
        CHECK_THROWS_WITH(decode_checkpoint(buf.substr(0, buf.size() / 2)),
                          Catch::Matchers::ContainsSubstring("truncated"));
    }
    SECTION("trailing bytes") {
        CHECK_THROWS_WITH(decode_checkpoint(buf + "x"),
                          Catch::Matchers::ContainsSubstring("trailing"));
    }
    SECTION("theta length is validated on encode") {
        ck.params.theta.push_back(0.0); // bypasses the constructor check
        CHECK_THROWS_AS(encode_checkpoint(ck), invalid_argument_error);
    }
    SECTION("file round-trip") {
        std::string path = "ckpt_roundtrip.bin";
        save_checkpoint(path, ck);
        Checkpoint loaded = load_checkpoint(path);
        CHECK(loaded.params.theta == ck.params.theta);
        CHECK(loaded.metadata == ck.metadata);
        std::remove(path.c_str());
        CHECK_THROWS_AS(load_checkpoint(path), runtime_failure);
    }
}

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <spdnn/datagen.hpp>

using namespace spdnn;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("noise spec validation and names") {
    CHECK_NOTHROW(NoiseSpec::gaussian(0.5));
    CHECK_THROWS_AS(NoiseSpec::gaussian(0.0), invalid_argument_error);
    CHECK_THROWS_AS(NoiseSpec::laplace(-1.0), invalid_argument_error);
    CHECK_THROWS_AS(NoiseSpec::student_t(1.0, 2.0), invalid_argument_error);
    CHECK_NOTHROW(NoiseSpec::student_t(1.0, 2.5));
    CHECK(noise_name(NoiseKind::laplace) == std::string("laplace"));
}

TEST_CASE("noise draws have the declared first two moments") {
    const std::size_t n = 200000;
    struct Case {
        NoiseSpec spec;
        double var;
    };
    Case cases[] = {{NoiseSpec::gaussian(0.7), 0.49},
                    {NoiseSpec::laplace(0.5), 0.5},
                    {NoiseSpec::student_t(1.0, 5.0), 5.0 / 3.0}};
    std::size_t idx = 0;
    for (const Case& c : cases) {
        std::mt19937_64 g = make_stream(100 + idx++, 0);
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double v = draw_noise(c.spec, g);
            sum += v;
            sum2 += v * v;
        }
        double mean = sum / n;
        double var = sum2 / n - mean * mean;
        INFO(noise_name(c.spec.kind));
        CHECK_THAT(mean, WithinAbs(0.0, 0.02));
        CHECK_THAT(var, WithinRel(c.var, 0.07));
    }
}

TEST_CASE("dataset csv layout") {
    Dataset data{{{0.5, 0.25}, 1.0}, {{-1.0, 2.0}, -0.125}};
    std::ostringstream os;
    dump_dataset_csv(os, data);
    CHECK(os.str() == "t,X_1,X_2,Y\n1,0.5,0.25,1\n2,-1,2,-0.125\n");

    SECTION("empty dataset writes only the header") {
        std::ostringstream empty;
        dump_dataset_csv(empty, {});
        CHECK(empty.str() == "t,Y\n");
    }
    SECTION("full precision round-trips") {
        Dataset fine{{{1.0 / 3.0}, 0.1}};
        std::ostringstream o2;
        dump_dataset_csv(o2, fine);
        CHECK(o2.str().find("0.33333333333333331") != std::string::npos);
    }
    SECTION("ragged rows throw") {
        Dataset ragged{{{0.5, 0.25}, 1.0}, {{0.5}, 1.0}};
        std::ostringstream o3;
        CHECK_THROWS_AS(dump_dataset_csv(o3, ragged), invalid_argument_error);
    }
}

TEST_CASE("contraction check reports margins") {
    ArxModel ok = linear_arx({0.3, 0.2}, {}, {}, NoiseSpec::gaussian(1.0),
                             NoiseSpec::gaussian(1.0));
    ContractionReport rep = check_contraction(ok);
    CHECK(rep.pass);
    CHECK_THAT(rep.margin_f, WithinRel(0.5, 1e-12));
    CHECK(rep.margin_g == 1.0);

    ArxModel bad = linear_arx({0.7, 0.5}, {}, {}, NoiseSpec::gaussian(1.0),
                              NoiseSpec::gaussian(1.0));
    CHECK_FALSE(check_contraction(bad).pass);
    CHECK_THROWS_AS(simulate_arx(bad, 100, 10, 1), invalid_argument_error);

    SECTION("declared coefficient lengths must match the lag orders") {
        ArxModel m = ok;
        m.lip_f_y.pop_back();
        CHECK_THROWS_AS(m.validate(), invalid_argument_error);
    }
    SECTION("covariate recursion needs matching coefficient counts") {
        CHECK_THROWS_AS(linear_arx({0.5}, {0.3}, {}, NoiseSpec::gaussian(1.0),
                                   NoiseSpec::gaussian(1.0)),
                        invalid_argument_error);
    }
}

TEST_CASE("arx simulation is a deterministic lag chain") {
    ArxModel m = linear_arx({0.5}, {}, {}, NoiseSpec::gaussian(1.0), NoiseSpec::gaussian(1.0));
    Dataset a = simulate_arx(m, 200, 50, 7);
    Dataset b = simulate_arx(m, 200, 50, 7);
    Dataset c = simulate_arx(m, 200, 50, 8);

    REQUIRE(a.size() == 200);
    CHECK(a[0].x.size() == 1);
    bool identical = true, different = false;
    for (std::size_t t = 0; t < a.size(); ++t) {
        identical = identical && a[t].y == b[t].y && a[t].x == b[t].x;
        different = different || a[t].y != c[t].y;
    }
    CHECK(identical);
    CHECK(different);

    // the feature of record t+1 is the response of record t
    for (std::size_t t = 0; t + 1 < a.size(); ++t) CHECK(a[t + 1].x[0] == a[t].y);
}

TEST_CASE("ar(1) sample moments match the stationary law") {
    double a = 0.5;
    ArxModel m = linear_arx({a}, {}, {}, NoiseSpec::gaussian(1.0), NoiseSpec::gaussian(1.0));
    const std::size_t n = 30000;
    Dataset data = simulate_arx(m, n, 3000, 12);

    double mean = 0.0;
    for (const auto& s : data) mean += s.y;
    mean /= n;
    double var = 0.0, cov = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        var += (data[t].y - mean) * (data[t].y - mean);
        if (t + 1 < n) cov += (data[t].y - mean) * (data[t + 1].y - mean);
    }
    var /= n;
    cov /= n - 1;

    double var_true = 1.0 / (1.0 - a * a);
    double se_var = std::sqrt(2.0 * var_true * var_true / n * (1.0 + a * a) / (1.0 - a * a));
    double se_rho = std::sqrt((1.0 - a * a) / n);
    CHECK_THAT(var, WithinAbs(var_true, 4.0 * se_var));
    CHECK_THAT(cov / var, WithinAbs(a, 4.0 * se_rho));
}

TEST_CASE("arx with exogenous covariates emits both lag blocks") {
    ArxModel m = linear_arx({0.4}, {0.3}, {0.5}, NoiseSpec::gaussian(0.5),
                            NoiseSpec::gaussian(0.5));
    CHECK(m.feature_dim() == 2);
    Dataset data = simulate_arx(m, 500, 100, 3);
    REQUIRE(data.size() == 500);
    for (const auto& s : data) {
        REQUIRE(s.x.size() == 2);
        CHECK(std::isfinite(s.x[1]));
    }
    for (std::size_t t = 0; t + 1 < data.size(); ++t) CHECK(data[t + 1].x[0] == data[t].y);
}

TEST_CASE("tanh arx stays bounded") {
    ArxModel m = tanh_arx({0.6}, {}, {}, NoiseSpec::gaussian(0.5), NoiseSpec::gaussian(0.5));
    Dataset data = simulate_arx(m, 20000, 1000, 4);
    double sup = 0.0;
    for (const auto& s : data) sup = std::max(sup, std::fabs(s.y));
    CHECK(sup < 0.6 + 6.0 * 0.5);
}

TEST_CASE("iid simulation draws coordinates then the innovation") {
    TargetSpec target = target_by_id("sine_1d");
    Dataset data = simulate_iid(target, NoiseSpec::gaussian(0.3), 50, 9);
    REQUIRE(data.size() == 50);
    for (const auto& s : data) {
        CHECK(s.x[0] >= 0.0);
        CHECK(s.x[0] <= 1.0);
    }
    std::mt19937_64 g = make_stream(9, 0);
    CHECK(data[0].x[0] == uniform_in(g, 0.0, 1.0));

    SECTION("vanishing noise recovers the target") {
        Dataset clean = simulate_iid(target, NoiseSpec::gaussian(1e-12), 50, 9);
        for (const auto& s : clean)
            CHECK_THAT(s.y, WithinAbs(target.fn(s.x), 1e-9));
    }
    SECTION("deterministic per seed") {
        Dataset again = simulate_iid(target, NoiseSpec::gaussian(0.3), 50, 9);
        for (std::size_t i = 0; i < data.size(); ++i) {
            CHECK(data[i].x == again[i].x);
            CHECK(data[i].y == again[i].y);
        }
    }
}

TEST_CASE("classification labels follow the logistic link") {
    TargetSpec target = target_by_id("const_half");
    const std::size_t n = 50000;
    Dataset data = simulate_classification(target, n, 13);
    std::size_t pos = 0;
    for (const auto& s : data) {
        REQUIRE((s.y == 1.0 || s.y == -1.0));
        if (s.y == 1.0) ++pos;
    }
    double freq = static_cast<double>(pos) / n;
    CHECK_THAT(freq, WithinAbs(0.6224593312018546, 0.01));
}

TEST_CASE("floor_strict is the largest integer strictly below") {
    CHECK(floor_strict(2.0) == 1.0);
    CHECK(floor_strict(2.5) == 2.0);
    CHECK(floor_strict(1.0) == 0.0);
    CHECK(floor_strict(0.5) == 0.0);
    CHECK(floor_strict(3.0) == 2.0);
}

TEST_CASE("holder probe on functions with known norms") {
    SECTION("constant") {
        ProbeResult r = holder_quotient_probe([](const std::vector<double>&) { return 0.5; },
                                              2.0, unit_cube(1));
        CHECK_THAT(r.total, WithinAbs(0.5, 1e-9));
        CHECK(r.quotient_max == 0.0);
    }
    SECTION("identity ramp") {
        ProbeResult r = holder_quotient_probe([](const std::vector<double>& x) { return x[0]; },
                                              1.5, unit_cube(1));
        CHECK_THAT(r.sup_sum, WithinAbs(2.0, 1e-3));
        CHECK_THAT(r.quotient_max, WithinAbs(0.0, 1e-8));
    }
    SECTION("square root kink attains quotient one") {
        ProbeResult r = holder_quotient_probe(
            [](const std::vector<double>& x) { return std::sqrt(std::fabs(x[0] - 0.5)); }, 0.5,
            unit_cube(1));
        CHECK_THAT(r.quotient_max, WithinAbs(1.0, 1e-9));
        CHECK_THAT(r.total, WithinAbs(std::sqrt(0.5) + 1.0, 1e-3));
    }
    SECTION("argument validation") {
        auto f = [](const std::vector<double>&) { return 0.0; };
        CHECK_THROWS_AS(holder_quotient_probe(f, 0.0, unit_cube(1)), invalid_argument_error);
        CHECK_THROWS_AS(holder_quotient_probe(f, 1.0, {}), invalid_argument_error);
        CHECK_THROWS_AS(holder_quotient_probe(f, 1.0, unit_cube(1), 2), invalid_argument_error);
        CHECK_THROWS_AS(holder_quotient_probe(f, 1.0, {{0.0, 0.0}}), invalid_argument_error);
    }
}

TEST_CASE("registry declarations survive the probe") {
    for (const TargetSpec& t : target_registry()) {
        if (!std::holds_alternative<HolderSpec>(t.smoothness)) continue;
        const auto& h = std::get<HolderSpec>(t.smoothness);
        ProbeResult r = holder_quotient_probe(t.fn, h.s, t.domain);
        INFO(t.id << ": probe total " << r.total << " vs declared " << h.K);
        CHECK(r.total <= h.K);
    }
}

TEST_CASE("registry ids and the composition target") {
    for (const char* id : {"const_half", "ramp_1d", "sine_1d", "bump_2d", "radial_sine_2d"})
        CHECK_NOTHROW(target_by_id(id));
    CHECK_THROWS_AS(target_by_id("mystery"), invalid_argument_error);

    TargetSpec radial = target_by_id("radial_sine_2d");
    CHECK(radial.dim() == 2);
    REQUIRE(std::holds_alternative<CompositionSpec>(radial.smoothness));
    // 0.5 (0.36 + 0.64) = 0.5, and sin(pi/2) = 1
    CHECK_THAT(radial.fn({0.6, 0.8}), WithinRel(1.0, 1e-15));
    CHECK_THAT(radial.fn({0.0, 0.0}), WithinAbs(0.0, 1e-15));
}

TEST_CASE("composition builder validates its wiring") {
    CompositionSpec comp;
    comp.dims = {1, 1, 1};
    comp.arity = {1, 1};
    comp.beta = {1.0, 1.0};

    std::vector<std::vector<Component>> levels(2);
    levels[0].push_back({{0}, [](const std::vector<double>& v) { return 2.0 * v[0]; }});
    levels[1].push_back({{0}, [](const std::vector<double>& v) { return v[0] + 1.0; }});

    TargetSpec t = build_composition_target("affine_chain", comp, levels);
    CHECK(t.fn({0.25}) == 1.5);
    CHECK(t.fn({0.0}) == 1.0);

    SECTION("level count must be q+1") {
        std::vector<std::vector<Component>> one(1);
        one[0] = levels[0];
        CHECK_THROWS_AS(build_composition_target("x", comp, one), invalid_argument_error);
    }
    SECTION("component arity is enforced") {
        auto wide = levels;
        wide[0][0].coords = {0, 0};
        CHECK_THROWS_AS(build_composition_target("x", comp, wide), invalid_argument_error);
    }
    SECTION("coordinate indices must exist") {
        auto oob = levels;
        oob[1][0].coords = {1};
        CHECK_THROWS_AS(build_composition_target("x", comp, oob), invalid_argument_error);
    }
    SECTION("missing component function") {
        auto hollow = levels;
        hollow[0][0].fn = nullptr;
        CHECK_THROWS_AS(build_composition_target("x", comp, hollow), invalid_argument_error);
    }
    SECTION("explicit domain must match the input dimension") {
        CHECK_THROWS_AS(build_composition_target("x", comp, levels, unit_cube(2)),
                        invalid_argument_error);
    }
}

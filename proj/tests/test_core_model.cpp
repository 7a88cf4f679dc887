#include "helpers.hpp"
#include "nonlocal_dp/model.hpp"
#include "nonlocal_dp/threading.hpp"

#include <doctest.h>

#include <cstdlib>
#include <random>

using namespace nldp;

TEST_CASE("time grid invariants") {
    TimeGrid t{0.0, 1.0, 4};
    CHECK(t.dt() == doctest::Approx(0.25));
    CHECK_NOTHROW(t.validate());
    CHECK_THROWS_AS((TimeGrid{1.0, 1.0, 4}).validate(), Error);
    CHECK_THROWS_AS((TimeGrid{0.0, 1.0, 0}).validate(), Error);
}

TEST_CASE("space grid indexing round trips") {
    SpaceGrid g;
    g.n = 2;
    g.lower = Vec::Constant(2, -1.0);
    g.upper = Vec::Constant(2, 1.0);
    g.M = {5, 7};
    g.validate();
    CHECK(g.n_cells() == 35);
    for (long c = 0; c < g.n_cells(); ++c) {
        const auto idx = g.unflatten(c);
        CHECK(g.flatten(idx) == c);
        CHECK(g.cell_of(g.point(c)) == c);
    }
    Vec outside(2);
    outside << 5.0, -9.0;
    const auto idx = g.unflatten(g.cell_of(outside));
    CHECK(idx[0] == 4);
    CHECK(idx[1] == 0);
}

TEST_CASE("levy moment matches the two-branch integrand") {
    CHECK(levy_moment({}) == 0.0);

    JumpAtom small{Vec::Constant(1, 0.5), 4.0};
    CHECK(levy_moment(std::vector<JumpAtom>{small}) == doctest::Approx(1.0));

    JumpAtom big{Vec::Constant(1, 3.0), 1.0};
    CHECK(levy_moment(std::vector<JumpAtom>{small, big}) == doctest::Approx(4.0));
}

TEST_CASE("levy moment is additive and degree one in the intensity") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<JumpAtom> a, b;
        for (int i = 0; i < 3; ++i) a.push_back({Vec::Constant(1, u(rng)), u(rng)});
        for (int i = 0; i < 2; ++i) b.push_back({Vec::Constant(1, -u(rng)), u(rng)});
        std::vector<JumpAtom> both = a;
        both.insert(both.end(), b.begin(), b.end());
        CHECK(levy_moment(both) ==
              doctest::Approx(levy_moment(a) + levy_moment(b)).epsilon(1e-12));

        const double lam = u(rng);
        std::vector<JumpAtom> scaled = a;
        for (auto& atom : scaled) atom.lambda *= lam;
        CHECK(levy_moment(scaled) == doctest::Approx(lam * levy_moment(a)).epsilon(1e-12));
    }
}

TEST_CASE("candidate validation reports each violation") {
    Bounds bounds;

    SUBCASE("identity diffusion is admissible") {
        const auto report = validate_param(test::diffusion1d(1.0, 0.0), bounds);
        CHECK(report.ok());
    }
    SUBCASE("degenerate matrix") {
        const auto report = validate_param(test::diffusion1d(0.0, 0.0), bounds);
        REQUIRE_FALSE(report.ok());
        CHECK(report.str().find("not strictly positive definite") != std::string::npos);
    }
    SUBCASE("jump activity above the cap") {
        ParamPoint theta = test::diffusion1d(1.0, 0.0);
        theta.jumps.push_back({Vec::Constant(1, 2.0), 10.0});
        Bounds tight = bounds;
        tight.c_bound = 1.0;
        const auto report = validate_param(theta, tight);
        REQUIRE_FALSE(report.ok());
        CHECK(report.str().find("levy moment 20 > 1") != std::string::npos);
    }
    SUBCASE("asymmetric matrix") {
        ParamPoint theta;
        theta.a = Mat(2, 2);
        theta.a << 1.0, 0.5, -0.5, 1.0;
        theta.b = Vec::Zero(2);
        const auto report = validate_param(theta, bounds);
        REQUIRE_FALSE(report.ok());
        CHECK(report.str().find("not symmetric") != std::string::npos);
    }
}

namespace {

const char* kHeatText = R"(
[time]
r = 0.0
T = 0.5
N = 200

[space]
n = 1
lower = [-6.0]
upper = [6.0]
M = [241]

[gamma]
mode = "constant"

[[gamma.candidates]]
a = [1.0]
b = [0.0]

[penalty]
family = "zero"

[payoff]
family = "quadratic"
)";

const char* kGHeatText = R"(
[time]
r = 0.0
T = 0.5
N = 200

[space]
n = 1
lower = [-6.0]
upper = [6.0]
M = [241]

[gamma]
mode = "constant"

[[gamma.candidates]]
a = [0.25]
b = [0.0]

[[gamma.candidates]]
a = [1.0]
b = [0.0]

[penalty]
family = "zero"

[payoff]
family = "quadratic"
)";

}  // namespace

TEST_CASE("model loading") {
    SUBCASE("singleton heat model") {
        const Model model = load_model(kHeatText);
        CHECK(model.gamma.sets.size() == 1);
        CHECK(model.gamma.sets[0].size() == 1);
        CHECK(model.time.N == 200);
        CHECK(model.space.n_cells() == 241);
    }
    SUBCASE("two-candidate model") {
        const Model model = load_model(kGHeatText);
        CHECK(model.gamma.sets[0].size() == 2);
        CHECK(model.gamma.sets[0][0].a(0, 0) == 0.25);
        CHECK(model.gamma.sets[0][1].a(0, 0) == 1.0);
    }
    SUBCASE("N = 0 is rejected") {
        std::string text = kHeatText;
        const auto pos = text.find("N = 200");
        text.replace(pos, 7, "N = 0");
        CHECK_THROWS_WITH_AS(load_model(text), doctest::Contains("N must be >= 1"), ParseError);
    }
    SUBCASE("parse errors carry the line") {
        try {
            load_model("[time]\nr = oops\n");
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("invariant violations surface the validation report") {
        std::string text = kHeatText;
        const auto pos = text.find("a = [1.0]");
        text.replace(pos, 9, "a = [0.0]");
        CHECK_THROWS_WITH_AS(load_model(text), doctest::Contains("positive definite"), Error);
    }
    SUBCASE("large jumps produce a loader warning") {
        std::string text = kHeatText;
        const auto pos = text.find("b = [0.0]");
        text.insert(pos + 9, "\njumps = [[2.0, 0.5]]");
        const Model model = load_model(text);
        REQUIRE(model.warnings.size() == 1);
        CHECK(model.warnings[0].find("10%") != std::string::npos);
    }
}

TEST_CASE("serialize / load round trip is structurally exact") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        const Model model = test::tiny_random_model(rng);
        const Model again = load_model(serialize_model(model));
        CHECK(model == again);
    }
    const Model heat = load_model(kHeatText);
    CHECK(heat == load_model(serialize_model(heat)));
}

TEST_CASE("time dependent and state dependent candidate sets") {
    Model model = test::heat_model(1.0, 0.0, 0.5, 9, 2.0);
    model.gamma.mode = GammaMode::TimeDependent;
    model.gamma.sets = {{test::diffusion1d(1.0, 0.0)},
                        {test::diffusion1d(0.5, 0.0), test::diffusion1d(1.0, 0.0)}};
    model.gamma.set_for_step.assign(model.time.N, 0);
    model.gamma.set_for_step.back() = 1;
    CHECK_NOTHROW(model.validate());
    CHECK(model.gamma.at(model.time.N - 1, 0).size() == 2);
    CHECK(model == load_model(serialize_model(model)));

    model.gamma.mode = GammaMode::StateDependent;
    model.gamma.set_for_step.clear();
    model.gamma.set_for_cell.assign(model.space.n_cells(), 0);
    model.gamma.set_for_cell[3] = 1;
    CHECK_NOTHROW(model.validate());
    CHECK(model.gamma.at(0, 3).size() == 2);
    CHECK(model == load_model(serialize_model(model)));

    model.gamma.set_for_cell[2] = 7;
    CHECK_THROWS_AS(model.validate(), Error);
}

TEST_CASE("admissible candidates run through every downstream operation") {
    std::mt19937_64 rng(123);
    std::uniform_real_distribution<double> u(-1.5, 1.5);
    const Bounds bounds;
    for (int trial = 0; trial < 30; ++trial) {
        ParamPoint theta = test::diffusion1d(0.1 + std::abs(u(rng)), u(rng));
        if (trial % 3 == 0) theta.jumps.push_back({Vec::Constant(1, 0.3 + std::abs(u(rng))), std::abs(u(rng))});
        REQUIRE(validate_param(theta, bounds).ok());

        Model model = test::heat_model(1.0, 0.0, 0.3, 11, 3.0);
        model.gamma.sets = {{theta}};
        model.time.N = test::stable_steps(model, model.time.T);
        CHECK_NOTHROW(model.validate());
        CHECK_NOTHROW(solve(model, SchemeConfig{}));
        McConfig mc;
        mc.n_paths = 5;
        mc.seed = trial;
        CHECK_NOTHROW(
            sample_path(test::constant_control(model, 0), 0.0, Vec::Zero(1), model, mc, 0));
    }
}

TEST_CASE("thread resolution honours the environment fallback") {
    setenv("NONLOCAL_DP_THREADS", "3", 1);
    CHECK(resolve_threads(0) == 3);
    CHECK(resolve_threads(5) == 5);
    unsetenv("NONLOCAL_DP_THREADS");
    CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("control validation") {
    const Model model = test::gheat_model(0.25, 1.0, 0.5, 9, 2.0);
    Control good = test::constant_control(model, 1);
    CHECK_NOTHROW(good.validate(model.time, model.space, model.gamma));
    CHECK(good.selected(0, 3) == 1);

    Control bad = good;
    bad.selectors[0][0] = 2;
    CHECK_THROWS_AS(bad.validate(model.time, model.space, model.gamma), Error);

    Control wrong_nodes = good;
    wrong_nodes.nodes = {0, model.time.N + 1};
    CHECK_THROWS_AS(wrong_nodes.validate(model.time, model.space, model.gamma), Error);
}

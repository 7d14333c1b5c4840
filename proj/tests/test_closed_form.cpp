#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "explq/closed_form.hpp"
#include "explq/lq.hpp"
#include "explq/rng.hpp"

using namespace explq;

namespace {

ModelParams paper_params(double lambda = 0.1) {
    ModelParams mp;
    mp.a = 1.05;
    mp.b = {0.25};
    mp.d = {0.2};
    mp.a_bar = 1.1;
    mp.c_bar = 0.1;
    mp.rho = 0.2;
    mp.lambda = lambda;
    return mp;
}

ModelParams random_alm_params(Rng& rng) {
    ModelParams mp;
    mp.a = 0.8 + 0.7 * rng.next_uniform();
    mp.a_bar = 0.8 + 0.7 * rng.next_uniform();
    mp.b = {0.05 + 0.45 * rng.next_uniform()};
    mp.d = {0.05 + 0.45 * rng.next_uniform()};
    mp.c = 0.0;
    mp.c_bar = 0.3 * rng.next_uniform();
    mp.rho = 1.8 * rng.next_uniform() - 0.9;
    mp.lambda = 0.01 + 0.99 * rng.next_uniform();
    return mp;
}

}  // namespace

TEST_CASE("one-step closed-form entries match the frozen oracle", "[closed_form]") {
    const ClosedFormSolution cf = closed_form_general(paper_params(), 1);
    REQUIRE(cf.p11[0] == Catch::Approx(0.43024390243902444).epsilon(1e-13));
    REQUIRE(cf.gain_x[0] == Catch::Approx(2.5609756097560976).epsilon(1e-13));
    REQUIRE(cf.g[0] == Catch::Approx(0.1025).epsilon(1e-14));
}

TEST_CASE("terminal row is the squared surplus", "[closed_form]") {
    Rng rng(12);
    for (int i = 0; i < 10; ++i) {
        ModelParams mp = random_alm_params(rng);
        const int T = 1 + static_cast<int>(rng.next_uniform() * 7.0);
        const ClosedFormSolution cf = closed_form_alm(mp, T);
        const double x = rng.next_normal(), y = rng.next_normal();
        REQUIRE(cf.value(T, x, y) == Catch::Approx((x - y) * (x - y)).margin(1e-12));
        REQUIRE(cf.value(T, 0.0, 0.0) == 0.0);
        REQUIRE(cf.value_const[static_cast<std::size_t>(T)] == 0.0);
    }
}

TEST_CASE("ALM liability gain at one step from terminal", "[closed_form]") {
    const ClosedFormSolution cf = closed_form_alm(paper_params(), 1);
    REQUIRE(cf.gain_y[0] == Catch::Approx(-2.7219512195121953).epsilon(1e-13));
}

TEST_CASE("closed forms reproduce the backward recursion", "[closed_form]") {
    Rng rng(2718);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const ModelParams mp = random_alm_params(rng);
        const int T = 1 + static_cast<int>(rng.next_uniform() * 8.0);
        const LqSolution sol = riccati_backward(mp, T);
        const ClosedFormSolution gen = closed_form_general(mp, T);
        const ClosedFormSolution alm = closed_form_alm(mp, T);
        for (int t = 0; t < T; ++t) {
            const std::size_t u = static_cast<std::size_t>(t);
            const RiccatiStage& st = sol.stages[u];
            for (const ClosedFormSolution* cf : {&gen, &alm}) {
                REQUIRE_THAT(cf->p11[u], Catch::Matchers::WithinRel(st.p(0, 0), 1e-10));
                REQUIRE_THAT(cf->p12[u], Catch::Matchers::WithinRel(st.p(0, 1), 1e-10));
                REQUIRE_THAT(cf->p22[u], Catch::Matchers::WithinRel(st.p(1, 1), 1e-10));
                REQUIRE_THAT(cf->g[u], Catch::Matchers::WithinRel(st.g(0, 0), 1e-10));
                REQUIRE_THAT(cf->gain_x[u], Catch::Matchers::WithinRel(st.gain(0, 0), 1e-10));
                REQUIRE_THAT(cf->gain_y[u], Catch::Matchers::WithinRel(st.gain(0, 1), 1e-10));
                REQUIRE_THAT(cf->value_const[u],
                             Catch::Matchers::WithinRel(st.entropy_const, 1e-10));
            }
        }
        ++checked;
    }
    REQUIRE(checked == 100);
}

TEST_CASE("ALM and general closed forms agree entry by entry at c = 0", "[closed_form]") {
    Rng rng(31415);
    for (int trial = 0; trial < 50; ++trial) {
        const ModelParams mp = random_alm_params(rng);
        const int T = 1 + static_cast<int>(rng.next_uniform() * 8.0);
        const ClosedFormSolution gen = closed_form_general(mp, T);
        const ClosedFormSolution alm = closed_form_alm(mp, T);
        for (int t = 0; t <= T; ++t) {
            const std::size_t u = static_cast<std::size_t>(t);
            REQUIRE_THAT(alm.p11[u], Catch::Matchers::WithinRel(gen.p11[u], 1e-12));
            REQUIRE_THAT(alm.p12[u], Catch::Matchers::WithinRel(gen.p12[u], 1e-12));
            REQUIRE_THAT(alm.p22[u], Catch::Matchers::WithinRel(gen.p22[u], 1e-12));
        }
        for (int t = 0; t < T; ++t) {
            const std::size_t u = static_cast<std::size_t>(t);
            REQUIRE_THAT(alm.gain_y[u], Catch::Matchers::WithinRel(gen.gain_y[u], 1e-12));
        }
    }
}

TEST_CASE("deterministic liability telescopes", "[closed_form]") {
    ModelParams mp = paper_params();
    mp.rho = 0.0;
    mp.c_bar = 0.0;
    const int T = 6;
    const ClosedFormSolution cf = closed_form_alm(mp, T);
    const LqSolution sol = riccati_backward(mp, T);
    for (int t = 0; t < T; ++t) {
        const std::size_t u = static_cast<std::size_t>(t);
        REQUIRE_THAT(cf.p12[u], Catch::Matchers::WithinRel(sol.stages[u].p(0, 1), 1e-10));
        // p12^2 / p11 carries the whole cross structure: both are pure
        // powers, so the ratio must itself be the T-t power of its base.
        const double ratio = cf.p12[u] * cf.p12[u] / cf.p11[u];
        const double base = cf.p12[static_cast<std::size_t>(T) - 1] *
                            cf.p12[static_cast<std::size_t>(T) - 1] /
                            cf.p11[static_cast<std::size_t>(T) - 1];
        REQUIRE_THAT(ratio, Catch::Matchers::WithinRel(std::pow(base, T - t), 1e-9));
    }
}

TEST_CASE("degenerate inputs are rejected", "[closed_form]") {
    ModelParams mp = paper_params();
    mp.d = {0.0};
    REQUIRE_THROWS_AS(closed_form_alm(mp, 3), DegenerateDiffusionError);

    ModelParams hedge = paper_params();
    hedge.d = {0.0};  // b stays nonzero: valid model, singular beyond one step
    REQUIRE_NOTHROW(closed_form_general(hedge, 1));
    REQUIRE_THROWS_AS(closed_form_general(hedge, 2), SingularGainError);
}

TEST_CASE("value constant equals the accumulated recursion constant", "[closed_form]") {
    const ModelParams mp = paper_params(0.07);
    const int T = 8;
    const ClosedFormSolution cf = closed_form_alm(mp, T);
    const LqSolution sol = riccati_backward(mp, T);
    for (int t = 0; t < T; ++t)
        REQUIRE_THAT(cf.value_const[static_cast<std::size_t>(t)],
                     Catch::Matchers::WithinRel(sol.stages[static_cast<std::size_t>(t)].entropy_const,
                                                1e-10));
}

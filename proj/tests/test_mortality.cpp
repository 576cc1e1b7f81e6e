#include <doctest.h>

#include <cmath>

#include "annuity/config_io.hpp"
#include "annuity/mortality.hpp"

using namespace annuity;

namespace {

ModelConfig shock_config() { return case_study_config(1500.0, 0.35); }

ModelConfig no_jump_config(double mu0 = 0.044623) {
    ModelConfig cfg = shock_config();
    cfg.pdmp.N = 0;
    cfg.pdmp.lambdas.clear();
    cfg.pdmp.kernel.clear();
    cfg.pdmp.mu0 = mu0;
    return validate_config(cfg);
}

}  // namespace

TEST_CASE("enumerate_states on the single-shock model") {
    const ModelConfig cfg = shock_config();
    const StateTree tree = enumerate_states(cfg);
    REQUIRE(tree.size() == 3);
    CHECK(tree.root().n == 0);
    CHECK(tree.root().mu == doctest::Approx(0.044623));
    CHECK(tree.nodes[1].n == 1);
    CHECK(tree.nodes[1].mu == doctest::Approx(0.044623));
    CHECK(tree.nodes[2].mu == doctest::Approx(0.089246));
    REQUIRE(tree.root().children.size() == 2);
    CHECK(tree.root().children[0].second == doctest::Approx(0.2));
    CHECK(tree.root().children[1].second == doctest::Approx(0.8));
    CHECK(tree.nodes[1].children.empty());
    CHECK(tree.nodes[2].children.empty());
}

TEST_CASE("enumerate_states merges duplicate states") {
    ModelConfig cfg = shock_config();
    const double mu0 = cfg.pdmp.mu0;
    cfg.pdmp.N = 2;
    cfg.pdmp.lambdas = {0.1, 0.1};
    cfg.pdmp.kernel = {
        {0, mu0, {{mu0, 0.2}, {2 * mu0, 0.8}}},
        {1, mu0, {{mu0, 0.2}, {2 * mu0, 0.8}}},
        {1, 2 * mu0, {{2 * mu0, 0.2}, {4 * mu0, 0.8}}},
    };
    cfg = validate_config(cfg);
    const StateTree tree = enumerate_states(cfg);
    // stage 0: mu0; stage 1: {mu0, 2mu0}; stage 2: {mu0, 2mu0, 4mu0} merged
    CHECK(tree.size() == 6);
    CHECK(tree.stage_ids(2).size() == 3);
}

TEST_CASE("enumerate_states single node when N = 0") {
    const ModelConfig cfg = no_jump_config();
    const StateTree tree = enumerate_states(cfg);
    CHECK(tree.size() == 1);
    CHECK(tree.root().children.empty());
    CHECK(tree.root().lambda_next == 0.0);
}

TEST_CASE("enumerate_states respects the node cap") {
    ModelConfig cfg = shock_config();
    CHECK_THROWS_AS(enumerate_states(cfg, 2), TreeTooLargeError);
}

TEST_CASE("annuity factor closed recursion") {
    const ModelConfig cfg = shock_config();
    const StateTree tree = enumerate_states(cfg);
    const double mu0 = cfg.pdmp.mu0;
    const double rho = cfg.market.rho;

    const double f1 = 1.0 / (rho + mu0);
    CHECK(annuity_factor(tree, 1, cfg) == doctest::Approx(f1).epsilon(1e-14));
    CHECK(annuity_factor(tree, 1, cfg) == doctest::Approx(11.7615).epsilon(1e-4));

    // root: hand-rolled recursion as an independent route
    const double f2 = 1.0 / (rho + 2 * mu0);
    const double r0 = rho + mu0 + 0.1;
    const double expected_root = (1.0 + 0.1 * (0.2 * f1 + 0.8 * f2)) / r0;
    CHECK(annuity_factor(tree, 0, cfg) == doctest::Approx(expected_root).epsilon(1e-14));
    CHECK(annuity_factor(tree, 0, cfg) == doctest::Approx(10.011).epsilon(1e-4));
}

TEST_CASE("annuity factor reduces to 1/(rho+mu) without jumps") {
    ModelConfig cfg = shock_config();
    const double mu0 = cfg.pdmp.mu0;
    cfg.pdmp.lambdas = {0.0};  // jump intensity zero at every stage
    cfg = validate_config(cfg);
    const StateTree tree = enumerate_states(cfg);
    for (const auto& node : tree.nodes)
        CHECK(annuity_factor(tree, node.id, cfg) ==
              doctest::Approx(1.0 / (cfg.market.rho + node.mu)).epsilon(1e-14));
    CHECK(annuity_factor(tree, 0, cfg) ==
          doctest::Approx(1.0 / (cfg.market.rho + mu0)).epsilon(1e-14));
}

TEST_CASE("annuity factor bounded by 1/rho") {
    const ModelConfig cfg = shock_config();
    const StateTree tree = enumerate_states(cfg);
    for (const auto& node : tree.nodes) {
        const double f = annuity_factor(tree, node.id, cfg);
        CHECK(f > 0.0);
        CHECK(f <= 1.0 / cfg.market.rho);
    }
}

TEST_CASE("money's worth values") {
    const ModelConfig cfg = shock_config();
    const StateTree tree = enumerate_states(cfg);
    // terminal specialization (rho_hat + mu_hat) / (rho + mu)
    CHECK(moneys_worth(tree, 1, cfg) ==
          doctest::Approx(0.122267 / 0.085023).epsilon(1e-12));
    CHECK(moneys_worth(tree, 1, cfg) == doctest::Approx(1.4381).epsilon(1e-4));
    CHECK(moneys_worth(tree, 2, cfg) == doctest::Approx(0.9431).epsilon(1e-4));
}

TEST_CASE("money's worth equals one for a fair annuity") {
    ModelConfig cfg = no_jump_config();
    cfg.market.rho_hat = cfg.market.rho;
    cfg.market.mu_hat = cfg.pdmp.mu0;
    cfg = validate_config(cfg);
    const StateTree tree = enumerate_states(cfg);
    CHECK(moneys_worth(tree, 0, cfg) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("money's worth inequality strict at every node") {
    const ModelConfig cfg = shock_config();
    const StateTree tree = enumerate_states(cfg);
    const auto fh = moneys_worth_table(tree, cfg);
    for (const auto& node : tree.nodes) {
        double mixed = 0.0;
        for (const auto& [cid, p] : node.children)
            mixed += p * fh[static_cast<std::size_t>(cid)];
        const double lhs = (cfg.market.rho + node.mu) * fh[static_cast<std::size_t>(node.id)];
        const double rhs =
            node.lambda_next * (mixed - fh[static_cast<std::size_t>(node.id)]);
        CHECK(lhs > rhs);
    }
}

TEST_CASE("life expectancy") {
    const ModelConfig cfg = shock_config();
    const StateTree tree = enumerate_states(cfg);
    CHECK(life_expectancy(tree, 1, cfg) ==
          doctest::Approx(1.0 / 0.044623).epsilon(1e-14));
    CHECK(life_expectancy(tree, 1, cfg) == doctest::Approx(22.410).epsilon(1e-4));
    // single-shock tree: matches the reference 16.2162 within 5e-3
    CHECK(std::fabs(life_expectancy(tree, 0, cfg) - 16.2162) < 5e-3);

    // no jumps: exponential lifetime
    const ModelConfig nj = no_jump_config();
    const StateTree njt = enumerate_states(nj);
    CHECK(life_expectancy(njt, 0, nj) ==
          doctest::Approx(1.0 / nj.pdmp.mu0).epsilon(1e-14));
}

TEST_CASE("life expectancy decreases in mu at fixed stage") {
    const ModelConfig cfg = shock_config();
    const StateTree tree = enumerate_states(cfg);
    CHECK(life_expectancy(tree, 1, cfg) > life_expectancy(tree, 2, cfg));
}

TEST_CASE("calibrate baseline and objective") {
    const ModelConfig nj = no_jump_config();
    const double mu0 = calibrate(22.41, CalibrationMode::Baseline, nj);
    CHECK(std::fabs(mu0 - 0.044623) < 1e-6);

    const double mu_hat = calibrate(16.2162, CalibrationMode::Objective, nj);
    CHECK(std::fabs(mu_hat - 0.061667) < 1e-5);

    // round trip on a no-jump model with known mu
    const ModelConfig known = no_jump_config(0.031);
    const double back =
        calibrate(1.0 / 0.031, CalibrationMode::Baseline, known);
    CHECK(back == doctest::Approx(0.031).epsilon(1e-8));
}

TEST_CASE("calibrate reports an empty bracket") {
    const ModelConfig nj = no_jump_config();
    CHECK_THROWS_AS(calibrate(1e7, CalibrationMode::Baseline, nj), NoRootError);
}

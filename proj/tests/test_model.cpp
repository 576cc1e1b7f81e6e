#include <doctest.h>

#include "annuity/config_io.hpp"
#include "annuity/model.hpp"

using namespace annuity;

namespace {

ModelConfig base_config() { return case_study_config(1500.0, 0.35); }

}  // namespace

TEST_CASE("validate_config accepts the case-study parameters") {
    const ModelConfig cfg = base_config();
    CHECK(cfg.market.theta - cfg.market.alpha - cfg.market.rho - cfg.pdmp.mu_min < 0.0);
    CHECK(cfg.pdmp.mu_min == doctest::Approx(0.044623));
    CHECK(cfg.pdmp.mu_max == doctest::Approx(2 * 0.044623));
    // idempotence
    const ModelConfig again = validate_config(cfg);
    CHECK(again.pdmp.mu_min == cfg.pdmp.mu_min);
    CHECK(again.pdmp.mu_max == cfg.pdmp.mu_max);
}

TEST_CASE("validate_config rejects an ill-posed drift") {
    ModelConfig cfg = base_config();
    cfg.market.theta = 0.2;
    cfg.market.alpha = 0.0;
    cfg.market.rho = 0.05;
    cfg.pdmp.mu0 = 0.05;
    cfg.pdmp.kernel = {{0, 0.05, {{0.05, 0.2}, {0.10, 0.8}}}};
    // 0.2 - 0 - 0.05 - 0.05 = 0.1 >= 0
    CHECK_THROWS_AS(validate_config(cfg), IllPosedError);
}

TEST_CASE("validate_config rejects an unnormalized kernel") {
    ModelConfig cfg = base_config();
    const double mu0 = cfg.pdmp.mu0;
    cfg.pdmp.kernel = {{0, mu0, {{mu0, 0.2}, {2 * mu0, 0.7}}}};  // sums to 0.9
    CHECK_THROWS_AS(validate_config(cfg), InvalidDistributionError);
}

TEST_CASE("validate_config range checks") {
    ModelConfig cfg = base_config();
    cfg.market.sigma = 0.0;
    CHECK_THROWS_AS(validate_config(cfg), InvalidParamError);
    cfg = base_config();
    cfg.market.nu = 1.5;
    CHECK_THROWS_AS(validate_config(cfg), InvalidParamError);
    cfg = base_config();
    cfg.pdmp.lambdas = {0.1, 0.2};  // N = 1 expects one entry
    CHECK_THROWS_AS(validate_config(cfg), InvalidParamError);
}

TEST_CASE("effective_rate") {
    const ModelConfig cfg = base_config();
    const double mu0 = cfg.pdmp.mu0;
    CHECK(effective_rate(cfg, 0, mu0) == doctest::Approx(0.185023).epsilon(1e-12));
    // terminal stage: lambda_{N+1} = 0
    CHECK(effective_rate(cfg, 1, mu0) == doctest::Approx(0.0404 + mu0).epsilon(1e-12));
    CHECK(effective_rate(cfg, 1, 2 * mu0) == doctest::Approx(0.129646).epsilon(1e-12));

    // increasing in mu, nonincreasing from stage n to stage N
    CHECK(effective_rate(cfg, 0, 2 * mu0) > effective_rate(cfg, 0, mu0));
    CHECK(effective_rate(cfg, 1, mu0) <= effective_rate(cfg, 0, mu0));
}

TEST_CASE("beta against direct arithmetic") {
    ModelConfig cfg = base_config();
    const double mu0 = cfg.pdmp.mu0;

    // (alpha + nu mu) / (r_n(mu) + alpha - theta), terminal stage
    const double expected = (0.0615 + 0.35 * mu0) / (0.0404 + mu0 + 0.0615 - 0.087858);
    CHECK(beta(cfg, 1, mu0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(beta(cfg, 1, mu0) == doctest::Approx(1.3146).epsilon(5e-4));

    cfg.market.nu = 0.6;
    const ModelConfig cfg6 = validate_config(cfg);
    CHECK(beta(cfg6, 1, 2 * mu0) == doctest::Approx(1.1139).epsilon(5e-4));

    // zero numerator (beta itself needs no validated config)
    ModelConfig cfg0 = base_config();
    cfg0.market.nu = 0.0;
    cfg0.market.alpha = 0.0;
    cfg0.market.theta = 0.02;  // keep the denominator positive
    CHECK(beta(cfg0, 0, mu0) == 0.0);
    CHECK(beta(cfg0, 1, 2 * mu0) == 0.0);
}

TEST_CASE("beta positivity across the reachable states") {
    const ModelConfig cfg = base_config();
    for (int n : {0, 1}) {
        for (double mu : {cfg.pdmp.mu0, 2 * cfg.pdmp.mu0}) {
            const double denom =
                effective_rate(cfg, n, mu) + cfg.market.alpha - cfg.market.theta;
            CHECK(denom > 0.0);
            CHECK(beta(cfg, n, mu) > 0.0);
        }
    }
}

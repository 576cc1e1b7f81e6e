#include "annuity/config_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace annuity {

namespace {

using nlohmann::json;

double require_number(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number()) {
        std::ostringstream os;
        os << "config field '" << key << "' missing or not a number";
        throw InvalidParamError(os.str());
    }
    return j.at(key).get<double>();
}

}  // namespace

ModelConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw InvalidParamError(std::string("config parse error: ") + e.what());
    }

    ModelConfig cfg;
    cfg.market.theta = require_number(j, "theta");
    cfg.market.alpha = require_number(j, "alpha");
    cfg.market.sigma = require_number(j, "sigma");
    cfg.market.rho = require_number(j, "rho");
    cfg.market.rho_hat = require_number(j, "rho_hat");
    cfg.market.mu_hat = require_number(j, "mu_hat");
    cfg.market.K = require_number(j, "K");
    cfg.market.nu = require_number(j, "nu");

    if (!j.contains("N") || !j.at("N").is_number_integer())
        throw InvalidParamError("config field 'N' missing or not an integer");
    cfg.pdmp.N = j.at("N").get<int>();
    cfg.pdmp.mu0 = require_number(j, "mu0");
    if (j.contains("lambdas")) {
        if (!j.at("lambdas").is_array())
            throw InvalidParamError("config field 'lambdas' must be an array");
        for (const auto& v : j.at("lambdas")) cfg.pdmp.lambdas.push_back(v.get<double>());
    }
    if (j.contains("kernel")) {
        if (!j.at("kernel").is_array())
            throw InvalidParamError("config field 'kernel' must be an array");
        for (const auto& e : j.at("kernel")) {
            KernelEntry entry;
            entry.from_stage = e.at("from_stage").get<int>();
            entry.from_mu = require_number(e, "from_mu");
            for (const auto& t : e.at("targets"))
                entry.targets.push_back(
                    KernelTarget{require_number(t, "mu"), require_number(t, "prob")});
            cfg.pdmp.kernel.push_back(std::move(entry));
        }
    }
    return validate_config(cfg);
}

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParamError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string config_to_json(const ModelConfig& cfg) {
    json j;
    j["theta"] = cfg.market.theta;
    j["alpha"] = cfg.market.alpha;
    j["sigma"] = cfg.market.sigma;
    j["rho"] = cfg.market.rho;
    j["rho_hat"] = cfg.market.rho_hat;
    j["mu_hat"] = cfg.market.mu_hat;
    j["K"] = cfg.market.K;
    j["nu"] = cfg.market.nu;
    j["N"] = cfg.pdmp.N;
    j["mu0"] = cfg.pdmp.mu0;
    j["lambdas"] = cfg.pdmp.lambdas;
    json kernel = json::array();
    for (const auto& e : cfg.pdmp.kernel) {
        json targets = json::array();
        for (const auto& t : e.targets)
            targets.push_back({{"mu", t.mu}, {"prob", t.prob}});
        kernel.push_back({{"from_stage", e.from_stage},
                          {"from_mu", e.from_mu},
                          {"targets", targets}});
    }
    j["kernel"] = kernel;
    return j.dump(2);
}

ModelConfig case_study_config(double K, double nu) {
    ModelConfig cfg;
    cfg.market.theta = 0.087858;
    cfg.market.alpha = 0.061500;
    cfg.market.sigma = 0.152952;
    cfg.market.rho = 0.040400;
    cfg.market.rho_hat = 0.060600;
    cfg.market.mu_hat = 0.061667;
    cfg.market.K = K;
    cfg.market.nu = nu;

    const double mu0 = 0.044623;
    cfg.pdmp.N = 1;
    cfg.pdmp.lambdas = {0.1};
    cfg.pdmp.mu0 = mu0;
    cfg.pdmp.kernel = {
        {0, mu0, {{mu0, 0.2}, {2.0 * mu0, 0.8}}},
    };
    return validate_config(cfg);
}

}  // namespace annuity

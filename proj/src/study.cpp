#include "possur/study.hpp"

#include "possur/error.hpp"

namespace possur {

std::string to_string(Scenario s) { return s == Scenario::fwer ? "fwer" : "bcep"; }

Scenario parse_scenario(std::string_view text) {
    if (text == "fwer") return Scenario::fwer;
    if (text == "bcep") return Scenario::bcep;
    throw ConfigError("unknown scenario '" + std::string(text) + "' (fwer|bcep)");
}

std::string to_string(StudyRegion r) { return r == StudyRegion::one_of_two ? "one-of-two" : "primary-plus-one"; }

StudyRegion parse_study_region(std::string_view text) {
    if (text == "one-of-two") return StudyRegion::one_of_two;
    if (text == "primary-plus-one") return StudyRegion::primary_plus_one;
    throw ConfigError("unknown study region '" + std::string(text) + "' (one-of-two|primary-plus-one)");
}

SuccessRegion study_region(StudyRegion r) {
    auto e = [](Index j) { return SuccessRegion::leaf(j, Direction::greater, 0.0); };
    if (r == StudyRegion::one_of_two) return SuccessRegion::any({e(0), e(1)});
    return SuccessRegion::all({e(0), SuccessRegion::any({e(1), e(2)})});
}

PosInputs study_inputs(const StudySpec& spec) {
    const TrialTemplate tmpl = compass_like(spec.correlation);
    PosInputs in;
    in.model = tmpl.model;
    in.validation_history = synthesize(tmpl, spec.historical_n, derive_seed(spec.seed, 0x5eed, 0));
    in.covariates = fit_covariate_chain({{&in.validation_history, 1.0}}, tmpl.chain);
    in.region = study_region(spec.region);
    return in;
}

ValidationSpec study_validation(const StudySpec& spec) {
    ValidationSpec v;
    if (spec.scenario == Scenario::fwer) {
        v.mode = ValidationMode::null_boundary;
        v.null_endpoints = spec.region == StudyRegion::one_of_two ? std::vector<Index>{0, 1} : std::vector<Index>{1, 2};
        v.null_values = {0.0, 0.0};
    } else {
        v.mode = ValidationMode::alternative;
    }
    return v;
}

PosConfig study_config(const StudySpec& spec) {
    PosConfig c;
    c.n = spec.n;
    c.gamma = spec.gamma;
    c.q_rand = 0.5;
    c.inner_draws = spec.inner_draws;
    c.replicates = spec.replicates;
    c.a0 = 0.0;
    c.seed = spec.seed;
    c.comparator = true;
    c.threads = spec.threads;
    return c;
}

PosReport run_study(const StudySpec& spec) {
    return pos_estimate(study_inputs(spec), study_validation(spec), study_config(spec));
}

}  // namespace possur

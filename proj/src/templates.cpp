#include "possur/templates.hpp"

#include <algorithm>

#include "possur/error.hpp"
#include "possur/pos_engine.hpp"

namespace possur {

std::string to_string(Correlation c) {
    switch (c) {
        case Correlation::HN: return "HN";
        case Correlation::LN: return "LN";
        case Correlation::ind: return "ind";
        case Correlation::LP: return "LP";
        case Correlation::HP: return "HP";
    }
    return "?";
}

Correlation parse_correlation(std::string_view text) {
    for (Correlation c : kAllCorrelations)
        if (text == to_string(c)) return c;
    throw ConfigError("unknown correlation setting '" + std::string(text) + "' (HN|LN|ind|LP|HP)");
}

Eigen::Vector3d correlation_vector(Correlation c) {
    switch (c) {
        case Correlation::HN: return {-0.3, -0.4, -0.7};
        case Correlation::LN: return {-0.05, -0.1, -0.2};
        case Correlation::ind: return {0.0, 0.0, 0.0};
        case Correlation::LP: return {0.05, 0.1, 0.2};
        case Correlation::HP: return {0.3, 0.4, 0.7};
    }
    return Eigen::Vector3d::Zero();
}

Eigen::Matrix3d covariance_from(const Eigen::Vector3d& sd, const Eigen::Vector3d& rho, double scale) {
    Eigen::Matrix3d r = Eigen::Matrix3d::Identity();
    r(0, 1) = r(1, 0) = rho(0);
    r(0, 2) = r(2, 0) = rho(1);
    r(1, 2) = r(2, 1) = rho(2);
    return scale * sd.asDiagonal() * r * sd.asDiagonal();
}

namespace {

ConditionalSpec conditional(std::string target, std::vector<std::string> predictors, CovariateFamily family) {
    return {std::move(target), std::move(predictors), family};
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
    Eigen::VectorXd out(static_cast<Index>(v.size()));
    Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TrialTemplate compass_like(Correlation correlation) {
    TrialTemplate t;
    t.name = "compass-like";
    t.default_n = 981;

    // Age, race, insurance, index event (stroke vs TIA), prior stroke, prior
    // TIA, and a baseline severity count that depends on the index event.
    t.chain.conditionals = {
        conditional("age", {}, CovariateFamily::gaussian_identity),
        conditional("white", {}, CovariateFamily::bernoulli_logit),
        conditional("insured", {}, CovariateFamily::bernoulli_logit),
        conditional("stroke_event", {}, CovariateFamily::bernoulli_logit),
        conditional("stroke_hist", {}, CovariateFamily::bernoulli_logit),
        conditional("tia_hist", {}, CovariateFamily::bernoulli_logit),
        conditional("severity", {"stroke_event"}, CovariateFamily::poisson_log),
    };
    t.covariate_truth.coefficients = {vec({68.0}),  vec({0.944}),  vec({1.735}),      vec({1.386}),
                                      vec({-1.099}), vec({-1.735}), vec({0.3, 0.9})};
    t.covariate_truth.precisions = {1.0 / (13.0 * 13.0), 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};

    const std::vector<std::string> covs{"age", "white", "insured", "stroke_event", "stroke_hist", "tia_hist",
                                        "severity"};
    for (int j = 0; j < 3; ++j) t.model.endpoints.push_back({covs, true, Direction::greater, 0.0});

    // Per endpoint: treatment, intercept, then the seven covariates.
    t.theta.beta.resize(27);
    t.theta.beta << 0.0333, 0.50, -0.002, 0.010, 0.020, -0.010, -0.020, -0.010, -0.010,
                    0.1667, 2.00, -0.010, 0.050, 0.100, -0.050, -0.100, 0.050, -0.050,
                    0.5980, 50.0, -0.100, 1.000, 1.500, -1.000, -1.500, 0.500, -0.800;
    t.theta.sigma = covariance_from({0.193, 0.748, 7.422}, correlation_vector(correlation), 0.5);
    return t;
}

TrialTemplate ivacaftor_like() {
    TrialTemplate t;
    t.name = "ivacaftor-like";
    t.default_n = 16;
    t.balanced = true;
    t.chain.conditionals = {
        conditional("sex", {}, CovariateFamily::bernoulli_logit),
        conditional("age", {}, CovariateFamily::gaussian_identity),
        conditional("weight", {"sex"}, CovariateFamily::gaussian_identity),
        conditional("bmi", {"weight"}, CovariateFamily::gaussian_identity),
    };
    t.covariate_truth.coefficients = {vec({0.0}), vec({25.0}), vec({58.0, 10.0}), vec({8.0, 0.22})};
    t.covariate_truth.precisions = {1.0, 1.0 / 81.0, 1.0 / 100.0, 1.0 / 2.25};

    // FEV1 (higher is better), sweat chloride (lower is better), CFQ-R.
    t.model.endpoints = {{{"age", "sex"}, true, Direction::greater, 0.0},
                         {{"age", "sex"}, true, Direction::less, 0.0},
                         {{"age", "sex"}, true, Direction::greater, 0.0}};
    t.theta.beta = Eigen::VectorXd::Zero(12);
    t.theta.beta(0) = 6.4;
    t.theta.beta(4) = -49.1;
    t.theta.beta(8) = 3.5;
    t.theta.sigma = covariance_from({5.12, 12.26, 7.05}, Eigen::Vector3d::Zero());
    return t;
}

TrialTemplate make_template(std::string_view name, Correlation correlation) {
    if (name == "compass-like") return compass_like(correlation);
    if (name == "ivacaftor-like") return ivacaftor_like();
    throw ConfigError("unknown template '" + std::string(name) + "' (compass-like|ivacaftor-like)");
}

TrialDataset synthesize(const TrialTemplate& tmpl, Index n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("synthesized sample size must be positive");
    const CovariatePosterior structure = chain_structure(tmpl.chain);
    Rng rng = make_stream(seed, 0, 7);
    if (!tmpl.balanced) return simulate_trial(tmpl.theta, structure, tmpl.covariate_truth, n, 0.5, tmpl.model, rng);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    z.head(n / 2).setOnes();
    std::shuffle(z.begin(), z.end(), rng);
    return simulate_trial(tmpl.theta, structure, tmpl.covariate_truth, n, 0.5, tmpl.model, rng, &z);
}

}  // namespace possur

#include <doctest.h>

#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "possur/error.hpp"
#include "possur/frequentist.hpp"
#include "possur/pos_engine.hpp"
#include "possur/study.hpp"
#include "possur/templates.hpp"
#include "support.hpp"

using namespace possur;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SuccessRegion gt(Index j, double delta = 0.0) { return SuccessRegion::leaf(j, Direction::greater, delta); }

ModelSpec intercept_model(Index J) {
    ModelSpec m;
    for (Index j = 0; j < J; ++j) m.endpoints.push_back({{}, true, Direction::greater, 0.0});
    return m;
}

// One endpoint, intercept only: y = 1 + effect z + N(0, 1).
PosInputs single_endpoint(Index n_h, double effect, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd y(n_h, 1);
    Eigen::VectorXd z(n_h);
    for (Index i = 0; i < n_h; ++i) {
        z(i) = i % 2;
        y(i, 0) = 1.0 + effect * z(i) + standard_normal_vector(1, rng)(0);
    }
    PosInputs in;
    in.model = intercept_model(1);
    in.validation_history = testing::make_dataset(y, z);
    in.covariates = chain_structure({});
    in.region = gt(0);
    return in;
}

PosConfig small_config(Index B, Index M, Index n, std::uint64_t seed = 1) {
    PosConfig c;
    c.replicates = B;
    c.inner_draws = M;
    c.inner_burn_in = 50;
    c.n = n;
    c.seed = seed;
    c.threads = 1;
    return c;
}

ValidationSpec null_at_zero(Index J) {
    ValidationSpec v;
    v.mode = ValidationMode::null_boundary;
    for (Index j = 0; j < J; ++j) {
        v.null_endpoints.push_back(j);
        v.null_values.push_back(0.0);
    }
    return v;
}

double stddev(const std::vector<double>& x) {
    const double m = testing::mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

}  // namespace

TEST_CASE("validation draws") {
    const TrialTemplate t = compass_like(Correlation::ind);
    const TrialDataset hist = synthesize(t, 400, 11);
    const SurDesignd design = assemble_design(hist, t.model);
    const DnfRegion region = to_dnf(SuccessRegion::any({gt(0), gt(1)}));

    SUBCASE("null boundary fixes the constrained treatment effects exactly") {
        ValidationSpec v;
        v.mode = ValidationMode::null_boundary;
        v.null_endpoints = {1, 2};
        v.null_values = {0.0, 0.0};
        const auto draws = sample_validation_draws(design, v, region, 200, 5);
        REQUIRE(draws.size() == 200);
        for (const auto& d : draws) {
            CHECK(d.beta(design.treatment_index(1)) == 0.0);
            CHECK(d.beta(design.treatment_index(2)) == 0.0);
        }
    }
    SUBCASE("alternative mode over the whole space equals the unconstrained sampler") {
        ValidationSpec u;
        ValidationSpec a;
        a.mode = ValidationMode::alternative;
        a.alternative = gt(0, -kInf);
        double acceptance = 0.0;
        const auto du = sample_validation_draws(design, u, region, 100, 9);
        const auto da = sample_validation_draws(design, a, region, 100, 9, &acceptance);
        CHECK(acceptance == 1.0);
        for (std::size_t i = 0; i < du.size(); ++i) {
            CHECK(du[i].beta == da[i].beta);
            CHECK(du[i].sigma == da[i].sigma);
        }
    }
    SUBCASE("alternative draws all lie in the region") {
        ValidationSpec a;
        a.mode = ValidationMode::alternative;
        a.alternative = gt(0, 0.05);
        const auto draws = sample_validation_draws(design, a, region, 100, 3);
        for (const auto& d : draws) CHECK(d.beta(design.treatment_index(0)) > 0.05);
    }
    SUBCASE("an unreachable alternative is reported") {
        ValidationSpec a;
        a.mode = ValidationMode::alternative;
        a.alternative = gt(0, 1e3);
        a.burn_in = 0;
        a.thin = 1;
        CHECK_THROWS_WITH(sample_validation_draws(design, a, region, 10, 3),
                          doctest::Contains("alternative region nearly null"));
    }
    SUBCASE("unconstrained draws centre on the estimate") {
        const Eigen::VectorXd mle = equationwise_mle(design).beta;
        ValidationSpec u;
        u.thin = 2;
        const auto draws = sample_validation_draws(design, u, region, 4000, 13);
        for (Index j = 0; j < 3; ++j) {
            std::vector<double> x;
            for (const auto& d : draws) x.push_back(d.beta(design.treatment_index(j)));
            CAPTURE(j);
            CHECK(std::abs(testing::mean(x) - mle(design.treatment_index(j))) < 4.0 * testing::batch_se(x));
        }
    }
    SUBCASE("HPD trimming returns the requested count") {
        ValidationSpec v;
        v.hpd = HpdSpec{HpdMethod::log_posterior, 0.5, 1.0};
        CHECK(sample_validation_draws(design, v, region, 60, 1).size() == 60);
        v.hpd = HpdSpec{HpdMethod::kde, 0.5, 1.0};
        CHECK(sample_validation_draws(design, v, region, 60, 1).size() == 60);
    }
}

TEST_CASE("future trial simulation") {
    const TrialTemplate t = compass_like(Correlation::ind);
    const CovariatePosterior structure = chain_structure(t.chain);

    SUBCASE("zero covariance gives outcomes equal to the linear predictor") {
        ThetaDraw theta = t.theta;
        theta.sigma.setZero();
        Rng rng(1);
        const TrialDataset d = simulate_trial(theta, structure, t.covariate_truth, 50, 0.5, t.model, rng);
        const SurDesignd design = assemble_design(d, t.model);
        for (Index j = 0; j < 3; ++j) {
            const Eigen::VectorXd fit = design.block(j) * design.segment(theta.beta, j);
            CHECK((fit - d.outcomes.col(j)).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
    SUBCASE("treated fraction at q = 0.5, n = 10000") {
        Rng rng(2);
        const TrialDataset d = simulate_trial(t.theta, structure, t.covariate_truth, 10000, 0.5, t.model, rng);
        const double frac = d.treatment.mean();
        CHECK(frac >= 0.485);
        CHECK(frac <= 0.515);
    }
    SUBCASE("generated error correlation matches sigma") {
        const double rho = 0.7;
        ModelSpec m = intercept_model(2);
        ThetaDraw theta;
        theta.beta = Eigen::Vector4d(0.0, 1.0, 0.0, 2.0);
        theta.sigma.resize(2, 2);
        theta.sigma << 1.0, rho, rho, 1.0;
        Rng rng(3);
        const TrialDataset d = simulate_trial(theta, chain_structure({}), {}, 10000, 0.5, m, rng);
        const Eigen::VectorXd a = d.outcomes.col(0).array() - d.outcomes.col(0).mean();
        const Eigen::VectorXd b = d.outcomes.col(1).array() - d.outcomes.col(1).mean();
        const double r = a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
        CHECK(std::abs(r - rho) < 0.03);
    }
    SUBCASE("a shorter trial is a prefix of a longer one") {
        const TrialDataset hist = synthesize(t, 300, 5);
        const CovariatePosterior post = fit_covariate_chain({{&hist, 1.0}}, t.chain);
        Rng r1(4), r2(4);
        const TrialDataset small = sample_future_dataset(t.theta, post, 20, 0.5, t.model, r1);
        const TrialDataset big = sample_future_dataset(t.theta, post, 40, 0.5, t.model, r2);
        CHECK(small.treatment == big.treatment.head(20));
        CHECK(small.outcomes == big.outcomes.topRows(20));
    }
    SUBCASE("an unfitted chain is rejected") {
        Rng rng(6);
        CHECK_THROWS_WITH(sample_future_dataset(t.theta, structure, 20, 0.5, t.model, rng),
                          doctest::Contains("has not been fitted"));
    }
}

TEST_CASE("posterior success probability") {
    const PosInputs in = single_endpoint(60, 0.4, 21);
    const GibbsConfig g{4000, 200, 3, 7};

    SUBCASE("whole-space region gives one") {
        CHECK(posterior_success_probability(in.validation_history, in.model, {}, to_dnf(gt(0, -kInf)), g) == 1.0);
    }
    SUBCASE("overwhelming effect") {
        const PosInputs big = single_endpoint(60, 20.0, 22);
        CHECK(posterior_success_probability(big.validation_history, big.model, {}, to_dnf(gt(0)), g) >= 0.999);
    }
    SUBCASE("single endpoint matches the Student-t posterior") {
        const SurDesignd design = assemble_design(in.validation_history, in.model);
        const PvalueSet p = marginal_pvalues(design, in.model);
        const double exact = 1.0 - p.p[0];
        const double mc = posterior_success_probability(in.validation_history, in.model, {}, to_dnf(gt(0)), g);
        CHECK(std::abs(mc - exact) < 3.0 * std::sqrt(exact * (1.0 - exact) / 4000.0));
    }
}

TEST_CASE("POS engine") {
    SUBCASE("whole-space region succeeds in every replicate") {
        PosInputs in = single_endpoint(40, 0.3, 1);
        in.region = gt(0, -kInf);
        const PosReport r = pos_estimate(in, {}, small_config(30, 100, 30));
        CHECK(r.pos_unadjusted == 1.0);
        CHECK(r.pos_adjusted == 1.0);
    }
    SUBCASE("POS is non-increasing in gamma") {
        const PosEngine engine(single_endpoint(40, 0.3, 2), {}, small_config(100, 200, 40));
        double previous = 1.0;
        for (double gamma : {0.5, 0.8, 0.95, 0.99}) {
            const double p = engine.run(40, gamma).pos_unadjusted;
            CHECK(p <= previous);
            previous = p;
        }
    }
    SUBCASE("determinism and thread independence") {
        const PosInputs in = single_endpoint(40, 0.3, 3);
        PosConfig c = small_config(40, 100, 30, 77);
        const PosReport a = pos_estimate(in, {}, c);
        const PosReport b = pos_estimate(in, {}, c);
        c.threads = 3;
        const PosReport t = pos_estimate(in, {}, c);
        CHECK(a.pos_unadjusted == b.pos_unadjusted);
        CHECK(a.mean_posterior_probability == b.mean_posterior_probability);
        CHECK(a.pos_unadjusted == t.pos_unadjusted);
        CHECK(a.mean_posterior_probability == t.mean_posterior_probability);
        CHECK(a.subset_pos == t.subset_pos);
    }
    SUBCASE("no adjustment when every subset clears 1 - gamma") {
        StudySpec s;
        s.scenario = Scenario::bcep;
        s.replicates = 60;
        s.inner_draws = 300;
        s.historical_n = 400;
        s.n = 200;
        s.threads = 1;
        const PosReport r = run_study(s);
        REQUIRE(r.subset_pos.size() == 4);
        REQUIRE(r.subset_pos[1] >= 0.05);
        REQUIRE(r.subset_pos[2] >= 0.05);
        CHECK(r.pos_adjusted <= r.pos_unadjusted);
        if (r.subset_pos[3] >= 0.05) {
            const double ie = r.subset_pos[1] + r.subset_pos[2] - r.subset_pos[3];
            CHECK(r.pos_adjusted == doctest::Approx(ie).epsilon(1e-12));
        }
    }
    SUBCASE("n must exceed p + J") {
        const PosEngine engine(single_endpoint(40, 0.3, 4), {}, small_config(5, 10, 30));
        CHECK_THROWS_AS(engine.run(2), ConfigError);
    }
}

TEST_CASE("POS curves") {
    SUBCASE("null boundary: flat at 1 - gamma") {
        const PosEngine engine(single_endpoint(60, 0.0, 5), null_at_zero(1), small_config(1000, 400, 40));
        for (const PosReport& r : engine.curve({40, 80, 160})) {
            CAPTURE(r.n);
            const double se = std::sqrt(0.05 * 0.95 / 1000.0);
            CHECK(std::abs(r.pos_unadjusted - 0.05) < 3.0 * se);
        }
    }
    SUBCASE("true effect: non-decreasing up to 2 MC SE") {
        const PosEngine engine(single_endpoint(200, 0.5, 6), {}, small_config(600, 300, 20));
        const auto curve = engine.curve({20, 40, 80, 160});
        for (std::size_t i = 1; i < curve.size(); ++i) {
            const double se = std::hypot(curve[i].mc_se, curve[i - 1].mc_se);
            CHECK(curve[i].pos_unadjusted >= curve[i - 1].pos_unadjusted - 2.0 * se);
        }
        CHECK(curve.back().pos_unadjusted > curve.front().pos_unadjusted);
    }
    SUBCASE("grid must be increasing") {
        const PosEngine engine(single_endpoint(40, 0.3, 7), {}, small_config(5, 10, 30));
        CHECK_THROWS_AS(engine.curve({}), ConfigError);
        CHECK_THROWS_AS(engine.curve({50, 40}), ConfigError);
    }
}

// 20 seeds leave the SD ratio with ~30% relative noise; 200 seeds bring the
// [1.6, 2.6] band to about 3 standard errors around 2.
TEST_CASE("Monte Carlo spread halves when B quadruples") {
    const PosInputs in = single_endpoint(60, 0.3, 8);
    std::vector<double> small, large;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        small.push_back(pos_estimate(in, {}, small_config(100, 100, 40, seed)).pos_unadjusted);
        large.push_back(pos_estimate(in, {}, small_config(400, 100, 40, 1000 + seed)).pos_unadjusted);
    }
    const double ratio = stddev(small) / stddev(large);
    CAPTURE(ratio);
    CHECK(ratio >= 1.6);
    CHECK(ratio <= 2.6);
}

TEST_CASE("configuration errors") {
    PosConfig c;
    c.gamma = 1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = PosConfig{};
    c.q_rand = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = PosConfig{};
    c.replicates = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = PosConfig{};
    c.a0 = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);

    ValidationSpec v;
    v.mode = ValidationMode::null_boundary;
    CHECK_THROWS_AS(v.validate(3), ConfigError);
    v.null_endpoints = {3};
    v.null_values = {0.0};
    CHECK_THROWS_AS(v.validate(3), ConfigError);
    v.null_endpoints = {0, 1};
    CHECK_THROWS_AS(v.validate(3), ConfigError);
    CHECK(parse_validation_mode("null-boundary") == ValidationMode::null_boundary);
    CHECK_THROWS_AS(parse_validation_mode("bogus"), ConfigError);

    PosInputs in = single_endpoint(40, 0.3, 9);
    PosConfig with_a0 = small_config(5, 10, 30);
    with_a0.a0 = 0.5;
    CHECK_THROWS_WITH(PosEngine(in, {}, with_a0), doctest::Contains("older historical"));
    in.model.endpoints[0].covariates = {"age"};
    CHECK_THROWS_AS(PosEngine(in, {}, small_config(5, 10, 30)), ConfigError);
}

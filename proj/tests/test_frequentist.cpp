#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>

#include "possur/error.hpp"
#include "possur/frequentist.hpp"
#include "possur/templates.hpp"
#include "support.hpp"

using namespace possur;

namespace {

SuccessRegion gt(Index j) { return SuccessRegion::leaf(j, Direction::greater, 0.0); }

// Estimates chosen so that the one-sided p-values for {b_1j > 0} equal `p`.
PvalueSet pset(std::vector<double> p) {
    PvalueSet s;
    const boost::math::students_t t(10.0);
    for (double v : p) s.estimate.push_back(v <= 0.0 ? 1e6 : boost::math::quantile(boost::math::complement(t, v)));
    s.std_error.assign(p.size(), 1.0);
    s.dof.assign(p.size(), 10.0);
    s.p = std::move(p);
    return s;
}

ModelSpec intercept_model(Index J) {
    ModelSpec m;
    for (Index j = 0; j < J; ++j) m.endpoints.push_back({{}, true, Direction::greater, 0.0});
    return m;
}

}  // namespace

TEST_CASE("marginal p-values") {
    SUBCASE("zero t statistic gives one half") {
        Eigen::VectorXd y(6), z(6);
        y << 1, 2, 3, 1, 2, 3;
        z << 1, 1, 1, 0, 0, 0;
        TrialDataset d;
        d.outcomes = y;
        d.treatment = z;
        d.covariates.resize(6, 0);
        const PvalueSet p = marginal_pvalues(d, intercept_model(1));
        CHECK(std::abs(p.estimate[0]) < 1e-12);
        CHECK(p.p[0] == doctest::Approx(0.5).epsilon(1e-9));
        CHECK(p.dof[0] == 4.0);
    }
    SUBCASE("noiseless positive effect") {
        Eigen::VectorXd y(6), z(6);
        z << 1, 1, 1, 0, 0, 0;
        y = 2.0 + 1.5 * z.array();
        TrialDataset d;
        d.outcomes = y;
        d.treatment = z;
        d.covariates.resize(6, 0);
        CHECK(marginal_pvalues(d, intercept_model(1)).p[0] < 1e-10);
    }
    SUBCASE("direction and threshold") {
        Rng rng(1);
        const SurDesignd design = testing::random_design(40, 1, 1, rng);
        ModelSpec greater = intercept_model(1);
        greater.endpoints[0].covariates = {"c"};
        ModelSpec less = greater;
        less.endpoints[0].direction = Direction::less;
        const PvalueSet g = marginal_pvalues(design, greater), l = marginal_pvalues(design, less);
        CHECK(g.p[0] + l.p[0] == doctest::Approx(1.0));
        CHECK(g.p_for({0, Direction::less, 0.0}) == doctest::Approx(l.p[0]));
    }
    SUBCASE("needs n > p_j + 2") {
        Eigen::MatrixXd y(3, 1);
        y << 1, 2, 3;
        Eigen::MatrixXd b(3, 2);
        b << 1, 1, 0, 1, 1, 1;
        CHECK_THROWS_AS(marginal_pvalues(SurDesignd(y, {b}), intercept_model(1)), Error);
    }
}

TEST_CASE("p-values are uniform under the null") {
    Rng rng(2);
    std::vector<double> ps;
    for (int rep = 0; rep < 1000; ++rep) {
        Eigen::MatrixXd y(50, 1);
        Eigen::MatrixXd b(50, 2);
        for (Index i = 0; i < 50; ++i) {
            b(i, 0) = i % 2;
            b(i, 1) = 1.0;
            y(i, 0) = 3.0 + standard_normal_vector(1, rng)(0);
        }
        ps.push_back(marginal_pvalues(SurDesignd(y, {b}), intercept_model(1)).p[0]);
    }
    CHECK(testing::ks_distance(ps, [](double u) { return std::clamp(u, 0.0, 1.0); }) < 0.05);
}

TEST_CASE("Holm rules on the worked examples") {
    const DnfRegion one_of_two = to_dnf(SuccessRegion::any({gt(0), gt(1)}));
    const DnfRegion composite = to_dnf(SuccessRegion::all({gt(0), SuccessRegion::any({gt(1), gt(2)})}));
    CHECK(classify_region(to_dnf(gt(2))) == RegionShape::single);
    CHECK(classify_region(one_of_two) == RegionShape::union_of_two);
    CHECK(classify_region(composite) == RegionShape::primary_and_union);

    CHECK(holm_composite_decision(pset({0.01, 0.20}), one_of_two, 0.05));
    CHECK(holm_composite_decision(pset({0.03, 0.04}), one_of_two, 0.05));
    CHECK_FALSE(holm_composite_decision(pset({0.03, 0.06}), one_of_two, 0.05));
    for (double p2 : {0.0, 0.001, 0.5})
        for (double p3 : {0.0, 0.001, 0.5}) CHECK_FALSE(holm_composite_decision(pset({0.06, p2, p3}), composite, 0.05));
    CHECK(holm_composite_decision(pset({0.01, 0.02, 0.9}), composite, 0.05));
    CHECK(holm_composite_decision(pset({0.04}), to_dnf(gt(0)), 0.05));

    const DnfRegion three = to_dnf(SuccessRegion::any({gt(0), gt(1), gt(2)}));
    CHECK_THROWS_WITH(holm_composite_decision(pset({0.01, 0.01, 0.01}), three, 0.05),
                      doctest::Contains("no frequentist rule defined"));
}

TEST_CASE("property: Holm decisions are order-invariant and monotone") {
    const DnfRegion ab = to_dnf(SuccessRegion::any({gt(0), gt(1)}));
    const DnfRegion ba = to_dnf(SuccessRegion::any({gt(1), gt(0)}));
    const DnfRegion comp = to_dnf(SuccessRegion::all({gt(0), SuccessRegion::any({gt(1), gt(2)})}));
    const DnfRegion comp_swapped = to_dnf(SuccessRegion::all({SuccessRegion::any({gt(2), gt(1)}), gt(0)}));
    Rng rng(3);
    std::uniform_real_distribution<double> u(0.0, 0.12);
    for (int rep = 0; rep < 2000; ++rep) {
        const std::vector<double> p{u(rng), u(rng), u(rng)};
        CHECK(holm_composite_decision(pset(p), ab, 0.05) == holm_composite_decision(pset(p), ba, 0.05));
        CHECK(holm_composite_decision(pset(p), comp, 0.05) == holm_composite_decision(pset(p), comp_swapped, 0.05));
        for (std::size_t k = 0; k < 3; ++k) {
            std::vector<double> lower = p;
            lower[k] *= 0.5;
            if (holm_composite_decision(pset(p), comp, 0.05)) CHECK(holm_composite_decision(pset(lower), comp, 0.05));
            if (holm_composite_decision(pset(p), ab, 0.05)) CHECK(holm_composite_decision(pset(lower), ab, 0.05));
        }
    }
}

TEST_CASE("Holm union rule controls FWER under the null boundary") {
    const DnfRegion region = to_dnf(SuccessRegion::any({gt(0), gt(1)}));
    const int reps = 1000;
    const double se = std::sqrt(0.05 * 0.95 / reps);
    for (Correlation c : kAllCorrelations) {
        CAPTURE(to_string(c));
        TrialTemplate t = compass_like(c);
        for (Index j = 0; j < 3; ++j) t.theta.beta(9 * j) = 0.0;
        int rejections = 0;
        for (int rep = 0; rep < reps; ++rep) {
            const TrialDataset d = synthesize(t, 300, 7000 + static_cast<std::uint64_t>(rep));
            rejections += holm_composite_decision(marginal_pvalues(d, t.model), region, 0.05) ? 1 : 0;
        }
        CHECK(static_cast<double>(rejections) / reps <= 0.05 + 3.0 * se);
    }
}

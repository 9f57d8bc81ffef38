#include "possur/frequentist.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "possur/error.hpp"

namespace possur {

double PvalueSet::p_for(const Event& event) const {
    const auto j = static_cast<std::size_t>(event.endpoint);
    if (j >= estimate.size()) throw Error("p-value requested for an unknown endpoint");
    const double diff = estimate[j] - event.delta;
    const double signed_diff = event.direction == Direction::greater ? diff : -diff;
    if (std_error[j] == 0.0) {
        if (signed_diff > 0.0) return 0.0;
        return signed_diff < 0.0 ? 1.0 : 0.5;
    }
    const boost::math::students_t t(dof[j]);
    return boost::math::cdf(boost::math::complement(t, signed_diff / std_error[j]));
}

PvalueSet marginal_pvalues(const SurDesignd& design, const ModelSpec& spec) {
    if (spec.J() != design.J()) throw ConfigError("model spec and design disagree on the endpoint count");
    PvalueSet out;
    for (Index j = 0; j < design.J(); ++j) {
        const auto& x = design.block(j);
        const Index cols = x.cols();
        if (design.n() <= cols + 1)
            throw ConfigError("marginal regression for endpoint " + std::to_string(j + 1) +
                              " needs n > p_j + 2");
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        qr.setThreshold(kRankTolerance);
        if (qr.rank() < cols)
            throw Error("marginal regression for endpoint " + std::to_string(j + 1) + " is rank deficient");
        const Eigen::VectorXd coef = qr.solve(design.outcomes().col(j));
        const double df = static_cast<double>(design.n() - cols);
        const double s2 = (design.outcomes().col(j) - x * coef).squaredNorm() / df;
        // (X'X)^{-1}_00 from R of the pivoted QR.
        const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(cols, cols).triangularView<Eigen::Upper>();
        const Eigen::MatrixXd rinv =
            r.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(cols, cols));
        const Eigen::MatrixXd xtx_inv_perm = rinv * rinv.transpose();
        const Eigen::MatrixXd xtx_inv =
            qr.colsPermutation() * xtx_inv_perm * qr.colsPermutation().transpose();
        out.estimate.push_back(coef(0));
        out.std_error.push_back(std::sqrt(std::max(0.0, s2 * xtx_inv(0, 0))));
        out.dof.push_back(df);
        const auto& ep = spec.endpoints[static_cast<std::size_t>(j)];
        out.p.push_back(out.p_for({j, ep.direction, ep.delta}));
    }
    return out;
}

PvalueSet marginal_pvalues(const TrialDataset& data, const ModelSpec& spec) {
    return marginal_pvalues(assemble_design(data, spec), spec);
}

namespace {

[[noreturn]] void unsupported(const DnfRegion& region) {
    throw ConfigError("no frequentist rule defined for region " + region.describe());
}

}  // namespace

RegionShape classify_region(const DnfRegion& region) {
    const auto& c = region.clauses;
    if (c.size() == 1 && c[0].events.size() == 1) return RegionShape::single;
    if (c.size() == 2 && c[0].events.size() == 1 && c[1].events.size() == 1 &&
        c[0].events[0].endpoint != c[1].events[0].endpoint)
        return RegionShape::union_of_two;
    if (c.size() == 2 && c[0].events.size() == 2 && c[1].events.size() == 2) {
        for (const auto& primary : c[0].events) {
            if (std::find(c[1].events.begin(), c[1].events.end(), primary) == c[1].events.end()) continue;
            const Event& a = c[0].events[0] == primary ? c[0].events[1] : c[0].events[0];
            const Event& b = c[1].events[0] == primary ? c[1].events[1] : c[1].events[0];
            if (a.endpoint != b.endpoint && a.endpoint != primary.endpoint && b.endpoint != primary.endpoint)
                return RegionShape::primary_and_union;
        }
    }
    unsupported(region);
}

namespace {

bool holm_union(double p1, double p2, double alpha) {
    return std::min(p1, p2) < alpha / 2.0 || std::max(p1, p2) < alpha;
}

}  // namespace

bool holm_composite_decision(const PvalueSet& pvals, const DnfRegion& region, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    const auto& c = region.clauses;
    switch (classify_region(region)) {
        case RegionShape::single: return pvals.p_for(c[0].events[0]) < alpha;
        case RegionShape::union_of_two:
            return holm_union(pvals.p_for(c[0].events[0]), pvals.p_for(c[1].events[0]), alpha);
        case RegionShape::primary_and_union: {
            const Event* primary = nullptr;
            for (const auto& e : c[0].events)
                if (std::find(c[1].events.begin(), c[1].events.end(), e) != c[1].events.end()) primary = &e;
            const Event& a = c[0].events[0] == *primary ? c[0].events[1] : c[0].events[0];
            const Event& b = c[1].events[0] == *primary ? c[1].events[1] : c[1].events[0];
            return pvals.p_for(*primary) < alpha && holm_union(pvals.p_for(a), pvals.p_for(b), alpha);
        }
    }
    return false;
}

}  // namespace possur

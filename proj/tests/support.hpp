#pragma once

// Shared builders and statistical helpers for the unit tests.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "possur/dataset.hpp"
#include "possur/random.hpp"
#include "possur/sur_core.hpp"

namespace testing {

using possur::Index;

inline possur::TrialDataset make_dataset(const Eigen::MatrixXd& outcomes, const Eigen::VectorXd& treatment,
                                         const Eigen::MatrixXd& covariates = {},
                                         std::vector<std::string> names = {}) {
    possur::TrialDataset d;
    d.outcomes = outcomes;
    d.treatment = treatment;
    d.covariates = covariates.size() ? covariates : Eigen::MatrixXd(outcomes.rows(), 0);
    for (auto& n : names) d.columns.push_back({n, possur::CovariateKind::continuous});
    return d;
}

/// Random SUR design with J endpoints sharing `k` continuous covariates.
/// Endpoint j uses an intercept and the first min(j+1, k) covariates.
inline possur::SurDesignd random_design(Index n, Index J, Index k, possur::Rng& rng, bool shared = false) {
    std::normal_distribution<double> norm;
    std::bernoulli_distribution coin(0.5);
    Eigen::MatrixXd cov(n, k);
    Eigen::VectorXd z(n);
    for (Index i = 0; i < n; ++i) {
        z(i) = coin(rng) ? 1.0 : 0.0;
        for (Index c = 0; c < k; ++c) cov(i, c) = norm(rng);
    }
    std::vector<Eigen::MatrixXd> blocks;
    Eigen::MatrixXd y(n, J);
    for (Index j = 0; j < J; ++j) {
        const Index used = shared ? k : std::min<Index>(j + 1, k);
        Eigen::MatrixXd b(n, used + 2);
        b.col(0) = z;
        b.col(1).setOnes();
        b.rightCols(used) = cov.leftCols(used);
        blocks.push_back(b);
    }
    Eigen::MatrixXd corr(J, J);
    for (Index a = 0; a < J; ++a)
        for (Index c = 0; c < J; ++c) corr(a, c) = a == c ? 1.0 : 0.4;
    const Eigen::MatrixXd root = corr.llt().matrixL();
    for (Index i = 0; i < n; ++i) {
        const Eigen::VectorXd e = root * possur::standard_normal_vector(J, rng);
        for (Index j = 0; j < J; ++j) {
            const auto& b = blocks[static_cast<std::size_t>(j)];
            y(i, j) = 0.5 * b(i, 0) + 1.0 + 0.3 * b.row(i).tail(b.cols() - 2).sum() + e(j);
        }
    }
    return possur::SurDesignd(y, blocks);
}

/// Kolmogorov-Smirnov distance between a sample and a continuous cdf.
template <typename Cdf>
double ks_distance(std::vector<double> x, Cdf cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    return d;
}

/// Standard error of the mean of a correlated series, by non-overlapping batch means.
inline double batch_se(const std::vector<double>& x, Index batches = 20) {
    const Index size = static_cast<Index>(x.size()) / batches;
    std::vector<double> means;
    for (Index b = 0; b < batches; ++b) {
        double s = 0.0;
        for (Index i = 0; i < size; ++i) s += x[static_cast<std::size_t>(b * size + i)];
        means.push_back(s / static_cast<double>(size));
    }
    double m = 0.0;
    for (double v : means) m += v;
    m /= static_cast<double>(batches);
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(batches - 1) / static_cast<double>(batches));
}

inline double mean(const std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

}  // namespace testing

#include "possur/hpd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "possur/error.hpp"

namespace possur {

std::string to_string(HpdMethod method) { return method == HpdMethod::kde ? "kde" : "log-posterior"; }

HpdMethod parse_hpd_method(std::string_view text) {
    if (text == "kde") return HpdMethod::kde;
    if (text == "log-posterior" || text == "logpost") return HpdMethod::log_posterior;
    throw ConfigError("unknown HPD method '" + std::string(text) + "'");
}

void HpdSpec::validate() const {
    if (!(q_hpd > 0.0 && q_hpd <= 1.0)) throw ConfigError("HPD fraction must lie in (0,1]");
    if (!(bandwidth_scale > 0.0) || !std::isfinite(bandwidth_scale))
        throw ConfigError("KDE bandwidth scale must be positive");
}

Index retained_count(Index n, double q_hpd) {
    const auto k = static_cast<Index>(std::ceil(q_hpd * static_cast<double>(n) - 1e-9));
    return std::clamp<Index>(k, 1, n);
}

std::vector<Index> top_fraction(const Eigen::VectorXd& score, double q_hpd) {
    if (score.size() == 0) throw Error("HPD trimming of an empty draw set");
    std::vector<Index> order(static_cast<std::size_t>(score.size()));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return score(a) > score(b); });
    order.resize(static_cast<std::size_t>(retained_count(score.size(), q_hpd)));
    std::sort(order.begin(), order.end());
    return order;
}

double sur_log_posterior(const SurDesignd& design, const ThetaDraw& draw) {
    const Eigen::LLT<Eigen::MatrixXd> llt(draw.sigma);
    if (llt.info() != Eigen::Success) throw NumericalError("log-posterior of a non-PD covariance draw");
    const double log_det_sigma = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    const Eigen::MatrixXd w = llt.solve(Eigen::MatrixXd::Identity(design.J(), design.J()));
    const double trace = kronecker_quadratic_form<double>(design, draw.beta, w);
    const double a = 0.5 * static_cast<double>(design.n() - design.J() - 1);
    return -a * log_det_sigma - 0.5 * trace;
}

std::vector<Index> hpd_indices_logpost(const std::vector<ThetaDraw>& draws, const SurDesignd& design,
                                       double q_hpd) {
    if (draws.empty()) throw Error("HPD trimming of an empty draw set");
    if (draws.size() < 10) throw ConfigError("log-posterior HPD trimming needs at least 10 draws");
    if (!(q_hpd > 0.0 && q_hpd <= 1.0)) throw ConfigError("HPD fraction must lie in (0,1]");
    Eigen::VectorXd score(static_cast<Index>(draws.size()));
    for (std::size_t i = 0; i < draws.size(); ++i) score(static_cast<Index>(i)) = sur_log_posterior(design, draws[i]);
    return top_fraction(score, q_hpd);
}

std::vector<ThetaDraw> hpd_filter_logpost(const std::vector<ThetaDraw>& draws, const SurDesignd& design,
                                          double q_hpd) {
    std::vector<ThetaDraw> out;
    for (Index i : hpd_indices_logpost(draws, design, q_hpd)) out.push_back(draws[static_cast<std::size_t>(i)]);
    return out;
}

Eigen::VectorXd kde_density(const Eigen::MatrixXd& points, double bandwidth_scale) {
    const Index n = points.rows();
    const Index k = points.cols();
    if (n < 2 || k < 1) throw ConfigError("KDE needs at least two points in one dimension");
    const Eigen::RowVectorXd mean = points.colwise().mean();
    const Eigen::RowVectorXd sd =
        ((points.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(n - 1)).sqrt();
    if ((sd.array() <= 0.0).any()) throw NumericalError("degenerate treatment draws");
    const double factor = bandwidth_scale * std::pow(static_cast<double>(n), -1.0 / static_cast<double>(k + 4));
    const Eigen::RowVectorXd inv_h = (sd * factor).cwiseInverse();
    const Eigen::MatrixXd scaled = points * inv_h.asDiagonal();
    // Points are swept in order of the first coordinate and pairs
    // further apart than kKernelCutoff bandwidths there are skipped (their
    // kernel weight is below 1e-13).
    constexpr double kKernelCutoff = 7.75;
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scaled(a, 0) < scaled(b, 0); });
    Eigen::VectorXd density = Eigen::VectorXd::Zero(n);
    for (std::size_t a = 0; a < order.size(); ++a) {
        const Index i = order[a];
        density(i) += 1.0;
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            const Index j = order[b];
            if (scaled(j, 0) - scaled(i, 0) > kKernelCutoff) break;
            const double w = std::exp(-0.5 * (scaled.row(i) - scaled.row(j)).squaredNorm());
            density(i) += w;
            density(j) += w;
        }
    }
    const double norm = static_cast<double>(n) * std::pow(2.0 * M_PI, 0.5 * static_cast<double>(k)) *
                        (sd * factor).prod();
    density /= norm;
    return density;
}

std::vector<Index> hpd_filter_kde(const Eigen::MatrixXd& treatment_draws, double q_hpd, double bandwidth_scale) {
    if (treatment_draws.rows() == 0) throw Error("HPD trimming of an empty draw set");
    if (treatment_draws.rows() < 50) throw ConfigError("KDE HPD trimming needs at least 50 draws");
    if (!(q_hpd > 0.0 && q_hpd <= 1.0)) throw ConfigError("HPD fraction must lie in (0,1]");
    return top_fraction(kde_density(treatment_draws, bandwidth_scale), q_hpd);
}

}  // namespace possur

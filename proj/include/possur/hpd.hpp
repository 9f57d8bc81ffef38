#pragma once

// Highest-posterior-density trimming of validation draws.

#include <Eigen/Dense>
#include <string_view>
#include <vector>

#include "possur/sur_core.hpp"

namespace possur {

enum class HpdMethod { log_posterior, kde };

std::string to_string(HpdMethod method);
HpdMethod parse_hpd_method(std::string_view text);

struct HpdSpec {
    HpdMethod method = HpdMethod::log_posterior;
    double q_hpd = 1.0;
    /// Multiplies the Scott bandwidth (kde only).
    double bandwidth_scale = 1.0;

    void validate() const;
};

/// ceil(q * n), at least 1.
Index retained_count(Index n, double q_hpd);

/// log p(beta, W | D) up to a constant under the reference prior, with
/// W = Sigma^{-1}: ((n - J - 1)/2) log|W| - tr(R(beta) W)/2.
double sur_log_posterior(const SurDesignd& design, const ThetaDraw& draw);

/// Indices (ascending) of the ceil(q N) draws with the largest log-posterior.
std::vector<Index> hpd_indices_logpost(const std::vector<ThetaDraw>& draws, const SurDesignd& design,
                                       double q_hpd);
std::vector<ThetaDraw> hpd_filter_logpost(const std::vector<ThetaDraw>& draws, const SurDesignd& design,
                                          double q_hpd);

/// Gaussian product-kernel density of each row of `points` (N x K), leave-self-in,
/// bandwidth h_k = scale * sd_k * N^{-1/(K+4)}.
Eigen::VectorXd kde_density(const Eigen::MatrixXd& points, double bandwidth_scale = 1.0);

/// Indices (ascending) of the ceil(q N) rows with the largest KDE density.
std::vector<Index> hpd_filter_kde(const Eigen::MatrixXd& treatment_draws, double q_hpd,
                                  double bandwidth_scale = 1.0);

/// Indices (ascending) of the ceil(q N) largest scores; ties go to the lower index.
std::vector<Index> top_fraction(const Eigen::VectorXd& score, double q_hpd);

}  // namespace possur

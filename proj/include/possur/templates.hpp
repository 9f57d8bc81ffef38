#pragma once

// Generative parameter sets for synthetic historical trials.

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <string_view>

#include "possur/covariate_model.hpp"
#include "possur/dataset.hpp"
#include "possur/sur_core.hpp"

namespace possur {

/// Correlation settings (rho12, rho13, rho23): high/low negative,
/// independent, low/high positive.
enum class Correlation { HN, LN, ind, LP, HP };

std::string to_string(Correlation c);
Correlation parse_correlation(std::string_view text);
Eigen::Vector3d correlation_vector(Correlation c);
inline constexpr Correlation kAllCorrelations[] = {Correlation::HN, Correlation::LN, Correlation::ind,
                                                   Correlation::LP, Correlation::HP};

struct TrialTemplate {
    std::string name;
    ModelSpec model;
    CovariateChainSpec chain;
    CovariateParams covariate_truth;
    ThetaDraw theta;  // canonical beta layout for `model`
    Index default_n = 0;
    /// Exact 1:1 allocation instead of Bernoulli(1/2).
    bool balanced = false;
};

/// Three endpoints sharing seven covariates and an intercept; covariance
/// 0.5 D R D with D the endpoint standard deviations.
TrialTemplate compass_like(Correlation correlation = Correlation::ind);

/// Small three-endpoint trial (n = 16, 8 per arm) with independent errors and
/// zero nuisance effects; endpoints use intercept, age and sex.
TrialTemplate ivacaftor_like();

TrialTemplate make_template(std::string_view name, Correlation correlation = Correlation::ind);

TrialDataset synthesize(const TrialTemplate& tmpl, Index n, std::uint64_t seed);

/// Symmetric covariance from standard deviations and (rho12, rho13, rho23).
Eigen::Matrix3d covariance_from(const Eigen::Vector3d& sd, const Eigen::Vector3d& rho, double scale = 1.0);

}  // namespace possur

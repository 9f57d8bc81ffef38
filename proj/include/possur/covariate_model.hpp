#pragma once

// Factorized covariate distribution f(x | alpha) = prod_l f(x_l | x_<l, alpha_l),
// each factor a GLM with intercept, fitted under covariate power priors.

#include <Eigen/Dense>
#include <string>
#include <string_view>
#include <vector>

#include "possur/dataset.hpp"
#include "possur/random.hpp"

namespace possur {

enum class CovariateFamily { gaussian_identity, bernoulli_logit, poisson_log, gamma_log };

std::string to_string(CovariateFamily family);
CovariateFamily parse_covariate_family(std::string_view text);
CovariateKind family_kind(CovariateFamily family);
bool has_dispersion(CovariateFamily family);

struct ConditionalSpec {
    std::string target;
    std::vector<std::string> predictors;  // earlier targets
    CovariateFamily family = CovariateFamily::gaussian_identity;
};

/// Gamma(shape, rate) prior on each precision-type parameter.
struct CovariateHyper {
    double shape = 0.1;
    double rate = 0.1;
};

struct CovariateChainSpec {
    std::vector<ConditionalSpec> conditionals;
    CovariateHyper hyper;

    /// Topological order, unique targets, non-negative hyperparameters.
    void validate() const;
    std::vector<CovariateColumn> columns() const;
};

struct WeightedHistory {
    const TrialDataset* data = nullptr;
    double b0 = 1.0;
};

struct ConditionalPosterior {
    ConditionalSpec spec;
    std::vector<Index> predictor_slots;  // positions in chain order
    Eigen::VectorXd mode;
    Eigen::MatrixXd curvature;           // negative Hessian at the mode
    // Gamma(shape, rate) for tau (gaussian) or the shape kappa (gamma);
    // unused for fixed-dispersion families.
    double dispersion_shape = 0.0;
    double dispersion_rate = 0.0;
    // Dispersion value at which `curvature` was evaluated.
    double reference_precision = 1.0;
};

struct CovariatePosterior {
    std::vector<ConditionalPosterior> conditionals;
    CovariateHyper hyper;

    Index L() const { return static_cast<Index>(conditionals.size()); }
    std::vector<CovariateColumn> columns() const;
};

/// One draw of alpha (with dispersions).
struct CovariateParams {
    std::vector<Eigen::VectorXd> coefficients;
    std::vector<double> precisions;  // +inf for a zero-noise gaussian factor
};

CovariatePosterior fit_covariate_chain(const std::vector<WeightedHistory>& histories,
                                       const CovariateChainSpec& spec);

/// Chain structure only (targets, families, predictor slots) with empty
/// modes; used to generate from known parameters.
CovariatePosterior chain_structure(const CovariateChainSpec& spec);

CovariateParams draw_covariate_params(const CovariatePosterior& post, Rng& rng);

/// Fills `row` (length L, chain order) for one subject.
void generate_covariate_row(const CovariatePosterior& post, const CovariateParams& params,
                            Rng& rng, Eigen::Ref<Eigen::VectorXd> row);

/// n x L table in chain order, from a single alpha draw.
Eigen::MatrixXd sample_covariates(const CovariatePosterior& post, Index n, Rng& rng);

inline constexpr double kCountTruncation = 1e6;

}  // namespace possur

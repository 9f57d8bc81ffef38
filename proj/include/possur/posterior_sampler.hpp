#pragma once

// Gibbs sampling for the SUR posterior under the reference prior
// |Sigma^{-1}|^{-(J+1)/2}, optionally combined with a power prior on an
// older historical dataset (weight a0), plus direct Monte Carlo for the
// diffuse case.
//
// Full conditionals, with W = Sigma^{-1} and H the historical design:
//
//   beta | W  ~ N(P^{-1} r, P^{-1}),
//       P = X'(W (x) I_n) X + a0 H'(W (x) I_n0) H,
//       r = X'(W (x) I_n) y + a0 H'(W (x) I_n0) y0
//   W | beta  ~ Wishart_J([R(beta) + a0 R0(beta)]^{-1}, n + a0 n0)
//
// The historical precision enters multiplied by a0, so a0 -> 0 recovers the
// reference-prior posterior continuously.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "possur/random.hpp"
#include "possur/sur_core.hpp"

namespace possur {

struct PowerPriorSpec {
    double a0 = 0.0;
    /// Older historical data; present iff a0 > 0.
    std::optional<SurDesignd> historical;

    /// Throws when a0 is outside [0,1], when the presence of `historical`
    /// disagrees with a0, or when its coefficient layout differs from `current`.
    void validate(const SurDesignd& current) const;
};

struct GibbsConfig {
    Index draws = 1000;
    Index burn_in = 500;
    Index thin = 1;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Fixes treatment effects of the listed endpoints (0-based) at `values`.
struct EqualityConstraint {
    std::vector<Index> endpoints;
    std::vector<double> values;
};

/// Cholesky factorization with one diagonal jitter of 1e-10 * trace / dim on
/// failure; throws NumericalError naming `what` if that fails too.
Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& a, const char* what);

/// Two-block Gibbs kernel. Holds references to the design and to the
/// historical design inside `power`; both must outlive the sampler.
class SurGibbsSampler {
  public:
    SurGibbsSampler(const SurDesignd& design, const PowerPriorSpec& power,
                    std::optional<EqualityConstraint> constraint = std::nullopt);

    /// beta at the equationwise MLE (fixed coordinates overwritten), Sigma at
    /// the a0-pooled MLE residual covariance.
    void initialize();

    const Eigen::VectorXd& beta() const { return beta_; }
    const Eigen::MatrixXd& precision() const { return precision_; }
    const Eigen::MatrixXd& sigma() const { return sigma_; }
    void set_beta(const Eigen::VectorXd& beta);
    void set_sigma(const Eigen::MatrixXd& sigma);

    /// Mean of beta | Sigma (with fixed coordinates conditioned on).
    Eigen::VectorXd conditional_mean(const Eigen::MatrixXd& precision) const;

    /// beta <- draw from beta | current precision.
    const Eigen::VectorXd& draw_beta(Rng& rng);
    /// precision, sigma <- draw from W | current beta.
    void draw_precision(Rng& rng);

    /// R(beta) + a0 R0(beta).
    Eigen::MatrixXd pooled_cross_products(const Eigen::VectorXd& beta) const;
    /// n + a0 n0.
    double degrees_of_freedom() const { return dof_; }

    /// Draws a precision from Wishart_J(scale^{-1}, dof) given the pooled
    /// cross-product matrix `cross`; stores it and its inverse in the state.
    void draw_precision_from(const Eigen::MatrixXd& cross, double dof, Rng& rng);

    /// Runs burn-in then calls visit(beta, sigma) on every retained sweep.
    template <class Visitor>
    void run(const GibbsConfig& config, Rng& rng, Visitor&& visit) {
        config.validate();
        initialize();
        const Index total = config.burn_in + config.draws * config.thin;
        for (Index it = 0; it < total; ++it) {
            draw_beta(rng);
            draw_precision(rng);
            if (it >= config.burn_in && (it - config.burn_in + 1) % config.thin == 0)
                visit(beta_, sigma_);
        }
    }

  private:
    void build_system(const Eigen::MatrixXd& precision, Eigen::MatrixXd& p, Eigen::VectorXd& r) const;

    const SurDesignd* design_;
    const SurDesignd* historical_ = nullptr;
    double a0_ = 0.0;
    double dof_ = 0.0;

    Eigen::MatrixXd xtx_;  // X'X + a0 H'H over the concatenated blocks
    Eigen::MatrixXd xty_;  // X'Y + a0 H'Y0, (p+J) x J
    Eigen::MatrixXd yty_;  // Y'Y + a0 Y0'Y0

    std::vector<Index> fixed_;
    Eigen::VectorXd fixed_values_;
    std::vector<Index> free_;

    Eigen::VectorXd beta_;
    Eigen::MatrixXd precision_;
    Eigen::MatrixXd sigma_;
};

/// One draw of beta | Sigma.
Eigen::VectorXd sample_beta_conditional(const SurDesignd& design, const PowerPriorSpec& power,
                                        const Eigen::MatrixXd& sigma,
                                        const std::optional<EqualityConstraint>& constraint,
                                        Rng& rng);

/// Mean of beta | Sigma, the quantity sample_beta_conditional centres on.
Eigen::VectorXd conditional_beta_mean(const SurDesignd& design, const PowerPriorSpec& power,
                                      const Eigen::MatrixXd& sigma,
                                      const std::optional<EqualityConstraint>& constraint = std::nullopt);

/// One draw of Sigma | beta.
Eigen::MatrixXd sample_sigma_conditional(const SurDesignd& design, const PowerPriorSpec& power,
                                         const Eigen::VectorXd& beta, Rng& rng);

std::vector<ThetaDraw> run_gibbs(const SurDesignd& design, const PowerPriorSpec& power,
                                 const GibbsConfig& config,
                                 const std::optional<EqualityConstraint>& constraint = std::nullopt);

/// Independent draws from the diffuse-prior posterior: W from the Wishart
/// implied by the equationwise-MLE residuals with n - (p+J)/J degrees of
/// freedom, then beta | W. Exact when every endpoint shares one design.
/// Rejects a0 > 0.
std::vector<ThetaDraw> dmc_sample(const SurDesignd& design, Index draws, std::uint64_t seed,
                                  const PowerPriorSpec& power = {});

}  // namespace possur

#pragma once

// Outer Monte Carlo for the probability of success:
//   1. draw theta from the validation prior (posterior of the newest
//      historical data, optionally constrained or HPD-trimmed),
//   2. simulate a future trial of size n under theta and a covariate draw,
//   3. run the fitting-prior Gibbs sampler on it,
//   4. count the trial a success when the posterior probability of the
//      region is at least gamma.
// Every clause-subset intersection is scored on the same future datasets, so
// the adjusted POS is computed from common random numbers.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "possur/covariate_model.hpp"
#include "possur/dataset.hpp"
#include "possur/hpd.hpp"
#include "possur/posterior_sampler.hpp"
#include "possur/success_region.hpp"

namespace possur {

enum class ValidationMode { unconstrained, null_boundary, alternative };

std::string to_string(ValidationMode mode);
ValidationMode parse_validation_mode(std::string_view text);

struct ValidationSpec {
    ValidationMode mode = ValidationMode::unconstrained;
    /// Endpoints (0-based) fixed in null-boundary mode, with their values.
    std::vector<Index> null_endpoints;
    std::vector<double> null_values;
    /// Region for alternative mode; the POS region when absent.
    std::optional<SuccessRegion> alternative;
    std::optional<HpdSpec> hpd;
    Index burn_in = 500;
    Index thin = 5;

    void validate(Index J) const;
};

struct PosConfig {
    Index n = 300;
    double gamma = 0.95;
    double q_rand = 0.5;
    Index inner_draws = 10000;  // M
    Index replicates = 10000;   // B
    Index inner_burn_in = 200;
    double a0 = 0.0;
    std::uint64_t seed = 1;
    bool comparator = false;
    /// Worker cap; 0 means POS_SUR_THREADS or the hardware count.
    unsigned threads = 0;

    void validate() const;
};

struct PosInputs {
    ModelSpec model;
    TrialDataset validation_history;                // D02
    std::optional<TrialDataset> fitting_history;    // D01, used when a0 > 0
    CovariatePosterior covariates;
    SuccessRegion region;
};

struct PosReport {
    Index n = 0;
    double gamma = 0.0;
    Index replicates = 0;
    Index inner_draws = 0;
    double pos_unadjusted = 0.0;
    double pos_adjusted = 0.0;
    double mc_se = 0.0;            // sqrt(p (1 - p) / B) for the unadjusted POS
    double mc_se_adjusted = 0.0;   // same formula at the adjusted value
    std::vector<std::string> clauses;
    /// POS of each clause-subset intersection, indexed by bitmask (entry 0 unused).
    std::vector<double> subset_pos;
    double mean_posterior_probability = 0.0;
    std::optional<double> comparator_rate;
    std::optional<double> comparator_se;
    double validation_acceptance = 1.0;
};

/// Number of worker threads for `requested` (0 = env POS_SUR_THREADS or hardware).
unsigned resolve_threads(unsigned requested);

/// Validation draws for `count` replicates, sampled from the posterior of
/// `history` per `vspec`. `region` is the POS region (the default
/// alternative). Deterministic in `seed`.
std::vector<ThetaDraw> sample_validation_draws(const SurDesignd& history, const ValidationSpec& vspec,
                                               const DnfRegion& region, Index count, std::uint64_t seed,
                                               double* acceptance = nullptr);

/// One future trial of n subjects. Subjects are generated in order
/// (covariates, treatment, noise), so a smaller n yields a prefix of a larger
/// one under the same stream.
TrialDataset sample_future_dataset(const ThetaDraw& theta, const CovariatePosterior& cov_post, Index n,
                                   double q_rand, const ModelSpec& spec, Rng& rng);

/// Generates n subjects from known covariate parameters. A non-null
/// `treatment` (length n) replaces the Bernoulli(q_rand) assignment.
TrialDataset simulate_trial(const ThetaDraw& theta, const CovariatePosterior& structure,
                            const CovariateParams& params, Index n, double q_rand, const ModelSpec& spec,
                            Rng& rng, const Eigen::VectorXd* treatment = nullptr);

/// Inner Monte Carlo estimate of P(beta_1 in region | data) with the fitting
/// prior (power prior with weight power.a0, or the reference prior).
double posterior_success_probability(const TrialDataset& future, const ModelSpec& spec,
                                     const PowerPriorSpec& power, const DnfRegion& region,
                                     const GibbsConfig& gconf);

class PosEngine {
  public:
    /// Fits nothing; samples the validation draws for config.replicates.
    PosEngine(PosInputs inputs, ValidationSpec vspec, PosConfig config);

    PosReport run() const { return run(config_.n, config_.gamma); }
    PosReport run(Index n) const { return run(n, config_.gamma); }
    PosReport run(Index n, double gamma) const;

    /// One report per grid point, all sharing validation draws and seeds.
    std::vector<PosReport> curve(const std::vector<Index>& n_grid) const;

    const std::vector<ThetaDraw>& validation_draws() const { return validation_; }
    const DnfRegion& dnf() const { return dnf_; }
    const PosConfig& config() const { return config_; }
    const SurDesignd& validation_design() const { return history_design_; }

  private:
    PosInputs inputs_;
    ValidationSpec vspec_;
    PosConfig config_;
    DnfRegion dnf_;
    SurDesignd history_design_;
    PowerPriorSpec power_;
    std::vector<ThetaDraw> validation_;
    double acceptance_ = 1.0;
};

/// Convenience: PosEngine(inputs, vspec, config).run().
PosReport pos_estimate(const PosInputs& inputs, const ValidationSpec& vspec, const PosConfig& config);

std::vector<PosReport> pos_curve(const PosInputs& inputs, const ValidationSpec& vspec, const PosConfig& config,
                                 const std::vector<Index>& n_grid);

}  // namespace possur

#include "possur/pos_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

#include "possur/error.hpp"
#include "possur/frequentist.hpp"

namespace possur {

std::string to_string(ValidationMode mode) {
    switch (mode) {
        case ValidationMode::unconstrained: return "unconstrained";
        case ValidationMode::null_boundary: return "null-boundary";
        case ValidationMode::alternative: return "alternative";
    }
    return "?";
}

ValidationMode parse_validation_mode(std::string_view text) {
    if (text == "unconstrained") return ValidationMode::unconstrained;
    if (text == "null-boundary" || text == "null") return ValidationMode::null_boundary;
    if (text == "alternative") return ValidationMode::alternative;
    throw ConfigError("unknown validation mode '" + std::string(text) + "'");
}

void ValidationSpec::validate(Index J) const {
    if (burn_in < 0 || thin < 1) throw ConfigError("validation sampler: burn-in >= 0 and thin >= 1 required");
    if (mode == ValidationMode::null_boundary) {
        if (null_endpoints.empty()) throw ConfigError("null-boundary validation needs constrained endpoints");
        if (null_values.size() != null_endpoints.size())
            throw ConfigError("null-boundary validation: endpoint and value lists differ in length");
        for (Index j : null_endpoints)
            if (j < 0 || j >= J) throw ConfigError("null-boundary validation: endpoint out of range");
    }
    if (alternative) alternative->validate(J);
    if (hpd) hpd->validate();
}

void PosConfig::validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
    if (!(q_rand > 0.0 && q_rand < 1.0)) throw ConfigError("randomization probability must lie in (0,1)");
    if (inner_draws < 1 || replicates < 1) throw ConfigError("M and B must be at least 1");
    if (inner_burn_in < 0) throw ConfigError("inner burn-in must be non-negative");
    if (!(a0 >= 0.0 && a0 <= 1.0)) throw ConfigError("a0 must lie in [0,1]");
    if (n < 1) throw ConfigError("future sample size must be positive");
}

unsigned resolve_threads(unsigned requested) {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    unsigned cap = hw;
    if (const char* env = std::getenv("POS_SUR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) cap = static_cast<unsigned>(v);
    }
    return requested > 0 ? std::min(requested, cap) : cap;
}

std::vector<ThetaDraw> sample_validation_draws(const SurDesignd& history, const ValidationSpec& vspec,
                                               const DnfRegion& region, Index count, std::uint64_t seed,
                                               double* acceptance) {
    vspec.validate(history.J());
    if (count < 1) throw ConfigError("validation draw count must be positive");
    if (history.n() <= history.coef_count())
        throw ConfigError("validation history needs n > p + J");

    Index pool = count;
    if (vspec.hpd && vspec.hpd->q_hpd < 1.0) {
        pool = static_cast<Index>(std::ceil(static_cast<double>(count) / vspec.hpd->q_hpd - 1e-9));
        pool = std::max<Index>(pool, vspec.hpd->method == HpdMethod::kde ? 50 : 10);
    }

    std::optional<EqualityConstraint> constraint;
    if (vspec.mode == ValidationMode::null_boundary)
        constraint = EqualityConstraint{vspec.null_endpoints, vspec.null_values};
    std::optional<DnfRegion> accept;
    if (vspec.mode == ValidationMode::alternative)
        accept = vspec.alternative ? to_dnf(*vspec.alternative) : region;

    const PowerPriorSpec diffuse;
    SurGibbsSampler sampler(history, diffuse, constraint);
    Rng rng = make_stream(seed);
    sampler.initialize();
    for (Index it = 0; it < vspec.burn_in; ++it) {
        sampler.draw_beta(rng);
        sampler.draw_precision(rng);
    }
    std::vector<ThetaDraw> draws;
    draws.reserve(static_cast<std::size_t>(pool));
    Index proposals = 0;
    while (static_cast<Index>(draws.size()) < pool) {
        for (Index t = 0; t < vspec.thin; ++t) {
            sampler.draw_beta(rng);
            sampler.draw_precision(rng);
        }
        ++proposals;
        if (accept && !accept->contains(treatment_effects(history, sampler.beta()))) {
            if (proposals >= 10000 && static_cast<double>(draws.size()) < 1e-4 * static_cast<double>(proposals))
                throw NumericalError("alternative region nearly null");
            continue;
        }
        draws.push_back({sampler.beta(), sampler.sigma()});
    }
    if (acceptance) *acceptance = static_cast<double>(pool) / static_cast<double>(proposals);

    if (pool == count) return draws;
    std::vector<Index> keep;
    if (vspec.hpd->method == HpdMethod::log_posterior) {
        keep = hpd_indices_logpost(draws, history, vspec.hpd->q_hpd);
    } else {
        Eigen::MatrixXd effects(pool, history.J());
        for (Index i = 0; i < pool; ++i)
            effects.row(i) = treatment_effects(history, draws[static_cast<std::size_t>(i)].beta).transpose();
        keep = hpd_filter_kde(effects, vspec.hpd->q_hpd, vspec.hpd->bandwidth_scale);
    }
    if (static_cast<Index>(keep.size()) < count) throw Error("HPD trimming retained too few validation draws");
    std::vector<ThetaDraw> out;
    out.reserve(static_cast<std::size_t>(count));
    for (Index i = 0; i < count; ++i) out.push_back(draws[static_cast<std::size_t>(keep[static_cast<std::size_t>(i)])]);
    return out;
}

namespace {

struct FutureTrial {
    TrialDataset data;
    SurDesignd design;
};

FutureTrial simulate_impl(const ThetaDraw& theta, const CovariatePosterior& cov_post,
                          const CovariateParams& params, Index n, double q_rand, const ModelSpec& spec, Rng& rng,
                          const Eigen::VectorXd* treatment) {
    const Index J = spec.J();
    if (theta.sigma.rows() != J || theta.sigma.cols() != J)
        throw Error("parameter draw has the wrong covariance dimension");
    if (treatment && treatment->size() != n) throw Error("treatment vector has the wrong length");
    // Symmetric square root; tolerates a singular (or zero) covariance.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(theta.sigma);
    const Eigen::MatrixXd root =
        eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    FutureTrial f;
    TrialDataset& d = f.data;
    d.columns = cov_post.columns();
    d.covariates.resize(n, cov_post.L());
    d.treatment.resize(n);
    d.outcomes = Eigen::MatrixXd::Zero(n, J);
    Eigen::MatrixXd noise(n, J);

    Eigen::VectorXd row(cov_post.L());
    std::uniform_real_distribution<double> unif;
    for (Index i = 0; i < n; ++i) {
        generate_covariate_row(cov_post, params, rng, row);
        d.covariates.row(i) = row.transpose();
        d.treatment(i) = treatment ? (*treatment)(i) : (unif(rng) < q_rand ? 1.0 : 0.0);
        noise.row(i) = (root * standard_normal_vector(J, rng)).transpose();
    }

    const SurDesignd shape = assemble_design(d, spec);
    check_coefficients(shape, theta.beta);
    for (Index j = 0; j < J; ++j) d.outcomes.col(j) = shape.block(j) * shape.segment(theta.beta, j) + noise.col(j);
    f.design = SurDesignd(d.outcomes, shape.blocks());
    return f;
}

FutureTrial generate_future(const ThetaDraw& theta, const CovariatePosterior& cov_post, Index n, double q_rand,
                            const ModelSpec& spec, Rng& rng) {
    const CovariateParams params = draw_covariate_params(cov_post, rng);
    return simulate_impl(theta, cov_post, params, n, q_rand, spec, rng, nullptr);
}

struct ReplicateTally {
    std::vector<std::uint64_t> subset_success;
    std::uint64_t union_success = 0;
    std::uint64_t comparator_success = 0;
};

}  // namespace

TrialDataset sample_future_dataset(const ThetaDraw& theta, const CovariatePosterior& cov_post, Index n,
                                   double q_rand, const ModelSpec& spec, Rng& rng) {
    return generate_future(theta, cov_post, n, q_rand, spec, rng).data;
}

TrialDataset simulate_trial(const ThetaDraw& theta, const CovariatePosterior& structure,
                            const CovariateParams& params, Index n, double q_rand, const ModelSpec& spec,
                            Rng& rng, const Eigen::VectorXd* treatment) {
    return simulate_impl(theta, structure, params, n, q_rand, spec, rng, treatment).data;
}

double posterior_success_probability(const TrialDataset& future, const ModelSpec& spec,
                                     const PowerPriorSpec& power, const DnfRegion& region,
                                     const GibbsConfig& gconf) {
    const SurDesignd design = assemble_design(future, spec);
    SurGibbsSampler sampler(design, power);
    Rng rng = make_stream(gconf.seed);
    Index hits = 0;
    sampler.run(gconf, rng, [&](const Eigen::VectorXd& beta, const Eigen::MatrixXd&) {
        if (region.contains(treatment_effects(design, beta))) ++hits;
    });
    return static_cast<double>(hits) / static_cast<double>(gconf.draws);
}

PosEngine::PosEngine(PosInputs inputs, ValidationSpec vspec, PosConfig config)
    : inputs_(std::move(inputs)), vspec_(std::move(vspec)), config_(config) {
    config_.validate();
    const ModelSpec& model = inputs_.model;
    if (model.J() < 1) throw ConfigError("model needs at least one endpoint");
    inputs_.validation_history.validate();
    inputs_.region.validate(model.J());
    dnf_ = to_dnf(inputs_.region);
    if (dnf_.K() > kMaxClauses) throw ConfigError("intersection enumeration too large");

    std::set<std::string> modelled;
    for (const auto& c : inputs_.covariates.conditionals) modelled.insert(c.spec.target);
    for (const auto& name : model.used_covariates())
        if (!modelled.count(name))
            throw ConfigError("covariate '" + name + "' is used by the model but not by the covariate chain");

    history_design_ = assemble_design(inputs_.validation_history, model);
    power_.a0 = config_.a0;
    if (config_.a0 > 0.0) {
        if (!inputs_.fitting_history) throw ConfigError("a0 > 0 requires an older historical dataset");
        inputs_.fitting_history->validate();
        power_.historical = assemble_design(*inputs_.fitting_history, model);
    }
    validation_ = sample_validation_draws(history_design_, vspec_, dnf_, config_.replicates,
                                          derive_seed(config_.seed, 0, 0), &acceptance_);
}

PosReport PosEngine::run(Index n, double gamma) const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("gamma must lie in (0,1)");
    const ModelSpec& model = inputs_.model;
    if (n <= model.coef_count())
        throw ConfigError("future sample size n = " + std::to_string(n) + " must exceed p + J = " +
                          std::to_string(model.coef_count()));
    const Index K = dnf_.K();
    const std::size_t subsets = std::size_t{1} << K;
    const Index B = config_.replicates;
    const Index M = config_.inner_draws;
    const GibbsConfig inner{M, config_.inner_burn_in, 1, 0};

    std::vector<double> post_prob(static_cast<std::size_t>(B), 0.0);
    const unsigned workers = std::min<unsigned>(resolve_threads(config_.threads), static_cast<unsigned>(B));
    std::vector<ReplicateTally> tallies(workers);
    std::atomic<Index> next{0};
    std::atomic<bool> failed{false};
    std::mutex error_mutex;
    Index error_index = B;
    std::exception_ptr error;

    auto work = [&](unsigned w) {
        ReplicateTally& tally = tallies[w];
        tally.subset_success.assign(subsets, 0);
        std::vector<std::uint64_t> hist(subsets);
        for (Index b = next++; b < B && !failed; b = next++) {
            try {
                Rng data_rng = make_stream(config_.seed, static_cast<std::uint64_t>(b) + 1, 1);
                Rng inner_rng = make_stream(config_.seed, static_cast<std::uint64_t>(b) + 1, 2);
                const FutureTrial trial = generate_future(validation_[static_cast<std::size_t>(b)],
                                                          inputs_.covariates, n, config_.q_rand, model, data_rng);
                std::fill(hist.begin(), hist.end(), 0);
                SurGibbsSampler sampler(trial.design, power_);
                Eigen::VectorXd effects(model.J());
                sampler.run(inner, inner_rng, [&](const Eigen::VectorXd& beta, const Eigen::MatrixXd&) {
                    for (Index j = 0; j < model.J(); ++j) effects(j) = beta(trial.design.treatment_index(j));
                    ++hist[dnf_.satisfied_mask(effects)];
                });
                const auto counts = intersection_counts(hist, K);
                for (std::size_t m = 1; m < subsets; ++m)
                    if (static_cast<double>(counts[m]) / static_cast<double>(M) >= gamma) ++tally.subset_success[m];
                const double p = static_cast<double>(static_cast<std::uint64_t>(M) - hist[0]) / static_cast<double>(M);
                post_prob[static_cast<std::size_t>(b)] = p;
                if (p >= gamma) ++tally.union_success;
                if (config_.comparator &&
                    holm_composite_decision(marginal_pvalues(trial.design, model), dnf_, 1.0 - gamma))
                    ++tally.comparator_success;
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (b < error_index) {
                    error_index = b;
                    error = std::current_exception();
                }
                failed = true;
            }
        }
    };

    if (workers <= 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);

    ReplicateTally total;
    total.subset_success.assign(subsets, 0);
    for (const auto& t : tallies) {
        for (std::size_t m = 0; m < subsets; ++m) total.subset_success[m] += t.subset_success[m];
        total.union_success += t.union_success;
        total.comparator_success += t.comparator_success;
    }

    const double b_count = static_cast<double>(B);
    PosReport r;
    r.n = n;
    r.gamma = gamma;
    r.replicates = B;
    r.inner_draws = M;
    r.subset_pos.assign(subsets, 0.0);
    for (std::size_t m = 1; m < subsets; ++m) r.subset_pos[m] = static_cast<double>(total.subset_success[m]) / b_count;
    r.pos_unadjusted = static_cast<double>(total.union_success) / b_count;
    r.pos_adjusted = adjusted_pos(r.subset_pos, K, gamma);
    r.mc_se = std::sqrt(r.pos_unadjusted * (1.0 - r.pos_unadjusted) / b_count);
    r.mc_se_adjusted = std::sqrt(r.pos_adjusted * (1.0 - r.pos_adjusted) / b_count);
    for (const auto& c : dnf_.clauses) r.clauses.push_back(DnfRegion{{c}}.describe());
    double sum = 0.0;
    for (double p : post_prob) sum += p;
    r.mean_posterior_probability = sum / b_count;
    if (config_.comparator) {
        const double rate = static_cast<double>(total.comparator_success) / b_count;
        r.comparator_rate = rate;
        r.comparator_se = std::sqrt(rate * (1.0 - rate) / b_count);
    }
    r.validation_acceptance = acceptance_;
    return r;
}

std::vector<PosReport> PosEngine::curve(const std::vector<Index>& n_grid) const {
    if (n_grid.empty()) throw ConfigError("POS curve needs a nonempty sample-size grid");
    if (!std::is_sorted(n_grid.begin(), n_grid.end()) ||
        std::adjacent_find(n_grid.begin(), n_grid.end()) != n_grid.end())
        throw ConfigError("POS curve grid must be strictly increasing");
    std::vector<PosReport> out;
    out.reserve(n_grid.size());
    for (Index n : n_grid) out.push_back(run(n));
    return out;
}

PosReport pos_estimate(const PosInputs& inputs, const ValidationSpec& vspec, const PosConfig& config) {
    return PosEngine(inputs, vspec, config).run();
}

std::vector<PosReport> pos_curve(const PosInputs& inputs, const ValidationSpec& vspec, const PosConfig& config,
                                 const std::vector<Index>& n_grid) {
    return PosEngine(inputs, vspec, config).curve(n_grid);
}

}  // namespace possur

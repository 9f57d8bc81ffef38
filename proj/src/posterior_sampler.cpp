#include "possur/posterior_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace possur {

namespace {

struct Grams {
    Eigen::MatrixXd xtx, xty, yty;
};

Grams grams_of(const SurDesignd& d) {
    const Eigen::MatrixXd xc = d.concatenated();
    Grams g;
    g.xtx = Eigen::MatrixXd::Zero(xc.cols(), xc.cols());
    g.xtx.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
    g.xtx = g.xtx.selfadjointView<Eigen::Lower>();
    g.xty.noalias() = xc.transpose() * d.outcomes();
    g.yty.noalias() = d.outcomes().transpose() * d.outcomes();
    return g;
}

}  // namespace

void PowerPriorSpec::validate(const SurDesignd& current) const {
    if (!(a0 >= 0.0 && a0 <= 1.0)) throw ConfigError("power prior weight a0 must lie in [0,1]");
    if (a0 > 0.0 && !historical)
        throw ConfigError("power prior weight a0 > 0 requires a historical dataset");
    if (a0 == 0.0 && historical)
        throw ConfigError("historical dataset supplied with power prior weight a0 = 0");
    if (historical) {
        if (historical->J() != current.J())
            throw ConfigError("historical design has a different endpoint count");
        for (Index j = 0; j < current.J(); ++j)
            if (historical->block_cols(j) != current.block_cols(j))
                throw ConfigError("historical design for endpoint " + std::to_string(j + 1) +
                                  " has a different coefficient layout");
    }
}

void GibbsConfig::validate() const {
    if (draws < 1) throw ConfigError("Gibbs: draws must be at least 1");
    if (burn_in < 0) throw ConfigError("Gibbs: burn-in must be non-negative");
    if (thin < 1) throw ConfigError("Gibbs: thin must be at least 1");
}

Eigen::LLT<Eigen::MatrixXd> robust_llt(const Eigen::MatrixXd& a, const char* what) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() == Eigen::Success) return llt;
    const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
    llt.compute(a + Eigen::MatrixXd::Identity(a.rows(), a.cols()) * jitter);
    if (llt.info() != Eigen::Success || !(jitter > 0.0))
        throw NumericalError(std::string(what) + " is not positive definite");
    return llt;
}

SurGibbsSampler::SurGibbsSampler(const SurDesignd& design, const PowerPriorSpec& power,
                                 std::optional<EqualityConstraint> constraint)
    : design_(&design), a0_(power.a0) {
    power.validate(design);
    Grams g = grams_of(design);
    dof_ = static_cast<double>(design.n());
    if (power.historical && a0_ > 0.0) {
        historical_ = &*power.historical;
        const Grams h = grams_of(*historical_);
        g.xtx += a0_ * h.xtx;
        g.xty += a0_ * h.xty;
        g.yty += a0_ * h.yty;
        dof_ += a0_ * static_cast<double>(historical_->n());
    }
    xtx_ = std::move(g.xtx);
    xty_ = std::move(g.xty);
    yty_ = std::move(g.yty);

    std::vector<bool> is_fixed(static_cast<std::size_t>(design.coef_count()), false);
    if (constraint) {
        if (constraint->endpoints.size() != constraint->values.size())
            throw ConfigError("equality constraint: endpoint and value lists differ in length");
        fixed_values_.resize(static_cast<Index>(constraint->values.size()));
        for (std::size_t i = 0; i < constraint->endpoints.size(); ++i) {
            const Index j = constraint->endpoints[i];
            if (j < 0 || j >= design.J())
                throw ConfigError("equality constraint: endpoint index " + std::to_string(j + 1) +
                                  " out of range");
            if (!std::isfinite(constraint->values[i]))
                throw ConfigError("equality constraint: non-finite value");
            const Index pos = design.treatment_index(j);
            if (is_fixed[static_cast<std::size_t>(pos)])
                throw ConfigError("equality constraint: endpoint listed twice");
            is_fixed[static_cast<std::size_t>(pos)] = true;
            fixed_.push_back(pos);
            fixed_values_(static_cast<Index>(i)) = constraint->values[i];
        }
    }
    for (Index k = 0; k < design.coef_count(); ++k)
        if (!is_fixed[static_cast<std::size_t>(k)]) free_.push_back(k);

    beta_ = Eigen::VectorXd::Zero(design.coef_count());
    for (std::size_t i = 0; i < fixed_.size(); ++i) beta_(fixed_[i]) = fixed_values_(static_cast<Index>(i));
    precision_ = Eigen::MatrixXd::Identity(design.J(), design.J());
    sigma_ = precision_;
}

void SurGibbsSampler::initialize() {
    const Eigen::VectorXd mle = equationwise_mle(*design_).beta;
    Eigen::VectorXd start = mle;
    for (std::size_t i = 0; i < fixed_.size(); ++i) start(fixed_[i]) = fixed_values_(static_cast<Index>(i));
    const Eigen::MatrixXd cross = pooled_cross_products(mle);
    set_beta(start);
    set_sigma(cross / dof_);
}

void SurGibbsSampler::set_beta(const Eigen::VectorXd& beta) {
    check_coefficients(*design_, beta);
    beta_ = beta;
}

void SurGibbsSampler::set_sigma(const Eigen::MatrixXd& sigma) {
    if (sigma.rows() != design_->J() || sigma.cols() != design_->J())
        throw Error("covariance matrix has the wrong dimension");
    const auto llt = robust_llt(sigma, "covariance matrix");
    sigma_ = sigma;
    precision_ = llt.solve(Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols()));
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

void SurGibbsSampler::build_system(const Eigen::MatrixXd& w, Eigen::MatrixXd& p,
                                   Eigen::VectorXd& r) const {
    const Index k = design_->coef_count();
    p.resize(k, k);
    for (Index a = 0; a < design_->J(); ++a)
        for (Index b = 0; b < design_->J(); ++b)
            p.block(design_->offset(a), design_->offset(b), design_->block_cols(a),
                    design_->block_cols(b)) =
                w(a, b) * xtx_.block(design_->offset(a), design_->offset(b), design_->block_cols(a),
                                     design_->block_cols(b));
    const Eigen::MatrixXd xtyw = xty_ * w;
    r.resize(k);
    for (Index a = 0; a < design_->J(); ++a)
        r.segment(design_->offset(a), design_->block_cols(a)) =
            xtyw.col(a).segment(design_->offset(a), design_->block_cols(a));
}

Eigen::VectorXd SurGibbsSampler::conditional_mean(const Eigen::MatrixXd& w) const {
    Eigen::MatrixXd p;
    Eigen::VectorXd r;
    build_system(w, p, r);
    if (fixed_.empty()) return robust_llt(p, "posterior precision of beta").solve(r);
    Eigen::VectorXd mean(design_->coef_count());
    const Eigen::MatrixXd puu = p(free_, free_);
    const Eigen::VectorXd ru = r(free_) - p(free_, fixed_) * fixed_values_;
    const Eigen::VectorXd mu = robust_llt(puu, "posterior precision of beta").solve(ru);
    mean(free_) = mu;
    mean(fixed_) = fixed_values_;
    return mean;
}

const Eigen::VectorXd& SurGibbsSampler::draw_beta(Rng& rng) {
    Eigen::MatrixXd p;
    Eigen::VectorXd r;
    build_system(precision_, p, r);
    if (fixed_.empty()) {
        const auto llt = robust_llt(p, "posterior precision of beta");
        beta_ = llt.solve(r);
        beta_ += llt.matrixU().solve(standard_normal_vector(p.rows(), rng));
        return beta_;
    }
    const Eigen::MatrixXd puu = p(free_, free_);
    const Eigen::VectorXd ru = r(free_) - p(free_, fixed_) * fixed_values_;
    const auto llt = robust_llt(puu, "posterior precision of beta");
    Eigen::VectorXd bu = llt.solve(ru);
    bu += llt.matrixU().solve(standard_normal_vector(puu.rows(), rng));
    beta_(free_) = bu;
    beta_(fixed_) = fixed_values_;
    return beta_;
}

Eigen::MatrixXd SurGibbsSampler::pooled_cross_products(const Eigen::VectorXd& beta) const {
    const Index j_count = design_->J();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(design_->coef_count(), j_count);
    for (Index j = 0; j < j_count; ++j) b.col(j).segment(design_->offset(j), design_->block_cols(j)) =
        design_->segment(beta, j);
    const Eigen::MatrixXd bty = b.transpose() * xty_;
    Eigen::MatrixXd r = yty_ - bty - bty.transpose() + b.transpose() * (xtx_ * b);
    return 0.5 * (r + r.transpose());
}

void SurGibbsSampler::draw_precision_from(const Eigen::MatrixXd& cross, double dof, Rng& rng) {
    const auto llt = robust_llt(cross, "residual cross-product matrix");
    const Eigen::MatrixXd a = bartlett_factor(cross.rows(), dof, rng);
    // cross = L L'; W = L^{-T} A A' L^{-1} and Sigma = W^{-1} = G'G, G = A^{-1} L'.
    const Eigen::MatrixXd m = llt.matrixU().solve(a);
    precision_.noalias() = m * m.transpose();
    const Eigen::MatrixXd g = a.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd(llt.matrixU()));
    sigma_.noalias() = g.transpose() * g;
}

void SurGibbsSampler::draw_precision(Rng& rng) {
    Eigen::MatrixXd cross = pooled_cross_products(beta_);
    if (Eigen::LLT<Eigen::MatrixXd>(cross).info() != Eigen::Success) {
        // Cancellation in the Gram form; recompute from explicit residuals.
        cross = residual_cross_products(*design_, beta_);
        if (historical_) cross += a0_ * residual_cross_products(*historical_, beta_);
    }
    draw_precision_from(cross, dof_, rng);
}

Eigen::VectorXd sample_beta_conditional(const SurDesignd& design, const PowerPriorSpec& power,
                                        const Eigen::MatrixXd& sigma,
                                        const std::optional<EqualityConstraint>& constraint,
                                        Rng& rng) {
    SurGibbsSampler sampler(design, power, constraint);
    sampler.set_sigma(sigma);
    return sampler.draw_beta(rng);
}

Eigen::VectorXd conditional_beta_mean(const SurDesignd& design, const PowerPriorSpec& power,
                                      const Eigen::MatrixXd& sigma,
                                      const std::optional<EqualityConstraint>& constraint) {
    SurGibbsSampler sampler(design, power, constraint);
    sampler.set_sigma(sigma);
    return sampler.conditional_mean(sampler.precision());
}

Eigen::MatrixXd sample_sigma_conditional(const SurDesignd& design, const PowerPriorSpec& power,
                                         const Eigen::VectorXd& beta, Rng& rng) {
    SurGibbsSampler sampler(design, power);
    sampler.set_beta(beta);
    if (!(sampler.degrees_of_freedom() > static_cast<double>(design.J() - 1)))
        throw NumericalError("insufficient effective sample size for the covariance draw");
    sampler.draw_precision(rng);
    return sampler.sigma();
}

std::vector<ThetaDraw> run_gibbs(const SurDesignd& design, const PowerPriorSpec& power,
                                 const GibbsConfig& config,
                                 const std::optional<EqualityConstraint>& constraint) {
    SurGibbsSampler sampler(design, power, constraint);
    Rng rng = make_stream(config.seed);
    std::vector<ThetaDraw> draws;
    draws.reserve(static_cast<std::size_t>(config.draws));
    sampler.run(config, rng, [&](const Eigen::VectorXd& beta, const Eigen::MatrixXd& sigma) {
        draws.push_back({beta, sigma});
    });
    return draws;
}

std::vector<ThetaDraw> dmc_sample(const SurDesignd& design, Index draws, std::uint64_t seed,
                                  const PowerPriorSpec& power) {
    if (power.a0 > 0.0 || power.historical)
        throw ConfigError("direct Monte Carlo supports only the diffuse prior (a0 = 0)");
    if (draws < 1) throw ConfigError("direct Monte Carlo: draws must be at least 1");
    if (design.n() <= design.coef_count())
        throw ConfigError("direct Monte Carlo requires n > p + J");
    const double dof = static_cast<double>(design.n()) -
                       static_cast<double>(design.coef_count()) / static_cast<double>(design.J());
    const Eigen::MatrixXd cross = residual_cross_products(design, equationwise_mle(design).beta);

    SurGibbsSampler sampler(design, power);
    Rng rng = make_stream(seed);
    std::vector<ThetaDraw> out;
    out.reserve(static_cast<std::size_t>(draws));
    for (Index m = 0; m < draws; ++m) {
        sampler.draw_precision_from(cross, dof, rng);
        sampler.draw_beta(rng);
        out.push_back({sampler.beta(), sampler.sigma()});
    }
    return out;
}

}  // namespace possur

#include "possur/covariate_model.hpp"

#include <algorithm>
#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "possur/error.hpp"

namespace possur {

std::string to_string(CovariateFamily family) {
    switch (family) {
        case CovariateFamily::gaussian_identity: return "gaussian";
        case CovariateFamily::bernoulli_logit: return "bernoulli";
        case CovariateFamily::poisson_log: return "poisson";
        case CovariateFamily::gamma_log: return "gamma";
    }
    return "?";
}

CovariateFamily parse_covariate_family(std::string_view text) {
    if (text == "gaussian" || text == "gaussian-identity") return CovariateFamily::gaussian_identity;
    if (text == "bernoulli" || text == "bernoulli-logit") return CovariateFamily::bernoulli_logit;
    if (text == "poisson" || text == "poisson-log") return CovariateFamily::poisson_log;
    if (text == "gamma" || text == "gamma-log") return CovariateFamily::gamma_log;
    throw ConfigError("unknown covariate family '" + std::string(text) + "'");
}

CovariateKind family_kind(CovariateFamily family) {
    switch (family) {
        case CovariateFamily::bernoulli_logit: return CovariateKind::binary;
        case CovariateFamily::poisson_log: return CovariateKind::count;
        default: return CovariateKind::continuous;
    }
}

bool has_dispersion(CovariateFamily family) {
    return family == CovariateFamily::gaussian_identity || family == CovariateFamily::gamma_log;
}

void CovariateChainSpec::validate() const {
    if (!(hyper.shape > 0.0) || !(hyper.rate >= 0.0) || !std::isfinite(hyper.shape) ||
        !std::isfinite(hyper.rate))
        throw ConfigError("covariate chain: gamma hyperparameters must satisfy shape > 0, rate >= 0");
    std::map<std::string, Index> seen;
    for (const auto& c : conditionals) {
        if (seen.count(c.target)) throw ConfigError("covariate chain: '" + c.target + "' modelled twice");
        for (const auto& p : c.predictors)
            if (!seen.count(p))
                throw ConfigError("covariate chain: predictor '" + p + "' of '" + c.target +
                                  "' does not precede it");
        seen.emplace(c.target, static_cast<Index>(seen.size()));
    }
}

std::vector<CovariateColumn> CovariateChainSpec::columns() const {
    std::vector<CovariateColumn> out;
    for (const auto& c : conditionals) out.push_back({c.target, family_kind(c.family)});
    return out;
}

std::vector<CovariateColumn> CovariatePosterior::columns() const {
    std::vector<CovariateColumn> out;
    for (const auto& c : conditionals) out.push_back({c.spec.target, family_kind(c.spec.family)});
    return out;
}

namespace {

struct WeightedData {
    Eigen::MatrixXd x;  // intercept first
    Eigen::VectorXd y;
    Eigen::VectorXd w;
};

Index require_column(const TrialDataset& d, const std::string& name, CovariateKind kind) {
    const Index c = d.column_index(name);
    if (c < 0) throw ConfigError("covariate '" + name + "' missing from a historical dataset");
    if (d.columns[static_cast<std::size_t>(c)].kind != kind)
        throw ConfigError("covariate '" + name + "' is declared " +
                          std::string(to_string(d.columns[static_cast<std::size_t>(c)].kind)) + " but modelled as " +
                          std::string(to_string(kind)));
    return c;
}

WeightedData gather(const std::vector<WeightedHistory>& histories, const ConditionalSpec& spec,
                    const std::map<std::string, CovariateFamily>& families) {
    Index rows = 0;
    for (const auto& h : histories)
        if (h.b0 > 0.0) rows += h.data->n();
    const Index k = 1 + static_cast<Index>(spec.predictors.size());
    WeightedData out{Eigen::MatrixXd(rows, k), Eigen::VectorXd(rows), Eigen::VectorXd(rows)};
    Index r0 = 0;
    for (const auto& h : histories) {
        if (!(h.b0 > 0.0)) continue;
        const TrialDataset& d = *h.data;
        const Index n = d.n();
        out.x.block(r0, 0, n, 1).setOnes();
        for (std::size_t p = 0; p < spec.predictors.size(); ++p) {
            const auto& name = spec.predictors[p];
            const Index c = require_column(d, name, family_kind(families.at(name)));
            out.x.block(r0, static_cast<Index>(p) + 1, n, 1) = d.covariates.col(c);
        }
        out.y.segment(r0, n) = d.covariates.col(require_column(d, spec.target, family_kind(spec.family)));
        out.w.segment(r0, n).setConstant(h.b0);
        r0 += n;
    }
    return out;
}

double log1pexp(double eta) { return eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta)); }

// Mean function derivative terms for the concave GLM log-likelihoods (up to
// the dispersion factor): contribution l(eta), dl/deta, -d2l/deta2.
struct GlmTerms {
    double value, score, info;
};

GlmTerms glm_terms(CovariateFamily family, double y, double eta) {
    switch (family) {
        case CovariateFamily::bernoulli_logit: {
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            return {y * eta - log1pexp(eta), y - mu, mu * (1.0 - mu)};
        }
        case CovariateFamily::poisson_log: {
            const double mu = std::exp(eta);
            return {y * eta - mu, y - mu, mu};
        }
        case CovariateFamily::gamma_log: {
            const double r = y * std::exp(-eta);
            return {-eta - r, r - 1.0, r};
        }
        case CovariateFamily::gaussian_identity: break;
    }
    return {0, 0, 0};
}

// Damped Newton ascent on sum_i w_i l(x_i' a); returns the mode and the
// negative Hessian there.
void newton_fit(const WeightedData& d, CovariateFamily family, const std::string& name,
                Eigen::VectorXd& mode, Eigen::MatrixXd& info) {
    const Index k = d.x.cols();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(k);
    const double wsum = d.w.sum();
    const double ybar = d.w.dot(d.y) / wsum;
    if (family == CovariateFamily::bernoulli_logit) {
        if (ybar <= 0.0 || ybar >= 1.0)
            throw NumericalError("covariate '" + name + "': logistic fit has complete separation");
        a(0) = std::log(ybar / (1.0 - ybar));
    } else {
        if (ybar <= 0.0)
            throw NumericalError("covariate '" + name + "': log-link fit has no positive responses");
        a(0) = std::log(ybar);
    }

    auto evaluate = [&](const Eigen::VectorXd& coef, Eigen::VectorXd* grad, Eigen::MatrixXd* hess) {
        const Eigen::VectorXd eta = d.x * coef;
        double value = 0.0;
        Eigen::VectorXd s(d.x.rows()), h(d.x.rows());
        for (Index i = 0; i < d.x.rows(); ++i) {
            const GlmTerms t = glm_terms(family, d.y(i), eta(i));
            value += d.w(i) * t.value;
            s(i) = d.w(i) * t.score;
            h(i) = d.w(i) * t.info;
        }
        if (grad) *grad = d.x.transpose() * s;
        if (hess) *hess = d.x.transpose() * h.asDiagonal() * d.x;
        return value;
    };

    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;
    double value = evaluate(a, &grad, &hess);
    bool converged = false;
    for (int iter = 0; iter < 200 && !converged; ++iter) {
        Eigen::LLT<Eigen::MatrixXd> llt(hess);
        if (llt.info() != Eigen::Success)
            throw NumericalError("covariate '" + name + "': information matrix is singular");
        const Eigen::VectorXd step = llt.solve(grad);
        double t = 1.0;
        Eigen::VectorXd trial = a + step;
        double trial_value = evaluate(trial, nullptr, nullptr);
        while (!(trial_value >= value - 1e-12 * std::abs(value)) && t > 1e-10) {
            t *= 0.5;
            trial = a + t * step;
            trial_value = evaluate(trial, nullptr, nullptr);
        }
        converged = (t * step).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + a.cwiseAbs().maxCoeff()) ||
                    std::abs(trial_value - value) < 1e-14 * (1.0 + std::abs(value));
        a = trial;
        value = evaluate(a, &grad, &hess);
        if (a.cwiseAbs().maxCoeff() > 50.0)
            throw NumericalError("covariate '" + name + "': fit diverges (possible separation)");
    }
    if (!converged) throw NumericalError("covariate '" + name + "': Newton iterations did not converge");
    mode = a;
    info = hess;
}

// Laplace fit of the gamma shape kappa with a Gamma(shape, rate) prior,
// returned as a gamma matched at the mode and curvature.
void fit_gamma_shape(const WeightedData& d, const Eigen::VectorXd& mode, const CovariateHyper& hyper,
                     const std::string& name, double& post_shape, double& post_rate, double& kappa_hat) {
    const Eigen::VectorXd eta = d.x * mode;
    double s = 0.0;
    for (Index i = 0; i < d.x.rows(); ++i) {
        const double r = d.y(i) * std::exp(-eta(i));
        s += d.w(i) * (std::log(r) - r);
    }
    const double n = d.w.sum();
    auto deriv = [&](double kappa, double& f1, double& f2) {
        f1 = n * (std::log(kappa) + 1.0 - boost::math::digamma(kappa)) + s + (hyper.shape - 1.0) / kappa -
             hyper.rate;
        f2 = n * (1.0 / kappa - boost::math::trigamma(kappa)) - (hyper.shape - 1.0) / (kappa * kappa);
    };
    double u = 0.0;  // log kappa
    bool converged = false;
    for (int iter = 0; iter < 200 && !converged; ++iter) {
        const double kappa = std::exp(u);
        double f1, f2;
        deriv(kappa, f1, f2);
        const double gu = kappa * f1;
        const double hu = kappa * kappa * f2 + kappa * f1;
        double step = hu < 0.0 ? -gu / hu : (gu > 0.0 ? 1.0 : -1.0);
        step = std::clamp(step, -2.0, 2.0);
        u += step;
        converged = std::abs(step) < 1e-12;
    }
    if (!converged || !std::isfinite(u))
        throw NumericalError("covariate '" + name + "': gamma shape fit did not converge");
    kappa_hat = std::exp(u);
    double f1, f2;
    deriv(kappa_hat, f1, f2);
    post_shape = 1.0 + kappa_hat * kappa_hat * (-f2);
    post_rate = (post_shape - 1.0) / kappa_hat;
}

}  // namespace

CovariatePosterior fit_covariate_chain(const std::vector<WeightedHistory>& histories,
                                       const CovariateChainSpec& spec) {
    spec.validate();
    bool any = false;
    for (const auto& h : histories) {
        if (!h.data) throw ConfigError("covariate history without data");
        if (!(h.b0 >= 0.0 && h.b0 <= 1.0)) throw ConfigError("covariate power prior weight b0 must lie in [0,1]");
        any = any || h.b0 > 0.0;
    }
    if (!any && !spec.conditionals.empty())
        throw ConfigError("covariate model needs at least one history with b0 > 0");

    std::map<std::string, CovariateFamily> families;
    std::map<std::string, Index> slot;
    for (const auto& c : spec.conditionals) {
        families.emplace(c.target, c.family);
        slot.emplace(c.target, static_cast<Index>(slot.size()));
    }

    CovariatePosterior post;
    post.hyper = spec.hyper;
    for (const auto& c : spec.conditionals) {
        ConditionalPosterior cp;
        cp.spec = c;
        for (const auto& p : c.predictors) cp.predictor_slots.push_back(slot.at(p));
        const WeightedData d = gather(histories, c, families);
        const Index k = d.x.cols();
        const double ess = d.w.sum();
        if (!(ess > static_cast<double>(k)))
            throw ConfigError("covariate '" + c.target + "': effective sample size " + std::to_string(ess) +
                              " does not exceed coefficient count " + std::to_string(k));

        switch (c.family) {
            case CovariateFamily::gaussian_identity: {
                const Eigen::MatrixXd xtbx = d.x.transpose() * d.w.asDiagonal() * d.x;
                Eigen::LLT<Eigen::MatrixXd> llt(xtbx);
                if (llt.info() != Eigen::Success)
                    throw NumericalError("covariate '" + c.target + "': predictor design is rank deficient");
                cp.mode = llt.solve(d.x.transpose() * d.w.asDiagonal() * d.y);
                const Eigen::VectorXd e = d.y - d.x * cp.mode;
                double ss = d.w.dot(e.cwiseAbs2());
                // Residuals at rounding level mean an exact fit.
                if (ss <= 1e-24 * std::max(1.0, d.w.dot(d.y.cwiseAbs2()))) ss = 0.0;
                cp.dispersion_shape = spec.hyper.shape + 0.5 * ess;
                cp.dispersion_rate = spec.hyper.rate + 0.5 * ss;
                cp.reference_precision = cp.dispersion_rate > 0.0
                                             ? cp.dispersion_shape / cp.dispersion_rate
                                             : std::numeric_limits<double>::infinity();
                cp.curvature = std::isfinite(cp.reference_precision) ? Eigen::MatrixXd(cp.reference_precision * xtbx)
                                                                     : xtbx;
                break;
            }
            case CovariateFamily::bernoulli_logit:
            case CovariateFamily::poisson_log:
                newton_fit(d, c.family, c.target, cp.mode, cp.curvature);
                break;
            case CovariateFamily::gamma_log: {
                if ((d.y.array() <= 0.0).any())
                    throw ConfigError("covariate '" + c.target + "': gamma family needs positive values");
                Eigen::MatrixXd info;
                newton_fit(d, c.family, c.target, cp.mode, info);
                double kappa = 1.0;
                fit_gamma_shape(d, cp.mode, spec.hyper, c.target, cp.dispersion_shape, cp.dispersion_rate, kappa);
                cp.reference_precision = kappa;
                cp.curvature = kappa * info;
                break;
            }
        }
        post.conditionals.push_back(std::move(cp));
    }
    return post;
}

CovariatePosterior chain_structure(const CovariateChainSpec& spec) {
    spec.validate();
    std::map<std::string, Index> slot;
    CovariatePosterior post;
    post.hyper = spec.hyper;
    for (const auto& c : spec.conditionals) {
        ConditionalPosterior cp;
        cp.spec = c;
        for (const auto& p : c.predictors) cp.predictor_slots.push_back(slot.at(p));
        slot.emplace(c.target, static_cast<Index>(slot.size()));
        post.conditionals.push_back(std::move(cp));
    }
    return post;
}

CovariateParams draw_covariate_params(const CovariatePosterior& post, Rng& rng) {
    CovariateParams params;
    for (const auto& cp : post.conditionals) {
        if (cp.mode.size() != static_cast<Index>(cp.predictor_slots.size()) + 1 || cp.curvature.rows() != cp.mode.size())
            throw Error("covariate '" + cp.spec.target + "': chain has not been fitted");
        double precision = 1.0;
        double scale = 1.0;  // curvature multiplier relative to the reference
        if (has_dispersion(cp.spec.family)) {
            if (!(cp.dispersion_rate > 0.0)) {
                params.precisions.push_back(std::numeric_limits<double>::infinity());
                params.coefficients.push_back(cp.mode);
                continue;
            }
            std::gamma_distribution<double> g(cp.dispersion_shape, 1.0 / cp.dispersion_rate);
            precision = std::max(g(rng), std::numeric_limits<double>::min());
            scale = precision / cp.reference_precision;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(cp.curvature * scale);
        if (llt.info() != Eigen::Success)
            throw NumericalError("covariate '" + cp.spec.target + "': curvature is not positive definite");
        params.coefficients.push_back(cp.mode +
                                      llt.matrixU().solve(standard_normal_vector(cp.mode.size(), rng)));
        params.precisions.push_back(precision);
    }
    return params;
}

void generate_covariate_row(const CovariatePosterior& post, const CovariateParams& params, Rng& rng,
                            Eigen::Ref<Eigen::VectorXd> row) {
    for (std::size_t l = 0; l < post.conditionals.size(); ++l) {
        const auto& cp = post.conditionals[l];
        const Eigen::VectorXd& a = params.coefficients[l];
        double eta = a(0);
        for (std::size_t p = 0; p < cp.predictor_slots.size(); ++p)
            eta += a(static_cast<Index>(p) + 1) * row(cp.predictor_slots[p]);
        double value = 0.0;
        switch (cp.spec.family) {
            case CovariateFamily::gaussian_identity: {
                const double tau = params.precisions[l];
                std::normal_distribution<double> z;
                const double noise = z(rng);
                value = std::isinf(tau) ? eta : eta + noise / std::sqrt(tau);
                break;
            }
            case CovariateFamily::bernoulli_logit: {
                std::uniform_real_distribution<double> u;
                value = u(rng) < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
                break;
            }
            case CovariateFamily::poisson_log: {
                const double mu = std::min(std::exp(eta), kCountTruncation);
                std::poisson_distribution<long long> pois(mu);
                value = mu > 0.0 ? std::min(static_cast<double>(pois(rng)), kCountTruncation) : 0.0;
                break;
            }
            case CovariateFamily::gamma_log: {
                const double kappa = params.precisions[l];
                std::gamma_distribution<double> g(kappa, std::exp(eta) / kappa);
                value = g(rng);
                break;
            }
        }
        row(static_cast<Index>(l)) = value;
    }
}

Eigen::MatrixXd sample_covariates(const CovariatePosterior& post, Index n, Rng& rng) {
    const CovariateParams params = draw_covariate_params(post, rng);
    Eigen::MatrixXd out(n, post.L());
    Eigen::VectorXd row(post.L());
    for (Index i = 0; i < n; ++i) {
        generate_covariate_row(post, params, rng, row);
        out.row(i) = row.transpose();
    }
    return out;
}

}  // namespace possur

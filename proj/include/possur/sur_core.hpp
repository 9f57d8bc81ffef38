#pragma once

// Seemingly-unrelated-regression design and the deterministic linear algebra
// built on it. Coefficients use one canonical layout: endpoint-major, and
// within each endpoint the treatment effect comes first, followed by the
// nuisance coefficients in the order of the endpoint's design columns:
//
//   beta = (b_11, b_21', b_12, b_22', ..., b_1J, b_2J')'
//
// grouped_order() gives the permutation to the (b_1', b_2')' grouping.
//
// The nJ x nJ matrix Sigma^{-1} (x) I_n is never formed. Quadratic forms are
// evaluated through the n x J residual matrix E, using
//   (y - X b)' (Sigma^{-1} (x) I_n) (y - X b) = tr(E' E Sigma^{-1}).

#include <Eigen/Dense>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "possur/dataset.hpp"
#include "possur/error.hpp"

namespace possur {

/// Relative tolerance for rank decisions (times the largest singular value).
inline constexpr double kRankTolerance = 1e-10;

// Non-deduced parameter types: Scalar is taken from the design argument.
template <typename Scalar>
using VectorCRef = std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>>;
template <typename Scalar>
using MatrixCRef =
    std::type_identity_t<Eigen::Ref<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>>;

template <typename Scalar>
class SurDesign {
  public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    SurDesign() = default;

    /// `outcomes` is n x J; block j is the n x (p_j + 1) matrix X*_j whose
    /// first column is the treatment indicator.
    SurDesign(Matrix outcomes, std::vector<Matrix> blocks)
        : outcomes_(std::move(outcomes)), blocks_(std::move(blocks)) {
        if (static_cast<Index>(blocks_.size()) != outcomes_.cols())
            throw Error("SUR design: block count " + std::to_string(blocks_.size()) +
                        " does not match endpoint count " +
                        std::to_string(outcomes_.cols()));
        if (blocks_.empty()) throw Error("SUR design: at least one endpoint required");
        offsets_.reserve(blocks_.size() + 1);
        offsets_.push_back(0);
        for (std::size_t j = 0; j < blocks_.size(); ++j) {
            if (blocks_[j].rows() != outcomes_.rows())
                throw Error("SUR design: block " + std::to_string(j + 1) +
                            " has a different row count than the outcomes");
            if (blocks_[j].cols() < 1)
                throw Error("SUR design: block " + std::to_string(j + 1) + " is empty");
            offsets_.push_back(offsets_.back() + blocks_[j].cols());
        }
    }

    Index n() const { return outcomes_.rows(); }
    Index J() const { return outcomes_.cols(); }
    /// p + J.
    Index coef_count() const { return offsets_.empty() ? 0 : offsets_.back(); }
    Index block_cols(Index j) const { return blocks_[static_cast<std::size_t>(j)].cols(); }
    /// Position of endpoint j's first coefficient (its treatment effect).
    Index offset(Index j) const { return offsets_[static_cast<std::size_t>(j)]; }
    Index treatment_index(Index j) const { return offset(j); }

    const Matrix& outcomes() const { return outcomes_; }
    const Matrix& block(Index j) const { return blocks_[static_cast<std::size_t>(j)]; }
    const std::vector<Matrix>& blocks() const { return blocks_; }

    /// Endpoint j's slice of a coefficient vector.
    template <typename Derived>
    auto segment(const Eigen::MatrixBase<Derived>& beta, Index j) const {
        return beta.segment(offset(j), block_cols(j));
    }

    /// The n x (p + J) concatenation (X*_1, ..., X*_J).
    Matrix concatenated() const {
        Matrix out(n(), coef_count());
        for (Index j = 0; j < J(); ++j) out.middleCols(offset(j), block_cols(j)) = block(j);
        return out;
    }

  private:
    Matrix outcomes_;
    std::vector<Matrix> blocks_;
    std::vector<Index> offsets_;
};

using SurDesignd = SurDesign<double>;

/// One posterior draw theta = (beta, Sigma).
struct ThetaDraw {
    Eigen::VectorXd beta;
    Eigen::MatrixXd sigma;
};

template <typename Scalar>
struct MleFit {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> beta;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> sigma;
};

/// Builds the design for `spec` from `data`. Throws ConfigError on unknown
/// covariates and Error naming the endpoint when a block is rank deficient.
SurDesignd assemble_design(const TrialDataset& data, const ModelSpec& spec);

/// True when `block` has full column rank under the pivoted-QR test.
template <typename Derived>
bool has_full_column_rank(const Eigen::MatrixBase<Derived>& block) {
    using Scalar = typename Derived::Scalar;
    if (block.rows() < block.cols()) return false;
    Eigen::ColPivHouseholderQR<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> qr(block);
    qr.setThreshold(Scalar(kRankTolerance));
    return qr.rank() == block.cols();
}

template <typename Scalar>
void check_coefficients(const SurDesign<Scalar>& design,
                        VectorCRef<Scalar> beta) {
    if (beta.size() != design.coef_count())
        throw Error("coefficient vector has length " + std::to_string(beta.size()) +
                    ", expected " + std::to_string(design.coef_count()));
}

/// n x J matrix of residuals y_j - X*_j beta*_j.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> residuals(
    const SurDesign<Scalar>& design,
    VectorCRef<Scalar> beta) {
    check_coefficients(design, beta);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> e = design.outcomes();
    for (Index j = 0; j < design.J(); ++j)
        e.col(j).noalias() -= design.block(j) * design.segment(beta, j);
    return e;
}

/// J x J matrix R with R_kl = (y_k - X*_k b*_k)'(y_l - X*_l b*_l).
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> residual_cross_products(
    const SurDesign<Scalar>& design,
    VectorCRef<Scalar> beta) {
    const auto e = residuals(design, beta);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> r =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(design.J(), design.J());
    r.template selfadjointView<Eigen::Lower>().rankUpdate(e.transpose());
    return r.template selfadjointView<Eigen::Lower>();
}

/// (y - X b)' (Sigma^{-1} (x) I_n) (y - X b), evaluated as tr(R Sigma^{-1}).
template <typename Scalar>
Scalar kronecker_quadratic_form(
    const SurDesign<Scalar>& design,
    VectorCRef<Scalar> beta,
    MatrixCRef<Scalar> sigma_inv) {
    const auto r = residual_cross_products(design, beta);
    return (r.array() * sigma_inv.transpose().array()).sum();
}

/// Per-equation least squares; sigma is the residual cross-product over n.
template <typename Scalar>
MleFit<Scalar> equationwise_mle(const SurDesign<Scalar>& design) {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    MleFit<Scalar> fit;
    fit.beta.resize(design.coef_count());
    for (Index j = 0; j < design.J(); ++j) {
        const auto& x = design.block(j);
        if (x.rows() <= x.cols())
            throw Error("equationwise MLE: endpoint " + std::to_string(j + 1) + " has " +
                        std::to_string(x.rows()) + " rows for " + std::to_string(x.cols()) +
                        " coefficients");
        Eigen::ColPivHouseholderQR<Matrix> qr(x);
        qr.setThreshold(Scalar(kRankTolerance));
        if (qr.rank() < x.cols())
            throw Error("equationwise MLE: singular normal equations for endpoint " +
                        std::to_string(j + 1));
        fit.beta.segment(design.offset(j), x.cols()) = qr.solve(design.outcomes().col(j));
    }
    fit.sigma = residual_cross_products<Scalar>(design, fit.beta) / Scalar(design.n());
    return fit;
}

/// Treatment effects (b_11, ..., b_1J) extracted from a canonical vector.
template <typename Scalar, typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> treatment_effects(
    const SurDesign<Scalar>& design, const Eigen::MatrixBase<Derived>& beta) {
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> out(design.J());
    for (Index j = 0; j < design.J(); ++j) out(j) = beta(design.treatment_index(j));
    return out;
}

/// order[i] is the canonical position of the i-th entry of (b_1', b_2')'.
template <typename Scalar>
std::vector<Index> grouped_order(const SurDesign<Scalar>& design) {
    std::vector<Index> order;
    order.reserve(static_cast<std::size_t>(design.coef_count()));
    for (Index j = 0; j < design.J(); ++j) order.push_back(design.treatment_index(j));
    for (Index j = 0; j < design.J(); ++j)
        for (Index c = 1; c < design.block_cols(j); ++c) order.push_back(design.offset(j) + c);
    return order;
}

/// Stacked nJ response vector (y_1', ..., y_J')'. Materializes; meant for
/// small problems and tests.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> stacked_outcomes(const SurDesign<Scalar>& design) {
    return design.outcomes().reshaped();
}

/// Dense block-diagonal nJ x (p + J) design. Materializes; meant for small
/// problems and tests.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> dense_design(const SurDesign<Scalar>& design) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> x =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Zero(design.n() * design.J(),
                                                                    design.coef_count());
    for (Index j = 0; j < design.J(); ++j)
        x.block(j * design.n(), design.offset(j), design.n(), design.block_cols(j)) = design.block(j);
    return x;
}

}  // namespace possur

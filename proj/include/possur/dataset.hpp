#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

namespace possur {

using Eigen::Index;

enum class CovariateKind { continuous, binary, count };

struct CovariateColumn {
    std::string name;
    CovariateKind kind = CovariateKind::continuous;
};

/// Wide-format trial data: one row per subject.
struct TrialDataset {
    Eigen::MatrixXd outcomes;    // n x J
    Eigen::VectorXd treatment;   // n, values in {0,1}
    Eigen::MatrixXd covariates;  // n x L
    std::vector<CovariateColumn> columns;

    Index n() const { return outcomes.rows(); }
    Index J() const { return outcomes.cols(); }
    Index L() const { return covariates.cols(); }

    /// Column position of a covariate, or -1 when absent.
    Index column_index(std::string_view name) const;

    /// Throws ConfigError on shape mismatches, non-finite cells,
    /// treatment values outside {0,1} or covariates violating their kind.
    void validate() const;
};

enum class Direction { greater, less };

/// Design of a single endpoint: which covariates enter its regression and
/// what counts as a favourable treatment effect.
struct EndpointSpec {
    std::vector<std::string> covariates;
    bool intercept = true;
    Direction direction = Direction::greater;
    double delta = 0.0;

    /// Columns besides the treatment indicator (p_j).
    Index nuisance_count() const {
        return static_cast<Index>(covariates.size()) + (intercept ? 1 : 0);
    }
};

struct ModelSpec {
    std::vector<EndpointSpec> endpoints;

    Index J() const { return static_cast<Index>(endpoints.size()); }
    /// Sum of p_j over endpoints.
    Index p() const;
    /// Total coefficient count p + J.
    Index coef_count() const { return p() + J(); }
    /// Names of every covariate referenced by at least one endpoint.
    std::vector<std::string> used_covariates() const;
};

std::string_view to_string(CovariateKind kind);
CovariateKind parse_covariate_kind(std::string_view tag);
std::string_view to_string(Direction d);
Direction parse_direction(std::string_view op);

}  // namespace possur

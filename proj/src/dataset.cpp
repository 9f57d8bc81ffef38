#include "possur/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "possur/error.hpp"

namespace possur {

Index TrialDataset::column_index(std::string_view name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c].name == name) return static_cast<Index>(c);
    return -1;
}

void TrialDataset::validate() const {
    const Index rows = outcomes.rows();
    if (rows < 1) throw ConfigError("dataset has no subjects");
    if (outcomes.cols() < 1) throw ConfigError("dataset has no outcome columns");
    if (treatment.size() != rows) throw ConfigError("treatment column length differs from outcomes");
    if (covariates.rows() != rows && covariates.cols() > 0)
        throw ConfigError("covariate table length differs from outcomes");
    if (static_cast<Index>(columns.size()) != covariates.cols())
        throw ConfigError("covariate table has " + std::to_string(covariates.cols()) +
                          " columns but " + std::to_string(columns.size()) + " names");
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < outcomes.cols(); ++j)
            if (!std::isfinite(outcomes(i, j)))
                throw ConfigError("row " + std::to_string(i + 1) + ": non-finite outcome y" +
                                  std::to_string(j + 1));
        if (treatment(i) != 0.0 && treatment(i) != 1.0)
            throw ConfigError("row " + std::to_string(i + 1) + ": treatment must be 0 or 1");
        for (Index c = 0; c < covariates.cols(); ++c) {
            const double v = covariates(i, c);
            const auto& col = columns[static_cast<std::size_t>(c)];
            if (!std::isfinite(v))
                throw ConfigError("row " + std::to_string(i + 1) + ": non-finite covariate " +
                                  col.name);
            if (col.kind == CovariateKind::binary && v != 0.0 && v != 1.0)
                throw ConfigError("row " + std::to_string(i + 1) + ": binary covariate " +
                                  col.name + " must be 0 or 1");
            if (col.kind == CovariateKind::count && (v < 0.0 || v != std::floor(v)))
                throw ConfigError("row " + std::to_string(i + 1) + ": count covariate " +
                                  col.name + " must be a non-negative integer");
        }
    }
}

Index ModelSpec::p() const {
    Index total = 0;
    for (const auto& e : endpoints) total += e.nuisance_count();
    return total;
}

std::vector<std::string> ModelSpec::used_covariates() const {
    std::vector<std::string> names;
    for (const auto& e : endpoints)
        for (const auto& c : e.covariates)
            if (std::find(names.begin(), names.end(), c) == names.end()) names.push_back(c);
    return names;
}

std::string_view to_string(CovariateKind kind) {
    switch (kind) {
        case CovariateKind::continuous: return "cont";
        case CovariateKind::binary: return "bin";
        case CovariateKind::count: return "count";
    }
    return "cont";
}

CovariateKind parse_covariate_kind(std::string_view tag) {
    if (tag == "cont" || tag == "continuous") return CovariateKind::continuous;
    if (tag == "bin" || tag == "binary") return CovariateKind::binary;
    if (tag == "count") return CovariateKind::count;
    throw ConfigError("unknown covariate kind '" + std::string(tag) + "'");
}

std::string_view to_string(Direction d) { return d == Direction::greater ? ">" : "<"; }

Direction parse_direction(std::string_view op) {
    if (op == ">") return Direction::greater;
    if (op == "<") return Direction::less;
    throw ConfigError("comparison must be '>' or '<', got '" + std::string(op) + "'");
}

}  // namespace possur

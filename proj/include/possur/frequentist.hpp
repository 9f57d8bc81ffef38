#pragma once

// Marginal OLS p-values and the Holm / IUT-Holm decisions used as the
// frequentist comparator.

#include <vector>

#include "possur/success_region.hpp"
#include "possur/sur_core.hpp"

namespace possur {

/// Per-endpoint treatment-effect t statistics from separate OLS fits.
struct PvalueSet {
    std::vector<double> estimate;
    std::vector<double> std_error;
    std::vector<double> dof;
    /// One-sided p-values for the ModelSpec direction and delta.
    std::vector<double> p;

    /// One-sided p-value against H0 = complement of `event`.
    double p_for(const Event& event) const;
};

/// Requires n > p_j + 2 for every endpoint; the design is already rank-checked.
PvalueSet marginal_pvalues(const SurDesignd& design, const ModelSpec& spec);
PvalueSet marginal_pvalues(const TrialDataset& data, const ModelSpec& spec);

enum class RegionShape { single, union_of_two, primary_and_union };

/// Classifies a DNF as one of the three supported shapes or throws
/// "no frequentist rule defined".
RegionShape classify_region(const DnfRegion& region);

/// single: p < alpha. union_of_two: min p < alpha/2 or max p < alpha.
/// primary_and_union: p_primary < alpha and the union rule on the other two.
bool holm_composite_decision(const PvalueSet& pvals, const DnfRegion& region, double alpha);

}  // namespace possur

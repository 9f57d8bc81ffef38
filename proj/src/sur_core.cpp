#include "possur/sur_core.hpp"

#include <string>

namespace possur {

SurDesignd assemble_design(const TrialDataset& data, const ModelSpec& spec) {
    if (spec.J() != data.J())
        throw ConfigError("model declares " + std::to_string(spec.J()) +
                          " endpoints but the dataset has " + std::to_string(data.J()));
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(spec.endpoints.size());
    for (Index j = 0; j < spec.J(); ++j) {
        const auto& ep = spec.endpoints[static_cast<std::size_t>(j)];
        Eigen::MatrixXd x(data.n(), 1 + ep.nuisance_count());
        x.col(0) = data.treatment;
        Index c = 1;
        if (ep.intercept) x.col(c++).setOnes();
        for (const auto& name : ep.covariates) {
            const Index src = data.column_index(name);
            if (src < 0)
                throw ConfigError("endpoint " + std::to_string(j + 1) + ": covariate '" + name +
                                  "' not present in dataset");
            x.col(c++) = data.covariates.col(src);
        }
        if (!has_full_column_rank(x))
            throw Error("endpoint " + std::to_string(j + 1) + ": design matrix is rank deficient");
        blocks.push_back(std::move(x));
    }
    return SurDesignd(data.outcomes, std::move(blocks));
}

}  // namespace possur

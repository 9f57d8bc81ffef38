#include "possur/random.hpp"

#include <cmath>

#include "possur/error.hpp"

namespace possur {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t substream) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ (substream * 0xd1b54a32d192ed03ULL));
}

Eigen::VectorXd standard_normal_vector(Eigen::Index size, Rng& rng) {
    std::normal_distribution<double> normal;
    Eigen::VectorXd z(size);
    for (Eigen::Index i = 0; i < size; ++i) z(i) = normal(rng);
    return z;
}

Eigen::MatrixXd bartlett_factor(Eigen::Index dim, double dof, Rng& rng) {
    if (!(dof > static_cast<double>(dim - 1)))
        throw NumericalError("insufficient effective sample size: Wishart degrees of freedom " +
                             std::to_string(dof) + " must exceed " + std::to_string(dim - 1));
    std::normal_distribution<double> normal;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        std::gamma_distribution<double> chi2(0.5 * (dof - static_cast<double>(i)), 2.0);
        a(i, i) = std::sqrt(chi2(rng));
        for (Eigen::Index j = 0; j < i; ++j) a(i, j) = normal(rng);
    }
    return a;
}

}  // namespace possur

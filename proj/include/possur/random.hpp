#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>

namespace possur {

using Rng = std::mt19937_64;

/// Seed for substream (stream, substream) of `master`. Substreams for
/// different counters are decorrelated by a splitmix64 finalizer.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t substream = 0);

inline Rng make_stream(std::uint64_t master, std::uint64_t stream = 0, std::uint64_t substream = 0) {
    return Rng(derive_seed(master, stream, substream));
}

Eigen::VectorXd standard_normal_vector(Eigen::Index size, Rng& rng);

/// Lower-triangular Bartlett factor A with A A' ~ Wishart_J(dof, I).
/// Requires dof > J - 1.
Eigen::MatrixXd bartlett_factor(Eigen::Index dim, double dof, Rng& rng);

}  // namespace possur

#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <span>

namespace nvl {

// Pairwise (cascade) summation with a fixed split order. Every reduction in
// the library goes through here so results are bit-reproducible for a given
// input layout.
double pairwise_sum(std::span<const double> values);

inline double pairwise_sum(const Eigen::ArrayXd& values) {
    return pairwise_sum(std::span<const double>(values.data(), static_cast<std::size_t>(values.size())));
}

} // namespace nvl

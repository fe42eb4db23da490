#include "nvarlab/summation.hpp"

namespace nvl {

namespace {
constexpr std::size_t kLeaf = 32;

double sum_range(const double* p, std::size_t n) {
    if (n <= kLeaf) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) acc += p[i];
        return acc;
    }
    const std::size_t half = n / 2;
    return sum_range(p, half) + sum_range(p + half, n - half);
}
} // namespace

double pairwise_sum(std::span<const double> values) {
    return sum_range(values.data(), values.size());
}

} // namespace nvl

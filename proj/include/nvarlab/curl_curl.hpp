#pragma once

#include "nvarlab/grid.hpp"
#include "nvarlab/nonlinearity.hpp"

#include <optional>
#include <vector>

namespace nvl {

// N real components on a K = 2 grid (N >= 3). A field produced by lift
// remembers the scalar it came from.
class VectorField {
public:
    VectorField(GridPtr grid, std::vector<Eigen::ArrayXd> components, std::optional<Field> source = std::nullopt);

    static VectorField zeros(GridPtr grid);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const ProblemParams& params() const { return grid_->params(); }
    int dim() const { return static_cast<int>(components_.size()); }
    const Eigen::ArrayXd& component(int a) const { return components_[static_cast<std::size_t>(a)]; }
    const std::vector<Eigen::ArrayXd>& components() const { return components_; }
    const std::optional<Field>& source() const { return source_; }

private:
    GridPtr grid_;
    std::vector<Eigen::ArrayXd> components_;
    std::optional<Field> source_;
};

// U = (u/r)(-x2, x1, 0).
VectorField lift(const Field& u);

// Spectral gradient of a scalar (Nyquist derivative zeroed).
VectorField spectral_gradient(const Field& phi);

// |U|_2^2 and the pointwise |U|.
double mass(const VectorField& U);
Eigen::ArrayXd magnitude(const VectorField& U);

// int |grad U|^2, int (div U)^2 and their difference, the weak curl energy
// (|curl U|_2^2 in three dimensions). All spectral.
double gradient_energy(const VectorField& U);
Eigen::ArrayXd divergence(const VectorField& U);
double divergence_norm(const VectorField& U);
double curl_energy(const VectorField& U);

// E(U) = |curl U|_2^2 / 2 - int G(U) for a lifted U at s = 1, mu = 1. The
// quadratic term is the source's [u]^2 (the reduction
// |curl U|_2^2 = |grad u|_2^2 + int u^2/r^2), and int G(U) = int F(|U|)
// is evaluated from the components.
double vector_energy(const VectorField& U, const Nonlinearity& nl);

} // namespace nvl

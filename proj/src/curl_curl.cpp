#include "nvarlab/curl_curl.hpp"

#include "nvarlab/energy.hpp"
#include "nvarlab/errors.hpp"
#include "nvarlab/summation.hpp"

#include <cmath>

namespace nvl {

namespace {

constexpr double kLiftSymmetryTol = 1e-6;

void check_vector_grid(const ProblemParams& p) {
    if (p.K != 2) throw ValidationError("vector fields need K = 2");
    if (p.N < 3) throw ValidationError("vector fields need N >= 3");
}

std::vector<ComplexArray> transforms(const VectorField& U) {
    std::vector<ComplexArray> out(static_cast<std::size_t>(U.dim()));
    for (int a = 0; a < U.dim(); ++a) U.grid().forward(U.component(a), out[static_cast<std::size_t>(a)]);
    return out;
}

// sum_a i xi_a U_a on the half spectrum
ComplexArray divergence_hat(const Grid& g, const std::vector<ComplexArray>& hats) {
    ComplexArray d(g.spectral_size(), {0.0, 0.0});
    for (std::size_t a = 0; a < hats.size(); ++a) {
        const Eigen::ArrayXd& xi = g.derivative_wavenumber(static_cast<int>(a));
        for (std::size_t k = 0; k < d.size(); ++k) d[k] += std::complex<double>(0.0, xi[static_cast<Eigen::Index>(k)]) * hats[a][k];
    }
    return d;
}

Eigen::ArrayXd xi_squared(const Grid& g) {
    Eigen::ArrayXd x2 = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(g.spectral_size()));
    for (int a = 0; a < g.dim(); ++a) x2 += g.derivative_wavenumber(a).square();
    return x2;
}

} // namespace

VectorField::VectorField(GridPtr grid, std::vector<Eigen::ArrayXd> components, std::optional<Field> source)
    : grid_(std::move(grid)), components_(std::move(components)), source_(std::move(source)) {
    if (!grid_) throw ValidationError("vector field without a grid");
    check_vector_grid(grid_->params());
    if (static_cast<int>(components_.size()) != grid_->dim()) throw ValidationError("vector field needs N components");
    for (const auto& c : components_) {
        if (static_cast<std::size_t>(c.size()) != grid_->size()) throw ValidationError("component size mismatch");
        if (!c.allFinite()) throw NumericalError("non-finite vector field component");
    }
    if (source_ && !(source_->params() == grid_->params())) throw ValidationError("source lives on a different grid");
}

VectorField VectorField::zeros(GridPtr grid) {
    const auto n = static_cast<Eigen::Index>(grid->size());
    const int N = grid->dim();
    return VectorField(std::move(grid), std::vector<Eigen::ArrayXd>(static_cast<std::size_t>(N), Eigen::ArrayXd::Zero(n)));
}

VectorField lift(const Field& u) {
    const auto& p = u.params();
    check_vector_grid(p);
    if (symmetry_residual(u) > kLiftSymmetryTol) throw ValidationError("lift requires G-invariance");
    const Grid& g = u.grid();
    const Eigen::ArrayXd& r = g.y_radius();
    const Eigen::ArrayXd q = u.samples() / r;
    std::vector<Eigen::ArrayXd> c(static_cast<std::size_t>(p.N), Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(g.size())));
    c[0] = -q * g.coordinate(1);
    c[1] = q * g.coordinate(0);
    return VectorField(u.grid_ptr(), std::move(c), u);
}

VectorField spectral_gradient(const Field& phi) {
    const Grid& g = phi.grid();
    ComplexArray P;
    g.forward(phi.samples(), P);
    std::vector<Eigen::ArrayXd> c(static_cast<std::size_t>(g.dim()));
    for (int a = 0; a < g.dim(); ++a) {
        const Eigen::ArrayXd& xi = g.derivative_wavenumber(a);
        ComplexArray D(P.size());
        for (std::size_t k = 0; k < P.size(); ++k) D[k] = std::complex<double>(0.0, xi[static_cast<Eigen::Index>(k)]) * P[k];
        g.inverse(D, c[static_cast<std::size_t>(a)]);
    }
    return VectorField(phi.grid_ptr(), std::move(c));
}

double mass(const VectorField& U) {
    double m = 0.0;
    for (const auto& c : U.components()) m += U.grid().inner(c, c);
    return m;
}

Eigen::ArrayXd magnitude(const VectorField& U) {
    Eigen::ArrayXd m2 = Eigen::ArrayXd::Zero(U.component(0).size());
    for (const auto& c : U.components()) m2 += c.square();
    return m2.sqrt();
}

double gradient_energy(const VectorField& U) {
    const Eigen::ArrayXd x2 = xi_squared(U.grid());
    double e = 0.0;
    for (const auto& h : transforms(U)) e += U.grid().spectral_energy(h, x2);
    return e;
}

Eigen::ArrayXd divergence(const VectorField& U) {
    Eigen::ArrayXd out;
    U.grid().inverse(divergence_hat(U.grid(), transforms(U)), out);
    return out;
}

double divergence_norm(const VectorField& U) {
    const ComplexArray d = divergence_hat(U.grid(), transforms(U));
    const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(U.grid().spectral_size()));
    return std::sqrt(std::max(0.0, U.grid().spectral_energy(d, ones)));
}

double curl_energy(const VectorField& U) {
    const Grid& g = U.grid();
    const auto hats = transforms(U);
    const Eigen::ArrayXd x2 = xi_squared(g);
    double grad = 0.0;
    for (const auto& h : hats) grad += g.spectral_energy(h, x2);
    const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(g.spectral_size()));
    const double div = g.spectral_energy(divergence_hat(g, hats), ones);
    return std::max(0.0, grad - div);
}

double vector_energy(const VectorField& U, const Nonlinearity& nl) {
    if (!U.source()) throw ValidationError("vector energy requires lifted provenance");
    const auto& p = U.params();
    if (p.s != 1.0 || p.mu != 1.0) throw ValidationError("vector energy needs s = 1 and mu = 1");
    if (nl.N() != p.N || nl.s() != p.s) throw ValidationError("nonlinearity built for a different (N, s)");
    const double quad = seminorm_sq(*U.source());
    const double pot = U.grid().cell_volume() * pairwise_sum(nl.F(magnitude(U)));
    return 0.5 * quad - pot;
}

} // namespace nvl

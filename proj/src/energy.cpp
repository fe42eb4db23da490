#include "nvarlab/energy.hpp"

#include "nvarlab/errors.hpp"
#include "nvarlab/summation.hpp"

#include <cmath>

namespace nvl {

namespace {

double hardy_part_of(const Field& u) {
    const auto& p = u.params();
    if (p.mu == 0.0 || !p.has_hardy()) return 0.0;
    return p.mu * hardy_weight_integral(u);
}

double potential_of(const Field& u, const Nonlinearity& nl) {
    const Eigen::ArrayXd F = nl.F(u.samples());
    const double v = u.grid().cell_volume() * pairwise_sum(F);
    if (!std::isfinite(v)) throw NumericalError("non-finite potential energy int F(u)");
    return v;
}

void finish(EnergyBreakdown& e) {
    e.seminorm_sq = e.ds_part + e.hardy_part;
    e.J = 0.5 * e.seminorm_sq - e.potential;
}

} // namespace

EnergyBreakdown evaluate(const Field& u, const Nonlinearity& nl) {
    EnergyBreakdown e;
    e.ds_part = apply_Ds_squared(u);
    e.hardy_part = hardy_part_of(u);
    e.potential = potential_of(u, nl);
    e.mass = mass(u);
    finish(e);
    return e;
}

EnergyBreakdown evaluate_with_gradient(const Field& u, const Nonlinearity& nl, Eigen::ArrayXd& grad) {
    const Grid& g = u.grid();
    ComplexArray U;
    g.forward(u.samples(), U);
    EnergyBreakdown e;
    e.ds_part = g.spectral_energy(U, g.multiplier());
    const auto& m = g.multiplier();
    for (std::size_t i = 0; i < U.size(); ++i) U[i] *= m(static_cast<Eigen::Index>(i));
    g.inverse(U, grad);
    e.hardy_part = hardy_part_of(u);
    if (e.hardy_part != 0.0) grad += u.params().mu * g.hardy_weight() * u.samples();
    grad -= nl.f(u.samples());
    e.potential = potential_of(u, nl);
    e.mass = mass(u);
    finish(e);
    return e;
}

double seminorm_sq(const Field& u) { return apply_Ds_squared(u) + hardy_part_of(u); }

Eigen::ArrayXd quadratic_operator(const Field& u) {
    Eigen::ArrayXd a = fractional_laplacian(u.grid(), u.samples());
    const auto& p = u.params();
    if (p.mu != 0.0 && p.has_hardy()) a += p.mu * u.grid().hardy_weight() * u.samples();
    return a;
}

double delta_p(int N, double s, double p) { return (N / s) * (0.5 - 1.0 / p); }

double quotient_R(const Field& u, double p) {
    const auto& prm = u.params();
    const double star = critical_sobolev_exponent(prm.N, prm.s);
    if (!(p > 2.0) || !(p < star)) throw ValidationError("quotient requires 2 < p < 2*");
    const double M = mass(u);
    if (M == 0.0) throw ValidationError("quotient undefined at zero");
    const double S = seminorm_sq(u);
    if (!(S > 0.0)) throw NumericalError("[u]_mu^2 is not positive; grid under-resolves the Hardy term");
    const double P = lp_power(u, p);
    const double d = delta_p(prm.N, prm.s, p);
    return std::exp(0.5 * p * d * std::log(S) + 0.5 * p * (1.0 - d) * std::log(M) - std::log(P));
}

Field gradient(const Field& u, const Nonlinearity& nl) {
    Eigen::ArrayXd g;
    evaluate_with_gradient(u, nl, g);
    return Field(u.grid_ptr(), std::move(g));
}

Eigen::ArrayXd precondition(const Grid& grid, const Eigen::ArrayXd& v) {
    ComplexArray V;
    grid.forward(v, V);
    const auto& m = grid.multiplier();
    for (std::size_t i = 0; i < V.size(); ++i) V[i] /= 1.0 + m(static_cast<Eigen::Index>(i));
    Eigen::ArrayXd out;
    grid.inverse(V, out);
    return out;
}

double dual_norm_sq(const Grid& grid, const Eigen::ArrayXd& v) {
    ComplexArray V;
    grid.forward(v, V);
    const Eigen::ArrayXd w = 1.0 / (1.0 + grid.multiplier());
    return grid.spectral_energy(V, w);
}

IdentityReport identities(const Field& u, const Nonlinearity& nl) {
    const double M = mass(u);
    if (M == 0.0) throw ValidationError("identities undefined at zero");
    const auto& prm = u.params();
    Eigen::ArrayXd grad;
    const EnergyBreakdown e = evaluate_with_gradient(u, nl, grad);
    const Grid& g = u.grid();
    const Eigen::ArrayXd fu = nl.f(u.samples());
    const double fuu = g.inner(fu, u.samples());
    const double S = e.seminorm_sq;
    IdentityReport r;
    r.lambda_estimate = (fuu - S) / M;
    const double N = prm.N;
    const double twoF_minus_lambda_u2 = 2.0 * e.potential - r.lambda_estimate * M;
    r.pohozaev_residual = std::abs((N - 2.0 * prm.s) * S - N * twoF_minus_lambda_u2) / S;
    r.M_value = prm.s * S + 0.5 * N * (2.0 * e.potential - fuu);
    const Eigen::ArrayXd residual = grad + r.lambda_estimate * u.samples();
    const double hs_norm = std::sqrt(M + e.ds_part);
    r.nehari_residual = std::sqrt(dual_norm_sq(g, residual)) * hs_norm / S;
    return r;
}

} // namespace nvl

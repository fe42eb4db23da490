#pragma once

#include "nvarlab/grid.hpp"
#include "nvarlab/nonlinearity.hpp"

namespace nvl {

struct EnergyBreakdown {
    double ds_part = 0.0;      // |D^s u|_2^2
    double hardy_part = 0.0;   // mu int u^2/|y|^{2s}
    double seminorm_sq = 0.0;  // [u]_mu^2
    double potential = 0.0;    // int F(u)
    double J = 0.0;
    double mass = 0.0;
};

// All residuals are relative to [u]_mu^2.
struct IdentityReport {
    double pohozaev_residual = 0.0;
    double nehari_residual = 0.0;
    double M_value = 0.0;
    double lambda_estimate = 0.0;
};

EnergyBreakdown evaluate(const Field& u, const Nonlinearity& nl);

// Same as evaluate, and writes the L^2 gradient of J into grad (one FFT pair).
EnergyBreakdown evaluate_with_gradient(const Field& u, const Nonlinearity& nl, Eigen::ArrayXd& grad);

// [u]_mu^2 alone.
double seminorm_sq(const Field& u);

// (-Delta)^s u + mu |y|^{-2s} u, the operator whose quadratic form is [u]_mu^2.
Eigen::ArrayXd quadratic_operator(const Field& u);

// (N/s)(1/2 - 1/p).
double delta_p(int N, double s, double p);

// [u]^{p delta_p} |u|_2^{p(1-delta_p)} / |u|_p^p.
double quotient_R(const Field& u, double p);

// (-Delta)^s u + mu |y|^{-2s} u - f(u).
Field gradient(const Field& u, const Nonlinearity& nl);

// Pohozaev / Nehari consistency at u, with lambda solved from the Nehari
// identity. nehari_residual measures the remaining Euler-Lagrange residual
// r = gradient + lambda u as |r|_{H^-s} |u|_{H^s} / [u]^2 (Nehari's pairing
// tested against every direction of the same H^s size).
IdentityReport identities(const Field& u, const Nonlinearity& nl);

// ||v||_{H^-s}^2 with weight (1+|xi|^{2s})^{-1}; used by solvers as the
// convergence measure.
double dual_norm_sq(const Grid& grid, const Eigen::ArrayXd& v);
// Applies (1+|xi|^{2s})^{-1}.
Eigen::ArrayXd precondition(const Grid& grid, const Eigen::ArrayXd& v);

} // namespace nvl

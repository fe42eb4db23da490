#pragma once

#include "nvarlab/gn.hpp"
#include "nvarlab/nonlinearity.hpp"
#include "nvarlab/optimizer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nvl {

enum class MStatus { zero, negative, unbounded };
std::string to_string(MStatus s);

struct MSample {
    double rho = 0.0;
    double m = 0.0;
    MStatus status = MStatus::zero;
};

// 1e-6 rho^{1 - 2s/N}.
double zero_tolerance(int N, double s, double rho);

// m(rho) from a ball-mode multistart; extra seeds are rescaled to mass rho.
MSample estimate_m(const GridPtr& grid, const Nonlinearity& nl, double rho, const SolverConfig& cfg,
                   const std::vector<Field>& extra_seeds = {});

// (2 C eta)^{-N/(2s)} with the conventions 1/0 = +inf and 1/inf = 0.
double eta_bound(int N, double s, double C, double eta);

struct ClosedFormBounds {
    double eta_bar_0_bound = 0.0;   // (2 C eta_bar_0)^{-N/(2s)}
    double eta_bar_inf_bound = 0.0; // (2 C eta_bar_inf)^{-N/(2s)}
    double eta_lower_0_bound = 0.0; // (2 C eta_lower_0)^{-N/(2s)}
    double sup_ratio_bound = 0.0;   // (2 C_F C)^{-N/(2s)}, C_F = sup F/|t|^{2_#}
    std::optional<double> rho_F_estimate;
};

// C is the constant C_{N,2_#} for the grid's (N, s, mu).
ClosedFormBounds closed_form_bounds(const Nonlinearity& nl, double C);

struct ThresholdResult {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<MSample> m_samples; // in evaluation order
    std::optional<ClosedFormBounds> bounds;
};

// Bisection (midpoint in log rho) on the predicate "m(rho) < 0 or unbounded".
// Throws ValidationError when the starting bracket does not have statuses
// (zero, negative/unbounded).
ThresholdResult bisect_rho_star(const GridPtr& grid, const Nonlinearity& nl, double lo, double hi, int iters,
                                const SolverConfig& cfg, const std::vector<Field>& extra_seeds = {});

// t * w for t in scales, skipping scales the grid cannot represent.
std::vector<Field> dilated_seeds(const Field& w, const std::vector<double>& scales);

struct RhoFResult {
    double estimate = 0.0;            // min over sigma
    std::vector<double> sigma;        // the sigmas that admitted a seed
    std::vector<double> per_sigma;    // the value reached from each of them
};

// Upper bound for rho_F = inf_sigma (1/(2 sigma))^{N/(2s)} inf{[u]^{N/s}|u|_2^2 : int F(u) >= sigma}.
// For each sigma the plateau bump with the amplitude making int F = sigma
// seeds a descent on |u|_2^2 ([u]^2 / (2 int F(u)))^{N/(2s)}, which is the
// inner quotient after the spatial rescaling that makes int F(u) = sigma
// exactly (the value does not depend on sigma in the continuum). Descent
// directions carry the window mask: on the bare torus the constant state
// has zero seminorm and the quotient collapses to 0.
RhoFResult estimate_rho_F(const GridPtr& grid, const Nonlinearity& nl, const std::vector<double>& sigma_grid,
                          int max_iters = 400, double window = 0.9);

struct SubadditivityEntry {
    double rho1 = 0.0, rho2 = 0.0;
    double m1 = 0.0, m2 = 0.0, m12 = 0.0;
    // m1 + m2 - m12; nonnegative up to tolerance when subadditivity holds
    double margin = 0.0;
    bool ok = false;
};

std::vector<SubadditivityEntry> subadditivity_check(const GridPtr& grid, const Nonlinearity& nl,
                                                    const std::vector<std::pair<double, double>>& pairs,
                                                    const SolverConfig& cfg, double tol = 1e-6,
                                                    const std::vector<Field>& extra_seeds = {});

// The tau-interval of the negativity argument: v = w(tau .) has |v|_2^2 <= rho
// and [v]^2/2 < eta_lower_0 |v|_{2_#}^{2_#} exactly for
// (2_#/(2C))^{1/(2s)} rho^{-1/N} <= tau < (2_# eta_lower_0)^{1/(2s)}.
struct TauInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool nonempty = false;
};
TauInterval negativity_interval(int N, double s, double C, double eta_lower_0, double rho);

// A numerical gamma for the small-seminorm coercivity: on D(rho) with
// [u]^2 <= 4 gamma, J(u) >= (1/2)(1/2 - C eta_bar_0 rho^{2s/N}) [u]^2.
// Uses F <= (eta_bar_0 + eps)|t|^{2_#} + C_eps |t|^{p2} (C_eps sampled) and
// the GN inequality at p2 = gn_p2.p, with eps and the p2-term each taking a
// quarter of the margin 1/2 - C eta_bar_0 rho^{2s/N}.
struct GammaBound {
    double gamma = 0.0;
    double epsilon = 0.0;
    double C_eps = 0.0;
    double p2 = 0.0;
    double margin = 0.0;
};
GammaBound gamma_bound(const Nonlinearity& nl, double rho, double C_sharp, const GNResult& gn_p2);

// Sphere-mode solve at rho (meant for the bracket midpoint). A nontrivial
// minimizer is accepted only when the solve converged, J is within the
// zero tolerance of 0, and the Pohozaev residual is below 10 grad_tol.
struct NonexistenceReport {
    double rho = 0.0;
    double J = 0.0;
    bool converged = false;
    double pohozaev_residual = 0.0;
    double M_ratio = 0.0;
    bool minimizer_found = false;
};
NonexistenceReport nonexistence_diagnostic(const GridPtr& grid, const Nonlinearity& nl, double rho,
                                           const SolverConfig& cfg);

} // namespace nvl

#pragma once

#include "nvarlab/energy.hpp"
#include "nvarlab/grid.hpp"
#include "nvarlab/nonlinearity.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace nvl {

enum class Constraint { ball, sphere };
std::string to_string(Constraint c);
Constraint constraint_from_string(const std::string& s);

// Descent direction: plain preconditioned projected gradient, or the same
// gradient combined with the previous direction (Polak-Ribiere+, reset when
// the active constraint changes). Both use the same Armijo acceptance.
enum class Method { gradient, conjugate_gradient };
std::string to_string(Method m);
Method method_from_string(const std::string& s);

enum class ProbeOutcome { bounded, unbounded, undetermined };
std::string to_string(ProbeOutcome p);

struct ProgressRecord {
    int iter = 0;
    double J = 0.0;
    double mass = 0.0;
    double grad_norm = 0.0;
};

struct SolverConfig {
    double rho = 1.0;
    Constraint constraint = Constraint::ball;
    // Activates the B(rho) mode: iterates keep [u]_mu^2 > gamma_star.
    std::optional<double> gamma_star;
    double step0 = 1.0;
    Method method = Method::conjugate_gradient;
    int max_iters = 2000;
    double grad_tol = 1e-8;
    int restarts = 1;
    std::uint64_t seed = 0;
    // Confinement: descent directions are multiplied by a smooth cutoff equal
    // to 1 on |x_a| <= 0.8 w L/2 and 0 beyond w L/2 on every axis. 1 disables.
    // Keeps iterates away from the periodic images (the torus admits the
    // constant state, whose energy is negative for any F > 0 near 0).
    double window = 1.0;
    // Average the initial field, every gradient and every search direction
    // over the signed permutations of y (K >= 2), so the iteration stays in
    // the G-invariant class instead of drifting off it through rounding.
    bool symmetric = true;
    bool probe = true;
    std::vector<double> t_grid{1.0, 2.0, 4.0, 8.0};
    std::function<void(const ProgressRecord&)> progress;

    void validate() const;
};

struct MinimizeResult {
    Field field;
    EnergyBreakdown breakdown;
    std::optional<IdentityReport> identity; // absent for the zero field
    bool converged = false;
    int iterations = 0;
    bool unbounded = false;
    ProbeOutcome probe = ProbeOutcome::undetermined;
    double grad_norm = 0.0;
    int start_index = 0;
};

// Projected, preconditioned gradient descent with Armijo backtracking,
// started from init (projected onto the constraint first).
MinimizeResult minimize(const Field& init, const Nonlinearity& nl, const SolverConfig& cfg);
// Same, started from the deterministic bump.
MinimizeResult minimize(const GridPtr& grid, const Nonlinearity& nl, const SolverConfig& cfg);

struct ProbeReport {
    ProbeOutcome outcome = ProbeOutcome::undetermined;
    std::vector<double> t;
    std::vector<double> J;
    double base_scale = 1.0; // the probe ran on dilate(u, base_scale)
};

// J(t * u) along t_grid. Stops at the first t where dilation fails or the
// dilated field is no longer resolved.
ProbeReport dilation_probe(const Field& u, const Nonlinearity& nl, const std::vector<double>& t_grid);

// Best of: the deterministic bump (index 0), restarts - 1 random
// G-symmetric Gaussian sums, and any extra seeds (indices after those).
MinimizeResult multistart(const GridPtr& grid, const Nonlinearity& nl, const SolverConfig& cfg,
                          const std::vector<Field>& extra_seeds = {});

// The compactly supported plateau bump t phi(|y|) phi(|z|), phi = 0 near 0
// and beyond R + a, 1 on [2a, R]; scaled to mass rho.
Field bump_initializer(const GridPtr& grid, double rho);
Field random_initializer(const GridPtr& grid, double rho, std::mt19937_64& rng);

// The confinement cutoff for a window fraction (all ones for window >= 1).
Eigen::ArrayXd window_mask(const Grid& grid, double window);

// Rescales u to mass rho (zero stays zero).
Field rescale_to_mass(const Field& u, double rho);

// Portable uniform draw in [0, 1).
double uniform01(std::mt19937_64& rng);

} // namespace nvl

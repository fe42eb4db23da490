#pragma once

#include "nvarlab/errors.hpp"
#include "nvarlab/grid.hpp"

#include <cstdint>
#include <optional>

namespace nvl {

struct GNConfig {
    int max_iters = 4000;
    // on the H^-s norm of the gradient of log R
    double grad_tol = 1e-9;
    std::uint64_t seed = 0;
    // 0: the centred Gaussian; otherwise a random G-symmetric start from seed
    bool random_start = false;
    double window = 1.0;
    std::optional<Field> init;

    void validate() const;
};

struct GNResult {
    double iota = 0.0;
    double C = 0.0;
    Field w;
    double char_residual = 0.0;
    // |(-Delta)^s w + mu|y|^{-2s} w + ((1-delta)/delta) w - |w|^{p-2} w|_2 / ||w|^{p-2} w|_2
    double el_residual = 0.0;
    double p = 0.0;
    double delta_p = 0.0;
    int iterations = 0;
};

// Raised when the quotient descent stops short of the tolerance; carries
// the last iterate (normalized to [u] = |u|_2 = 1) and its quotient.
class ConvergenceError : public NumericalError {
public:
    ConvergenceError(const std::string& what, Field last, double last_R)
        : NumericalError(what), last_(std::move(last)), last_R_(last_R) {}
    const Field& last_iterate() const { return last_; }
    double last_quotient() const { return last_R_; }

private:
    Field last_;
    double last_R_;
};

// Minimizes R(u) = [u]^{p delta}|u|_2^{p(1-delta)}/|u|_p^p on the grid. The
// returned w is the minimizer normalized by [u0] = |u0|_2 = 1 and scaled by
// (iota/delta)^{1/(p-2)}.
GNResult compute_gn(const GridPtr& grid, double p, const GNConfig& cfg = {});

// |u|_p^p / (C [u]^{p delta} |u|_2^{p(1-delta)}), i.e. iota / R(u).
double verify_gn_inequality(const Field& u, const GNResult& gn);

} // namespace nvl

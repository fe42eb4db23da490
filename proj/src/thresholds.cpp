#include "nvarlab/thresholds.hpp"

#include "nvarlab/energy.hpp"
#include "nvarlab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nvl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_positive(MStatus s) { return s != MStatus::zero; }

} // namespace

std::string to_string(MStatus s) {
    switch (s) {
    case MStatus::zero: return "zero";
    case MStatus::negative: return "negative";
    case MStatus::unbounded: return "unbounded";
    }
    return "zero";
}

double zero_tolerance(int N, double s, double rho) { return 1e-6 * std::pow(rho, 1.0 - 2.0 * s / N); }

MSample estimate_m(const GridPtr& grid, const Nonlinearity& nl, double rho, const SolverConfig& cfg,
                   const std::vector<Field>& extra_seeds) {
    if (!(rho > 0.0)) throw ValidationError("rho must be positive");
    SolverConfig c = cfg;
    c.rho = rho;
    c.constraint = Constraint::ball;
    const MinimizeResult r = multistart(grid, nl, c, extra_seeds);
    const auto& p = grid->params();
    MSample out{rho, r.breakdown.J, MStatus::zero};
    if (r.unbounded) {
        out.status = MStatus::unbounded;
        out.m = -kInf;
    } else if (r.breakdown.J < -zero_tolerance(p.N, p.s, rho)) {
        out.status = MStatus::negative;
    }
    return out;
}

double eta_bound(int N, double s, double C, double eta) {
    if (!(C > 0.0)) throw ValidationError("GN constant must be positive");
    if (eta <= 0.0) return kInf;
    if (std::isinf(eta)) return 0.0;
    return std::pow(2.0 * C * eta, -N / (2.0 * s));
}

ClosedFormBounds closed_form_bounds(const Nonlinearity& nl, double C) {
    const GrowthData g = nl.growth_limits();
    const int N = nl.N();
    const double s = nl.s();
    ClosedFormBounds b;
    b.eta_bar_0_bound = eta_bound(N, s, C, g.eta_bar_0);
    b.eta_bar_inf_bound = eta_bound(N, s, C, g.eta_bar_inf);
    b.eta_lower_0_bound = eta_bound(N, s, C, g.eta_lower_0);
    b.sup_ratio_bound = eta_bound(N, s, C, nl.sampled_sup_ratio());
    return b;
}

ThresholdResult bisect_rho_star(const GridPtr& grid, const Nonlinearity& nl, double lo, double hi, int iters,
                                const SolverConfig& cfg, const std::vector<Field>& extra_seeds) {
    if (!(lo > 0.0) || !(hi > lo)) throw ValidationError("bracket must satisfy 0 < lo < hi");
    if (iters < 0) throw ValidationError("iters must be nonnegative");
    ThresholdResult res;
    const MSample a = estimate_m(grid, nl, lo, cfg, extra_seeds);
    const MSample b = estimate_m(grid, nl, hi, cfg, extra_seeds);
    res.m_samples = {a, b};
    if (is_positive(a.status) || !is_positive(b.status)) {
        throw ValidationError("invalid bracket: m(lo) status " + to_string(a.status) + ", m(hi) status " +
                              to_string(b.status) + " (need zero, negative/unbounded)");
    }
    for (int i = 0; i < iters; ++i) {
        const double mid = std::sqrt(lo * hi);
        const MSample m = estimate_m(grid, nl, mid, cfg, extra_seeds);
        res.m_samples.push_back(m);
        if (is_positive(m.status)) hi = mid;
        else lo = mid;
    }
    res.lo = lo;
    res.hi = hi;
    return res;
}

std::vector<Field> dilated_seeds(const Field& w, const std::vector<double>& scales) {
    std::vector<Field> out;
    for (double t : scales) {
        try {
            Field v = dilate(w, t);
            // seeds only start a descent, so a percent of truncation is harmless
            if (spectral_tail_fraction(v) > 1e-2 || mass(v) < 0.99 * mass(w)) continue;
            out.push_back(std::move(v));
        } catch (const NumericalError&) {
        }
    }
    return out;
}

namespace {

struct RatioValue {
    double M = 0.0, S = 0.0, P = 0.0, G = 0.0;
};

// log of |u|_2^2 ([u]^2 / (2 int F(u)))^{N/(2s)}; P <= 0 means infeasible.
RatioValue ratio_value(const Field& u, const Nonlinearity& nl) {
    RatioValue v;
    v.M = mass(u);
    v.S = seminorm_sq(u);
    v.P = u.grid().inner(nl.F(u.samples()), Eigen::ArrayXd::Ones(u.samples().size()));
    const auto& p = u.params();
    if (v.P > 0.0 && v.S > 0.0 && v.M > 0.0) {
        v.G = std::log(v.M) + (p.N / (2.0 * p.s)) * (std::log(v.S) - std::log(2.0 * v.P));
    } else {
        v.G = kInf;
    }
    return v;
}

double descend_ratio(Field u, const Nonlinearity& nl, int max_iters, const Eigen::ArrayXd& mask) {
    const Grid& g = u.grid();
    const auto& prm = u.params();
    const bool sym = prm.K >= 2;
    const double k = prm.N / (2.0 * prm.s);
    RatioValue v = ratio_value(u, nl);
    if (!std::isfinite(v.G)) return kInf;
    auto grad_of = [&](const Field& f, const RatioValue& rv) {
        Eigen::ArrayXd gr = (2.0 / rv.M) * f.samples() + k * ((2.0 / rv.S) * quadratic_operator(f) - nl.f(f.samples()) / rv.P);
        return sym ? symmetrize(g, gr) : gr;
    };
    Eigen::ArrayXd grad = grad_of(u, v);
    Eigen::ArrayXd prev_dir, prev_grad;
    double prev_gz = 0.0, step = 1.0;
    for (int it = 0; it < max_iters; ++it) {
        const Eigen::ArrayXd z = mask * precondition(g, Eigen::ArrayXd(mask * grad));
        const double gz = g.inner(grad, z);
        if (!(gz > 1e-24)) break;
        Eigen::ArrayXd dir = -z;
        if (prev_dir.size() > 0 && prev_gz > 0.0) {
            const double beta = std::max(0.0, g.inner(Eigen::ArrayXd(grad - prev_grad), z) / prev_gz);
            Eigen::ArrayXd cand = dir + beta * prev_dir;
            if (beta > 0.0 && g.inner(grad, cand) < 0.0) dir = std::move(cand);
        }
        const double slope = g.inner(grad, dir);
        if (!(slope < 0.0)) break;
        bool accepted = false;
        double tau = step;
        for (int bt = 0; bt < 60; ++bt, tau *= 0.5) {
            Eigen::ArrayXd trial = u.samples() + tau * dir;
            if (!trial.allFinite()) continue;
            Field tf(u.grid_ptr(), std::move(trial));
            const RatioValue tv = ratio_value(tf, nl);
            if (tv.G <= v.G + 1e-4 * tau * slope && tv.G < v.G) {
                u = std::move(tf);
                v = tv;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;
        step = std::min(2.0 * tau, 1e3);
        prev_dir = std::move(dir);
        prev_grad = grad;
        prev_gz = gz;
        grad = grad_of(u, v);
    }
    return std::exp(v.G);
}

} // namespace

RhoFResult estimate_rho_F(const GridPtr& grid, const Nonlinearity& nl, const std::vector<double>& sigma_grid,
                          int max_iters, double window) {
    if (!nl.positive_somewhere()) throw ValidationError("F never positive on sampled range");
    if (sigma_grid.empty()) throw ValidationError("sigma grid is empty");
    if (!(window > 0.0 && window < 1.0)) throw ValidationError("rho_F needs a window in (0, 1)");
    const Eigen::ArrayXd mask = window_mask(*grid, window);
    const Field bump = bump_initializer(grid, 1.0);
    const Field phi(grid, bump.samples() * mask / bump.samples().abs().maxCoeff());
    auto potential = [&](double a) {
        return grid->inner(nl.F(Eigen::ArrayXd(a * phi.samples())), Eigen::ArrayXd::Ones(phi.samples().size()));
    };
    RhoFResult out;
    out.estimate = kInf;
    // the amplitude scan is shared by every sigma
    std::vector<double> amps, pots;
    for (int i = 0; i <= 240; ++i) {
        const double a = std::pow(10.0, -3.0 + 6.0 * i / 240.0);
        amps.push_back(a);
        pots.push_back(potential(a));
    }
    for (double sigma : sigma_grid) {
        if (!(sigma > 0.0)) throw ValidationError("sigma values must be positive");
        std::size_t i = 0;
        while (i < pots.size() && !(pots[i] >= sigma)) ++i;
        if (i == pots.size()) continue;
        double a_lo = i == 0 ? 0.0 : amps[i - 1], a_hi = amps[i];
        for (int b = 0; b < 60; ++b) {
            const double mid = 0.5 * (a_lo + a_hi);
            if (potential(mid) >= sigma) a_hi = mid;
            else a_lo = mid;
        }
        const double val = descend_ratio(phi.scaled(a_hi), nl, max_iters, mask);
        out.sigma.push_back(sigma);
        out.per_sigma.push_back(val);
        out.estimate = std::min(out.estimate, val);
    }
    if (out.sigma.empty()) throw NumericalError("F never positive on sampled range");
    return out;
}

std::vector<SubadditivityEntry> subadditivity_check(const GridPtr& grid, const Nonlinearity& nl,
                                                    const std::vector<std::pair<double, double>>& pairs,
                                                    const SolverConfig& cfg, double tol,
                                                    const std::vector<Field>& extra_seeds) {
    std::vector<SubadditivityEntry> out;
    for (const auto& [r1, r2] : pairs) {
        SubadditivityEntry e;
        e.rho1 = r1;
        e.rho2 = r2;
        e.m1 = estimate_m(grid, nl, r1, cfg, extra_seeds).m;
        e.m2 = estimate_m(grid, nl, r2, cfg, extra_seeds).m;
        e.m12 = estimate_m(grid, nl, r1 + r2, cfg, extra_seeds).m;
        e.margin = e.m1 + e.m2 - e.m12;
        e.ok = std::isinf(e.m12) ? e.m12 < 0.0 : e.margin >= -tol;
        out.push_back(e);
    }
    return out;
}

TauInterval negativity_interval(int N, double s, double C, double eta_lower_0, double rho) {
    const double q = mass_critical_exponent(N, s);
    TauInterval t;
    t.lo = std::pow(q / (2.0 * C), 1.0 / (2.0 * s)) * std::pow(rho, -1.0 / N);
    t.hi = std::isinf(eta_lower_0) ? kInf : std::pow(q * eta_lower_0, 1.0 / (2.0 * s));
    t.nonempty = t.lo < t.hi;
    return t;
}

GammaBound gamma_bound(const Nonlinearity& nl, double rho, double C_sharp, const GNResult& gn_p2) {
    const int N = nl.N();
    const double s = nl.s();
    const double q = nl.two_sharp();
    const GrowthData g = nl.growth_limits();
    GammaBound out;
    out.p2 = gn_p2.p;
    if (!(out.p2 > q)) throw ValidationError("gamma bound needs a GN exponent above 2_#");
    const double r = std::pow(rho, 2.0 * s / N);
    out.margin = 0.5 - C_sharp * g.eta_bar_0 * r;
    if (!(out.margin > 0.0)) throw ValidationError("2 C eta_bar_0 rho^{2s/N} < 1 fails; no gamma exists");
    out.epsilon = 0.25 * out.margin / (C_sharp * r);
    const double a = g.eta_bar_0 + out.epsilon;
    double ce = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double t = std::pow(10.0, -4.0 + 8.0 * i / 4000.0);
        for (double tt : {t, -t}) ce = std::max(ce, (nl.F(tt) - a * std::pow(t, q)) / std::pow(t, out.p2));
    }
    out.C_eps = ce;
    const double d = gn_p2.delta_p;
    const double expo = out.p2 * d - 2.0;
    if (!(expo > 0.0)) throw ValidationError("GN exponent too small for the gamma bound");
    if (ce <= 0.0) {
        out.gamma = kInf;
        return out;
    }
    // C_eps C_p2 rho^{p2(1-d)/2} (4 gamma)^{expo/2} <= margin / 4
    const double coef = ce * gn_p2.C * std::pow(rho, 0.5 * out.p2 * (1.0 - d));
    out.gamma = 0.25 * std::pow(0.25 * out.margin / coef, 2.0 / expo);
    return out;
}

NonexistenceReport nonexistence_diagnostic(const GridPtr& grid, const Nonlinearity& nl, double rho,
                                           const SolverConfig& cfg) {
    SolverConfig c = cfg;
    c.rho = rho;
    c.constraint = Constraint::sphere;
    const MinimizeResult r = minimize(grid, nl, c);
    NonexistenceReport rep;
    rep.rho = rho;
    rep.J = r.breakdown.J;
    rep.converged = r.converged;
    if (r.identity) {
        rep.pohozaev_residual = r.identity->pohozaev_residual;
        rep.M_ratio = r.identity->M_value / r.breakdown.seminorm_sq;
    }
    const auto& p = grid->params();
    rep.minimizer_found = r.converged && !r.unbounded && std::abs(rep.J) <= zero_tolerance(p.N, p.s, rho) &&
                          rep.pohozaev_residual <= 10.0 * cfg.grad_tol;
    return rep;
}

} // namespace nvl

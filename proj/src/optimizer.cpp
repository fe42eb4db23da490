#include "nvarlab/optimizer.hpp"

#include "nvarlab/errors.hpp"

#include <algorithm>
#include <cmath>

namespace nvl {

namespace {

constexpr double kArmijo = 1e-4;
constexpr double kDivergence = -1e12;
constexpr int kMaxBacktracks = 60;
constexpr double kMaxStep = 1e3;
constexpr double kRoundingFloor = 1e-13;

// C-infinity transition from 0 (x <= 0) to 1 (x >= 1).
double smoothstep(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / x);
    const double b = std::exp(-1.0 / (1.0 - x));
    return a / (a + b);
}

// The plateau profile: 0 on [0, a], 1 on [2a, R], 0 beyond R + a.
double plateau(double r, double a, double R) {
    return smoothstep((r - a) / a) * (1.0 - smoothstep((r - R) / a));
}

struct Geometry {
    double r_y = 0.0;
    double r_z = 0.0;
    bool has_z = false;
};

// |y| and |z| for the grid's split (K = 0: everything counts as y).
Geometry geometry(std::span<const double> x, int K) {
    Geometry g;
    const int ky = K == 0 ? static_cast<int>(x.size()) : K;
    double y2 = 0.0, z2 = 0.0;
    for (std::size_t a = 0; a < x.size(); ++a) {
        if (static_cast<int>(a) < ky) y2 += x[a] * x[a];
        else z2 += x[a] * x[a];
    }
    g.r_y = std::sqrt(y2);
    g.r_z = std::sqrt(z2);
    g.has_z = ky < static_cast<int>(x.size());
    return g;
}

double slope_of(double j1, double j0, double t1, double t0) { return (j1 - j0) / (t1 - t0); }

} // namespace

std::string to_string(Constraint c) { return c == Constraint::ball ? "ball" : "sphere"; }

Constraint constraint_from_string(const std::string& s) {
    if (s == "ball") return Constraint::ball;
    if (s == "sphere") return Constraint::sphere;
    throw ValidationError("constraint must be 'ball' or 'sphere', got '" + s + "'");
}

std::string to_string(Method m) { return m == Method::gradient ? "gradient" : "cg"; }

Method method_from_string(const std::string& s) {
    if (s == "gradient") return Method::gradient;
    if (s == "cg") return Method::conjugate_gradient;
    throw ValidationError("method must be 'gradient' or 'cg', got '" + s + "'");
}

std::string to_string(ProbeOutcome p) {
    switch (p) {
    case ProbeOutcome::bounded: return "bounded";
    case ProbeOutcome::unbounded: return "unbounded";
    case ProbeOutcome::undetermined: return "undetermined";
    }
    return "undetermined";
}

void SolverConfig::validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw ValidationError("rho must be positive");
    if (!(step0 > 0.0)) throw ValidationError("step0 must be positive");
    if (!(grad_tol > 0.0)) throw ValidationError("grad_tol must be positive");
    if (max_iters < 0) throw ValidationError("max_iters must be nonnegative");
    if (restarts < 1) throw ValidationError("restarts must be >= 1");
    if (gamma_star && !(*gamma_star > 0.0)) throw ValidationError("gamma_star must be positive");
    if (!(window > 0.0)) throw ValidationError("window must be positive");
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > 0.0) || (i > 0 && !(t_grid[i] > t_grid[i - 1]))) {
            throw ValidationError("t_grid must be positive and increasing");
        }
    }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::ArrayXd window_mask(const Grid& grid, double window) {
    Eigen::ArrayXd m = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(grid.size()));
    if (window >= 1.0) return m;
    const double r1 = window * 0.5 * grid.params().box_length;
    const double r0 = 0.8 * r1;
    for (int a = 0; a < grid.dim(); ++a) {
        m *= grid.coordinate(a).unaryExpr([&](double x) { return 1.0 - smoothstep((std::abs(x) - r0) / (r1 - r0)); });
    }
    return m;
}

Field rescale_to_mass(const Field& u, double rho) {
    const double M = mass(u);
    if (M == 0.0) return u;
    return u.scaled(std::sqrt(rho / M));
}

Field bump_initializer(const GridPtr& grid, double rho) {
    const double H = 0.5 * grid->params().box_length;
    const double a = H / 16.0, R = H / 2.0;
    const int K = grid->params().K;
    Field u = Field::sample(grid, [&](std::span<const double> x) {
        const Geometry g = geometry(x, K);
        double v = plateau(g.r_y, a, R);
        if (g.has_z) v *= plateau(g.r_z, a, R);
        return v;
    });
    return rescale_to_mass(u, rho);
}

Field random_initializer(const GridPtr& grid, double rho, std::mt19937_64& rng) {
    const double L = grid->params().box_length;
    const int K = grid->params().K;
    const int N = grid->dim();
    const int terms = 1 + static_cast<int>(uniform01(rng) * 3.0);
    struct Term {
        double amp, sy, sz, c[3];
    };
    std::vector<Term> ts;
    for (int i = 0; i < terms; ++i) {
        Term t{};
        t.amp = 0.5 + uniform01(rng);
        t.sy = L * (0.06 + 0.12 * uniform01(rng));
        t.sz = L * (0.06 + 0.12 * uniform01(rng));
        for (double& c : t.c) c = L * 0.08 * (2.0 * uniform01(rng) - 1.0);
        ts.push_back(t);
    }
    Field u = Field::sample(grid, [&](std::span<const double> x) {
        double v = 0.0;
        for (const auto& t : ts) {
            double e = 0.0;
            for (int a = 0; a < N; ++a) {
                // centers move along z only; with no Hardy split every axis is free
                const bool is_y = a < K;
                const double d = is_y ? x[a] / t.sy : (x[a] - t.c[a]) / t.sz;
                e += d * d;
            }
            v += t.amp * std::exp(-e);
        }
        return v;
    });
    return rescale_to_mass(u, rho);
}

namespace {

MinimizeResult descend(const Field& init, const Nonlinearity& nl, const SolverConfig& cfg, bool sphere) {
    const GridPtr gp = init.grid_ptr();
    const Grid& g = *gp;
    const bool masked = cfg.window < 1.0;
    const Eigen::ArrayXd mask = window_mask(g, cfg.window);

    auto project = [&](Eigen::ArrayXd& v) {
        const double M = g.inner(v, v);
        if (sphere) {
            if (M == 0.0) throw ValidationError("sphere constraint needs a nonzero field");
            v *= std::sqrt(cfg.rho / M);
        } else if (M > cfg.rho) {
            v *= std::sqrt(cfg.rho / M);
        }
    };

    const bool sym = cfg.symmetric && g.params().K >= 2;
    Eigen::ArrayXd u = sym ? symmetrize(g, init.samples()) : init.samples();
    if (masked) u *= mask;
    project(u);
    Field cur(gp, u);
    Eigen::ArrayXd grad;
    EnergyBreakdown e = evaluate_with_gradient(cur, nl, grad);
    if (cfg.gamma_star && !(e.seminorm_sq > *cfg.gamma_star)) {
        throw ValidationError("initial iterate must satisfy [u]^2 > gamma_star");
    }

    MinimizeResult res{cur, e, std::nullopt, false, 0, false, ProbeOutcome::undetermined, 0.0, 0};
    double step = cfg.step0;
    // state carried between iterations for the conjugate direction
    Eigen::ArrayXd prev_dir, prev_r;
    double prev_rz = 0.0;
    bool prev_active = false;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        if (e.J < kDivergence) {
            res.unbounded = true;
            break;
        }
        // z = m P m (g + lambda u), r = g + lambda u, with lambda making z tangent
        // to the sphere when the constraint is active
        const Eigen::ArrayXd& uu = cur.samples();
        if (sym) grad = symmetrize(g, grad);
        Eigen::ArrayXd z = precondition(g, masked ? Eigen::ArrayXd(mask * grad) : grad);
        if (masked) z *= mask;
        Eigen::ArrayXd r = grad;
        const double M = e.mass;
        bool active = false;
        if (M > 0.0 && (sphere || M >= cfg.rho * (1.0 - 1e-12))) {
            Eigen::ArrayXd Pu = precondition(g, masked ? Eigen::ArrayXd(mask * uu) : uu);
            if (masked) Pu *= mask;
            const double a = g.inner(z, uu);
            const double b = g.inner(Pu, uu);
            // in the ball the constraint only binds when descent would push mass out
            if (b > 0.0 && (sphere || a < 0.0)) {
                const double lambda = -a / b;
                z += lambda * Pu;
                r += lambda * uu;
                active = true;
            }
        }
        const double rz = g.inner(r, z);
        const double gnorm = std::sqrt(std::max(rz, 0.0));
        res.grad_norm = gnorm;
        if (cfg.progress) cfg.progress({it, e.J, M, gnorm});
        if (gnorm <= cfg.grad_tol * (1.0 + std::abs(e.J))) {
            res.converged = true;
            break;
        }

        Eigen::ArrayXd dir = -z;
        if (cfg.method == Method::conjugate_gradient && prev_dir.size() > 0 && active == prev_active && prev_rz > 0.0) {
            const double beta = std::max(0.0, g.inner(Eigen::ArrayXd(r - prev_r), z) / prev_rz);
            if (beta > 0.0) {
                Eigen::ArrayXd carried = prev_dir;
                if (active) carried -= (g.inner(carried, uu) / M) * uu;
                Eigen::ArrayXd cand = dir + beta * carried;
                if (g.inner(r, cand) < 0.0) dir = std::move(cand);
            }
        }
        // the preconditioned, masked direction picks up rounding asymmetry that
        // saddles of J amplify
        if (sym) dir = symmetrize(g, dir);
        // r and grad differ by a multiple of u, to which dir is orthogonal when
        // the constraint is active; r avoids the cancellation
        const double slope = g.inner(r, dir);
        if (!(slope < 0.0)) {
            if (gnorm * gnorm <= kRoundingFloor * (1.0 + std::abs(e.J))) res.converged = true;
            break;
        }

        bool accepted = false;
        double tau = step;
        for (int bt = 0; bt < kMaxBacktracks; ++bt, tau *= 0.5) {
            Eigen::ArrayXd trial = uu + tau * dir;
            project(trial);
            if (!trial.allFinite()) continue;
            Field tf(gp, std::move(trial));
            Eigen::ArrayXd tgrad;
            const EnergyBreakdown et = evaluate_with_gradient(tf, nl, tgrad);
            if (cfg.gamma_star && !(et.seminorm_sq > *cfg.gamma_star)) continue;
            if (et.J <= e.J + kArmijo * tau * slope && et.J < e.J) {
                cur = std::move(tf);
                e = et;
                grad = std::move(tgrad);
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            // a step of size tau can only change J by about tau * gnorm^2; once
            // that is below rounding of J no decrease can be observed
            if (gnorm * gnorm <= kRoundingFloor * (1.0 + std::abs(e.J))) res.converged = true;
            break;
        }
        step = std::min(2.0 * tau, kMaxStep);
        prev_dir = std::move(dir);
        prev_r = std::move(r);
        prev_rz = rz;
        prev_active = active;
    }
    res.iterations = it;
    res.field = cur;
    res.breakdown = e;
    return res;
}

} // namespace

MinimizeResult minimize(const Field& init, const Nonlinearity& nl, const SolverConfig& cfg) {
    cfg.validate();
    MinimizeResult res = [&] {
        if (cfg.constraint == Constraint::sphere || cfg.gamma_star) return descend(init, nl, cfg, cfg.constraint == Constraint::sphere);
        // m(rho) = min(0, inf over S(rho)): the sphere solve first, so the flow
        // cannot slide into the zero field (always a strict local minimizer)
        // before reaching the negative region; then the ball flow from there.
        MinimizeResult r = descend(init, nl, cfg, true);
        if (r.unbounded) return r;
        if (r.breakdown.J >= 0.0) {
            r.field = Field::zeros(init.grid_ptr());
            r.breakdown = evaluate(r.field, nl);
            r.converged = true;
            r.grad_norm = 0.0;
            return r;
        }
        SolverConfig rest = cfg;
        rest.max_iters = cfg.max_iters - r.iterations;
        if (rest.max_iters <= 0) return r;
        MinimizeResult b = descend(r.field, nl, rest, false);
        b.iterations += r.iterations;
        return b;
    }();
    const Field& cur = res.field;
    const EnergyBreakdown& e = res.breakdown;
    if (e.mass > 0.0) res.identity = identities(cur, nl);
    if (cfg.probe && e.mass > 0.0 && !res.unbounded && !cfg.t_grid.empty()) {
        const ProbeReport pr = dilation_probe(cur, nl, cfg.t_grid);
        res.probe = pr.outcome;
        if (pr.outcome == ProbeOutcome::unbounded) res.unbounded = true;
    }
    if (res.unbounded) res.converged = false;
    return res;
}

MinimizeResult minimize(const GridPtr& grid, const Nonlinearity& nl, const SolverConfig& cfg) {
    return minimize(bump_initializer(grid, cfg.rho), nl, cfg);
}

ProbeReport dilation_probe(const Field& u, const Nonlinearity& nl, const std::vector<double>& t_grid) {
    const double M = mass(u);
    if (M == 0.0) throw ValidationError("dilation probe needs a nonzero field");
    constexpr double kTail = 1e-6;
    constexpr double kKeep = 0.999;

    ProbeReport last;
    // A concentrated field cannot be dilated further on the grid; spreading
    // it first (base < 1) buys the resolution the probe needs.
    for (double base : {1.0, 0.5, 0.25, 0.125}) {
        ProbeReport rep;
        rep.base_scale = base;
        Field v = u;
        try {
            if (base != 1.0) v = dilate(u, base);
        } catch (const NumericalError&) {
            continue;
        }
        if (mass(v) < kKeep * M) break; // spreading further only loses more mass
        const double J_ref = evaluate(v, nl).J;
        bool truncated = false;
        for (double t : t_grid) {
            try {
                Field w = t == 1.0 ? v : dilate(v, t);
                if (spectral_tail_fraction(w) > kTail || mass(w) < kKeep * M) {
                    truncated = true;
                    break;
                }
                rep.t.push_back(t * base);
                rep.J.push_back(evaluate(w, nl).J);
            } catch (const NumericalError&) {
                truncated = true;
                break;
            }
        }
        const std::size_t k = rep.J.size();
        if (k >= 3) {
            const double s1 = slope_of(rep.J[k - 2], rep.J[k - 3], rep.t[k - 2], rep.t[k - 3]);
            const double s2 = slope_of(rep.J[k - 1], rep.J[k - 2], rep.t[k - 1], rep.t[k - 2]);
            const bool decreasing = rep.J[k - 1] < rep.J[k - 2] && rep.J[k - 2] < rep.J[k - 3];
            if (decreasing && s2 < s1 && rep.J[k - 1] < -10.0 * std::abs(J_ref) - 1.0) {
                rep.outcome = ProbeOutcome::unbounded;
                return rep;
            }
        }
        if (k >= 2) {
            const double scale = std::abs(rep.J[k - 1]) + std::abs(rep.J[k - 2]) + 1e-300;
            if (rep.J[k - 1] - rep.J[k - 2] > 1e-10 * scale) {
                rep.outcome = ProbeOutcome::bounded;
                return rep;
            }
        }
        last = rep;
        if (!truncated) break; // the full grid was used and nothing was decided
    }
    last.outcome = ProbeOutcome::undetermined;
    return last;
}

MinimizeResult multistart(const GridPtr& grid, const Nonlinearity& nl, const SolverConfig& cfg,
                          const std::vector<Field>& extra_seeds) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::optional<MinimizeResult> best;
    const int total = cfg.restarts + static_cast<int>(extra_seeds.size());
    for (int i = 0; i < total; ++i) {
        Field init = i == 0                ? bump_initializer(grid, cfg.rho)
                     : i < cfg.restarts ? random_initializer(grid, cfg.rho, rng)
                                          : rescale_to_mass(extra_seeds[static_cast<std::size_t>(i - cfg.restarts)], cfg.rho);
        MinimizeResult r = minimize(init, nl, cfg);
        r.start_index = i;
        if (r.unbounded) return r;
        if (!best) {
            best = std::move(r);
            continue;
        }
        const double tol = 1e-12 * std::max(1.0, std::abs(best->breakdown.J));
        if (r.breakdown.J < best->breakdown.J - tol) best = std::move(r);
    }
    return std::move(*best);
}

} // namespace nvl

#include "nvarlab/gn.hpp"

#include "nvarlab/energy.hpp"
#include "nvarlab/nonlinearity.hpp"
#include "nvarlab/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <random>

namespace nvl {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;
constexpr double kRoundingFloor = 1e-12;
// weight of the dilation-fixing term (log([u]^2/|u|_2^2))^2
constexpr double kScalePenalty = 1.0;

struct Quotient {
    double S = 0.0, M = 0.0, P = 0.0;
    double logR = 0.0;
    double phi = 0.0; // logR plus the scale penalty
};

struct Problem {
    const Grid& g;
    double p;
    double delta;

    Quotient value(const Field& u) const {
        Quotient q;
        q.S = seminorm_sq(u);
        q.M = mass(u);
        q.P = lp_power(u, p);
        if (!(q.S > 0.0) || !(q.M > 0.0) || !(q.P > 0.0)) throw NumericalError("quotient undefined along the descent");
        q.logR = 0.5 * p * delta * std::log(q.S) + 0.5 * p * (1.0 - delta) * std::log(q.M) - std::log(q.P);
        const double ls = std::log(q.S / q.M);
        q.phi = q.logR + kScalePenalty * ls * ls;
        return q;
    }

    // L^2 gradient of phi.
    Eigen::ArrayXd gradient(const Field& u, const Quotient& q) const {
        const Eigen::ArrayXd& v = u.samples();
        const Eigen::ArrayXd Au = quadratic_operator(u);
        const Eigen::ArrayXd up = v.abs().pow(p - 2.0) * v;
        const double ls = std::log(q.S / q.M);
        const double a = p * delta / q.S + 4.0 * kScalePenalty * ls / q.S;
        const double b = p * (1.0 - delta) / q.M - 4.0 * kScalePenalty * ls / q.M;
        return a * Au + b * v - (p / q.P) * up;
    }
};

// Unit mass, then the dilation that makes [u] = |u|_2.
Field normalize(const Field& u) {
    Field v = rescale_to_mass(u, 1.0);
    const double S = seminorm_sq(v);
    const double s = v.params().s;
    const double t = std::pow(1.0 / S, 1.0 / (2.0 * s));
    if (std::abs(t - 1.0) > 1e-14) v = rescale_to_mass(dilate(v, t), 1.0);
    return v;
}

Field starting_field(const GridPtr& grid, const GNConfig& cfg) {
    if (cfg.init) {
        if (!(cfg.init->params() == grid->params())) {
            throw ValidationError("initial field lives on a different grid");
        }
        return rescale_to_mass(Field(grid, cfg.init->samples()), 1.0);
    }
    if (cfg.random_start) {
        std::mt19937_64 rng(cfg.seed);
        return random_initializer(grid, 1.0, rng);
    }
    const double w = grid->params().box_length / 10.0;
    return rescale_to_mass(Field::sample(grid, [w](std::span<const double> x) {
                               double r2 = 0.0;
                               for (double v : x) r2 += v * v;
                               return std::exp(-r2 / (w * w));
                           }),
                           1.0);
}

} // namespace

void GNConfig::validate() const {
    if (max_iters < 0) throw ValidationError("max_iters must be nonnegative");
    if (!(grad_tol > 0.0)) throw ValidationError("grad_tol must be positive");
    if (!(window > 0.0)) throw ValidationError("window must be positive");
}

GNResult compute_gn(const GridPtr& grid, double p, const GNConfig& cfg) {
    cfg.validate();
    const auto& prm = grid->params();
    const double star = critical_sobolev_exponent(prm.N, prm.s);
    if (!(p > 2.0) || !(p < star)) throw ValidationError("GN exponent must satisfy 2 < p < 2*");
    const Grid& g = *grid;
    const Problem prob{g, p, delta_p(prm.N, prm.s, p)};
    const bool sym = prm.K >= 2;
    const bool masked = cfg.window < 1.0;
    const Eigen::ArrayXd mask = window_mask(g, cfg.window);

    Eigen::ArrayXd u0 = starting_field(grid, cfg).samples();
    if (sym) u0 = symmetrize(g, u0);
    if (masked) u0 *= mask;
    Field cur = rescale_to_mass(Field(grid, u0), 1.0);
    Quotient q = prob.value(cur);
    Eigen::ArrayXd grad = prob.gradient(cur, q);

    Eigen::ArrayXd prev_dir, prev_grad;
    double prev_gz = 0.0;
    double step = 1.0;
    bool converged = false;
    double gnorm = 0.0;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        if (sym) grad = symmetrize(g, grad);
        Eigen::ArrayXd z = precondition(g, masked ? Eigen::ArrayXd(mask * grad) : grad);
        if (masked) z *= mask;
        const double gz = g.inner(grad, z);
        gnorm = std::sqrt(std::max(gz, 0.0));
        if (gnorm <= cfg.grad_tol) {
            converged = true;
            break;
        }
        Eigen::ArrayXd dir = -z;
        if (prev_dir.size() > 0 && prev_gz > 0.0) {
            const double beta = std::max(0.0, g.inner(Eigen::ArrayXd(grad - prev_grad), z) / prev_gz);
            Eigen::ArrayXd cand = dir + beta * prev_dir;
            if (beta > 0.0 && g.inner(grad, cand) < 0.0) dir = std::move(cand);
        }
        const double slope = g.inner(grad, dir);
        if (!(slope < 0.0)) {
            converged = gz <= kRoundingFloor * (1.0 + std::abs(q.phi));
            break;
        }
        bool accepted = false;
        double tau = step;
        for (int bt = 0; bt < kMaxBacktracks; ++bt, tau *= 0.5) {
            Eigen::ArrayXd trial = cur.samples() + tau * dir;
            if (!trial.allFinite()) continue;
            Field tf(grid, std::move(trial));
            const double M = mass(tf);
            if (!(M > 0.0)) continue;
            tf = tf.scaled(1.0 / std::sqrt(M));
            Quotient tq;
            try {
                tq = prob.value(tf);
            } catch (const NumericalError&) {
                continue;
            }
            if (tq.phi <= q.phi + kArmijo * tau * slope && tq.phi < q.phi) {
                // rescaling to unit mass does not change phi (0-homogeneous);
                // the carried direction is rescaled with the field
                dir /= std::sqrt(M);
                cur = std::move(tf);
                q = tq;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            converged = gz <= kRoundingFloor * (1.0 + std::abs(q.phi));
            break;
        }
        step = std::min(2.0 * tau, 1e3);
        prev_dir = std::move(dir);
        prev_grad = grad;
        prev_gz = gz;
        grad = prob.gradient(cur, q);
    }

    Field u = normalize(cur);
    const double R = quotient_R(u, p);
    if (!converged) {
        std::ostringstream msg;
        msg << "GN descent did not converge in " << it << " iterations (gradient norm " << std::scientific
            << std::setprecision(3) << gnorm << ")";
        throw ConvergenceError(msg.str(), u, R);
    }
    const double delta = prob.delta;
    const double target = R / delta;
    Field w = u.scaled(std::pow(target, 1.0 / (p - 2.0)));
    const double Sw = seminorm_sq(w);
    const double Mw = mass(w);
    const double char_res =
        std::max(std::abs(std::pow(Sw, 0.5 * (p - 2.0)) - target), std::abs(std::pow(Mw, 0.5 * (p - 2.0)) - target)) / target;
    const Eigen::ArrayXd& wv = w.samples();
    const Eigen::ArrayXd wp = wv.abs().pow(p - 2.0) * wv;
    const Eigen::ArrayXd el = quadratic_operator(w) + ((1.0 - delta) / delta) * wv - wp;
    const double el_res = std::sqrt(g.inner(el, el) / g.inner(wp, wp));
    return GNResult{R, 1.0 / R, std::move(w), char_res, el_res, p, delta, it};
}

double verify_gn_inequality(const Field& u, const GNResult& gn) {
    return gn.iota / quotient_R(u, gn.p);
}

} // namespace nvl

#pragma once

// Shared helpers for the test binaries: grid factories, random smooth
// G-symmetric fields, and independent oracles (Gamma, quadrature, shooting).

#include "nvarlab/grid.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <vector>

namespace nvt {

inline nvl::GridPtr make_grid(int N, int K, double s, double mu, double L, int n) {
    nvl::ProblemParams p;
    p.N = N;
    p.K = K;
    p.s = s;
    p.mu = mu;
    p.box_length = L;
    p.grid_points = n;
    return nvl::Grid::create(p);
}

inline double uniform(std::mt19937_64& rng, double a, double b) {
    return a + (b - a) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

// |y| and (for N > K) z-coordinates of x for a grid's split. K = 0 treats
// every coordinate as z.
struct Split {
    double r = 0.0;
    double z[3] = {0.0, 0.0, 0.0};
    int nz = 0;
};

inline Split split(std::span<const double> x, int K) {
    Split out;
    double r2 = 0.0;
    for (int a = 0; a < K; ++a) r2 += x[a] * x[a];
    out.r = std::sqrt(r2);
    for (std::size_t a = static_cast<std::size_t>(K); a < x.size(); ++a) out.z[out.nz++] = x[a];
    return out;
}

// Sum of 1-3 smooth bumps, radial in y and Gaussian in z. Widths stay well
// above the grid spacing so the fields are numerically band-limited.
inline nvl::Field random_symmetric_field(const nvl::GridPtr& g, std::mt19937_64& rng, double min_width = 0.7) {
    const int K = g->params().K;
    const int terms = 1 + static_cast<int>(rng() % 3);
    struct Term {
        double amp, r0, sr, cz[3], sz;
    };
    std::vector<Term> ts;
    for (int i = 0; i < terms; ++i) {
        Term t{};
        t.amp = uniform(rng, 0.3, 1.5) * ((rng() & 1u) ? 1.0 : -1.0);
        t.sr = uniform(rng, min_width, 2.0 * min_width + 0.6);
        // shells (r0 > 0) only when they are flat at the axis
        t.r0 = (K >= 2 && (rng() & 1u)) ? uniform(rng, 0.0, 1.5) : 0.0;
        for (double& c : t.cz) c = uniform(rng, -1.5, 1.5);
        t.sz = uniform(rng, min_width, 2.0 * min_width + 0.6);
        ts.push_back(t);
    }
    return nvl::Field::sample(g, [&](std::span<const double> x) {
        const Split sp = split(x, K);
        double v = 0.0;
        for (const auto& t : ts) {
            // r0 enters through r^2 so the profile stays smooth at the axis
            const double ry = (sp.r * sp.r - t.r0 * t.r0) / (t.sr * (t.sr + t.r0));
            double val = t.amp * std::exp(-ry * ry);
            for (int a = 0; a < sp.nz; ++a) {
                const double d = (sp.z[a] - (K >= 2 ? t.cz[a] : 0.5 * t.cz[a])) / t.sz;
                val *= std::exp(-d * d);
            }
            v += val;
        }
        return v;
    });
}

// Sum of 1-3 tori around the y-axis (K = 2, N = 3): profiles in r peaked
// at r0 >= 5.5 widths, so they vanish on the axis to rounding and both u
// and u/r are smooth.
inline nvl::Field random_ring_field(const nvl::GridPtr& g, std::mt19937_64& rng) {
    const int terms = 1 + static_cast<int>(rng() % 3);
    struct Term {
        double amp, r0, sr, z0, sz;
    };
    std::vector<Term> ts;
    for (int i = 0; i < terms; ++i) {
        Term t{};
        t.amp = uniform(rng, 0.3, 1.5) * ((rng() & 1u) ? 1.0 : -1.0);
        t.r0 = uniform(rng, 3.3, 4.5);
        t.sr = t.r0 / uniform(rng, 5.5, 6.5);
        t.z0 = uniform(rng, -1.5, 1.5);
        t.sz = uniform(rng, 0.7, 1.5);
        ts.push_back(t);
    }
    return nvl::Field::sample(g, [&](std::span<const double> x) {
        const double r = std::hypot(x[0], x[1]);
        double v = 0.0;
        for (const auto& t : ts) {
            const double a = (r - t.r0) / t.sr, b = (x[2] - t.z0) / t.sz;
            v += t.amp * std::exp(-a * a - b * b);
        }
        return v;
    });
}

// Lanczos approximation (g = 7, n = 9), independent of std::tgamma.
inline double lanczos_gamma(double x) {
    static const double c[9] = {0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
                                771.32342877765313,   -176.61502916214059,   12.507343278686905,
                                -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    if (x < 0.5) return std::numbers::pi / (std::sin(std::numbers::pi * x) * lanczos_gamma(1.0 - x));
    x -= 1.0;
    double a = c[0];
    const double t = x + 7.5;
    for (int i = 1; i < 9; ++i) a += c[i] / (x + i);
    return std::sqrt(2.0 * std::numbers::pi) * std::pow(t, x + 0.5) * std::exp(-t) * a;
}

// Adaptive Simpson quadrature.
inline double simpson(const std::function<double(double)>& f, double a, double b, double tol, int depth = 40) {
    std::function<double(double, double, double, double, double, double, double, int)> rec =
        [&](double a0, double b0, double fa, double fm, double fb, double whole, double eps, int d) {
            const double m = 0.5 * (a0 + b0);
            const double lm = 0.5 * (a0 + m), rm = 0.5 * (m + b0);
            const double flm = f(lm), frm = f(rm);
            const double left = (m - a0) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b0 - m) / 6.0 * (fm + 4.0 * frm + fb);
            if (d <= 0 || std::abs(left + right - whole) <= 15.0 * eps) return left + right + (left + right - whole) / 15.0;
            return rec(a0, m, fa, flm, fm, left, 0.5 * eps, d - 1) + rec(m, b0, fm, frm, fb, right, 0.5 * eps, d - 1);
        };
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    return rec(a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), tol, depth);
}

// Radial ground state of Q'' + ((d-1)/r) Q' - Q + Q^3 = 0 by shooting on Q(0).
// Returns the profile on [0, r_max] sampled with step dr (RK4).
struct RadialProfile {
    double dr = 0.0;
    std::vector<double> q;
    double q0 = 0.0;
};

inline RadialProfile shoot_ground_state(int d, double lo, double hi, double r_max = 25.0, double dr = 1e-3) {
    // overshoot: Q crosses zero; undershoot: Q' turns positive while Q > 0.
    auto classify = [&](double q0, std::vector<double>* out) {
        double r = 0.0, q = q0, p = 0.0;
        // series start to skip the r = 0 singularity
        const double r1 = dr;
        const double q2 = (q0 - q0 * q0 * q0) / (2.0 * d);
        q = q0 + q2 * r1 * r1;
        p = 2.0 * q2 * r1;
        r = r1;
        if (out) {
            out->assign(1, q0);
            out->push_back(q);
        }
        auto rhs = [&](double rr, double qq, double pp, double& dq, double& dp) {
            dq = pp;
            dp = -(d - 1) / rr * pp + qq - qq * qq * qq;
        };
        while (r < r_max) {
            double k1q, k1p, k2q, k2p, k3q, k3p, k4q, k4p;
            rhs(r, q, p, k1q, k1p);
            rhs(r + 0.5 * dr, q + 0.5 * dr * k1q, p + 0.5 * dr * k1p, k2q, k2p);
            rhs(r + 0.5 * dr, q + 0.5 * dr * k2q, p + 0.5 * dr * k2p, k3q, k3p);
            rhs(r + dr, q + dr * k3q, p + dr * k3p, k4q, k4p);
            q += dr / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q);
            p += dr / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p);
            r += dr;
            if (out) out->push_back(q);
            if (q < 0.0) return 1;
            if (p > 0.0) return -1;
        }
        return 0;
    };
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const int c = classify(mid, nullptr);
        if (c > 0) hi = mid;
        else lo = mid;
    }
    RadialProfile prof;
    prof.dr = dr;
    prof.q0 = 0.5 * (lo + hi);
    classify(prof.q0, &prof.q);
    // beyond the point where the shot departs, the true profile is below 1e-5
    for (double& v : prof.q) {
        if (v < 0.0) v = 0.0;
    }
    return prof;
}

// Townes mass M = 2 pi int_0^inf Q^2 r dr for the 2-D cubic ground state.
inline double townes_mass() {
    const RadialProfile prof = shoot_ground_state(2, 2.0, 2.4);
    double m = 0.0;
    // trapezoid until the profile drops below 1e-6 (tail ~ e^{-r})
    std::size_t stop = prof.q.size() - 1;
    for (std::size_t i = 1; i + 1 < prof.q.size(); ++i) {
        if (prof.q[i] < 1e-6) {
            stop = i;
            break;
        }
    }
    for (std::size_t i = 0; i < stop; ++i) {
        const double r0 = i * prof.dr, r1 = (i + 1) * prof.dr;
        m += 0.5 * prof.dr * (prof.q[i] * prof.q[i] * r0 + prof.q[i + 1] * prof.q[i + 1] * r1);
    }
    return 2.0 * std::numbers::pi * m;
}

} // namespace nvt

#include "nvarlab/nonlinearity.hpp"

#include "nvarlab/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <numbers>
#include <sstream>

namespace nvl {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMarginZero = 1e-13;
} // namespace

std::string to_string(Family f) {
    switch (f) {
    case Family::pure_power: return "pure_power";
    case Family::mass_critical_power: return "mass_critical_power";
    case Family::min_family: return "min_family";
    case Family::difference_family: return "difference_family";
    case Family::custom: return "custom";
    }
    return "unknown";
}

Family family_from_string(const std::string& name) {
    if (name == "pure_power") return Family::pure_power;
    if (name == "mass_critical_power" || name == "mass_critical") return Family::mass_critical_power;
    if (name == "min_family") return Family::min_family;
    if (name == "difference_family") return Family::difference_family;
    if (name == "custom") return Family::custom;
    throw ValidationError("unknown nonlinearity family '" + name + "'");
}

std::string to_string(Dichotomy d) {
    switch (d) {
    case Dichotomy::F_below: return "F_below";
    case Dichotomy::F_above: return "F_above";
    case Dichotomy::mixed: return "mixed";
    }
    return "unknown";
}

double mass_critical_exponent(int N, double s) { return 2.0 + 4.0 * s / N; }

double critical_sobolev_exponent(int N, double s) {
    if (N > 2.0 * s) return 2.0 * N / (N - 2.0 * s);
    return kInf;
}

double moser_trudinger_alpha(int N) {
    const double sphere = 2.0 * std::pow(std::numbers::pi, 0.5 * N) / std::tgamma(0.5 * N);
    return N * std::pow(2.0 * std::numbers::pi, N) / sphere;
}

struct Nonlinearity::Table {
    std::vector<double> t;
    std::vector<double> f;
    std::vector<double> F; // primitive at the nodes
    mutable std::atomic<bool> warned{false};

    void warn_clamp() const {
        if (!warned.exchange(true)) {
            std::cerr << "warning: custom nonlinearity evaluated beyond its table (t > " << t.back()
                      << "); f clamped to the last value\n";
        }
    }

    // f and F at a >= 0.
    void eval(double a, double& fv, double& Fv) const {
        if (a >= t.back()) {
            if (a > t.back()) warn_clamp();
            fv = f.back();
            Fv = F.back() + f.back() * (a - t.back());
            return;
        }
        const auto it = std::upper_bound(t.begin(), t.end(), a);
        const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
        const double dt = t[i + 1] - t[i];
        const double slope = (f[i + 1] - f[i]) / dt;
        const double d = a - t[i];
        fv = f[i] + slope * d;
        Fv = F[i] + f[i] * d + 0.5 * slope * d * d;
    }
};

Nonlinearity Nonlinearity::pure_power(int N, double s, double p, double coeff) {
    if (!(p > 2.0) || !std::isfinite(p)) throw ValidationError("pure_power requires p > 2");
    if (!std::isfinite(coeff)) throw ValidationError("coefficient must be finite");
    Nonlinearity nl;
    nl.family_ = Family::pure_power;
    nl.N_ = N;
    nl.s_ = s;
    nl.p_ = p;
    nl.coeff_ = coeff;
    nl.q_ = mass_critical_exponent(N, s);
    nl.check_growth();
    return nl;
}

Nonlinearity Nonlinearity::mass_critical_power(int N, double s, double coeff) {
    Nonlinearity nl = pure_power(N, s, mass_critical_exponent(N, s), coeff);
    nl.family_ = Family::mass_critical_power;
    return nl;
}

Nonlinearity Nonlinearity::min_family(int N, double s, double p) {
    const double q = mass_critical_exponent(N, s);
    if (!(p > q)) throw ValidationError("min_family requires p > 2_# = " + std::to_string(q));
    Nonlinearity nl;
    nl.family_ = Family::min_family;
    nl.N_ = N;
    nl.s_ = s;
    nl.p_ = p;
    nl.q_ = q;
    nl.check_growth();
    return nl;
}

Nonlinearity Nonlinearity::difference_family(int N, double s, double p) {
    const double q = mass_critical_exponent(N, s);
    if (!(p > q)) throw ValidationError("difference_family requires p > 2_# = " + std::to_string(q));
    Nonlinearity nl;
    nl.family_ = Family::difference_family;
    nl.N_ = N;
    nl.s_ = s;
    nl.p_ = p;
    nl.q_ = q;
    nl.check_growth();
    return nl;
}

Nonlinearity Nonlinearity::custom(int N, double s, std::vector<double> t, std::vector<double> f) {
    if (t.size() != f.size() || t.empty()) throw ValidationError("custom table needs matching, non-empty columns");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i]) || !std::isfinite(f[i])) throw ValidationError("custom table has non-finite entries");
        if (t[i] < 0.0) throw ValidationError("custom table must list t >= 0 only (f is extended oddly)");
        if (i > 0 && !(t[i] > t[i - 1])) throw ValidationError("custom table t column must be strictly increasing");
    }
    if (t.front() == 0.0) {
        if (f.front() != 0.0) throw ValidationError("custom table: f(0) must be 0 for an odd continuous f");
    } else {
        t.insert(t.begin(), 0.0);
        f.insert(f.begin(), 0.0);
    }
    auto table = std::make_shared<Table>();
    table->t = std::move(t);
    table->f = std::move(f);
    table->F.assign(table->t.size(), 0.0);
    for (std::size_t i = 1; i < table->t.size(); ++i) {
        table->F[i] = table->F[i - 1] + 0.5 * (table->f[i] + table->f[i - 1]) * (table->t[i] - table->t[i - 1]);
    }
    Nonlinearity nl;
    nl.family_ = Family::custom;
    nl.N_ = N;
    nl.s_ = s;
    nl.q_ = mass_critical_exponent(N, s);
    nl.table_ = std::move(table);
    nl.check_growth();
    return nl;
}

Nonlinearity Nonlinearity::custom_from_csv(int N, double s, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open nonlinearity table '" + path + "'");
    std::vector<double> t, f;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double a = 0.0, b = 0.0;
        if (!(ls >> a >> b)) {
            if (t.empty() && lineno == 1) continue; // header
            throw ValidationError(path + ":" + std::to_string(lineno) + ": expected two numbers");
        }
        t.push_back(a);
        f.push_back(b);
    }
    return custom(N, s, std::move(t), std::move(f));
}

std::string Nonlinearity::describe() const {
    std::ostringstream os;
    os << to_string(family_);
    switch (family_) {
    case Family::pure_power: os << "(p=" << p_ << ", coeff=" << coeff_ << ")"; break;
    case Family::mass_critical_power: os << "(p=" << p_ << ", coeff=" << coeff_ << ")"; break;
    case Family::min_family:
    case Family::difference_family: os << "(p=" << p_ << ")"; break;
    case Family::custom: os << "(" << table_->t.size() << " nodes)"; break;
    }
    return os.str();
}

double Nonlinearity::f(double t) const {
    const double a = std::abs(t);
    switch (family_) {
    case Family::pure_power:
    case Family::mass_critical_power: return coeff_ * std::pow(a, p_ - 2.0) * t;
    case Family::min_family: return std::min(std::pow(a, p_ - 2.0), std::pow(a, q_ - 2.0)) * t;
    case Family::difference_family: return (std::pow(a, q_ - 2.0) - std::pow(a, p_ - 2.0)) * t;
    case Family::custom: {
        double fv = 0.0, Fv = 0.0;
        table_->eval(a, fv, Fv);
        return t < 0.0 ? -fv : fv;
    }
    }
    return 0.0;
}

double Nonlinearity::F(double t) const {
    const double a = std::abs(t);
    switch (family_) {
    case Family::pure_power:
    case Family::mass_critical_power: return coeff_ * std::pow(a, p_) / p_;
    case Family::min_family:
        if (a <= 1.0) return std::pow(a, p_) / p_;
        return 1.0 / p_ + (std::pow(a, q_) - 1.0) / q_;
    case Family::difference_family: return std::pow(a, q_) / q_ - std::pow(a, p_) / p_;
    case Family::custom: {
        double fv = 0.0, Fv = 0.0;
        table_->eval(a, fv, Fv);
        return Fv;
    }
    }
    return 0.0;
}

Eigen::ArrayXd Nonlinearity::f(const Eigen::ArrayXd& t) const {
    if (family_ == Family::pure_power || family_ == Family::mass_critical_power) {
        return coeff_ * t.abs().pow(p_ - 2.0) * t;
    }
    return t.unaryExpr([this](double v) { return f(v); });
}

Eigen::ArrayXd Nonlinearity::F(const Eigen::ArrayXd& t) const {
    if (family_ == Family::pure_power || family_ == Family::mass_critical_power) {
        return (coeff_ / p_) * t.abs().pow(p_);
    }
    return t.unaryExpr([this](double v) { return F(v); });
}

GrowthData Nonlinearity::growth_limits() const {
    GrowthData g;
    g.two_sharp = q_;
    g.two_star = critical_sobolev_exponent(N_, s_);
    switch (family_) {
    case Family::pure_power:
    case Family::mass_critical_power: {
        const double a = coeff_;
        const double dp = p_ - q_;
        const bool critical = std::abs(dp) <= 1e-14 * q_;
        if (a > 0.0) {
            if (critical) {
                g.eta_bar_0 = g.eta_lower_0 = g.eta_bar_inf = g.eta_lower_inf = a / q_;
            } else if (dp < 0.0) {
                g.eta_bar_0 = g.eta_lower_0 = kInf;
                g.eta_bar_inf = g.eta_lower_inf = 0.0;
            } else {
                g.eta_bar_0 = g.eta_lower_0 = 0.0;
                g.eta_bar_inf = g.eta_lower_inf = kInf;
            }
        } else {
            // F_+ vanishes identically; only the lower limit at infinity sees F.
            g.eta_bar_0 = g.eta_lower_0 = g.eta_bar_inf = 0.0;
            if (a == 0.0 || dp < 0.0) g.eta_lower_inf = 0.0;
            else if (critical) g.eta_lower_inf = a / q_;
            else g.eta_lower_inf = -kInf;
        }
        return g;
    }
    case Family::min_family:
        g.eta_bar_0 = g.eta_lower_0 = 0.0;
        g.eta_bar_inf = g.eta_lower_inf = 1.0 / q_;
        return g;
    case Family::difference_family:
        g.eta_bar_0 = g.eta_lower_0 = 1.0 / q_;
        g.eta_bar_inf = 0.0;
        g.eta_lower_inf = -kInf;
        return g;
    case Family::custom:
        if (supplied_) {
            GrowthData out = *supplied_;
            out.two_sharp = q_;
            out.two_star = g.two_star;
            return out;
        }
        throw ValidationError("limits must be supplied for a custom nonlinearity");
    }
    return g;
}

Nonlinearity Nonlinearity::with_limits(const GrowthData& limits) const {
    if (limits.eta_lower_0 > limits.eta_bar_0 || limits.eta_lower_inf > limits.eta_bar_inf) {
        throw ValidationError("growth limits must satisfy eta_lower <= eta_bar");
    }
    Nonlinearity nl = *this;
    nl.supplied_ = limits;
    return nl;
}

void Nonlinearity::check_growth() {
    warnings_.clear();
    const double star = critical_sobolev_exponent(N_, s_);
    if (N_ > 2.0 * s_) {
        auto ratio = [&](double t) { return std::abs(f(t)) / (t + std::pow(t, star - 1.0)); };
        const double slope = std::log10(ratio(1e3) / ratio(1e2));
        if (std::isfinite(slope) && slope > 0.05) {
            warnings_.push_back("f grows faster than |t|^{2*-1} at infinity (critical growth condition violated)");
        }
    } else if (N_ < 2.0 * s_) {
        auto ratio = [&](double t) { return std::abs(f(t)) / t; };
        if (ratio(1e-3) > 10.0 * ratio(1e-1) + 1e-300) {
            warnings_.push_back("f is not O(|t|) near the origin");
        }
    }
    const double r_small = std::abs(F(1e-4)) / 1e-8;
    const double r_mid = std::abs(F(1e-2)) / 1e-4;
    if (r_small > 1e-6 && r_small > 0.5 * r_mid) warnings_.push_back("F(t)/t^2 does not vanish as t -> 0");
}

double Nonlinearity::sampled_sup_ratio() const {
    double best = -kInf;
    const int count = 2001;
    for (int i = 0; i < count; ++i) {
        const double t = std::pow(10.0, -4.0 + 8.0 * i / (count - 1));
        best = std::max({best, F(t) / std::pow(t, q_), F(-t) / std::pow(t, q_)});
    }
    return best;
}

bool Nonlinearity::positive_somewhere() const {
    const int count = 2001;
    for (int i = 0; i < count; ++i) {
        const double t = std::pow(10.0, -4.0 + 8.0 * i / (count - 1));
        if (F(t) > 0.0 || F(-t) > 0.0) return true;
    }
    return false;
}

std::vector<double> default_dichotomy_samples(int count) {
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(2 * count));
    for (int i = 0; i < count; ++i) {
        const double v = std::pow(10.0, -3.0 + 6.0 * i / (count - 1));
        t.push_back(v);
        t.push_back(-v);
    }
    return t;
}

DichotomyReport ah_dichotomy(const Nonlinearity& nl, const std::vector<double>& t_samples) {
    DichotomyReport r;
    double lo = kInf, hi = -kInf;
    const double q = nl.two_sharp();
    for (double t : t_samples) {
        if (t == 0.0) continue;
        const double ft = nl.f(t) * t;
        const double F = nl.F(t);
        const double scale = std::abs(ft) + q * std::abs(F);
        // below rounding level the sign is not resolved; such samples carry no information
        if (!(scale > 0.0) || std::abs(ft - q * F) <= kMarginZero * scale) continue;
        const double m = (ft - q * F) / scale;
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    if (lo > hi) return r; // nothing resolved: the equality case
    r.min_margin = lo;
    r.max_margin = hi;
    if (lo > 0.0) r.kind = Dichotomy::F_below;
    else if (hi < 0.0) r.kind = Dichotomy::F_above;
    return r;
}

} // namespace nvl

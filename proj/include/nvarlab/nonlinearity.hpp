#pragma once

#include <Eigen/Core>

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace nvl {

enum class Family { pure_power, mass_critical_power, min_family, difference_family, custom };

std::string to_string(Family f);
Family family_from_string(const std::string& name);

// The four growth limits of F (with F_+ where the definitions use it) and
// the two reference exponents. Infinite limits are +-infinity.
struct GrowthData {
    double eta_bar_0 = 0.0;
    double eta_bar_inf = 0.0;
    double eta_lower_0 = 0.0;
    double eta_lower_inf = 0.0;
    double two_sharp = 0.0;
    double two_star = 0.0;
};

// 2 + 4s/N.
double mass_critical_exponent(int N, double s);
// 2N/(N-2s) for N > 2s, +infinity otherwise.
double critical_sobolev_exponent(int N, double s);
// N (2 pi)^N / |S^{N-1}|. Only used as a documented constant.
double moser_trudinger_alpha(int N);

enum class Dichotomy { F_below, F_above, mixed };
std::string to_string(Dichotomy d);

struct DichotomyReport {
    Dichotomy kind = Dichotomy::mixed;
    // Extremes of (f(t)t - 2_# F(t)) / (|f(t)t| + 2_#|F(t)|) over the samples whose
    // sign is resolved above rounding; both 0 when none is.
    double min_margin = 0.0;
    double max_margin = 0.0;
};

// An odd continuous f with its exact primitive F, F(0) = 0. The exponent
// 2_# depends on (N, s), so every instance carries them.
class Nonlinearity {
public:
    // f(t) = a |t|^{p-2} t, F(t) = a |t|^p / p. Requires p > 2.
    static Nonlinearity pure_power(int N, double s, double p, double coeff = 1.0);
    static Nonlinearity mass_critical_power(int N, double s, double coeff = 1.0);
    // f(t) = min(|t|^{p-2}, |t|^{4s/N}) t, p > 2_#.
    static Nonlinearity min_family(int N, double s, double p);
    // f(t) = |t|^{4s/N} t - |t|^{p-2} t, p > 2_#.
    static Nonlinearity difference_family(int N, double s, double p);
    // Piecewise-linear f through (t_i, f_i), t_i >= 0 increasing, extended oddly.
    // Values beyond the last node are clamped (with a one-time warning on stderr).
    static Nonlinearity custom(int N, double s, std::vector<double> t, std::vector<double> f);
    // Two-column CSV "t, f(t)"; lines starting with '#' and a non-numeric header are skipped.
    static Nonlinearity custom_from_csv(int N, double s, const std::string& path);

    Family family() const { return family_; }
    double p() const { return p_; }
    double coeff() const { return coeff_; }
    int N() const { return N_; }
    double s() const { return s_; }
    double two_sharp() const { return q_; }
    std::string describe() const;

    double f(double t) const;
    double F(double t) const;
    Eigen::ArrayXd f(const Eigen::ArrayXd& t) const;
    Eigen::ArrayXd F(const Eigen::ArrayXd& t) const;

    // Closed-form limits. Custom tables throw unless limits were attached.
    GrowthData growth_limits() const;
    Nonlinearity with_limits(const GrowthData& limits) const;

    // Sampled check of the growth condition at the origin/infinity; returns
    // human-readable warnings (empty when nothing suspicious was found).
    const std::vector<std::string>& warnings() const { return warnings_; }

    // sup_t F(t)/|t|^{2_#} over a log-spaced sample of t in [1e-4, 1e4] (both signs).
    double sampled_sup_ratio() const;
    // True if F > 0 at some sampled t.
    bool positive_somewhere() const;

private:
    struct Table;
    Nonlinearity() = default;
    void check_growth();

    Family family_ = Family::pure_power;
    int N_ = 1;
    double s_ = 1.0;
    double p_ = 0.0;
    double coeff_ = 1.0;
    double q_ = 0.0;
    std::shared_ptr<const Table> table_;
    std::optional<GrowthData> supplied_;
    std::vector<std::string> warnings_;
};

DichotomyReport ah_dichotomy(const Nonlinearity& nl, const std::vector<double>& t_samples);
// Symmetric log-spaced samples +-[1e-3, 1e3], count per sign.
std::vector<double> default_dichotomy_samples(int count = 400);

} // namespace nvl

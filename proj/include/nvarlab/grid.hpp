#pragma once

// Periodic-box discretization of R^N. Samples sit on a half-cell offset
// lattice x_i = -L/2 + (i + 1/2) h along every axis, so that reflections
// x -> -x and quarter turns in the (y1, y2) plane map the grid onto itself and
// no sample ever lands on the singular set {y = 0}.

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace nvl {

// The problem instance. K = 0 means "no Hardy split" (mu must be 0).
struct ProblemParams {
    int N = 2;
    int K = 0;
    double s = 1.0;
    double mu = 0.0;
    double box_length = 16.0;
    int grid_points = 64;
    // Optional mollification of the Hardy weight, (|y|^2 + eps^2)^{-s}.
    double hardy_eps = 0.0;

    // Throws ValidationError naming the violated invariant.
    void validate() const;

    bool has_hardy() const { return K >= 2; }
    std::size_t sample_count() const;
    double spacing() const { return box_length / grid_points; }

    bool operator==(const ProblemParams&) const = default;
};

// (Gamma((K-2s)/4) / (2^s Gamma((K+2s)/4)))^2, the best constant in
//   int u^2/|y|^{2s} <= C |D^s u|_2^2.
// Throws ValidationError when K <= 2s.
double hardy_constant(int K, double s);

// Infimum of admissible mu:0 when K <= 2s, -1/hardy_constant(K, s) otherwise.
// The bound itself is excluded when K > 2s.
double admissible_mu_lower_bound(int K, double s);

using ComplexArray = std::vector<std::complex<double>>;

// Immutable geometry + spectral tables + FFT plans for one ProblemParams.
// Shared between fields through std::shared_ptr<const Grid>.
class Grid {
public:
    static std::shared_ptr<const Grid> create(const ProblemParams& params);
    ~Grid();
    Grid(const Grid&) = delete;
    Grid& operator=(const Grid&) = delete;

    const ProblemParams& params() const { return params_; }
    int dim() const { return params_.N; }
    int points() const { return params_.grid_points; }
    std::size_t size() const { return size_; }
    double spacing() const { return params_.spacing(); }
    double cell_volume() const { return cell_volume_; }

    // 1-D node positions (identical on every axis).
    const Eigen::ArrayXd& nodes() const { return nodes_; }
    // x_axis evaluated at every sample (row-major, axis 0 slowest).
    const Eigen::ArrayXd& coordinate(int axis) const { return coords_[static_cast<std::size_t>(axis)]; }
    // |y| at every sample; only for K >= 2.
    const Eigen::ArrayXd& y_radius() const;
    // |y|^{-2s} (or the mollified variant) at every sample; only for K >= 2.
    const Eigen::ArrayXd& hardy_weight() const;

    // Half-spectrum layout of the real-to-complex transform.
    std::size_t spectral_size() const { return spectral_size_; }
    // |xi|^{2s} on the half spectrum.
    const Eigen::ArrayXd& multiplier() const { return multiplier_; }
    // Hermitian multiplicity (1 or 2) of each half-spectrum entry.
    const Eigen::ArrayXd& spectral_weight() const { return spectral_weight_; }
    // xi_axis on the half spectrum with the Nyquist entry zeroed (for odd derivatives).
    const Eigen::ArrayXd& derivative_wavenumber(int axis) const {
        return wavenumbers_[static_cast<std::size_t>(axis)];
    }
    // |xi|^{2s} at an integer lattice vector k (any sign); used by tests and IO.
    double symbol(std::span<const int> k) const;

    // Unnormalized forward DFT of a real field (FFTW convention).
    void forward(const Eigen::ArrayXd& in, ComplexArray& out) const;
    // Normalized inverse: forward then inverse is the identity.
    void inverse(const ComplexArray& in, Eigen::ArrayXd& out) const;

    // Quadrature scalar product h^N sum a_i b_i.
    double inner(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) const;
    // Spectral quadratic form h^N n^{-N} sum_k w_k m_k |U_k|^2 for a given half-spectrum U.
    double spectral_energy(const ComplexArray& transformed, const Eigen::ArrayXd& symbol_values) const;

private:
    explicit Grid(const ProblemParams& params);

    struct Plans;
    ProblemParams params_;
    std::size_t size_ = 0;
    std::size_t spectral_size_ = 0;
    double cell_volume_ = 0.0;
    Eigen::ArrayXd nodes_;
    std::vector<Eigen::ArrayXd> coords_;
    Eigen::ArrayXd y_radius_;
    Eigen::ArrayXd hardy_weight_;
    Eigen::ArrayXd multiplier_;
    Eigen::ArrayXd spectral_weight_;
    std::vector<Eigen::ArrayXd> wavenumbers_;
    std::unique_ptr<Plans> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

// Real samples of u on a Grid. Immutable value type; all samples finite.
class Field {
public:
    Field(GridPtr grid, Eigen::ArrayXd samples);

    static Field zeros(GridPtr grid);
    // Samples f(x) at every node; x has length N in axis order (y..., z...).
    static Field sample(GridPtr grid, const std::function<double(std::span<const double>)>& f);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const ProblemParams& params() const { return grid_->params(); }
    const Eigen::ArrayXd& samples() const { return samples_; }

    Field scaled(double c) const { return Field(grid_, samples_ * c); }

private:
    GridPtr grid_;
    Eigen::ArrayXd samples_;
};

// |u|_2^2 with the quadrature weight h^N.
double mass(const Field& u);
// |u|_p^p.
double lp_power(const Field& u, double p);
// Quadrature inner product.
double inner(const Field& a, const Field& b);

// sum_xi |xi|^{2s} |u^(xi)|^2, normalized so Parseval holds with weight h^N.
double apply_Ds_squared(const Field& u);
// Fourier-space mass (multiplier 1); equals mass(u) up to rounding.
double fourier_mass(const Field& u);
// (-Delta)^s u on the grid.
Eigen::ArrayXd fractional_laplacian(const Grid& grid, const Eigen::ArrayXd& u);

// int u^2 / |y|^{2s} dx by the midpoint rule on the offset grid. Throws when K < 2.
double hardy_weight_integral(const Field& u);

// t * u = t^{N/2} u(t .), realized by trigonometric (periodic sinc)
// interpolation evaluated at the scaled nodes; points mapped outside the box
// are set to zero. t == 1 returns the input unchanged. Throws NumericalError
// ("dilation exceeds resolution") when t > n/2 or t < 2/n.
Field dilate(const Field& u, double t);

// max over reflections y_a -> -y_a (and, for K >= 2, the quarter turn in the
// (y1, y2) plane) of |u(g .) - u|_2 / max(|u|_2, eps). Zero when K < 2.
double symmetry_residual(const Field& u);
// Average of v over all signed permutations of the y coordinates (the
// grid-preserving part of O(K)). Identity when K < 2.
Eigen::ArrayXd symmetrize(const Grid& grid, const Eigen::ArrayXd& v);

// Fraction of the D^s energy carried by modes with some |k_a| > n/3.
// A cheap resolution diagnostic.
double spectral_tail_fraction(const Field& u);

} // namespace nvl

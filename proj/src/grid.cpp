#include "nvarlab/grid.hpp"

#include "nvarlab/errors.hpp"
#include "nvarlab/summation.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

namespace nvl {

namespace {

// FFTW's planner is not reentrant.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::size_t ipow(std::size_t base, int e) {
    std::size_t r = 1;
    for (int i = 0; i < e; ++i) r *= base;
    return r;
}

// Signed wavenumber for an index along a full (complex) axis.
int signed_k(int i, int n) { return i < n / 2 ? i : i - n; }

} // namespace

double hardy_constant(int K, double s) {
    if (!(K > 2.0 * s)) throw ValidationError("Hardy constant undefined for K <= 2s");
    const double ratio = std::tgamma((K - 2.0 * s) / 4.0) / (std::pow(2.0, s) * std::tgamma((K + 2.0 * s) / 4.0));
    return ratio * ratio;
}

double admissible_mu_lower_bound(int K, double s) {
    if (K > 2.0 * s) return -1.0 / hardy_constant(K, s);
    return 0.0;
}

void ProblemParams::validate() const {
    if (N < 1 || N > 3) throw ValidationError("N must be in 1..3, got " + std::to_string(N));
    if (K != 0 && (K < 2 || K > N)) {
        throw ValidationError("K must be 0 or in 2..N, got K=" + std::to_string(K) + " with N=" + std::to_string(N));
    }
    if (!(s > 0.0) || !std::isfinite(s)) throw ValidationError("s must be a positive finite number");
    if (!std::isfinite(mu)) throw ValidationError("mu must be finite");
    if (K == 0 && mu != 0.0) throw ValidationError("mu must be 0 when K = 0 (no Hardy split)");
    if (K > 0) {
        if (K <= 2.0 * s) {
            if (mu < 0.0) throw ValidationError("mu must be >= 0 when K <= 2s");
        } else {
            const double bound = admissible_mu_lower_bound(K, s);
            if (!(mu > bound)) {
                std::ostringstream os;
                os << "mu below Hardy threshold " << bound << " for K=" << K << ", s=" << s;
                throw ValidationError(os.str());
            }
        }
    }
    if (!(box_length > 0.0) || !std::isfinite(box_length)) throw ValidationError("box_length must be positive");
    if (grid_points < 8 || grid_points % 2 != 0) {
        throw ValidationError("grid_points must be even and >= 8, got " + std::to_string(grid_points));
    }
    if (!(hardy_eps >= 0.0) || !std::isfinite(hardy_eps)) throw ValidationError("hardy_eps must be >= 0");
}

std::size_t ProblemParams::sample_count() const {
    return ipow(static_cast<std::size_t>(grid_points), N);
}

struct Grid::Plans {
    fftw_plan r2c = nullptr;
    fftw_plan c2r = nullptr;
    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (r2c) fftw_destroy_plan(r2c);
        if (c2r) fftw_destroy_plan(c2r);
    }
};

std::shared_ptr<const Grid> Grid::create(const ProblemParams& params) {
    params.validate();
    return std::shared_ptr<const Grid>(new Grid(params));
}

Grid::~Grid() = default;

Grid::Grid(const ProblemParams& params) : params_(params) {
    const int n = params.grid_points;
    const int N = params.N;
    const double L = params.box_length;
    const double h = params.spacing();
    size_ = params.sample_count();
    cell_volume_ = std::pow(h, N);

    nodes_.resize(n);
    for (int i = 0; i < n; ++i) nodes_(i) = -0.5 * L + (i + 0.5) * h;

    coords_.assign(static_cast<std::size_t>(N), Eigen::ArrayXd(static_cast<Eigen::Index>(size_)));
    for (int a = 0; a < N; ++a) {
        const std::size_t stride = ipow(static_cast<std::size_t>(n), N - 1 - a);
        auto& c = coords_[static_cast<std::size_t>(a)];
        for (std::size_t idx = 0; idx < size_; ++idx) c(static_cast<Eigen::Index>(idx)) = nodes_(static_cast<Eigen::Index>((idx / stride) % n));
    }

    if (params.has_hardy()) {
        Eigen::ArrayXd r2 = Eigen::ArrayXd::Zero(static_cast<Eigen::Index>(size_));
        for (int a = 0; a < params.K; ++a) r2 += coords_[static_cast<std::size_t>(a)].square();
        y_radius_ = r2.sqrt();
        const double eps2 = params.hardy_eps * params.hardy_eps;
        hardy_weight_ = (r2 + eps2).pow(-params.s);
    }

    // Half-spectrum: full axes 0..N-2, last axis 0..n/2.
    const int last = n / 2 + 1;
    spectral_size_ = ipow(static_cast<std::size_t>(n), N - 1) * static_cast<std::size_t>(last);
    multiplier_.resize(static_cast<Eigen::Index>(spectral_size_));
    spectral_weight_.resize(static_cast<Eigen::Index>(spectral_size_));
    wavenumbers_.assign(static_cast<std::size_t>(N), Eigen::ArrayXd(static_cast<Eigen::Index>(spectral_size_)));
    const double dk = 2.0 * std::numbers::pi / L;
    std::array<int, 3> k{};
    for (std::size_t idx = 0; idx < spectral_size_; ++idx) {
        std::size_t rem = idx;
        const int il = static_cast<int>(rem % last);
        rem /= last;
        for (int a = N - 2; a >= 0; --a) {
            k[static_cast<std::size_t>(a)] = signed_k(static_cast<int>(rem % n), n);
            rem /= n;
        }
        k[static_cast<std::size_t>(N - 1)] = il;
        double xi2 = 0.0;
        for (int a = 0; a < N; ++a) {
            const int ka = k[static_cast<std::size_t>(a)];
            const double xi = dk * ka;
            xi2 += xi * xi;
            wavenumbers_[static_cast<std::size_t>(a)](static_cast<Eigen::Index>(idx)) = (std::abs(ka) == n / 2) ? 0.0 : xi;
        }
        const auto e = static_cast<Eigen::Index>(idx);
        multiplier_(e) = xi2 == 0.0 ? 0.0 : std::pow(xi2, params.s);
        spectral_weight_(e) = (il == 0 || il == n / 2) ? 1.0 : 2.0;
    }

    plans_ = std::make_unique<Plans>();
    std::array<int, 3> dims{n, n, n};
    double* rbuf = fftw_alloc_real(size_);
    fftw_complex* cbuf = fftw_alloc_complex(spectral_size_);
    {
        std::lock_guard lock(planner_mutex());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        plans_->r2c = fftw_plan_dft_r2c(N, dims.data(), rbuf, cbuf, flags);
        plans_->c2r = fftw_plan_dft_c2r(N, dims.data(), cbuf, rbuf, flags | FFTW_DESTROY_INPUT);
    }
    fftw_free(rbuf);
    fftw_free(cbuf);
    if (!plans_->r2c || !plans_->c2r) throw NumericalError("FFT planning failed");
}

const Eigen::ArrayXd& Grid::y_radius() const {
    if (!params_.has_hardy()) throw ValidationError("Hardy term undefined for mu=0 configuration");
    return y_radius_;
}

const Eigen::ArrayXd& Grid::hardy_weight() const {
    if (!params_.has_hardy()) throw ValidationError("Hardy term undefined for mu=0 configuration");
    return hardy_weight_;
}

double Grid::symbol(std::span<const int> k) const {
    if (static_cast<int>(k.size()) != params_.N) throw ValidationError("wavevector has wrong dimension");
    const double dk = 2.0 * std::numbers::pi / params_.box_length;
    double xi2 = 0.0;
    for (int ka : k) xi2 += (dk * ka) * (dk * ka);
    return xi2 == 0.0 ? 0.0 : std::pow(xi2, params_.s);
}

void Grid::forward(const Eigen::ArrayXd& in, ComplexArray& out) const {
    if (static_cast<std::size_t>(in.size()) != size_) throw ValidationError("forward: size mismatch");
    out.resize(spectral_size_);
    fftw_execute_dft_r2c(plans_->r2c, const_cast<double*>(in.data()), reinterpret_cast<fftw_complex*>(out.data()));
}

void Grid::inverse(const ComplexArray& in, Eigen::ArrayXd& out) const {
    if (in.size() != spectral_size_) throw ValidationError("inverse: size mismatch");
    ComplexArray scratch(in);
    out.resize(static_cast<Eigen::Index>(size_));
    fftw_execute_dft_c2r(plans_->c2r, reinterpret_cast<fftw_complex*>(scratch.data()), out.data());
    out /= static_cast<double>(size_);
}

double Grid::inner(const Eigen::ArrayXd& a, const Eigen::ArrayXd& b) const {
    const Eigen::ArrayXd prod = a * b;
    return cell_volume_ * pairwise_sum(prod);
}

double Grid::spectral_energy(const ComplexArray& transformed, const Eigen::ArrayXd& symbol_values) const {
    Eigen::ArrayXd terms(static_cast<Eigen::Index>(spectral_size_));
    for (std::size_t i = 0; i < spectral_size_; ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        terms(e) = spectral_weight_(e) * symbol_values(e) * std::norm(transformed[i]);
    }
    return cell_volume_ / static_cast<double>(size_) * pairwise_sum(terms);
}

Field::Field(GridPtr grid, Eigen::ArrayXd samples) : grid_(std::move(grid)), samples_(std::move(samples)) {
    if (!grid_) throw ValidationError("field without grid");
    if (static_cast<std::size_t>(samples_.size()) != grid_->size()) {
        throw ValidationError("sample count " + std::to_string(samples_.size()) + " != grid_points^N = " +
                              std::to_string(grid_->size()));
    }
    if (!samples_.allFinite()) throw NumericalError("non-finite samples in field");
}

Field Field::zeros(GridPtr grid) {
    const auto n = static_cast<Eigen::Index>(grid->size());
    return Field(std::move(grid), Eigen::ArrayXd::Zero(n));
}

Field Field::sample(GridPtr grid, const std::function<double(std::span<const double>)>& f) {
    const int N = grid->dim();
    Eigen::ArrayXd values(static_cast<Eigen::Index>(grid->size()));
    std::array<double, 3> x{};
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        for (int a = 0; a < N; ++a) x[static_cast<std::size_t>(a)] = grid->coordinate(a)(i);
        values(i) = f(std::span<const double>(x.data(), static_cast<std::size_t>(N)));
    }
    return Field(std::move(grid), std::move(values));
}

double mass(const Field& u) { return u.grid().inner(u.samples(), u.samples()); }

double lp_power(const Field& u, double p) {
    const Eigen::ArrayXd a = u.samples().abs().pow(p);
    return u.grid().cell_volume() * pairwise_sum(a);
}

double inner(const Field& a, const Field& b) {
    if (a.grid_ptr() != b.grid_ptr() && !(a.params() == b.params())) throw ValidationError("fields on different grids");
    return a.grid().inner(a.samples(), b.samples());
}

double apply_Ds_squared(const Field& u) {
    ComplexArray U;
    u.grid().forward(u.samples(), U);
    return u.grid().spectral_energy(U, u.grid().multiplier());
}

double fourier_mass(const Field& u) {
    ComplexArray U;
    u.grid().forward(u.samples(), U);
    const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(static_cast<Eigen::Index>(u.grid().spectral_size()));
    return u.grid().spectral_energy(U, ones);
}

Eigen::ArrayXd fractional_laplacian(const Grid& grid, const Eigen::ArrayXd& u) {
    ComplexArray U;
    grid.forward(u, U);
    const auto& m = grid.multiplier();
    for (std::size_t i = 0; i < U.size(); ++i) U[i] *= m(static_cast<Eigen::Index>(i));
    Eigen::ArrayXd out;
    grid.inverse(U, out);
    return out;
}

double hardy_weight_integral(const Field& u) {
    const auto& w = u.grid().hardy_weight();
    const Eigen::ArrayXd a = u.samples().square() * w;
    return u.grid().cell_volume() * pairwise_sum(a);
}

namespace {

// Periodic sinc for an even number of nodes: the trigonometric cardinal
// function of the grid, evaluated at offset d.
double periodic_sinc(double d, double h, int n) {
    const double a = std::numbers::pi * d / h;
    if (std::abs(a) < 1e-14) return 1.0;
    return std::sin(a) / (n * std::tan(a / n));
}

// Applies the n x n matrix A along one axis of a row-major N-D array.
Eigen::ArrayXd apply_along_axis(const Eigen::MatrixXd& A, const Eigen::ArrayXd& in, int axis, int N, int n) {
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const std::size_t outer = ipow(static_cast<std::size_t>(n), axis);
    const std::size_t inner = ipow(static_cast<std::size_t>(n), N - 1 - axis);
    Eigen::ArrayXd out(in.size());
    const auto block = static_cast<Eigen::Index>(static_cast<std::size_t>(n) * inner);
    for (std::size_t o = 0; o < outer; ++o) {
        const auto off = static_cast<Eigen::Index>(o) * block;
        Eigen::Map<const RowMat> src(in.data() + off, n, static_cast<Eigen::Index>(inner));
        Eigen::Map<RowMat> dst(out.data() + off, n, static_cast<Eigen::Index>(inner));
        dst.noalias() = A * src;
    }
    return out;
}

} // namespace

Field dilate(const Field& u, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw ValidationError("dilation factor must be positive");
    if (t == 1.0) return u;
    const Grid& g = u.grid();
    const int n = g.points();
    const int N = g.dim();
    if (t > 0.5 * n || t < 2.0 / n) throw NumericalError("dilation exceeds resolution");
    const double h = g.spacing();
    const double half = 0.5 * g.params().box_length;
    const auto& x = g.nodes();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double target = t * x(i);
        if (std::abs(target) >= half) continue;
        for (int j = 0; j < n; ++j) A(i, j) = periodic_sinc(target - x(j), h, n);
    }
    Eigen::ArrayXd v = u.samples();
    for (int a = 0; a < N; ++a) v = apply_along_axis(A, v, a, N, n);
    v *= std::pow(t, 0.5 * N);
    return Field(u.grid_ptr(), std::move(v));
}

double symmetry_residual(const Field& u) {
    const auto& p = u.params();
    if (p.K < 2) return 0.0;
    const Grid& g = u.grid();
    const int n = g.points();
    const int N = g.dim();
    const double norm = std::sqrt(mass(u));
    const double denom = std::max(norm, 1e-150);

    // Each group element maps a multi-index i to the source index of u(g x).
    auto residual_for = [&](auto&& source) {
        Eigen::ArrayXd diff(u.samples().size());
        std::array<int, 3> idx{};
        for (Eigen::Index lin = 0; lin < diff.size(); ++lin) {
            auto rem = static_cast<std::size_t>(lin);
            for (int a = N - 1; a >= 0; --a) {
                idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % n);
                rem /= n;
            }
            std::array<int, 3> src = source(idx);
            std::size_t s_lin = 0;
            for (int a = 0; a < N; ++a) s_lin = s_lin * n + static_cast<std::size_t>(src[static_cast<std::size_t>(a)]);
            diff(lin) = u.samples()(static_cast<Eigen::Index>(s_lin)) - u.samples()(lin);
        }
        return std::sqrt(g.inner(diff, diff)) / denom;
    };

    double worst = 0.0;
    for (int a = 0; a < p.K; ++a) {
        worst = std::max(worst, residual_for([&](std::array<int, 3> i) {
            i[static_cast<std::size_t>(a)] = n - 1 - i[static_cast<std::size_t>(a)];
            return i;
        }));
    }
    // Quarter turns (y_a, y_b) -> (-y_b, y_a) in consecutive coordinate planes.
    for (int a = 0; a + 1 < p.K; ++a) {
        worst = std::max(worst, residual_for([&](std::array<int, 3> i) {
            const auto ia = static_cast<std::size_t>(a);
            const int ya = i[ia], yb = i[ia + 1];
            i[ia] = n - 1 - yb;
            i[ia + 1] = ya;
            return i;
        }));
    }
    return worst;
}

Eigen::ArrayXd symmetrize(const Grid& g, const Eigen::ArrayXd& v) {
    const int K = g.params().K;
    if (K < 2) return v;
    if (v.size() != static_cast<Eigen::Index>(g.size())) throw ValidationError("array size does not match grid");
    const int n = g.points();
    const int N = g.dim();
    // all signed permutations of (y_1..y_K)
    std::vector<std::array<int, 3>> perms;
    std::array<int, 3> perm{0, 1, 2};
    do perms.push_back(perm);
    while (std::next_permutation(perm.begin(), perm.begin() + K));
    const int sign_count = 1 << K;
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(v.size());
    std::array<int, 3> idx{}, src{};
    for (Eigen::Index lin = 0; lin < v.size(); ++lin) {
        auto rem = static_cast<std::size_t>(lin);
        for (int a = N - 1; a >= 0; --a) {
            idx[static_cast<std::size_t>(a)] = static_cast<int>(rem % n);
            rem /= n;
        }
        double acc = 0.0;
        for (const auto& pm : perms) {
            for (int sg = 0; sg < sign_count; ++sg) {
                src = idx;
                for (int a = 0; a < K; ++a) {
                    const int from = idx[static_cast<std::size_t>(pm[static_cast<std::size_t>(a)])];
                    src[static_cast<std::size_t>(a)] = (sg >> a) & 1 ? n - 1 - from : from;
                }
                std::size_t s_lin = 0;
                for (int a = 0; a < N; ++a) s_lin = s_lin * n + static_cast<std::size_t>(src[static_cast<std::size_t>(a)]);
                acc += v(static_cast<Eigen::Index>(s_lin));
            }
        }
        out(lin) = acc / static_cast<double>(perms.size() * static_cast<std::size_t>(sign_count));
    }
    return out;
}

double spectral_tail_fraction(const Field& u) {
    const Grid& g = u.grid();
    ComplexArray U;
    g.forward(u.samples(), U);
    const int n = g.points();
    const int N = g.dim();
    const int last = n / 2 + 1;
    const double cut = n / 3.0;
    Eigen::ArrayXd all(static_cast<Eigen::Index>(U.size()));
    Eigen::ArrayXd tail(static_cast<Eigen::Index>(U.size()));
    for (std::size_t idx = 0; idx < U.size(); ++idx) {
        std::size_t rem = idx;
        bool high = static_cast<double>(rem % last) > cut;
        rem /= last;
        for (int a = N - 2; a >= 0; --a) {
            if (std::abs(signed_k(static_cast<int>(rem % n), n)) > cut) high = true;
            rem /= n;
        }
        const auto e = static_cast<Eigen::Index>(idx);
        all(e) = g.spectral_weight()(e) * (1.0 + g.multiplier()(e)) * std::norm(U[idx]);
        tail(e) = high ? all(e) : 0.0;
    }
    const double total = pairwise_sum(all);
    return total > 0.0 ? pairwise_sum(tail) / total : 0.0;
}

} // namespace nvl

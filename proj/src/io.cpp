#include "nvarlab/io.hpp"

#include "nvarlab/errors.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

namespace nvl {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::string& path) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ValidationError("truncated field file '" + path + "'");
    return v;
}

void write_payload(std::ostream& out, const ProblemParams& p, const Eigen::ArrayXd& v) {
    out.write("NVF1", 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.N));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.K));
    put<double>(out, p.s);
    put<double>(out, p.mu);
    put<double>(out, p.box_length);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p.grid_points));
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::pair<ProblemParams, Eigen::ArrayXd> read_payload(std::istream& in, const std::string& path) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "NVF1", 4) != 0) throw ValidationError("'" + path + "' is not an NVF1 field");
    ProblemParams p;
    p.N = static_cast<int>(get<std::uint32_t>(in, path));
    p.K = static_cast<int>(get<std::uint32_t>(in, path));
    p.s = get<double>(in, path);
    p.mu = get<double>(in, path);
    p.box_length = get<double>(in, path);
    p.grid_points = static_cast<int>(get<std::uint32_t>(in, path));
    p.validate();
    Eigen::ArrayXd v(static_cast<Eigen::Index>(p.sample_count()));
    if (!in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)))) {
        throw ValidationError("truncated field file '" + path + "'");
    }
    return {p, std::move(v)};
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path + "'");
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return in;
}

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double x = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ValidationError("key '" + key + "': not a number: '" + v + "'");
    return x;
}

long long to_integer(const std::string& key, const std::string& v) {
    long long x = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), x);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ValidationError("key '" + key + "': not an integer: '" + v + "'");
    return x;
}

int to_int(const std::string& key, const std::string& v) {
    const long long x = to_integer(key, v);
    if (x < -(1LL << 31) || x >= (1LL << 31)) throw ValidationError("key '" + key + "': out of range");
    return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ValidationError("key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::istringstream in(v);
    std::string tok;
    while (in >> tok) out.push_back(to_double(key, tok));
    if (out.empty()) throw ValidationError("key '" + key + "': empty list");
    return out;
}

} // namespace

void write_field(const std::string& path, const Field& u) {
    auto out = open_out(path);
    write_payload(out, u.params(), u.samples());
}

Field read_field(const std::string& path) {
    auto in = open_in(path);
    auto [p, v] = read_payload(in, path);
    return Field(Grid::create(p), std::move(v));
}

void write_vector_field(const std::string& path, const VectorField& U) {
    auto out = open_out(path);
    out.write("NVVF", 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(U.dim()));
    for (const auto& c : U.components()) write_payload(out, U.params(), c);
}

VectorField read_vector_field(const std::string& path) {
    auto in = open_in(path);
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "NVVF", 4) != 0) throw ValidationError("'" + path + "' is not an NVVF field");
    const auto count = get<std::uint32_t>(in, path);
    if (count < 1 || count > 3) throw ValidationError("bad component count in '" + path + "'");
    std::vector<Eigen::ArrayXd> comps;
    std::optional<ProblemParams> params;
    for (std::uint32_t a = 0; a < count; ++a) {
        auto [p, v] = read_payload(in, path);
        if (params && !(*params == p)) throw ValidationError("components of '" + path + "' disagree on the grid");
        params = p;
        comps.push_back(std::move(v));
    }
    return VectorField(Grid::create(*params), std::move(comps));
}

nlohmann::json to_json(const ProblemParams& p) {
    return {{"N", p.N}, {"K", p.K}, {"s", p.s}, {"mu", p.mu}, {"box_length", p.box_length},
            {"grid_points", p.grid_points}, {"hardy_eps", p.hardy_eps}};
}

nlohmann::json to_json(const EnergyBreakdown& e) {
    return {{"ds_part", e.ds_part}, {"hardy_part", e.hardy_part}, {"seminorm_sq", e.seminorm_sq},
            {"potential", e.potential}, {"J", e.J}, {"mass", e.mass}};
}

nlohmann::json to_json(const IdentityReport& r) {
    return {{"pohozaev_residual", r.pohozaev_residual}, {"nehari_residual", r.nehari_residual},
            {"M_value", r.M_value}, {"lambda_estimate", r.lambda_estimate}};
}

nlohmann::json to_json(const GNResult& r) {
    return {{"iota", r.iota}, {"C", r.C}, {"char_residual", r.char_residual}, {"el_residual", r.el_residual},
            {"p", r.p}, {"delta_p", r.delta_p}, {"iterations", r.iterations}};
}

nlohmann::json to_json(const MinimizeResult& r) {
    nlohmann::json j = {{"breakdown", to_json(r.breakdown)},
                        {"converged", r.converged},
                        {"iterations", r.iterations},
                        {"unbounded", r.unbounded},
                        {"probe", to_string(r.probe)},
                        {"grad_norm", r.grad_norm},
                        {"start_index", r.start_index}};
    j["identity"] = r.identity ? to_json(*r.identity) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const MSample& m) {
    // -inf has no JSON number; the status carries it
    return {{"rho", m.rho}, {"m", std::isfinite(m.m) ? nlohmann::json(m.m) : nlohmann::json(nullptr)},
            {"status", to_string(m.status)}};
}

nlohmann::json to_json(const ClosedFormBounds& b) {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json("inf"); };
    nlohmann::json j = {{"eta_bar_0_bound", num(b.eta_bar_0_bound)},
                        {"eta_bar_inf_bound", num(b.eta_bar_inf_bound)},
                        {"eta_lower_0_bound", num(b.eta_lower_0_bound)},
                        {"sup_ratio_bound", num(b.sup_ratio_bound)}};
    j["rho_F_estimate"] = b.rho_F_estimate ? num(*b.rho_F_estimate) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const ThresholdResult& r) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& m : r.m_samples) samples.push_back(to_json(m));
    nlohmann::json j = {{"lo", r.lo}, {"hi", r.hi}, {"m_samples", samples}};
    j["bounds"] = r.bounds ? to_json(*r.bounds) : nlohmann::json(nullptr);
    return j;
}

nlohmann::json to_json(const RhoFResult& r) {
    return {{"estimate", r.estimate}, {"sigma", r.sigma}, {"per_sigma", r.per_sigma}};
}

void write_m_csv(const std::string& path, std::vector<MSample> samples) {
    std::stable_sort(samples.begin(), samples.end(), [](const MSample& a, const MSample& b) { return a.rho < b.rho; });
    auto out = open_out(path);
    out << "rho,m,status\n";
    for (const auto& m : samples) out << fmt(m.rho) << ',' << (std::isfinite(m.m) ? fmt(m.m) : "-inf") << ',' << to_string(m.status) << '\n';
}

std::string sha256_file(const std::string& path) {
    auto in = open_in(path);
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw NumericalError("sha256 unavailable");
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        EVP_DigestUpdate(ctx.get(), buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

Nonlinearity build_nonlinearity(const NonlinearitySpec& spec, int N, double s) {
    switch (spec.family) {
    case Family::pure_power: return Nonlinearity::pure_power(N, s, spec.p, spec.coeff);
    case Family::mass_critical_power: return Nonlinearity::mass_critical_power(N, s, spec.coeff);
    case Family::min_family: return Nonlinearity::min_family(N, s, spec.p);
    case Family::difference_family: return Nonlinearity::difference_family(N, s, spec.p);
    case Family::custom:
        if (spec.table.empty()) throw ValidationError("family custom needs a table");
        return Nonlinearity::custom_from_csv(N, s, spec.table);
    }
    throw ValidationError("unknown family");
}

const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> c{"gn", "minimize", "threshold", "identities", "curlcurl", "verify"};
    return c;
}

void RunConfig::validate() const {
    const auto& cmds = known_commands();
    if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) throw ValidationError("unknown command '" + command + "'");
    problem.validate();
    solver.validate();
    if (nonlinearity.family == Family::custom && nonlinearity.table.empty()) throw ValidationError("family custom needs a table");
    if (nonlinearity.family != Family::custom) (void)build_nonlinearity(nonlinearity, problem.N, problem.s);
    if (!(rho_lo > 0.0) || !(rho_hi > rho_lo)) throw ValidationError("need 0 < rho_lo < rho_hi");
    if (bisect_iters < 0) throw ValidationError("bisect_iters must be nonnegative");
    for (double x : sigma) {
        if (!(x > 0.0)) throw ValidationError("sigma values must be positive");
    }
    if (output_dir.empty()) throw ValidationError("output directory is empty");
}

bool operator==(const RunConfig& a, const RunConfig& b) {
    const SolverConfig& x = a.solver;
    const SolverConfig& y = b.solver;
    const bool solver_eq = x.rho == y.rho && x.constraint == y.constraint && x.gamma_star == y.gamma_star &&
                           x.step0 == y.step0 && x.method == y.method && x.max_iters == y.max_iters &&
                           x.grad_tol == y.grad_tol && x.restarts == y.restarts && x.seed == y.seed &&
                           x.window == y.window && x.symmetric == y.symmetric && x.probe == y.probe &&
                           x.t_grid == y.t_grid;
    return solver_eq && a.command == b.command && a.problem == b.problem && a.nonlinearity == b.nonlinearity &&
           a.gn_p == b.gn_p && a.rho_lo == b.rho_lo && a.rho_hi == b.rho_hi && a.bisect_iters == b.bisect_iters &&
           a.sigma == b.sigma && a.output_dir == b.output_dir && a.seed == b.seed;
}

RunConfig parse_config(const std::string& text) {
    RunConfig c;
    std::map<std::string, int> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream entries(line);
        std::string entry;
        while (std::getline(entries, entry, ',')) {
            entry = trim(entry);
            if (entry.empty()) continue;
            const auto eq = entry.find('=');
            const std::string where = " (line " + std::to_string(lineno) + ")";
            if (eq == std::string::npos) throw ValidationError("expected key = value, got '" + entry + "'" + where);
            const std::string key = trim(entry.substr(0, eq));
            const std::string val = trim(entry.substr(eq + 1));
            if (val.empty()) throw ValidationError("key '" + key + "' has no value" + where);
            if (seen.count(key)) throw ValidationError("key '" + key + "' given twice" + where);
            seen[key] = lineno;
            auto& P = c.problem;
            auto& S = c.solver;
            if (key == "command") c.command = val;
            else if (key == "N") P.N = to_int(key, val);
            else if (key == "K") P.K = to_int(key, val);
            else if (key == "s") P.s = to_double(key, val);
            else if (key == "mu") P.mu = to_double(key, val);
            else if (key == "L") P.box_length = to_double(key, val);
            else if (key == "n") P.grid_points = to_int(key, val);
            else if (key == "hardy_eps") P.hardy_eps = to_double(key, val);
            else if (key == "family") c.nonlinearity.family = family_from_string(val);
            else if (key == "p") c.nonlinearity.p = to_double(key, val);
            else if (key == "coeff") c.nonlinearity.coeff = to_double(key, val);
            else if (key == "table") c.nonlinearity.table = val;
            else if (key == "rho") S.rho = to_double(key, val);
            else if (key == "constraint") S.constraint = constraint_from_string(val);
            else if (key == "method") S.method = method_from_string(val);
            else if (key == "gamma_star") S.gamma_star = to_double(key, val);
            else if (key == "step0") S.step0 = to_double(key, val);
            else if (key == "max_iters") S.max_iters = to_int(key, val);
            else if (key == "grad_tol") S.grad_tol = to_double(key, val);
            else if (key == "restarts") S.restarts = to_int(key, val);
            else if (key == "window") S.window = to_double(key, val);
            else if (key == "symmetric") S.symmetric = to_bool(key, val);
            else if (key == "probe") S.probe = to_bool(key, val);
            else if (key == "t_grid") S.t_grid = to_list(key, val);
            else if (key == "gn_p") c.gn_p = to_double(key, val);
            else if (key == "rho_lo") c.rho_lo = to_double(key, val);
            else if (key == "rho_hi") c.rho_hi = to_double(key, val);
            else if (key == "bisect_iters") c.bisect_iters = to_int(key, val);
            else if (key == "sigma") c.sigma = to_list(key, val);
            else if (key == "out") c.output_dir = val;
            else if (key == "seed") {
                const long long s = to_integer(key, val);
                if (s < 0) throw ValidationError("seed must be nonnegative");
                c.seed = static_cast<std::uint64_t>(s);
                S.seed = c.seed;
            } else {
                throw ValidationError("unknown key '" + key + "'" + where);
            }
        }
    }
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize(const RunConfig& c) {
    const auto& P = c.problem;
    const auto& S = c.solver;
    std::ostringstream o;
    o << "command = " << c.command << '\n';
    o << "N = " << P.N << "\nK = " << P.K << "\ns = " << fmt(P.s) << "\nmu = " << fmt(P.mu) << '\n';
    o << "L = " << fmt(P.box_length) << "\nn = " << P.grid_points << "\nhardy_eps = " << fmt(P.hardy_eps) << '\n';
    o << "family = " << to_string(c.nonlinearity.family) << "\np = " << fmt(c.nonlinearity.p)
      << "\ncoeff = " << fmt(c.nonlinearity.coeff) << '\n';
    if (!c.nonlinearity.table.empty()) o << "table = " << c.nonlinearity.table << '\n';
    o << "rho = " << fmt(S.rho) << "\nconstraint = " << to_string(S.constraint) << "\nmethod = " << to_string(S.method) << '\n';
    if (S.gamma_star) o << "gamma_star = " << fmt(*S.gamma_star) << '\n';
    o << "step0 = " << fmt(S.step0) << "\nmax_iters = " << S.max_iters << "\ngrad_tol = " << fmt(S.grad_tol) << '\n';
    o << "restarts = " << S.restarts << "\nwindow = " << fmt(S.window) << '\n';
    o << "symmetric = " << (S.symmetric ? "true" : "false") << "\nprobe = " << (S.probe ? "true" : "false") << '\n';
    o << "t_grid = " << fmt_list(S.t_grid) << '\n';
    if (c.gn_p) o << "gn_p = " << fmt(*c.gn_p) << '\n';
    o << "rho_lo = " << fmt(c.rho_lo) << "\nrho_hi = " << fmt(c.rho_hi) << "\nbisect_iters = " << c.bisect_iters << '\n';
    o << "sigma = " << fmt_list(c.sigma) << '\n';
    o << "out = " << c.output_dir << "\nseed = " << c.seed << '\n';
    return o.str();
}

nlohmann::json to_json(const RunManifest& m) {
    nlohmann::json files = nlohmann::json::array();
    for (const auto& a : m.artifacts) files.push_back({{"file", a.file}, {"sha256", a.sha256}});
    return {{"config", m.config}, {"artifacts", files}, {"wall_clock_seconds", m.wall_clock},
            {"version", m.version}, {"failures", m.failures}};
}

bool check_manifest(const std::string& dir, const RunManifest& m) {
    for (const auto& a : m.artifacts) {
        const auto path = (std::filesystem::path(dir) / a.file).string();
        if (!std::filesystem::exists(path) || sha256_file(path) != a.sha256) return false;
    }
    return true;
}

} // namespace nvl

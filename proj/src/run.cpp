#include "nvarlab/run.hpp"

#include "nvarlab/errors.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace nvl {

namespace {

namespace fs = std::filesystem;

class Writer {
public:
    explicit Writer(std::string dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

    void json(const std::string& name, const nlohmann::json& j) {
        std::ofstream out(path(name));
        if (!out) throw ValidationError("cannot write '" + path(name) + "'");
        out << j.dump(2) << '\n';
        out.close();
        add(name);
    }

    void text(const std::string& name, const std::string& s) {
        std::ofstream out(path(name));
        if (!out) throw ValidationError("cannot write '" + path(name) + "'");
        out << s;
        out.close();
        add(name);
    }

    // for files written by the io functions
    void add(const std::string& name) { entries_.push_back({name, sha256_file(path(name))}); }

    const std::vector<ArtifactEntry>& entries() const { return entries_; }

private:
    std::string dir_;
    std::vector<ArtifactEntry> entries_;
};

CheckRecord check_le(std::string name, double value, double tol) {
    return {std::move(name), value, tol, std::isfinite(value) && value <= tol};
}

double relative(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

std::string context(const RunConfig& c) {
    const auto& p = c.problem;
    std::ostringstream o;
    o << c.command << " [N=" << p.N << " K=" << p.K << " s=" << p.s << " mu=" << p.mu << " L=" << p.box_length
      << " n=" << p.grid_points << " family=" << to_string(c.nonlinearity.family) << "]: ";
    return o.str();
}

GNConfig gn_config(const RunConfig& c) {
    // the quotient descent keeps its own iteration budget and tolerance
    GNConfig g;
    g.seed = c.seed;
    g.random_start = c.seed != 0;
    return g;
}

void progress_to(std::ostream& out, SolverConfig& s) {
    s.progress = [&out](const ProgressRecord& r) {
        out << nlohmann::json{{"iter", r.iter}, {"J", r.J}, {"mass", r.mass}, {"grad_norm", r.grad_norm}}.dump() << '\n';
    };
}

void run_gn(const RunConfig& c, const GridPtr& g, Writer& w, std::ostream& log) {
    const double p = c.gn_p.value_or(mass_critical_exponent(c.problem.N, c.problem.s));
    const GNResult r = compute_gn(g, p, gn_config(c));
    log << "iota = " << r.iota << ", C = " << r.C << ", char residual " << r.char_residual << '\n';
    w.json("gn.json", to_json(r));
    write_field(w.path("gn_w.nvf"), r.w);
    w.add("gn_w.nvf");
}

MinimizeResult run_minimize(const RunConfig& c, const GridPtr& g, const Nonlinearity& nl, Writer& w, std::ostream& log) {
    SolverConfig s = c.solver;
    std::ofstream prog(w.path("progress.jsonl"));
    progress_to(prog, s);
    const MinimizeResult r = multistart(g, nl, s);
    prog.close();
    w.add("progress.jsonl");
    log << "J = " << r.breakdown.J << ", mass = " << r.breakdown.mass << (r.converged ? ", converged" : ", not converged")
        << (r.unbounded ? ", unbounded" : "") << '\n';
    w.json("minimize.json", to_json(r));
    write_field(w.path("minimizer.nvf"), r.field);
    w.add("minimizer.nvf");
    return r;
}

void run_identities(const RunConfig& c, const GridPtr& g, const Nonlinearity& nl, Writer& w, std::ostream& log) {
    const MinimizeResult r = run_minimize(c, g, nl, w, log);
    nlohmann::json j = {{"breakdown", to_json(r.breakdown)}, {"converged", r.converged}};
    if (r.breakdown.mass > 0.0) {
        const IdentityReport id = identities(r.field, nl);
        j["identity"] = to_json(id);
        log << "Pohozaev residual " << id.pohozaev_residual << ", lambda " << id.lambda_estimate << '\n';
    } else {
        j["identity"] = nullptr;
        log << "zero field: identities not defined\n";
    }
    if (g->params().K >= 2) j["symmetry_residual"] = symmetry_residual(r.field);
    w.json("identities.json", j);
}

void run_threshold(const RunConfig& c, const GridPtr& g, const Nonlinearity& nl, Writer& w, std::ostream& log) {
    const double q = mass_critical_exponent(c.problem.N, c.problem.s);
    const GNResult gn = compute_gn(g, q, gn_config(c));
    log << "C_{N,2#} = " << gn.C << '\n';
    const auto seeds = dilated_seeds(gn.w, {0.25, 0.5, 1.0, 2.0});
    ThresholdResult r = bisect_rho_star(g, nl, c.rho_lo, c.rho_hi, c.bisect_iters, c.solver, seeds);
    ClosedFormBounds b;
    try {
        b = closed_form_bounds(nl, gn.C);
    } catch (const ValidationError&) {
        // custom tables without attached limits
        b.eta_bar_0_bound = b.eta_bar_inf_bound = b.eta_lower_0_bound = std::nan("");
        b.sup_ratio_bound = eta_bound(c.problem.N, c.problem.s, gn.C, nl.sampled_sup_ratio());
    }
    if (nl.positive_somewhere()) {
        try {
            b.rho_F_estimate = estimate_rho_F(g, nl, c.sigma, 400, c.solver.window < 1.0 ? c.solver.window : 0.9).estimate;
        } catch (const NumericalError& e) {
            log << "rho_F estimate skipped: " << e.what() << '\n';
        }
    }
    r.bounds = b;
    log << "bracket [" << r.lo << ", " << r.hi << "]\n";
    nlohmann::json j = to_json(r);
    j["C"] = gn.C;
    w.json("threshold.json", j);
    write_m_csv(w.path("m_samples.csv"), r.m_samples);
    w.add("m_samples.csv");
}

void run_curlcurl(const RunConfig& c, const GridPtr& g, const Nonlinearity& nl, Writer& w, std::ostream& log) {
    const auto& p = c.problem;
    if (p.N != 3 || p.K != 2 || p.s != 1.0 || p.mu != 1.0) throw ValidationError("curlcurl needs N = 3, K = 2, s = 1, mu = 1");
    const MinimizeResult r = run_minimize(c, g, nl, w, log);
    const VectorField U = lift(r.field);
    nlohmann::json j = {{"J", r.breakdown.J}, {"vector_energy", vector_energy(U, nl)}, {"mass", mass(r.field)},
                        {"vector_mass", mass(U)}};
    if (r.breakdown.mass > 0.0) {
        const double S = seminorm_sq(r.field);
        j["seminorm_sq"] = S;
        j["curl_energy"] = curl_energy(U);
        j["curl_identity_residual"] = relative(curl_energy(U), S);
        j["divergence_ratio"] = divergence_norm(U) / std::sqrt(gradient_energy(U));
    }
    log << "E(U) = " << j["vector_energy"].get<double>() << ", J(u) = " << r.breakdown.J << '\n';
    w.json("curlcurl.json", j);
    write_vector_field(w.path("lifted.nvvf"), U);
    w.add("lifted.nvvf");
}

void run_verify(const RunConfig& c, Writer& w, std::ostream& log, RunManifest& m) {
    const auto checks = verify_suite(c);
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& k : checks) {
        arr.push_back({{"name", k.name}, {"value", k.value}, {"tolerance", k.tolerance}, {"pass", k.pass}});
        log << (k.pass ? "PASS " : "FAIL ") << k.name << ": " << k.value << " (tol " << k.tolerance << ")\n";
        if (!k.pass) ++m.failures;
    }
    w.json("verify.json", {{"checks", arr}, {"failures", m.failures}});
}

} // namespace

std::vector<CheckRecord> verify_suite(const RunConfig& cfg) {
    cfg.validate();
    const auto g = Grid::create(cfg.problem);
    const auto& prm = cfg.problem;
    const Nonlinearity nl = build_nonlinearity(cfg.nonlinearity, prm.N, prm.s);
    std::vector<CheckRecord> out;
    std::mt19937_64 rng(cfg.seed);

    double worst_fd = 0.0;
    for (int i = 0; i < 5; ++i) {
        const Field u = random_initializer(g, cfg.solver.rho, rng);
        const Field v = random_initializer(g, cfg.solver.rho, rng);
        const double eps = 1e-5;
        const double Jp = evaluate(Field(g, u.samples() + eps * v.samples()), nl).J;
        const double Jm = evaluate(Field(g, u.samples() - eps * v.samples()), nl).J;
        const double fd = (Jp - Jm) / (2.0 * eps);
        const double an = g->inner(gradient(u, nl).samples(), v.samples());
        worst_fd = std::max(worst_fd, std::abs(fd - an) / std::max(std::abs(an), 1e-12));
    }
    out.push_back(check_le("gradient vs central differences", worst_fd, 1e-5));

    {
        const Field u = random_initializer(g, cfg.solver.rho, rng);
        out.push_back(check_le("R under amplitude scaling", relative(quotient_R(u.scaled(2.5), 4.0), quotient_R(u, 4.0)), 1e-12));
    }

    if (prm.K > 2.0 * prm.s) {
        const double hc = hardy_constant(prm.K, prm.s);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const Field u = random_initializer(g, 1.0, rng);
            worst = std::max(worst, hardy_weight_integral(u) / (hc * apply_Ds_squared(u)));
        }
        out.push_back(check_le("discrete Hardy ratio", worst, 1.02));
    }

    SolverConfig s = cfg.solver;
    std::vector<ProgressRecord> log;
    s.progress = [&log](const ProgressRecord& r) { log.push_back(r); };
    const MinimizeResult r = minimize(g, nl, s);
    double rise = 0.0, excess = 0.0;
    for (std::size_t i = 0; i < log.size(); ++i) {
        if (i > 0 && log[i].iter != 0) rise = std::max(rise, log[i].J - log[i - 1].J);
        excess = std::max(excess, log[i].mass - s.rho * (1.0 + 1e-10));
    }
    out.push_back(check_le("energy increase along the descent", rise, 0.0));
    out.push_back(check_le("mass excess over rho", excess, 0.0));
    // on the minimizer: random starts do not vanish on the axis, where the
    // Hardy sum is grid dependent
    if (r.breakdown.mass > 0.0 && spectral_tail_fraction(r.field) < 1e-6) {
        const double R = quotient_R(r.field, 4.0);
        out.push_back(check_le("R under dilation", relative(quotient_R(dilate(r.field, 1.25), 4.0), R), 1e-6));
    }
    if (prm.K >= 2 && s.symmetric) out.push_back(check_le("symmetry residual", symmetry_residual(r.field), 1e-8));
    if (r.converged && !r.unbounded && r.breakdown.J < 0.0 && r.identity) {
        out.push_back(check_le("mass on the sphere", relative(r.breakdown.mass, s.rho), 1e-8));
        out.push_back(CheckRecord{"lambda positive", r.identity->lambda_estimate, 0.0, r.identity->lambda_estimate > 0.0});
        out.push_back(check_le("Pohozaev residual", r.identity->pohozaev_residual, 1e-4));
    }
    if (prm.N == 3 && prm.K == 2 && prm.s == 1.0 && prm.mu == 1.0 && r.breakdown.mass > 0.0) {
        const VectorField U = lift(r.field);
        out.push_back(check_le("E(lift u) - J(u)", std::abs(vector_energy(U, nl) - r.breakdown.J) / (1.0 + r.breakdown.seminorm_sq), 1e-10));
        out.push_back(check_le("lifted mass", relative(mass(U), r.breakdown.mass), 1e-12));
    }
    return out;
}

RunManifest run(const RunConfig& cfg, std::ostream& log) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest m;
    m.config = serialize(cfg);
    m.version = NVARLAB_VERSION;
    Writer w(cfg.output_dir);
    w.text("config.txt", m.config);
    RunConfig c = cfg;
    c.solver.seed = cfg.seed;
    try {
        const auto g = Grid::create(c.problem);
        if (c.command == "gn") {
            run_gn(c, g, w, log);
        } else if (c.command == "verify") {
            run_verify(c, w, log, m);
        } else {
            const Nonlinearity nl = build_nonlinearity(c.nonlinearity, c.problem.N, c.problem.s);
            for (const auto& warn : nl.warnings()) log << "warning: " << warn << '\n';
            if (c.command == "minimize") (void)run_minimize(c, g, nl, w, log);
            else if (c.command == "identities") run_identities(c, g, nl, w, log);
            else if (c.command == "threshold") run_threshold(c, g, nl, w, log);
            else run_curlcurl(c, g, nl, w, log);
        }
    } catch (const ValidationError& e) {
        throw ValidationError(context(c) + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(context(c) + e.what());
    }
    m.artifacts = w.entries();
    m.wall_clock = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream out(w.path("manifest.json"));
    out << to_json(m).dump(2) << '\n';
    return m;
}

} // namespace nvl

#pragma once

#include "nvarlab/curl_curl.hpp"
#include "nvarlab/energy.hpp"
#include "nvarlab/gn.hpp"
#include "nvarlab/optimizer.hpp"
#include "nvarlab/thresholds.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace nvl {

// NVF1: "NVF1", u32 N, u32 K, f64 s, f64 mu, f64 L, u32 n, then n^N f64
// samples, all little-endian, row-major with axis order (y..., z...).
void write_field(const std::string& path, const Field& u);
// The grid is rebuilt from the header (hardy_eps is not stored).
Field read_field(const std::string& path);

// NVVF: "NVVF", u32 component count, then one NVF1 payload per component.
// Provenance is not stored.
void write_vector_field(const std::string& path, const VectorField& U);
VectorField read_vector_field(const std::string& path);

nlohmann::json to_json(const ProblemParams& p);
nlohmann::json to_json(const EnergyBreakdown& e);
nlohmann::json to_json(const IdentityReport& r);
// Scalars only; the minimizer goes to NVF1.
nlohmann::json to_json(const GNResult& r);
nlohmann::json to_json(const MinimizeResult& r);
nlohmann::json to_json(const MSample& m);
nlohmann::json to_json(const ClosedFormBounds& b);
nlohmann::json to_json(const ThresholdResult& r);
nlohmann::json to_json(const RhoFResult& r);

// rho, m, status sorted by rho.
void write_m_csv(const std::string& path, std::vector<MSample> samples);

std::string sha256_file(const std::string& path);

struct NonlinearitySpec {
    Family family = Family::pure_power;
    double p = 3.0;
    double coeff = 1.0;
    std::string table; // two-column CSV for the custom family

    bool operator==(const NonlinearitySpec&) const = default;
};

Nonlinearity build_nonlinearity(const NonlinearitySpec& spec, int N, double s);

struct RunConfig {
    std::string command = "verify";
    ProblemParams problem;
    NonlinearitySpec nonlinearity;
    SolverConfig solver;
    // GN exponent for the gn command; unset means 2 + 4s/N
    std::optional<double> gn_p;
    // threshold command
    double rho_lo = 1.0;
    double rho_hi = 20.0;
    int bisect_iters = 6;
    std::vector<double> sigma{0.01, 0.1, 1.0, 10.0};
    std::string output_dir = "out";
    std::uint64_t seed = 0;

    void validate() const;
};

// Field-by-field comparison (the progress callback is ignored).
bool operator==(const RunConfig& a, const RunConfig& b);

const std::vector<std::string>& known_commands();

// "key = value" entries separated by newlines or commas; '#' starts a
// comment; list values are whitespace separated.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// One "key = value" line per entry; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& c);

struct ArtifactEntry {
    std::string file; // relative to the output directory
    std::string sha256;
};

struct RunManifest {
    std::string config;
    std::vector<ArtifactEntry> artifacts;
    double wall_clock = 0.0;
    std::string version;
    // verify only: number of failed checks
    int failures = 0;
};

nlohmann::json to_json(const RunManifest& m);
// Every listed file exists under dir and matches its hash.
bool check_manifest(const std::string& dir, const RunManifest& m);

} // namespace nvl

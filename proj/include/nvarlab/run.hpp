#pragma once

#include "nvarlab/io.hpp"

#include <ostream>

namespace nvl {

struct CheckRecord {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

// The invariant suite behind the verify command, on the config's grid and
// nonlinearity.
std::vector<CheckRecord> verify_suite(const RunConfig& cfg);

// Creates the output directory, dispatches on cfg.command, writes the
// artifacts and manifest.json. Errors from the modules are rethrown with the
// command and grid in the message (same exception type). Human-readable
// progress goes to log.
RunManifest run(const RunConfig& cfg, std::ostream& log);

} // namespace nvl

#include "nvarlab/errors.hpp"
#include "nvarlab/run.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"variational laboratory for fractional NLS with a cylindrical Hardy term"};
    std::string command;
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "gn, minimize, threshold, identities, curlcurl or verify")
        ->required()
        ->check(CLI::IsMember(nvl::known_commands()));
    app.add_option("--config", config, "key = value configuration file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out, "output directory (overrides the config)");
    app.add_option("--seed", seed, "random seed (overrides the config)");
    CLI11_PARSE(app, argc, argv);

    try {
        nvl::RunConfig cfg = nvl::load_config(config);
        cfg.command = command;
        if (out) cfg.output_dir = *out;
        if (seed) cfg.seed = cfg.solver.seed = *seed;
        const nvl::RunManifest m = nvl::run(cfg, std::cout);
        std::cout << "wrote " << m.artifacts.size() + 1 << " files to " << cfg.output_dir << '\n';
        if (m.failures > 0) {
            std::cerr << m.failures << " invariant check(s) failed\n";
            return 3;
        }
        return 0;
    } catch (const nvl::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    } catch (const nvl::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    }
}

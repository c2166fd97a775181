#include "heatbesov/experiment.hpp"
#include "heatbesov/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

int main(int argc, char** argv) {
    CLI::App app{"heat-kernel Besov norm experiments"};
    app.set_version_flag("--version", std::string(heatbesov::kVersion));
    std::string config_path, command, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> level;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    app.add_option("--command", command,
                   "space-report, kernel-check, norm, equiv, hardy, lemma-sum, degeneracy, spectral or strichartz")
        ->required();
    app.add_option("--out", out_dir, "output directory (default: outputs.dir of the config)");
    app.add_option("--seed", seed, "override the config seed");
    app.add_option("--level", level, "override space.level (and drop the levels sweep)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    heatbesov::ExperimentConfig cfg;
    heatbesov::Command cmd;
    try {
        cmd = heatbesov::parse_command(command);
        cfg = heatbesov::load_config(config_path);
        if (seed) cfg.seed = *seed;
        if (level) {
            cfg.level = *level;
            cfg.levels.clear();
            // re-validate the level through the parser
            cfg = heatbesov::parse_config(heatbesov::to_json(cfg));
        }
    } catch (const heatbesov::config_error& e) {
        std::cerr << "heatbesov: config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "heatbesov: " << e.what() << "\n";
        return 1;
    }

    const heatbesov::RunResult r = heatbesov::run(cfg, cmd, out_dir);
    for (const auto& f : r.files) std::cout << f.string() << "\n";
    if (r.status == 1) std::cerr << "heatbesov: " << r.message << "\n";
    if (r.status == 2) std::cerr << "heatbesov: threshold violated: " << r.message << "\n";
    return r.status;
}

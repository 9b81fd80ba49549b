#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "curvlab/config.hpp"
#include "curvlab/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"directional curvature and second-order optimality reports"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    CLI::App* run = app.add_subcommand("run", "execute a config and write report.json");
    run->add_option("config", config_path, "JSON run configuration")->required();
    run->add_option("--set", overrides, "override a config key, dotted path (a.b.c=value)");

    bool as_json = false;
    CLI::App* list = app.add_subcommand("list-examples", "show the bundled problems");
    list->add_flag("--json", as_json, "machine-readable listing");

    CLI::App* version = app.add_subcommand("version", "print the version");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    if (version->parsed()) {
        std::printf("curvlab %s\n", curvlab::version_string());
        return 0;
    }

    if (list->parsed()) {
        if (as_json) {
            curvlab::ordered_json rows = curvlab::ordered_json::array();
            for (const auto& [name, description] : curvlab::builtin_listing())
                rows.push_back({{"name", name}, {"description", description}});
            std::printf("%s\n", rows.dump(2).c_str());
        } else {
            for (const auto& [name, description] : curvlab::builtin_listing())
                std::printf("%-24s %s\n", name.c_str(), description.c_str());
        }
        return 0;
    }

    try {
        const curvlab::RunConfig cfg = curvlab::load_config(config_path, overrides);
        const curvlab::RunResult res = curvlab::run_config(cfg);
        curvlab::write_outputs(res, cfg.output_dir);
        std::printf("verdict: %s\n", res.report.at("verdict").get<std::string>().c_str());
        return res.exit_code;
    } catch (const curvlab::config_error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const curvlab::error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

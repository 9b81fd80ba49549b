#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "curvlab/builtin.hpp"
#include "curvlab/soc.hpp"

namespace curvlab {

using ordered_json = nlohmann::ordered_json;

const char* version_string();

// Validated run request. `resolved` is the canonical echo: every default the
// run will use is written out explicitly, so feeding the echo back through
// parse_config reproduces the identical run.
struct RunConfig {
    ordered_json resolved;

    std::string analysis = "full";
    std::uint64_t seed = 0;
    std::string output_dir = ".";
    int grid_cells = 0; // 0: example default

    bool builtin = false;
    std::string builtin_name;
    ordered_json inline_problem;

    int directions = 0;                 // 0: pipeline default
    std::vector<double> growth_radii;   // empty: problem default
    int samples_per_radius = 0;         // 0: pipeline default
    double curvature_t0 = 0.0;          // 0: pipeline default
    int curvature_k_max = 0;            // 0: pipeline default
    double surface_s_max = 0.0;         // 0: dimension default
    int surface_levels = 0;             // 0: dimension default
};

// Strict schema: unknown keys anywhere are a config_error.
RunConfig parse_config(const ordered_json& doc);

// Dotted-path override "a.b.c=value"; the value is parsed as JSON, falling
// back to a plain string. Intermediate objects are created as needed.
void apply_override(ordered_json& doc, const std::string& assignment);

// Read, apply overrides, validate.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

struct RunResult {
    ordered_json report;
    std::string samples_csv;
    int exit_code = 0; // 0 consistent/holds, 2 inconsistent/fails, 3 inconclusive
};

// Executes the requested analysis. Deterministic for a fixed resolved config:
// the report carries no timestamps and all sampling is seeded.
RunResult run_config(const RunConfig& cfg);

// report.json, samples.csv, and a meta.json carrying the timestamp, under dir
void write_outputs(const RunResult& res, const std::string& dir);

// Non-finite numbers are encoded as the strings "+infinity", "-infinity",
// "nan"; JSON has no literals for them.
ordered_json json_number(double v);

ordered_json soc_report_json(const SOCReport& rep);

} // namespace curvlab

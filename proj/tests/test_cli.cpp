#include <doctest.h>

#include <curvlab/builtin.hpp>
#include <curvlab/config.hpp>
#include <curvlab/errors.hpp>
#include <curvlab/expr.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace curvlab;

namespace {

double ev1(const std::string& src, std::initializer_list<double> xs) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double v : xs)
        x[i++] = v;
    return parse_expr(src).eval(x);
}

ordered_json doc(const std::string& text) { return ordered_json::parse(text); }

// bundled CLI binary: the ctest environment points at it; a checkout-local
// build is the fallback for manual runs from the source root
std::string cli_binary() {
    if (const char* env = std::getenv("CURVLAB_CLI_BIN"))
        return env;
    if (std::filesystem::exists("build/curvlab"))
        return "build/curvlab";
    return "";
}

struct CliResult {
    int exit_code = -1;
    std::string out;
};

CliResult run_cli(const std::string& args) {
    CliResult r;
    const std::string cmd = cli_binary() + " " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[512];
    while (fgets(buf, sizeof(buf), p))
        r.out += buf;
    const int status = pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::filesystem::path fresh_dir(const std::string& leaf) {
    const auto dir = std::filesystem::temp_directory_path() / leaf;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

ordered_json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return ordered_json::parse(in);
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("expression grammar evaluates with the usual precedence") {
    CHECK(ev1("1+2*3", {}) == doctest::Approx(7.0));
    CHECK(ev1("(1+2)*3", {}) == doctest::Approx(9.0));
    CHECK(ev1("2^3^2", {}) == doctest::Approx(512.0)); // right-associative
    CHECK(ev1("-2^2", {}) == doctest::Approx(-4.0));
    CHECK(ev1("2*-3", {}) == doctest::Approx(-6.0));
    CHECK(ev1("10/4/5", {}) == doctest::Approx(0.5));
    CHECK(ev1("abs(-3)+sqrt(16)", {}) == doctest::Approx(7.0));
    CHECK(ev1("sin(0)+cos(0)+exp(0)", {}) == doctest::Approx(2.0));
    CHECK(ev1("x2-10*x1^2", {0.1, 3.0}) == doctest::Approx(2.9));
    CHECK(ev1("xi1-0.5", {0.75}) == doctest::Approx(0.25));
    CHECK(ev1("xi1^2+xi2^2-0.25", {0.5, 0.5}) == doctest::Approx(0.25));
    CHECK(ev1(" 1.5e2 - 50 ", {}) == doctest::Approx(100.0));

    CHECK(parse_expr("x3+x1").max_var() == 3);
    CHECK(parse_expr("4.0").max_var() == 0);
}

TEST_CASE("expression errors carry the offending position") {
    CHECK_THROWS_WITH_AS(parse_expr("1+"), doctest::Contains("position"), config_error);
    CHECK_THROWS_AS(parse_expr("(1+2"), config_error);
    CHECK_THROWS_AS(parse_expr("foo(1)"), config_error);
    CHECK_THROWS_AS(parse_expr("x0+1"), config_error);
    CHECK_THROWS_AS(parse_expr("x+1"), config_error);
    CHECK_THROWS_AS(parse_expr("1 2"), config_error);
    CHECK_THROWS_AS(parse_expr("sin 3"), config_error);
    CHECK_THROWS_AS(parse_expr(""), config_error);

    const Expr e = parse_expr("x2");
    Eigen::VectorXd one(1);
    one << 1.0;
    CHECK_THROWS_AS((void)e.eval(one), structural_error);
}

TEST_CASE("config schema is strict about keys and shapes") {
    CHECK_THROWS_AS((void)parse_config(doc("[]")), config_error);
    CHECK_THROWS_AS((void)parse_config(doc("{}")), config_error);
    CHECK_THROWS_WITH_AS((void)parse_config(doc(R"({"problem":{"builtin":"box_qp"},"bogus":1})")),
                         doctest::Contains("bogus"), config_error);
    CHECK_THROWS_AS((void)parse_config(doc(R"({"problem":{}})")), config_error);
    CHECK_THROWS_AS((void)parse_config(doc(R"({"problem":{"builtin":"nope"}})")), config_error);
    CHECK_THROWS_AS(
        (void)parse_config(doc(R"({"problem":{"builtin":"box_qp","inline":{}}})")),
        config_error);
    CHECK_THROWS_AS(
        (void)parse_config(doc(R"({"problem":{"builtin":"box_qp"},"analysis":"everything"})")),
        config_error);
    CHECK_THROWS_AS(
        (void)parse_config(doc(R"({"problem":{"builtin":"box_qp"},"seed":-4})")), config_error);
    CHECK_THROWS_AS(
        (void)parse_config(doc(R"({"problem":{"builtin":"box_qp"},"grid":{"cells":0}})")),
        config_error);
    CHECK_THROWS_AS((void)parse_config(doc(
                        R"({"problem":{"builtin":"box_qp"},"growth":{"radii":[0.1,0.2]}})")),
                    config_error);
    CHECK_THROWS_AS((void)parse_config(doc(
                        R"({"problem":{"builtin":"box_qp"},"growth":{"radii":[0.1,-0.2]}})")),
                    config_error);

    const RunConfig cfg = parse_config(doc(
        R"({"problem":{"builtin":"bangbang_1d"},"grid":{"cells":128},"seed":7,"analysis":"ssc"})"));
    CHECK(cfg.builtin);
    CHECK(cfg.builtin_name == "bangbang_1d");
    CHECK(cfg.grid_cells == 128);
    CHECK(cfg.seed == 7);
    CHECK(cfg.analysis == "ssc");

    // seed defaults in, explicitly
    CHECK(parse_config(doc(R"({"problem":{"builtin":"box_qp"}})")).seed == 20260822);
}

TEST_CASE("inline problems validate expressions against the set dimension") {
    CHECK_NOTHROW((void)parse_config(doc(R"({"problem":{"inline":{
        "set":{"kind":"box","lower":[-1,-1],"upper":[1,1]},
        "objective":"x1^2+x2^2","point":[0,0]}}})")));
    CHECK_THROWS_WITH_AS((void)parse_config(doc(R"({"problem":{"inline":{
        "set":{"kind":"box","lower":[-1,-1],"upper":[1,1]},
        "objective":"x3","point":[0,0]}}})")),
                         doctest::Contains("x3"), config_error);
    CHECK_THROWS_AS((void)parse_config(doc(R"({"problem":{"inline":{
        "set":{"kind":"box","lower":[-1,-1],"upper":[1,1]},
        "objective":"x1","point":[0]}}})")),
                    config_error);
    CHECK_THROWS_AS((void)parse_config(doc(R"({"problem":{"inline":{
        "set":{"kind":"box","lower":[-1,-1],"upper":[-2,1]},
        "objective":"x1","point":[0,0]}}})")),
                    config_error);
    CHECK_THROWS_AS((void)parse_config(doc(R"({"problem":{"inline":{
        "set":{"kind":"bangbang","phi":"xi2","domain":[0,1]}}}})")),
                    config_error);
    CHECK_THROWS_AS((void)parse_config(doc(R"({"problem":{"inline":{
        "set":{"kind":"bangbang","phi":"xi1-0.5"},"objective":"x1"}}})")),
                    config_error);
    // grid.cells belongs to bundled examples only
    CHECK_THROWS_AS((void)parse_config(doc(R"({"grid":{"cells":32},"problem":{"inline":{
        "set":{"kind":"bangbang","phi":"xi1-0.5"}}}})")),
                    config_error);
}

TEST_CASE("overrides follow dotted paths and parse values as JSON") {
    ordered_json d = doc(R"({"problem":{"builtin":"bangbang_1d"}})");
    apply_override(d, "grid.cells=64");
    apply_override(d, "analysis=ssc");
    apply_override(d, "growth.radii=[0.1,0.05]");
    CHECK(d["grid"]["cells"] == 64);
    CHECK(d["analysis"] == "ssc");
    CHECK(d["growth"]["radii"].size() == 2);

    apply_override(d, "output.dir=runs/a b");
    CHECK(d["output"]["dir"] == "runs/a b"); // bare strings stay strings

    CHECK_THROWS_AS(apply_override(d, "no_equals"), config_error);
    CHECK_THROWS_AS(apply_override(d, "=5"), config_error);
    CHECK_THROWS_AS(apply_override(d, "a..b=1"), config_error);
    CHECK_THROWS_AS(apply_override(d, "analysis.deep=1"), config_error);

    const RunConfig cfg = parse_config(d);
    CHECK(cfg.grid_cells == 64);
    CHECK(cfg.analysis == "ssc");
}

TEST_CASE("bundled listing and construction agree") {
    const auto& rows = builtin_listing();
    REQUIRE(rows.size() == 7);
    for (const auto& [name, description] : rows) {
        CHECK_FALSE(description.empty());
        const BuiltinProblem p = make_builtin(name);
        CHECK(p.name == name);
        CHECK(p.description == description);
        CHECK(p.objective.eval);
        CHECK(p.objective.grad);
        CHECK(p.objective.hess_form);
        if (p.surface) {
            CHECK(p.field.values.size() > 0);
            CHECK_FALSE(p.density_levels.empty());
            CHECK(p.objective.kernel);
        }
    }
    CHECK_THROWS_AS((void)make_builtin("nope"), config_error);
    CHECK_THROWS_AS((void)make_builtin("box_qp", 32), config_error);
    CHECK_THROWS_AS((void)make_builtin("bangbang_1d", 4), config_error);
    CHECK(make_builtin("bangbang_1d", 64).field.grid.cells == 64);
    CHECK(make_builtin("control_constrained", 12).point.size() == 12);
}

TEST_CASE("analysis dispatch produces the right blocks and exit codes") {
    auto run = [](const std::string& text) { return run_config(parse_config(doc(text))); };

    const RunResult full = run(R"({"problem":{"builtin":"box_qp"}})");
    CHECK(full.exit_code == 0);
    CHECK(full.report["verdict"] == "no_gap_consistent");
    const std::vector<std::string> order = {"config_echo", "fonc", "ndc",    "curvature",
                                            "snc",         "ssc",  "growth", "verdict",
                                            "diagnostics"};
    size_t k = 0;
    for (const auto& [key, _] : full.report.items()) {
        REQUIRE(k < order.size());
        CHECK(key == order[k++]);
    }
    CHECK(k == order.size());
    CHECK(full.samples_csv.rfind("radius,norm,ratio,sampler_tag\n", 0) == 0);
    CHECK(full.samples_csv.find("projection") != std::string::npos);

    const RunResult fonc = run(R"({"problem":{"builtin":"box_qp"},"analysis":"fonc"})");
    CHECK(fonc.exit_code == 0);
    CHECK(fonc.report["verdict"] == "holds");
    CHECK(fonc.report["fonc"]["holds"] == true);
    CHECK(fonc.report["ssc"].is_null());
    CHECK(fonc.report["growth"].is_null());

    const RunResult curv = run(R"({"problem":{"builtin":"box_qp"},"analysis":"curvature",
                                   "directions":6})");
    CHECK(curv.exit_code == 0);
    CHECK(curv.report["curvature"].size() == 6);
    for (const auto& row : curv.report["curvature"]) {
        CHECK(row["kind"] == "finite");
        CHECK(std::abs(row["value"].get<double>()) < 1e-9);
    }

    const RunResult snc = run(R"({"problem":{"builtin":"box_qp"},"analysis":"snc"})");
    CHECK(snc.exit_code == 0);
    CHECK(snc.report["verdict"] == "holds");

    const RunResult ssc = run(R"({"problem":{"builtin":"box_qp"},"analysis":"ssc"})");
    CHECK(ssc.exit_code == 0);
    CHECK(ssc.report["ssc"]["holds"] == true);

    const RunResult growth = run(R"({"problem":{"builtin":"box_qp"},"analysis":"growth"})");
    CHECK(growth.exit_code == 0);
    CHECK(growth.report["growth"]["fitted_c"].get<double>() > 0.5);

    CHECK_THROWS_AS(run(R"({"problem":{"builtin":"box_qp"},"analysis":"bangbang"})"),
                    config_error);
    CHECK_THROWS_AS(run(R"({"problem":{"builtin":"bangbang_1d"},"analysis":"snc"})"),
                    config_error);
    CHECK_THROWS_AS(run(R"({"problem":{"builtin":"bangbang_1d"},"directions":4})"),
                    config_error);
    CHECK_THROWS_AS(run(R"({"problem":{"builtin":"box_qp"},"surface":{"levels":3}})"),
                    config_error);
}

TEST_CASE("flipped example fails and infinite curvature serializes as a string") {
    const RunResult res =
        run_config(parse_config(doc(R"({"problem":{"builtin":"power_epigraph_flipped"}})")));
    CHECK(res.exit_code == 2);
    CHECK(res.report["verdict"] == "inconsistent");
    bool saw_minus = false;
    for (const auto& row : res.report["curvature"])
        if (row["value"] == "-infinity")
            saw_minus = true;
    CHECK(saw_minus);

    const RunResult up =
        run_config(parse_config(doc(R"({"problem":{"builtin":"power_epigraph"}})")));
    CHECK(up.exit_code == 0);
    bool saw_plus = false;
    for (const auto& row : up.report["curvature"])
        if (row["value"] == "+infinity")
            saw_plus = true;
    CHECK(saw_plus);

    CHECK(json_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(json_number(1.5) == 1.5);
}

TEST_CASE("config echo reproduces the identical report when re-run") {
    const RunConfig cfg = parse_config(
        doc(R"({"problem":{"builtin":"bangbang_1d"},"grid":{"cells":256},"seed":11})"));
    const RunResult first = run_config(cfg);
    CHECK(first.exit_code == 0);

    const RunConfig echoed = parse_config(first.report["config_echo"]);
    const RunResult second = run_config(echoed);
    CHECK(second.report.dump() == first.report.dump());
    CHECK(second.samples_csv == first.samples_csv);

    // explicit resolution: the echo pins seed, cells, radii, and levels
    const ordered_json& e = first.report["config_echo"];
    CHECK(e["seed"] == 11);
    CHECK(e["grid"]["cells"] == 256);
    CHECK(e.contains("surface"));
    CHECK(e["growth"]["radii"].size() == 4);
}

TEST_CASE("reports are identical across worker counts") {
    const RunConfig cfg = parse_config(
        doc(R"({"problem":{"builtin":"bangbang_1d"},"grid":{"cells":512}})"));
    setenv("CURVLAB_THREADS", "1", 1);
    const RunResult one = run_config(cfg);
    setenv("CURVLAB_THREADS", "8", 1);
    const RunResult eight = run_config(cfg);
    unsetenv("CURVLAB_THREADS");
    CHECK(one.report.dump() == eight.report.dump());
    CHECK(one.samples_csv == eight.samples_csv);
}

TEST_CASE("outputs land on disk with the timestamp kept out of the report") {
    const auto dir = fresh_dir("curvlab_test_outputs");
    const RunResult res = run_config(parse_config(
        doc(R"({"problem":{"builtin":"box_qp"},"analysis":"fonc"})")));
    write_outputs(res, dir.string());
    const ordered_json report = read_json(dir / "report.json");
    CHECK(report.dump() == res.report.dump());
    const ordered_json meta = read_json(dir / "meta.json");
    CHECK(meta.contains("written_at"));
    CHECK(report.dump().find("written_at") == std::string::npos);
    std::ifstream csv(dir / "samples.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "radius,norm,ratio,sampler_tag");
}

TEST_CASE("binary drives the bundled configs end to end") {
    if (cli_binary().empty() || !std::filesystem::exists("configs/box_qp.json")) {
        MESSAGE("CLI binary or configs not reachable from here; subprocess cases skipped");
        return;
    }

    CHECK(run_cli("version").out.rfind("curvlab ", 0) == 0);
    CHECK(run_cli("version").exit_code == 0);

    const CliResult table = run_cli("list-examples");
    CHECK(table.exit_code == 0);
    int lines = 0;
    for (char c : table.out)
        lines += c == '\n';
    CHECK(lines == 7);
    CHECK(table.out.find("bangbang_2d_circle") != std::string::npos);

    const CliResult js = run_cli("list-examples --json");
    CHECK(js.exit_code == 0);
    const ordered_json rows = ordered_json::parse(js.out);
    REQUIRE(rows.size() == 7);
    for (size_t i = 0; i < rows.size(); ++i)
        CHECK(rows[i]["name"] == builtin_listing()[i].first);

    const auto dir = fresh_dir("curvlab_test_cli_runs");
    const std::string out = " --set output.dir=" + (dir / "a").string();

    CHECK(run_cli("run configs/power_epigraph_flipped.json" + out).exit_code == 2);

    const CliResult bb =
        run_cli("run configs/bangbang_1d.json --set grid.cells=64" + out);
    CHECK(bb.exit_code == 0);
    CHECK(bb.out.find("no_gap_consistent") != std::string::npos);
    const ordered_json report = read_json(dir / "a" / "report.json");
    CHECK(report["ndc"]["constant"].get<double>() == doctest::Approx(0.125).epsilon(1e-6));

    CHECK(run_cli("run configs/box_qp.json --set bogus=1" + out).exit_code == 1);
    CHECK(run_cli("run no_such_file.json").exit_code == 1);
    CHECK(run_cli("").exit_code == 1);
    CHECK(run_cli("run").exit_code == 1);
}

} // TEST_SUITE

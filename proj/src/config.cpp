#include "curvlab/config.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>

#include "curvlab/bangbang.hpp"
#include "curvlab/cones.hpp"
#include "curvlab/curvature.hpp"
#include "curvlab/errors.hpp"
#include "curvlab/expr.hpp"

namespace curvlab {

const char* version_string() { return "1.0.0"; }

ordered_json json_number(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "+infinity" : "-infinity";
    return v;
}

namespace {

ordered_json json_entries(const Eigen::VectorXd& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(json_number(v[i]));
    return a;
}

[[noreturn]] void bad(const std::string& what) { throw config_error("config: " + what); }

void expect_object(const ordered_json& o, const std::string& where) {
    if (!o.is_object())
        bad(where + " must be an object");
}

void expect_keys(const ordered_json& o, const std::string& where,
                 std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : o.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a)
                ok = true;
        if (!ok)
            bad("unknown key '" + key + "' in " + where);
    }
}

double need_number(const ordered_json& o, const std::string& where) {
    if (!o.is_number())
        bad(where + " must be a number");
    return o.get<double>();
}

int need_int(const ordered_json& o, const std::string& where) {
    if (!o.is_number_integer())
        bad(where + " must be an integer");
    return o.get<int>();
}

std::string need_string(const ordered_json& o, const std::string& where) {
    if (!o.is_string())
        bad(where + " must be a string");
    return o.get<std::string>();
}

Eigen::VectorXd need_vector(const ordered_json& o, const std::string& where) {
    if (!o.is_array() || o.empty())
        bad(where + " must be a non-empty array of numbers");
    Eigen::VectorXd v(static_cast<Eigen::Index>(o.size()));
    Eigen::Index i = 0;
    for (const auto& e : o)
        v[i++] = need_number(e, where + " entry");
    return v;
}

const std::set<std::string>& analysis_names() {
    static const std::set<std::string> names = {"fonc", "curvature", "snc",     "ssc",
                                                "growth", "bangbang", "full"};
    return names;
}

void validate_inline(const ordered_json& inl) {
    expect_object(inl, "problem.inline");
    expect_keys(inl, "problem.inline", {"set", "objective", "point", "densities"});
    if (!inl.contains("set"))
        bad("problem.inline needs a 'set'");
    const ordered_json& set = inl.at("set");
    expect_object(set, "problem.inline.set");
    if (!set.contains("kind"))
        bad("problem.inline.set needs a 'kind'");
    const std::string kind = need_string(set.at("kind"), "set.kind");

    if (kind == "box") {
        expect_keys(set, "problem.inline.set", {"kind", "lower", "upper"});
        if (!set.contains("lower") || !set.contains("upper"))
            bad("box set needs 'lower' and 'upper'");
        const Eigen::VectorXd lo = need_vector(set.at("lower"), "set.lower");
        const Eigen::VectorXd hi = need_vector(set.at("upper"), "set.upper");
        if (lo.size() != hi.size())
            bad("set.lower and set.upper must have the same length");
        if (((hi - lo).array() <= 0).any())
            bad("set.lower must be strictly below set.upper");
        const Eigen::Index n = lo.size();
        if (!inl.contains("point"))
            bad("problem.inline needs a 'point'");
        if (need_vector(inl.at("point"), "point").size() != n)
            bad("point length does not match the set dimension");
        if (!inl.contains("objective"))
            bad("problem.inline needs an 'objective' expression");
        const Expr e = parse_expr(need_string(inl.at("objective"), "objective"));
        if (e.max_var() > n)
            bad("objective uses x" + std::to_string(e.max_var()) + " but the set has " +
                std::to_string(n) + " coordinates");
        if (inl.contains("densities"))
            bad("densities apply only to switching-field problems");
    } else if (kind == "power_epigraph") {
        expect_keys(set, "problem.inline.set", {"kind", "alpha", "side"});
        const double alpha = set.contains("alpha") ? need_number(set.at("alpha"), "set.alpha")
                                                   : 1.5;
        if (!(alpha > 1.0 && alpha < 2.0))
            bad("set.alpha must lie in (1, 2)");
        if (set.contains("side")) {
            const std::string side = need_string(set.at("side"), "set.side");
            if (side != "above" && side != "below")
                bad("set.side must be 'above' or 'below'");
        }
        if (!inl.contains("point"))
            bad("problem.inline needs a 'point'");
        if (need_vector(inl.at("point"), "point").size() != 2)
            bad("power epigraph points are two-dimensional");
        if (!inl.contains("objective"))
            bad("problem.inline needs an 'objective' expression");
        const Expr e = parse_expr(need_string(inl.at("objective"), "objective"));
        if (e.max_var() > 2)
            bad("objective uses x" + std::to_string(e.max_var()) + " on a plane set");
        if (inl.contains("densities"))
            bad("densities apply only to switching-field problems");
    } else if (kind == "bangbang") {
        expect_keys(set, "problem.inline.set", {"kind", "phi", "domain", "cells"});
        if (!set.contains("phi"))
            bad("bangbang set needs a 'phi' expression");
        const Expr e = parse_expr(need_string(set.at("phi"), "set.phi"));
        const Eigen::VectorXd dom = set.contains("domain")
                                        ? need_vector(set.at("domain"), "set.domain")
                                        : (Eigen::VectorXd(2) << 0.0, 1.0).finished();
        if (dom.size() != 2 && dom.size() != 4)
            bad("set.domain must be [a, b] or [a1, b1, a2, b2]");
        const int dim = dom.size() == 2 ? 1 : 2;
        if (dim == 1 && dom[1] <= dom[0])
            bad("set.domain must be increasing");
        if (dim == 2 && (dom[1] <= dom[0] || dom[3] <= dom[2]))
            bad("set.domain must be increasing per axis");
        if (e.max_var() > dim)
            bad("set.phi uses xi" + std::to_string(e.max_var()) + " on a " +
                std::to_string(dim) + "d domain");
        if (set.contains("cells")) {
            const int cells = need_int(set.at("cells"), "set.cells");
            if (cells < 8)
                bad("set.cells must be at least 8");
        }
        if (inl.contains("objective"))
            bad("switching-field problems use the built-in linear objective");
        if (inl.contains("point"))
            bad("the base point of a switching-field problem is determined by the field");
        if (inl.contains("densities")) {
            const Eigen::VectorXd d = need_vector(inl.at("densities"), "densities");
            if ((d.array() == 0).any())
                bad("densities must be nonzero");
        }
    } else {
        bad("unknown set.kind '" + kind + "'");
    }
}

} // namespace

RunConfig parse_config(const ordered_json& doc) {
    expect_object(doc, "the document");
    expect_keys(doc, "the document",
                {"problem", "analysis", "seed", "output", "grid", "directions", "curvature",
                 "growth", "surface"});
    if (!doc.contains("problem"))
        bad("a 'problem' is required");

    RunConfig cfg;
    const ordered_json& prob = doc.at("problem");
    expect_object(prob, "problem");
    expect_keys(prob, "problem", {"builtin", "inline"});
    if (prob.contains("builtin") == prob.contains("inline"))
        bad("problem needs exactly one of 'builtin' or 'inline'");
    if (prob.contains("builtin")) {
        cfg.builtin = true;
        cfg.builtin_name = need_string(prob.at("builtin"), "problem.builtin");
        bool known = false;
        for (const auto& [n, _] : builtin_listing())
            if (n == cfg.builtin_name)
                known = true;
        if (!known)
            bad("unknown example '" + cfg.builtin_name + "'");
    } else {
        validate_inline(prob.at("inline"));
        cfg.inline_problem = prob.at("inline");
    }

    if (doc.contains("analysis")) {
        cfg.analysis = need_string(doc.at("analysis"), "analysis");
        if (!analysis_names().count(cfg.analysis))
            bad("analysis must be one of fonc, curvature, snc, ssc, growth, bangbang, full");
    }

    cfg.seed = 20260822;
    if (doc.contains("seed")) {
        const ordered_json& s = doc.at("seed");
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
            bad("seed must be a nonnegative integer");
        cfg.seed = s.get<std::uint64_t>();
    }

    if (doc.contains("output")) {
        expect_object(doc.at("output"), "output");
        expect_keys(doc.at("output"), "output", {"dir"});
        if (doc.at("output").contains("dir")) {
            cfg.output_dir = need_string(doc.at("output").at("dir"), "output.dir");
            if (cfg.output_dir.empty())
                bad("output.dir must not be empty");
        }
    }

    if (doc.contains("grid")) {
        expect_object(doc.at("grid"), "grid");
        expect_keys(doc.at("grid"), "grid", {"cells"});
        if (!doc.at("grid").contains("cells"))
            bad("grid needs 'cells'");
        cfg.grid_cells = need_int(doc.at("grid").at("cells"), "grid.cells");
        if (cfg.grid_cells < 1)
            bad("grid.cells must be positive");
        if (!cfg.builtin)
            bad("grid.cells applies to bundled examples; inline sets carry their own cells");
    }

    if (doc.contains("directions")) {
        cfg.directions = need_int(doc.at("directions"), "directions");
        if (cfg.directions < 1)
            bad("directions must be positive");
    }

    if (doc.contains("curvature")) {
        const ordered_json& c = doc.at("curvature");
        expect_object(c, "curvature");
        expect_keys(c, "curvature", {"t0", "k_max"});
        if (c.contains("t0")) {
            cfg.curvature_t0 = need_number(c.at("t0"), "curvature.t0");
            if (!(cfg.curvature_t0 > 0))
                bad("curvature.t0 must be positive");
        }
        if (c.contains("k_max")) {
            cfg.curvature_k_max = need_int(c.at("k_max"), "curvature.k_max");
            if (cfg.curvature_k_max < 2)
                bad("curvature.k_max must be at least 2");
        }
    }

    if (doc.contains("growth")) {
        const ordered_json& g = doc.at("growth");
        expect_object(g, "growth");
        expect_keys(g, "growth", {"radii", "samples_per_radius"});
        if (g.contains("radii")) {
            const Eigen::VectorXd r = need_vector(g.at("radii"), "growth.radii");
            for (Eigen::Index i = 0; i < r.size(); ++i) {
                if (!(r[i] > 0))
                    bad("growth.radii must be positive");
                if (i > 0 && r[i] >= r[i - 1])
                    bad("growth.radii must be strictly decreasing");
            }
            cfg.growth_radii.assign(r.data(), r.data() + r.size());
        }
        if (g.contains("samples_per_radius")) {
            cfg.samples_per_radius = need_int(g.at("samples_per_radius"), "growth.samples_per_radius");
            if (cfg.samples_per_radius < 1)
                bad("growth.samples_per_radius must be positive");
        }
    }

    if (doc.contains("surface")) {
        const ordered_json& s = doc.at("surface");
        expect_object(s, "surface");
        expect_keys(s, "surface", {"s_max", "levels"});
        if (s.contains("s_max")) {
            cfg.surface_s_max = need_number(s.at("s_max"), "surface.s_max");
            if (!(cfg.surface_s_max > 0))
                bad("surface.s_max must be positive");
        }
        if (s.contains("levels")) {
            cfg.surface_levels = need_int(s.at("levels"), "surface.levels");
            if (cfg.surface_levels < 1)
                bad("surface.levels must be at least 1");
        }
    }

    cfg.resolved = doc;
    return cfg;
}

void apply_override(ordered_json& doc, const std::string& assignment) {
    const size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        bad("--set expects key=value, got '" + assignment + "'");
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);

    std::vector<std::string> parts;
    size_t start = 0;
    for (;;) {
        const size_t dot = path.find('.', start);
        const std::string part = path.substr(start, dot == std::string::npos ? dot : dot - start);
        if (part.empty())
            bad("--set path '" + path + "' has an empty component");
        parts.push_back(part);
        if (dot == std::string::npos)
            break;
        start = dot + 1;
    }

    ordered_json value;
    try {
        value = ordered_json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
        value = raw; // bare strings need no quotes
    }

    ordered_json* node = &doc;
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->is_object())
            bad("--set path '" + path + "' descends into a non-object");
        if (!node->contains(parts[i]))
            (*node)[parts[i]] = ordered_json::object();
        node = &(*node)[parts[i]];
    }
    if (!node->is_object())
        bad("--set path '" + path + "' descends into a non-object");
    (*node)[parts.back()] = value;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in)
        throw config_error("config: cannot open '" + path + "'");
    ordered_json doc;
    try {
        doc = ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config: " + path + " is not valid JSON: " + e.what());
    }
    for (const std::string& kv : overrides)
        apply_override(doc, kv);
    return parse_config(doc);
}

// ===== assembly ============================================================

namespace {

// expression-backed objective with central-difference derivatives
Objective expression_objective(const Expr& e) {
    Objective J;
    J.eval = [e](const Vector& x) { return e.eval(x.entries()); };
    J.grad = [e](const Vector& x) {
        Eigen::VectorXd g(x.size());
        Eigen::VectorXd p = x.entries();
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double h = 1e-6 * (1.0 + std::abs(p[i]));
            const double save = p[i];
            p[i] = save + h;
            const double fp = e.eval(p);
            p[i] = save - h;
            const double fm = e.eval(p);
            p[i] = save;
            g[i] = (fp - fm) / (2.0 * h);
        }
        return x.like(std::move(g));
    };
    J.hess_form = [e](const Vector& x, const Vector& a, const Vector& b) {
        const double sa = 1e-4 / (1.0 + a.entries().norm());
        const double sb = 1e-4 / (1.0 + b.entries().norm());
        const Eigen::VectorXd& p = x.entries();
        const Eigen::VectorXd& u = a.entries();
        const Eigen::VectorXd& v = b.entries();
        const double fpp = e.eval(p + sa * u + sb * v);
        const double fpm = e.eval(p + sa * u - sb * v);
        const double fmp = e.eval(p - sa * u + sb * v);
        const double fmm = e.eval(p - sa * u - sb * v);
        return (fpp - fpm - fmp + fmm) / (4.0 * sa * sb);
    };
    return J;
}

BuiltinProblem assemble_inline(const ordered_json& inl) {
    BuiltinProblem p;
    p.name = "inline";
    p.description = "inline problem";
    const ordered_json& set = inl.at("set");
    const std::string kind = set.at("kind").get<std::string>();

    if (kind == "box") {
        const Eigen::VectorXd lo = need_vector(set.at("lower"), "set.lower");
        const Eigen::VectorXd hi = need_vector(set.at("upper"), "set.upper");
        p.set = make_box(Vector::euclidean(lo), Vector::euclidean(hi));
        p.point = Vector::euclidean(need_vector(inl.at("point"), "point"));
        p.objective = expression_objective(parse_expr(inl.at("objective").get<std::string>()));
    } else if (kind == "power_epigraph") {
        const double alpha = set.contains("alpha") ? set.at("alpha").get<double>() : 1.5;
        const bool below = set.contains("side") && set.at("side").get<std::string>() == "below";
        p.set = make_power_epigraph(alpha, below ? PowerEpigraph::Side::below
                                                 : PowerEpigraph::Side::above);
        p.point = Vector::euclidean(need_vector(inl.at("point"), "point"));
        p.objective = expression_objective(parse_expr(inl.at("objective").get<std::string>()));
    } else { // bangbang
        const Expr phi = parse_expr(set.at("phi").get<std::string>());
        const Eigen::VectorXd dom = set.contains("domain")
                                        ? need_vector(set.at("domain"), "set.domain")
                                        : (Eigen::VectorXd(2) << 0.0, 1.0).finished();
        const int cells = set.contains("cells") ? set.at("cells").get<int>() : 256;
        const Grid grid = dom.size() == 2
                              ? Grid::interval(dom[0], dom[1], cells)
                              : Grid::box(dom[0], dom[1], dom[2], dom[3], cells);
        p.field = make_adjoint(grid, [phi](const Eigen::VectorXd& xi) { return phi.eval(xi); });
        p.set = make_bangbang(grid);
        p.objective = linear_surface_objective(p.field);
        Eigen::VectorXd xb = -p.field.values.array().sign();
        p.point = grid.vector(xb, NormTag::weighted_l1);
        p.surface = true;
        if (inl.contains("densities")) {
            const Eigen::VectorXd d = need_vector(inl.at("densities"), "densities");
            p.density_levels.assign(d.data(), d.data() + d.size());
        } else {
            p.density_levels = {1.0};
        }
    }
    return p;
}

BuiltinProblem assemble(const RunConfig& cfg) {
    BuiltinProblem p = cfg.builtin ? make_builtin(cfg.builtin_name, cfg.grid_cells)
                                   : assemble_inline(cfg.inline_problem);

    if (p.surface) {
        if (cfg.directions || cfg.curvature_t0 > 0 || cfg.curvature_k_max)
            bad("direction scans do not apply to switching-field problems");
        if (cfg.analysis == "snc")
            bad("switching-field problems report the strict screen; use ssc, growth, or full");
    } else {
        if (cfg.surface_s_max > 0 || cfg.surface_levels)
            bad("surface settings apply only to switching-field problems");
        if (cfg.analysis == "bangbang")
            bad("analysis 'bangbang' needs a switching-field problem");
    }

    if (cfg.directions)
        p.soc.direction_count = cfg.directions;
    if (!cfg.growth_radii.empty())
        p.soc.growth.eps_schedule = cfg.growth_radii;
    if (cfg.samples_per_radius)
        p.soc.growth.samples_per_radius = cfg.samples_per_radius;
    p.soc.growth.seed = cfg.seed;
    if (cfg.curvature_t0 > 0)
        p.soc.curvature.brute.t0 = cfg.curvature_t0;
    if (cfg.curvature_k_max)
        p.soc.curvature.brute.k_max = cfg.curvature_k_max;
    p.soc.curvature.brute.seed = static_cast<unsigned>(cfg.seed);

    if (!cfg.growth_radii.empty())
        p.surface_cfg.growth.eps_schedule = cfg.growth_radii;
    if (cfg.samples_per_radius)
        p.surface_cfg.growth.samples_per_radius = cfg.samples_per_radius;
    p.surface_cfg.growth.seed = cfg.seed;
    if (cfg.surface_s_max > 0)
        p.surface_cfg.s_max = cfg.surface_s_max;
    if (cfg.surface_levels)
        p.surface_cfg.levels = cfg.surface_levels;

    return p;
}

int grid_cells_of(const BuiltinProblem& p) {
    if (p.surface)
        return p.field.grid.cells;
    if (const auto* b = p.set.as<BoxSet>())
        if (b->lower.tag() != NormTag::euclidean && b->lower.weights())
            return static_cast<int>(b->lower.size());
    return 0;
}

ordered_json build_echo(const RunConfig& cfg, const BuiltinProblem& p) {
    ordered_json echo;
    ordered_json prob;
    if (cfg.builtin)
        prob["builtin"] = cfg.builtin_name;
    else
        prob["inline"] = cfg.inline_problem;
    echo["problem"] = prob;
    echo["analysis"] = cfg.analysis;
    echo["seed"] = cfg.seed;
    echo["output"] = ordered_json{{"dir", cfg.output_dir}};

    if (cfg.builtin)
        if (const int cells = grid_cells_of(p))
            echo["grid"] = ordered_json{{"cells", cells}};

    if (!p.surface) {
        echo["directions"] = p.soc.direction_count;
        echo["curvature"] = ordered_json{{"t0", p.soc.curvature.brute.t0},
                                         {"k_max", p.soc.curvature.brute.k_max}};
        echo["growth"] = ordered_json{{"radii", p.soc.growth.eps_schedule},
                                      {"samples_per_radius", p.soc.growth.samples_per_radius}};
    } else {
        echo["growth"] = ordered_json{{"radii", p.surface_cfg.growth.eps_schedule},
                                      {"samples_per_radius",
                                       p.surface_cfg.growth.samples_per_radius}};
        const int dim = p.field.grid.dim;
        echo["surface"] =
            ordered_json{{"s_max", p.surface_cfg.s_max > 0 ? p.surface_cfg.s_max
                                                           : (dim == 1 ? 0.2 : 0.4)},
                         {"levels", p.surface_cfg.levels ? p.surface_cfg.levels
                                                         : (dim == 1 ? 7 : 6)}};
    }
    return echo;
}

// ===== report serialization ================================================

const char* kind_name(CurvatureValue::Kind k) {
    switch (k) {
    case CurvatureValue::Kind::finite:
        return "finite";
    case CurvatureValue::Kind::plus_infinity:
        return "plus_infinity";
    case CurvatureValue::Kind::minus_infinity:
        return "minus_infinity";
    }
    return "finite";
}

const char* kind_name(SncEntry::Kind k) {
    switch (k) {
    case SncEntry::Kind::finite:
        return "finite";
    case SncEntry::Kind::plus_infinity:
        return "plus_infinity";
    case SncEntry::Kind::violated:
        return "violated";
    case SncEntry::Kind::inconclusive:
        return "inconclusive";
    }
    return "finite";
}

const char* via_name(NdcResult::Criterion v) {
    switch (v) {
    case NdcResult::Criterion::ellipticity:
        return "ellipticity";
    case NdcResult::Criterion::first_order_growth:
        return "first_order_growth";
    case NdcResult::Criterion::finite_dimensional:
        return "finite_dimensional";
    }
    return "finite_dimensional";
}

ordered_json fonc_json(const FoncResult& f) {
    ordered_json o;
    o["holds"] = f.holds;
    o["pay"] = json_number(f.pay);
    o["witness"] = f.witness ? json_entries(f.witness->entries()) : ordered_json(nullptr);
    return o;
}

ordered_json ndc_json(const NdcResult& n) {
    ordered_json o;
    o["established"] = n.established;
    o["via"] = n.via ? ordered_json(via_name(*n.via)) : ordered_json(nullptr);
    o["constant"] = json_number(n.constant);
    o["detail"] = n.detail;
    return o;
}

ordered_json curvature_row(const Vector& h, const CurvatureValue& q) {
    ordered_json o;
    o["direction"] = json_entries(h.entries());
    o["kind"] = kind_name(q.kind);
    o["value"] = q.finite() ? json_number(q.value)
                            : json_number(q.kind == CurvatureValue::Kind::plus_infinity
                                              ? std::numeric_limits<double>::infinity()
                                              : -std::numeric_limits<double>::infinity());
    o["method"] = q.method;
    o["converged"] = q.converged;
    return o;
}

ordered_json snc_json(const SncEntry& e) {
    ordered_json o;
    o["direction"] = json_entries(e.h.entries());
    o["kind"] = kind_name(e.kind);
    o["residual"] = json_number(e.residual);
    return o;
}

ordered_json ssc_json(const SscResult& s) {
    ordered_json o;
    o["holds"] = s.holds;
    o["advisory"] = s.advisory;
    o["margin"] = json_number(s.margin);
    o["checked"] = s.checked;
    o["witness"] = s.witness ? json_entries(s.witness->entries()) : ordered_json(nullptr);
    o["notes"] = s.notes;
    return o;
}

ordered_json growth_json(const GrowthReport& g) {
    ordered_json o;
    o["fitted_c"] = json_number(g.fitted_c);
    o["raw_min"] = json_number(g.raw_min);
    o["epsilon_used"] = json_number(g.epsilon_used);
    o["sample_count"] = g.sample_count;
    o["seed"] = g.seed;
    o["sampler_tag"] = g.sampler_tag;
    o["notes"] = g.notes;
    return o;
}

const char* verdict_name(SOCReport::Verdict v) {
    switch (v) {
    case SOCReport::Verdict::no_gap_consistent:
        return "no_gap_consistent";
    case SOCReport::Verdict::inconsistent:
        return "inconsistent";
    case SOCReport::Verdict::inconclusive:
        return "inconclusive";
    }
    return "inconclusive";
}

std::string csv_of(const GrowthReport* g) {
    std::string csv = "radius,norm,ratio,sampler_tag\n";
    if (!g)
        return csv;
    char line[160];
    for (const GrowthSample& s : g->samples) {
        std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%s\n", s.radius, s.norm, s.ratio,
                      g->sampler_tag.c_str());
        csv += line;
    }
    return csv;
}

} // namespace

ordered_json soc_report_json(const SOCReport& rep) {
    ordered_json o;
    o["fonc"] = fonc_json(rep.fonc);
    o["ndc"] = ndc_json(rep.ndc);
    ordered_json curv = ordered_json::array();
    ordered_json snc = ordered_json::array();
    for (const SncEntry& e : rep.snc) {
        curv.push_back(curvature_row(e.h, e.curvature));
        snc.push_back(snc_json(e));
    }
    o["curvature"] = curv;
    o["snc"] = snc;
    o["ssc"] = ssc_json(rep.ssc);
    o["growth"] = growth_json(rep.growth);
    o["verdict"] = verdict_name(rep.verdict);
    o["diagnostics"] = rep.diagnostics;
    return o;
}

// ===== execution ===========================================================

namespace {

int verdict_exit(SOCReport::Verdict v) {
    switch (v) {
    case SOCReport::Verdict::no_gap_consistent:
        return 0;
    case SOCReport::Verdict::inconsistent:
        return 2;
    case SOCReport::Verdict::inconclusive:
        return 3;
    }
    return 3;
}

struct Blocks {
    ordered_json fonc = nullptr;
    ordered_json ndc = nullptr;
    ordered_json curvature = nullptr;
    ordered_json snc = nullptr;
    ordered_json ssc = nullptr;
    ordered_json growth = nullptr;
    std::string verdict = "inconclusive";
    std::vector<std::string> diagnostics;
    std::string csv = csv_of(nullptr);
    int exit_code = 3;
};

void fill_from_soc(Blocks& b, const SOCReport& rep) {
    const ordered_json o = soc_report_json(rep);
    b.fonc = o.at("fonc");
    b.ndc = o.at("ndc");
    b.curvature = o.at("curvature");
    b.snc = o.at("snc");
    b.ssc = o.at("ssc");
    b.growth = o.at("growth");
    b.verdict = o.at("verdict").get<std::string>();
    b.diagnostics = rep.diagnostics;
    b.exit_code = verdict_exit(rep.verdict);
}

std::vector<Eigen::VectorXd> surface_densities(const BuiltinProblem& p,
                                               const SurfaceMeasure& sm) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(p.density_levels.size());
    for (double level : p.density_levels)
        out.push_back(Eigen::VectorXd::Constant(sm.size(), level));
    return out;
}

Blocks run_surface(const BuiltinProblem& p, const std::string& analysis) {
    Blocks b;

    if (analysis == "fonc") {
        const FoncResult f = fonc_check(p.set, p.objective, p.point);
        b.fonc = fonc_json(f);
        b.verdict = f.holds ? "holds" : "fails";
        b.exit_code = f.holds ? 0 : 2;
        return b;
    }

    const SurfaceMeasure sm = extract_zero_set(p.field);
    if (analysis == "curvature") {
        ordered_json rows = ordered_json::array();
        for (double level : p.density_levels) {
            const Eigen::VectorXd g = Eigen::VectorXd::Constant(sm.size(), level);
            ordered_json row;
            row["density"] = level;
            row["kind"] = "finite";
            row["value"] = json_number(surface_curvature(sm.with_density(g)));
            row["method"] = "surface_quadrature";
            row["converged"] = true;
            rows.push_back(row);
        }
        b.curvature = rows;
        b.verdict = "computed";
        b.exit_code = 0;
        return b;
    }

    const SOCReport rep = bangbang_no_gap(p.field, p.objective, surface_densities(p, sm),
                                          p.surface_cfg);
    fill_from_soc(b, rep);
    // per-density surface curvature rows; direction scans have no meaning here
    ordered_json rows = ordered_json::array();
    for (double level : p.density_levels) {
        const Eigen::VectorXd g = Eigen::VectorXd::Constant(sm.size(), level);
        ordered_json row;
        row["density"] = level;
        row["kind"] = "finite";
        row["value"] = json_number(surface_curvature(sm.with_density(g)));
        row["method"] = "surface_quadrature";
        row["converged"] = true;
        rows.push_back(row);
    }
    b.curvature = rows;
    b.csv = csv_of(&rep.growth);

    if (analysis == "ssc") {
        b.verdict = rep.ssc.holds ? (rep.ssc.advisory ? "inconclusive" : "holds") : "fails";
        b.exit_code = rep.ssc.holds ? (rep.ssc.advisory ? 3 : 0) : 2;
    } else if (analysis == "growth") {
        if (rep.growth.sample_count == 0) {
            b.verdict = "inconclusive";
            b.exit_code = 3;
        } else {
            b.verdict = rep.growth.fitted_c > 0 ? "holds" : "fails";
            b.exit_code = rep.growth.fitted_c > 0 ? 0 : 2;
        }
    }
    return b;
}

Blocks run_directional(const BuiltinProblem& p, const std::string& analysis) {
    Blocks b;

    if (analysis == "full") {
        const SOCReport rep = no_gap_report(p.set, p.objective, p.point, p.soc);
        fill_from_soc(b, rep);
        b.csv = csv_of(&rep.growth);
        return b;
    }

    if (analysis == "growth") {
        GrowthConfig gcfg = p.soc.growth;
        const GrowthReport rep = growth_sample(p.set, p.objective, p.point, gcfg);
        b.growth = growth_json(rep);
        b.csv = csv_of(&rep);
        if (rep.sample_count == 0) {
            b.verdict = "inconclusive";
            b.exit_code = 3;
        } else {
            b.verdict = rep.fitted_c > 0 ? "holds" : "fails";
            b.exit_code = rep.fitted_c > 0 ? 0 : 2;
        }
        return b;
    }

    const FoncResult f = fonc_check(p.set, p.objective, p.point);
    b.fonc = fonc_json(f);
    if (analysis == "fonc" || !f.holds) {
        if (!f.holds && analysis != "fonc")
            b.diagnostics.push_back("first-order check fails; no critical cone to scan");
        b.verdict = f.holds ? "holds" : "fails";
        b.exit_code = f.holds ? 0 : 2;
        return b;
    }

    const Vector phi = p.objective.grad(p.point);
    const std::vector<Vector> dirs =
        critical_directions(p.set, p.point, phi, p.soc.direction_count, p.soc.extra_directions);

    if (analysis == "curvature") {
        ordered_json rows = ordered_json::array();
        for (const Vector& h : dirs)
            rows.push_back(curvature_row(h, directional_curvature(p.set, p.point, phi, h,
                                                                  p.soc.curvature)));
        b.curvature = rows;
        b.verdict = "computed";
        b.exit_code = 0;
        return b;
    }

    if (analysis == "snc") {
        const std::vector<SncEntry> entries =
            snc_scan(p.set, p.objective, p.point, 0.0, dirs, p.soc.curvature);
        ordered_json curv = ordered_json::array();
        ordered_json snc = ordered_json::array();
        bool violated = false, open = false;
        for (const SncEntry& e : entries) {
            curv.push_back(curvature_row(e.h, e.curvature));
            snc.push_back(snc_json(e));
            violated = violated || e.kind == SncEntry::Kind::violated;
            open = open || e.kind == SncEntry::Kind::inconclusive;
        }
        b.curvature = curv;
        b.snc = snc;
        b.verdict = violated ? "fails" : (open ? "inconclusive" : "holds");
        b.exit_code = violated ? 2 : (open ? 3 : 0);
        return b;
    }

    // ssc
    const NdcResult ndc = ndc_check(p.set, p.objective, p.point, p.soc.ndc);
    b.ndc = ndc_json(ndc);
    const SscResult ssc =
        ssc_check(p.set, p.objective, p.point, dirs, p.soc.curvature, ndc.established);
    b.ssc = ssc_json(ssc);
    b.verdict = ssc.holds ? (ssc.advisory ? "inconclusive" : "holds") : "fails";
    b.exit_code = ssc.holds ? (ssc.advisory ? 3 : 0) : 2;
    return b;
}

} // namespace

RunResult run_config(const RunConfig& cfg) {
    const BuiltinProblem p = assemble(cfg);
    const ordered_json echo = build_echo(cfg, p);

    const Blocks b = p.surface ? run_surface(p, cfg.analysis) : run_directional(p, cfg.analysis);

    RunResult res;
    res.report["config_echo"] = echo;
    res.report["fonc"] = b.fonc;
    res.report["ndc"] = b.ndc;
    res.report["curvature"] = b.curvature;
    res.report["snc"] = b.snc;
    res.report["ssc"] = b.ssc;
    res.report["growth"] = b.growth;
    res.report["verdict"] = b.verdict;
    res.report["diagnostics"] = b.diagnostics;
    res.samples_csv = b.csv;
    res.exit_code = b.exit_code;
    return res;
}

void write_outputs(const RunResult& res, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    std::ofstream rj(fs::path(dir) / "report.json");
    rj << res.report.dump(2) << "\n";
    std::ofstream sc(fs::path(dir) / "samples.csv");
    sc << res.samples_csv;

    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char stamp[64];
    std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    ordered_json meta;
    meta["version"] = version_string();
    meta["written_at"] = stamp;
    std::ofstream mj(fs::path(dir) / "meta.json");
    mj << meta.dump(2) << "\n";
}

} // namespace curvlab

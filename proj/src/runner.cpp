#include "deglap/runner.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <optional>
#include <string_view>
#include <vector>

#include "deglap/function_spaces.hpp"
#include "deglap/io.hpp"
#include "deglap/verification.hpp"

namespace deglap {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

const json& member(const json& obj, const std::string& where, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) fail(where, std::string("missing key '") + key + "'");
    return *it;
}

void expect_keys(const json& obj, const std::string& where,
                 std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) fail(where, "expected a JSON object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            fail(where, "unknown key '" + item.key() + "'");
    }
}

double num_at(const json& obj, const std::string& where, const char* key,
              std::optional<double> def = {}) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (def) return *def;
        fail(where, std::string("missing number '") + key + "'");
    }
    if (!it->is_number()) fail(where + "." + key, "expected a number");
    return it->get<double>();
}

int int_at(const json& obj, const std::string& where, const char* key,
           std::optional<int> def = {}) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (def) return *def;
        fail(where, std::string("missing integer '") + key + "'");
    }
    if (!it->is_number_integer()) fail(where + "." + key, "expected an integer");
    return it->get<int>();
}

bool bool_at(const json& obj, const std::string& where, const char* key, bool def) {
    const auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_boolean()) fail(where + "." + key, "expected a boolean");
    return it->get<bool>();
}

std::string str_at(const json& obj, const std::string& where, const char* key,
                   std::optional<std::string> def = {}) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (def) return *def;
        fail(where, std::string("missing string '") + key + "'");
    }
    if (!it->is_string()) fail(where + "." + key, "expected a string");
    return it->get<std::string>();
}

Vec2 vec2_at(const json& obj, const std::string& where, const char* key,
             std::optional<Vec2> def = {}) {
    const auto it = obj.find(key);
    if (it == obj.end()) {
        if (def) return *def;
        fail(where, std::string("missing [x, y] pair '") + key + "'");
    }
    if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number())
        fail(where + "." + key, "expected [x, y]");
    return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

std::vector<double> num_list_at(const json& obj, const std::string& where, const char* key,
                                std::vector<double> def) {
    const auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (!it->is_array() || it->empty()) fail(where + "." + key, "expected a non-empty array");
    std::vector<double> out;
    for (const auto& v : *it) {
        if (!v.is_number()) fail(where + "." + key, "expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

/// s index: a number or the string "inf".
double s_index_at(const json& obj, const std::string& where, const char* key, double def) {
    const auto it = obj.find(key);
    if (it == obj.end()) return def;
    if (it->is_string()) {
        if (it->get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
        fail(where + "." + key, "expected a number or \"inf\"");
    }
    if (!it->is_number()) fail(where + "." + key, "expected a number or \"inf\"");
    return it->get<double>();
}

bool same_grid(const Grid2D& a, const Grid2D& b) {
    return a.nx == b.nx && a.ny == b.ny && a.h == b.h && a.origin.x == b.origin.x &&
           a.origin.y == b.origin.y;
}

const json& inputs_of(const json& doc) {
    static const json empty = json::object();
    const auto it = doc.find("inputs");
    return it == doc.end() ? empty : *it;
}

const json& params_of(const json& doc) {
    static const json empty = json::object();
    const auto it = doc.find("params");
    return it == doc.end() ? empty : *it;
}

DomainMask build_domain(const json& inputs) {
    const auto it = inputs.find("domain");
    if (it == inputs.end()) {
        const double h = 1.0 / 64.0;
        return make_rect_domain(64, 64, h, {0.5 * h, 0.5 * h});
    }
    if (!it->is_object()) fail("inputs.domain", "expected a JSON object");
    return domain_from_json_text(it->dump());
}

/// {"kind": "..."} generator spec or a bare string shorthand.
json normalized_spec(const json& spec, const std::string& where) {
    if (spec.is_string()) return json{{"kind", spec.get<std::string>()}};
    if (spec.is_object()) return spec;
    fail(where, "expected a string or an object");
}

MatrixWeightField build_matrix(const json& raw, const DomainMask& mask, const std::string& where) {
    const json spec = normalized_spec(raw, where);
    const std::string kind = str_at(spec, where, "kind");
    const Grid2D& grid = mask.grid;
    if (kind == "identity") {
        expect_keys(spec, where, {"kind"});
        return constant_matrix_field(grid, SymMat2::identity());
    }
    if (kind == "diag") {
        expect_keys(spec, where, {"kind", "a", "b"});
        return constant_matrix_field(grid,
                                     SymMat2::diag(num_at(spec, where, "a"), num_at(spec, where, "b")));
    }
    if (kind == "checkerboard") {
        expect_keys(spec, where, {"kind", "lo", "hi", "block"});
        return checkerboard_matrix_field(grid, num_at(spec, where, "lo"), num_at(spec, where, "hi"),
                                         int_at(spec, where, "block"));
    }
    if (kind == "power") {
        expect_keys(spec, where, {"kind", "beta", "center"});
        return power_matrix_field(grid, num_at(spec, where, "beta"),
                                  vec2_at(spec, where, "center"));
    }
    if (kind == "rotated_anisotropy") {
        expect_keys(spec, where, {"kind", "a", "seed", "modes", "max_wavenumber"});
        Rng rng(static_cast<std::uint64_t>(int_at(spec, where, "seed", 1)));
        const FourierModes theta = FourierModes::random(rng, int_at(spec, where, "modes", 3),
                                                        int_at(spec, where, "max_wavenumber", 2), 1.0);
        return rotated_anisotropy_field(grid, num_at(spec, where, "a"), theta);
    }
    if (kind == "csv") {
        expect_keys(spec, where, {"kind", "path"});
        MatrixWeightField f = parse_matrix_field_csv(read_file(str_at(spec, where, "path")));
        if (!same_grid(f.grid, grid)) fail(where, "csv grid does not match the domain");
        return f;
    }
    fail(where, "unknown matrix field kind '" + kind + "'");
}

ScalarField build_scalar(const json& raw, const DomainMask& mask, const std::string& where) {
    const json spec = normalized_spec(raw, where);
    const std::string kind = str_at(spec, where, "kind");
    const Grid2D& grid = mask.grid;
    ScalarField f(grid);
    if (kind == "zero") {
        expect_keys(spec, where, {"kind"});
        return f;
    }
    if (kind == "ones" || kind == "constant") {
        expect_keys(spec, where, {"kind", "value"});
        const double c = kind == "ones" ? 1.0 : num_at(spec, where, "value");
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (mask.non_exterior(i, j)) f.at(i, j) = c;
        return f;
    }
    if (kind == "affine") {
        expect_keys(spec, where, {"kind", "c0", "cx", "cy"});
        const double c0 = num_at(spec, where, "c0", 0.1);
        const double cx = num_at(spec, where, "cx", 0.3);
        const double cy = num_at(spec, where, "cy", -0.2);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (mask.non_exterior(i, j)) {
                    const Vec2 z = grid.center(i, j);
                    f.at(i, j) = c0 + cx * z.x + cy * z.y;
                }
        return f;
    }
    if (kind == "fourier") {
        expect_keys(spec, where, {"kind", "seed", "modes", "max_wavenumber", "amp"});
        Rng rng(static_cast<std::uint64_t>(int_at(spec, where, "seed", 1)));
        const FourierModes m = FourierModes::random(rng, int_at(spec, where, "modes", 2),
                                                    int_at(spec, where, "max_wavenumber", 2),
                                                    num_at(spec, where, "amp", 1.0));
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (mask.non_exterior(i, j)) {
                    const Vec2 z = grid.center(i, j);
                    f.at(i, j) = m.eval(z.x, z.y);
                }
        return f;
    }
    if (kind == "indicator") {
        expect_keys(spec, where, {"kind", "center", "radius"});
        for (int c : ball_cells(mask, vec2_at(spec, where, "center"), num_at(spec, where, "radius")))
            f.v[static_cast<std::size_t>(c)] = 1.0;
        return f;
    }
    if (kind == "csv") {
        expect_keys(spec, where, {"kind", "path"});
        ScalarField g = parse_scalar_field_csv(read_file(str_at(spec, where, "path")));
        if (!same_grid(g.grid, grid)) fail(where, "csv grid does not match the domain");
        validate_field(g, mask, where);
        return g;
    }
    fail(where, "unknown scalar field kind '" + kind + "'");
}

VectorField build_vector(const json& raw, const DomainMask& mask, const ScalarField& g_field,
                         const std::string& where) {
    const json spec = normalized_spec(raw, where);
    const std::string kind = str_at(spec, where, "kind");
    const Grid2D& grid = mask.grid;
    VectorField f(grid);
    if (kind == "zero") {
        expect_keys(spec, where, {"kind"});
        return f;
    }
    if (kind == "constant") {
        expect_keys(spec, where, {"kind", "value"});
        const Vec2 v = vec2_at(spec, where, "value");
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (mask.non_exterior(i, j)) f.set(i, j, v);
        return f;
    }
    if (kind == "fourier") {
        expect_keys(spec, where, {"kind", "seed", "modes", "max_wavenumber", "amp"});
        Rng rng(static_cast<std::uint64_t>(int_at(spec, where, "seed", 1)));
        const int modes = int_at(spec, where, "modes", 2);
        const int maxw = int_at(spec, where, "max_wavenumber", 2);
        const double amp = num_at(spec, where, "amp", 1.0);
        const FourierModes mx = FourierModes::random(rng, modes, maxw, amp);
        const FourierModes my = FourierModes::random(rng, modes, maxw, amp);
        for (int j = 0; j < grid.ny; ++j)
            for (int i = 0; i < grid.nx; ++i)
                if (mask.non_exterior(i, j)) {
                    const Vec2 z = grid.center(i, j);
                    f.set(i, j, {mx.eval(z.x, z.y), my.eval(z.x, z.y)});
                }
        return f;
    }
    if (kind == "grad_g") {
        expect_keys(spec, where, {"kind"});
        return forward_gradient(g_field, mask);
    }
    if (kind == "csv") {
        expect_keys(spec, where, {"kind", "path"});
        VectorField v = parse_vector_field_csv(read_file(str_at(spec, where, "path")));
        if (!same_grid(v.grid, grid)) fail(where, "csv grid does not match the domain");
        return v;
    }
    fail(where, "unknown vector field kind '" + kind + "'");
}

ScalarWeight build_weight(const json& raw, const DomainMask& mask, WeightRole role,
                          const std::string& where) {
    const json spec = normalized_spec(raw, where);
    const std::string kind = str_at(spec, where, "kind");
    const Grid2D& grid = mask.grid;
    if (kind == "ones") {
        expect_keys(spec, where, {"kind"});
        ScalarWeight w = constant_weight(grid, 1.0, role);
        return w;
    }
    if (kind == "constant") {
        expect_keys(spec, where, {"kind", "value"});
        return constant_weight(grid, num_at(spec, where, "value"), role);
    }
    if (kind == "checkerboard") {
        expect_keys(spec, where, {"kind", "lo", "hi", "block"});
        ScalarWeight w = checkerboard_weight(grid, num_at(spec, where, "lo"),
                                             num_at(spec, where, "hi"), int_at(spec, where, "block"));
        w.role = role;
        return w;
    }
    if (kind == "power") {
        expect_keys(spec, where, {"kind", "beta", "center"});
        ScalarWeight w =
            power_weight(grid, num_at(spec, where, "beta"), vec2_at(spec, where, "center"));
        w.role = role;
        return w;
    }
    if (kind == "csv") {
        expect_keys(spec, where, {"kind", "path"});
        ScalarField f = parse_scalar_field_csv(read_file(str_at(spec, where, "path")));
        if (!same_grid(f.grid, grid)) fail(where, "csv grid does not match the domain");
        ScalarWeight w(grid, role);
        w.v = f.v;
        return w;
    }
    fail(where, "unknown weight kind '" + kind + "'");
}

SigmaFunction build_sigma(const json& raw, const std::string& where) {
    const json spec = normalized_spec(raw, where);
    const std::string kind = str_at(spec, where, "kind");
    if (kind == "identity") {
        expect_keys(spec, where, {"kind"});
        return SigmaFunction::identity();
    }
    if (kind == "power") {
        expect_keys(spec, where, {"kind", "a"});
        return SigmaFunction::power(num_at(spec, where, "a"));
    }
    if (kind == "table") {
        expect_keys(spec, where, {"kind", "tau", "sigma"});
        return SigmaFunction::from_table(num_list_at(spec, where, "tau", {}),
                                         num_list_at(spec, where, "sigma", {}));
    }
    if (kind == "density") {
        expect_keys(spec, where, {"kind", "tau", "nu"});
        return SigmaFunction::from_density(num_list_at(spec, where, "tau", {}),
                                           num_list_at(spec, where, "nu", {}));
    }
    fail(where, "unknown sigma kind '" + kind + "'");
}

Instance build_instance(const json& obj, const std::string& where, std::uint64_t default_seed) {
    expect_keys(obj, where,
                {"seed", "p", "kappa", "nx", "ny", "amp", "f_is_grad_g", "solve_tol"});
    InstanceSpec is;
    is.seed = obj.contains("seed") ? static_cast<std::uint64_t>(int_at(obj, where, "seed"))
                                   : default_seed;
    is.p = num_at(obj, where, "p", 2.0);
    is.kappa_target = num_at(obj, where, "kappa", 0.1);
    is.nx = int_at(obj, where, "nx", 64);
    is.ny = int_at(obj, where, "ny", is.nx);
    is.amp = num_at(obj, where, "amp", 1.0);
    is.f_is_grad_g = bool_at(obj, where, "f_is_grad_g", false);
    Instance inst = make_instance(is);
    inst.solve_tol = num_at(obj, where, "solve_tol", -1.0);
    return inst;
}

void write_json(const ExperimentConfig& cfg, const std::string& name, json j) {
    j["config_hash"] = cfg.config_hash;
    atomic_write((fs::path(cfg.out_dir) / name).string(), j.dump(2) + "\n");
}

void write_text(const ExperimentConfig& cfg, const std::string& name, const std::string& text) {
    atomic_write((fs::path(cfg.out_dir) / name).string(), text);
}

json grid_json(const Grid2D& g) {
    return {{"nx", g.nx}, {"ny", g.ny}, {"h", g.h}, {"origin", {g.origin.x, g.origin.y}}};
}

// --- commands ---------------------------------------------------------------

int run_solve(const ExperimentConfig& cfg) {
    const json& in = inputs_of(cfg.doc);
    const json& pr = params_of(cfg.doc);
    expect_keys(in, "inputs", {"domain", "P", "F", "g"});
    expect_keys(pr, "params", {"p", "delta", "tol", "max_iter"});

    ProblemSpec spec;
    spec.mask = build_domain(in);
    spec.P = build_matrix(in.value("P", json("identity")), spec.mask, "inputs.P");
    spec.g = build_scalar(in.value("g", json("zero")), spec.mask, "inputs.g");
    spec.F = build_vector(in.value("F", json("zero")), spec.mask, spec.g, "inputs.F");
    spec.p = num_at(pr, "params", "p", 2.0);
    spec.delta = num_at(pr, "params", "delta", 0.0);
    validate_problem(spec);

    const SolveReport sr =
        solve(spec, num_at(pr, "params", "tol", -1.0), int_at(pr, "params", "max_iter", 500));

    write_text(cfg, "u.csv", scalar_field_csv(sr.u, cfg.config_hash));
    json rep = {{"command", "solve"},
                {"seed", cfg.seed},
                {"grid", grid_json(spec.mask.grid)},
                {"p", spec.p},
                {"energy", sr.energy},
                {"weak_residual", sr.weak_residual},
                {"iterations", sr.iterations},
                {"converged", sr.converged},
                {"delta_path", sr.delta_path},
                {"gradient_fallbacks", sr.gradient_fallbacks},
                {"energy_trace_length", sr.energy_trace.size()},
                {"notes", sr.notes}};
    write_json(cfg, "report.json", rep);
    if (!sr.converged) {
        std::fprintf(stderr, "deglap: solve did not converge (residual %.3e)\n", sr.weak_residual);
        return 3;
    }
    return 0;
}

int run_maxop(const ExperimentConfig& cfg) {
    const json& in = inputs_of(cfg.doc);
    const json& pr = params_of(cfg.doc);
    expect_keys(in, "inputs", {"domain", "f", "mu"});
    expect_keys(pr, "params", {"alpha", "rho_cut", "lambda_points"});

    const DomainMask mask = build_domain(in);
    const ScalarField f = build_scalar(member(in, "inputs", "f"), mask, "inputs.f");
    const ScalarWeight mu =
        build_weight(in.value("mu", json("ones")), mask, WeightRole::Mu, "inputs.mu");

    MaximalConfig mc = default_maximal_config(mask, num_at(pr, "params", "alpha", 0.0));
    if (pr.contains("rho_cut")) mc.rho_cut = num_at(pr, "params", "rho_cut");
    const ScalarField mf = fractional_maximal(f, mask, mc, cfg.threads);
    const std::vector<double> lambdas =
        default_lambda_grid(mf, mask, int_at(pr, "params", "lambda_points", 400));
    const DistributionCurve curve = distribution(mf, mu, mask, lambdas);

    write_text(cfg, "maximal.csv", scalar_field_csv(mf, cfg.config_hash));
    std::vector<CurveRow> rows(curve.lambdas.size());
    for (std::size_t k = 0; k < rows.size(); ++k)
        rows[k] = {curve.lambdas[k], curve.masses[k]};
    write_text(cfg, "distribution.csv", curve_csv(rows, cfg.config_hash));

    double fmax = 0.0, mmax = 0.0;
    for (double v : f.v) fmax = std::max(fmax, std::fabs(v));
    for (double v : mf.v) mmax = std::max(mmax, v);
    write_json(cfg, "report.json",
               {{"command", "maxop"},
                {"seed", cfg.seed},
                {"grid", grid_json(mask.grid)},
                {"alpha", mc.alpha},
                {"ladder_rungs", mc.radius_ladder.size()},
                {"field_max", fmax},
                {"maximal_max", mmax},
                {"weight_id", curve.weight_id},
                {"lambda_min", lambdas.front()},
                {"lambda_max", lambdas.back()}});
    return 0;
}

int run_norms(const ExperimentConfig& cfg) {
    const json& in = inputs_of(cfg.doc);
    const json& pr = params_of(cfg.doc);
    expect_keys(in, "inputs", {"domain", "f", "mu", "sigma"});
    expect_keys(pr, "params", {"family", "q", "s", "upsilon"});

    const DomainMask mask = build_domain(in);
    const ScalarField f = build_scalar(member(in, "inputs", "f"), mask, "inputs.f");
    const ScalarWeight mu =
        build_weight(in.value("mu", json("ones")), mask, WeightRole::Mu, "inputs.mu");
    const std::string family = str_at(pr, "params", "family", std::string("lorentz"));
    const LorentzIndices idx{num_at(pr, "params", "q", 1.0),
                             s_index_at(pr, "params", "s", std::numeric_limits<double>::infinity())};

    json rep = {{"command", "norms"}, {"seed", cfg.seed},       {"grid", grid_json(mask.grid)},
                {"family", family},   {"q", idx.q},
                {"s", idx.s_finite() ? json(idx.s) : json("inf")},
                {"weighted_Lq", weighted_Lq_norm(f, mu, idx.q, mask)}};
    if (family == "lorentz") {
        rep["value"] = lorentz_norm(f, mu, idx, mask);
    } else if (family == "generalized_lorentz") {
        const SigmaFunction sigma = build_sigma(in.value("sigma", json("identity")), "inputs.sigma");
        rep["value"] = generalized_lorentz_norm(f, mu, sigma, idx, mask);
        rep["sigma_c1"] = sigma.c1;
        rep["sigma_c2"] = sigma.c2;
    } else if (family == "morrey") {
        const double upsilon = num_at(pr, "params", "upsilon", 1.0);
        rep["value"] = morrey_norm(f, mask, MorreyShape::power(mask, upsilon), idx.q);
        rep["upsilon"] = upsilon;
    } else {
        fail("params.family", "unknown norm family '" + family + "'");
    }
    write_json(cfg, "report.json", rep);
    return 0;
}

int run_weights(const ExperimentConfig& cfg) {
    const json& in = inputs_of(cfg.doc);
    const json& pr = params_of(cfg.doc);
    expect_keys(in, "inputs", {"domain", "P", "mu"});
    expect_keys(pr, "params", {"q", "R", "n_balls"});

    const DomainMask mask = build_domain(in);
    if (!in.contains("P") && !in.contains("mu"))
        fail("inputs", "weights needs a matrix field P or a scalar weight mu");
    const double q = num_at(pr, "params", "q", 2.0);
    const double R = num_at(pr, "params", "R", 0.25 * mask.diameter);
    const std::vector<double> ladder =
        geometric_ladder(mask.grid.h, 0.5 * mask.diameter, std::pow(2.0, 0.25));

    json rep = {{"command", "weights"}, {"seed", cfg.seed}, {"grid", grid_json(mask.grid)},
                {"q", q},               {"R", R}};
    ScalarWeight mu;
    if (in.contains("P")) {
        const MatrixWeightField P = build_matrix(in["P"], mask, "inputs.P");
        rep["log_bmo"] = log_bmo_seminorm(P, mask, R, cfg.threads);
        rep["lambda"] = ellipticity_lambda(P, mask);
        mu = scalar_weight_of(P);
        rep["weight_source"] = "spectral norm of P";
    } else {
        mu = build_weight(in["mu"], mask, WeightRole::Mu, "inputs.mu");
        rep["weight_source"] = "mu input";
    }
    BallWitness wit;
    rep["A_q"] = muckenhoupt_Aq(mu, mask, q, ladder, &wit);
    rep["A_q_witness"] = {{"center", {wit.center.x, wit.center.y}},
                          {"radius", wit.radius},
                          {"value", wit.value}};
    const auto family = make_subset_family(mask, mu, cfg.seed, int_at(pr, "params", "n_balls", 8));
    const AInftyParams ap = a_infty_params(mu, mask, family);
    rep["a_infty"] = {{"c1", ap.c1}, {"c2", ap.c2}, {"nu1", ap.nu1}, {"nu2", ap.nu2}};
    write_json(cfg, "report.json", rep);
    return 0;
}

CheckReport dispatch_check(const ExperimentConfig& cfg, const json& pr, const json& in);

int run_verify(const ExperimentConfig& cfg) {
    const json& pr = params_of(cfg.doc);
    const json& in = inputs_of(cfg.doc);
    CheckReport rep = dispatch_check(cfg, pr, in);
    rep.seed = cfg.seed;
    write_json(cfg, "report_" + rep.name + ".json", rep.to_json(cfg.config_hash));
    const CheckReport reports[] = {rep};
    write_text(cfg, "summary.csv", check_summary_csv(reports, cfg.config_hash));
    write_text(cfg, "summary.md", report_summary(cfg.out_dir));
    std::printf("%s: %s (empirical_C = %.6g)\n", rep.name.c_str(),
                rep.passed ? "pass" : "FAIL", rep.empirical_C);
    return 0;
}

CheckReport dispatch_check(const ExperimentConfig& cfg, const json& pr, const json& in) {
    const std::string check = str_at(pr, "params", "check");
    if (check == "vphi") {
        expect_keys(pr, "params", {"check", "p", "trials"});
        expect_keys(in, "inputs", {});
        return check_vphi(num_at(pr, "params", "p", 2.0), int_at(pr, "params", "trials", 100000),
                          cfg.seed);
    }
    if (check == "energy_estimate") {
        expect_keys(pr, "params", {"check", "instances"});
        expect_keys(in, "inputs", {});
        const json& gen = member(pr, "params", "instances");
        expect_keys(gen, "params.instances",
                    {"count", "p_values", "kappa", "nx", "ny", "amp", "f_is_grad_g", "solve_tol"});
        const int count = int_at(gen, "params.instances", "count", 20);
        const std::vector<double> ps =
            num_list_at(gen, "params.instances", "p_values", {1.5, 2.0, 3.0});
        std::vector<Instance> instances;
        for (int k = 0; k < count; ++k) {
            json one = gen;
            one.erase("count");
            one.erase("p_values");
            one["seed"] = static_cast<int>(cfg.seed) + k;
            one["p"] = ps[static_cast<std::size_t>(k) % ps.size()];
            instances.push_back(build_instance(one, "params.instances", cfg.seed));
        }
        return check_energy_estimate(instances);
    }
    if (check == "comparison") {
        expect_keys(pr, "params", {"check", "instance", "ball"});
        expect_keys(in, "inputs", {});
        const Instance inst = build_instance(member(pr, "params", "instance"), "params.instance",
                                             cfg.seed);
        const json& ball = member(pr, "params", "ball");
        expect_keys(ball, "params.ball", {"center", "radius"});
        return check_comparison(inst, vec2_at(ball, "params.ball", "center"),
                                num_at(ball, "params.ball", "radius"));
    }
    if (check == "levelset") {
        expect_keys(pr, "params", {"check", "instance", "alpha", "theta", "eps"});
        expect_keys(in, "inputs", {"mu"});
        const Instance inst = build_instance(member(pr, "params", "instance"), "params.instance",
                                             cfg.seed);
        const ScalarWeight mu =
            build_weight(in.value("mu", json("ones")), inst.prob.mask, WeightRole::Mu, "inputs.mu");
        const std::vector<double> eps = num_list_at(pr, "params", "eps", {0.5, 0.1});
        return check_levelset(inst, num_at(pr, "params", "alpha", 0.0), mu,
                              num_at(pr, "params", "theta", 0.5), eps, {});
    }
    if (check == "norm_transfer") {
        expect_keys(pr, "params", {"check", "instance", "family", "alpha", "upsilon"});
        expect_keys(in, "inputs", {"mu", "sigma"});
        const Instance inst = build_instance(member(pr, "params", "instance"), "params.instance",
                                             cfg.seed);
        SpaceSpec space;
        space.alpha = num_at(pr, "params", "alpha", 0.0);
        const std::string family = str_at(pr, "params", "family", std::string("lorentz"));
        if (family == "lorentz")
            space.kind = SpaceSpec::Kind::Lorentz;
        else if (family == "generalized_lorentz")
            space.kind = SpaceSpec::Kind::GeneralizedLorentz;
        else if (family == "morrey")
            space.kind = SpaceSpec::Kind::Morrey;
        else
            fail("params.family", "unknown norm family '" + family + "'");
        if (space.kind != SpaceSpec::Kind::Morrey)
            space.mu = build_weight(in.value("mu", json("ones")), inst.prob.mask, WeightRole::Mu,
                                    "inputs.mu");
        if (space.kind == SpaceSpec::Kind::GeneralizedLorentz)
            space.sigma = build_sigma(in.value("sigma", json("identity")), "inputs.sigma");
        if (space.kind == SpaceSpec::Kind::Morrey)
            space.shape =
                MorreyShape::power(inst.prob.mask, num_at(pr, "params", "upsilon", 1.0));
        return check_norm_transfer(inst, space);
    }
    if (check == "maximal_indicator") {
        expect_keys(pr, "params", {"check", "y", "rho", "j_max"});
        expect_keys(in, "inputs", {"domain"});
        const DomainMask mask = build_domain(in);
        return check_maximal_indicator(mask, vec2_at(pr, "params", "y"),
                                       num_at(pr, "params", "rho"),
                                       int_at(pr, "params", "j_max", 3));
    }
    if (check == "weak_type") {
        expect_keys(pr, "params", {"check", "q", "alpha"});
        expect_keys(in, "inputs", {"domain", "f"});
        const DomainMask mask = build_domain(in);
        const ScalarField f = build_scalar(member(in, "inputs", "f"), mask, "inputs.f");
        return check_weak_type(f, mask, num_at(pr, "params", "q", 1.0),
                               num_at(pr, "params", "alpha", 0.0));
    }
    if (check == "sigma_doubling") {
        expect_keys(pr, "params", {"check", "samples", "tmax"});
        expect_keys(in, "inputs", {"sigma"});
        const SigmaFunction sigma = build_sigma(in.value("sigma", json("identity")), "inputs.sigma");
        return sigma_doubling_checks(sigma, int_at(pr, "params", "samples", 10000), cfg.seed,
                                  num_at(pr, "params", "tmax", 1.0));
    }
    fail("params.check", "unknown check '" + check + "'");
}

int run_sweep(const ExperimentConfig& cfg) {
    const json& pr = params_of(cfg.doc);
    const json& in = inputs_of(cfg.doc);
    const std::string check = str_at(pr, "params", "check");

    std::vector<CheckReport> reports;
    std::string csv = "# config_hash=" + cfg.config_hash + "\n";
    csv += "check,param,value,empirical_C,passed\n";
    const auto add_row = [&](const std::string& param, double value, const CheckReport& rep) {
        csv += rep.name + ',' + param + ',' + format_double(value) + ',' +
               format_double(rep.empirical_C) + ',' + (rep.passed ? '1' : '0') + '\n';
    };

    if (check == "levelset") {
        // One run; the eps grid is the sweep.
        const CheckReport rep = dispatch_check(cfg, pr, in);
        reports.push_back(rep);
        for (const auto& row : rep.sweep.at("eps_rows")) {
            const double c =
                row.at("best_C").is_number() ? row.at("best_C").get<double>() : -1.0;
            csv += rep.name + ",eps," + format_double(row.at("eps").get<double>()) + ',' +
                   format_double(c) + ',' + (c >= 0.0 && c <= 1e6 ? '1' : '0') + '\n';
        }
    } else {
        const char* key = nullptr;
        if (check == "vphi")
            key = "p_values";
        else if (check == "weak_type")
            key = "q_values";
        else if (check == "maximal_indicator")
            key = "rho_values";
        else if (check == "norm_transfer")
            key = "alpha_values";
        else
            fail("params.check", "sweep does not support check '" + check + "'");
        json base = pr;
        const std::vector<double> values = num_list_at(pr, "params", key, {});
        if (values.empty()) fail("params", std::string("sweep needs a non-empty '") + key + "'");
        base.erase(key);
        const char* scalar_key = check == "vphi"              ? "p"
                                 : check == "weak_type"       ? "q"
                                 : check == "maximal_indicator" ? "rho"
                                                                 : "alpha";
        for (double v : values) {
            json one = base;
            one[scalar_key] = v;
            reports.push_back(dispatch_check(cfg, one, in));
            add_row(scalar_key, v, reports.back());
        }
    }

    for (std::size_t k = 0; k < reports.size(); ++k) {
        reports[k].seed = cfg.seed;
        write_json(cfg, "report_" + reports[k].name + "_" + std::to_string(k) + ".json",
                   reports[k].to_json(cfg.config_hash));
    }
    write_text(cfg, "sweep.csv", csv);
    write_text(cfg, "summary.md", report_summary(cfg.out_dir));
    return 0;
}

} // namespace

ExperimentConfig load_config(const std::string& command, const std::string& config_path,
                             int threads, const std::string& out_override) {
    static const std::vector<std::string> known = {"solve",   "maxop",  "norms",
                                                   "weights", "verify", "sweep"};
    if (std::find(known.begin(), known.end(), command) == known.end())
        fail("command", "unknown command '" + command + "'");

    json doc;
    try {
        doc = json::parse(read_file(config_path));
    } catch (const json::parse_error& e) {
        fail("config", e.what());
    }
    expect_keys(doc, "config", {"command", "seed", "out_dir", "inputs", "params"});
    if (doc.contains("command") && doc["command"] != command)
        fail("config.command", "config names command '" +
                                   doc["command"].get<std::string>() + "', CLI asked for '" +
                                   command + "'");
    if (doc.contains("inputs") && !doc["inputs"].is_object())
        fail("config.inputs", "expected a JSON object");
    if (doc.contains("params") && !doc["params"].is_object())
        fail("config.params", "expected a JSON object");

    ExperimentConfig cfg;
    cfg.command = command;
    cfg.threads = std::max(1, threads);
    cfg.seed = doc.contains("seed")
                   ? static_cast<std::uint64_t>(int_at(doc, "config", "seed"))
                   : 1;
    if (const char* env = std::getenv("DEGLAP_SEED"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end == nullptr || *end != '\0') fail("DEGLAP_SEED", "expected an unsigned integer");
        cfg.seed = v;
    }
    cfg.out_dir = !out_override.empty() ? out_override
                                        : str_at(doc, "config", "out_dir", std::string("out"));
    doc["seed"] = cfg.seed;
    doc.erase("out_dir");
    cfg.doc = doc;

    const json canonical = {{"command", command}, {"config", doc}};
    cfg.config_hash = fnv1a_hex(canonical.dump());
    return cfg;
}

int run_experiment(const ExperimentConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) fail("out_dir", "cannot create '" + cfg.out_dir + "': " + ec.message());

    if (cfg.command == "solve") return run_solve(cfg);
    if (cfg.command == "maxop") return run_maxop(cfg);
    if (cfg.command == "norms") return run_norms(cfg);
    if (cfg.command == "weights") return run_weights(cfg);
    if (cfg.command == "verify") return run_verify(cfg);
    if (cfg.command == "sweep") return run_sweep(cfg);
    fail("command", "unknown command '" + cfg.command + "'");
}

std::string report_summary(const std::string& out_dir, bool allow_mixed) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(out_dir, ec)) {
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    }
    if (ec) fail("report_summary", "cannot read '" + out_dir + "': " + ec.message());
    std::sort(files.begin(), files.end());

    struct Row {
        std::string name, statement, c, passed, grid;
    };
    std::vector<Row> rows;
    std::string hash;
    for (const auto& path : files) {
        json j;
        try {
            j = json::parse(read_file(path.string()));
        } catch (const json::parse_error&) {
            continue;
        }
        if (!j.is_object() || !j.contains("name") || !j.contains("empirical_C") ||
            !j.contains("passed"))
            continue;
        const std::string file_hash = j.value("config_hash", std::string("none"));
        if (hash.empty())
            hash = file_hash;
        else if (hash != file_hash && !allow_mixed)
            fail("report_summary", "mixed config hashes in '" + out_dir +
                                       "' (pass allow_mixed to combine)");
        Row r;
        r.name = j["name"].get<std::string>();
        r.statement = j.value("statement", std::string());
        r.c = j["empirical_C"].is_number() ? format_double(j["empirical_C"].get<double>())
                                           : j["empirical_C"].dump();
        r.passed = j["passed"].get<bool>() ? "pass" : "**FAIL**";
        if (j.contains("grid") && j["grid"].is_object()) {
            const json& g = j["grid"];
            r.grid = std::to_string(g.value("nx", 0)) + "x" + std::to_string(g.value("ny", 0)) +
                     " h=" + format_double(g.value("h", 0.0));
        }
        rows.push_back(std::move(r));
    }
    if (rows.empty()) fail("report_summary", "no check reports in '" + out_dir + "'");

    std::string out = "# check summary\n\nconfig_hash: " + hash + "\n\n";
    out += "| check | statement | empirical_C | result | grid |\n";
    out += "|---|---|---|---|---|\n";
    for (const Row& r : rows)
        out += "| " + r.name + " | " + r.statement + " | " + r.c + " | " + r.passed + " | " +
               r.grid + " |\n";
    return out;
}

} // namespace deglap
